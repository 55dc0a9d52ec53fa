#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace trust_motion {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;
/// Length of a time interval in seconds.
using Seconds = std::int64_t;

inline constexpr Seconds kMinute = 60;
inline constexpr Seconds kHour = 60 * kMinute;
inline constexpr Seconds kDay = 24 * kHour;
inline constexpr Seconds kWeek = 7 * kDay;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented invariant of an input value does not hold.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Accepts `YYYY-MM-DDTHH:MM:SS[.frac][Z|+HH:MM|-HH:MM]`, the same with a space
/// separator, a bare date, or an integer count of epoch seconds.
Timestamp parse_timestamp(std::string_view text);

/// `YYYY-MM-DD HH:MM:SS` in UTC.
std::string format_timestamp(Timestamp t);

/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(Timestamp t);

/// Durations such as `90s`, `30m`, `4h`, `2d`, `1w`, or a bare number of seconds.
Seconds parse_duration(std::string_view text);
std::string format_duration(Seconds s);

/// 17 significant digits, enough to round-trip any finite double.
std::string format_real(double value);

/// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

double parse_real(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// 64-bit FNV-1a, used for content hashes in run manifests.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace trust_motion
