#include "trust_motion/common.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace trust_motion {
namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

int take_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > s.size()) throw Error(fmt::format("unparseable timestamp '{}'", whole));
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      throw Error(fmt::format("unparseable timestamp '{}'", whole));
    }
    value = value * 10 + (s[i] - '0');
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  if (all_digits(s)) return parse_int(s);

  using namespace std::chrono;
  const int year = take_int(s, 0, 4, text);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
    throw Error(fmt::format("unparseable timestamp '{}'", text));
  }
  const int month = take_int(s, 5, 2, text);
  const int day = take_int(s, 8, 2, text);
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw Error(fmt::format("invalid calendar date in timestamp '{}'", text));
  Timestamp seconds = sys_days{ymd}.time_since_epoch().count() * kDay;
  if (s.size() == 10) return seconds;

  if (s[10] != 'T' && s[10] != ' ' && s[10] != 't') {
    throw Error(fmt::format("unparseable timestamp '{}'", text));
  }
  if (s.size() < 19 || s[13] != ':' || s[16] != ':') {
    throw Error(fmt::format("unparseable timestamp '{}'", text));
  }
  const int hh = take_int(s, 11, 2, text);
  const int mm = take_int(s, 14, 2, text);
  const int ss = take_int(s, 17, 2, text);
  if (hh > 23 || mm > 59 || ss > 60) throw Error(fmt::format("invalid time of day in '{}'", text));
  seconds += hh * kHour + mm * kMinute + ss;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  if (pos == s.size()) return seconds;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    if (pos + 1 != s.size()) throw Error(fmt::format("trailing characters in timestamp '{}'", text));
    return seconds;
  }
  if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    const std::string_view offset = s.substr(pos + 1);
    int oh = 0;
    int om = 0;
    if (offset.size() == 5 && offset[2] == ':') {
      oh = take_int(offset, 0, 2, text);
      om = take_int(offset, 3, 2, text);
    } else if (offset.size() == 4) {
      oh = take_int(offset, 0, 2, text);
      om = take_int(offset, 2, 2, text);
    } else if (offset.size() == 2) {
      oh = take_int(offset, 0, 2, text);
    } else {
      throw Error(fmt::format("unparseable UTC offset in timestamp '{}'", text));
    }
    return seconds - sign * (oh * kHour + om * kMinute);
  }
  throw Error(fmt::format("unparseable timestamp '{}'", text));
}

namespace {

struct CivilTime {
  int year;
  unsigned month, day;
  long hh, mm, ss;
};

CivilTime to_civil(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t / kDay;
  Timestamp rem = t % kDay;
  if (rem < 0) {
    rem += kDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day()), static_cast<long>(rem / kHour),
          static_cast<long>((rem % kHour) / kMinute), static_cast<long>(rem % kMinute)};
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const CivilTime c = to_civil(t);
  return fmt::format("{:04d}-{:02d}-{:02d} {:02d}:{:02d}:{:02d}", c.year, c.month, c.day, c.hh,
                     c.mm, c.ss);
}

std::string format_iso8601(Timestamp t) {
  const CivilTime c = to_civil(t);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", c.year, c.month, c.day, c.hh,
                     c.mm, c.ss);
}

Seconds parse_duration(std::string_view text) {
  std::string_view s = trim(text);
  if (s.empty()) throw Error("empty duration");
  Seconds unit = 1;
  switch (s.back()) {
    case 's': unit = 1; s.remove_suffix(1); break;
    case 'm': unit = kMinute; s.remove_suffix(1); break;
    case 'h': unit = kHour; s.remove_suffix(1); break;
    case 'd': unit = kDay; s.remove_suffix(1); break;
    case 'w': unit = kWeek; s.remove_suffix(1); break;
    default: break;
  }
  if (!all_digits(s)) throw Error(fmt::format("unparseable duration '{}'", text));
  const Seconds count = parse_int(s);
  if (count < 0) throw Error(fmt::format("negative duration '{}'", text));
  return count * unit;
}

std::string format_duration(Seconds s) {
  if (s != 0 && s % kWeek == 0) return fmt::format("{}w", s / kWeek);
  if (s != 0 && s % kDay == 0) return fmt::format("{}d", s / kDay);
  if (s != 0 && s % kHour == 0) return fmt::format("{}h", s / kHour);
  if (s != 0 && s % kMinute == 0) return fmt::format("{}m", s / kMinute);
  return fmt::format("{}s", s);
}

std::string format_real(double value) {
  if (std::isnan(value)) return "NA";
  return fmt::format("{:.17g}", value);
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  return fmt::format("{:.{}f}", value, decimals);
}

double parse_real(std::string_view text) {
  const std::string_view s = trim(text);
  if (s == "NA" || s == "nan" || s == "NaN") return std::nan("");
  double value = 0.0;
  const char* first = s.data();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(fmt::format("not a number: '{}'", text));
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  const std::string_view s = trim(text);
  std::int64_t value = 0;
  const char* first = s.data();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(fmt::format("not an integer: '{}'", text));
  }
  return value;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}' for reading", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open '{}' for writing", path));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(fmt::format("failed writing '{}'", path));
}

}  // namespace trust_motion
