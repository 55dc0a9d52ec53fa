#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trust_motion/common.hpp"
#include "trust_motion/embeddings.hpp"

namespace trust_motion {

/// Matches tokens on any subset of (label, sender, subsystem); an unset field
/// matches everything.
struct TokenPattern {
  std::optional<std::size_t> label;
  std::optional<std::string> sender_id;
  std::optional<std::string> subsystem;

  bool matches(const ActivityToken& token) const;
};

struct ReferenceSet {
  std::string name;
  std::vector<TokenPattern> tokens;

  bool contains(const ActivityToken& token) const;
};

/// Accepts a JSON list of token triples ([label, sender_id, subsystem] arrays
/// or objects with those keys, null meaning "any"), or an object
/// {"name": ..., "tokens": [...]}.
ReferenceSet parse_reference_set(std::string_view json_text);

struct TrajectoryPoint {
  std::size_t slice_index = 0;
  Vector vector;  ///< empty when absent
  bool present = false;
};

/// A value attached to a pair of consecutive present slices.
struct SeriesEntry {
  std::size_t from_slice = 0;
  std::size_t to_slice = 0;
  double value = 0.0;

  std::size_t gap() const noexcept { return to_slice - from_slice; }
};

struct Trajectory {
  ActivityToken token;
  std::vector<TrajectoryPoint> points;
  std::vector<SeriesEntry> drift_series;
  std::vector<SeriesEntry> context_shift_series;
  std::vector<SeriesEntry> neighbor_overlap_series;

  std::size_t present_count() const;
};

struct TrajectoryOptions {
  std::size_t neighbors = 5;  ///< k for the k-NN overlap series
};

/// Points for every slice in `aligned` (absent ones flagged) with drift and
/// neighbor-overlap series over consecutive present slices. Throws when the
/// token is present in fewer than two slices.
Trajectory extract_trajectory(const ActivityToken& token, std::span<const SliceEmbeddings> aligned,
                              const TrajectoryOptions& options = {});

enum class ContextShiftMode {
  distance_profile,  ///< || d_t - d_{t-1} || over shared reference distances
  centroid_cosine,   ///< | cos(token, ref centroid)_t - cos(...)_{t-1} |
};

/// Change in the token's relation to the reference tokens shared by each pair
/// of consecutive present slices. The token itself is never a reference.
/// Throws naming both slices when a pair shares no reference token.
std::vector<SeriesEntry> context_shift(const ActivityToken& token, const ReferenceSet& reference,
                                       std::span<const SliceEmbeddings> aligned,
                                       ContextShiftMode mode = ContextShiftMode::distance_profile);

enum class ProximityMode { mean, min };

struct ProximityTrend {
  /// (slice index, distance to the reference tokens present in that slice).
  std::vector<std::pair<std::size_t, double>> series;
  /// Spearman rank correlation of the series against slice index; unset when
  /// fewer than three slices contribute.
  std::optional<double> rho;
};

ProximityTrend proximity_trend(const ActivityToken& token, const ReferenceSet& reference,
                               std::span<const SliceEmbeddings> aligned,
                               ProximityMode mode = ProximityMode::mean);

/// Spearman correlation with average ranks for ties; zero when either side
/// is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Event count of the token in each slice of `aligned` (zero when absent).
std::vector<double> token_activity_counts(const ActivityToken& token,
                                          std::span<const SliceEmbeddings> aligned);

/// Variance over mean of per-slice counts (population variance); zero for an
/// all-zero series.
double burstiness_index(std::span<const double> counts);

enum class OperationKind { opportunistic, awry, hit_or_miss, unclassified };

std::string_view operation_name(OperationKind kind);
OperationKind operation_from_name(std::string_view name);

struct OperationThresholds {
  double burstiness = 1.5;
  double approach_rho = -0.5;  ///< opportunistic needs rho <= this
  double recede_rho = 0.5;     ///< awry needs rho >= this
};

struct OperationEvidence {
  std::optional<double> rho;
  double burstiness = 0.0;
};

struct OperationClass {
  OperationKind kind = OperationKind::unclassified;
  OperationEvidence evidence;
};

/// opportunistic: burstiness > threshold and rho <= approach_rho;
/// awry: rho >= recede_rho; hit_or_miss otherwise; unclassified without rho.
OperationClass classify_evidence(const OperationEvidence& evidence,
                                 const OperationThresholds& thresholds = {});

OperationClass classify_operation(const ProximityTrend& trend, std::span<const double> slice_counts,
                                  const OperationThresholds& thresholds = {});

std::string evidence_to_json(const OperationEvidence& evidence);
OperationEvidence evidence_from_json(std::string_view text);

/// Centered projection onto the top two right singular vectors; each axis is
/// signed so its largest-magnitude loading is positive.
Matrix project_pca(const Matrix& vectors);

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::uint64_t seed = 7;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  std::size_t momentum_switch = 250;
  std::size_t kl_every = 50;
};

struct TsneResult {
  Matrix embedding;  ///< n x 2
  /// (iteration, KL(P || Q)) every kl_every iterations, 1-based.
  std::vector<std::pair<std::size_t, double>> kl_history;
};

/// Row-stochastic conditional affinities P(j|i) with each row's Gaussian
/// bandwidth bisected until its entropy matches log(perplexity) within 1e-5.
Matrix tsne_conditional_affinities(const Matrix& vectors, double perplexity);

/// Exact t-SNE with early exaggeration, momentum switching, and adaptive gains.
TsneResult project_tsne(const Matrix& vectors, const TsneConfig& config = {});

/// "(CCGAU, 38)".
std::string point_label(std::string_view initialism, std::size_t slice_index);

struct TrajectoryReport {
  Trajectory trajectory;
  std::string initialism;
  OperationClass operation;
};

/// Present points of every trajectory, stacked in report order.
Matrix stack_present_points(std::span<const TrajectoryReport> reports);

/// One row per present point: initialism, slice, x, y, drift, context_shift,
/// class, point_label. drift and context_shift are blank on a trajectory's
/// first point. `projection` rows follow stack_present_points order.
void export_trajectories(std::ostream& out, std::span<const TrajectoryReport> reports,
                         const Matrix& projection);

}  // namespace trust_motion
