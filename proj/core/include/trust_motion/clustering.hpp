#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trust_motion/common.hpp"

namespace trust_motion {

struct ClusterModel {
  std::size_t k = 0;
  Matrix centroids;  ///< k x m
  std::uint64_t seed = 0;
  double inertia = 0.0;
  std::vector<std::string> cluster_names;
};

struct KMeansResult {
  ClusterModel model;
  std::vector<std::size_t> assignments;
  std::size_t best_restart = 0;
  /// Inertia after every Lloyd iteration of the winning restart.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` by
/// (inertia, restart index). Restart r draws from derive_seed(seed, r).
/// Assignment ties go to the lowest cluster index; an emptied cluster is
/// reseeded at the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 50);

std::size_t nearest_centroid(const Matrix& centroids, const Eigen::Ref<const Vector>& point);

/// Sum of squared distances from each point to its assigned centroid.
double inertia(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> assignments);

/// Index of the largest coordinate; ties go to the lower index.
std::size_t dominant_factor(const Eigen::Ref<const Vector>& centroid);

/// "Y_<i>" label for cluster i.
std::string label_name(std::size_t cluster);

/// "Y_<i> (<dominant factor name>)" for each centroid in index order.
std::vector<std::string> name_clusters(const ClusterModel& model,
                                       std::span<const std::string> factor_names);

/// Activity name carried by a cluster name ("Y_0 (Code Contribution)" ->
/// "Code Contribution"); the bare label when no name is attached.
std::string activity_of(const std::string& cluster_name);

struct EventMeta {
  std::string record_id;
  std::string sender_id;
  std::string subsystem;
  Timestamp sent_time = 0;
};

struct LabeledActivity {
  std::string record_id;
  std::string sender_id;
  Timestamp sent_time = 0;
  std::vector<double> scores;
  std::size_t label = 0;
  std::string subsystem;

  bool operator==(const LabeledActivity&) const = default;
};

/// Merges scores, labels, and event metadata, then stable-sorts by sent_time.
std::vector<LabeledActivity> label_events(const Matrix& score_rows,
                                          std::span<const std::size_t> assignments,
                                          std::span<const EventMeta> events);

/// Labeled factor-score table: sender_id, sent_time, one column per factor,
/// label. Scores carry 8 decimals.
void write_labeled_csv(std::ostream& out, std::span<const std::string> factor_names,
                       std::span<const LabeledActivity> rows);

/// Row-aligned companion of the labeled table: record_id, subsystem, activity.
void write_labeled_meta_csv(std::ostream& out, std::span<const LabeledActivity> rows,
                            std::span<const std::string> cluster_names);

struct LabeledDataset {
  std::vector<std::string> factor_names;
  std::vector<LabeledActivity> rows;
  /// Activity name per label index, when the companion table supplies one.
  std::vector<std::string> activity_names;
};

/// Reads the labeled table and, when given, its companion metadata table.
LabeledDataset read_labeled(std::istream& labeled, std::istream* meta = nullptr);

}  // namespace trust_motion
