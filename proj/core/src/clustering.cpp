#include "trust_motion/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "trust_motion/csv.hpp"
#include "trust_motion/rng.hpp"

namespace trust_motion {
namespace {

constexpr std::size_t kMaxLloydIterations = 300;

double squared_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  return (a - b).squaredNorm();
}

Matrix plus_plus_seeds(const Matrix& points, std::size_t k, SplitMix64& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(static_cast<Eigen::Index>(k), points.cols());
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);

  Vector nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    nearest(i) = squared_distance(points.row(i).transpose(), centroids.row(0).transpose());
  }
  for (std::size_t c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target && nearest(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), squared_distance(points.row(i).transpose(),
                                                         centroids.row(static_cast<Eigen::Index>(c)).transpose()));
    }
  }
  return centroids;
}

struct Run {
  Matrix centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  std::vector<double> history;
};

Run lloyd(const Matrix& points, Matrix centroids) {
  const Eigen::Index n = points.rows();
  const auto k = static_cast<std::size_t>(centroids.rows());
  Run run;
  run.assignments.assign(static_cast<std::size_t>(n), 0);
  bool first = true;
  for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = first;
    first = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t c = nearest_centroid(centroids, points.row(i).transpose());
      if (c != run.assignments[static_cast<std::size_t>(i)]) changed = true;
      run.assignments[static_cast<std::size_t>(i)] = c;
    }
    const double after_assign = inertia(points, centroids, run.assignments);
    if (!run.history.empty() && after_assign > run.history.back() * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("k-means inertia increased during assignment");
    }

    Matrix sums = Matrix::Zero(centroids.rows(), centroids.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t c = run.assignments[static_cast<std::size_t>(i)];
      sums.row(static_cast<Eigen::Index>(c)) += points.row(i);
      ++sizes[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      // Reseed at the point farthest from its own centroid, taking it from a
      // cluster that can spare it.
      double worst = -1.0;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t owner = run.assignments[static_cast<std::size_t>(i)];
        if (sizes[owner] < 2) continue;
        const double d = squared_distance(points.row(i).transpose(),
                                          centroids.row(static_cast<Eigen::Index>(owner)).transpose());
        if (d > worst) {
          worst = d;
          far = i;
        }
      }
      if (far < 0) break;
      const std::size_t owner = run.assignments[static_cast<std::size_t>(far)];
      --sizes[owner];
      ++sizes[c];
      run.assignments[static_cast<std::size_t>(far)] = c;
      centroids.row(static_cast<Eigen::Index>(c)) = points.row(far);
      changed = true;
    }

    const double after_update = inertia(points, centroids, run.assignments);
    if (after_update > after_assign * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("k-means inertia increased during centroid update");
    }
    run.history.push_back(after_update);
    if (!changed) break;
  }
  // Final pass so every point sits with its nearest centroid.
  for (Eigen::Index i = 0; i < n; ++i) {
    run.assignments[static_cast<std::size_t>(i)] = nearest_centroid(centroids, points.row(i).transpose());
  }
  run.inertia = inertia(points, centroids, run.assignments);
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

std::size_t nearest_centroid(const Matrix& centroids, const Eigen::Ref<const Vector>& point) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(point, centroids.row(c).transpose());
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

double inertia(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> assignments) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += squared_distance(points.row(i).transpose(),
                              centroids.row(static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)])).transpose());
  }
  return total;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t restarts) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1) throw Error("k-means needs k >= 1");
  if (n < k) throw Error(fmt::format("k-means needs at least k points (n={}, k={})", n, k));
  if (!points.allFinite()) throw Error("k-means input contains non-finite values");
  restarts = std::max<std::size_t>(restarts, 1);

  KMeansResult best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    SplitMix64 rng(derive_seed(seed, r));
    Run run = lloyd(points, plus_plus_seeds(points, k, rng));
    if (run.inertia < best_inertia) {
      best_inertia = run.inertia;
      best.model.centroids = std::move(run.centroids);
      best.assignments = std::move(run.assignments);
      best.inertia_history = std::move(run.history);
      best.best_restart = r;
    }
  }
  best.model.k = k;
  best.model.seed = seed;
  best.model.inertia = best_inertia;
  for (std::size_t c = 0; c < k; ++c) best.model.cluster_names.push_back(label_name(c));
  return best;
}

std::size_t dominant_factor(const Eigen::Ref<const Vector>& centroid) {
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < centroid.size(); ++j) {
    if (centroid(j) > centroid(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(j);
  }
  return best;
}

std::string label_name(std::size_t cluster) { return fmt::format("Y_{}", cluster); }

std::vector<std::string> name_clusters(const ClusterModel& model,
                                       std::span<const std::string> factor_names) {
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < model.centroids.rows(); ++c) {
    const std::size_t f = dominant_factor(model.centroids.row(c).transpose());
    const std::string factor = f < factor_names.size() ? factor_names[f] : fmt::format("Factor {}", f + 1);
    names.push_back(fmt::format("{} ({})", label_name(static_cast<std::size_t>(c)), factor));
  }
  return names;
}

std::string activity_of(const std::string& cluster_name) {
  const auto open = cluster_name.find(" (");
  if (open == std::string::npos || cluster_name.back() != ')') return cluster_name;
  return cluster_name.substr(open + 2, cluster_name.size() - open - 3);
}

std::vector<LabeledActivity> label_events(const Matrix& score_rows,
                                          std::span<const std::size_t> assignments,
                                          std::span<const EventMeta> events) {
  const auto n = static_cast<std::size_t>(score_rows.rows());
  if (assignments.size() != n || events.size() != n) {
    throw Error(fmt::format("label_events: length mismatch (scores={}, assignments={}, events={})",
                            n, assignments.size(), events.size()));
  }
  std::vector<LabeledActivity> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = score_rows.row(static_cast<Eigen::Index>(i));
    LabeledActivity a;
    a.record_id = events[i].record_id;
    a.sender_id = events[i].sender_id;
    a.subsystem = events[i].subsystem;
    a.sent_time = events[i].sent_time;
    for (Eigen::Index j = 0; j < row.size(); ++j) a.scores.push_back(row(j));
    a.label = assignments[i];
    out.push_back(std::move(a));
  }
  std::stable_sort(out.begin(), out.end(), [](const LabeledActivity& a, const LabeledActivity& b) {
    return a.sent_time < b.sent_time;
  });
  return out;
}

void write_labeled_csv(std::ostream& out, std::span<const std::string> factor_names,
                       std::span<const LabeledActivity> rows) {
  std::vector<std::string> header = {"sender_id", "sent_time"};
  header.insert(header.end(), factor_names.begin(), factor_names.end());
  header.emplace_back("label");
  write_csv_row(out, header);
  for (const LabeledActivity& a : rows) {
    if (a.scores.size() != factor_names.size()) throw Error("labeled row width differs from factor names");
    std::vector<std::string> row = {a.sender_id, format_timestamp(a.sent_time)};
    for (const double s : a.scores) row.push_back(format_fixed(s, 8));
    row.push_back(label_name(a.label));
    write_csv_row(out, row);
  }
}

void write_labeled_meta_csv(std::ostream& out, std::span<const LabeledActivity> rows,
                            std::span<const std::string> cluster_names) {
  write_csv_row(out, {"record_id", "subsystem", "activity"});
  for (const LabeledActivity& a : rows) {
    const std::string activity =
        a.label < cluster_names.size() ? activity_of(cluster_names[a.label]) : label_name(a.label);
    write_csv_row(out, {a.record_id, a.subsystem, activity});
  }
}

namespace {

std::size_t parse_label(const std::string& text) {
  if (text.size() < 3 || text.compare(0, 2, "Y_") != 0) {
    throw Error(fmt::format("label '{}' is not of the form Y_<i>", text));
  }
  const auto v = parse_int(std::string_view(text).substr(2));
  if (v < 0) throw Error(fmt::format("negative label '{}'", text));
  return static_cast<std::size_t>(v);
}

}  // namespace

LabeledDataset read_labeled(std::istream& labeled, std::istream* meta) {
  const CsvTable table = read_csv(labeled);
  if (table.header.size() < 3 || table.header[0] != "sender_id" || table.header[1] != "sent_time" ||
      table.header.back() != "label") {
    throw Error("labeled table must have columns sender_id, sent_time, <factors...>, label");
  }
  LabeledDataset out;
  out.factor_names.assign(table.header.begin() + 2, table.header.end() - 1);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    try {
      LabeledActivity a;
      a.sender_id = row[0];
      a.sent_time = parse_timestamp(row[1]);
      for (std::size_t j = 2; j + 1 < row.size(); ++j) {
        const double s = parse_real(row[j]);
        if (!std::isfinite(s)) throw Error("non-finite factor score");
        a.scores.push_back(s);
      }
      a.label = parse_label(row.back());
      a.record_id = fmt::format("row{}", i + 1);
      out.rows.push_back(std::move(a));
    } catch (const Error& e) {
      throw Error(fmt::format("labeled row {}: {}", i + 2, e.what()));
    }
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (out.rows[i].sent_time < out.rows[i - 1].sent_time) {
      throw Error(fmt::format("labeled row {}: rows are not sorted by sent_time", i + 2));
    }
  }
  if (meta != nullptr) {
    const CsvTable side = read_csv(*meta);
    if (side.rows.size() != out.rows.size()) {
      throw Error(fmt::format("labeled metadata has {} rows, labeled table has {}", side.rows.size(),
                              out.rows.size()));
    }
    const std::size_t id = side.column("record_id");
    const std::size_t subsystem = side.column("subsystem");
    const std::size_t activity = side.column("activity");
    std::map<std::size_t, std::string> names;
    for (std::size_t i = 0; i < side.rows.size(); ++i) {
      out.rows[i].record_id = side.rows[i][id];
      out.rows[i].subsystem = side.rows[i][subsystem];
      names.emplace(out.rows[i].label, side.rows[i][activity]);
    }
    if (!names.empty()) {
      out.activity_names.resize(names.rbegin()->first + 1);
      for (std::size_t c = 0; c < out.activity_names.size(); ++c) {
        const auto it = names.find(c);
        out.activity_names[c] = it == names.end() ? label_name(c) : it->second;
      }
    }
  }
  return out;
}

}  // namespace trust_motion
