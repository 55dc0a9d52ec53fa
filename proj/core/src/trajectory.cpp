#include "trust_motion/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "json_text.hpp"
#include "trust_motion/csv.hpp"

namespace trust_motion {

namespace {

using nlohmann::json;

Vector row_vector(const SliceEmbeddings& slice, std::size_t row) {
  return slice.activity.row(static_cast<Eigen::Index>(row)).transpose();
}

/// Indices into `aligned` where the token is in the vocabulary.
std::vector<std::size_t> present_positions(const ActivityToken& token,
                                           std::span<const SliceEmbeddings> aligned) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < aligned.size(); ++p) {
    if (aligned[p].vocab.find(token)) out.push_back(p);
  }
  return out;
}

/// Reference tokens present in the slice, excluding the token itself.
std::vector<std::size_t> reference_rows(const SliceEmbeddings& slice, const ReferenceSet& reference,
                                        const ActivityToken& exclude) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < slice.vocab.size(); ++r) {
    const ActivityToken& t = slice.vocab.tokens[r];
    if (t != exclude && reference.contains(t)) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> nearest_neighbors(const SliceEmbeddings& slice, std::size_t row,
                                           std::size_t k) {
  const Vector x = row_vector(slice, row);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t r = 0; r < slice.vocab.size(); ++r) {
    if (r == row) continue;
    dist.emplace_back((row_vector(slice, r) - x).squaredNorm(), r);
  }
  const std::size_t take = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(dist[i].second);
  return out;
}

double jaccard(std::vector<ActivityToken> a, std::vector<ActivityToken> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<ActivityToken> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  const std::size_t uni = a.size() + b.size() - both.size();
  return uni == 0 ? 1.0 : static_cast<double>(both.size()) / static_cast<double>(uni);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<std::size_t> json_optional_label(const json& v) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw Error("reference label must be an integer or null");
  const auto l = v.get<std::int64_t>();
  if (l < 0) throw Error("reference label must be non-negative");
  return static_cast<std::size_t>(l);
}

std::optional<std::string> json_optional_string(const json& v, const char* what) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw Error(fmt::format("reference {} must be a string or null", what));
  return v.get<std::string>();
}

TokenPattern parse_pattern(const json& item) {
  TokenPattern p;
  if (item.is_array()) {
    if (item.size() != 3) throw Error("reference token arrays must have three entries [label, sender_id, subsystem]");
    p.label = json_optional_label(item[0]);
    p.sender_id = json_optional_string(item[1], "sender_id");
    p.subsystem = json_optional_string(item[2], "subsystem");
  } else if (item.is_object()) {
    for (const auto& [key, value] : item.items()) {
      if (key == "label") p.label = json_optional_label(value);
      else if (key == "sender_id") p.sender_id = json_optional_string(value, "sender_id");
      else if (key == "subsystem") p.subsystem = json_optional_string(value, "subsystem");
      else throw Error(fmt::format("unknown reference token key '{}'", key));
    }
  } else {
    throw Error("reference tokens must be arrays or objects");
  }
  if (!p.label && !p.sender_id && !p.subsystem) throw Error("a reference token must constrain at least one field");
  return p;
}

}  // namespace

bool TokenPattern::matches(const ActivityToken& token) const {
  if (label && *label != token.label) return false;
  if (sender_id && *sender_id != token.sender_id) return false;
  if (subsystem && *subsystem != token.subsystem) return false;
  return true;
}

bool ReferenceSet::contains(const ActivityToken& token) const {
  return std::any_of(tokens.begin(), tokens.end(), [&](const TokenPattern& p) { return p.matches(token); });
}

ReferenceSet parse_reference_set(std::string_view json_text) {
  ReferenceSet set;
  try {
    const json doc = json::parse(json_text);
    const json* list = &doc;
    if (doc.is_object()) {
      if (doc.contains("name")) set.name = doc.at("name").get<std::string>();
      if (!doc.contains("tokens")) throw Error("reference set object needs a 'tokens' list");
      list = &doc.at("tokens");
    }
    if (!list->is_array()) throw Error("reference tokens must be a list");
    for (const auto& item : *list) set.tokens.push_back(parse_pattern(item));
  } catch (const json::exception& e) {
    throw Error(fmt::format("invalid reference set: {}", e.what()));
  }
  if (set.tokens.empty()) throw Error("reference set is empty");
  return set;
}

std::size_t Trajectory::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const TrajectoryPoint& p) { return p.present; }));
}

Trajectory extract_trajectory(const ActivityToken& token, std::span<const SliceEmbeddings> aligned,
                              const TrajectoryOptions& options) {
  Trajectory traj;
  traj.token = token;
  for (const auto& slice : aligned) {
    TrajectoryPoint pt;
    pt.slice_index = slice.slice_index;
    if (const auto row = slice.vocab.find(token)) {
      pt.present = true;
      pt.vector = row_vector(slice, *row);
    }
    traj.points.push_back(std::move(pt));
  }
  const auto present = present_positions(token, aligned);
  if (present.size() < 2) {
    throw Error(fmt::format("token ({}, {}, {}) is present in {} slice(s); a trajectory needs at least two",
                            token.label, token.sender_id, token.subsystem, present.size()));
  }
  for (std::size_t i = 1; i < present.size(); ++i) {
    const std::size_t a = present[i - 1];
    const std::size_t b = present[i];
    const std::size_t from = aligned[a].slice_index;
    const std::size_t to = aligned[b].slice_index;
    traj.drift_series.push_back({from, to, (traj.points[b].vector - traj.points[a].vector).norm()});

    auto tokens_of = [&](std::size_t pos) {
      const auto& s = aligned[pos];
      std::vector<ActivityToken> out;
      for (const std::size_t r : nearest_neighbors(s, *s.vocab.find(token), options.neighbors)) {
        out.push_back(s.vocab.tokens[r]);
      }
      return out;
    };
    traj.neighbor_overlap_series.push_back({from, to, jaccard(tokens_of(a), tokens_of(b))});
  }
  return traj;
}

std::vector<SeriesEntry> context_shift(const ActivityToken& token, const ReferenceSet& reference,
                                       std::span<const SliceEmbeddings> aligned, ContextShiftMode mode) {
  const auto present = present_positions(token, aligned);
  std::vector<SeriesEntry> out;
  for (std::size_t i = 1; i < present.size(); ++i) {
    const auto& sa = aligned[present[i - 1]];
    const auto& sb = aligned[present[i]];
    std::vector<std::pair<std::size_t, std::size_t>> shared;
    for (const std::size_t ra : reference_rows(sa, reference, token)) {
      if (const auto rb = sb.vocab.find(sa.vocab.tokens[ra])) shared.emplace_back(ra, *rb);
    }
    if (shared.empty()) {
      throw Error(fmt::format("no reference token is shared by slices {} and {}", sa.slice_index, sb.slice_index));
    }
    const Vector xa = row_vector(sa, *sa.vocab.find(token));
    const Vector xb = row_vector(sb, *sb.vocab.find(token));
    double value = 0.0;
    if (mode == ContextShiftMode::distance_profile) {
      double sq = 0.0;
      for (const auto& [ra, rb] : shared) {
        const double da = (row_vector(sa, ra) - xa).norm();
        const double db = (row_vector(sb, rb) - xb).norm();
        sq += (db - da) * (db - da);
      }
      value = std::sqrt(sq);
    } else {
      Vector ca = Vector::Zero(xa.size());
      Vector cb = Vector::Zero(xb.size());
      for (const auto& [ra, rb] : shared) {
        ca += row_vector(sa, ra);
        cb += row_vector(sb, rb);
      }
      auto cosine = [](const Vector& u, const Vector& v) {
        const double n = u.norm() * v.norm();
        return n > 0.0 ? u.dot(v) / n : 0.0;
      };
      value = std::abs(cosine(xb, cb) - cosine(xa, ca));
    }
    out.push_back({sa.slice_index, sb.slice_index, value});
  }
  return out;
}

ProximityTrend proximity_trend(const ActivityToken& token, const ReferenceSet& reference,
                               std::span<const SliceEmbeddings> aligned, ProximityMode mode) {
  ProximityTrend trend;
  for (const auto& slice : aligned) {
    const auto row = slice.vocab.find(token);
    if (!row) continue;
    const auto refs = reference_rows(slice, reference, token);
    if (refs.empty()) continue;
    const Vector x = row_vector(slice, *row);
    double acc = mode == ProximityMode::min ? std::numeric_limits<double>::infinity() : 0.0;
    for (const std::size_t r : refs) {
      const double d = (row_vector(slice, r) - x).norm();
      acc = mode == ProximityMode::min ? std::min(acc, d) : acc + d;
    }
    if (mode == ProximityMode::mean) acc /= static_cast<double>(refs.size());
    trend.series.emplace_back(slice.slice_index, acc);
  }
  if (trend.series.size() >= 3) {
    std::vector<double> t;
    std::vector<double> d;
    for (const auto& [s, v] : trend.series) {
      t.push_back(static_cast<double>(s));
      d.push_back(v);
    }
    trend.rho = spearman(t, d);
  }
  return trend;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: series lengths differ");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> token_activity_counts(const ActivityToken& token,
                                          std::span<const SliceEmbeddings> aligned) {
  std::vector<double> counts;
  for (const auto& slice : aligned) {
    const auto row = slice.vocab.find(token);
    counts.push_back(row ? static_cast<double>(slice.vocab.counts[*row]) : 0.0);
  }
  return counts;
}

double burstiness_index(std::span<const double> counts) {
  if (counts.empty()) return 0.0;
  const double n = static_cast<double>(counts.size());
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  if (mean <= 0.0) return 0.0;
  double var = 0.0;
  for (const double c : counts) var += (c - mean) * (c - mean);
  return var / n / mean;
}

std::string_view operation_name(OperationKind kind) {
  switch (kind) {
    case OperationKind::opportunistic: return "opportunistic";
    case OperationKind::awry: return "awry";
    case OperationKind::hit_or_miss: return "hit_or_miss";
    case OperationKind::unclassified: return "unclassified";
  }
  return "unclassified";
}

OperationKind operation_from_name(std::string_view name) {
  for (const auto k : {OperationKind::opportunistic, OperationKind::awry, OperationKind::hit_or_miss,
                       OperationKind::unclassified}) {
    if (operation_name(k) == name) return k;
  }
  throw Error(fmt::format("unknown operation class '{}'", name));
}

OperationClass classify_evidence(const OperationEvidence& evidence, const OperationThresholds& thresholds) {
  OperationClass out;
  out.evidence = evidence;
  if (!evidence.rho) {
    out.kind = OperationKind::unclassified;
  } else if (evidence.burstiness > thresholds.burstiness && *evidence.rho <= thresholds.approach_rho) {
    out.kind = OperationKind::opportunistic;
  } else if (*evidence.rho >= thresholds.recede_rho) {
    out.kind = OperationKind::awry;
  } else {
    out.kind = OperationKind::hit_or_miss;
  }
  return out;
}

OperationClass classify_operation(const ProximityTrend& trend, std::span<const double> slice_counts,
                                  const OperationThresholds& thresholds) {
  return classify_evidence({trend.rho, burstiness_index(slice_counts)}, thresholds);
}

std::string evidence_to_json(const OperationEvidence& evidence) {
  return fmt::format("{{\"rho\": {}, \"burstiness\": {}}}",
                     evidence.rho ? json_text::number(*evidence.rho) : "null",
                     json_text::number(evidence.burstiness));
}

OperationEvidence evidence_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    OperationEvidence e;
    if (!doc.at("rho").is_null()) e.rho = doc.at("rho").get<double>();
    e.burstiness = doc.at("burstiness").get<double>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(fmt::format("invalid operation evidence: {}", ex.what()));
  }
}

Matrix project_pca(const Matrix& vectors) {
  const Eigen::Index n = vectors.rows();
  if (n < 2) throw Error("PCA needs at least two points");
  const Matrix centered = vectors.rowwise() - vectors.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  Matrix axes = Matrix::Zero(vectors.cols(), 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.matrixV().cols());
  axes.leftCols(k) = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    axes.col(c).cwiseAbs().maxCoeff(&arg);
    if (axes(arg, c) < 0.0) axes.col(c) *= -1.0;
  }
  return centered * axes;
}

std::string point_label(std::string_view initialism, std::size_t slice_index) {
  return fmt::format("({}, {})", initialism, slice_index);
}

Matrix stack_present_points(std::span<const TrajectoryReport> reports) {
  std::vector<const Vector*> rows;
  for (const auto& r : reports) {
    for (const auto& p : r.trajectory.points) {
      if (p.present) rows.push_back(&p.vector);
    }
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front()->size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
  return out;
}

void export_trajectories(std::ostream& out, std::span<const TrajectoryReport> reports,
                         const Matrix& projection) {
  write_csv_row(out, {"initialism", "slice", "x", "y", "drift", "context_shift", "class", "point_label"});
  Eigen::Index row = 0;
  for (const auto& r : reports) {
    auto value_at = [](const std::vector<SeriesEntry>& series, std::size_t slice) -> std::string {
      for (const auto& e : series) {
        if (e.to_slice == slice) return format_real(e.value);
      }
      return "";
    };
    for (const auto& p : r.trajectory.points) {
      if (!p.present) continue;
      if (row >= projection.rows()) throw Error("projection has fewer rows than trajectory points");
      write_csv_row(out, {r.initialism, std::to_string(p.slice_index), format_real(projection(row, 0)),
                          format_real(projection.cols() > 1 ? projection(row, 1) : 0.0),
                          value_at(r.trajectory.drift_series, p.slice_index),
                          value_at(r.trajectory.context_shift_series, p.slice_index),
                          std::string(operation_name(r.operation.kind)),
                          point_label(r.initialism, p.slice_index)});
      ++row;
    }
  }
  if (row != projection.rows()) throw Error("projection has more rows than trajectory points");
}

}  // namespace trust_motion
