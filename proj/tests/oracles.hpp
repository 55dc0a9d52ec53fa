#pragma once

// Brute-force reference computations the tests compare the library against.
// Each one is written for clarity over speed and shares no code with core/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "trust_motion/common.hpp"

namespace trust_motion::oracle {

/// Minimum within-cluster sum of squares over every assignment of the rows
/// into exactly k non-empty groups.
inline double exhaustive_kmeans_optimum(const Matrix& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::size_t> assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assign) ++sizes[a];
    if (std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; })) {
      Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
      for (std::size_t i = 0; i < n; ++i) sums.row(static_cast<Eigen::Index>(assign[i])) += points.row(static_cast<Eigen::Index>(i));
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(assign[i]);
        total += (points.row(static_cast<Eigen::Index>(i)) - sums.row(c) / static_cast<double>(sizes[assign[i]])).squaredNorm();
      }
      best = std::min(best, total);
    }
    // odometer increment; pin the first point to group 0 to skip relabelings
    std::size_t pos = n - 1;
    while (pos > 0 && assign[pos] == k - 1) assign[pos--] = 0;
    if (pos == 0) break;
    ++assign[pos];
  }
  return best;
}

/// Average rank of each entry (1-based), computed by counting.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

/// Probability that a random positive score exceeds a random negative one,
/// ties counting one half.
inline double auc(const std::vector<double>& positives, const std::vector<double>& negatives) {
  double wins = 0.0;
  for (double p : positives)
    for (double q : negatives) wins += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
}

/// Trustworthiness of a low-dimensional embedding: penalizes points that
/// enter a k-neighborhood in `low` without being k-neighbors in `high`,
/// weighted by their rank in the high-dimensional space.
inline double trustworthiness(const Matrix& high, const Matrix& low, std::size_t k) {
  const auto n = static_cast<std::size_t>(high.rows());
  auto order = [n](const Matrix& x, std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.emplace_back((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm(), j);
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (const auto& p : d) out.push_back(p.second);
    return out;
  };
  double penalty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = order(high, i);
    const auto lo = order(low, i);
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t r = 0; r < hi.size(); ++r) rank[hi[r]] = r + 1;
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = lo[r];
      if (rank[j] > k) penalty += static_cast<double>(rank[j] - k);
    }
  }
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

/// Absolute Tucker congruence per true column after greedy matching of
/// estimated columns to true columns by largest |congruence|.
inline std::vector<double> matched_congruence(const Matrix& est, const Matrix& truth) {
  const Eigen::Index m = truth.cols();
  std::vector<bool> used_est(static_cast<std::size_t>(est.cols()), false);
  std::vector<bool> used_true(static_cast<std::size_t>(m), false);
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index round = 0; round < std::min(m, est.cols()); ++round) {
    double best = -1.0;
    Eigen::Index bi = 0, bj = 0;
    for (Eigen::Index i = 0; i < est.cols(); ++i) {
      if (used_est[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (used_true[static_cast<std::size_t>(j)]) continue;
        const double c = std::abs(est.col(i).dot(truth.col(j)) / (est.col(i).norm() * truth.col(j).norm()));
        if (c > best) best = c, bi = i, bj = j;
      }
    }
    used_est[static_cast<std::size_t>(bi)] = true;
    used_true[static_cast<std::size_t>(bj)] = true;
    out[static_cast<std::size_t>(bj)] = best;
  }
  return out;
}

}  // namespace trust_motion::oracle
