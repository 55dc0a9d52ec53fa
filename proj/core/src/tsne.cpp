#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "trust_motion/rng.hpp"
#include "trust_motion/trajectory.hpp"

namespace trust_motion {

namespace {

Matrix squared_distances(const Matrix& x) {
  const Vector sq = x.rowwise().squaredNorm();
  Matrix d = (-2.0 * x * x.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  return d.cwiseMax(0.0);
}

}  // namespace

Matrix tsne_conditional_affinities(const Matrix& vectors, double perplexity) {
  const Eigen::Index n = vectors.rows();
  if (!(perplexity > 0.0)) throw Error("perplexity must be positive");
  if (static_cast<double>(n) - 1.0 < perplexity) {
    throw Error(fmt::format("perplexity {} is too large for {} points (needs n - 1 >= perplexity)", perplexity, n));
  }
  const Matrix d = squared_distances(vectors);
  const double target = std::log(perplexity);
  Matrix p = Matrix::Zero(n, n);
  Vector row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, d(i, j));
    }
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) {
          row(j) = 0.0;
          continue;
        }
        const double shifted = d(i, j) - dmin;
        row(j) = std::exp(-beta * shifted);
        sum += row(j);
        weighted += row(j) * shifted;
      }
      // Entropy of the normalized row in nats.
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = row.transpose();
  }
  return p;
}

TsneResult project_tsne(const Matrix& vectors, const TsneConfig& config) {
  const Eigen::Index n = vectors.rows();
  if (n < 2) throw Error("t-SNE needs at least two points");
  const Matrix cond = tsne_conditional_affinities(vectors, config.perplexity);
  Matrix p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  SplitMix64 rng(config.seed);
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) y(i, c) = 1e-4 * rng.normal();
  }
  Matrix update = Matrix::Zero(n, 2);
  Matrix gains = Matrix::Ones(n, 2);
  Matrix num(n, n);
  Matrix grad(n, 2);

  TsneResult result;
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const double exaggeration = iter < config.exaggeration_iterations ? config.exaggeration : 1.0;
    const double momentum = iter < config.momentum_switch ? 0.5 : 0.8;

    num = (squared_distances(y).array() + 1.0).inverse().matrix();
    num.diagonal().setZero();
    const double zsum = num.sum();
    // grad_i = 4 sum_j (e p_ij - q_ij) num_ij (y_i - y_j)
    const Matrix w = (exaggeration * p - num / zsum).cwiseProduct(num);
    grad = 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);

    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
      }
    }
    update = momentum * update - config.learning_rate * gains.cwiseProduct(grad);
    y += update;
    y = y.rowwise() - y.colwise().mean();

    const std::size_t done = iter + 1;
    if (config.kl_every > 0 && done % config.kl_every == 0) {
      Matrix q = (squared_distances(y).array() + 1.0).inverse().matrix();
      q.diagonal().setZero();
      q /= q.sum();
      double kl = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (i != j) kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), 1e-300));
        }
      }
      result.kl_history.emplace_back(done, kl);
    }
  }
  result.embedding = y;
  return result;
}

}  // namespace trust_motion
