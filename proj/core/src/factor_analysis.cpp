#include "trust_motion/factor_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "json_text.hpp"

namespace trust_motion {
namespace {

constexpr double kZeroVariance = 1e-12;

// Top-m eigenpairs of a symmetric matrix, largest first.
struct TopEigen {
  Vector values;
  Matrix vectors;
};

TopEigen top_eigenpairs(const Matrix& s, std::size_t m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
  const Eigen::Index p = s.rows();
  TopEigen top{Vector(static_cast<Eigen::Index>(m)), Matrix(p, static_cast<Eigen::Index>(m))};
  for (std::size_t k = 0; k < m; ++k) {
    const Eigen::Index src = p - 1 - static_cast<Eigen::Index>(k);
    top.values(static_cast<Eigen::Index>(k)) = solver.eigenvalues()(src);
    top.vectors.col(static_cast<Eigen::Index>(k)) = solver.eigenvectors().col(src);
  }
  return top;
}

void orient_columns_by_largest_entry(Matrix& loadings) {
  for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
    Eigen::Index arg = 0;
    loadings.col(k).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, k) < 0.0) loadings.col(k) *= -1.0;
  }
}

Vector initial_communalities(const Matrix& r) {
  const Eigen::Index p = r.rows();
  Vector h(p);
  Eigen::LDLT<Matrix> ldlt(r);
  bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (ok) {
    const Matrix inv = ldlt.solve(Matrix::Identity(p, p));
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(inv(j, j) >= 1.0 - 1e-12) || !std::isfinite(inv(j, j))) {
        ok = false;
        break;
      }
      h(j) = std::clamp(1.0 - 1.0 / inv(j, j), 0.0, 1.0);
    }
  }
  if (!ok) {
    // Singular R: fall back to the largest absolute off-diagonal correlation.
    for (Eigen::Index j = 0; j < p; ++j) {
      double best = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        if (k != j) best = std::max(best, std::abs(r(j, k)));
      }
      h(j) = best;
    }
  }
  return h;
}

}  // namespace

Standardized standardize(const Matrix& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw Error(fmt::format("standardize needs at least 2 rows, got {}", n));
  Standardized out;
  out.means = x.colwise().mean().transpose();
  out.std_devs = Vector::Zero(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - out.means(j)).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!std::isfinite(sd)) throw Error(fmt::format("column {} contains non-finite values", j));
    if (sd <= kZeroVariance * std::max(1.0, std::abs(out.means(j)))) {
      out.dropped_columns.push_back(static_cast<std::size_t>(j));
    } else {
      out.std_devs(j) = sd;
      out.kept_columns.push_back(static_cast<std::size_t>(j));
    }
  }
  out.z.resize(n, static_cast<Eigen::Index>(out.kept_columns.size()));
  for (std::size_t k = 0; k < out.kept_columns.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(out.kept_columns[k]);
    out.z.col(static_cast<Eigen::Index>(k)) = (x.col(j).array() - out.means(j)) / out.std_devs(j);
  }
  return out;
}

Matrix impute_column_means(const Matrix& x) {
  Matrix out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (std::isfinite(x(i, j))) {
        sum += x(i, j);
        ++count;
      }
    }
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (std::isnan(x(i, j))) out(i, j) = mean;
    }
  }
  return out;
}

Matrix correlation_matrix(const Matrix& z) {
  if (z.rows() < 2) throw Error("correlation_matrix needs at least 2 rows");
  Matrix r = (z.transpose() * z) / static_cast<double>(z.rows() - 1);
  return 0.5 * (r + r.transpose());
}

std::size_t choose_num_factors(const Matrix& r, std::optional<std::size_t> override_m) {
  if (override_m) return *override_m;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(r, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
  const auto& values = solver.eigenvalues();
  const auto m = static_cast<std::size_t>((values.array() > 1.0 + 1e-9).count());
  if (m == 0) {
    throw Error(
        "Kaiser rule selects no factors (no eigenvalue exceeds 1); pass an explicit factor count");
  }
  return m;
}

Extraction extract_factors(const Matrix& r, std::size_t m, const PafOptions& options) {
  const auto p = static_cast<std::size_t>(r.rows());
  if (r.rows() != r.cols()) throw Error("correlation matrix must be square");
  if (m < 1 || m >= p) throw Error(fmt::format("factor count must satisfy 1 <= m < p (m={}, p={})", m, p));

  Vector h = initial_communalities(r);
  Matrix loadings(r.rows(), static_cast<Eigen::Index>(m));
  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    Matrix reduced = r;
    reduced.diagonal() = h;
    const TopEigen top = top_eigenpairs(reduced, m);
    for (Eigen::Index k = 0; k < top.values.size(); ++k) {
      if (top.values(k) < -1e-10) {
        throw Error(fmt::format("degenerate correlation matrix: eigenvalue {} of the reduced matrix is negative ({})",
                                k + 1, top.values(k)));
      }
      loadings.col(k) = top.vectors.col(k) * std::sqrt(std::max(top.values(k), 0.0));
    }
    Vector next = loadings.rowwise().squaredNorm();
    next = next.cwiseMin(1.0);
    const double change = (next - h).cwiseAbs().maxCoeff();
    h = next;
    if (change < options.tolerance) {
      for (Eigen::Index j = 0; j < loadings.rows(); ++j) {
        const double norm = loadings.row(j).norm();
        if (norm > 1.0) loadings.row(j) /= norm;
      }
      orient_columns_by_largest_entry(loadings);
      Extraction out;
      out.uniquenesses = (Vector::Ones(r.rows()) - loadings.rowwise().squaredNorm()).cwiseMax(0.0).cwiseMin(1.0);
      out.loadings = std::move(loadings);
      out.iterations = iter;
      return out;
    }
  }
  throw ConvergenceError(
      fmt::format("principal-axis factoring did not converge within {} iterations; raise the iteration budget or lower the factor count",
                  options.max_iterations),
      loadings);
}

double varimax_criterion(const Matrix& loadings) {
  const Eigen::Index p = loadings.rows();
  if (p == 0) return 0.0;
  Matrix b = loadings;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = b.row(j).norm();
    if (norm > 0.0) b.row(j) /= norm;
  }
  const Matrix sq = b.array().square().matrix();
  double total = 0.0;
  for (Eigen::Index k = 0; k < sq.cols(); ++k) {
    const double mean = sq.col(k).mean();
    total += (sq.col(k).array() - mean).square().mean();
  }
  return total;
}

Rotation varimax_rotate(const Matrix& loadings) {
  const Eigen::Index p = loadings.rows();
  const Eigen::Index m = loadings.cols();
  Matrix rotation = Matrix::Identity(m, m);
  if (m < 2) return {loadings, rotation};

  Vector norms = loadings.rowwise().norm();
  Matrix b = loadings;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (norms(j) > 0.0) b.row(j) /= norms(j);
  }

  const double dp = static_cast<double>(p);
  double criterion = varimax_criterion(b);
  for (int sweep = 0; sweep < 1000; ++sweep) {
    for (Eigen::Index a = 0; a < m - 1; ++a) {
      for (Eigen::Index c = a + 1; c < m; ++c) {
        const Vector x = b.col(a);
        const Vector y = b.col(c);
        const Vector u = (x.array().square() - y.array().square()).matrix();
        const Vector v = (2.0 * x.array() * y.array()).matrix();
        const double sum_u = u.sum();
        const double sum_v = v.sum();
        const double sum_c = (u.array().square() - v.array().square()).sum();
        const double sum_d = 2.0 * (u.array() * v.array()).sum();
        const double num = sum_d - 2.0 * sum_u * sum_v / dp;
        const double den = sum_c - (sum_u * sum_u - sum_v * sum_v) / dp;
        const double phi = 0.25 * std::atan2(num, den);
        if (std::abs(phi) < 1e-15) continue;
        const double cs = std::cos(phi);
        const double sn = std::sin(phi);
        b.col(a) = cs * x + sn * y;
        b.col(c) = -sn * x + cs * y;
        const Vector ta = rotation.col(a);
        const Vector tc = rotation.col(c);
        rotation.col(a) = cs * ta + sn * tc;
        rotation.col(c) = -sn * ta + cs * tc;
      }
    }
    const double next = varimax_criterion(b);
    const double gain = next - criterion;
    criterion = next;
    if (gain < 1e-8) break;
  }
  return {loadings * rotation, rotation};
}

Matrix scoring_weights(const Matrix& r, const Matrix& loadings) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(r, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
  const double lo = solver.eigenvalues().minCoeff();
  const double hi = solver.eigenvalues().maxCoeff();
  Matrix system = r;
  double floor = lo;
  if (lo <= 0.0 || hi / lo > 1e12) {
    system += 1e-8 * Matrix::Identity(r.rows(), r.cols());
    floor += 1e-8;
  }
  if (!(floor > 0.0)) throw Error("correlation matrix is singular even after ridge regularization");
  const Matrix w = Eigen::LDLT<Matrix>(system).solve(loadings);
  if (!w.allFinite()) throw Error("correlation matrix is singular even after ridge regularization");
  return w;
}

std::vector<std::string> default_factor_names(std::size_t m) {
  if (m == 5) {
    return {"Code Contribution", "Knowledge Sharing", "Patch Posting", "Progress Control",
            "Acknowledgment"};
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < m; ++k) names.push_back(fmt::format("Factor {}", k + 1));
  return names;
}

FactorScores factor_scores(const Matrix& z, const Matrix& r, const Matrix& loadings,
                           std::vector<std::string> factor_names) {
  if (z.cols() != r.rows() || r.rows() != loadings.rows()) {
    throw Error("factor_scores: inconsistent shapes");
  }
  if (factor_names.empty()) factor_names = default_factor_names(static_cast<std::size_t>(loadings.cols()));
  return {z * scoring_weights(r, loadings), std::move(factor_names)};
}

FactorModel fit_factor_model(const Matrix& x, std::optional<std::size_t> m,
                             std::vector<std::string> variable_names,
                             std::vector<std::string> factor_names, const PafOptions& options) {
  if (variable_names.size() != static_cast<std::size_t>(x.cols())) {
    throw Error("fit_factor_model: one variable name per column required");
  }
  const Standardized st = standardize(impute_column_means(x));
  const Matrix r = correlation_matrix(st.z);
  const std::size_t factors = choose_num_factors(r, m);
  const Extraction ex = extract_factors(r, factors, options);
  const Rotation rot = varimax_rotate(ex.loadings);

  // Order rotated factors by explained variance; make column sums non-negative.
  const Vector explained = rot.rotated.colwise().squaredNorm().transpose();
  std::vector<Eigen::Index> order(factors);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return explained(a) > explained(b); });
  Matrix perm = Matrix::Zero(static_cast<Eigen::Index>(factors), static_cast<Eigen::Index>(factors));
  for (std::size_t k = 0; k < factors; ++k) {
    const double sign = rot.rotated.col(order[k]).sum() < 0.0 ? -1.0 : 1.0;
    perm(order[k], static_cast<Eigen::Index>(k)) = sign;
  }

  FactorModel model;
  model.p = st.kept_columns.size();
  model.m = factors;
  model.loadings = rot.rotated * perm;
  model.rotation = rot.rotation * perm;
  model.uniquenesses = ex.uniquenesses;
  model.means = st.means;
  model.std_devs = st.std_devs;
  model.scoring_weights = scoring_weights(r, model.loadings);
  model.variable_names = std::move(variable_names);
  model.factor_names = factor_names.empty() ? default_factor_names(factors) : std::move(factor_names);
  if (model.factor_names.size() != factors) throw Error("fit_factor_model: factor name count mismatch");
  model.kept_columns = st.kept_columns;
  model.dropped_columns = st.dropped_columns;
  model.iterations = ex.iterations;
  return model;
}

FactorScores score(const FactorModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.variable_names.size()) {
    throw Error(fmt::format("score: expected {} columns, got {}", model.variable_names.size(), x.cols()));
  }
  Matrix z(x.rows(), static_cast<Eigen::Index>(model.kept_columns.size()));
  for (std::size_t k = 0; k < model.kept_columns.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(model.kept_columns[k]);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double value = std::isnan(x(i, j)) ? model.means(j) : x(i, j);
      z(i, static_cast<Eigen::Index>(k)) = (value - model.means(j)) / model.std_devs(j);
    }
  }
  FactorScores out{z * model.scoring_weights, model.factor_names};
  if (!out.rows.allFinite()) throw Error("score: non-finite factor scores");
  return out;
}

std::string factor_model_to_json(const FactorModel& model) {
  namespace jt = json_text;
  std::string out = "{\n";
  out += fmt::format("  \"p\": {},\n  \"m\": {},\n", model.p, model.m);
  out += "  \"variable_names\": " + jt::strings(model.variable_names) + ",\n";
  out += "  \"factor_names\": " + jt::strings(model.factor_names) + ",\n";
  out += "  \"kept_columns\": " + jt::integers(model.kept_columns) + ",\n";
  out += "  \"dropped_columns\": " + jt::integers(model.dropped_columns) + ",\n";
  out += "  \"means\": " + jt::vector(model.means) + ",\n";
  out += "  \"std_devs\": " + jt::vector(model.std_devs) + ",\n";
  out += "  \"uniquenesses\": " + jt::vector(model.uniquenesses) + ",\n";
  out += "  \"loadings\": " + jt::matrix(model.loadings, "  ") + ",\n";
  out += "  \"rotation\": " + jt::matrix(model.rotation, "  ") + ",\n";
  out += "  \"scoring_weights\": " + jt::matrix(model.scoring_weights, "  ") + ",\n";
  out += fmt::format("  \"iterations\": {}\n", model.iterations);
  out += "}\n";
  return out;
}

namespace {

Vector vector_from(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from(const nlohmann::json& j, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw Error("factor model: ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

}  // namespace

FactorModel factor_model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FactorModel model;
    model.p = j.at("p").get<std::size_t>();
    model.m = j.at("m").get<std::size_t>();
    model.variable_names = j.at("variable_names").get<std::vector<std::string>>();
    model.factor_names = j.at("factor_names").get<std::vector<std::string>>();
    model.kept_columns = j.at("kept_columns").get<std::vector<std::size_t>>();
    model.dropped_columns = j.at("dropped_columns").get<std::vector<std::size_t>>();
    model.means = vector_from(j.at("means"));
    model.std_devs = vector_from(j.at("std_devs"));
    model.uniquenesses = vector_from(j.at("uniquenesses"));
    model.loadings = matrix_from(j.at("loadings"), model.m);
    model.rotation = matrix_from(j.at("rotation"), model.m);
    model.scoring_weights = matrix_from(j.at("scoring_weights"), model.m);
    model.iterations = j.value("iterations", std::size_t{0});
    if (model.kept_columns.size() != model.p || static_cast<std::size_t>(model.loadings.rows()) != model.p ||
        static_cast<std::size_t>(model.scoring_weights.rows()) != model.p ||
        model.factor_names.size() != model.m ||
        static_cast<std::size_t>(model.means.size()) != model.variable_names.size()) {
      throw Error("factor model: inconsistent dimensions");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("factor model: {}", e.what()));
  }
}

}  // namespace trust_motion
