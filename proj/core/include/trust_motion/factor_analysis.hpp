#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trust_motion/common.hpp"

namespace trust_motion {

struct Standardized {
  Matrix z;                                  ///< n x kept_columns.size()
  Vector means;                              ///< length p (all input columns)
  Vector std_devs;                           ///< length p; 0 for dropped columns
  std::vector<std::size_t> kept_columns;     ///< indices into the input columns
  std::vector<std::size_t> dropped_columns;  ///< zero-variance columns
};

/// Column z-scores using the sample standard deviation. Requires n >= 2.
Standardized standardize(const Matrix& x);

/// Replaces NaN cells with their column mean over the finite cells
/// (zero when a column has no finite cell).
Matrix impute_column_means(const Matrix& x);

/// R = Z^T Z / (n - 1), symmetrized.
Matrix correlation_matrix(const Matrix& z);

/// Kaiser rule (eigenvalues strictly greater than one) unless an explicit
/// factor count is supplied.
std::size_t choose_num_factors(const Matrix& r, std::optional<std::size_t> override_m = std::nullopt);

struct PafOptions {
  double tolerance = 1e-6;
  std::size_t max_iterations = 200;
};

struct Extraction {
  Matrix loadings;      ///< p x m
  Vector uniquenesses;  ///< length p, each in [0, 1]
  std::size_t iterations = 0;
};

/// Principal-axis factoring did not settle within the iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Matrix last_loadings)
      : Error(what), last_loadings_(std::move(last_loadings)) {}
  const Matrix& last_loadings() const noexcept { return last_loadings_; }

 private:
  Matrix last_loadings_;
};

/// Iterated principal-axis factoring starting from squared multiple
/// correlations. Rows whose communality exceeds one are scaled back to unit
/// norm (Heywood guard). Columns come out ordered by eigenvalue with the
/// largest-magnitude entry of each column positive.
Extraction extract_factors(const Matrix& r, std::size_t m, const PafOptions& options = {});

struct Rotation {
  Matrix rotated;   ///< loadings * rotation
  Matrix rotation;  ///< m x m orthogonal
};

/// Kaiser-normalized varimax via pairwise planar rotations, iterated until the
/// criterion gains less than 1e-8 per sweep. m == 1 yields the identity.
Rotation varimax_rotate(const Matrix& loadings);

/// Varimax criterion on row-normalized loadings: the sum over factors of the
/// variance of squared loadings.
double varimax_criterion(const Matrix& loadings);

/// Regression-method weights W = R^-1 L. A ridge of 1e-8 I is added when the
/// condition number of R exceeds 1e12.
Matrix scoring_weights(const Matrix& r, const Matrix& loadings);

struct FactorScores {
  Matrix rows;  ///< n x m
  std::vector<std::string> factor_names;
};

FactorScores factor_scores(const Matrix& z, const Matrix& r, const Matrix& loadings,
                           std::vector<std::string> factor_names = {});

/// Five-factor model reading of the activity categories; other sizes get
/// generic "Factor i" names.
std::vector<std::string> default_factor_names(std::size_t m);

struct FactorModel {
  std::size_t p = 0;  ///< observed variables entering the fit (kept columns)
  std::size_t m = 0;
  Matrix loadings;         ///< p x m, rotated
  Vector uniquenesses;     ///< length p
  Matrix rotation;         ///< m x m
  Vector means;            ///< length of the raw column set
  Vector std_devs;         ///< length of the raw column set
  Matrix scoring_weights;  ///< p x m
  std::vector<std::string> variable_names;  ///< raw column names
  std::vector<std::string> factor_names;
  std::vector<std::size_t> kept_columns;
  std::vector<std::size_t> dropped_columns;
  std::size_t iterations = 0;
};

/// Full fit: mean imputation, standardization, correlation, factor count,
/// extraction, varimax, and scoring weights. Rotated factors are reordered by
/// explained variance with each column's column sum made non-negative.
FactorModel fit_factor_model(const Matrix& x, std::optional<std::size_t> m,
                             std::vector<std::string> variable_names,
                             std::vector<std::string> factor_names = {},
                             const PafOptions& options = {});

/// Scores raw rows with a fitted model. NaN cells take the fitted column mean.
FactorScores score(const FactorModel& model, const Matrix& x);

/// JSON with every real rendered at 17 significant digits.
std::string factor_model_to_json(const FactorModel& model);
FactorModel factor_model_from_json(std::string_view text);

}  // namespace trust_motion
