#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trust_motion/common.hpp"
#include "trust_motion/embeddings.hpp"

namespace trust_motion {

/// Orthogonal R minimizing ||A R - B||_F for row-vector matrices with
/// corresponding rows: R = U V^T from the SVD A^T B = U S V^T. Reflections are
/// allowed.
Matrix procrustes(const Matrix& a, const Matrix& b);

/// Row convention: a row vector x of slice t maps to slice t+1 as x R^(t), and
/// into the final slice's frame as x cumulative[t], where
/// cumulative[t] = R^(t) cumulative[t+1] and cumulative[last] = I.
struct AlignmentChain {
  std::vector<std::size_t> slice_indices;
  std::vector<Matrix> rotations;            ///< one per adjacent pair
  std::vector<Matrix> cumulative;           ///< one per slice
  std::vector<std::size_t> shared_counts;   ///< one per adjacent pair
};

struct AlignmentResult {
  AlignmentChain chain;
  std::vector<SliceEmbeddings> aligned;
};

/// max(d / 10, 3).
std::size_t min_shared_tokens(std::size_t dim);

/// Fits each adjacent pair on its shared vocabulary's activity vectors and
/// rotates both activity and context matrices of every slice into the last
/// slice's frame. Slices must be ordered by index and non-empty.
AlignmentResult align_chain(std::span<const SliceEmbeddings> embeddings,
                            std::optional<std::size_t> min_shared = std::nullopt);

/// rotations.json next to an aligned embedding set: adjacent-pair and
/// cumulative d x d matrices with 17 significant digits.
void write_rotations(const std::string& path, const AlignmentChain& chain);

}  // namespace trust_motion
