#include "trust_motion/alignment.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "json_text.hpp"

namespace trust_motion {

Matrix procrustes(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(fmt::format("procrustes: shape mismatch ({}x{} vs {}x{})", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  if (a.rows() == 0 || a.cols() == 0) throw Error("procrustes: empty input");
  const Matrix m = a.transpose() * b;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw Error("procrustes: SVD did not converge");
  return svd.matrixU() * svd.matrixV().transpose();
}

std::size_t min_shared_tokens(std::size_t dim) { return std::max<std::size_t>(dim / 10, 3); }

AlignmentResult align_chain(std::span<const SliceEmbeddings> embeddings,
                            std::optional<std::size_t> min_shared) {
  if (embeddings.size() < 2) throw Error("alignment needs at least two non-empty slices");
  const std::size_t d = embeddings.front().dim();
  const std::size_t threshold = min_shared.value_or(min_shared_tokens(d));
  for (std::size_t t = 0; t < embeddings.size(); ++t) {
    const SliceEmbeddings& e = embeddings[t];
    if (e.vocab.size() == 0) {
      throw Error(fmt::format("slice {} is empty; drop or flag empty slices before alignment", e.slice_index));
    }
    if (e.dim() != d) throw Error(fmt::format("slice {} has dimension {}, expected {}", e.slice_index, e.dim(), d));
    if (t > 0 && e.slice_index <= embeddings[t - 1].slice_index) {
      throw Error("alignment input must be ordered by slice index");
    }
  }

  AlignmentResult result;
  AlignmentChain& chain = result.chain;
  const std::size_t n = embeddings.size();
  for (const auto& e : embeddings) chain.slice_indices.push_back(e.slice_index);

  for (std::size_t t = 0; t + 1 < n; ++t) {
    const SliceEmbeddings& from = embeddings[t];
    const SliceEmbeddings& to = embeddings[t + 1];
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shared;
    for (std::size_t i = 0; i < from.vocab.size(); ++i) {
      if (const auto j = to.vocab.find(from.vocab.tokens[i])) {
        shared.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*j));
      }
    }
    if (shared.size() < threshold) {
      throw Error(fmt::format(
          "slices ({}, {}) share {} vocabulary tokens; at least {} are required to fit a rotation",
          from.slice_index, to.slice_index, shared.size(), threshold));
    }
    Matrix a(static_cast<Eigen::Index>(shared.size()), static_cast<Eigen::Index>(d));
    Matrix b(static_cast<Eigen::Index>(shared.size()), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < shared.size(); ++k) {
      a.row(static_cast<Eigen::Index>(k)) = from.activity.row(shared[k].first);
      b.row(static_cast<Eigen::Index>(k)) = to.activity.row(shared[k].second);
    }
    chain.rotations.push_back(procrustes(a, b));
    chain.shared_counts.push_back(shared.size());
  }

  chain.cumulative.assign(n, Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  for (std::size_t t = n - 1; t-- > 0;) chain.cumulative[t] = chain.rotations[t] * chain.cumulative[t + 1];

  result.aligned.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    SliceEmbeddings e = embeddings[t];
    if (t + 1 < n) {
      e.activity = e.activity * chain.cumulative[t];
      e.context = e.context * chain.cumulative[t];
    }
    result.aligned.push_back(std::move(e));
  }
  return result;
}

void write_rotations(const std::string& path, const AlignmentChain& chain) {
  namespace jt = json_text;
  std::string out = "{\n";
  out += "  \"convention\": \"row vectors: x_aligned = x * cumulative[t]\",\n";
  out += "  \"slice_indices\": " + jt::integers(chain.slice_indices) + ",\n";
  out += "  \"shared_counts\": " + jt::integers(chain.shared_counts) + ",\n";
  out += "  \"rotations\": [";
  for (std::size_t t = 0; t < chain.rotations.size(); ++t) {
    out += t ? ",\n    " : "\n    ";
    out += fmt::format("{{\"from\": {}, \"to\": {}, \"matrix\": {}}}", chain.slice_indices[t],
                       chain.slice_indices[t + 1], jt::matrix(chain.rotations[t], "    "));
  }
  out += chain.rotations.empty() ? "],\n" : "\n  ],\n";
  out += "  \"cumulative\": [";
  for (std::size_t t = 0; t < chain.cumulative.size(); ++t) {
    out += t ? ",\n    " : "\n    ";
    out += fmt::format("{{\"slice\": {}, \"matrix\": {}}}", chain.slice_indices[t],
                       jt::matrix(chain.cumulative[t], "    "));
  }
  out += chain.cumulative.empty() ? "]\n" : "\n  ]\n";
  out += "}\n";
  write_file(path, out);
}

}  // namespace trust_motion
