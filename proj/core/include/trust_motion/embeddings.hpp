#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trust_motion/clustering.hpp"
#include "trust_motion/common.hpp"
#include "trust_motion/rng.hpp"

namespace trust_motion {

enum class TokenGranularity {
  label_sender_subsystem,
  label_subsystem,
};

/// Vocabulary unit: an activity type performed by a developer in a subsystem.
struct ActivityToken {
  std::size_t label = 0;
  std::string sender_id;
  std::string subsystem;

  auto operator<=>(const ActivityToken&) const = default;
};

struct ActivityTokenHash {
  std::size_t operator()(const ActivityToken& t) const noexcept;
};

ActivityToken make_token(const LabeledActivity& event,
                         TokenGranularity granularity = TokenGranularity::label_sender_subsystem);

/// Upper-cased first letter of every word ("George Acosta" -> "GA").
std::string initials(std::string_view text);

/// Activity initials, developer initials, then the subsystem's first letter:
/// ("Code Contribution", "George Acosta", "USB, driver core") -> "CCGAU".
std::string render_initialism(const ActivityToken& token, std::string_view activity_name);

struct TimeSlice {
  std::size_t index = 0;  ///< 1-based
  Timestamp start = 0;
  Timestamp end = 0;  ///< exclusive
  std::vector<LabeledActivity> events;

  bool empty() const noexcept { return events.empty(); }
};

/// Contiguous slices of `slice_len` seconds starting at min(sent_time)
/// floored to a multiple of slice_len since the epoch. Empty slices are kept.
std::vector<TimeSlice> slice_events(std::span<const LabeledActivity> labeled, Seconds slice_len);

struct Vocabulary {
  std::vector<ActivityToken> tokens;  ///< first-appearance order
  std::vector<std::size_t> counts;
  std::unordered_map<ActivityToken, std::size_t, ActivityTokenHash> index;

  std::size_t size() const noexcept { return tokens.size(); }
  std::optional<std::size_t> find(const ActivityToken& token) const;
  std::size_t add(const ActivityToken& token, std::size_t count = 1);
};

Vocabulary build_vocabulary(const TimeSlice& slice,
                            TokenGranularity granularity = TokenGranularity::label_sender_subsystem);

/// Ordered (center, context) event-index pairs with |t_i - t_j| <= window,
/// i != j. `times` must be sorted.
std::vector<std::pair<std::size_t, std::size_t>> context_pair_indices(std::span<const Timestamp> times,
                                                                      Seconds window);

/// Token pairs for every ordered event pair inside the time window.
std::vector<std::pair<ActivityToken, ActivityToken>> context_pairs(
    const TimeSlice& slice, Seconds window,
    TokenGranularity granularity = TokenGranularity::label_sender_subsystem);

/// Draws from P(w) proportional to count(w)^alpha through a cumulative table.
class NegativeSampler {
 public:
  NegativeSampler(std::span<const std::size_t> counts, double alpha);

  std::size_t draw(SplitMix64& rng) const;
  double probability(std::size_t token) const;
  std::size_t size() const noexcept { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

std::vector<std::size_t> negative_sample(SplitMix64& rng, std::span<const std::size_t> counts,
                                         double alpha, std::size_t k);

double sigmoid(double x);

/// -[log s(y.c) + sum_n log s(-y.n)] with s clamped to [1e-12, 1 - 1e-12].
double sgns_pair_loss(std::span<const double> y, std::span<const double> c,
                      std::span<const std::span<const double>> negatives);

struct SgnsGradient {
  std::vector<double> d_activity;
  std::vector<double> d_context;
  std::vector<std::vector<double>> d_negatives;
};

/// Analytic gradient of sgns_pair_loss (unclamped logistic).
SgnsGradient sgns_pair_gradient(std::span<const double> y, std::span<const double> c,
                                std::span<const std::span<const double>> negatives);

struct SgnsConfig {
  std::size_t dim = 120;
  Seconds window = 4 * kHour;
  std::size_t negatives = 5;
  double alpha = 0.75;
  double subsample = 1e-3;
  double learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  std::size_t epochs = 5;
  std::uint64_t seed = 7;
  TokenGranularity granularity = TokenGranularity::label_sender_subsystem;

  /// Throws Error listing every violated range.
  void validate() const;
};

struct SliceEmbeddings {
  std::size_t slice_index = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  Vocabulary vocab;
  RowMatrix activity;  ///< |V| x d
  RowMatrix context;   ///< |V| x d
  SgnsConfig config;
  std::uint64_t seed = 0;  ///< stream actually used for this slice
  std::vector<double> epoch_loss;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(activity.cols()); }
};

/// Per-slice training stream: derive_seed(config.seed, slice index).
std::uint64_t slice_seed(const SgnsConfig& config, std::size_t slice_index);

/// Sequential SGD over shuffled context pairs with linearly decayed learning
/// rate. Activity vectors start uniform in [-0.5/d, 0.5/d], context vectors at
/// zero. Each epoch discards event occurrences with probability
/// 1 - sqrt(subsample / frequency) before pairs are formed.
SliceEmbeddings train_slice(const TimeSlice& slice, const SgnsConfig& config);

/// Trains every non-empty slice.
std::vector<SliceEmbeddings> train_slices(std::span<const TimeSlice> slices, const SgnsConfig& config);

/// Mean held-out margin: sigmoid(y.c) on held-out positive pairs minus the
/// mean sigmoid against sampled negatives. 10% of each slice's pairs are held
/// out; the remainder trains the model.
double holdout_objective(std::span<const TimeSlice> slices, const SgnsConfig& config,
                         std::uint64_t seed);

struct SearchSpace {
  std::vector<double> learning_rates;
  std::vector<std::size_t> negatives;
  std::vector<Seconds> windows;
  std::vector<std::size_t> epochs;

  /// Config at the smallest value of every dimension.
  SgnsConfig lower_bounds(const SgnsConfig& base) const;
};

struct TuneTrial {
  SgnsConfig config;
  double objective = 0.0;
};

struct TuneResult {
  SgnsConfig best;
  double objective = 0.0;
  std::vector<TuneTrial> trials;
};

/// Random search: `budget` configs sampled uniformly per dimension; the first
/// trial with the highest held-out objective wins.
TuneResult tune_hyperparameters(std::span<const TimeSlice> slices, const SearchSpace& space,
                                std::size_t budget, std::uint64_t seed, const SgnsConfig& base);

// --- on-disk format ------------------------------------------------------

struct SliceInfo {
  std::size_t index = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  std::size_t events = 0;
  bool empty = false;
  std::string file;  ///< relative CSV name, empty for empty slices
};

struct EmbeddingSet {
  std::vector<SliceInfo> slices;  ///< every slice, empty ones flagged
  std::vector<SliceEmbeddings> embeddings;
  SgnsConfig config;
  Seconds slice_len = kWeek;
  std::vector<std::string> activity_names;
};

/// One CSV per non-empty slice (label, sender_id, subsystem, count, y0.., c0..)
/// plus manifest.json. Reals carry 17 significant digits.
void write_embedding_set(const std::string& dir, const EmbeddingSet& set);
EmbeddingSet read_embedding_set(const std::string& dir);

std::string sgns_config_to_json(const SgnsConfig& config);
SgnsConfig sgns_config_from_json(std::string_view text, const SgnsConfig& base = {});

}  // namespace trust_motion
