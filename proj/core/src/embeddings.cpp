#include "trust_motion/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

#include <fmt/format.h>

namespace trust_motion {

std::size_t ActivityTokenHash::operator()(const ActivityToken& t) const noexcept {
  std::size_t h = std::hash<std::size_t>{}(t.label);
  h ^= std::hash<std::string>{}(t.sender_id) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h ^= std::hash<std::string>{}(t.subsystem) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return h;
}

ActivityToken make_token(const LabeledActivity& event, TokenGranularity granularity) {
  if (granularity == TokenGranularity::label_subsystem) return {event.label, "", event.subsystem};
  return {event.label, event.sender_id, event.subsystem};
}

std::string initials(std::string_view text) {
  std::string out;
  bool at_word_start = true;
  for (const char c : text) {
    const bool alnum = std::isalnum(static_cast<unsigned char>(c)) != 0;
    if (alnum && at_word_start) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    at_word_start = !alnum && c != '\'';
  }
  return out;
}

std::string render_initialism(const ActivityToken& token, std::string_view activity_name) {
  const std::string subsystem = initials(token.subsystem);
  return initials(activity_name) + initials(token.sender_id) + subsystem.substr(0, 1);
}

std::vector<TimeSlice> slice_events(std::span<const LabeledActivity> labeled, Seconds slice_len) {
  if (slice_len <= 0) throw Error("slice length must be positive");
  std::vector<TimeSlice> slices;
  if (labeled.empty()) return slices;
  for (std::size_t i = 1; i < labeled.size(); ++i) {
    if (labeled[i].sent_time < labeled[i - 1].sent_time) {
      throw Error(fmt::format("slice_events: input not sorted by sent_time at position {}", i));
    }
  }
  const Timestamp first = labeled.front().sent_time;
  Timestamp origin = (first / slice_len) * slice_len;
  if (origin > first) origin -= slice_len;
  const auto count = static_cast<std::size_t>((labeled.back().sent_time - origin) / slice_len) + 1;
  slices.resize(count);
  for (std::size_t t = 0; t < count; ++t) {
    slices[t].index = t + 1;
    slices[t].start = origin + static_cast<Timestamp>(t) * slice_len;
    slices[t].end = slices[t].start + slice_len;
  }
  for (const LabeledActivity& e : labeled) {
    slices[static_cast<std::size_t>((e.sent_time - origin) / slice_len)].events.push_back(e);
  }
  return slices;
}

std::optional<std::size_t> Vocabulary::find(const ActivityToken& token) const {
  const auto it = index.find(token);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::add(const ActivityToken& token, std::size_t count) {
  const auto [it, inserted] = index.emplace(token, tokens.size());
  if (inserted) {
    tokens.push_back(token);
    counts.push_back(0);
  }
  counts[it->second] += count;
  return it->second;
}

Vocabulary build_vocabulary(const TimeSlice& slice, TokenGranularity granularity) {
  Vocabulary vocab;
  for (const LabeledActivity& e : slice.events) vocab.add(make_token(e, granularity));
  return vocab;
}

std::vector<std::pair<std::size_t, std::size_t>> context_pair_indices(std::span<const Timestamp> times,
                                                                      Seconds window) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    while (times[i] - times[lo] > window) ++lo;
    if (hi < i) hi = i;
    while (hi + 1 < times.size() && times[hi + 1] - times[i] <= window) ++hi;
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

std::vector<std::pair<ActivityToken, ActivityToken>> context_pairs(const TimeSlice& slice,
                                                                   Seconds window,
                                                                   TokenGranularity granularity) {
  std::vector<Timestamp> times;
  times.reserve(slice.events.size());
  for (const auto& e : slice.events) times.push_back(e.sent_time);
  std::vector<std::pair<ActivityToken, ActivityToken>> out;
  for (const auto& [i, j] : context_pair_indices(times, window)) {
    out.emplace_back(make_token(slice.events[i], granularity), make_token(slice.events[j], granularity));
  }
  return out;
}

NegativeSampler::NegativeSampler(std::span<const std::size_t> counts, double alpha) {
  if (counts.empty()) throw Error("negative sampler needs a non-empty vocabulary");
  cumulative_.reserve(counts.size());
  double total = 0.0;
  for (const std::size_t c : counts) {
    total += c == 0 ? 0.0 : std::pow(static_cast<double>(c), alpha);
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw Error("negative sampler needs at least one positive count");
  for (double& v : cumulative_) v /= total;
  cumulative_.back() = 1.0;
}

std::size_t NegativeSampler::draw(SplitMix64& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                           static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

double NegativeSampler::probability(std::size_t token) const {
  return token == 0 ? cumulative_[0] : cumulative_[token] - cumulative_[token - 1];
}

std::vector<std::size_t> negative_sample(SplitMix64& rng, std::span<const std::size_t> counts,
                                         double alpha, std::size_t k) {
  const NegativeSampler sampler(counts, alpha);
  std::vector<std::size_t> out(k);
  for (auto& v : out) v = sampler.draw(rng);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

constexpr double kSigmoidFloor = 1e-12;

double clamped_log_sigmoid(double x) {
  return std::log(std::clamp(sigmoid(x), kSigmoidFloor, 1.0 - kSigmoidFloor));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_dims(std::span<const double> y, std::span<const double> c,
                std::span<const std::span<const double>> negatives) {
  if (c.size() != y.size()) throw Error("sgns: activity/context dimension mismatch");
  for (const auto n : negatives) {
    if (n.size() != y.size()) throw Error("sgns: negative dimension mismatch");
  }
}

}  // namespace

double sgns_pair_loss(std::span<const double> y, std::span<const double> c,
                      std::span<const std::span<const double>> negatives) {
  check_dims(y, c, negatives);
  double loss = -clamped_log_sigmoid(dot(y, c));
  for (const auto n : negatives) loss -= clamped_log_sigmoid(-dot(y, n));
  return loss;
}

SgnsGradient sgns_pair_gradient(std::span<const double> y, std::span<const double> c,
                                std::span<const std::span<const double>> negatives) {
  check_dims(y, c, negatives);
  const std::size_t d = y.size();
  SgnsGradient g;
  g.d_activity.assign(d, 0.0);
  g.d_context.assign(d, 0.0);
  const double pos = sigmoid(dot(y, c)) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    g.d_activity[i] += pos * c[i];
    g.d_context[i] = pos * y[i];
  }
  for (const auto n : negatives) {
    const double neg = sigmoid(dot(y, n));
    std::vector<double> dn(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.d_activity[i] += neg * n[i];
      dn[i] = neg * y[i];
    }
    g.d_negatives.push_back(std::move(dn));
  }
  return g;
}

void SgnsConfig::validate() const {
  std::vector<std::string> problems;
  if (dim < 1) problems.emplace_back("dim >= 1");
  if (negatives < 1) problems.emplace_back("negatives >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) problems.emplace_back("alpha in (0, 1]");
  if (epochs < 1) problems.emplace_back("epochs >= 1");
  if (window < 0) problems.emplace_back("window >= 0");
  if (!(subsample >= 0.0)) problems.emplace_back("subsample >= 0");
  if (!(learning_rate > 0.0)) problems.emplace_back("learning_rate > 0");
  if (!(min_learning_rate >= 0.0 && min_learning_rate <= learning_rate)) {
    problems.emplace_back("0 <= min_learning_rate <= learning_rate");
  }
  if (problems.empty()) return;
  std::string message = "invalid SGNS config:";
  for (const auto& p : problems) message += " " + p + ";";
  throw Error(message);
}

std::uint64_t slice_seed(const SgnsConfig& config, std::size_t slice_index) {
  return derive_seed(config.seed, slice_index);
}

namespace {

// Event-level view of a slice: token id and timestamp per event.
struct SliceCorpus {
  Vocabulary vocab;
  std::vector<std::size_t> tokens;
  std::vector<Timestamp> times;
};

SliceCorpus corpus_of(const TimeSlice& slice, TokenGranularity granularity) {
  SliceCorpus corpus;
  corpus.tokens.reserve(slice.events.size());
  for (const auto& e : slice.events) {
    corpus.tokens.push_back(corpus.vocab.add(make_token(e, granularity)));
    corpus.times.push_back(e.sent_time);
  }
  return corpus;
}

using EventPairs = std::vector<std::pair<std::size_t, std::size_t>>;

class Trainer {
 public:
  Trainer(const SliceCorpus& corpus, const SgnsConfig& config, SplitMix64& rng)
      : corpus_(corpus),
        config_(config),
        rng_(rng),
        sampler_(corpus.vocab.counts, config.alpha),
        activity_(static_cast<Eigen::Index>(corpus.vocab.size()), static_cast<Eigen::Index>(config.dim)),
        context_(RowMatrix::Zero(static_cast<Eigen::Index>(corpus.vocab.size()),
                                 static_cast<Eigen::Index>(config.dim))),
        buffer_(config.dim) {
    const double half = 0.5 / static_cast<double>(config.dim);
    for (Eigen::Index i = 0; i < activity_.rows(); ++i) {
      for (Eigen::Index j = 0; j < activity_.cols(); ++j) activity_(i, j) = rng_.uniform(-half, half);
    }
    const double total = static_cast<double>(corpus.tokens.size());
    keep_.resize(corpus.vocab.size(), 1.0);
    if (config.subsample > 0.0) {
      for (std::size_t t = 0; t < corpus.vocab.size(); ++t) {
        const double freq = static_cast<double>(corpus.vocab.counts[t]) / total;
        keep_[t] = std::min(1.0, std::sqrt(config.subsample / freq));
      }
    }
  }

  void run(const EventPairs& candidates) {
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      EventPairs pairs = epoch_pairs(candidates);
      shuffle(std::span(pairs), rng_);
      double loss = 0.0;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const double progress =
            (static_cast<double>(epoch) + static_cast<double>(p) / static_cast<double>(pairs.size())) /
            static_cast<double>(config_.epochs);
        const double lr = std::max(config_.min_learning_rate,
                                   config_.learning_rate - (config_.learning_rate - config_.min_learning_rate) * progress);
        loss += step(corpus_.tokens[pairs[p].first], corpus_.tokens[pairs[p].second], lr);
      }
      epoch_loss_.push_back(pairs.empty() ? 0.0 : loss / static_cast<double>(pairs.size()));
    }
  }

  RowMatrix& activity() { return activity_; }
  RowMatrix& context() { return context_; }
  std::vector<double>& epoch_loss() { return epoch_loss_; }
  const NegativeSampler& sampler() const { return sampler_; }

 private:
  EventPairs epoch_pairs(const EventPairs& candidates) {
    if (config_.subsample <= 0.0) return candidates;
    std::vector<char> kept(corpus_.tokens.size());
    for (std::size_t e = 0; e < kept.size(); ++e) kept[e] = rng_.uniform() < keep_[corpus_.tokens[e]];
    EventPairs out;
    out.reserve(candidates.size());
    for (const auto& pr : candidates) {
      if (kept[pr.first] && kept[pr.second]) out.push_back(pr);
    }
    return out;
  }

  // One SGD step for (center, context) plus negatives; returns the pair loss
  // evaluated before the update. Negatives equal to the positive context are
  // skipped.
  double step(std::size_t center, std::size_t target, double lr) {
    auto y = activity_.row(static_cast<Eigen::Index>(center));
    Eigen::Map<Eigen::RowVectorXd> grad(buffer_.data(), static_cast<Eigen::Index>(config_.dim));
    grad.setZero();
    double loss = 0.0;
    auto update = [&](std::size_t token, double label) {
      auto c = context_.row(static_cast<Eigen::Index>(token));
      const double score = y.dot(c);
      const double s = sigmoid(score);
      loss -= std::log(std::clamp(label > 0.0 ? s : 1.0 - s, kSigmoidFloor, 1.0 - kSigmoidFloor));
      const double g = (label - s) * lr;
      grad += g * c;
      c += g * y;
    };
    update(target, 1.0);
    for (std::size_t k = 0; k < config_.negatives; ++k) {
      const std::size_t negative = sampler_.draw(rng_);
      if (negative == target) continue;
      update(negative, 0.0);
    }
    y += grad;
    return loss;
  }

  const SliceCorpus& corpus_;
  const SgnsConfig& config_;
  SplitMix64& rng_;
  NegativeSampler sampler_;
  RowMatrix activity_;
  RowMatrix context_;
  std::vector<double> buffer_;
  std::vector<double> keep_;
  std::vector<double> epoch_loss_;
};

}  // namespace

SliceEmbeddings train_slice(const TimeSlice& slice, const SgnsConfig& config) {
  config.validate();
  if (slice.empty()) throw Error(fmt::format("slice {} is empty; skip flagged empty slices", slice.index));
  const SliceCorpus corpus = corpus_of(slice, config.granularity);
  const std::uint64_t seed = slice_seed(config, slice.index);
  SplitMix64 rng(seed);
  Trainer trainer(corpus, config, rng);
  trainer.run(context_pair_indices(corpus.times, config.window));

  SliceEmbeddings out;
  out.slice_index = slice.index;
  out.start = slice.start;
  out.end = slice.end;
  out.vocab = corpus.vocab;
  out.activity = std::move(trainer.activity());
  out.context = std::move(trainer.context());
  out.config = config;
  out.seed = seed;
  out.epoch_loss = std::move(trainer.epoch_loss());
  if (!out.activity.allFinite() || !out.context.allFinite()) {
    throw Error(fmt::format("slice {}: training produced non-finite vectors", slice.index));
  }
  return out;
}

std::vector<SliceEmbeddings> train_slices(std::span<const TimeSlice> slices, const SgnsConfig& config) {
  std::vector<SliceEmbeddings> out;
  for (const TimeSlice& s : slices) {
    if (!s.empty()) out.push_back(train_slice(s, config));
  }
  return out;
}

double holdout_objective(std::span<const TimeSlice> slices, const SgnsConfig& config,
                         std::uint64_t seed) {
  config.validate();
  double total = 0.0;
  std::size_t held = 0;
  for (const TimeSlice& slice : slices) {
    if (slice.empty()) continue;
    const SliceCorpus corpus = corpus_of(slice, config.granularity);
    EventPairs pairs = context_pair_indices(corpus.times, config.window);
    if (pairs.size() < 2) continue;
    SplitMix64 rng(derive_seed(seed, slice.index));
    shuffle(std::span(pairs), rng);
    const std::size_t n_hold = std::max<std::size_t>(1, pairs.size() / 10);
    const EventPairs holdout(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_hold));
    const EventPairs train(pairs.begin() + static_cast<std::ptrdiff_t>(n_hold), pairs.end());

    Trainer trainer(corpus, config, rng);
    trainer.run(train);
    const RowMatrix& y = trainer.activity();
    const RowMatrix& c = trainer.context();
    for (const auto& [i, j] : holdout) {
      const auto center = static_cast<Eigen::Index>(corpus.tokens[i]);
      const double positive = sigmoid(y.row(center).dot(c.row(static_cast<Eigen::Index>(corpus.tokens[j]))));
      double negative = 0.0;
      for (std::size_t k = 0; k < config.negatives; ++k) {
        negative += sigmoid(y.row(center).dot(c.row(static_cast<Eigen::Index>(trainer.sampler().draw(rng)))));
      }
      total += positive - negative / static_cast<double>(config.negatives);
      ++held;
    }
  }
  return held == 0 ? 0.0 : total / static_cast<double>(held);
}

SgnsConfig SearchSpace::lower_bounds(const SgnsConfig& base) const {
  SgnsConfig config = base;
  if (!learning_rates.empty()) config.learning_rate = *std::min_element(learning_rates.begin(), learning_rates.end());
  if (!negatives.empty()) config.negatives = *std::min_element(negatives.begin(), negatives.end());
  if (!windows.empty()) config.window = *std::min_element(windows.begin(), windows.end());
  if (!epochs.empty()) config.epochs = *std::min_element(epochs.begin(), epochs.end());
  config.min_learning_rate = std::min(config.min_learning_rate, config.learning_rate);
  return config;
}

TuneResult tune_hyperparameters(std::span<const TimeSlice> slices, const SearchSpace& space,
                                std::size_t budget, std::uint64_t seed, const SgnsConfig& base) {
  if (budget < 1) throw Error("tuning budget must be >= 1");
  if (space.learning_rates.empty() || space.negatives.empty() || space.windows.empty() ||
      space.epochs.empty()) {
    throw Error("search space has an empty dimension");
  }
  SplitMix64 sampler(seed);
  const std::uint64_t eval_seed = derive_seed(seed, 0xE7A1);
  TuneResult result;
  for (std::size_t b = 0; b < budget; ++b) {
    SgnsConfig config = base;
    config.learning_rate = space.learning_rates[sampler.below(space.learning_rates.size())];
    config.negatives = space.negatives[sampler.below(space.negatives.size())];
    config.window = space.windows[sampler.below(space.windows.size())];
    config.epochs = space.epochs[sampler.below(space.epochs.size())];
    config.min_learning_rate = std::min(config.min_learning_rate, config.learning_rate);
    const double objective = holdout_objective(slices, config, eval_seed);
    result.trials.push_back({config, objective});
    if (b == 0 || objective > result.objective) {
      result.best = config;
      result.objective = objective;
    }
  }
  return result;
}

}  // namespace trust_motion
