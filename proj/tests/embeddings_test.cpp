#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_support.hpp"
#include "trust_motion/embeddings.hpp"

namespace tmo = trust_motion;
using tmo::fixtures::event;

namespace {

double cosine(const tmo::RowMatrix& m, std::size_t i, std::size_t j) {
  const auto a = m.row(static_cast<Eigen::Index>(i));
  const auto b = m.row(static_cast<Eigen::Index>(j));
  return a.dot(b) / (a.norm() * b.norm());
}

std::vector<std::span<const double>> spans(const std::vector<std::vector<double>>& v) {
  std::vector<std::span<const double>> out;
  for (const auto& x : v) out.emplace_back(x);
  return out;
}

}  // namespace

TEST(Initialism, RendersActivityDeveloperSubsystem) {
  EXPECT_EQ(tmo::initials("George Acosta"), "GA");
  EXPECT_EQ(tmo::initials("o'brien  kernel-dev"), "OKD");
  const tmo::ActivityToken token{0, "George Acosta", "USB, driver core"};
  EXPECT_EQ(tmo::render_initialism(token, "Code Contribution"), "CCGAU");
}

TEST(Tokens, GranularityAndHashing) {
  const auto e = event("GA", "USB", 10, 2);
  EXPECT_EQ(tmo::make_token(e), (tmo::ActivityToken{2, "GA", "USB"}));
  EXPECT_EQ(tmo::make_token(e, tmo::TokenGranularity::label_subsystem), (tmo::ActivityToken{2, "", "USB"}));
  tmo::ActivityTokenHash h;
  EXPECT_EQ(h({1, "a", "b"}), h({1, "a", "b"}));
}

TEST(SliceEvents, WeeklyPartition) {
  const tmo::Timestamp origin = 1672876800;  // a multiple of one week since the epoch
  ASSERT_EQ(origin % tmo::kWeek, 0);
  std::vector<tmo::LabeledActivity> ev = {event("a", "U", origin), event("b", "U", origin + 3 * tmo::kDay),
                                          event("c", "U", origin + 10 * tmo::kDay)};
  auto slices = tmo::slice_events(ev, tmo::kWeek);
  ASSERT_EQ(slices.size(), 2u);
  EXPECT_EQ(slices[0].events.size(), 2u);
  EXPECT_EQ(slices[1].events.size(), 1u);
  EXPECT_EQ(slices[0].index, 1u);
  EXPECT_EQ(slices[0].start, origin);
  EXPECT_EQ(slices[0].end - slices[0].start, tmo::kWeek);
  EXPECT_EQ(slices[1].start, slices[0].end);

  EXPECT_EQ(tmo::slice_events(std::vector{event("a", "U", origin + 5)}, tmo::kWeek).size(), 1u);

  const auto gap = tmo::slice_events(std::vector{event("a", "U", origin), event("b", "U", origin + 20 * tmo::kDay)},
                                     tmo::kWeek);
  ASSERT_EQ(gap.size(), 3u);
  EXPECT_TRUE(gap[1].empty());
  EXPECT_FALSE(gap[2].empty());
}

TEST(SliceEvents, FloorsToSliceBoundaryAndRejectsUnsorted) {
  const tmo::Timestamp t = 1672876800 + 2 * tmo::kDay + 5;
  const auto s = tmo::slice_events(std::vector{event("a", "U", t)}, tmo::kWeek);
  EXPECT_EQ(s[0].start, 1672876800);
  EXPECT_THROW(tmo::slice_events(std::vector{event("a", "U", 10), event("b", "U", 5)}, tmo::kWeek), tmo::Error);
  EXPECT_THROW(tmo::slice_events(std::vector{event("a", "U", 10)}, 0), tmo::Error);
  EXPECT_TRUE(tmo::slice_events(std::vector<tmo::LabeledActivity>{}, tmo::kWeek).empty());
}

TEST(ContextPairs, WindowEdges) {
  const auto both = tmo::context_pairs(tmo::fixtures::single_slice({event("a", "U", 0), event("b", "N", 3 * tmo::kHour)}),
                                       4 * tmo::kHour);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0].first.sender_id, "a");
  EXPECT_EQ(both[0].second.sender_id, "b");
  EXPECT_EQ(both[1].first.sender_id, "b");
  const auto none = tmo::context_pairs(tmo::fixtures::single_slice({event("a", "U", 0), event("b", "U", 5 * tmo::kHour)}),
                                       4 * tmo::kHour);
  EXPECT_TRUE(none.empty());
  // the boundary |dt| == m is inside the window
  EXPECT_EQ(tmo::context_pairs(tmo::fixtures::single_slice({event("a", "U", 0), event("b", "U", 4 * tmo::kHour)}),
                               4 * tmo::kHour)
                .size(),
            2u);
}

TEST(ContextPairs, MatchesDoubleLoopOracle) {
  tmo::SplitMix64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<tmo::Timestamp> times(20);
    for (auto& t : times) t = static_cast<tmo::Timestamp>(rng.below(48 * tmo::kHour));
    std::sort(times.begin(), times.end());
    const tmo::Seconds m = static_cast<tmo::Seconds>(rng.below(12 * tmo::kHour));
    std::set<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t i = 0; i < times.size(); ++i)
      for (std::size_t j = 0; j < times.size(); ++j)
        if (i != j && std::llabs(times[i] - times[j]) <= m) expected.emplace(i, j);
    const auto got = tmo::context_pair_indices(times, m);
    EXPECT_EQ(got.size(), expected.size());
    EXPECT_EQ(std::set(got.begin(), got.end()), expected);
  }
}

TEST(NegativeSampling, SingleTokenAndFrequencies) {
  tmo::SplitMix64 rng(1);
  const auto one = tmo::negative_sample(rng, std::vector<std::size_t>{7}, 0.75, 5);
  EXPECT_EQ(one, (std::vector<std::size_t>(5, 0)));

  const auto draws = tmo::negative_sample(rng, std::vector<std::size_t>{8, 1}, 1.0, 100000);
  const double zeros = static_cast<double>(std::count(draws.begin(), draws.end(), 0u)) / 100000.0;
  EXPECT_NEAR(zeros, 8.0 / 9.0, 0.01);

  const auto smoothed = tmo::negative_sample(rng, std::vector<std::size_t>{16, 1}, 0.75, 200000);
  const double a = static_cast<double>(std::count(smoothed.begin(), smoothed.end(), 0u));
  const double ratio = a / (200000.0 - a);
  EXPECT_NEAR(ratio, 8.0, 8.0 * 0.02);

  const tmo::NegativeSampler sampler(std::vector<std::size_t>{16, 1}, 0.75);
  EXPECT_NEAR(sampler.probability(0), 8.0 / 9.0, 1e-12);
  EXPECT_THROW(tmo::NegativeSampler(std::vector<std::size_t>{}, 0.75), tmo::Error);
}

TEST(SgnsLoss, ClosedFormCases) {
  const std::vector<double> zero(4, 0.0);
  EXPECT_NEAR(tmo::sgns_pair_loss(zero, zero, {}), std::log(2.0), 1e-15);
  const std::vector<double> y = {30, 0}, c = {30, 0}, n = {-30, 0};
  const std::vector<std::vector<double>> negs = {n};
  EXPECT_LT(tmo::sgns_pair_loss(y, c, spans(negs)), 1e-10);
  // fully wrong: clamped at -log(1e-12) per term
  const std::vector<double> bad = {-30, 0};
  EXPECT_NEAR(tmo::sgns_pair_loss(y, bad, {}), -std::log(1e-12), 1e-9);
}

TEST(SgnsLoss, GradientMatchesCentralDifferences) {
  tmo::SplitMix64 rng(123);
  const std::size_t d = 8;
  const double h = 1e-6;
  for (int trial = 0; trial < 25; ++trial) {
    auto vec = [&] {
      std::vector<double> v(d);
      for (auto& x : v) x = 0.5 * rng.normal();
      return v;
    };
    std::vector<double> y = vec(), c = vec();
    std::vector<std::vector<double>> negs = {vec(), vec(), vec()};
    const auto g = tmo::sgns_pair_gradient(y, c, spans(negs));
    auto fd = [&](std::vector<double>& target, std::size_t i) {
      const double keep = target[i];
      target[i] = keep + h;
      const double up = tmo::sgns_pair_loss(y, c, spans(negs));
      target[i] = keep - h;
      const double down = tmo::sgns_pair_loss(y, c, spans(negs));
      target[i] = keep;
      return (up - down) / (2 * h);
    };
    std::vector<double> analytic, numeric;
    for (std::size_t i = 0; i < d; ++i) analytic.push_back(g.d_activity[i]), numeric.push_back(fd(y, i));
    for (std::size_t i = 0; i < d; ++i) analytic.push_back(g.d_context[i]), numeric.push_back(fd(c, i));
    for (std::size_t k = 0; k < negs.size(); ++k)
      for (std::size_t i = 0; i < d; ++i) analytic.push_back(g.d_negatives[k][i]), numeric.push_back(fd(negs[k], i));
    double num = 0, den = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      num += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      den += numeric[i] * numeric[i];
    }
    EXPECT_LE(std::sqrt(num / den), 1e-4);
  }
}

TEST(SgnsConfig, ValidationListsEveryProblem) {
  tmo::SgnsConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dim = 0;
  c.epochs = 0;
  c.alpha = 1.5;
  try {
    c.validate();
    FAIL();
  } catch (const tmo::Error& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("dim"), std::string::npos);
    EXPECT_NE(m.find("epochs"), std::string::npos);
    EXPECT_NE(m.find("alpha"), std::string::npos);
  }
}

TEST(TrainSlice, SinglePairIncreasesScore) {
  tmo::SgnsConfig c;
  c.dim = 8;
  c.epochs = 1;
  c.subsample = 0;
  const auto slice = tmo::fixtures::single_slice({event("a", "U", 0), event("b", "U", 60)});
  const auto e = tmo::train_slice(slice, c);
  // context vectors start at zero, so the initial score is exactly 0
  const double score = e.activity.row(0).dot(e.context.row(1));
  EXPECT_GT(score, 0.0);
}

TEST(TrainSlice, PlantedCommunitiesDeterminismAndLoss) {
  const auto events = tmo::fixtures::two_communities(1500, 4, 5);
  const auto slice = tmo::fixtures::single_slice(events);
  tmo::SgnsConfig c;
  c.dim = 32;
  c.subsample = 0;
  const auto e = tmo::train_slice(slice, c);
  ASSERT_EQ(e.vocab.size(), 8u);
  EXPECT_TRUE(e.activity.allFinite());
  EXPECT_TRUE(e.context.allFinite());
  EXPECT_LT(e.epoch_loss.back(), e.epoch_loss.front());

  const auto a0 = *e.vocab.find({0, "A0", "Alpha"});
  const auto a1 = *e.vocab.find({0, "A1", "Alpha"});
  const auto b0 = *e.vocab.find({0, "B0", "Beta"});
  EXPECT_GT(cosine(e.activity, a0, a1), cosine(e.activity, a0, b0));

  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  for (std::size_t i = 0; i < e.vocab.size(); ++i)
    for (std::size_t j = i + 1; j < e.vocab.size(); ++j) {
      const bool same = e.vocab.tokens[i].subsystem == e.vocab.tokens[j].subsystem;
      (same ? intra : inter) += cosine(e.activity, i, j);
      ++(same ? ni : nx);
    }
  EXPECT_GT(intra / ni, inter / nx);

  const auto again = tmo::train_slice(slice, c);
  EXPECT_EQ(again.activity, e.activity);
  EXPECT_EQ(again.context, e.context);
  EXPECT_EQ(again.vocab.tokens, e.vocab.tokens);
  EXPECT_EQ(again.seed, tmo::slice_seed(c, 1));
}

TEST(TrainSlice, VocabularyFirstAppearanceOrderAndEmptySlice) {
  const auto slice = tmo::fixtures::single_slice({event("z", "U", 0), event("a", "U", 10), event("z", "U", 20)});
  const auto vocab = tmo::build_vocabulary(slice);
  ASSERT_EQ(vocab.size(), 2u);
  EXPECT_EQ(vocab.tokens[0].sender_id, "z");
  EXPECT_EQ(vocab.counts[0], 2u);
  tmo::TimeSlice empty;
  empty.index = 4;
  EXPECT_THROW(tmo::train_slice(empty, tmo::SgnsConfig{}), tmo::Error);
}

TEST(Tune, BudgetOneAndSinglePointSpace) {
  const auto slice = tmo::fixtures::single_slice(tmo::fixtures::two_communities(300, 3, 8));
  const std::vector<tmo::TimeSlice> slices = {slice};
  tmo::SgnsConfig base;
  base.dim = 16;
  base.subsample = 0;
  const tmo::SearchSpace space{{0.01, 0.05}, {2, 5}, {tmo::kHour, 4 * tmo::kHour}, {1, 3}};
  const auto one = tmo::tune_hyperparameters(slices, space, 1, 4, base);
  ASSERT_EQ(one.trials.size(), 1u);
  EXPECT_EQ(one.best.learning_rate, one.trials[0].config.learning_rate);
  EXPECT_EQ(one.best.negatives, one.trials[0].config.negatives);
  EXPECT_EQ(one.best.window, one.trials[0].config.window);
  EXPECT_EQ(one.best.epochs, one.trials[0].config.epochs);

  const tmo::SearchSpace point{{0.02}, {4}, {2 * tmo::kHour}, {2}};
  const auto fixed = tmo::tune_hyperparameters(slices, point, 3, 4, base);
  EXPECT_EQ(fixed.best.learning_rate, 0.02);
  EXPECT_EQ(fixed.best.negatives, 4u);
  EXPECT_EQ(fixed.best.window, 2 * tmo::kHour);
  EXPECT_EQ(fixed.best.epochs, 2u);

  EXPECT_THROW(tmo::tune_hyperparameters(slices, space, 0, 4, base), tmo::Error);
  EXPECT_THROW(tmo::tune_hyperparameters(slices, tmo::SearchSpace{}, 1, 4, base), tmo::Error);
}

TEST(Tune, BestBeatsLowerBoundsOnPlantedCommunities) {
  const auto slice = tmo::fixtures::single_slice(tmo::fixtures::two_communities(800, 4, 9));
  const std::vector<tmo::TimeSlice> slices = {slice};
  tmo::SgnsConfig base;
  base.dim = 16;
  base.subsample = 0;
  const tmo::SearchSpace space{{0.005, 0.025, 0.05}, {2, 5}, {tmo::kHour, 4 * tmo::kHour}, {1, 3, 5}};
  const auto result = tmo::tune_hyperparameters(slices, space, 20, 11, base);
  const auto lower = space.lower_bounds(base);
  const double lower_objective = tmo::holdout_objective(slices, lower, tmo::derive_seed(11, 0xE7A1));
  EXPECT_GE(result.objective, lower_objective);
  const auto again = tmo::tune_hyperparameters(slices, space, 20, 11, base);
  EXPECT_EQ(again.objective, result.objective);
}

TEST(EmbeddingSetIo, RoundTripIsExact) {
  tmo::testing::TempDir dir;
  auto events = tmo::fixtures::two_communities(400, 3, 2);
  auto late = tmo::fixtures::two_communities(300, 3, 3, 1672876800 + 2 * tmo::kWeek);
  events.insert(events.end(), late.begin(), late.end());
  const auto slices = tmo::slice_events(events, tmo::kWeek);
  ASSERT_EQ(slices.size(), 3u);
  ASSERT_TRUE(slices[1].empty());
  tmo::SgnsConfig c;
  c.dim = 6;
  c.epochs = 2;
  tmo::EmbeddingSet set;
  set.config = c;
  set.slice_len = tmo::kWeek;
  set.embeddings = tmo::train_slices(slices, c);
  set.activity_names = {"Code Contribution"};
  for (const auto& s : slices) {
    set.slices.push_back({s.index, s.start, s.end, s.events.size(), s.empty(),
                          s.empty() ? "" : "slice_" + std::to_string(s.index) + ".csv"});
  }
  tmo::write_embedding_set(dir.path().string(), set);
  const auto back = tmo::read_embedding_set(dir.path().string());
  ASSERT_EQ(back.embeddings.size(), 2u);
  ASSERT_EQ(back.slices.size(), 3u);
  EXPECT_TRUE(back.slices[1].empty);
  EXPECT_EQ(back.slice_len, tmo::kWeek);
  EXPECT_EQ(back.activity_names, set.activity_names);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.embeddings[i].slice_index, set.embeddings[i].slice_index);
    EXPECT_EQ(back.embeddings[i].vocab.tokens, set.embeddings[i].vocab.tokens);
    EXPECT_EQ(back.embeddings[i].vocab.counts, set.embeddings[i].vocab.counts);
    EXPECT_EQ(back.embeddings[i].activity, set.embeddings[i].activity);
    EXPECT_EQ(back.embeddings[i].context, set.embeddings[i].context);
  }
  EXPECT_EQ(back.config.dim, 6u);
  EXPECT_EQ(back.config.epochs, 2u);
}

TEST(SgnsConfigJson, RoundTripAndUnknownKey) {
  tmo::SgnsConfig c;
  c.dim = 50;
  c.window = 2 * tmo::kHour;
  c.learning_rate = 0.03;
  c.seed = 99;
  c.granularity = tmo::TokenGranularity::label_subsystem;
  const auto back = tmo::sgns_config_from_json(tmo::sgns_config_to_json(c));
  EXPECT_EQ(back.dim, 50u);
  EXPECT_EQ(back.window, 2 * tmo::kHour);
  EXPECT_EQ(back.learning_rate, 0.03);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.granularity, tmo::TokenGranularity::label_subsystem);
  EXPECT_THROW(tmo::sgns_config_from_json(R"({"dimm": 3})"), tmo::Error);
}
