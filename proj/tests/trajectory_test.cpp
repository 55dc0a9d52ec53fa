#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_support.hpp"
#include "trust_motion/trajectory.hpp"

namespace tmo = trust_motion;
using tmo::Matrix;
using tmo::RowMatrix;
using tmo::Vector;
using tmo::testing::random_normal;
using tmo::testing::random_orthogonal;

namespace {

const tmo::ActivityToken kFocus{0, "George Acosta", "USB"};

tmo::ReferenceSet refs_named(std::initializer_list<const char*> senders) {
  tmo::ReferenceSet set;
  set.name = "maintainers";
  for (const char* s : senders) set.tokens.push_back({std::nullopt, std::string(s), std::nullopt});
  return set;
}

/// Slice with the focus token at row 0 followed by named references.
tmo::SliceEmbeddings slice_with(std::size_t index, const Vector& focus,
                                const std::vector<std::pair<std::string, Vector>>& refs,
                                std::size_t focus_count = 1) {
  std::vector<tmo::ActivityToken> tokens = {kFocus};
  RowMatrix y(static_cast<Eigen::Index>(refs.size() + 1), focus.size());
  y.row(0) = focus.transpose();
  std::vector<std::size_t> counts = {focus_count};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    tokens.push_back({1, refs[i].first, "USB"});
    y.row(static_cast<Eigen::Index>(i + 1)) = refs[i].second.transpose();
    counts.push_back(1);
  }
  return tmo::fixtures::make_slice(index, tokens, y, RowMatrix::Zero(y.rows(), y.cols()), counts);
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::vector<tmo::SliceEmbeddings> random_slices(tmo::SplitMix64& rng, std::size_t n_slices, std::size_t d) {
  const auto tokens = tmo::fixtures::numbered_tokens(15);
  std::vector<tmo::ActivityToken> with_focus = {kFocus};
  with_focus.insert(with_focus.end(), tokens.begin(), tokens.end());
  std::vector<tmo::SliceEmbeddings> out;
  for (std::size_t t = 1; t <= n_slices; ++t) {
    out.push_back(tmo::fixtures::make_slice(t, with_focus, random_normal(16, static_cast<Eigen::Index>(d), rng),
                                            random_normal(16, static_cast<Eigen::Index>(d), rng)));
  }
  return out;
}

}  // namespace

TEST(ReferenceSet, ParsesTriplesObjectsAndWildcards) {
  const auto a = tmo::parse_reference_set(R"([[0, "Greg", "USB"], [null, "Linus", null]])");
  ASSERT_EQ(a.tokens.size(), 2u);
  EXPECT_TRUE(a.contains({0, "Greg", "USB"}));
  EXPECT_FALSE(a.contains({1, "Greg", "USB"}));
  EXPECT_TRUE(a.contains({4, "Linus", "Scheduler"}));
  const auto b = tmo::parse_reference_set(
      R"({"name": "usb", "tokens": [{"label": 2, "sender_id": "Greg", "subsystem": "USB"}, {"subsystem": "USB"}]})");
  EXPECT_EQ(b.name, "usb");
  EXPECT_TRUE(b.contains({9, "anyone", "USB"}));
  EXPECT_THROW(tmo::parse_reference_set("[]"), tmo::Error);
  EXPECT_THROW(tmo::parse_reference_set("[[0, \"x\"]]"), tmo::Error);
  EXPECT_THROW(tmo::parse_reference_set("[[null, null, null]]"), tmo::Error);
  EXPECT_THROW(tmo::parse_reference_set(R"([{"sender": "x"}])"), tmo::Error);
}

TEST(ExtractTrajectory, StaticVectorsHaveZeroDrift) {
  const Vector f = v2(1, 2);
  std::vector<tmo::SliceEmbeddings> s;
  for (std::size_t t = 1; t <= 4; ++t) s.push_back(slice_with(t, f, {{"M", v2(0, 0)}}));
  const auto traj = tmo::extract_trajectory(kFocus, s);
  ASSERT_EQ(traj.drift_series.size(), 3u);
  for (const auto& e : traj.drift_series) EXPECT_EQ(e.value, 0.0);
  for (const auto& e : traj.neighbor_overlap_series) {
    EXPECT_GE(e.value, 0.0);
    EXPECT_LE(e.value, 1.0);
  }
}

TEST(ExtractTrajectory, AbsentSlicesAreSkippedWithGaps) {
  std::vector<tmo::SliceEmbeddings> s = {slice_with(1, v2(0, 0), {{"M", v2(9, 9)}}),
                                         slice_with(2, v2(3, 4), {{"M", v2(9, 9)}}),
                                         tmo::fixtures::make_slice(3, {{1, "M", "USB"}}, RowMatrix::Ones(1, 2),
                                                                   RowMatrix::Zero(1, 2)),
                                         slice_with(4, v2(3, 5), {{"M", v2(9, 9)}})};
  const auto traj = tmo::extract_trajectory(kFocus, s);
  ASSERT_EQ(traj.points.size(), 4u);
  EXPECT_FALSE(traj.points[2].present);
  EXPECT_EQ(traj.present_count(), 3u);
  ASSERT_EQ(traj.drift_series.size(), 2u);
  EXPECT_EQ(traj.drift_series[0].from_slice, 1u);
  EXPECT_EQ(traj.drift_series[0].to_slice, 2u);
  EXPECT_EQ(traj.drift_series[0].gap(), 1u);
  EXPECT_EQ(traj.drift_series[1].from_slice, 2u);
  EXPECT_EQ(traj.drift_series[1].to_slice, 4u);
  EXPECT_EQ(traj.drift_series[1].gap(), 2u);
  EXPECT_DOUBLE_EQ(traj.drift_series[0].value, 5.0);
  EXPECT_DOUBLE_EQ(traj.drift_series[1].value, 1.0);
}

TEST(ExtractTrajectory, DriftMatchesDirectNorms) {
  tmo::SplitMix64 rng(10);
  const auto s = random_slices(rng, 5, 6);
  const auto traj = tmo::extract_trajectory(kFocus, s);
  for (std::size_t t = 0; t + 1 < s.size(); ++t) {
    double sq = 0;
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double diff = s[t + 1].activity(0, j) - s[t].activity(0, j);
      sq += diff * diff;
    }
    EXPECT_NEAR(traj.drift_series[t].value, std::sqrt(sq), 1e-14);
  }
}

TEST(ExtractTrajectory, NeedsTwoSlices) {
  std::vector<tmo::SliceEmbeddings> s = {slice_with(1, v2(0, 0), {{"M", v2(1, 1)}})};
  EXPECT_THROW(tmo::extract_trajectory(kFocus, s), tmo::Error);
}

TEST(ContextShift, StaticIsZeroAndCollinearMotionIsExact) {
  std::vector<tmo::SliceEmbeddings> still;
  for (std::size_t t = 1; t <= 3; ++t) still.push_back(slice_with(t, v2(1, 1), {{"M", v2(0, 0)}, {"N", v2(4, 0)}}));
  for (const auto& e : tmo::context_shift(kFocus, refs_named({"M", "N"}), still)) EXPECT_EQ(e.value, 0.0);

  // token moves from (3,0) to (5,0); the single reference at the origin lies on the line of motion
  std::vector<tmo::SliceEmbeddings> moved = {slice_with(1, v2(3, 0), {{"M", v2(0, 0)}}),
                                             slice_with(2, v2(5, 0), {{"M", v2(0, 0)}})};
  const auto shift = tmo::context_shift(kFocus, refs_named({"M"}), moved);
  ASSERT_EQ(shift.size(), 1u);
  EXPECT_NEAR(shift[0].value, 2.0, 1e-15);
}

TEST(ContextShift, GrowingDisplacementGivesNonDecreasingSeries) {
  std::vector<tmo::SliceEmbeddings> s;
  double x = 1.0;
  for (std::size_t t = 1; t <= 6; ++t) {
    x += static_cast<double>(t);  // step sizes 1, 2, 3, ... away from the references
    s.push_back(slice_with(t, v2(x, 0.5), {{"M", v2(0, 0)}, {"N", v2(-1, 2)}, {"O", v2(-2, -1)}}));
  }
  const auto shift = tmo::context_shift(kFocus, refs_named({"M", "N", "O"}), s);
  ASSERT_EQ(shift.size(), 5u);
  for (std::size_t i = 1; i < shift.size(); ++i) EXPECT_GE(shift[i].value, shift[i - 1].value);
}

TEST(ContextShift, MissingSharedReferenceNamesSlices) {
  std::vector<tmo::SliceEmbeddings> s = {slice_with(3, v2(1, 0), {{"M", v2(0, 0)}}),
                                         slice_with(4, v2(2, 0), {{"N", v2(0, 0)}})};
  try {
    tmo::context_shift(kFocus, refs_named({"M", "N"}), s);
    FAIL();
  } catch (const tmo::Error& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("3"), std::string::npos);
    EXPECT_NE(m.find("4"), std::string::npos);
  }
}

TEST(ContextShift, CentroidCosineMode) {
  std::vector<tmo::SliceEmbeddings> s = {slice_with(1, v2(1, 0), {{"M", v2(1, 0)}}),
                                         slice_with(2, v2(0, 1), {{"M", v2(1, 0)}})};
  const auto shift = tmo::context_shift(kFocus, refs_named({"M"}), s, tmo::ContextShiftMode::centroid_cosine);
  EXPECT_NEAR(shift[0].value, 1.0, 1e-15);
}

TEST(Spearman, PerfectConstantAndOracle) {
  EXPECT_NEAR(tmo::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  EXPECT_EQ(tmo::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}), 0.0);
  const std::vector<double> idx = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  // scipy.stats.spearmanr on the same series
  EXPECT_NEAR(tmo::spearman(std::vector<double>{0.3, 1.7, 1.7, -0.2, 4.4, 2.0, 2.0, 2.0, 0.9, 3.1}, idx),
              0.4923659639173309, 1e-12);
  EXPECT_NEAR(tmo::spearman(std::vector<double>{5.0, 3.2, 4.1, 4.1, 1.0, 0.7, 2.2, 0.1, 0.1, -1}, idx),
              -0.9207488243118473, 1e-12);
  tmo::SplitMix64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(10);
    for (auto& v : x) v = static_cast<double>(rng.below(6));  // plenty of ties
    const double got = tmo::spearman(x, idx);
    const bool constant = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    EXPECT_NEAR(got, constant ? 0.0 : tmo::oracle::spearman(x, idx), 1e-12);
  }
}

TEST(ProximityTrend, ApproachingTokenHasNegativeRho) {
  std::vector<tmo::SliceEmbeddings> s;
  const double dist[] = {3, 2, 1};
  for (std::size_t t = 1; t <= 3; ++t) s.push_back(slice_with(t, v2(dist[t - 1], 0), {{"M", v2(0, 0)}}));
  const auto trend = tmo::proximity_trend(kFocus, refs_named({"M"}), s);
  ASSERT_EQ(trend.series.size(), 3u);
  EXPECT_DOUBLE_EQ(trend.series[0].second, 3.0);
  ASSERT_TRUE(trend.rho.has_value());
  EXPECT_NEAR(*trend.rho, -1.0, 1e-15);
}

TEST(ProximityTrend, ConstantDistancesAndShortSeries) {
  std::vector<tmo::SliceEmbeddings> s;
  for (std::size_t t = 1; t <= 4; ++t) s.push_back(slice_with(t, v2(0, 2), {{"M", v2(0, 0)}}));
  EXPECT_EQ(*tmo::proximity_trend(kFocus, refs_named({"M"}), s).rho, 0.0);
  s.resize(2);
  EXPECT_FALSE(tmo::proximity_trend(kFocus, refs_named({"M"}), s).rho.has_value());
}

TEST(ProximityTrend, MeanAndMinModes) {
  std::vector<tmo::SliceEmbeddings> s = {slice_with(1, v2(0, 0), {{"M", v2(1, 0)}, {"N", v2(0, 3)}})};
  const auto mean = tmo::proximity_trend(kFocus, refs_named({"M", "N"}), s);
  const auto min = tmo::proximity_trend(kFocus, refs_named({"M", "N"}), s, tmo::ProximityMode::min);
  EXPECT_DOUBLE_EQ(mean.series[0].second, 2.0);
  EXPECT_DOUBLE_EQ(min.series[0].second, 1.0);
}

TEST(Classify, RulesAndUnclassified) {
  EXPECT_EQ(tmo::classify_evidence({-0.9, 2.0}).kind, tmo::OperationKind::opportunistic);
  EXPECT_EQ(tmo::classify_evidence({-0.9, 1.0}).kind, tmo::OperationKind::hit_or_miss);
  EXPECT_EQ(tmo::classify_evidence({0.7, 3.0}).kind, tmo::OperationKind::awry);
  EXPECT_EQ(tmo::classify_evidence({0.0, 0.0}).kind, tmo::OperationKind::hit_or_miss);
  EXPECT_EQ(tmo::classify_evidence({std::nullopt, 5.0}).kind, tmo::OperationKind::unclassified);
  tmo::OperationThresholds strict{3.0, -0.95, 0.95};
  EXPECT_EQ(tmo::classify_evidence({-0.9, 2.0}, strict).kind, tmo::OperationKind::hit_or_miss);

  // rho = 0 with uniform activity
  tmo::ProximityTrend flat;
  flat.rho = 0.0;
  const std::vector<double> uniform(8, 3.0);
  EXPECT_EQ(tmo::burstiness_index(uniform), 0.0);
  EXPECT_EQ(tmo::classify_operation(flat, uniform).kind, tmo::OperationKind::hit_or_miss);
}

TEST(Classify, BurstinessAndCounts) {
  // counts (0, 0, 0, 12): mean 3, population variance 27, index 9
  EXPECT_DOUBLE_EQ(tmo::burstiness_index(std::vector<double>{0, 0, 0, 12}), 9.0);
  EXPECT_EQ(tmo::burstiness_index(std::vector<double>{0, 0}), 0.0);
  std::vector<tmo::SliceEmbeddings> s = {slice_with(1, v2(0, 0), {{"M", v2(1, 0)}}, 4),
                                         tmo::fixtures::make_slice(2, {{1, "M", "USB"}}, RowMatrix::Ones(1, 2),
                                                                   RowMatrix::Zero(1, 2)),
                                         slice_with(3, v2(0, 0), {{"M", v2(1, 0)}}, 7)};
  EXPECT_EQ(tmo::token_activity_counts(kFocus, s), (std::vector<double>{4, 0, 7}));
}

TEST(Classify, EvidenceRoundTripReproducesClass) {
  tmo::SplitMix64 rng(3);
  for (int i = 0; i < 200; ++i) {
    tmo::OperationEvidence e;
    if (i % 7 != 0) e.rho = rng.uniform(-1, 1);
    e.burstiness = rng.uniform(0, 4);
    const auto back = tmo::evidence_from_json(tmo::evidence_to_json(e));
    EXPECT_EQ(back.rho, e.rho);
    EXPECT_EQ(back.burstiness, e.burstiness);
    EXPECT_EQ(tmo::classify_evidence(back).kind, tmo::classify_evidence(e).kind);
  }
  EXPECT_EQ(tmo::operation_from_name("hit_or_miss"), tmo::OperationKind::hit_or_miss);
  EXPECT_THROW(tmo::operation_from_name("sneaky"), tmo::Error);
}

TEST(Invariance, GlobalOrthogonalTransformLeavesSeriesUnchanged) {
  tmo::SplitMix64 rng(12);
  const std::size_t d = 10;
  auto slices = random_slices(rng, 6, d);
  const Matrix q = random_orthogonal(static_cast<Eigen::Index>(d), rng);
  auto rotated = slices;
  for (auto& s : rotated) {
    s.activity = s.activity * q;
    s.context = s.context * q;
  }
  tmo::ReferenceSet refs;
  refs.tokens.push_back({1, std::nullopt, std::nullopt});
  const auto a = tmo::extract_trajectory(kFocus, slices);
  const auto b = tmo::extract_trajectory(kFocus, rotated);
  const auto ca = tmo::context_shift(kFocus, refs, slices);
  const auto cb = tmo::context_shift(kFocus, refs, rotated);
  const auto pa = tmo::proximity_trend(kFocus, refs, slices);
  const auto pb = tmo::proximity_trend(kFocus, refs, rotated);
  for (std::size_t i = 0; i < a.drift_series.size(); ++i) {
    EXPECT_LE(std::abs(a.drift_series[i].value - b.drift_series[i].value), 1e-4 * a.drift_series[i].value);
    EXPECT_LE(std::abs(ca[i].value - cb[i].value), 1e-4 * ca[i].value);
    EXPECT_EQ(a.neighbor_overlap_series[i].value, b.neighbor_overlap_series[i].value);
  }
  for (std::size_t i = 0; i < pa.series.size(); ++i)
    EXPECT_LE(std::abs(pa.series[i].second - pb.series[i].second), 1e-4 * pa.series[i].second);
  EXPECT_NEAR(*pa.rho, *pb.rho, 1e-12);
}

TEST(ProjectPca, PlanarCloudPreservesDistances) {
  tmo::SplitMix64 rng(20);
  const Matrix plane = random_normal(30, 2, rng);
  const Matrix basis = random_orthogonal(120, rng).leftCols(2);
  const Matrix x = (plane * basis.transpose()).rowwise() + random_normal(1, 120, rng).row(0);
  const Matrix p = tmo::project_pca(x);
  ASSERT_EQ(p.cols(), 2);
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = 0; j < 30; ++j)
      EXPECT_NEAR((p.row(i) - p.row(j)).norm(), (x.row(i) - x.row(j)).norm(), 1e-8);
}

TEST(ProjectPca, DuplicatesAndSignConvention) {
  tmo::SplitMix64 rng(21);
  Matrix x = random_normal(10, 5, rng);
  Matrix doubled(20, 5);
  doubled << x, x;
  const Matrix p = tmo::project_pca(doubled);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_EQ(p.row(i), p.row(i + 10));
  const Matrix flipped = tmo::project_pca(-doubled);
  // axes are re-signed, so negating the input changes nothing beyond sign
  EXPECT_LT((flipped.cwiseAbs() - p.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(tmo::project_pca(Matrix::Zero(1, 3)), tmo::Error);
}

TEST(ProjectPca, ReconstructionErrorEqualsTrailingSpectrum) {
  tmo::SplitMix64 rng(22);
  const Matrix x = random_normal(40, 7, rng);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix p = tmo::project_pca(x);
  // least-squares reconstruction from the two projected coordinates
  const Matrix axes = p.colPivHouseholderQr().solve(centered);
  const double residual = (centered - p * axes).squaredNorm();
  // eigenvalues of the scatter matrix are the squared singular values
  Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
  const Vector ev = eig.eigenvalues();  // ascending
  const double trailing = ev.head(5).sum();
  EXPECT_NEAR(residual, trailing, 1e-9 * ev.sum());
}

TEST(Tsne, AffinityRowsAreNormalizedAndMatchPerplexity) {
  tmo::SplitMix64 rng(30);
  const Matrix x = random_normal(60, 5, rng);
  const Matrix p = tmo::tsne_conditional_affinities(x, 15.0);
  for (Eigen::Index i = 0; i < 60; ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-10);
    EXPECT_EQ(p(i, i), 0.0);
    double h = 0;
    for (Eigen::Index j = 0; j < 60; ++j)
      if (p(i, j) > 0) h -= p(i, j) * std::log(p(i, j));
    EXPECT_NEAR(h, std::log(15.0), 1e-4);
  }
  EXPECT_THROW(tmo::tsne_conditional_affinities(x, 60.0), tmo::Error);
  EXPECT_THROW(tmo::tsne_conditional_affinities(x, 0.0), tmo::Error);
}

TEST(Tsne, DeterministicWithKlHistory) {
  tmo::SplitMix64 rng(31);
  Matrix x = random_normal(45, 8, rng);
  for (Eigen::Index i = 0; i < 15; ++i) x(i, 0) += 10;
  for (Eigen::Index i = 15; i < 30; ++i) x(i, 1) += 10;
  tmo::TsneConfig c;
  c.perplexity = 10;
  c.iterations = 400;
  const auto a = tmo::project_tsne(x, c);
  const auto b = tmo::project_tsne(x, c);
  EXPECT_EQ(a.embedding, b.embedding);
  ASSERT_EQ(a.kl_history.size(), 8u);
  EXPECT_EQ(a.kl_history.front().first, 50u);
  EXPECT_EQ(a.kl_history.back().first, 400u);
  c.seed = 8;
  EXPECT_NE(tmo::project_tsne(x, c).embedding, a.embedding);
  EXPECT_GE(tmo::oracle::trustworthiness(x, a.embedding, 5), 0.8);
}

TEST(Tsne, SmallInputs) {
  tmo::TsneConfig c;
  c.perplexity = 1.0;
  c.iterations = 100;
  const auto two = tmo::project_tsne(Matrix::Identity(2, 3), c);
  EXPECT_EQ(two.embedding.rows(), 2);
  EXPECT_TRUE(two.embedding.allFinite());
  EXPECT_THROW(tmo::project_tsne(Matrix::Zero(1, 3), c), tmo::Error);
}

TEST(TrustworthinessOracle, MatchesReferenceImplementation) {
  Matrix h(8, 3), l(8, 2);
  // every pairwise distance is distinct, so tie-breaking cannot matter
  h << 0, 0, 0, 1, 0.1, 0, 0, 1.2, 0.3, 0.2, 0, 1.3, 5, 5, 5, 6, 5.1, 5.7, 5.4, 6.2, 5, 5, 5.6, 7.4;
  l << 0, 0, 1, 0.15, 5, 5, 0.1, 1.1, 6, 5.2, 5.3, 6.3, 0.5, 0.7, 7, 7.5;
  // sklearn.manifold.trustworthiness(h, l, n_neighbors=k)
  EXPECT_NEAR(tmo::oracle::trustworthiness(h, l, 2), 0.6111111111111112, 1e-12);
  EXPECT_NEAR(tmo::oracle::trustworthiness(h, l, 3), 0.5972222222222223, 1e-12);
  EXPECT_NEAR(tmo::oracle::trustworthiness(h, h, 2), 1.0, 1e-15);
}

TEST(Export, LabelsRowsAndHeaderOnly) {
  EXPECT_EQ(tmo::point_label("CCGAU", 38), "(CCGAU, 38)");

  std::ostringstream empty;
  tmo::export_trajectories(empty, std::vector<tmo::TrajectoryReport>{}, Matrix(0, 2));
  EXPECT_EQ(empty.str(), "initialism,slice,x,y,drift,context_shift,class,point_label\n");

  std::vector<tmo::SliceEmbeddings> s;
  for (std::size_t t = 25; t <= 38; ++t) s.push_back(slice_with(t, v2(static_cast<double>(t), 0), {{"M", v2(0, 0)}}));
  tmo::TrajectoryReport report;
  report.trajectory = tmo::extract_trajectory(kFocus, s);
  report.trajectory.context_shift_series = tmo::context_shift(kFocus, refs_named({"M"}), s);
  report.initialism = "CCGAU";
  report.operation = tmo::classify_evidence({-0.9, 2.0});
  const std::vector<tmo::TrajectoryReport> reports = {report};
  const Matrix stacked = tmo::stack_present_points(reports);
  ASSERT_EQ(stacked.rows(), 14);
  std::ostringstream out;
  tmo::export_trajectories(out, reports, tmo::project_pca(stacked));
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 15u);
  EXPECT_EQ(lines[1].substr(0, 9), "CCGAU,25,");
  EXPECT_NE(lines[1].find(",,,opportunistic,\"(CCGAU, 25)\""), std::string::npos) << lines[1];
  EXPECT_NE(lines[14].find("opportunistic,\"(CCGAU, 38)\""), std::string::npos) << lines[14];
  EXPECT_NE(lines[14].find(",1,1,"), std::string::npos) << lines[14];  // drift and shift of one unit step
  EXPECT_THROW(tmo::export_trajectories(out, reports, Matrix::Zero(3, 2)), tmo::Error);
}
