#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"
#include "trust_motion/clustering.hpp"
#include "trust_motion/factor_analysis.hpp"

namespace tmo = trust_motion;
using tmo::Matrix;

TEST(KMeans, DistinctPointsEachOwnCluster) {
  Matrix p(4, 2);
  p << 0, 0, 5, 0, 0, 5, 5, 5;
  const auto r = tmo::kmeans(p, 4, 1, 10);
  EXPECT_NEAR(r.model.inertia, 0.0, 1e-15);
  std::vector<std::size_t> a = r.assignments;
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(KMeans, SingleClusterIsTheMean) {
  tmo::SplitMix64 rng(3);
  const Matrix p = tmo::testing::random_normal(30, 3, rng);
  const auto r = tmo::kmeans(p, 1, 9, 5);
  const Eigen::RowVectorXd mean = p.colwise().mean();
  EXPECT_LT((r.model.centroids.row(0) - mean).norm(), 1e-12);
  const double total = (p.rowwise() - mean).squaredNorm();
  EXPECT_NEAR(r.model.inertia, total, 1e-10);
}

TEST(KMeans, MatchesExhaustiveOptimumOnTwelvePoints) {
  tmo::SplitMix64 rng(12);
  const Matrix p = tmo::testing::random_normal(12, 2, rng);
  const double optimum = tmo::oracle::exhaustive_kmeans_optimum(p, 3);
  const auto r = tmo::kmeans(p, 3, 5, 50);
  EXPECT_NEAR(r.model.inertia, optimum, 1e-9 * optimum);
}

TEST(KMeans, InvariantsAndDeterminism) {
  tmo::SplitMix64 rng(44);
  Matrix p = tmo::testing::random_normal(200, 4, rng);
  for (Eigen::Index i = 0; i < 100; ++i) p(i, 0) += 6.0;
  const auto a = tmo::kmeans(p, 4, 77, 10);
  const auto b = tmo::kmeans(p, 4, 77, 10);
  EXPECT_EQ(a.model.centroids, b.model.centroids);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.model.seed, 77u);
  // nearest-centroid optimality of the final assignment
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    EXPECT_EQ(a.assignments[i], tmo::nearest_centroid(a.model.centroids, p.row(i).transpose()));
  }
  EXPECT_NEAR(tmo::inertia(p, a.model.centroids, a.assignments), a.model.inertia, 1e-9);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-12);
  }
}

TEST(KMeans, PermutingRowsPermutesAssignments) {
  tmo::SplitMix64 rng(46);
  Matrix p = tmo::testing::random_normal(60, 2, rng);
  for (Eigen::Index i = 0; i < 30; ++i) p(i, 1) += 8.0;
  const auto base = tmo::kmeans(p, 2, 3, 20);
  std::vector<Eigen::Index> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  tmo::shuffle(std::span(perm), rng);
  Matrix q(60, 2);
  for (Eigen::Index i = 0; i < 60; ++i) q.row(i) = p.row(perm[i]);
  const auto permuted = tmo::kmeans(q, 2, 3, 20);
  EXPECT_NEAR(permuted.model.inertia, base.model.inertia, 1e-9);
  // same partition: co-membership agrees for every pair
  for (Eigen::Index i = 0; i < 60; ++i)
    for (Eigen::Index j = 0; j < 60; ++j)
      EXPECT_EQ(permuted.assignments[i] == permuted.assignments[j],
                base.assignments[perm[i]] == base.assignments[perm[j]]);
}

TEST(KMeans, Errors) {
  EXPECT_THROW(tmo::kmeans(Matrix::Zero(2, 2), 3, 1), tmo::Error);
  EXPECT_THROW(tmo::kmeans(Matrix::Zero(2, 2), 0, 1), tmo::Error);
  Matrix bad = Matrix::Zero(3, 2);
  bad(1, 1) = NAN;
  EXPECT_THROW(tmo::kmeans(bad, 1, 1), tmo::Error);
}

TEST(NameClusters, DominantFactorAndTies) {
  tmo::ClusterModel model;
  model.k = 3;
  model.centroids.resize(3, 5);
  model.centroids << 0.84, 0.01, 0.01, 0.20, 0.26,  //
      0.1, 0.5, 0.5, 0.0, 0.0,                      //
      -1, -1, -1, -1, 0.3;
  const auto names = tmo::name_clusters(model, tmo::default_factor_names(5));
  EXPECT_EQ(names[0], "Y_0 (Code Contribution)");
  EXPECT_EQ(names[1], "Y_1 (Knowledge Sharing)");
  EXPECT_EQ(names[2], "Y_2 (Acknowledgment)");
  EXPECT_EQ(tmo::activity_of(names[0]), "Code Contribution");
  EXPECT_EQ(tmo::activity_of("Y_3"), "Y_3");

  tmo::ClusterModel one;
  one.k = 1;
  one.centroids = Matrix::Zero(1, 2);
  EXPECT_EQ(tmo::name_clusters(one, std::vector<std::string>{"A", "B"}),
            (std::vector<std::string>{"Y_0 (A)"}));
}

TEST(LabelEvents, TableTwoRowEmittedVerbatim) {
  Matrix scores(1, 5);
  scores << 0.83758650, 0.00918697, 0.00502759, 0.19685837, 0.25811192;
  const std::vector<tmo::EventMeta> meta = {{"r1", "0", "USB", tmo::parse_timestamp("2020-08-20 09:35:52")}};
  const auto rows = tmo::label_events(scores, std::vector<std::size_t>{0}, meta);
  std::ostringstream out;
  tmo::write_labeled_csv(out, tmo::default_factor_names(5), rows);
  EXPECT_EQ(out.str(),
            "sender_id,sent_time,Code Contribution,Knowledge Sharing,Patch Posting,Progress Control,"
            "Acknowledgment,label\n"
            "0,2020-08-20 09:35:52,0.83758650,0.00918697,0.00502759,0.19685837,0.25811192,Y_0\n");
}

TEST(LabelEvents, StableSortAndEmptyAndMismatch) {
  Matrix scores(3, 1);
  scores << 1, 2, 3;
  const std::vector<tmo::EventMeta> meta = {{"a", "s", "U", 50}, {"b", "s", "U", 10}, {"c", "s", "U", 50}};
  const auto rows = tmo::label_events(scores, std::vector<std::size_t>{0, 1, 2}, meta);
  EXPECT_EQ(rows[0].record_id, "b");
  EXPECT_EQ(rows[1].record_id, "a");
  EXPECT_EQ(rows[2].record_id, "c");
  EXPECT_TRUE(tmo::label_events(Matrix(0, 1), std::vector<std::size_t>{}, std::vector<tmo::EventMeta>{}).empty());
  EXPECT_THROW(tmo::label_events(scores, std::vector<std::size_t>{0}, meta), tmo::Error);
}

TEST(ReadLabeled, RoundTripWithMeta) {
  Matrix scores(2, 2);
  scores << 0.5, -0.25, 1.125, 2.0;
  const std::vector<tmo::EventMeta> meta = {{"a", "GA", "USB", 100}, {"b", "AR", "Networking", 200}};
  const auto rows = tmo::label_events(scores, std::vector<std::size_t>{1, 0}, meta);
  const std::vector<std::string> factors = {"F1", "F2"};
  const std::vector<std::string> cluster_names = {"Y_0 (F1)", "Y_1 (F2)"};
  std::stringstream labeled, side;
  tmo::write_labeled_csv(labeled, factors, rows);
  tmo::write_labeled_meta_csv(side, rows, cluster_names);
  const auto back = tmo::read_labeled(labeled, &side);
  EXPECT_EQ(back.factor_names, factors);
  EXPECT_EQ(back.rows, rows);
  EXPECT_EQ(back.activity_names, (std::vector<std::string>{"F1", "F2"}));
}

TEST(ReadLabeled, RejectsUnsortedAndBadLabels) {
  std::istringstream unsorted("sender_id,sent_time,F,label\na,2020-01-02,1,Y_0\nb,2020-01-01,1,Y_0\n");
  EXPECT_THROW(tmo::read_labeled(unsorted), tmo::Error);
  std::istringstream bad("sender_id,sent_time,F,label\na,2020-01-02,1,cluster0\n");
  EXPECT_THROW(tmo::read_labeled(bad), tmo::Error);
  std::istringstream wrong("sender,time,F,label\n");
  EXPECT_THROW(tmo::read_labeled(wrong), tmo::Error);
}
