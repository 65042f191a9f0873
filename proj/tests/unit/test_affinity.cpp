#include <gtest/gtest.h>

#include <random>

#include "crosstrack/affinity.hpp"
#include "crosstrack/geometry.hpp"

using namespace crosstrack;
using namespace crosstrack::affinity;

namespace {

Detection cam(const BBox2D& b, std::int64_t id = 0) { return Detection::camera(0, b, 0.9, id); }
Detection lid(const BBox3D& b, std::int64_t id = 0) { return Detection::lidar(0, b, 0.9, id); }

ScoreMatrix matrix(const Eigen::MatrixXd& m) {
  std::vector<std::int64_t> rows(m.rows()), cols(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows[i] = i;
  for (Eigen::Index j = 0; j < m.cols(); ++j) cols[j] = j;
  return {m, rows, cols};
}

}  // namespace

TEST(Sgc, Examples) {
  const BBox2D box{10, 10, 50, 40};
  const std::vector<BBox2D> prior{box};
  const std::vector<Detection> dets{cam(box)};
  EXPECT_DOUBLE_EQ(sgc_matrix(std::span<const BBox2D>(prior), dets)(0, 0), 0.0);

  const std::vector<BBox3D> prior3{{0, 0, 10, 4, 2, 1.5, 0}};
  const std::vector<Detection> dets3{lid({3, 0, 14, 4, 2, 1.5, 0})};
  EXPECT_DOUBLE_EQ(sgc_matrix(std::span<const BBox3D>(prior3), dets3)(0, 0), 5.0);
}

TEST(Sgc, MatchesScalarKernel) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> p(0, 200), s(5, 80), q(-20, 20);
  std::vector<BBox2D> prior;
  std::vector<Detection> dets;
  std::vector<BBox3D> prior3;
  std::vector<Detection> dets3;
  for (int i = 0; i < 3; ++i) {
    const double l = p(rng), t = p(rng);
    prior.push_back({l, t, l + s(rng), t + s(rng)});
    prior3.push_back({q(rng), q(rng), q(rng) + 30, 4, 2, 1.5, 0});
  }
  for (int j = 0; j < 4; ++j) {
    const double l = p(rng), t = p(rng);
    dets.push_back(cam({l, t, l + s(rng), t + s(rng)}, 100 + j));
    dets3.push_back(lid({q(rng), q(rng), q(rng) + 30, 4, 2, 1.5, 0}, 200 + j));
  }
  const auto g = sgc_matrix(std::span<const BBox2D>(prior), dets);
  const auto g3 = sgc_matrix(std::span<const BBox3D>(prior3), dets3);
  ASSERT_EQ(g.row_count(), 3);
  ASSERT_EQ(g.col_count(), 4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(g(i, j), 1.0 - geometry::iou_2d(prior[i], *dets[j].box2d));
      EXPECT_EQ(g3(i, j), geometry::centroid_distance_3d(prior3[i], *dets3[j].box3d));
    }
  }
  EXPECT_EQ(g.cols[2], 102);
}

TEST(Sgc, RejectsWrongStream) {
  const std::vector<BBox2D> prior{{0, 0, 1, 1}};
  const std::vector<Detection> dets{lid({0, 0, 10, 1, 1, 1, 0})};
  EXPECT_THROW(sgc_matrix(std::span<const BBox2D>(prior), dets), Error);
}

TEST(Providers, Oracle) {
  OracleProvider oracle;
  Detection a = cam({0, 0, 1, 1});
  Detection b = cam({5, 5, 6, 6});
  EXPECT_EQ(oracle.similarity(a, b), 0.0);  // no truth attached
  a.truth_id = 4;
  b.truth_id = 4;
  EXPECT_EQ(oracle.similarity(a, b), 1.0);
  b.truth_id = 5;
  EXPECT_EQ(oracle.similarity(a, b), 0.0);
}

TEST(Providers, ZeroGivesAllZeroMatrix) {
  ZeroProvider zero;
  const std::vector<Detection> prior{cam({0, 0, 1, 1}), cam({2, 2, 3, 3})};
  const std::vector<Detection> dets{cam({0, 0, 1, 1}), cam({2, 2, 3, 3}), cam({4, 4, 5, 5})};
  const auto s = similarity_matrix(zero, prior, dets);
  EXPECT_EQ(s.values.rows(), 2);
  EXPECT_EQ(s.values.cols(), 3);
  EXPECT_EQ(s.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Providers, EmbeddingCosineEndpoints) {
  EmbeddingCosineProvider p;
  Detection a = cam({0, 0, 1, 1});
  Detection b = cam({0, 0, 1, 1});
  a.embedding = std::vector<double>{1, 0, 0};
  b.embedding = std::vector<double>{1, 0, 0};
  EXPECT_DOUBLE_EQ(p.similarity(a, b), 1.0);
  b.embedding = std::vector<double>{0, 2, 0};
  EXPECT_DOUBLE_EQ(p.similarity(a, b), 0.5);
  b.embedding = std::vector<double>{-3, 0, 0};
  EXPECT_DOUBLE_EQ(p.similarity(a, b), 0.0);

  b.embedding = std::vector<double>{1, 0};
  try {
    p.similarity(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  b.embedding.reset();
  try {
    p.similarity(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingEmbedding);
  }
}

TEST(Providers, FileScores) {
  const auto p = FileScoresProvider::parse("3 camera 7 12 0.8\n\n3 lidar 7 12 0.25\n");
  Detection prior = cam({0, 0, 1, 1}, 7);
  Detection cur = Detection::camera(3, {0, 0, 1, 1}, 0.9, 12);
  EXPECT_DOUBLE_EQ(p.similarity(prior, cur), 0.8);
  cur.det_id = 13;
  EXPECT_DOUBLE_EQ(p.similarity(prior, cur), 0.0);  // missing pair
  Detection lcur = Detection::lidar(3, {0, 0, 10, 1, 1, 1, 0}, 0.9, 12);
  EXPECT_DOUBLE_EQ(p.similarity(prior, lcur), 0.25);

  EXPECT_THROW(FileScoresProvider::parse("3 camera 7 12\n"), Error);
  EXPECT_THROW(FileScoresProvider::parse("3 radar 7 12 0.5\n"), Error);
  EXPECT_THROW(FileScoresProvider::parse("3 camera 7 12 1.5\n"), Error);
}

TEST(Providers, KindNames) {
  for (auto k : {ProviderKind::oracle, ProviderKind::file_scores, ProviderKind::embedding_cosine,
                 ProviderKind::zero}) {
    EXPECT_EQ(parse_provider_kind(to_string(k)), k);
    EXPECT_NE(make_provider(k), nullptr);
  }
  EXPECT_THROW(parse_provider_kind("magic"), Error);
}

TEST(TotalCost, Examples) {
  const auto cfg = default_config();
  Eigen::MatrixXd s(1, 1), g(1, 1);
  s << 0.9;
  g << 0.1;
  EXPECT_NEAR(total_cost(matrix(s), matrix(g), cfg, Stream::camera)(0, 0), 0.2, 1e-12);

  s << 0.2;
  g << 5.0;
  EXPECT_EQ(total_cost(matrix(s), matrix(g), cfg, Stream::lidar)(0, 0), 1000.0);

  s << 0.6;
  g << 1e6;
  const double c = total_cost(matrix(s), matrix(g), cfg, Stream::lidar)(0, 0);
  EXPECT_NEAR(c, 0.4 + 1.0, 1e-12);  // normalised distance clamps at 1

  s << 0.0;
  g << 1.5;
  EXPECT_NEAR(total_cost(matrix(s), matrix(g), cfg, Stream::lidar)(0, 0), 1.5, 1e-12);
}

TEST(TotalCost, ShapeMismatchThrows) {
  const auto cfg = default_config();
  EXPECT_THROW(total_cost(matrix(Eigen::MatrixXd::Zero(2, 2)), matrix(Eigen::MatrixXd::Zero(2, 3)),
                          cfg, Stream::camera),
               Error);
}

TEST(TotalCost, GatingIsExactAndCostsBounded) {
  const auto cfg = default_config();
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0), d(0.0, 8.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::MatrixXd s(5, 6), g2(5, 6), g3(5, 6);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 6; ++j) {
        // Hit the thresholds exactly now and then.
        s(i, j) = trial % 7 == 0 ? cfg.theta_S : u(rng);
        g2(i, j) = trial % 11 == 0 ? cfg.theta_G_2d : u(rng);
        g3(i, j) = trial % 13 == 0 ? cfg.theta_G_3d : d(rng);
      }
    }
    const auto c2 = total_cost(matrix(s), matrix(g2), cfg, Stream::camera);
    const auto c3 = total_cost(matrix(s), matrix(g3), cfg, Stream::lidar);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 6; ++j) {
        const bool gated2 = s(i, j) < cfg.theta_S && g2(i, j) > cfg.theta_G_2d;
        const bool gated3 = s(i, j) < cfg.theta_S && g3(i, j) > cfg.theta_G_3d;
        EXPECT_EQ(c2(i, j) == cfg.sentinel, gated2);
        EXPECT_EQ(c3(i, j) == cfg.sentinel, gated3);
        for (double c : {c2(i, j), c3(i, j)}) {
          EXPECT_TRUE(c == cfg.sentinel || (c >= 0.0 && c <= 2.0));
        }
      }
    }
  }
}

TEST(TotalCost, MonotoneInSimilarity) {
  const auto cfg = default_config();
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0), d(0.0, 8.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::MatrixXd s(1, 1), s2(1, 1), g(1, 1);
    s << u(rng);
    s2 << std::min(1.0, s(0, 0) + u(rng) * 0.5);
    g << d(rng);
    for (auto stream : {Stream::camera, Stream::lidar}) {
      Eigen::MatrixXd gg = g;
      if (stream == Stream::camera) gg(0, 0) = g(0, 0) / 8.0;
      const double lo = total_cost(matrix(s), matrix(gg), cfg, stream)(0, 0);
      const double hi = total_cost(matrix(s2), matrix(gg), cfg, stream)(0, 0);
      if (lo != cfg.sentinel) EXPECT_LE(hi, lo + 1e-15);
    }
  }
}
