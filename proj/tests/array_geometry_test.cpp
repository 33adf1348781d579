#include "swapbound/array_geometry.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>

using namespace swapbound;

TEST(Steering, KnownValues) {
  const VectorXcd a = steering_vector(ElementPositions({0, 1, 2}), 0.0);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(a(i) - cd(1.0, 0.0)), 0.0, 1e-15);

  const VectorXcd b = steering_vector(ElementPositions({0, 1}), kPi);
  EXPECT_NEAR(std::abs(b(0) - cd(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b(1) - cd(-1.0, 0.0)), 0.0, 1e-15);

  const VectorXcd c = steering_vector(ElementPositions({0, 2, 5}), kPi / 4);
  const double phases[] = {0.0, kPi / 2, 5 * kPi / 4};
  for (Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(c(i)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(c(i) - std::polar(1.0, phases[i])), 0.0, 1e-14);
  }
}

TEST(Steering, DerivativeMatchesFiniteDifference) {
  const auto pos = ElementPositions::dense(9);
  const double h = 1e-6;
  const VectorXcd fd = (steering_vector(pos, 0.3 + h) - steering_vector(pos, 0.3 - h)) / (2 * h);
  EXPECT_LT((fd - steering_derivative(pos, 0.3)).norm(), 1e-7);
}

TEST(Positions, Validation) {
  EXPECT_THROW(ElementPositions({1, 2}), ValidationError);
  EXPECT_THROW(ElementPositions({0, 2, 2}), ValidationError);
  EXPECT_THROW(ElementPositions(std::vector<int>{}), ValidationError);
  EXPECT_NO_THROW(ElementPositions({0, 3, 7}));
}

TEST(Coprime, PaperGeometries) {
  const auto a = coprime_positions(11, 9);
  EXPECT_EQ(a.size(), 28);
  EXPECT_EQ(a.values().back(), 187);
  const auto b = coprime_positions(5, 4);
  EXPECT_EQ(b.size(), 12);
  EXPECT_EQ(b.values().back(), 35);
  const auto c = coprime_positions(1, 1);
  EXPECT_EQ(c.values(), (std::vector<int>{0, 1}));
}

TEST(Coprime, EitherOrderAndGcdCheck) {
  EXPECT_EQ(coprime_positions(9, 11).size(), 9 + 2 * 11 - 1);
  EXPECT_THROW(coprime_positions(4, 6), ValidationError);
  EXPECT_THROW(coprime_positions(0, 3), ValidationError);
}

TEST(Coprime, CardinalityBruteForce) {
  for (int m1 = 1; m1 <= 13; ++m1)
    for (int m2 = 1; m2 <= 13; ++m2) {
      if (std::gcd(m1, m2) != 1) continue;
      std::set<int> s;
      for (int k = 0; k < 2 * m2; ++k) s.insert(k * m1);
      for (int k = 0; k < m1; ++k) s.insert(k * m2);
      const auto pos = coprime_positions(m1, m2);
      EXPECT_EQ(static_cast<std::size_t>(pos.size()), s.size()) << m1 << "," << m2;
      EXPECT_EQ(pos.size(), m1 + 2 * m2 - 1) << m1 << "," << m2;
      EXPECT_EQ(std::vector<int>(s.begin(), s.end()), pos.values());
    }
}

TEST(Selection, DenseIsIdentity) {
  const auto op = selection_compressor(ElementPositions::dense(7), 7);
  EXPECT_TRUE(op.matrix.isApprox(MatrixXcd::Identity(7, 7)));
  EXPECT_EQ(op.kind, CompressionKind::selection);
}

TEST(Selection, PaperCompressors) {
  const auto a = selection_compressor(coprime_positions(5, 4), 36);
  EXPECT_EQ(a.rows(), 12);
  EXPECT_EQ(a.cols(), 36);
  EXPECT_NEAR(a.compression_ratio(), 3.0, 1e-15);
  const auto b = selection_compressor(coprime_positions(11, 9), 188);
  EXPECT_EQ(b.rows(), 28);
  EXPECT_NEAR(b.compression_ratio(), 188.0 / 28.0, 1e-12);
  EXPECT_THROW(selection_compressor(coprime_positions(5, 4), 30), ValidationError);
}

TEST(Selection, KeepsSelectedEntries) {
  const auto pos = coprime_positions(5, 4);
  const auto op = selection_compressor(pos, 36);
  const VectorXcd y = VectorXcd::LinSpaced(36, cd(0.0, 1.0), cd(35.0, -2.0));
  const VectorXcd w = op.matrix * y;
  for (Index i = 0; i < op.rows(); ++i) EXPECT_EQ(w(i), y(pos[static_cast<std::size_t>(i)]));
}

TEST(RandomCompressor, Orthonormal) {
  const auto sq = random_whitened_compressor(4, 4, 3);
  EXPECT_LT((sq.matrix * sq.matrix.adjoint() - MatrixXcd::Identity(4, 4)).norm(), 1e-10);
  EXPECT_LT((sq.matrix.adjoint() * sq.matrix - MatrixXcd::Identity(4, 4)).norm(), 1e-10);
  const auto w = random_whitened_compressor(2, 8, 9);
  EXPECT_LT(orthonormality_defect(w.matrix), 1e-10);
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_LT(orthonormality_defect(random_whitened_compressor(5, 16, seed).matrix), 1e-10);
}

TEST(RandomCompressor, SeedsDifferAndRepeat) {
  const auto a = random_whitened_compressor(3, 8, 1);
  const auto b = random_whitened_compressor(3, 8, 2);
  EXPECT_GT((a.matrix - b.matrix).norm(), 1e-6);
  EXPECT_EQ(a.matrix, random_whitened_compressor(3, 8, 1).matrix);
  EXPECT_THROW(random_whitened_compressor(9, 8, 1), ValidationError);
}

TEST(Json, RoundTrip) {
  const auto op = selection_compressor(coprime_positions(5, 4), 36);
  nlohmann::json j = op;
  const auto back = j.get<CompressionOperator>();
  EXPECT_EQ(back.matrix, op.matrix);
  EXPECT_EQ(back.kind, op.kind);
  ASSERT_TRUE(back.source_positions.has_value());
  EXPECT_EQ(*back.source_positions, coprime_positions(5, 4));

  const auto r = random_whitened_compressor(3, 6, 5);
  nlohmann::json jr = r;
  EXPECT_LT((jr.get<CompressionOperator>().matrix - r.matrix).norm(), 1e-15);
}

TEST(Json, RejectsNonOrthonormal) {
  auto op = identity_compressor(3);
  op.matrix(0, 0) = 2.0;
  nlohmann::json j = op;
  EXPECT_THROW(j.get<CompressionOperator>(), ValidationError);
}
