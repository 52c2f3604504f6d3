// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <sasa/diffnum/grad_check.hpp>
#include <sasa/structure.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace sasa;
using namespace sasa::diffnum;
using namespace sasa::structure;

namespace {

SegmentBank random_bank(std::size_t M, std::size_t N, std::size_t d, std::mt19937_64 &rng,
                        double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  std::vector<double> v(M * N * d);
  for (auto &x : v) x = g(rng);
  return {Tensor::parameter({M * N, d}, v), M, N};
}

oracle::Mat block(const SegmentBank &b, std::size_t i) {
  oracle::Mat m(b.length, oracle::Vec(b.hidden()));
  for (std::size_t t = 0; t < b.length; ++t)
    for (std::size_t k = 0; k < b.hidden(); ++k) m[t][k] = b.h(i * b.length + t, k);
  return m;
}

oracle::Mat as_mat(const Tensor &t) {
  oracle::Mat m(t.rows(), oracle::Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

} // namespace

TEST(Intra, MatchesOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t M = 3, N = 6, d = 4;
    auto bank = random_bank(M, N, d, rng);
    auto proj = ProjectionParams::init(d, rng);
    auto out = intra_attention(bank, proj);
    ASSERT_EQ(out.alpha.shape(), (Shape{M, N}));
    ASSERT_EQ(out.z.shape(), (Shape{M, d}));
    for (std::size_t i = 0; i < M; ++i) {
      auto ref = oracle::intra(block(bank, i), as_mat(proj.w_query), as_mat(proj.w_key),
                               as_mat(proj.w_value));
      for (std::size_t t = 0; t < N; ++t) EXPECT_NEAR(out.alpha(i, t), ref.alpha[t], 1e-10);
      for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(out.z(i, k), ref.z[k], 1e-10);
    }
  }
}

TEST(Inter, MatchesOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t M = 4, N = 5, d = 3;
    auto bank = random_bank(M, N, d, rng);
    auto proj = ProjectionParams::init(d, rng);
    auto intra = intra_attention(bank, proj);
    auto inter = inter_attention(intra.z_rows, bank);
    ASSERT_EQ(inter.beta.shape(), (Shape{M, (M - 1) * N}));
    for (std::size_t i = 0; i < M; ++i) {
      oracle::Vec zi(d);
      for (std::size_t k = 0; k < d; ++k) zi[k] = intra.z(i, k);
      oracle::Vec scores;
      oracle::Mat rows;
      for (std::size_t j = 0; j < M; ++j) {
        if (j == i) continue;
        auto hj = block(bank, j);
        for (std::size_t t = 0; t < N; ++t) {
          scores.push_back(oracle::cosine(zi, hj[t]));
          rows.push_back(hj[t]);
        }
      }
      auto beta = oracle::simplex_projection(scores);
      oracle::Vec u(d, 0.0);
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t k = 0; k < d; ++k) u[k] += beta[r] * rows[r][k];
      for (std::size_t c = 0; c < beta.size(); ++c) EXPECT_NEAR(inter.beta(i, c), beta[c], 1e-10);
      for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(inter.u(i, k), u[k], 1e-10);
    }
  }
}

TEST(Inter, SingleVariableHasZeroAssociation) {
  std::mt19937_64 rng(3);
  auto bank = random_bank(1, 4, 2, rng);
  auto proj = ProjectionParams::init(2, rng);
  auto intra = intra_attention(bank, proj);
  auto inter = inter_attention(intra.z_rows, bank);
  EXPECT_TRUE(inter.beta_rows.empty());
  for (double v : inter.u.values()) EXPECT_EQ(v, 0.0);
  auto a = aggregate_structure(inter, 1, 4);
  EXPECT_EQ(a.a, std::vector<double>{0.0});
}

TEST(Inter, PermutingVariablesPermutesStructure) {
  std::mt19937_64 rng(4);
  const std::size_t M = 4, N = 3, d = 3;
  auto bank = random_bank(M, N, d, rng);
  auto proj = ProjectionParams::init(d, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<double> pv;
  for (std::size_t i : perm) {
    const Tensor block_i = bank.variable(i);
    auto v = block_i.values();
    pv.insert(pv.end(), v.begin(), v.end());
  }
  SegmentBank permuted{Tensor::constant({M * N, d}, pv), M, N};
  auto a = aggregate_structure(inter_attention(intra_attention(bank, proj).z_rows, bank), M, N);
  auto ap = aggregate_structure(
      inter_attention(intra_attention(permuted, proj).z_rows, permuted), M, N);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) EXPECT_NEAR(ap(i, j), a(perm[i], perm[j]), 1e-12);
}

TEST(Inter, AggregatedRowsAreOnTheSimplex) {
  std::mt19937_64 rng(5);
  auto bank = random_bank(5, 6, 4, rng);
  auto proj = ProjectionParams::init(4, rng);
  auto inter = inter_attention(intra_attention(bank, proj).z_rows, bank);
  auto a = aggregate_structure(inter, 5, 6);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    EXPECT_EQ(a(i, i), 0.0);
    for (std::size_t j = 0; j < 5; ++j) s += a(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Inter, BlockLayoutMapsToSourceVariables) {
  EXPECT_EQ(source_variable(0, 0), 1u);
  EXPECT_EQ(source_variable(2, 1), 1u);
  EXPECT_EQ(source_variable(2, 2), 3u);
  // M=3, N=2: row 1 puts all its mass on block 1 (variable 2), tau 2
  std::vector<double> beta{0.5, 0.5, 0, 0, 0, 0, 0, 1, 0, 0, 0.25, 0.75};
  auto a = aggregate_structure(beta, 3, 2);
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(a(1, 2), 1.0);
  EXPECT_DOUBLE_EQ(a(2, 1), 1.0);
  EXPECT_DOUBLE_EQ(a(2, 0), 0.0);
}

TEST(Intra, AttentionIsOftenSparse) {
  // wide states give spread scores; sparsemax should then cut some lengths
  std::mt19937_64 rng(6);
  int sparse_rows = 0, total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto bank = random_bank(3, 12, 4, rng, 2.0);
    auto proj = ProjectionParams::init(4, rng);
    auto out = intra_attention(bank, proj);
    for (std::size_t i = 0; i < 3; ++i) {
      bool zero = false;
      for (std::size_t t = 0; t < 12; ++t) zero = zero || out.alpha(i, t) == 0.0;
      sparse_rows += zero;
      ++total;
    }
  }
  EXPECT_GE(sparse_rows * 2, total);
}

TEST(Representation, LayoutAndShapes) {
  auto z0 = Tensor::constant({1, 2}, {1, 2}), z1 = Tensor::constant({1, 2}, {3, 4});
  auto u0 = Tensor::constant({1, 2}, {5, 6}), u1 = Tensor::constant({1, 2}, {7, 8});
  auto r = build_representation({z0, z1}, {u0, u1});
  EXPECT_EQ(r.per_variable.shape(), (Shape{2, 4}));
  EXPECT_EQ(r.flat.shape(), (Shape{1, 8}));
  EXPECT_EQ(std::vector<double>(r.flat.values().begin(), r.flat.values().end()),
            (std::vector<double>{1, 2, 5, 6, 3, 4, 7, 8}));
  EXPECT_THROW(build_representation({z0}, {u0, u1}), InvalidInput);
}

TEST(StructureGrad, AttentionChainPassesGradCheck) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto bank = random_bank(3, 3, 2, rng);
    auto proj = ProjectionParams::init(2, rng);
    auto f = [&] {
      auto intra = intra_attention(bank, proj);
      auto inter = inter_attention(intra.z_rows, bank);
      auto rep = build_representation(intra.z_rows, inter.u_rows);
      return sum(mul(rep.flat, rep.flat));
    };
    auto params = proj.tensors();
    params.push_back(bank.h);
    EXPECT_LT(grad_check(f, params).max_rel_error, 1e-4);
  }
}
