// SPDX-License-Identifier: Apache-2.0
#include <sasa/synthdata.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace sasa;
using namespace sasa::synth;

namespace {

CausalGraphSpec chain(double w, double child_noise) {
  CausalGraphSpec g;
  g.variables = 2;
  g.edges = {{0, 1, w, 1}};
  g.child_noise_std = child_noise;
  g.label.variables = {1};
  g.label.weights = {1.0};
  return g;
}

} // namespace

TEST(Synth, DeterministicChain) {
  auto g = chain(0.7, 0.0);
  auto data = generate(g, {0, 0, 0, 1.0}, 5, 12, 3);
  for (const auto &s : data) {
    for (std::size_t t = 1; t < 12; ++t) {
      EXPECT_DOUBLE_EQ(s.at(1, t), 0.7 * s.at(0, t - 1));
    }
  }
}

TEST(Synth, LagShiftDelaysResponses) {
  auto g = default_benchmark_graph();
  g.label.horizon = 0;
  const std::size_t N = 24;
  DomainSpec src{0, 3, 3, 1.0}, tgt{2, 3, 3, 1.0};
  auto a = simulate(g, src, 20, N, 8);
  auto b = simulate(g, tgt, 20, N, 8);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto o = static_cast<std::size_t>(a[k].offset);
    ASSERT_EQ(o, static_cast<std::size_t>(b[k].offset));
    for (std::size_t i = 0; i < g.variables; ++i) {
      for (std::size_t t = o; t < N; ++t) {
        if (g.is_root(i)) {
          // shared innovations and no parents: identical drivers
          EXPECT_DOUBLE_EQ(a[k].at(i, t), b[k].at(i, t));
          continue;
        }
        // rebuild each child from its own domain's lags
        auto expect = [&](const Trajectory &tr, int shift) {
          double s = 0.0;
          for (const auto &e : g.edges) {
            if (e.child != i) continue;
            const int lag = e.base_lag + shift;
            if (static_cast<int>(t) >= lag) s += e.weight * tr.at(e.parent, t - lag);
          }
          return s;
        };
        const double na = a[k].at(i, t) - expect(a[k], 0);
        const double nb = b[k].at(i, t) - expect(b[k], 2);
        EXPECT_NEAR(na, nb, 1e-12); // same innovation, different lag
      }
    }
  }
}

TEST(Synth, NullGraphGivesIndependentNoise) {
  auto g = default_benchmark_graph();
  for (auto &e : g.edges) e.weight = 0.0;
  auto data = generate(g, default_source_domain(), 200, 24, 4);
  double cross = 0.0, self = 0.0;
  for (const auto &s : data) {
    cross += s.at(4, 23) * s.at(2, 21);
    self += s.at(4, 23) * s.at(4, 23);
  }
  EXPECT_LT(std::abs(cross) / self, 0.2);
}

TEST(Synth, SameSeedSameData) {
  auto g = default_benchmark_graph();
  auto a = generate(g, default_target_domain(), 10, 24, 42, Domain::target);
  auto b = generate(g, default_target_domain(), 10, 24, 42, Domain::target);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].series, b[k].series);
    EXPECT_EQ(a[k].label, b[k].label);
    EXPECT_EQ(a[k].domain, Domain::target);
  }
  auto c = generate(g, default_target_domain(), 10, 24, 43, Domain::target);
  EXPECT_NE(a[0].series, c[0].series);
}

TEST(Synth, DefaultLabelsAreBalanced) {
  auto data = generate(default_benchmark_graph(), default_source_domain(), 1000, 24, 1);
  double pos = 0.0;
  for (const auto &s : data) pos += *s.label;
  EXPECT_GE(pos / 1000.0, 0.3);
  EXPECT_LE(pos / 1000.0, 0.7);
  auto tgt = generate(default_benchmark_graph(), default_target_domain(), 1000, 24, 2);
  pos = 0.0;
  for (const auto &s : tgt) pos += *s.label;
  EXPECT_GE(pos / 1000.0, 0.3);
  EXPECT_LE(pos / 1000.0, 0.7);
}

TEST(Synth, RegressionLabelIsProbability) {
  auto g = default_benchmark_graph();
  g.label.task = Task::regression;
  for (const auto &s : generate(g, default_source_domain(), 20, 24, 1)) {
    EXPECT_GT(*s.label, 0.0);
    EXPECT_LT(*s.label, 1.0);
  }
}

TEST(Synth, InvalidSpecsAreRejected) {
  auto g = default_benchmark_graph();
  // max lag 2 + 2 shift + offset 5 = 9
  EXPECT_THROW(generate(g, default_target_domain(), 1, 9, 0), InvalidInput);
  EXPECT_NO_THROW(generate(g, default_target_domain(), 1, 10, 0));
  auto bad = g;
  bad.edges.push_back({1, 1, 0.5, 1});
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = g;
  bad.edges[0].base_lag = 0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = g;
  bad.noise_std = 0.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = g;
  for (int k = 0; k < 7; ++k) bad.edges.push_back({0, 1, 0.1, 1});
  EXPECT_THROW(bad.validate(), InvalidInput);
  EXPECT_THROW((DomainSpec{-1, 0, 0, 1.0}).validate(g), InvalidInput);
  EXPECT_THROW((DomainSpec{0, 3, 1, 1.0}).validate(g), InvalidInput);
}

TEST(Split, SizesAndDisjointness) {
  auto data = generate(default_benchmark_graph(), default_source_domain(), 10, 24, 1);
  auto [train, test] = split(data, 0.5, 7);
  EXPECT_EQ(train.size(), 5u);
  EXPECT_EQ(test.size(), 5u);
  std::set<std::string> ids;
  for (const auto &s : train) ids.insert(s.id);
  for (const auto &s : test) EXPECT_FALSE(ids.count(s.id));
  for (const auto &s : test) ids.insert(s.id);
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_THROW(split(data, 1.0, 1), InvalidInput);
  EXPECT_THROW(split(data, 0.01, 1), InvalidInput);
}

TEST(Split, StratifiedWithinOneSample) {
  auto data = generate(default_benchmark_graph(), default_source_domain(), 97, 24, 3);
  double pos = 0.0;
  for (const auto &s : data) pos += *s.label;
  const double ratio = pos / 97.0;
  for (double frac : {0.3, 0.5, 0.8}) {
    auto [train, test] = split(data, frac, 11);
    for (const auto *part : {&train, &test}) {
      double p = 0.0;
      for (const auto &s : *part) p += *s.label;
      EXPECT_LE(std::abs(p - ratio * static_cast<double>(part->size())), 1.0);
    }
  }
}
