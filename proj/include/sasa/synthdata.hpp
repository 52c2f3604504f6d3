// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synthdata.hpp
 * @brief  Source/target dataset pairs drawn from one sparse lagged causal
 *         graph, differing only in response lags, offsets and noise level.
 *
 * Every sample starts with an inactive stretch of baseline noise whose length
 * (the offset) is drawn per sample from the domain's offset range. After the
 * offset, root variables follow an AR(1) drive and every other variable is the
 * weighted sum of its parents at their (domain-shifted) lags plus noise.
 */
#pragma once

#include <sasa/sample.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace sasa::synth {

struct Edge {
  std::size_t parent = 0;
  std::size_t child = 0;
  double weight = 0.0;
  int base_lag = 1;
};

/// y from sigma(sum_k w_k x^{v_k}_T + bias), where T is the last observed
/// step plus @c horizon. Classification thresholds at 0.5.
struct LabelRule {
  std::vector<std::size_t> variables;
  std::vector<double> weights;
  double bias = 0.0;
  Task task = Task::classification;
  std::size_t horizon = 0;
};

struct CausalGraphSpec {
  std::size_t variables = 0;
  std::vector<Edge> edges;
  /// Innovation noise of root drivers and of the pre-offset baseline.
  double noise_std = 1.0;
  /// Additive noise on non-root variables; negative means noise_std.
  double child_noise_std = -1.0;
  double root_ar = 0.6;
  LabelRule label;

  double child_noise() const { return child_noise_std < 0 ? noise_std : child_noise_std; }

  int max_base_lag() const {
    int m = 0;
    for (const auto &e : edges) {
      m = std::max(m, e.base_lag);
    }
    return m;
  }

  bool is_root(std::size_t i) const {
    return std::none_of(edges.begin(), edges.end(),
                        [i](const Edge &e) { return e.child == i; });
  }

  bool has_edge(std::size_t parent, std::size_t child) const {
    return std::any_of(edges.begin(), edges.end(), [&](const Edge &e) {
      return e.parent == parent && e.child == child;
    });
  }

  void validate() const {
    if (variables < 1) {
      throw InvalidInput("graph: needs at least one variable");
    }
    if (edges.size() > 2 * variables) {
      throw InvalidInput("graph: at most 2M edges are allowed");
    }
    if (!(noise_std > 0.0) || !std::isfinite(noise_std)) {
      throw InvalidInput("graph: noise_std must be positive");
    }
    if (!std::isfinite(child_noise_std) || !std::isfinite(root_ar)) {
      throw InvalidInput("graph: non-finite noise or AR coefficient");
    }
    for (const auto &e : edges) {
      if (e.parent >= variables || e.child >= variables) {
        throw InvalidInput("graph: edge endpoint out of range");
      }
      if (e.parent == e.child) {
        throw InvalidInput("graph: self-edges are not allowed");
      }
      // Lags of at least one step rule out instantaneous cycles.
      if (e.base_lag < 1) {
        throw InvalidInput("graph: base_lag must be >= 1");
      }
      if (!std::isfinite(e.weight)) {
        throw InvalidInput("graph: non-finite edge weight");
      }
    }
    if (label.variables.size() != label.weights.size() || label.variables.empty()) {
      throw InvalidInput("graph: label rule needs matching variables and weights");
    }
    for (auto v : label.variables) {
      if (v >= variables) {
        throw InvalidInput("graph: label variable out of range");
      }
    }
  }
};

struct DomainSpec {
  int lag_shift = 0;
  int offset_min = 0;
  int offset_max = 0;
  double noise_scale = 1.0;

  void validate(const CausalGraphSpec &g) const {
    if (offset_min < 0 || offset_min > offset_max) {
      throw InvalidInput("domain: offsets must satisfy 0 <= min <= max");
    }
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
      throw InvalidInput("domain: noise_scale must be >= 0");
    }
    for (const auto &e : g.edges) {
      if (e.base_lag + lag_shift < 1) {
        throw InvalidInput("domain: base_lag + lag_shift must be >= 1");
      }
    }
  }

  int max_lag(const CausalGraphSpec &g) const {
    return g.edges.empty() ? 0 : g.max_base_lag() + lag_shift;
  }
};

/// Full simulated trajectory of one sample, including steps past the
/// observed window that the label may look at.
struct Trajectory {
  std::size_t variables = 0;
  std::size_t steps = 0;
  int offset = 0;
  std::vector<double> x; ///< variable-major, variables x steps

  double at(std::size_t i, std::size_t t) const { return x[i * steps + t]; }
};

namespace detail {

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

inline Trajectory simulate(const CausalGraphSpec &g, const DomainSpec &dom,
                           std::size_t steps, std::mt19937_64 &rng) {
  const std::size_t M = g.variables;
  Trajectory tr{M, steps, 0, std::vector<double>(M * steps, 0.0)};
  std::uniform_int_distribution<int> offset(dom.offset_min, dom.offset_max);
  tr.offset = offset(rng);
  // All noise is drawn up front in a fixed order so that domains sharing a
  // seed share their innovations.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eps(M * steps);
  for (auto &e : eps) {
    e = normal(rng);
  }
  const double base_sd = g.noise_std * dom.noise_scale;
  const double child_sd = g.child_noise() * dom.noise_scale;
  std::vector<bool> root(M);
  for (std::size_t i = 0; i < M; ++i) {
    root[i] = g.is_root(i);
  }
  const auto o = static_cast<std::size_t>(tr.offset);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < M; ++i) {
      const double e = eps[i * steps + t];
      double &x = tr.x[i * steps + t];
      if (t < o) {
        x = base_sd * e;
      } else if (root[i]) {
        const double prev = t > 0 ? tr.x[i * steps + t - 1] : 0.0;
        x = g.root_ar * prev + base_sd * e;
      } else {
        double s = 0.0;
        for (const auto &edge : g.edges) {
          if (edge.child != i) {
            continue;
          }
          const auto lag = static_cast<std::size_t>(edge.base_lag + dom.lag_shift);
          if (t >= lag) {
            s += edge.weight * tr.x[edge.parent * steps + t - lag];
          }
        }
        x = s + child_sd * e;
      }
    }
  }
  return tr;
}

} // namespace detail

inline double label_score(const CausalGraphSpec &g, const Trajectory &tr,
                          std::size_t t) {
  double s = g.label.bias;
  for (std::size_t k = 0; k < g.label.variables.size(); ++k) {
    s += g.label.weights[k] * tr.at(g.label.variables[k], t);
  }
  return s;
}

/// Simulates @p n trajectories and returns the observed window of each.
inline std::vector<Trajectory> simulate(const CausalGraphSpec &g,
                                        const DomainSpec &dom, std::size_t n,
                                        std::size_t length, std::uint64_t seed) {
  g.validate();
  dom.validate(g);
  const int needed = dom.max_lag(g) + dom.offset_max;
  if (static_cast<long>(length) <= needed) {
    throw InvalidInput("generate: series length " + std::to_string(length) +
                       " must exceed max lag + max offset (" +
                       std::to_string(needed) + ")");
  }
  std::mt19937_64 rng(seed);
  std::vector<Trajectory> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(detail::simulate(g, dom, length + g.label.horizon, rng));
  }
  return out;
}

inline std::vector<TimeSeriesSample> generate(const CausalGraphSpec &g,
                                              const DomainSpec &dom,
                                              std::size_t n, std::size_t length,
                                              std::uint64_t seed,
                                              Domain tag = Domain::source) {
  auto trajectories = simulate(g, dom, n, length, seed);
  std::vector<TimeSeriesSample> out;
  out.reserve(n);
  const std::size_t M = g.variables;
  for (std::size_t k = 0; k < n; ++k) {
    const auto &tr = trajectories[k];
    TimeSeriesSample s;
    s.id = std::string(to_string(tag)) + "-" + std::to_string(k);
    s.variables = M;
    s.length = length;
    s.domain = tag;
    s.series.resize(M * length);
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t t = 0; t < length; ++t) {
        s.series[i * length + t] = tr.at(i, t);
      }
    }
    const double p = detail::sigmoid(label_score(g, tr, length - 1 + g.label.horizon));
    s.label = g.label.task == Task::classification ? (p > 0.5 ? 1.0 : 0.0) : p;
    out.push_back(std::move(s));
  }
  return out;
}

/// Seeded disjoint split with round(train_frac * n) training samples.
/// Classification data is stratified: each class contributes its share, with
/// remainders assigned by largest fractional part.
inline std::pair<std::vector<TimeSeriesSample>, std::vector<TimeSeriesSample>>
split(const std::vector<TimeSeriesSample> &data, double train_frac,
      std::uint64_t seed, Task task = Task::classification) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw InvalidInput("split: train_frac must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw InvalidInput("split: degenerate split of " + std::to_string(n) +
                       " samples");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<std::vector<std::size_t>> groups;
  if (task == Task::classification) {
    groups.resize(2);
    for (auto k : idx) {
      const auto &y = data[k].label;
      groups[(y && *y == 1.0) ? 1 : 0].push_back(k);
    }
  } else {
    groups.push_back(idx);
  }
  std::vector<std::size_t> quota(groups.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double exact = train_frac * static_cast<double>(groups[gi].size());
    quota[gi] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[gi];
    remainders.emplace_back(exact - std::floor(exact), gi);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n_train && r < remainders.size(); ++r) {
    ++quota[remainders[r].second];
    ++assigned;
  }

  std::vector<bool> in_train(n, false);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t k = 0; k < quota[gi]; ++k) {
      in_train[groups[gi][k]] = true;
    }
  }
  std::pair<std::vector<TimeSeriesSample>, std::vector<TimeSeriesSample>> out;
  for (auto k : idx) {
    (in_train[k] ? out.first : out.second).push_back(data[k]);
  }
  return out;
}

/// Six variables, six lagged edges, two AR(1) roots.
inline CausalGraphSpec default_benchmark_graph() {
  CausalGraphSpec g;
  g.variables = 6;
  g.edges = {
      {0, 2, 0.9, 1}, {1, 3, 0.8, 1}, {2, 4, 0.8, 2},
      {3, 4, 0.7, 1}, {0, 5, 0.7, 2}, {4, 5, 0.6, 1},
  };
  g.noise_std = 1.0;
  g.child_noise_std = 0.3;
  g.root_ar = 0.6;
  g.label.variables = {4, 5};
  g.label.weights = {1.0, 1.0};
  g.label.bias = 0.0;
  g.label.task = Task::classification;
  g.label.horizon = 2;
  return g;
}

inline DomainSpec default_source_domain() { return {0, 0, 2, 1.0}; }
inline DomainSpec default_target_domain() { return {2, 2, 5, 1.0}; }

} // namespace sasa::synth
