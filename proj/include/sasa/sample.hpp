// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sample.hpp
 * @brief  Multivariate time-series sample shared by every module.
 */
#pragma once

#include <sasa/diffnum/tensor.hpp>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sasa {

enum class Domain { source, target };

enum class Task { classification, regression };

inline const char *to_string(Task t) {
  return t == Task::classification ? "classification" : "regression";
}

inline const char *to_string(Domain d) {
  return d == Domain::source ? "source" : "target";
}

/// M variables observed over N timesteps. series is variable-major:
/// x^i_t sits at series[i * N + t].
struct TimeSeriesSample {
  std::string id;
  std::size_t variables = 0;
  std::size_t length = 0;
  std::vector<double> series;
  std::optional<double> label;
  Domain domain = Domain::source;

  std::span<const double> variable(std::size_t i) const {
    return std::span<const double>(series).subspan(i * length, length);
  }
  double at(std::size_t i, std::size_t t) const { return series[i * length + t]; }

  void validate() const {
    if (variables < 1 || length < 1) {
      throw InvalidInput("sample " + id + ": needs M >= 1 and N >= 1");
    }
    if (series.size() != variables * length) {
      throw InvalidInput("sample " + id + ": series has " +
                         std::to_string(series.size()) + " values, expected " +
                         std::to_string(variables * length));
    }
    for (double v : series) {
      if (!std::isfinite(v)) {
        throw InvalidInput("sample " + id + ": non-finite series value");
      }
    }
  }
};

} // namespace sasa
