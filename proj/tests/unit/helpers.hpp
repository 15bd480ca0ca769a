#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "statecurve/fitting.hpp"
#include "statecurve/model.hpp"

namespace statecurve::testing {

inline PromptSet prompts_with(const std::vector<int>& polarities) {
  std::vector<Prompt> p;
  for (std::size_t i = 0; i < polarities.size(); ++i) p.push_back({"prompt " + std::to_string(i), polarities[i]});
  return PromptSet::create(std::move(p));
}

inline PromptSet positive_prompts(std::size_t n) { return prompts_with(std::vector<int>(n, 1)); }

/// Columns given as separate vectors, all the same length.
inline SimilaritySeries series_from_columns(const std::vector<std::vector<double>>& columns, double rate = 10.0) {
  std::vector<std::vector<double>> rows(columns.front().size(), std::vector<double>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i)
    for (std::size_t t = 0; t < columns[i].size(); ++t) rows[t][i] = columns[i][t];
  return SimilaritySeries::create(rows, rate);
}

/// Reference logistic, written out independently of the library.
inline double logistic(double t, double alpha, double beta) { return 1.0 / (1.0 + std::exp(-alpha * (t - beta))); }

inline std::vector<double> sigmoid_samples(std::size_t frames, double alpha, double beta) {
  std::vector<double> out(frames);
  for (std::size_t k = 0; k < frames; ++k) out[k] = logistic(static_cast<double>(k + 1), alpha, beta);
  return out;
}

/// Sigmoid channel squeezed into [lo, hi] with white noise.
inline std::vector<double> sigmoid_channel(std::size_t frames, double alpha, double beta, double lo, double hi,
                                           double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sd);
  auto clean = sigmoid_samples(frames, alpha, beta);
  for (auto& v : clean) v = lo + (hi - lo) * v + (sd > 0 ? noise(rng) : 0.0);
  return clean;
}

inline std::vector<double> noise_channel(std::size_t frames, double level, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sd);
  std::vector<double> out(frames);
  for (auto& v : out) v = level + noise(rng);
  return out;
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace statecurve::testing
