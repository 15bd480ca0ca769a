#pragma once

#include <cstddef>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "statecurve/model.hpp"

namespace statecurve {

/// Aggregate signal over one series: the weighted similarity, its trailing
/// moving average, and the average min-max scaled.
struct AggregateSignal {
  std::vector<double> raw;
  std::vector<double> averaged;
  std::vector<double> normalized;
  std::size_t window_samples = 0;
  NormalizationParams normalization;
};

/// Polarity-weighted mean of one similarity row:
///   sum_i p_i w_i s_i / sum_i w_i
/// `weight_sum` must be the precomputed sum of `weights`.
double aggregate_row(std::span<const double> row, std::span<const double> signs, std::span<const double> weights,
                     double weight_sum);

/// Weighted similarity for every frame. Throws Error(degenerate_weights)
/// when the weights sum to kWeightEpsilon or less.
std::vector<double> weighted_similarity(const SimilaritySeries& series, const PromptSet& prompts,
                                        const WeightVector& weights);

/// round-half-up(window_seconds * sample_rate_hz).
std::size_t window_samples(double window_seconds, double sample_rate_hz);

/// Mean of a window of samples, summed oldest to newest. Shared by the
/// offline moving average and the online detector so both produce
/// identical bits.
template <typename Range>
double trailing_mean(const Range& window) {
  const double sum = std::accumulate(std::begin(window), std::end(window), 0.0);
  return sum / static_cast<double>(std::size(window));
}

/// Causal moving average. Index t averages samples [t - window + 1, t];
/// the first window - 1 indices average everything seen so far. A window of
/// 0 or 1 returns the input unchanged.
std::vector<double> moving_average(std::span<const double> signal, std::size_t window);
std::vector<double> moving_average(std::span<const double> signal, double window_seconds, double sample_rate_hz);

/// Min and max of the averaged signal. Throws Error(flat_signal) when the
/// range is kRangeEpsilon or less.
NormalizationParams compute_normalization(std::span<const double> averaged, std::size_t window_samples);

inline double normalize(double x, const NormalizationParams& params) {
  return (x - params.a_min) / (params.a_max - params.a_min);
}

/// Elementwise min-max scaling. Not clamped: values from a dataset other
/// than the one the params came from may leave [0, 1].
std::vector<double> normalize(std::span<const double> signal, const NormalizationParams& params);

/// weighted_similarity -> moving_average -> normalize. When `frozen` is
/// empty the normalization is computed from this series' own average.
AggregateSignal build_aggregate(const SimilaritySeries& series, const PromptSet& prompts, const WeightVector& weights,
                                std::size_t window, const std::optional<NormalizationParams>& frozen = std::nullopt);

}  // namespace statecurve
