#include "statecurve/signal.hpp"

#include <algorithm>
#include <cmath>

namespace statecurve {

double aggregate_row(std::span<const double> row, std::span<const double> signs, std::span<const double> weights,
                     double weight_sum) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < row.size(); ++i) acc += static_cast<long double>(signs[i] * weights[i]) * row[i];
  return static_cast<double>(acc / weight_sum);
}

std::vector<double> weighted_similarity(const SimilaritySeries& series, const PromptSet& prompts,
                                        const WeightVector& weights) {
  require_matching_columns(series, prompts);
  if (weights.size() != prompts.size()) {
    throw Error(ErrorCode::dimension_mismatch, "weight count " + std::to_string(weights.size()) +
                                                   " does not match prompt count " + std::to_string(prompts.size()));
  }
  const double weight_sum = weights.sum();
  if (!(weight_sum > kWeightEpsilon)) throw Error(ErrorCode::degenerate_weights, "weights sum to zero");

  std::vector<double> out(series.frames());
  for (std::size_t t = 0; t < series.frames(); ++t) {
    out[t] = aggregate_row(series.row(t), prompts.signs(), weights.values(), weight_sum);
  }
  return out;
}

std::size_t window_samples(double window_seconds, double sample_rate_hz) {
  if (!(window_seconds >= 0.0) || !std::isfinite(window_seconds)) {
    throw Error(ErrorCode::invalid_config, "window length must be a finite non-negative number of seconds");
  }
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::invalid_config, "sample rate must be positive");
  return static_cast<std::size_t>(std::floor(window_seconds * sample_rate_hz + 0.5));
}

std::vector<double> moving_average(std::span<const double> signal, std::size_t window) {
  if (signal.empty()) throw Error(ErrorCode::invalid_series, "moving average of an empty signal");
  if (window <= 1) return {signal.begin(), signal.end()};

  std::vector<double> out(signal.size());
  for (std::size_t t = 0; t < signal.size(); ++t) {
    const std::size_t first = t + 1 >= window ? t + 1 - window : 0;
    out[t] = trailing_mean(signal.subspan(first, t + 1 - first));
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> signal, double window_seconds, double sample_rate_hz) {
  return moving_average(signal, window_samples(window_seconds, sample_rate_hz));
}

NormalizationParams compute_normalization(std::span<const double> averaged, std::size_t window) {
  if (averaged.size() < 2) throw Error(ErrorCode::invalid_series, "normalization needs at least 2 samples");
  const auto [lo, hi] = std::minmax_element(averaged.begin(), averaged.end());
  if (!(*hi - *lo > kRangeEpsilon)) throw Error(ErrorCode::flat_signal, "aggregate signal is flat");
  return NormalizationParams{*lo, *hi, window};
}

std::vector<double> normalize(std::span<const double> signal, const NormalizationParams& params) {
  params.validate();
  std::vector<double> out(signal.size());
  std::transform(signal.begin(), signal.end(), out.begin(), [&](double x) { return normalize(x, params); });
  return out;
}

AggregateSignal build_aggregate(const SimilaritySeries& series, const PromptSet& prompts, const WeightVector& weights,
                                std::size_t window, const std::optional<NormalizationParams>& frozen) {
  AggregateSignal s;
  s.window_samples = window;
  s.raw = weighted_similarity(series, prompts, weights);
  s.averaged = moving_average(s.raw, window);
  const NormalizationParams params = frozen ? *frozen : compute_normalization(s.averaged, window);
  s.normalized = normalize(s.averaged, params);
  s.normalization = params;
  return s;
}

}  // namespace statecurve
