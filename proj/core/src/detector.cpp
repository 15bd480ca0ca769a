#include "statecurve/detector.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace statecurve {

Detector::Detector(PromptSet prompts, WeightVector weights, NormalizationParams normalization, double threshold)
    : prompts_(std::move(prompts)),
      weights_(std::move(weights)),
      normalization_(normalization),
      weight_sum_(weights_.sum()),
      threshold_(threshold) {
  if (weights_.size() != prompts_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "weight count does not match prompt count");
  }
  if (weights_.degenerate()) throw Error(ErrorCode::degenerate_weights, "weights sum to zero");
  normalization_.validate();
  if (!std::isfinite(threshold_)) throw Error(ErrorCode::invalid_config, "threshold must be finite");
}

std::optional<ChangeDetected> Detector::step(std::span<const double> row, double time) {
  if (row.size() != prompts_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "row has " + std::to_string(row.size()) + " values, expected " +
                                                   std::to_string(prompts_.size()));
  }
  last_raw_ = aggregate_row(row, prompts_.signs(), weights_.values(), weight_sum_);

  const std::size_t capacity = normalization_.window_samples;
  if (capacity <= 1) {
    last_averaged_ = last_raw_;
  } else {
    window_.push_back(last_raw_);
    if (window_.size() > capacity) window_.pop_front();
    last_averaged_ = trailing_mean(window_);
  }
  last_normalized_ = normalize(last_averaged_, normalization_);

  const std::size_t index = samples_seen_++;
  if (fired_ || !(last_normalized_ > threshold_)) return std::nullopt;
  fired_ = true;
  return ChangeDetected{time, index, last_normalized_};
}

void Detector::reset() {
  window_.clear();
  fired_ = false;
  samples_seen_ = 0;
  last_raw_ = last_averaged_ = last_normalized_ = 0.0;
}

std::optional<std::size_t> first_crossing(std::span<const double> values, double threshold) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] > threshold) return k;
  }
  return std::nullopt;
}

DetectionReport evaluate_detection(const AggregateSignal& signal, std::span<const double> times,
                                   std::optional<double> t_data, double threshold) {
  if (times.size() != signal.normalized.size() || signal.raw.size() != signal.normalized.size() ||
      signal.averaged.size() != signal.normalized.size()) {
    throw Error(ErrorCode::dimension_mismatch, "trace arrays differ in length");
  }
  std::vector<TracePoint> trace;
  trace.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) trace.push_back({times[k], signal.raw[k], signal.averaged[k]});

  std::optional<double> t_detected;
  if (const auto k = first_crossing(signal.normalized, threshold)) t_detected = times[*k];
  return make_report(t_detected, t_data, threshold, std::move(trace));
}

}  // namespace statecurve
