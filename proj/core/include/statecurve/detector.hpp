#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>

#include "statecurve/model.hpp"
#include "statecurve/signal.hpp"

namespace statecurve {

inline constexpr double kDefaultThreshold = 0.8;

struct ChangeDetected {
  double t_detected = 0.0;
  std::size_t sample = 0;  // 0-based index of the firing row
  double value = 0.0;      // normalized moving average at that row
};

/// Online threshold detector. Each row is aggregated with the frozen
/// weights, pushed into a trailing window, averaged and scaled with the
/// frozen normalization. Fires once, on the first row whose scaled average
/// is strictly greater than the threshold. One instance per stream.
class Detector {
 public:
  Detector(PromptSet prompts, WeightVector weights, NormalizationParams normalization,
           double threshold = kDefaultThreshold);

  /// Throws Error(dimension_mismatch) on a row of the wrong length.
  std::optional<ChangeDetected> step(std::span<const double> row, double time);

  void reset();

  bool fired() const noexcept { return fired_; }
  std::size_t samples_seen() const noexcept { return samples_seen_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t window_samples() const noexcept { return normalization_.window_samples; }
  std::size_t buffered() const noexcept { return window_.size(); }
  const PromptSet& prompts() const noexcept { return prompts_; }
  const NormalizationParams& normalization() const noexcept { return normalization_; }

  /// Values from the most recent step.
  double last_raw() const noexcept { return last_raw_; }
  double last_averaged() const noexcept { return last_averaged_; }
  double last_normalized() const noexcept { return last_normalized_; }

 private:
  PromptSet prompts_;
  WeightVector weights_;
  NormalizationParams normalization_;
  double weight_sum_;
  double threshold_;
  std::deque<double> window_;
  bool fired_ = false;
  std::size_t samples_seen_ = 0;
  double last_raw_ = 0.0;
  double last_averaged_ = 0.0;
  double last_normalized_ = 0.0;
};

/// Index of the first sample strictly above the threshold.
std::optional<std::size_t> first_crossing(std::span<const double> values, double threshold);

/// Offline replay of the detection rule over an already scaled aggregate.
/// `times` gives the timestamp of every sample. t_diff is filled when both
/// the detection and `t_data` exist.
DetectionReport evaluate_detection(const AggregateSignal& signal, std::span<const double> times,
                                   std::optional<double> t_data, double threshold = kDefaultThreshold);

}  // namespace statecurve
