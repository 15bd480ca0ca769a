#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace statecurve {

/// Total weight at or below this is treated as all-zero.
inline constexpr double kWeightEpsilon = 1e-9;
/// Normalization range at or below this is treated as a flat signal.
inline constexpr double kRangeEpsilon = 1e-9;

enum class ErrorCode {
  invalid_prompt_set,
  invalid_series,
  invalid_weights,
  invalid_config,
  dimension_mismatch,
  degenerate_weights,
  flat_signal,
  hash_mismatch,
  parse_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Error raised by validation and pipeline stages. Validation errors carry
/// every violation found, not just the first.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> violations = {});

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  ErrorCode code_;
  std::vector<std::string> violations_;
};

/// A text prompt and its polarity: +1 if the text describes the changed
/// state ("boiled water"), -1 if it describes the unchanged state.
struct Prompt {
  std::string text;
  int polarity = 1;

  bool operator==(const Prompt&) const = default;
};

/// Ordered set of prompts. Position in the set is the column index of the
/// similarity matrix and the index of the matching weight.
class PromptSet {
 public:
  /// Throws Error(invalid_prompt_set) listing every violation.
  static PromptSet create(std::vector<Prompt> prompts);

  std::size_t size() const noexcept { return prompts_.size(); }
  const Prompt& operator[](std::size_t i) const { return prompts_[i]; }
  std::span<const Prompt> prompts() const noexcept { return prompts_; }

  /// Polarities as +1.0 / -1.0, in prompt order.
  std::span<const double> signs() const noexcept { return signs_; }

  /// FNV-1a 64 over the canonical "polarity\ttext\n" serialization.
  std::uint64_t content_hash() const noexcept { return hash_; }
  std::string hash_hex() const;

  bool operator==(const PromptSet& other) const { return prompts_ == other.prompts_; }

 private:
  explicit PromptSet(std::vector<Prompt> prompts);

  std::vector<Prompt> prompts_;
  std::vector<double> signs_;
  std::uint64_t hash_ = 0;
};

std::string format_hash(std::uint64_t hash);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

enum class IngestMode { strict, lenient };

/// T x N matrix of per-prompt cosine similarities, row-major.
class SimilaritySeries {
 public:
  /// Validates shape, range and timestamps. Lenient mode clamps values
  /// outside [-1, 1] and records how many were clamped.
  static SimilaritySeries create(const std::vector<std::vector<double>>& rows, double sample_rate_hz,
                                 std::optional<std::vector<double>> timestamps = std::nullopt,
                                 IngestMode mode = IngestMode::strict);

  static SimilaritySeries from_flat(std::vector<double> values, std::size_t frames, std::size_t channels,
                                    double sample_rate_hz,
                                    std::optional<std::vector<double>> timestamps = std::nullopt,
                                    IngestMode mode = IngestMode::strict);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t channels() const noexcept { return channels_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }

  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(values_).subspan(t * channels_, channels_);
  }
  double at(std::size_t t, std::size_t i) const { return values_[t * channels_ + i]; }
  std::vector<double> column(std::size_t i) const;
  std::span<const double> values() const noexcept { return values_; }

  const std::optional<std::vector<double>>& timestamps() const noexcept { return timestamps_; }

  /// Timestamp of frame t in seconds: the recorded timestamp when present,
  /// otherwise t / sample_rate_hz.
  double time_at(std::size_t t) const;
  std::vector<double> times() const;

  std::size_t clamped_count() const noexcept { return clamped_; }

  bool operator==(const SimilaritySeries& other) const;

 private:
  SimilaritySeries() = default;

  std::vector<double> values_;
  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  double sample_rate_hz_ = 0.0;
  std::optional<std::vector<double>> timestamps_;
  std::size_t clamped_ = 0;
};

/// Throws Error(dimension_mismatch) when the series column count differs
/// from the prompt count.
void require_matching_columns(const SimilaritySeries& series, const PromptSet& prompts);

/// Prompt weights, each in [0, 1]. A vector whose sum is below the
/// degenerate-weight epsilon is representable (the optimizer produces them)
/// but is rejected by the aggregation and by artifact writers.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);

  static WeightVector ones(std::size_t n);
  static WeightVector one_hot(std::size_t n, std::size_t index);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }
  double sum() const noexcept;
  bool degenerate() const noexcept;

  bool operator==(const WeightVector&) const = default;

 private:
  std::vector<double> weights_;
};

/// Min-max scaling parameters taken from the moving average of the
/// aggregate signal on the optimization dataset.
struct NormalizationParams {
  double a_min = 0.0;
  double a_max = 1.0;
  std::size_t window_samples = 0;

  /// Throws Error(flat_signal) unless a_max > a_min and both are finite.
  void validate() const;

  bool operator==(const NormalizationParams&) const = default;
};

enum class FitTermination {
  step_tolerance,
  no_improvement,
  max_iterations,
  non_finite,
};

std::string_view to_string(FitTermination t) noexcept;

struct SigmoidFit {
  double alpha = 0.0;
  double beta = 0.0;  // sample-index units
  double sigma = 0.0;
  double e_value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  FitTermination termination = FitTermination::max_iterations;

  bool operator==(const SigmoidFit&) const = default;
};

struct TracePoint {
  double time = 0.0;
  double raw = 0.0;
  double averaged = 0.0;

  bool operator==(const TracePoint&) const = default;
};

struct DetectionReport {
  std::optional<double> t_detected;
  std::optional<double> t_data;
  std::optional<double> t_diff;
  double threshold = 0.8;
  std::vector<TracePoint> trace;

  bool detected() const noexcept { return t_detected.has_value(); }
  bool operator==(const DetectionReport&) const = default;
};

/// Builds a report with t_diff filled iff both times are present.
DetectionReport make_report(std::optional<double> t_detected, std::optional<double> t_data, double threshold,
                            std::vector<TracePoint> trace);

enum class DatasetRole { optimization, evaluation };

struct Dataset {
  DatasetRole role = DatasetRole::optimization;
  SimilaritySeries series;
  std::optional<double> t_data;
};

}  // namespace statecurve
