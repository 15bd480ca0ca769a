#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "statecurve/model.hpp"

namespace statecurve {

/// The four basic shapes a continuous state change can take.
enum class ChangePattern {
  ramp,   // (i)   changes throughout the recording
  late,   // (ii)  flat, then changes until the end
  early,  // (iii) changes from the start, then settles
  full,   // (iv)  flat, change, flat
};

std::string_view to_string(ChangePattern pattern) noexcept;
/// Accepts "i".."iv" or the enum names.
ChangePattern parse_pattern(std::string_view text);

/// Lower and upper edge of the band informative columns move through.
inline constexpr double kSynthBandLow = 0.1;
inline constexpr double kSynthBandHigh = 0.4;

struct SynthSpec {
  ChangePattern pattern = ChangePattern::full;
  std::size_t frames = 600;
  double sample_rate_hz = 10.0;
  std::size_t n_informative = 10;
  std::size_t n_noise = 40;
  double noise_sd = 0.05;
  /// Pattern defaults are used when empty (see pattern_defaults).
  std::optional<double> true_alpha;
  std::optional<double> true_beta;  // sample-index units, t = 1..T
  /// Fraction of the clean curve's range at which t_data is annotated.
  double annotation_level = 0.8;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct PatternParams {
  double alpha;
  double beta;
};

/// Default (alpha, beta) for a pattern over `frames` samples.
PatternParams pattern_defaults(ChangePattern pattern, std::size_t frames);

struct SynthOutput {
  PromptSet prompts;
  SimilaritySeries series;
  double t_data;  // seconds, frame k is at k / sample_rate_hz
  double alpha;
  double beta;
};

/// Informative columns follow the clean curve scaled into
/// [kSynthBandLow, kSynthBandHigh] plus white Gaussian noise; prompts
/// alternate polarity and negative ones carry the mirrored curve. Noise
/// columns are AR(1) noise around a random level inside the band.
SynthOutput synthesize(const SynthSpec& spec);

/// Continuous time (seconds) at which the clean curve reaches `level` of
/// its range over frames 1..T.
double annotation_time(double alpha, double beta, std::size_t frames, double sample_rate_hz, double level);

}  // namespace statecurve
