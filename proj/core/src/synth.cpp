#include "statecurve/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "statecurve/fitting.hpp"

namespace statecurve {

std::string_view to_string(ChangePattern pattern) noexcept {
  switch (pattern) {
    case ChangePattern::ramp: return "i";
    case ChangePattern::late: return "ii";
    case ChangePattern::early: return "iii";
    case ChangePattern::full: return "iv";
  }
  return "unknown";
}

ChangePattern parse_pattern(std::string_view text) {
  if (text == "i" || text == "ramp") return ChangePattern::ramp;
  if (text == "ii" || text == "late") return ChangePattern::late;
  if (text == "iii" || text == "early") return ChangePattern::early;
  if (text == "iv" || text == "full") return ChangePattern::full;
  throw Error(ErrorCode::invalid_config, "unknown pattern \"" + std::string(text) + "\" (expected i, ii, iii, iv)");
}

void SynthSpec::validate() const {
  std::vector<std::string> v;
  if (frames < 3) v.emplace_back("frames must be >= 3");
  if (!(sample_rate_hz > 0.0)) v.emplace_back("sample_rate_hz must be > 0");
  if (n_informative + n_noise == 0) v.emplace_back("need at least one column");
  if (!(noise_sd >= 0.0)) v.emplace_back("noise_sd must be >= 0");
  if (true_alpha && !(*true_alpha > 0.0)) v.emplace_back("true_alpha must be > 0");
  if (true_beta && !(*true_beta >= 0.0)) v.emplace_back("true_beta must be >= 0");
  if (!(annotation_level > 0.0 && annotation_level < 1.0)) v.emplace_back("annotation_level must be in (0, 1)");
  if (!v.empty()) throw Error(ErrorCode::invalid_config, "invalid synth spec", std::move(v));
}

PatternParams pattern_defaults(ChangePattern pattern, std::size_t frames) {
  const double t = static_cast<double>(frames);
  switch (pattern) {
    case ChangePattern::ramp: return {4.0 / t, 0.5 * t};
    case ChangePattern::late: return {20.0 / t, 0.75 * t};
    case ChangePattern::early: return {20.0 / t, 0.25 * t};
    case ChangePattern::full: return {20.0 / t, 0.5 * t};
  }
  return {20.0 / t, 0.5 * t};
}

double annotation_time(double alpha, double beta, std::size_t frames, double sample_rate_hz, double level) {
  const double first = sigmoid(1.0, alpha, beta);
  const double last = sigmoid(static_cast<double>(frames), alpha, beta);
  const double target = first + level * (last - first);
  // Invert the logistic: t = beta - ln(1/f - 1) / alpha, on the 1-based index.
  const double index = beta - std::log(1.0 / target - 1.0) / alpha;
  return (index - 1.0) / sample_rate_hz;
}

SynthOutput synthesize(const SynthSpec& spec) {
  spec.validate();
  const PatternParams defaults = pattern_defaults(spec.pattern, spec.frames);
  const double alpha = spec.true_alpha.value_or(defaults.alpha);
  const double beta = spec.true_beta.value_or(defaults.beta);
  const std::size_t n = spec.n_informative + spec.n_noise;
  const double band = kSynthBandHigh - kSynthBandLow;

  std::vector<Prompt> prompts;
  prompts.reserve(n);
  for (std::size_t j = 0; j < spec.n_informative; ++j) {
    const bool positive = j % 2 == 0;
    prompts.push_back({(positive ? "changed state " : "unchanged state ") + std::to_string(j), positive ? 1 : -1});
  }
  for (std::size_t j = 0; j < spec.n_noise; ++j) {
    prompts.push_back({"unrelated text " + std::to_string(j), j % 2 == 0 ? 1 : -1});
  }

  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> level(kSynthBandLow + 0.2 * band, kSynthBandHigh - 0.2 * band);

  std::vector<double> clean(spec.frames);
  for (std::size_t k = 0; k < spec.frames; ++k) clean[k] = sigmoid(static_cast<double>(k + 1), alpha, beta);

  std::vector<double> values(spec.frames * n);
  for (std::size_t j = 0; j < spec.n_informative; ++j) {
    const bool positive = j % 2 == 0;
    for (std::size_t k = 0; k < spec.frames; ++k) {
      const double curve = positive ? kSynthBandLow + band * clean[k] : kSynthBandHigh - band * clean[k];
      values[k * n + j] = curve + spec.noise_sd * gauss(rng);
    }
  }
  constexpr double kNoiseCorrelation = 0.9;
  const double innovation = std::sqrt(1.0 - kNoiseCorrelation * kNoiseCorrelation);
  for (std::size_t j = spec.n_informative; j < n; ++j) {
    const double centre = level(rng);
    double state = gauss(rng);
    for (std::size_t k = 0; k < spec.frames; ++k) {
      if (k > 0) state = kNoiseCorrelation * state + innovation * gauss(rng);
      values[k * n + j] = centre + spec.noise_sd * state;
    }
  }
  for (double& v : values) v = std::clamp(v, -1.0, 1.0);

  return SynthOutput{
      PromptSet::create(std::move(prompts)),
      SimilaritySeries::from_flat(std::move(values), spec.frames, n, spec.sample_rate_hz),
      annotation_time(alpha, beta, spec.frames, spec.sample_rate_hz, spec.annotation_level),
      alpha,
      beta,
  };
}

}  // namespace statecurve
