#include "statecurve/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <utility>

namespace statecurve {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_prompt_set: return "invalid prompt set";
    case ErrorCode::invalid_series: return "invalid similarity series";
    case ErrorCode::invalid_weights: return "invalid weights";
    case ErrorCode::invalid_config: return "invalid configuration";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::degenerate_weights: return "degenerate weights";
    case ErrorCode::flat_signal: return "flat signal";
    case ErrorCode::hash_mismatch: return "prompt hash mismatch";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::io_error: return "io error";
  }
  return "unknown";
}

std::string_view to_string(FitTermination t) noexcept {
  switch (t) {
    case FitTermination::step_tolerance: return "step_tolerance";
    case FitTermination::no_improvement: return "no_improvement";
    case FitTermination::max_iterations: return "max_iterations";
    case FitTermination::non_finite: return "non_finite";
  }
  return "unknown";
}

namespace {

std::string join_message(const std::string& message, const std::vector<std::string>& violations) {
  if (violations.empty()) return message;
  std::string out = message + ":";
  for (const auto& v : violations) out += " " + v + ";";
  out.pop_back();
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::vector<std::string> violations)
    : std::runtime_error(join_message(message, violations)), code_(code), violations_(std::move(violations)) {}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_hash(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------- PromptSet

PromptSet PromptSet::create(std::vector<Prompt> prompts) {
  std::vector<std::string> violations;
  if (prompts.empty()) violations.emplace_back("empty prompt set");
  std::set<std::pair<std::string, int>> seen;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& p = prompts[i];
    const auto where = "prompt " + std::to_string(i);
    if (p.text.empty()) violations.push_back(where + ": empty text");
    if (p.polarity != 1 && p.polarity != -1) {
      violations.push_back(where + ": invalid polarity " + std::to_string(p.polarity));
    } else if (!seen.emplace(p.text, p.polarity).second) {
      violations.push_back(where + ": duplicate (text, polarity) \"" + p.text + "\"");
    }
  }
  if (!violations.empty()) throw Error(ErrorCode::invalid_prompt_set, "invalid prompt set", std::move(violations));
  return PromptSet(std::move(prompts));
}

PromptSet::PromptSet(std::vector<Prompt> prompts) : prompts_(std::move(prompts)) {
  signs_.reserve(prompts_.size());
  std::uint64_t h = fnv1a64("");
  for (const auto& p : prompts_) {
    signs_.push_back(p.polarity > 0 ? 1.0 : -1.0);
    h = fnv1a64(p.polarity > 0 ? "+1\t" : "-1\t", h);
    h = fnv1a64(p.text, h);
    h = fnv1a64("\n", h);
  }
  hash_ = h;
}

std::string PromptSet::hash_hex() const { return format_hash(hash_); }

// --------------------------------------------------------- SimilaritySeries

SimilaritySeries SimilaritySeries::create(const std::vector<std::vector<double>>& rows, double sample_rate_hz,
                                          std::optional<std::vector<double>> timestamps, IngestMode mode) {
  const std::size_t channels = rows.empty() ? 0 : rows.front().size();
  std::vector<std::string> violations;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != channels) {
      violations.push_back("row " + std::to_string(t) + " has " + std::to_string(rows[t].size()) +
                           " values, expected " + std::to_string(channels));
    }
  }
  if (!violations.empty()) throw Error(ErrorCode::invalid_series, "ragged rows", std::move(violations));

  std::vector<double> flat;
  flat.reserve(rows.size() * channels);
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return from_flat(std::move(flat), rows.size(), channels, sample_rate_hz, std::move(timestamps), mode);
}

SimilaritySeries SimilaritySeries::from_flat(std::vector<double> values, std::size_t frames, std::size_t channels,
                                             double sample_rate_hz, std::optional<std::vector<double>> timestamps,
                                             IngestMode mode) {
  std::vector<std::string> violations;
  if (frames < 2) violations.emplace_back("T < 2 (got " + std::to_string(frames) + " frames)");
  if (channels == 0) violations.emplace_back("no similarity columns");
  if (values.size() != frames * channels) violations.emplace_back("value count does not match T x N");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) violations.emplace_back("sample rate must be positive");
  if (timestamps) {
    if (timestamps->size() != frames) {
      violations.emplace_back("timestamp count does not match T");
    } else {
      for (std::size_t t = 0; t < timestamps->size(); ++t) {
        if (!std::isfinite((*timestamps)[t])) {
          violations.push_back("timestamp " + std::to_string(t) + " is not finite");
        } else if (t > 0 && !((*timestamps)[t] > (*timestamps)[t - 1])) {
          violations.push_back("non-monotone timestamps at row " + std::to_string(t));
        }
      }
    }
  }

  std::size_t clamped = 0;
  if (values.size() == frames * channels) {
    for (std::size_t k = 0; k < values.size(); ++k) {
      double& v = values[k];
      if (!std::isfinite(v)) {
        violations.push_back("non-finite similarity at row " + std::to_string(channels ? k / channels : 0));
        continue;
      }
      if (v < -1.0 || v > 1.0) {
        if (mode == IngestMode::strict) {
          violations.push_back("similarity out of range at row " + std::to_string(k / channels) + ", column " +
                               std::to_string(k % channels));
        } else {
          v = std::clamp(v, -1.0, 1.0);
          ++clamped;
        }
      }
    }
  }
  if (!violations.empty()) throw Error(ErrorCode::invalid_series, "invalid similarity series", std::move(violations));

  SimilaritySeries s;
  s.values_ = std::move(values);
  s.frames_ = frames;
  s.channels_ = channels;
  s.sample_rate_hz_ = sample_rate_hz;
  s.timestamps_ = std::move(timestamps);
  s.clamped_ = clamped;
  return s;
}

std::vector<double> SimilaritySeries::column(std::size_t i) const {
  std::vector<double> out(frames_);
  for (std::size_t t = 0; t < frames_; ++t) out[t] = at(t, i);
  return out;
}

double SimilaritySeries::time_at(std::size_t t) const {
  if (timestamps_) return (*timestamps_)[t];
  return static_cast<double>(t) / sample_rate_hz_;
}

std::vector<double> SimilaritySeries::times() const {
  std::vector<double> out(frames_);
  for (std::size_t t = 0; t < frames_; ++t) out[t] = time_at(t);
  return out;
}

bool SimilaritySeries::operator==(const SimilaritySeries& other) const {
  return frames_ == other.frames_ && channels_ == other.channels_ && sample_rate_hz_ == other.sample_rate_hz_ &&
         values_ == other.values_ && timestamps_ == other.timestamps_;
}

void require_matching_columns(const SimilaritySeries& series, const PromptSet& prompts) {
  if (series.channels() != prompts.size()) {
    throw Error(ErrorCode::dimension_mismatch, "series has " + std::to_string(series.channels()) +
                                                   " columns but prompt set has " + std::to_string(prompts.size()) +
                                                   " prompts");
  }
}

// -------------------------------------------------------------- WeightVector

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  std::vector<std::string> violations;
  if (weights_.empty()) violations.emplace_back("empty weight vector");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w < 0.0 || w > 1.0) {
      violations.push_back("weight " + std::to_string(i) + " = " + std::to_string(w) + " outside [0, 1]");
    }
  }
  if (!violations.empty()) throw Error(ErrorCode::invalid_weights, "invalid weights", std::move(violations));
}

WeightVector WeightVector::ones(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }

WeightVector WeightVector::one_hot(std::size_t n, std::size_t index) {
  std::vector<double> w(n, 0.0);
  w.at(index) = 1.0;
  return WeightVector(std::move(w));
}

double WeightVector::sum() const noexcept { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

bool WeightVector::degenerate() const noexcept { return !(sum() > kWeightEpsilon); }

// ------------------------------------------------------- NormalizationParams

void NormalizationParams::validate() const {
  if (!std::isfinite(a_min) || !std::isfinite(a_max)) {
    throw Error(ErrorCode::flat_signal, "normalization bounds must be finite");
  }
  if (!(a_max > a_min)) {
    throw Error(ErrorCode::flat_signal, "normalization requires a_max > a_min");
  }
}

DetectionReport make_report(std::optional<double> t_detected, std::optional<double> t_data, double threshold,
                            std::vector<TracePoint> trace) {
  DetectionReport r;
  r.t_detected = t_detected;
  r.t_data = t_data;
  if (t_detected && t_data) r.t_diff = std::abs(*t_detected - *t_data);
  r.threshold = threshold;
  r.trace = std::move(trace);
  return r;
}

}  // namespace statecurve
