#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "statecurve/detector.hpp"
#include "statecurve/fitting.hpp"
#include "statecurve/model.hpp"
#include "statecurve/optimizer.hpp"

namespace statecurve {

std::string_view version() noexcept;

// ---------------------------------------------------------------------------
// Run manifest, embedded in every artifact the CLI writes.

struct RunManifest {
  std::string command;
  std::string config_json = "{}";  // JSON object snapshot of every setting
  std::vector<std::pair<std::string, std::string>> input_hashes;  // name -> FNV-1a hex
  std::optional<std::uint64_t> rng_seed;
  std::string tool_version{version()};

  bool operator==(const RunManifest&) const = default;
};

std::string to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Prompt file: {"prompts": [{"text": "...", "polarity": 1}, ...]}. A bare
// top-level array is accepted too.

/// Parses and validates a prompt document. Throws Error(parse_error) on
/// malformed JSON and Error(invalid_prompt_set) listing every violation.
PromptSet validate_prompt_set(std::string_view document);
std::string to_json(const PromptSet& prompts);

// ---------------------------------------------------------------------------
// Similarity file. A '#' header block followed by a CSV table:
//
//   # statecurve-similarity 1
//   # sample_rate_hz: 10
//   # prompt_hash: 8c1f...
//   # prompt: +1<TAB>boiled water
//   # prompt: -1<TAB>unboiled water
//   # manifest: {...}
//   time,s0,s1
//   0,0.31,0.12
//
// Prompt lines give the column order. Other header keys are preserved.

struct SimilarityFile {
  PromptSet prompts;
  SimilaritySeries series;
  std::optional<RunManifest> manifest;
  std::vector<std::pair<std::string, std::string>> extra_header;
};

void write_similarity_file(std::ostream& out, const SimilarityFile& file);
/// Verifies the header hash against the prompts and the column names against
/// prompt order; throws Error(hash_mismatch) / Error(parse_error) /
/// Error(invalid_series).
SimilarityFile read_similarity_file(std::istream& in, IngestMode mode = IngestMode::strict);

/// Rows of N values from a whitespace- or comma-separated line.
std::vector<double> parse_row(std::string_view line);

// ---------------------------------------------------------------------------
// Weights artifact (JSON): everything needed for frozen-normalization
// inference.

struct WeightsArtifact {
  PromptSet prompts;
  WeightVector weights;
  std::optional<NormalizationParams> normalization;
  SigmoidFit fit;
  FitConfig fit_config;
  std::optional<GaConfig> ga_config;
  OptimizationMode mode = OptimizationMode::opt;
  double window_seconds = 3.0;
  double sample_rate_hz = 10.0;
  bool signal_found = false;
  std::vector<GenerationStats> history;
  RunManifest manifest;
};

std::string to_json(const WeightsArtifact& artifact);
/// Throws Error(hash_mismatch) when the embedded hash does not match the
/// embedded prompts.
WeightsArtifact weights_artifact_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Annotation: {"t_data": seconds} or a bare number.

double parse_annotation(std::string_view text);
std::string annotation_to_json(double t_data);

// ---------------------------------------------------------------------------
// Value types.

std::string to_json(const WeightVector& weights);
WeightVector weight_vector_from_json(std::string_view text);
std::string to_json(const NormalizationParams& params);
NormalizationParams normalization_from_json(std::string_view text);
std::string to_json(const SigmoidFit& fit);
SigmoidFit sigmoid_fit_from_json(std::string_view text);
std::string to_json(const FitConfig& config);
FitConfig fit_config_from_json(std::string_view text);
std::string to_json(const GaConfig& config);
GaConfig ga_config_from_json(std::string_view text);
std::string to_json(const DetectionReport& report);
DetectionReport detection_report_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Plot export: CSV with columns time,raw,average,sigmoid,detected.

struct PlotRow {
  double time;
  double raw;
  double average;
  double sigmoid;
  int detected;
};

inline constexpr std::string_view kPlotColumns = "time,raw,average,sigmoid,detected";

void write_plot_csv(std::ostream& out, const std::vector<PlotRow>& rows, const RunManifest& manifest);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace statecurve
