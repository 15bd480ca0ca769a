#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "statecurve/fitting.hpp"
#include "statecurve/formats.hpp"
#include "statecurve/optimizer.hpp"
#include "statecurve/synth.hpp"

namespace statecurve::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNoSignal = 3;

struct SynthOptions {
  SynthSpec spec;
  std::string out_prefix = "synth";
};

/// Writes <prefix>.sim.csv, <prefix>.prompts.json and <prefix>.annotation.json.
int run_synth(const SynthOptions& options, std::ostream& out);

struct OptimizeOptions {
  std::optional<std::string> prompts_path;
  std::string similarity_path;
  OptimizationMode mode = OptimizationMode::opt;
  double window_seconds = 3.0;
  GaConfig ga;
  FitConfig fit;
  double threshold = 0.8;
  IngestMode ingest = IngestMode::strict;
  std::string weights_out = "weights.json";
  std::optional<std::string> report_out;
  std::optional<std::string> trace_out;
};

/// Exit 0 with the artifact written, 3 when no candidate produced a fit.
int run_optimize(const OptimizeOptions& options, std::ostream& out);

struct DetectOptions {
  std::string weights_path;
  std::optional<std::string> similarity_path;  // empty: stream rows from `in`
  double threshold = 0.8;
  std::optional<double> sample_rate_hz;         // stream mode; default from the artifact
  std::optional<std::string> prompt_hash;       // stream mode expected hash
  std::optional<std::string> annotation_path;
  std::optional<std::string> report_out;
  IngestMode ingest = IngestMode::strict;
};

/// File mode replays the rows through the online detector. Stream mode reads
/// one row of N values per line and prints a single JSON event line as soon
/// as the detector fires. Exit 3 when nothing was detected.
int run_detect(const DetectOptions& options, std::istream& in, std::ostream& out);

struct EvaluateOptions {
  std::string weights_path;
  std::string similarity_path;
  std::optional<std::string> annotation_path;
  double threshold = 0.8;
  IngestMode ingest = IngestMode::strict;
  std::optional<std::string> report_out;
  std::optional<std::string> trace_out;
};

/// Applies the artifact's frozen normalization to a held-out recording.
int run_evaluate(const EvaluateOptions& options, std::ostream& out);

/// Result of replaying an evaluation dataset with frozen parameters.
struct EvaluationOutcome {
  AggregateSignal signal;
  DetectionReport report;
  SigmoidFit reference_fit;  // reference only: the scaled signal may leave [0, 1]
  std::vector<PlotRow> plot;
};

/// Throws Error(invalid_config) unless `dataset.role` is evaluation; the
/// normalization always comes from the artifact.
EvaluationOutcome evaluate_dataset(const Dataset& dataset, const WeightsArtifact& artifact, double threshold);

/// Full command line: `statecurve <synth|optimize|detect|evaluate> ...`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace statecurve::cli
