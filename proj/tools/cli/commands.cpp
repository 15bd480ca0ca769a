#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "statecurve/detector.hpp"
#include "statecurve/signal.hpp"

namespace statecurve::cli {

using nlohmann::json;

namespace {

std::string file_hash(const std::string& path) { return format_hash(fnv1a64(read_file(path))); }

SimilarityFile load_similarity(const std::string& path, IngestMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  return read_similarity_file(in, mode);
}

void write_text(const std::optional<std::string>& path, std::ostream& fallback, const std::string& text) {
  if (path) {
    write_file(*path, text);
  } else {
    fallback << text;
    if (text.empty() || text.back() != '\n') fallback << '\n';
  }
}

json fit_config_snapshot(const FitConfig& fit) { return json::parse(to_json(fit)); }

std::vector<PlotRow> plot_rows(const AggregateSignal& signal, std::span<const double> times, const SigmoidFit& fit,
                               std::optional<std::size_t> detected_at) {
  const auto curve = fitted_curve(fit, signal.raw.size());
  std::vector<PlotRow> rows;
  rows.reserve(signal.raw.size());
  for (std::size_t k = 0; k < signal.raw.size(); ++k) {
    rows.push_back({times[k], normalize(signal.raw[k], signal.normalization), signal.normalized[k], curve[k],
                    detected_at && k >= *detected_at ? 1 : 0});
  }
  return rows;
}

void write_plot(const std::string& path, const std::vector<PlotRow>& rows, const RunManifest& manifest) {
  std::ostringstream ss;
  write_plot_csv(ss, rows, manifest);
  write_file(path, ss.str());
}

json report_json(const DetectionReport& report) { return json::parse(to_json(report)); }

}  // namespace

// ------------------------------------------------------------------- synth

int run_synth(const SynthOptions& options, std::ostream& out) {
  const SynthOutput data = synthesize(options.spec);
  const SynthSpec& s = options.spec;

  RunManifest manifest;
  manifest.command = "synth";
  manifest.rng_seed = s.rng_seed;
  manifest.config_json = json{{"pattern", std::string(to_string(s.pattern))},
                              {"frames", s.frames},
                              {"sample_rate_hz", s.sample_rate_hz},
                              {"n_informative", s.n_informative},
                              {"n_noise", s.n_noise},
                              {"noise_sd", s.noise_sd},
                              {"true_alpha", data.alpha},
                              {"true_beta", data.beta},
                              {"annotation_level", s.annotation_level}}
                             .dump();

  const std::string sim_path = options.out_prefix + ".sim.csv";
  std::ostringstream sim;
  write_similarity_file(sim, SimilarityFile{data.prompts, data.series, manifest, {}});
  write_file(sim_path, sim.str());
  write_file(options.out_prefix + ".prompts.json", to_json(data.prompts));
  write_file(options.out_prefix + ".annotation.json", annotation_to_json(data.t_data));

  out << json{{"similarity", sim_path},
              {"prompts", options.out_prefix + ".prompts.json"},
              {"annotation", options.out_prefix + ".annotation.json"},
              {"t_data", data.t_data},
              {"alpha", data.alpha},
              {"beta", data.beta}}
             .dump()
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- optimize

int run_optimize(const OptimizeOptions& options, std::ostream& out) {
  SimilarityFile sim = load_similarity(options.similarity_path, options.ingest);
  RunManifest manifest;
  manifest.command = "optimize";
  manifest.input_hashes.emplace_back("similarity", file_hash(options.similarity_path));
  if (options.prompts_path) {
    const PromptSet given = validate_prompt_set(read_file(*options.prompts_path));
    manifest.input_hashes.emplace_back("prompts", file_hash(*options.prompts_path));
    if (given.size() != sim.prompts.size()) {
      throw Error(ErrorCode::dimension_mismatch, "prompt file has " + std::to_string(given.size()) +
                                                     " prompts but the similarity file has " +
                                                     std::to_string(sim.prompts.size()) + " columns");
    }
    if (given.content_hash() != sim.prompts.content_hash()) {
      throw Error(ErrorCode::hash_mismatch, "prompt file does not match the similarity file header");
    }
  }

  json config = {{"mode", std::string(to_string(options.mode))},
                 {"window_seconds", options.window_seconds},
                 {"threshold", options.threshold},
                 {"fit", fit_config_snapshot(options.fit)},
                 {"ingest", options.ingest == IngestMode::strict ? "strict" : "lenient"}};
  OptimizationResult result;
  switch (options.mode) {
    case OptimizationMode::opt:
      result = optimize(sim.series, sim.prompts, options.ga, options.fit, options.window_seconds);
      config["ga"] = json::parse(to_json(options.ga));
      manifest.rng_seed = options.ga.rng_seed;
      break;
    case OptimizationMode::one:
      result = select_one(sim.series, sim.prompts, options.fit, options.window_seconds);
      break;
    case OptimizationMode::all:
      result = select_all(sim.series, sim.prompts, options.fit, options.window_seconds);
      break;
  }
  manifest.config_json = config.dump();

  json report = {{"mode", std::string(to_string(result.mode))},
                 {"signal_found", result.signal_found},
                 {"status", std::string(to_string(result.status))},
                 {"e_value", result.best_fit.e_value},
                 {"fit", json::parse(to_json(result.best_fit))},
                 {"beta_seconds", result.best_fit.beta / sim.series.sample_rate_hz()},
                 {"weights", json::parse(to_json(result.best_weights))},
                 {"normalization", result.normalization ? json::parse(to_json(*result.normalization)) : json()},
                 {"evaluations", result.evaluations},
                 {"generations", result.history.size()},
                 {"clamped_values", sim.series.clamped_count()},
                 {"manifest", json::parse(to_json(manifest))}};

  if (!result.signal_found || !result.normalization || result.best_weights.degenerate()) {
    report["reason"] = "no signal found";
    write_text(options.report_out, out, report.dump(2));
    std::cerr << "statecurve: no signal found (" << to_string(result.status) << ")\n";
    return kExitNoSignal;
  }

  WeightsArtifact artifact{sim.prompts,
                           result.best_weights,
                           result.normalization,
                           result.best_fit,
                           options.fit,
                           result.ga,
                           result.mode,
                           options.window_seconds,
                           sim.series.sample_rate_hz(),
                           result.signal_found,
                           result.history,
                           manifest};
  write_file(options.weights_out, to_json(artifact));
  report["weights_artifact"] = options.weights_out;

  if (options.trace_out) {
    const AggregateSignal signal = build_aggregate(sim.series, sim.prompts, result.best_weights,
                                                   result.normalization->window_samples, result.normalization);
    const auto times = sim.series.times();
    const auto crossing = first_crossing(signal.normalized, options.threshold);
    write_plot(*options.trace_out, plot_rows(signal, times, result.best_fit, crossing), manifest);
    report["t_detected"] = crossing ? json(times[*crossing]) : json();
    report["trace"] = *options.trace_out;
  }
  write_text(options.report_out, out, report.dump(2));
  return kExitOk;
}

// ------------------------------------------------------------------ detect

namespace {

WeightsArtifact load_artifact(const std::string& path) {
  WeightsArtifact artifact = weights_artifact_from_json(read_file(path));
  if (!artifact.normalization) {
    throw Error(ErrorCode::invalid_weights, "weights artifact carries no normalization (no signal was found)");
  }
  return artifact;
}

void require_same_prompts(const WeightsArtifact& artifact, const std::string& hash_hex) {
  if (artifact.prompts.hash_hex() != hash_hex) {
    throw Error(ErrorCode::hash_mismatch, "prompt hash " + hash_hex + " does not match the weights artifact (" +
                                              artifact.prompts.hash_hex() + ")");
  }
}

}  // namespace

int run_detect(const DetectOptions& options, std::istream& in, std::ostream& out) {
  const WeightsArtifact artifact = load_artifact(options.weights_path);
  std::optional<double> t_data;
  if (options.annotation_path) t_data = parse_annotation(read_file(*options.annotation_path));

  Detector detector(artifact.prompts, artifact.weights, *artifact.normalization, options.threshold);
  std::optional<ChangeDetected> event;
  std::vector<TracePoint> trace;
  auto feed = [&](std::span<const double> row, double time) {
    auto fired = detector.step(row, time);
    trace.push_back({time, detector.last_raw(), detector.last_averaged()});
    if (fired) event = fired;
    return fired;
  };

  if (options.similarity_path) {
    const SimilarityFile sim = load_similarity(*options.similarity_path, options.ingest);
    require_same_prompts(artifact, sim.prompts.hash_hex());
    for (std::size_t t = 0; t < sim.series.frames(); ++t) feed(sim.series.row(t), sim.series.time_at(t));
  } else {
    if (options.prompt_hash) require_same_prompts(artifact, *options.prompt_hash);
    const double rate = options.sample_rate_hz.value_or(artifact.sample_rate_hz);
    if (!(rate > 0.0)) throw Error(ErrorCode::invalid_config, "sample rate must be positive");
    std::string line;
    std::size_t k = 0;
    while (std::getline(in, line)) {
      const std::string_view view = line;
      if (view.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      if (view.front() == '#') {
        const auto key = view.find("prompt_hash:");
        if (key != std::string_view::npos) {
          std::string hash(view.substr(key + 12));
          hash.erase(0, hash.find_first_not_of(' '));
          hash.erase(hash.find_last_not_of(" \r") + 1);
          require_same_prompts(artifact, hash);
        }
        continue;
      }
      const auto row = parse_row(view);
      const double time = static_cast<double>(k++) / rate;
      if (const auto fired = feed(row, time)) {
        out << json{{"event", "change_detected"},
                    {"t_detected", fired->t_detected},
                    {"sample", fired->sample},
                    {"value", fired->value}}
                   .dump()
            << std::endl;
      }
    }
  }

  const DetectionReport report =
      make_report(event ? std::optional<double>(event->t_detected) : std::nullopt, t_data, options.threshold,
                  std::move(trace));
  json j = report_json(report);
  j["status"] = report.detected() ? "detected" : "not detected";
  j["samples"] = detector.samples_seen();
  write_text(options.report_out, out, j.dump());
  return report.detected() ? kExitOk : kExitNoSignal;
}

// ---------------------------------------------------------------- evaluate

EvaluationOutcome evaluate_dataset(const Dataset& dataset, const WeightsArtifact& artifact, double threshold) {
  if (dataset.role != DatasetRole::evaluation) {
    throw Error(ErrorCode::invalid_config, "evaluation requires a dataset in the evaluation role");
  }
  if (!artifact.normalization) throw Error(ErrorCode::invalid_weights, "weights artifact carries no normalization");
  require_matching_columns(dataset.series, artifact.prompts);

  EvaluationOutcome outcome;
  outcome.signal = build_aggregate(dataset.series, artifact.prompts, artifact.weights,
                                   artifact.normalization->window_samples, artifact.normalization);
  const auto times = dataset.series.times();
  outcome.report = evaluate_detection(outcome.signal, times, dataset.t_data, threshold);

  FitConfig fit = artifact.fit_config;
  const auto& target = fit.target == FitTarget::averaged ? outcome.signal.normalized
                                                         : normalize(outcome.signal.raw, *artifact.normalization);
  outcome.reference_fit = fit_sigmoid(target, fit);
  outcome.plot = plot_rows(outcome.signal, times, outcome.reference_fit, first_crossing(outcome.signal.normalized, threshold));
  return outcome;
}

int run_evaluate(const EvaluateOptions& options, std::ostream& out) {
  const WeightsArtifact artifact = load_artifact(options.weights_path);
  SimilarityFile sim = load_similarity(options.similarity_path, options.ingest);
  require_same_prompts(artifact, sim.prompts.hash_hex());
  std::optional<double> t_data;
  if (options.annotation_path) t_data = parse_annotation(read_file(*options.annotation_path));

  const Dataset dataset{DatasetRole::evaluation, std::move(sim.series), t_data};
  const EvaluationOutcome outcome = evaluate_dataset(dataset, artifact, options.threshold);

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.input_hashes = {{"weights", file_hash(options.weights_path)},
                           {"similarity", file_hash(options.similarity_path)}};
  if (options.annotation_path) manifest.input_hashes.emplace_back("annotation", file_hash(*options.annotation_path));
  manifest.config_json = json{{"threshold", options.threshold}}.dump();

  const auto [lo, hi] = std::minmax_element(outcome.signal.normalized.begin(), outcome.signal.normalized.end());
  json report = report_json(outcome.report);
  report.erase("trace");
  report["status"] = outcome.report.detected() ? "detected" : "not detected";
  report["e_reference"] = outcome.reference_fit.e_value;
  report["e_reference_only"] = true;
  report["reference_fit"] = json::parse(to_json(outcome.reference_fit));
  report["normalized_min"] = *lo;
  report["normalized_max"] = *hi;
  report["normalization"] = json::parse(to_json(*artifact.normalization));
  report["manifest"] = json::parse(to_json(manifest));
  if (options.trace_out) {
    write_plot(*options.trace_out, outcome.plot, manifest);
    report["trace"] = *options.trace_out;
  }
  write_text(options.report_out, out, report.dump(2));
  return outcome.report.detected() ? kExitOk : kExitNoSignal;
}

// --------------------------------------------------------------- dispatch

namespace {

void add_fit_options(CLI::App& cmd, FitConfig& fit, std::string& target) {
  cmd.add_option("--alpha-init", fit.alpha_init, "Initial sigmoid slope")->capture_default_str();
  cmd.add_option("--beta-init-fraction", fit.beta_init_fraction, "Initial sigmoid centre as a fraction of T")
      ->capture_default_str();
  cmd.add_option("--max-iterations", fit.max_iterations, "Least-squares iteration cap")->capture_default_str();
  cmd.add_option("--residual-tolerance", fit.residual_tolerance, "Relative step-norm stop")->capture_default_str();
  cmd.add_option("--sigma-floor", fit.sigma_floor, "Lower bound on the RMSE in E")->capture_default_str();
  cmd.add_option("--fit-target", target, "Fit the moving average or the raw signal")
      ->check(CLI::IsMember({"averaged", "raw"}))
      ->capture_default_str();
}

void add_ga_options(CLI::App& cmd, GaConfig& ga) {
  cmd.add_option("--population", ga.population_size, "GA population size")->capture_default_str();
  cmd.add_option("--generations", ga.generations, "GA generations")->capture_default_str();
  cmd.add_option("--crossover-prob", ga.crossover_prob, "Blend crossover probability")->capture_default_str();
  cmd.add_option("--mutation-prob", ga.mutation_prob, "Gaussian mutation probability")->capture_default_str();
  cmd.add_option("--mutation-mean", ga.mutation_mean, "Gaussian mutation mean")->capture_default_str();
  cmd.add_option("--mutation-sigma", ga.mutation_sigma, "Gaussian mutation standard deviation")
      ->capture_default_str();
  cmd.add_option("--mutation-gene-prob", ga.mutation_gene_prob, "Per-gene mutation probability (default 1/N)");
  cmd.add_option("--tournament-size", ga.tournament_size, "Tournament size")->capture_default_str();
  cmd.add_option("--blend-alpha", ga.blend_alpha, "Blend crossover extension")->capture_default_str();
  cmd.add_option("--seed", ga.rng_seed, "Random seed")->capture_default_str();
  cmd.add_option("--threads", ga.threads, "Fitness evaluation threads")->capture_default_str();
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::degenerate_weights:
    case ErrorCode::flat_signal:
      return kExitNoSignal;
    default:
      return kExitValidation;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous state recognition from prompt similarity series", "statecurve"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  SynthOptions synth;
  std::string synth_pattern = "iv";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic similarity file with a known change");
  synth_cmd->add_option("--pattern", synth_pattern, "Change shape: i, ii, iii or iv")->capture_default_str();
  synth_cmd->add_option("--frames", synth.spec.frames, "Number of frames T")->capture_default_str();
  synth_cmd->add_option("--sample-rate", synth.spec.sample_rate_hz, "Frame rate in Hz")->capture_default_str();
  synth_cmd->add_option("--informative", synth.spec.n_informative, "Informative columns")->capture_default_str();
  synth_cmd->add_option("--noise", synth.spec.n_noise, "Noise columns")->capture_default_str();
  synth_cmd->add_option("--noise-sd", synth.spec.noise_sd, "Noise standard deviation")->capture_default_str();
  synth_cmd->add_option("--alpha", synth.spec.true_alpha, "True sigmoid slope (per frame)");
  synth_cmd->add_option("--beta", synth.spec.true_beta, "True sigmoid centre (frame index)");
  synth_cmd->add_option("--annotation-level", synth.spec.annotation_level, "Fraction of the change at t_data")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.spec.rng_seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out_prefix, "Output path prefix")->capture_default_str();

  OptimizeOptions opt;
  std::string opt_mode = "opt";
  std::string opt_target = "averaged";
  bool opt_lenient = false;
  auto* opt_cmd = app.add_subcommand("optimize", "Fit prompt weights on an optimization recording");
  opt_cmd->add_option("--similarity", opt.similarity_path, "Similarity file")->required();
  opt_cmd->add_option("--prompts", opt.prompts_path, "Prompt file (checked against the similarity header)");
  opt_cmd->add_option("--mode", opt_mode, "opt, one or all")
      ->check(CLI::IsMember({"opt", "one", "all"}))
      ->capture_default_str();
  opt_cmd->add_option("--window-seconds", opt.window_seconds, "Moving average window")->capture_default_str();
  opt_cmd->add_option("--threshold", opt.threshold, "Detection threshold for the exported trace")
      ->capture_default_str();
  opt_cmd->add_option("--out", opt.weights_out, "Weights artifact path")->capture_default_str();
  opt_cmd->add_option("--report", opt.report_out, "Report path (default stdout)");
  opt_cmd->add_option("--trace", opt.trace_out, "Plot-data CSV path");
  opt_cmd->add_flag("--lenient", opt_lenient, "Clamp similarities outside [-1, 1] instead of failing");
  add_ga_options(*opt_cmd, opt.ga);
  add_fit_options(*opt_cmd, opt.fit, opt_target);

  DetectOptions det;
  bool det_lenient = false;
  bool det_stream = false;
  auto* det_cmd = app.add_subcommand("detect", "Run the threshold detector on a file or a row stream");
  det_cmd->add_option("--weights", det.weights_path, "Weights artifact")->required();
  auto* det_file = det_cmd->add_option("--similarity", det.similarity_path, "Similarity file");
  auto* det_stream_flag = det_cmd->add_flag("--stream", det_stream, "Read rows of N values from stdin");
  det_file->excludes(det_stream_flag);
  det_cmd->add_option("--threshold", det.threshold, "Detection threshold")->capture_default_str();
  det_cmd->add_option("--sample-rate", det.sample_rate_hz, "Stream frame rate (default from the artifact)");
  det_cmd->add_option("--prompt-hash", det.prompt_hash, "Expected prompt hash of the stream");
  det_cmd->add_option("--annotation", det.annotation_path, "Annotation file with t_data");
  det_cmd->add_option("--report", det.report_out, "Report path (default stdout)");
  det_cmd->add_flag("--lenient", det_lenient, "Clamp similarities outside [-1, 1]");

  EvaluateOptions ev;
  bool ev_lenient = false;
  auto* ev_cmd = app.add_subcommand("evaluate", "Evaluate frozen weights on a held-out recording");
  ev_cmd->add_option("--weights", ev.weights_path, "Weights artifact")->required();
  ev_cmd->add_option("--similarity", ev.similarity_path, "Evaluation similarity file")->required();
  ev_cmd->add_option("--annotation", ev.annotation_path, "Annotation file with t_data");
  ev_cmd->add_option("--threshold", ev.threshold, "Detection threshold")->capture_default_str();
  ev_cmd->add_option("--report", ev.report_out, "Report path (default stdout)");
  ev_cmd->add_option("--trace", ev.trace_out, "Plot-data CSV path");
  ev_cmd->add_flag("--lenient", ev_lenient, "Clamp similarities outside [-1, 1]");

  std::vector<std::string> argv_storage{"statecurve"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*synth_cmd) {
      synth.spec.pattern = parse_pattern(synth_pattern);
      return run_synth(synth, out);
    }
    if (*opt_cmd) {
      opt.mode = parse_mode(opt_mode);
      opt.fit.target = opt_target == "raw" ? FitTarget::raw : FitTarget::averaged;
      opt.ingest = opt_lenient ? IngestMode::lenient : IngestMode::strict;
      return run_optimize(opt, out);
    }
    if (*det_cmd) {
      if (!det.similarity_path && !det_stream) {
        err << "statecurve detect: pass --similarity FILE or --stream\n";
        return kExitValidation;
      }
      det.ingest = det_lenient ? IngestMode::lenient : IngestMode::strict;
      return run_detect(det, in, out);
    }
    if (*ev_cmd) {
      ev.ingest = ev_lenient ? IngestMode::lenient : IngestMode::strict;
      return run_evaluate(ev, out);
    }
  } catch (const Error& e) {
    err << "statecurve: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "statecurve: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace statecurve::cli
