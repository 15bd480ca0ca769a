#include "statecurve/formats.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#ifndef STATECURVE_VERSION
#define STATECURVE_VERSION "0.0.0"
#endif

namespace statecurve {

using nlohmann::json;

std::string_view version() noexcept { return STATECURVE_VERSION; }

namespace {

constexpr std::string_view kSimilarityMagic = "statecurve-similarity 1";
constexpr std::string_view kWeightsFormat = "statecurve-weights/1";

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string(what) + ": " + e.what());
  }
}

// Typed field access that reports the offending key.
template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::parse_error, std::string("missing field \"") + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::parse_error, std::string("field \"") + key + "\" has the wrong type");
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return field<T>(obj, key);
}

json fit_json(const SigmoidFit& fit) {
  return {{"alpha", fit.alpha},         {"beta", fit.beta},
          {"sigma", fit.sigma},         {"e_value", fit.e_value},
          {"converged", fit.converged}, {"iterations", fit.iterations},
          {"termination", std::string(to_string(fit.termination))}};
}

FitTermination parse_termination(const std::string& s) {
  for (auto t : {FitTermination::step_tolerance, FitTermination::no_improvement, FitTermination::max_iterations,
                 FitTermination::non_finite}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::parse_error, "unknown fit termination \"" + s + "\"");
}

SigmoidFit fit_from(const json& j) {
  SigmoidFit fit;
  fit.alpha = field<double>(j, "alpha");
  fit.beta = field<double>(j, "beta");
  fit.sigma = field<double>(j, "sigma");
  fit.e_value = field<double>(j, "e_value");
  fit.converged = field<bool>(j, "converged");
  fit.iterations = field_or<std::size_t>(j, "iterations", 0);
  fit.termination = parse_termination(field_or<std::string>(j, "termination", "max_iterations"));
  return fit;
}

json norm_json(const NormalizationParams& p) {
  return {{"a_min", p.a_min}, {"a_max", p.a_max}, {"window_samples", p.window_samples}};
}

NormalizationParams norm_from(const json& j) {
  NormalizationParams p{field<double>(j, "a_min"), field<double>(j, "a_max"), field<std::size_t>(j, "window_samples")};
  p.validate();
  return p;
}

json fit_config_json(const FitConfig& c) {
  return {{"alpha_init", c.alpha_init},
          {"beta_init_fraction", c.beta_init_fraction},
          {"max_iterations", c.max_iterations},
          {"residual_tolerance", c.residual_tolerance},
          {"sigma_floor", c.sigma_floor},
          {"target", std::string(to_string(c.target))}};
}

FitConfig fit_config_from(const json& j) {
  FitConfig c;
  c.alpha_init = field<double>(j, "alpha_init");
  c.beta_init_fraction = field<double>(j, "beta_init_fraction");
  c.max_iterations = field<std::size_t>(j, "max_iterations");
  c.residual_tolerance = field<double>(j, "residual_tolerance");
  c.sigma_floor = field<double>(j, "sigma_floor");
  const auto target = field_or<std::string>(j, "target", "averaged");
  if (target != "averaged" && target != "raw") throw Error(ErrorCode::parse_error, "unknown fit target " + target);
  c.target = target == "raw" ? FitTarget::raw : FitTarget::averaged;
  c.validate();
  return c;
}

json ga_config_json(const GaConfig& c) {
  json j = {{"population_size", c.population_size},
            {"generations", c.generations},
            {"crossover_prob", c.crossover_prob},
            {"mutation_prob", c.mutation_prob},
            {"mutation_mean", c.mutation_mean},
            {"mutation_sigma", c.mutation_sigma},
            {"mutation_gene_prob", nullptr},
            {"tournament_size", c.tournament_size},
            {"blend_alpha", c.blend_alpha},
            {"rng_seed", c.rng_seed},
            {"threads", c.threads}};
  if (c.mutation_gene_prob) j["mutation_gene_prob"] = *c.mutation_gene_prob;
  return j;
}

GaConfig ga_config_from(const json& j) {
  GaConfig c;
  c.population_size = field<std::size_t>(j, "population_size");
  c.generations = field<std::size_t>(j, "generations");
  c.crossover_prob = field<double>(j, "crossover_prob");
  c.mutation_prob = field<double>(j, "mutation_prob");
  c.mutation_mean = field<double>(j, "mutation_mean");
  c.mutation_sigma = field<double>(j, "mutation_sigma");
  if (j.contains("mutation_gene_prob") && !j.at("mutation_gene_prob").is_null()) {
    c.mutation_gene_prob = field<double>(j, "mutation_gene_prob");
  }
  c.tournament_size = field<std::size_t>(j, "tournament_size");
  c.blend_alpha = field<double>(j, "blend_alpha");
  c.rng_seed = field<std::uint64_t>(j, "rng_seed");
  c.threads = field_or<std::size_t>(j, "threads", 1);
  c.validate();
  return c;
}

json prompts_json(const PromptSet& prompts) {
  json arr = json::array();
  for (const auto& p : prompts.prompts()) arr.push_back({{"text", p.text}, {"polarity", p.polarity}});
  return arr;
}

PromptSet prompts_from(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::parse_error, "prompts must be an array");
  std::vector<Prompt> prompts;
  std::vector<std::string> violations;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& item = arr[i];
    const auto where = "prompt " + std::to_string(i);
    if (!item.is_object()) {
      violations.push_back(where + ": not an object");
      continue;
    }
    Prompt p;
    if (item.contains("text") && item["text"].is_string()) {
      p.text = item["text"].get<std::string>();
    } else {
      violations.push_back(where + ": missing text");
    }
    if (item.contains("polarity") && item["polarity"].is_number_integer()) {
      const auto v = item["polarity"].get<long long>();
      p.polarity = (v == 1 || v == -1) ? static_cast<int>(v) : 0;
      if (p.polarity == 0) violations.push_back(where + ": invalid polarity " + std::to_string(v));
    } else {
      violations.push_back(where + ": invalid polarity (must be the integer 1 or -1)");
    }
    prompts.push_back(std::move(p));
  }
  if (!violations.empty()) {
    // Collect set-level violations (empty text, duplicates) alongside.
    try {
      std::vector<Prompt> valid;
      for (const auto& p : prompts) {
        if (p.polarity != 0) valid.push_back(p);
      }
      PromptSet::create(std::move(valid));
    } catch (const Error& e) {
      for (const auto& v : e.violations()) {
        if (v.find("polarity") == std::string::npos) violations.push_back(v);
      }
    }
    throw Error(ErrorCode::invalid_prompt_set, "invalid prompt set", std::move(violations));
  }
  return PromptSet::create(std::move(prompts));
}

json manifest_json(const RunManifest& m) {
  json inputs = json::object();
  for (const auto& [name, hash] : m.input_hashes) inputs[name] = hash;
  json j = {{"command", m.command},
            {"config", parse_json(m.config_json, "manifest config")},
            {"inputs", inputs},
            {"rng_seed", nullptr},
            {"tool_version", m.tool_version}};
  if (m.rng_seed) j["rng_seed"] = *m.rng_seed;
  return j;
}

RunManifest manifest_from(const json& j) {
  RunManifest m;
  m.command = field<std::string>(j, "command");
  m.config_json = j.contains("config") ? j.at("config").dump() : "{}";
  if (j.contains("inputs")) {
    for (const auto& [name, hash] : j.at("inputs").items()) m.input_hashes.emplace_back(name, hash.get<std::string>());
  }
  if (j.contains("rng_seed") && !j.at("rng_seed").is_null()) m.rng_seed = field<std::uint64_t>(j, "rng_seed");
  m.tool_version = field_or<std::string>(j, "tool_version", "");
  return m;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_number_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<double>(j, key);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view token, std::size_t line_no) {
  token = trim(token);
  double v = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw Error(ErrorCode::parse_error,
                "line " + std::to_string(line_no) + ": cannot parse number \"" + std::string(token) + "\"");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

// ---------------------------------------------------------------- manifest

std::string to_json(const RunManifest& manifest) { return manifest_json(manifest).dump(); }

RunManifest manifest_from_json(std::string_view text) { return manifest_from(parse_json(text, "manifest")); }

// ------------------------------------------------------------------ prompts

PromptSet validate_prompt_set(std::string_view document) {
  const json j = parse_json(document, "prompt file");
  if (j.is_array()) return prompts_from(j);
  if (j.is_object() && j.contains("prompts")) return prompts_from(j.at("prompts"));
  throw Error(ErrorCode::parse_error, "prompt file must be an array or an object with a \"prompts\" array");
}

std::string to_json(const PromptSet& prompts) { return json{{"prompts", prompts_json(prompts)}}.dump(2) + "\n"; }

// --------------------------------------------------------- similarity file

void write_similarity_file(std::ostream& out, const SimilarityFile& file) {
  require_matching_columns(file.series, file.prompts);
  out << "# " << kSimilarityMagic << "\n";
  out << "# sample_rate_hz: " << format_double(file.series.sample_rate_hz()) << "\n";
  out << "# prompt_hash: " << file.prompts.hash_hex() << "\n";
  for (const auto& p : file.prompts.prompts()) {
    out << "# prompt: " << (p.polarity > 0 ? "+1" : "-1") << "\t" << p.text << "\n";
  }
  for (const auto& [key, value] : file.extra_header) out << "# " << key << ": " << value << "\n";
  if (file.manifest) out << "# manifest: " << to_json(*file.manifest) << "\n";

  out << "time";
  for (std::size_t i = 0; i < file.prompts.size(); ++i) out << ",s" << i;
  out << "\n";
  std::string line;
  for (std::size_t t = 0; t < file.series.frames(); ++t) {
    line = format_double(file.series.time_at(t));
    for (double v : file.series.row(t)) {
      line += ',';
      line += format_double(v);
    }
    line += '\n';
    out << line;
  }
}

SimilarityFile read_similarity_file(std::istream& in, IngestMode mode) {
  std::string line;
  std::size_t line_no = 0;
  bool magic = false;
  std::optional<double> rate;
  std::optional<std::string> hash;
  std::optional<RunManifest> manifest;
  std::vector<Prompt> prompts;
  std::vector<std::pair<std::string, std::string>> extra;
  std::optional<std::vector<std::string>> columns;
  std::vector<double> values;
  std::vector<double> times;
  std::size_t frames = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (trim(view).empty()) continue;

    if (view.front() == '#') {
      if (columns) throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": header after data");
      std::string_view body = view.substr(1);
      if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body == kSimilarityMagic) {
        magic = true;
        continue;
      }
      const auto colon = body.find(": ");
      if (colon == std::string_view::npos) continue;  // free comment
      const std::string key(body.substr(0, colon));
      const std::string_view value = body.substr(colon + 2);
      if (key == "sample_rate_hz") {
        rate = parse_double(value, line_no);
      } else if (key == "prompt_hash") {
        hash = std::string(trim(value));
      } else if (key == "prompt") {
        const auto tab = value.find('\t');
        if (tab == std::string_view::npos) {
          throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": prompt line needs a tab");
        }
        const auto pol = trim(value.substr(0, tab));
        int polarity = 0;
        if (pol == "+1" || pol == "1") polarity = 1;
        if (pol == "-1") polarity = -1;
        prompts.push_back({std::string(value.substr(tab + 1)), polarity});
      } else if (key == "manifest") {
        manifest = manifest_from_json(value);
      } else {
        extra.emplace_back(key, std::string(value));
      }
      continue;
    }

    if (!columns) {
      std::vector<std::string> names;
      std::stringstream ss{std::string(view)};
      std::string name;
      while (std::getline(ss, name, ',')) names.emplace_back(trim(name));
      columns = std::move(names);
      continue;
    }

    std::size_t count = 0;
    std::size_t start = 0;
    while (start <= view.size()) {
      const auto comma = view.find(',', start);
      const auto token = view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      const double v = parse_double(token, line_no);
      if (count == 0) {
        times.push_back(v);
      } else {
        values.push_back(v);
      }
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != columns->size()) {
      throw Error(ErrorCode::invalid_series, "ragged rows",
                  {"line " + std::to_string(line_no) + " has " + std::to_string(count) + " fields, expected " +
                   std::to_string(columns->size())});
    }
    ++frames;
  }

  if (!magic) throw Error(ErrorCode::parse_error, "not a similarity file (missing format line)");
  if (!rate) throw Error(ErrorCode::parse_error, "missing sample_rate_hz header");
  if (!columns) throw Error(ErrorCode::parse_error, "missing column header");
  PromptSet prompt_set = PromptSet::create(std::move(prompts));
  if (hash && *hash != prompt_set.hash_hex()) {
    throw Error(ErrorCode::hash_mismatch, "header prompt_hash " + *hash + " does not match prompts (" +
                                              prompt_set.hash_hex() + ")");
  }
  std::vector<std::string> violations;
  if (columns->size() != prompt_set.size() + 1) {
    violations.push_back("expected " + std::to_string(prompt_set.size() + 1) + " columns, found " +
                         std::to_string(columns->size()));
  } else {
    if ((*columns)[0] != "time") violations.emplace_back("first column must be \"time\"");
    for (std::size_t i = 0; i < prompt_set.size(); ++i) {
      if ((*columns)[i + 1] != "s" + std::to_string(i)) {
        violations.push_back("column " + std::to_string(i + 1) + " is \"" + (*columns)[i + 1] + "\", expected s" +
                             std::to_string(i) + " (columns must follow prompt order)");
      }
    }
  }
  if (!violations.empty()) throw Error(ErrorCode::invalid_series, "column layout", std::move(violations));

  std::optional<std::vector<double>> stamps;
  for (std::size_t t = 0; t < times.size(); ++t) {
    if (times[t] != static_cast<double>(t) / *rate) {
      stamps = std::move(times);
      break;
    }
  }
  SimilaritySeries series =
      SimilaritySeries::from_flat(std::move(values), frames, prompt_set.size(), *rate, std::move(stamps), mode);
  return SimilarityFile{std::move(prompt_set), std::move(series), std::move(manifest), std::move(extra)};
}

std::vector<double> parse_row(std::string_view line) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' && line[j] != '\r') ++j;
    out.push_back(parse_double(line.substr(i, j - i), 0));
    i = j;
  }
  return out;
}

// --------------------------------------------------------- weights artifact

std::string to_json(const WeightsArtifact& a) {
  if (a.weights.degenerate()) throw Error(ErrorCode::degenerate_weights, "refusing to write all-zero weights");
  json history = json::array();
  for (const auto& h : a.history) history.push_back({h.best_e, h.mean_e});
  json j = {{"format", kWeightsFormat},
            {"mode", std::string(to_string(a.mode))},
            {"prompt_hash", a.prompts.hash_hex()},
            {"prompts", prompts_json(a.prompts)},
            {"weights", std::vector<double>(a.weights.values().begin(), a.weights.values().end())},
            {"normalization", a.normalization ? norm_json(*a.normalization) : json(nullptr)},
            {"window_seconds", a.window_seconds},
            {"sample_rate_hz", a.sample_rate_hz},
            {"fit", fit_json(a.fit)},
            {"fit_config", fit_config_json(a.fit_config)},
            {"ga_config", a.ga_config ? ga_config_json(*a.ga_config) : json(nullptr)},
            {"signal_found", a.signal_found},
            {"history", history},
            {"manifest", manifest_json(a.manifest)}};
  return j.dump(2) + "\n";
}

WeightsArtifact weights_artifact_from_json(std::string_view text) {
  const json j = parse_json(text, "weights artifact");
  if (field<std::string>(j, "format") != kWeightsFormat) {
    throw Error(ErrorCode::parse_error, "unsupported weights artifact format");
  }
  PromptSet prompts = prompts_from(j.at("prompts"));
  const auto hash = field<std::string>(j, "prompt_hash");
  if (hash != prompts.hash_hex()) {
    throw Error(ErrorCode::hash_mismatch, "weights artifact prompt_hash " + hash + " does not match its prompts (" +
                                              prompts.hash_hex() + ")");
  }
  WeightVector weights(field<std::vector<double>>(j, "weights"));
  if (weights.size() != prompts.size()) {
    throw Error(ErrorCode::dimension_mismatch, "weights artifact has " + std::to_string(weights.size()) +
                                                   " weights for " + std::to_string(prompts.size()) + " prompts");
  }
  std::optional<NormalizationParams> norm;
  if (!j.at("normalization").is_null()) norm = norm_from(j.at("normalization"));
  std::optional<GaConfig> ga;
  if (j.contains("ga_config") && !j.at("ga_config").is_null()) ga = ga_config_from(j.at("ga_config"));
  std::vector<GenerationStats> history;
  for (const auto& h : j.at("history")) history.push_back({h.at(0).get<double>(), h.at(1).get<double>()});

  return WeightsArtifact{std::move(prompts),
                         std::move(weights),
                         norm,
                         fit_from(j.at("fit")),
                         fit_config_from(j.at("fit_config")),
                         ga,
                         parse_mode(field<std::string>(j, "mode")),
                         field<double>(j, "window_seconds"),
                         field<double>(j, "sample_rate_hz"),
                         field<bool>(j, "signal_found"),
                         std::move(history),
                         manifest_from(j.at("manifest"))};
}

// --------------------------------------------------------------- annotation

double parse_annotation(std::string_view text) {
  const json j = parse_json(text, "annotation");
  if (j.is_number()) return j.get<double>();
  return field<double>(j, "t_data");
}

std::string annotation_to_json(double t_data) { return json{{"t_data", t_data}}.dump() + "\n"; }

// -------------------------------------------------------------- value types

std::string to_json(const WeightVector& w) {
  return json(std::vector<double>(w.values().begin(), w.values().end())).dump();
}

WeightVector weight_vector_from_json(std::string_view text) {
  const json j = parse_json(text, "weights");
  try {
    return WeightVector(j.get<std::vector<double>>());
  } catch (const json::exception&) {
    throw Error(ErrorCode::parse_error, "weights must be an array of numbers");
  }
}

std::string to_json(const NormalizationParams& p) { return norm_json(p).dump(); }
NormalizationParams normalization_from_json(std::string_view text) {
  return norm_from(parse_json(text, "normalization"));
}

std::string to_json(const SigmoidFit& fit) { return fit_json(fit).dump(); }
SigmoidFit sigmoid_fit_from_json(std::string_view text) { return fit_from(parse_json(text, "fit")); }

std::string to_json(const FitConfig& c) { return fit_config_json(c).dump(); }
FitConfig fit_config_from_json(std::string_view text) { return fit_config_from(parse_json(text, "fit config")); }

std::string to_json(const GaConfig& c) { return ga_config_json(c).dump(); }
GaConfig ga_config_from_json(std::string_view text) { return ga_config_from(parse_json(text, "GA config")); }

std::string to_json(const DetectionReport& r) {
  json trace = json::array();
  for (const auto& p : r.trace) trace.push_back({p.time, p.raw, p.averaged});
  return json{{"detected", r.detected()},
              {"t_detected", optional_number(r.t_detected)},
              {"t_data", optional_number(r.t_data)},
              {"t_diff", optional_number(r.t_diff)},
              {"threshold", r.threshold},
              {"trace", trace}}
      .dump();
}

DetectionReport detection_report_from_json(std::string_view text) {
  const json j = parse_json(text, "detection report");
  std::vector<TracePoint> trace;
  if (j.contains("trace")) {
    for (const auto& p : j.at("trace")) trace.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  }
  DetectionReport r = make_report(optional_number_from(j, "t_detected"), optional_number_from(j, "t_data"),
                                  field<double>(j, "threshold"), std::move(trace));
  const auto stored = optional_number_from(j, "t_diff");
  if (stored.has_value() != r.t_diff.has_value()) {
    throw Error(ErrorCode::parse_error, "t_diff must be present exactly when t_detected and t_data are");
  }
  return r;
}

// ----------------------------------------------------------------- plotting

void write_plot_csv(std::ostream& out, const std::vector<PlotRow>& rows, const RunManifest& manifest) {
  out << "# manifest: " << to_json(manifest) << "\n";
  out << kPlotColumns << "\n";
  for (const auto& r : rows) {
    out << format_double(r.time) << ',' << format_double(r.raw) << ',' << format_double(r.average) << ','
        << format_double(r.sigmoid) << ',' << r.detected << '\n';
  }
}

// ---------------------------------------------------------------------- io

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

}  // namespace statecurve
