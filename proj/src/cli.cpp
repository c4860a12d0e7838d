// SPDX-License-Identifier: Apache-2.0
#include "phylab/cli.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phylab/metrics.hpp"
#include "phylab/nn.hpp"
#include "phylab/rng.hpp"
#include "phylab/textcfg.hpp"

namespace phylab::cli {

namespace {

using experiments::ConfigError;

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("cannot write " + path);
}

/// Effective entries: last value wins per (section, key), sorted.
std::map<std::pair<std::string, std::string>, std::string> normalized(
    const SectionedConfig& config) {
  std::map<std::pair<std::string, std::string>, std::string> eff;
  for (const auto& e : config) eff[{e.section, e.key}] = e.value;
  return eff;
}

// Little-endian primitive writers for the dataset container.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

void put_matrix(std::string& out, const RealMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
}

struct DatasetPlan {
  std::int64_t train = 0;
  std::int64_t validation = 0;
  std::int64_t test = 0;
  std::string variant;  // empty = experiment default
};

DatasetPlan dataset_plan(const SectionedConfig& config) {
  DatasetPlan plan;
  const std::string train = lookup(config, "dataset", "train", "");
  if (train.empty()) throw ConfigError("dataset.train", "missing required key");
  try {
    plan.train = textcfg::parse_int(train);
    plan.validation = textcfg::parse_int(lookup(config, "dataset", "validation", "0"));
    plan.test = textcfg::parse_int(lookup(config, "dataset", "test", "0"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("dataset.sizes", e.what());
  }
  plan.variant = lookup(config, "dataset", "variant", "");
  return plan;
}

/// Rejects sections and dispatcher keys the command would silently ignore.
void audit_sections(const SectionedConfig& config, const std::string& experiment) {
  for (const auto& e : config) {
    if (e.section == "experiment") {
      if (e.key != "name") throw ConfigError("experiment." + e.key, "unknown key");
    } else if (e.section == "dataset") {
      if (e.key != "train" && e.key != "validation" && e.key != "test" && e.key != "variant")
        throw ConfigError("dataset." + e.key, "unknown key");
    } else if (e.section != experiment) {
      throw ConfigError(e.section + "." + e.key,
                        "unknown section for experiment '" + experiment + "'");
    }
  }
}

std::string resolved_experiment(const SectionedConfig& config) {
  const std::string name = lookup(config, "experiment", "name", "");
  if (name.empty()) throw ConfigError("experiment.name", "missing required key");
  return name;
}

std::string manifest_json(const std::string& command, const std::string& experiment,
                          const std::string& config_path, const std::string& hash,
                          std::uint64_t master_seed, const std::string& outdir,
                          const SectionedConfig& config) {
  std::ostringstream j;
  j << "{\n";
  j << "  \"toolkit_version\": \"" << json_escape(kToolkitVersion) << "\",\n";
  j << "  \"command\": \"" << json_escape(command) << "\",\n";
  j << "  \"experiment\": \"" << json_escape(experiment) << "\",\n";
  j << "  \"config_path\": \"" << json_escape(config_path) << "\",\n";
  j << "  \"config_hash\": \"" << hash << "\",\n";
  j << "  \"master_seed\": " << master_seed << ",\n";
  j << "  \"output_dir\": \"" << json_escape(outdir) << "\",\n";
  j << "  \"config\": {";
  const auto eff = normalized(config);
  bool first = true;
  for (const auto& [sk, value] : eff) {
    j << (first ? "\n" : ",\n");
    j << "    \"" << json_escape(sk.first + "." + sk.second) << "\": \"" << json_escape(value)
      << "\"";
    first = false;
  }
  j << "\n  }\n}\n";
  return j.str();
}

std::string summary_json(const experiments::SweepResult& result,
                         const std::vector<std::string>& model_files) {
  std::ostringstream j;
  j << "{\n";
  j << "  \"experiment\": \"" << json_escape(result.experiment) << "\",\n";
  j << "  \"master_seed\": " << result.master_seed << ",\n";
  j << "  \"rows\": " << result.rows.size() << ",\n";
  j << "  \"wall_seconds\": " << fmt9(result.wall_seconds) << ",\n";
  j << "  \"models\": [";
  for (std::size_t i = 0; i < model_files.size(); ++i)
    j << (i ? ", " : "") << "\"" << json_escape(model_files[i]) << "\"";
  j << "],\n";
  j << "  \"diagnostics\": {";
  bool first = true;
  for (const auto& [key, value] : result.diagnostics) {
    j << (first ? "\n" : ",\n");
    j << "    \"" << json_escape(key) << "\": " << fmt17(value);
    first = false;
  }
  j << "\n  }\n}\n";
  return j.str();
}

std::string resolve_outdir(const std::string& explicit_out, const std::string& experiment,
                           const std::string& hash) {
  if (!explicit_out.empty()) return explicit_out;
  const char* root = std::getenv("PHYLAB_OUT");
  const std::string base = (root != nullptr && *root != '\0') ? root : ".";
  return base + "/" + experiment + "_" + hash;
}

constexpr const char* kUsage =
    "usage:\n"
    "  phylab experiment list [--json]\n"
    "  phylab experiment run <config.cfg> [--set key=value ...] [--out dir]\n"
    "  phylab dataset gen <config.cfg> [--set key=value ...] [--out dir]\n"
    "  phylab gradcheck\n"
    "\n"
    "Output directory defaults to $PHYLAB_OUT/<experiment>_<confighash>\n"
    "(falling back to the working directory when PHYLAB_OUT is unset).\n"
    "Config format and on-disk layouts are documented in docs/.\n";

struct RunArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
};

RunArgs parse_run_args(const std::vector<std::string>& args, std::size_t begin) {
  RunArgs parsed;
  for (std::size_t i = begin; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--set" || a == "--out") {
      if (i + 1 >= args.size()) throw std::runtime_error(a + " needs an argument");
      if (a == "--set")
        parsed.overrides.push_back(args[++i]);
      else
        parsed.out_dir = args[++i];
    } else if (a.rfind("--set=", 0) == 0) {
      parsed.overrides.push_back(a.substr(6));
    } else if (a.rfind("--out=", 0) == 0) {
      parsed.out_dir = a.substr(6);
    } else if (!a.empty() && a[0] == '-') {
      throw std::runtime_error("unknown flag '" + a + "'");
    } else if (parsed.config_path.empty()) {
      parsed.config_path = a;
    } else {
      throw std::runtime_error("unexpected argument '" + a + "'");
    }
  }
  if (parsed.config_path.empty()) throw std::runtime_error("missing config file argument");
  return parsed;
}

SectionedConfig load_effective_config(const RunArgs& run) {
  SectionedConfig config = load_config_file(run.config_path);
  // Bare override keys target the experiment section as named at that point,
  // so a qualified experiment.name override redirects later bare keys.
  for (const std::string& assignment : run.overrides)
    apply_override(config, assignment, resolved_experiment(config));
  return config;
}

int cmd_experiment_list(const std::vector<std::string>& args, std::size_t begin,
                        std::ostream& out) {
  bool json = false;
  for (std::size_t i = begin; i < args.size(); ++i) {
    if (args[i] == "--json")
      json = true;
    else
      throw std::runtime_error("unknown flag '" + args[i] + "'");
  }
  const auto& catalog = experiments::experiment_catalog();
  if (json) {
    out << "[";
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      out << (i ? ",\n " : "\n ");
      out << "{\"name\": \"" << json_escape(catalog[i].name) << "\", \"description\": \""
          << json_escape(catalog[i].description) << "\"}";
    }
    out << "\n]\n";
  } else {
    for (const auto& info : catalog) out << info.name << "\n  " << info.description << "\n";
  }
  return 0;
}

int cmd_experiment_run(const RunArgs& run, std::ostream& out) {
  const SectionedConfig config = load_effective_config(run);
  const std::string experiment = resolved_experiment(config);
  audit_sections(config, experiment);
  const experiments::KeyValueList settings = section_settings(config, experiment);
  const std::uint64_t master_seed = experiments::validate_named_experiment(experiment, settings);
  const std::string hash = config_hash(config);
  const std::string outdir = resolve_outdir(run.out_dir, experiment, hash);

  std::filesystem::create_directories(outdir);
  write_file(outdir + "/manifest.json",
             manifest_json("experiment run", experiment, run.config_path, hash, master_seed,
                           outdir, config));

  const experiments::SweepResult result = experiments::run_named_experiment(experiment, settings);

  write_file(outdir + "/results.csv", format_results_csv(result, master_seed, hash));
  std::vector<std::string> model_files;
  if (!result.models.empty()) {
    std::filesystem::create_directories(outdir + "/models");
    for (const auto& m : result.models) {
      const std::string rel = "models/" + m.name + ".net";
      nn::save_checkpoint(m.model, outdir + "/" + rel);
      model_files.push_back(rel);
    }
  }
  write_file(outdir + "/summary.json", summary_json(result, model_files));

  out << "wrote " << outdir << "/results.csv (" << result.rows.size() << " rows, "
      << model_files.size() << " checkpoints)\n";
  return 0;
}

int cmd_dataset_gen(const RunArgs& run, std::ostream& out) {
  const SectionedConfig config = load_effective_config(run);
  const std::string experiment = resolved_experiment(config);
  audit_sections(config, experiment);
  experiments::KeyValueList settings = section_settings(config, experiment);
  const DatasetPlan plan = dataset_plan(config);
  if (!plan.variant.empty()) settings.push_back({"dataset_variant", plan.variant});

  const std::uint64_t master_seed = experiments::validate_named_experiment(experiment, settings);
  const std::string hash = config_hash(config);
  const std::string outdir = resolve_outdir(run.out_dir, experiment, hash);

  std::filesystem::create_directories(outdir);
  write_file(outdir + "/manifest.json",
             manifest_json("dataset gen", experiment, run.config_path, hash, master_seed, outdir,
                           config));

  const experiments::SplitDataset data = experiments::generate_dataset(
      experiment, settings, plan.train, plan.validation, plan.test);

  // Container layout is documented in docs/formats.md; all integers and
  // doubles little-endian, matrices row-major.
  std::string blob;
  const std::uint64_t payload =
      static_cast<std::uint64_t>(data.train.features.size() + data.train.labels.size() +
                                 data.validation.features.size() + data.validation.labels.size() +
                                 data.test.features.size() + data.test.labels.size());
  blob.reserve(128 + payload * 8);
  blob += "PHYDSET1";
  put_u64(blob, master_seed);
  put_u32(blob, static_cast<std::uint32_t>(data.train.features.cols()));
  put_u32(blob, static_cast<std::uint32_t>(data.train.labels.cols()));
  put_u64(blob, static_cast<std::uint64_t>(data.train.features.rows()));
  put_u64(blob, static_cast<std::uint64_t>(data.validation.features.rows()));
  put_u64(blob, static_cast<std::uint64_t>(data.test.features.rows()));
  put_string(blob, experiment);
  put_string(blob, plan.variant);
  for (const nn::Dataset* split : {&data.train, &data.validation, &data.test}) {
    put_matrix(blob, split->features);
    put_matrix(blob, split->labels);
  }
  write_file(outdir + "/dataset.phyds", blob);

  out << "wrote " << outdir << "/dataset.phyds (train " << data.train.features.rows()
      << ", validation " << data.validation.features.rows() << ", test "
      << data.test.features.rows() << ", features " << data.train.features.cols() << ", labels "
      << data.train.labels.cols() << ")\n";
  return 0;
}

int cmd_gradcheck(std::ostream& out) {
  constexpr double kTol = 1e-6;
  const std::vector<GradCheckCase> cases = gradcheck_suite();
  double worst = 0.0;
  int failures = 0;
  for (const auto& c : cases) {
    out << c.name;
    for (std::size_t i = c.name.size(); i < 22; ++i) out << ' ';
    out << "max " << fmt9(c.max_rel_error) << " | layers";
    for (double e : c.per_layer_max) out << ' ' << fmt9(e);
    out << "\n";
    worst = std::max(worst, c.max_rel_error);
    failures += c.max_rel_error > kTol;
  }
  out << "gradcheck: " << (cases.size() - static_cast<std::size_t>(failures)) << "/"
      << cases.size() << " cases within " << fmt9(kTol) << " (max " << fmt9(worst) << ")\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

SectionedConfig parse_config_text(const std::string& text) {
  SectionedConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = textcfg::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config.format",
                          "bad section header at line " + std::to_string(line_no));
      section = textcfg::trim(t.substr(1, t.size() - 2));
      if (!valid_name(section))
        throw ConfigError("config.format",
                          "bad section name at line " + std::to_string(line_no));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config.format",
                        "expected key = value at line " + std::to_string(line_no));
    const std::string key = textcfg::trim(t.substr(0, eq));
    if (!valid_name(key))
      throw ConfigError("config.format", "bad key name at line " + std::to_string(line_no));
    if (section.empty())
      throw ConfigError("config.format",
                        "key outside any section at line " + std::to_string(line_no));
    config.push_back({section, key, textcfg::trim(t.substr(eq + 1))});
  }
  return config;
}

SectionedConfig load_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(SectionedConfig& config, const std::string& assignment,
                    const std::string& default_section) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("cli.set", "expected key=value, got '" + assignment + "'");
  std::string key = textcfg::trim(assignment.substr(0, eq));
  std::string section = default_section;
  const std::size_t dot = key.find('.');
  if (dot != std::string::npos) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
  }
  if (!valid_name(section) || !valid_name(key))
    throw ConfigError("cli.set", "bad key '" + assignment + "'");
  const std::string value = textcfg::trim(assignment.substr(eq + 1));
  for (auto it = config.rbegin(); it != config.rend(); ++it) {
    if (it->section == section && it->key == key) {
      it->value = value;
      return;
    }
  }
  config.push_back({section, key, value});
}

experiments::KeyValueList section_settings(const SectionedConfig& config,
                                           const std::string& section) {
  experiments::KeyValueList out;
  for (const auto& e : config)
    if (e.section == section) out.push_back({e.key, e.value});
  return out;
}

std::string lookup(const SectionedConfig& config, const std::string& section,
                   const std::string& key, const std::string& fallback) {
  for (auto it = config.rbegin(); it != config.rend(); ++it)
    if (it->section == section && it->key == key) return it->value;
  return fallback;
}

std::string config_hash(const SectionedConfig& config) {
  std::string canon;
  for (const auto& [sk, value] : normalized(config))
    canon += sk.first + "." + sk.second + "=" + value + "\n";
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_results_csv(const experiments::SweepResult& result,
                               std::uint64_t master_seed, const std::string& hash) {
  std::string csv = "experiment,method,snr_db,metric,value,stderr,trials,seed,config_hash\n";
  for (const auto& row : result.rows) {
    csv += result.experiment;
    csv += ',';
    csv += row.method;
    csv += ',';
    csv += fmt9(row.snr_db);
    csv += ',';
    csv += metrics::metric_name(row.metric);
    csv += ',';
    csv += fmt9(row.value);
    csv += ',';
    csv += fmt9(row.standard_error);
    csv += ',';
    csv += std::to_string(row.trials);
    csv += ',';
    csv += std::to_string(master_seed);
    csv += ',';
    csv += hash;
    csv += '\n';
  }
  return csv;
}

std::vector<GradCheckCase> gradcheck_suite() {
  struct CaseSpec {
    std::string name;
    std::vector<int> sizes;
    std::vector<nn::Activation> acts;
    nn::Loss loss;
    bool noise = false;
  };
  using A = nn::Activation;
  const std::vector<CaseSpec> specs = {
      {"linear_mse", {5, 7, 4}, {A::Linear, A::Linear}, nn::Loss::MeanSquaredError},
      {"relu_mse", {6, 8, 7, 5}, {A::ReLU, A::ReLU, A::Linear}, nn::Loss::MeanSquaredError},
      {"tanh_mse", {6, 9, 5}, {A::Tanh, A::Linear}, nn::Loss::MeanSquaredError},
      {"relu_tanh_mse", {5, 8, 6, 4}, {A::ReLU, A::Tanh, A::Linear},
       nn::Loss::MeanSquaredError},
      {"relu_out_mse", {6, 8, 4}, {A::ReLU, A::ReLU}, nn::Loss::MeanSquaredError},
      {"tanh_out_mse", {6, 8, 4}, {A::Tanh, A::Tanh}, nn::Loss::MeanSquaredError},
      {"softmax_ce", {6, 8, 4}, {A::ReLU, A::Softmax}, nn::Loss::SoftmaxCrossEntropy},
      {"tanh_softmax_ce", {6, 7, 7, 4}, {A::Tanh, A::Tanh, A::Softmax},
       nn::Loss::SoftmaxCrossEntropy},
      {"linear_softmax_ce", {5, 6, 4}, {A::Linear, A::Softmax}, nn::Loss::SoftmaxCrossEntropy},
      {"noise_layer_mse", {6, 10, 10, 4}, {A::ReLU, A::ReLU, A::Linear},
       nn::Loss::MeanSquaredError, true},
      {"noise_layer_ce", {6, 10, 10, 4}, {A::ReLU, A::ReLU, A::Softmax},
       nn::Loss::SoftmaxCrossEntropy, true},
  };

  std::vector<GradCheckCase> out;
  std::uint64_t case_seed = 1;
  for (const auto& cs : specs) {
    nn::MlpSpec spec;
    spec.layer_sizes = cs.sizes;
    spec.activations = cs.acts;
    if (cs.noise) {
      nn::NoiseLayerSpec noise;
      noise.position = 0;
      noise.kind = nn::NoiseVarianceKind::Fixed;
      noise.fixed_variance = 0.3;
      spec.noise_layer = noise;
    }
    const nn::Mlp mlp = nn::init_xavier(spec, 1000 + case_seed);
    Rng rng(2000 + case_seed);
    constexpr int kBatch = 16;
    RealMatrix input(cs.sizes.front(), kBatch);
    for (Eigen::Index k = 0; k < input.size(); ++k) input.data()[k] = rng.gaussian();
    RealMatrix target = RealMatrix::Zero(cs.sizes.back(), kBatch);
    if (cs.loss == nn::Loss::SoftmaxCrossEntropy) {
      for (int b = 0; b < kBatch; ++b)
        target(static_cast<Eigen::Index>(rng.uniform_int(cs.sizes.back())), b) = 1.0;
    } else {
      for (Eigen::Index k = 0; k < target.size(); ++k) target.data()[k] = rng.gaussian();
    }
    const nn::GradCheckResult check = nn::gradient_check(mlp, input, target, cs.loss);
    out.push_back({cs.name, check.per_layer_max, check.max_rel_error});
    ++case_seed;
  }
  return out;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.empty() || args[0] == "--help" || args[0] == "help") {
      (args.empty() ? err : out) << kUsage;
      return args.empty() ? 1 : 0;
    }
    if (args[0] == "experiment") {
      if (args.size() >= 2 && args[1] == "list") return cmd_experiment_list(args, 2, out);
      if (args.size() >= 2 && args[1] == "run")
        return cmd_experiment_run(parse_run_args(args, 2), out);
      throw std::runtime_error("expected 'experiment list' or 'experiment run'");
    }
    if (args[0] == "dataset") {
      if (args.size() >= 2 && args[1] == "gen")
        return cmd_dataset_gen(parse_run_args(args, 2), out);
      throw std::runtime_error("expected 'dataset gen'");
    }
    if (args[0] == "gradcheck") {
      if (args.size() > 1) throw std::runtime_error("gradcheck takes no arguments");
      return cmd_gradcheck(out);
    }
    throw std::runtime_error("unknown command '" + args[0] + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nn::TrainingDiverged& e) {
    err << "training diverged at iteration " << e.iteration << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n" << kUsage;
    return 1;
  }
}

}  // namespace phylab::cli
