#include "npplab/cli.hpp"

#include "npplab/config.hpp"
#include "npplab/dataset_io.hpp"
#include "npplab/errors.hpp"
#include "npplab/harness.hpp"
#include "npplab/log.hpp"
#include "npplab/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <map>
#include <optional>

namespace npplab::cli {
namespace {

struct Options {
  std::string spec_path;
  std::string config_path;
  std::string out_path;
  std::string inspect_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool quiet = false;
  bool verbose = false;
};

std::size_t resolve_threads(const Options& o) {
  if (o.threads) return *o.threads;
  if (const char* env = std::getenv("NPPLAB_THREADS")) {
    try {
      return static_cast<std::size_t>(std::stoull(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("NPPLAB_THREADS is not a non-negative integer: '") + env + "'");
    }
  }
  return 0;
}

nlohmann::json load_with_overrides(const std::string& path, const Options& o) {
  nlohmann::json j = load_json_file(path);
  apply_overrides(j, o.overrides);
  return j;
}

int cmd_gen(const Options& o, std::ostream& out) {
  nlohmann::json j = load_with_overrides(o.spec_path, o);
  SyntheticSpec spec = synthetic_spec_from_json(j);
  if (o.seed) spec.seed = *o.seed;
  const Dataset d = gen_synthetic(spec);
  save_dataset(d, o.out_path);
  log::info("wrote " + std::to_string(d.size()) + " trials to " + o.out_path);
  out << "wrote " << o.out_path << " (" << d.size() << " trials)\n";
  return kOk;
}

ExperimentConfig experiment_from(const nlohmann::json& j, const Options& o) {
  ExperimentConfig cfg = experiment_config_from_json(j);
  if (o.seed) cfg.master_seed = *o.seed;
  return cfg;
}

int cmd_run(const Options& o, std::ostream& out) {
  const nlohmann::json j = load_with_overrides(o.config_path, o);
  const ExperimentConfig cfg = experiment_from(j, o);
  const ReportFormat format = report_format_for(o.out_path);
  log::info("running " + std::to_string(cfg.repeats) + " repeat(s)");
  const ExperimentResult result = run_experiment(cfg, resolve_threads(o));
  write_report(result.rows, o.out_path, format);
  const Summary& s = result.summary;
  out << "runs " << s.n << "  ACC " << s.acc_mean << " +/- " << s.acc_std << "  ASR " << s.asr_mean << " +/- "
      << s.asr_std << '\n';
  return kOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const nlohmann::json j = load_with_overrides(o.config_path, o);
  const ExperimentConfig cfg = experiment_from(j, o);
  if (!j.contains("sweep")) throw ConfigError("config has no 'sweep' section");
  const SweepSpec sweep = sweep_spec_from_json(j.at("sweep"));
  const ReportFormat format = report_format_for(o.out_path);
  const SweepTable table = run_sweep(cfg, sweep, resolve_threads(o));
  write_sweep_report(table, o.out_path, format);
  out << "sweep " << to_string(table.axis) << " (" << to_string(table.mode) << "): " << table.cells.size()
      << " cells\n";
  return kOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  if (!std::filesystem::exists(o.inspect_path)) throw ConfigError("dataset file not found: " + o.inspect_path);
  const DatasetHeader h = decode_dataset_header(read_file(o.inspect_path));
  const Dataset d = load_dataset(o.inspect_path);
  out << "dataset: " << d.name << '\n';
  out << "version: " << h.version << '\n';
  out << "subjects: " << h.n_subjects << '\n';
  out << "channels: " << h.n_channels << '\n';
  out << "samples: " << h.n_samples << '\n';
  out << "fs: " << h.fs << " Hz\n";
  out << "classes: " << h.n_classes;
  for (std::size_t k = 0; k < d.class_names.size(); ++k) out << (k ? ", " : " (") << d.class_names[k];
  out << (d.class_names.empty() ? "" : ")") << '\n';
  out << "trials: " << d.size() << '\n';
  std::map<std::uint32_t, std::map<int, std::size_t>> counts;
  for (const Trial& t : d.trials) ++counts[t.subject][t.label];
  for (const auto& [subject, by_class] : counts) {
    out << "  subject " << subject << ':';
    for (const auto& [label, n] : by_class) out << " class" << label << '=' << n;
    out << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"npplab: narrow-period-pulse backdoor experiments on EEG classifiers"};
  app.require_subcommand(1);
  Options o;
  app.add_flag("-q,--quiet", o.quiet, "Only print errors");
  app.add_flag("-v,--verbose", o.verbose, "Print progress");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out_path, "Output path")->required();
    sub->add_option("--seed", o.seed, "Override the seed");
    sub->add_option("overrides", o.overrides, "Config overrides, key.path=value");
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--spec", o.spec_path, "Synthetic spec JSON")->required();
  add_common(gen);

  CLI::App* run_cmd = app.add_subcommand("run", "Run a LOSO experiment and write a report");
  run_cmd->add_option("--config", o.config_path, "Experiment config JSON")->required();
  run_cmd->add_option("--threads", o.threads, "Worker threads (0 = auto)");
  add_common(run_cmd);

  CLI::App* sweep = app.add_subcommand("sweep", "Run the sweep described in the config");
  sweep->add_option("--config", o.config_path, "Experiment config JSON with a 'sweep' section")->required();
  sweep->add_option("--threads", o.threads, "Worker threads (0 = auto)");
  add_common(sweep);

  CLI::App* inspect = app.add_subcommand("inspect", "Print a dataset summary");
  inspect->add_option("path", o.inspect_path, "Dataset file")->required();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  const log::Level previous = log::level();
  log::set_level(o.quiet ? log::Level::quiet : (o.verbose ? log::Level::info : log::Level::warn));
  int code = kOk;
  try {
    if (gen->parsed()) code = cmd_gen(o, out);
    if (run_cmd->parsed()) code = cmd_run(o, out);
    if (sweep->parsed()) code = cmd_sweep(o, out);
    if (inspect->parsed()) code = cmd_inspect(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    code = kConfigError;
  } catch (const IndexError& e) {
    err << "config error: " << e.what() << '\n';
    code = kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kRuntimeError;
  }
  log::set_level(previous);
  return code;
}

}  // namespace npplab::cli
