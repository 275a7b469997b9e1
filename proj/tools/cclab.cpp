#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cclab/lab.hpp"

using namespace cclab;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  bool plot = false;
};

struct Command {
  std::string frame;
  std::vector<double> eps_list;
  std::optional<int> nodes;
  std::map<std::string, std::string> params;
  std::vector<std::string> sets;  // key=value
};

// Experiment parameters exposed as --flags; everything else goes through --set.
const std::map<std::string, std::vector<std::string>> kFlags = {
    {"dist", {"from", "to", "method", "segments"}},
    {"volume", {"center", "radii", "samples"}},
    {"doubling", {"center", "radii", "samples"}},
    {"poincare", {"center", "radii"}},
    {"heat", {"source", "t", "method", "paths", "A", "dt"}},
    {"gaussfit", {"source", "t", "samples"}},
    {"lift-check", {"t", "paths", "tolerance"}},
    {"harnack", {"center", "source", "rho", "tbar", "reach", "A"}},
    {"flow", {"kind", "phi", "t", "dt", "study"}},
    {"schauder", {"w", "alpha", "times", "pairs"}},
    {"acceptance", {"criteria", "rerun_threads"}},
};

int execute(const std::string& name, const Globals& g, const Command& c) {
  ExperimentConfig cfg;
  if (!g.config.empty()) cfg = ExperimentConfig::load(g.config, name == "run" ? "" : name);
  else cfg.experiment = name;
  if (!c.frame.empty()) cfg.frame = c.frame;
  if (!c.eps_list.empty()) cfg.set_eps_list(c.eps_list);
  if (c.nodes) cfg.nodes = *c.nodes;
  for (const auto& [k, v] : c.params) cfg.set(k, v);
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  if (!g.out.empty()) cfg.out_dir = g.out;

  const ResultManifest m = run(cfg);
  if (cfg.experiment != "acceptance")
    for (const Check& ch : m.checks) std::printf("[%s] %s%s%s\n", ch.pass ? "PASS" : "FAIL", ch.name.c_str(),
                                                 ch.detail.empty() ? "" : ": ", ch.detail.c_str());
  std::fputs(m.scalar_summary().c_str(), stdout);
  if (g.plot) std::printf("plot data: %s\n", emit_plot_data(m).c_str());
  std::printf("manifest: %s/manifest.json (config %s, %.1f s)\n", m.out_dir.c_str(), m.config_hash.c_str(), m.wall_time);
  return m.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian approximation laboratory for sub-Riemannian frames"};
  app.set_version_flag("--version", std::string(kVersion));
  Globals g;
  app.add_option("--config", g.config, "INI experiment file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Base seed (required here or in the config)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--plot", g.plot, "Also write tidy plot data");
  app.require_subcommand(1);

  std::map<std::string, Command> commands;
  std::vector<std::string> names = experiment_names();
  names.push_back("run");
  for (const std::string& name : names) {
    Command& c = commands[name];
    CLI::App* sub = app.add_subcommand(name, name == "run" ? "Run the experiment named in --config" : "Run the " + name + " experiment");
    if (name != "run") {
      sub->add_option("--frame", c.frame, "Built-in frame name or frame file");
      sub->add_option("--eps-list", c.eps_list, "eps values")->delimiter(',');
      sub->add_option("--eps", c.eps_list, "Single eps value (same as --eps-list)")->delimiter(',');
      sub->add_option("--nodes", c.nodes, "Lattice nodes per axis");
      for (const std::string& key : kFlags.at(name)) {
        std::string flag = "--" + key;
        for (char& ch : flag)
          if (ch == '_') ch = '-';
        sub->add_option_function<std::string>(flag, [&c, key](const std::string& v) { c.params[key] = v; }, "experiment parameter '" + key + "'");
      }
    }
    sub->add_option("--set", c.sets, "Extra experiment parameter key=value");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  for (CLI::App* sub : app.get_subcommands()) {
    try {
      return execute(sub->get_name(), g, commands[sub->get_name()]);
    } catch (const Error& e) {
      std::cerr << "cclab " << sub->get_name() << ": " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "cclab " << sub->get_name() << ": " << e.what() << "\n";
      return 2;
    }
  }
  return 2;
}
