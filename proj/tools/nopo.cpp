// Command-line scenario runner for the NOPO toolkit.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nopo/scenario.hpp"
#include "CLI11.hpp"

namespace {

std::string first_comment_line(const std::string& text) {
  std::size_t pos = text.find('\n');
  std::string line = text.substr(0, pos);
  if (!line.empty() && line[0] == '#') {
    std::size_t b = line.find_first_not_of("# ");
    return b == std::string::npos ? "" : line.substr(b);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-phase-locked nondegenerate OPO: analysis and simulation"};
  app.require_subcommand(0, 1);

  std::string config, preset, seed, threads, out = "out";
  std::vector<std::string> sets;
  app.add_option("--config", config,
                 "Config file (key = value lines) or a manifest.json");
  app.add_option("--preset", preset, "Bundled scenario preset name");
  app.add_option("--seed", seed, "Base RNG seed (overrides config)");
  app.add_option("--threads", threads,
                 "Worker threads (never changes numerical output)");
  app.add_option("--out", out, "Output directory (default: out)");
  app.add_option("--set", sets, "Additional key=value overrides");

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"steady", "Analytic threshold and locked steady state"},
      {"stability", "Locking classifier and semiclassical attractor"},
      {"correlators", "Above-threshold fluctuation correlators"},
      {"sde", "Positive-P stochastic ensemble"},
      {"spectrum", "Below-threshold squeezing spectra"},
      {"qsd", "Quantum-state-diffusion ensemble and density matrices"},
      {"wigner", "Wigner function from a stored density matrix"},
      {"duan-sweep", "Duan inseparability across a parameter sweep"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : verbs) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->fallthrough();
    subs[name] = s;
  }
  CLI::App* plist = app.add_subcommand("presets", "List bundled presets");
  plist->fallthrough();
  std::string dump_dir;
  plist->add_option("--dump", dump_dir, "Write <name>.cfg files into DIR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plist->parsed()) {
      if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        for (const std::string& name : nopo::preset_names()) {
          std::ofstream f(std::filesystem::path(dump_dir) / (name + ".cfg"),
                          std::ios::binary);
          f << nopo::preset_text(name);
        }
        std::cout << "wrote " << nopo::preset_names().size()
                  << " preset files to " << dump_dir << "\n";
      } else {
        for (const std::string& name : nopo::preset_names())
          std::printf("%-14s %s\n", name.c_str(),
                      first_comment_line(nopo::preset_text(name)).c_str());
      }
      return 0;
    }

    nopo::ConfigMap cfg;
    if (!preset.empty())
      cfg = nopo::parse_config_text(nopo::preset_text(preset));
    if (!config.empty())
      for (const auto& [k, v] : nopo::load_config_file(config)) cfg[k] = v;
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got '" + kv +
                                    "'");
      cfg[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    std::string verb;
    for (const auto& [name, s] : subs)
      if (s->parsed()) verb = name;
    if (!verb.empty()) {
      if (cfg.count("mode") && cfg["mode"] != verb)
        throw std::invalid_argument("config mode '" + cfg["mode"] +
                                    "' conflicts with command '" + verb + "'");
      cfg["mode"] = verb;
    }
    if (!seed.empty()) cfg["seed"] = seed;
    if (!threads.empty()) cfg["threads"] = threads;

    const nopo::RunOutcome r = nopo::run_scenario(cfg, out);
    std::cout << "mode: " << r.mode << "\n";
    std::cout << "out:  " << r.out_dir.string() << "\n";
    if (!r.results.empty()) {
      std::cout << "results:\n";
      for (const auto& [k, v] : r.results)
        std::printf("  %-22s %.10g\n", k.c_str(), v);
    }
    std::cout << "artifacts:\n";
    for (const auto& [name, sha] : r.artifacts)
      std::printf("  %-22s sha256=%s\n", name.c_str(), sha.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
