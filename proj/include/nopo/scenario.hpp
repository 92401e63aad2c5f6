// Reproducible scenario runner: plain-text configs, bundled figure presets,
// dispatch to the analysis modules, CSV/binary artifact emission, and a
// manifest capturing the resolved configuration and artifact checksums.
//
// Config format: one "key = value" per line, '#' starts a comment, blank
// lines ignored.  Unknown keys are rejected with the full offending list.
// A manifest.json from a previous run is itself a valid config input
// (round-trip reproduces identical artifacts).
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nopo/params.hpp"

namespace nopo {

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
// Accepts either key=value text or a manifest.json produced by run_scenario.
ConfigMap load_config_file(const std::filesystem::path& path);

const std::vector<std::string>& known_config_keys();

// Bundled figure-replication presets; the same texts are checked in under
// presets/<name>.cfg.
std::vector<std::string> preset_names();
const std::string& preset_text(const std::string& name);

// Physical parameters from a config: gamma (or gamma1+gamma2), delta (or
// delta1+delta2, default 0), chi (default 0), gamma3 (default 100), and a
// drive given as eps, eps_rel (relative to the analytic or numeric
// threshold), or E with k.  eps/eps_rel require lambda.
Params params_from_config(const ConfigMap& cfg);

// Numeric generation threshold: bisection on the maximal linear growth rate
// of the vacuum state over eps (valid for arbitrary detunings).
double numeric_threshold_eps(const Params& p);

struct RunOutcome {
  std::string mode;
  std::filesystem::path out_dir;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, sha256
  std::map<std::string, double> results;  // summary scalars (also in manifest)
};

// Executes cfg["mode"] and writes all artifacts plus manifest.json into
// out_dir (created if absent).  Output bytes depend only on the config and
// seed; the "threads" knob never changes results and is excluded from the
// manifest.
RunOutcome run_scenario(const ConfigMap& cfg,
                        const std::filesystem::path& out_dir);

}  // namespace nopo
