// Copyright 2026 The czpulse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "czpulse/device.hpp"
#include "czpulse/optimizer.hpp"
#include "czpulse/pulse.hpp"

namespace czpulse {

/// Flat `key = value` text format, '#' comments, later keys override
/// earlier ones. Lists are comma-separated. Unknown keys are rejected so
/// typos fail loudly.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    ConfigFile c = parse_string(ss.str());
    c.origin_ = path;
    return c;
  }

  static ConfigFile parse_string(const std::string& text) {
    ConfigFile c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config: line " + std::to_string(lineno) +
                                 " is not 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config: empty key on line " + std::to_string(lineno));
      c.values_[key] = value;
    }
    return c;
  }

  /// Merge other on top of this one (other wins). Adopts the other file's
  /// origin, so relative paths resolve against the последний-loaded file.
  void overlay(const ConfigFile& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
    if (!other.origin_.empty()) origin_ = other.origin_;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(it->second, key);
  }

  int get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stoi(it->second);
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "on") return true;
    if (it->second == "false" || it->second == "0" || it->second == "off") return false;
    throw std::runtime_error("config: key '" + key + "' is not a boolean: " + it->second);
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), key));
    return out;
  }

  void require_known_keys(const std::set<std::string>& known) const {
    for (const auto& [k, _] : values_)
      if (!known.count(k))
        throw std::runtime_error("config: unknown key '" + k + "'" +
                                 (origin_.empty() ? "" : " in " + origin_.string()));
  }

  const std::filesystem::path& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  static double parse_double(const std::string& s, const std::string& key) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' is not a number: " + s);
    }
  }

  std::map<std::string, std::string> values_;
  std::filesystem::path origin_;
};

/// Everything a run needs; a run is fully determined by this plus the code
/// version (no hidden state).
struct RunConfig {
  DeviceParams device;
  bool device_has_detune_target = false;
  double detune_target = 0.0;

  DrivePulse pulse;
  bool pulse_carrier_explicit = false;

  CzTarget target = CzTarget::to20;
  double amp_preset = 0.05;
  int budget = 200;
  FreeParams free_params;
  double dt = 0.0;

  ScanSettings scan;

  // xeb settings
  std::vector<int> xeb_cycles{2, 4, 6, 8, 10, 14, 18};
  int xeb_circuits = 20;
  double xeb_p_dep = 0.02;
  long xeb_shots = 0;
  double xeb_leak_inject = 0.002;
  bool xeb_readout_model = true;
  std::filesystem::path readout_q1_2level;
  std::filesystem::path readout_q2_2level;
  std::filesystem::path readout_q1_3level;
  std::filesystem::path readout_q2_3level;

  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  int jobs = 1;

  /// Device with the detune target applied, if one was configured.
  DeviceParams resolved_device() const {
    return device_has_detune_target ? device_for_detune(device, detune_target) : device;
  }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "seed", "out", "jobs",
      "device.omega_q1", "device.omega_q2", "device.omega_c",
      "device.eta_q1", "device.eta_q2", "device.eta_c",
      "device.g_1c", "device.g_2c", "device.g_12", "device.levels", "device.detune",
      "pulse.lambda", "pulse.mean_amp", "pulse.carrier_freq", "pulse.carrier_phase",
      "pulse.duration", "pulse.target", "pulse.coupling", "pulse.envelope",
      "optimize.budget", "optimize.target", "optimize.amp_preset", "optimize.free",
      "optimize.dt",
      "scan.delta_lo", "scan.delta_hi", "scan.n", "scan.k", "scan.budget",
      "scan.collision_window",
      "xeb.cycles", "xeb.circuits", "xeb.p_dep", "xeb.shots", "xeb.leak_inject",
      "xeb.readout_model", "xeb.readout_q1", "xeb.readout_q2",
      "xeb.readout3_q1", "xeb.readout3_q2"};
  return keys;
}

inline std::filesystem::path resolve_relative(const std::filesystem::path& p,
                                              const std::filesystem::path& config_origin) {
  if (p.empty() || p.is_absolute() || config_origin.empty()) return p;
  return config_origin.parent_path() / p;
}

}  // namespace detail

/// Builds a RunConfig from a parsed key/value file (defaults for anything
/// absent). Relative readout-matrix paths resolve against the config file
/// location.
inline RunConfig run_config_from(const ConfigFile& cfg) {
  cfg.require_known_keys(detail::known_config_keys());
  RunConfig rc;

  rc.device.omega_q1 = cfg.get_double("device.omega_q1", rc.device.omega_q1);
  rc.device.omega_q2 = cfg.get_double("device.omega_q2", rc.device.omega_q2);
  rc.device.omega_c = cfg.get_double("device.omega_c", rc.device.omega_c);
  rc.device.eta_q1 = cfg.get_double("device.eta_q1", rc.device.eta_q1);
  rc.device.eta_q2 = cfg.get_double("device.eta_q2", rc.device.eta_q2);
  rc.device.eta_c = cfg.get_double("device.eta_c", rc.device.eta_c);
  rc.device.g_1c = cfg.get_double("device.g_1c", rc.device.g_1c);
  rc.device.g_2c = cfg.get_double("device.g_2c", rc.device.g_2c);
  rc.device.g_12 = cfg.get_double("device.g_12", rc.device.g_12);
  rc.device.levels = cfg.get_int("device.levels", rc.device.levels);
  if (cfg.has("device.detune")) {
    rc.device_has_detune_target = true;
    rc.detune_target = cfg.get_double("device.detune", 0.0);
  }

  const std::string envelope = cfg.get_string("pulse.envelope", "shaped");
  if (envelope == "shaped")
    rc.pulse.lambda = kShapedLambdaInit;
  else if (envelope == "flattop")
    rc.pulse.lambda = kFlattopLambdaInit;
  else
    throw std::runtime_error("config: pulse.envelope must be 'shaped' or 'flattop'");
  const auto lam = cfg.get_list("pulse.lambda", {rc.pulse.lambda.begin(), rc.pulse.lambda.end()});
  if (lam.size() != 4) throw std::runtime_error("config: pulse.lambda needs 4 entries");
  std::copy(lam.begin(), lam.end(), rc.pulse.lambda.begin());
  rc.pulse.mean_amp = cfg.get_double("pulse.mean_amp", rc.pulse.mean_amp);
  if (cfg.has("pulse.carrier_freq")) {
    rc.pulse_carrier_explicit = true;
    rc.pulse.carrier_freq = cfg.get_double("pulse.carrier_freq", rc.pulse.carrier_freq);
  }
  rc.pulse.carrier_phase = cfg.get_double("pulse.carrier_phase", rc.pulse.carrier_phase);
  rc.pulse.duration = cfg.get_double("pulse.duration", rc.pulse.duration);
  const std::string target = cfg.get_string("pulse.target", "qubit1");
  if (target == "qubit1")
    rc.pulse.target = DriveTarget::qubit1;
  else if (target == "qubit2")
    rc.pulse.target = DriveTarget::qubit2;
  else if (target == "both")
    rc.pulse.target = DriveTarget::both;
  else
    throw std::runtime_error("config: pulse.target must be qubit1, qubit2 or both");
  const std::string coupling = cfg.get_string("pulse.coupling", "frequency");
  if (coupling == "frequency")
    rc.pulse.coupling = DriveCoupling::frequency;
  else if (coupling == "charge")
    rc.pulse.coupling = DriveCoupling::charge;
  else
    throw std::runtime_error("config: pulse.coupling must be 'frequency' or 'charge'");

  rc.budget = cfg.get_int("optimize.budget", rc.budget);
  const std::string opt_target = cfg.get_string("optimize.target", "20");
  if (opt_target == "20")
    rc.target = CzTarget::to20;
  else if (opt_target == "02")
    rc.target = CzTarget::to02;
  else
    throw std::runtime_error("config: optimize.target must be '20' or '02'");
  rc.amp_preset = cfg.get_double("optimize.amp_preset", rc.amp_preset);
  rc.dt = cfg.get_double("optimize.dt", rc.dt);
  if (cfg.has("optimize.free")) {
    rc.free_params = FreeParams{false, false, false, false, false, false};
    std::istringstream ss(cfg.get_string("optimize.free", ""));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      const std::string name = (b == std::string::npos) ? "" : item.substr(b, e - b + 1);
      if (name == "lambda1")
        rc.free_params.lambda1 = true;
      else if (name == "lambda3")
        rc.free_params.lambda3 = true;
      else if (name == "lambda4")
        rc.free_params.lambda4 = true;
      else if (name == "carrier_offset")
        rc.free_params.carrier_offset = true;
      else if (name == "mean_amp")
        rc.free_params.mean_amp = true;
      else if (name == "duration")
        rc.free_params.duration = true;
      else
        throw std::runtime_error("config: unknown free parameter '" + name + "'");
    }
  }

  rc.scan.delta_lo = cfg.get_double("scan.delta_lo", rc.scan.delta_lo);
  rc.scan.delta_hi = cfg.get_double("scan.delta_hi", rc.scan.delta_hi);
  rc.scan.n = cfg.get_int("scan.n", rc.scan.n);
  rc.scan.k = cfg.get_int("scan.k", rc.scan.k);
  rc.scan.budget = cfg.get_int("scan.budget", rc.scan.budget);
  rc.scan.collision_window = cfg.get_double("scan.collision_window", rc.scan.collision_window);

  const auto cycles = cfg.get_list("xeb.cycles", {});
  if (!cycles.empty()) {
    rc.xeb_cycles.clear();
    for (double m : cycles) rc.xeb_cycles.push_back(int(m));
  }
  rc.xeb_circuits = cfg.get_int("xeb.circuits", rc.xeb_circuits);
  rc.xeb_p_dep = cfg.get_double("xeb.p_dep", rc.xeb_p_dep);
  rc.xeb_shots = cfg.get_int("xeb.shots", int(rc.xeb_shots));
  rc.xeb_leak_inject = cfg.get_double("xeb.leak_inject", rc.xeb_leak_inject);
  rc.xeb_readout_model = cfg.get_bool("xeb.readout_model", rc.xeb_readout_model);
  rc.readout_q1_2level =
      detail::resolve_relative(cfg.get_string("xeb.readout_q1", ""), cfg.origin());
  rc.readout_q2_2level =
      detail::resolve_relative(cfg.get_string("xeb.readout_q2", ""), cfg.origin());
  rc.readout_q1_3level =
      detail::resolve_relative(cfg.get_string("xeb.readout3_q1", ""), cfg.origin());
  rc.readout_q2_3level =
      detail::resolve_relative(cfg.get_string("xeb.readout3_q2", ""), cfg.origin());

  rc.out_dir = cfg.get_string("out", rc.out_dir.string());
  rc.seed = cfg.get_u64("seed", rc.seed);
  rc.jobs = cfg.get_int("jobs", rc.jobs);
  return rc;
}

}  // namespace czpulse
