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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "czpulse/propagation.hpp"
#include "czpulse/pulse.hpp"
#include "czpulse/xeb.hpp"

namespace czpulse {

/// Shortest-round-trip decimal formatting so reruns with identical inputs
/// produce byte-identical files.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Minimal CSV emitter: self-describing header, one row per record.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<double>& row) {
    if (row.size() != header_.size())
      throw std::invalid_argument("CsvWriter: row width does not match header");
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += format_double(row[i]);
    }
    rows_.push_back(std::move(line));
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);  // fixed newlines across platforms
    if (!out) throw std::runtime_error("CsvWriter: cannot open " + path.string());
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& r : rows_) out << r << '\n';
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

inline nlohmann::json pulse_to_json(const DrivePulse& p) {
  return nlohmann::json{
      {"lambda", p.lambda},
      {"mean_amp_GHz", p.mean_amp},
      {"carrier_freq_GHz", p.carrier_freq},
      {"carrier_phase_rad", p.carrier_phase},
      {"duration_ns", p.duration},
      {"target", p.target == DriveTarget::qubit1   ? "qubit1"
                 : p.target == DriveTarget::qubit2 ? "qubit2"
                                                   : "both"},
      {"coupling", p.coupling == DriveCoupling::frequency ? "frequency" : "charge"}};
}

inline nlohmann::json gate_result_to_json(const GateResult& g) {
  nlohmann::json u = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < 4; ++j)
      row.push_back({g.u_projected(i, j).real(), g.u_projected(i, j).imag()});
    u.push_back(row);
  }
  nlohmann::json leak = nlohmann::json::array();
  for (const auto& l : g.leakage)
    leak.push_back({{"to02", l.to02}, {"to20", l.to20}, {"coupler", l.coupler},
                    {"other", l.other}});
  nlohmann::json out{{"fidelity", g.fidelity},
                     {"error", g.error()},
                     {"u_projected_re_im", u},
                     {"leakage_by_input", leak}};
  if (std::isfinite(g.cond_phase)) out["conditional_phase_rad"] = g.cond_phase;
  return out;
}

/// Trace CSV: time plus the eight population channels for each of the four
/// initial computational states, coupler leakage of |11>, and the
/// conditional phase.
inline void write_trace_csv(const EvolutionTrace& tr, const std::filesystem::path& path) {
  std::vector<std::string> header{"t_ns"};
  const char* initials[4] = {"00", "01", "10", "11"};
  for (int j = 0; j < 4; ++j)
    for (const char* ch : EvolutionTrace::kChannels)
      header.push_back(std::string("from") + initials[j] + "_" + ch);
  header.push_back("coupler_leakage_11");
  header.push_back("phi_c_rad");
  CsvWriter csv(std::move(header));
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    std::vector<double> row{tr.times[s]};
    for (int j = 0; j < 4; ++j)
      for (double v : tr.populations[j][s]) row.push_back(v);
    row.push_back(tr.coupler_leakage[s]);
    row.push_back(tr.conditional_phase[s]);
    csv.add_row(row);
  }
  csv.write(path);
}

/// Two-column waveform for external plotting.
inline void write_waveform_csv(const DrivePulse& p, const std::filesystem::path& path,
                               int samples = 1001) {
  CsvWriter csv({"t_ns", "amplitude_GHz"});
  for (int i = 0; i < samples; ++i) {
    const double t = p.duration * double(i) / double(samples - 1);
    csv.add_row({t, envelope_value(p, t)});
  }
  csv.write(path);
}

inline nlohmann::json xeb_record_to_json(const XebRecord& r,
                                         const Eigen::VectorXd* p_measured3 = nullptr) {
  nlohmann::json j{{"cycles", r.cycles},
                   {"circuit_seed", r.circuit_seed},
                   {"n_qubits", 2},
                   {"p_ideal", std::vector<double>(r.p_ideal.data(),
                                                   r.p_ideal.data() + r.p_ideal.size())},
                   {"p_measured", std::vector<double>(r.p_measured.data(),
                                                      r.p_measured.data() + r.p_measured.size())}};
  if (p_measured3)
    j["p_measured_3level"] =
        std::vector<double>(p_measured3->data(), p_measured3->data() + p_measured3->size());
  return j;
}

inline XebRecord xeb_record_from_json(const nlohmann::json& j,
                                      Eigen::VectorXd* p_measured3 = nullptr) {
  XebRecord r;
  r.cycles = j.at("cycles").get<int>();
  r.circuit_seed = j.at("circuit_seed").get<std::uint64_t>();
  const auto pi = j.at("p_ideal").get<std::vector<double>>();
  const auto pm = j.at("p_measured").get<std::vector<double>>();
  r.p_ideal = Eigen::Map<const Eigen::VectorXd>(pi.data(), long(pi.size()));
  r.p_measured = Eigen::Map<const Eigen::VectorXd>(pm.data(), long(pm.size()));
  if (p_measured3 && j.contains("p_measured_3level")) {
    const auto p3 = j.at("p_measured_3level").get<std::vector<double>>();
    *p_measured3 = Eigen::Map<const Eigen::VectorXd>(p3.data(), long(p3.size()));
  }
  return r;
}

}  // namespace czpulse
