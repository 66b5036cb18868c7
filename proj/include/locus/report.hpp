// Copyright 2026 The Locus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV, JSON and plain-text rendering of runtime and speedup reports.

#pragma once

#include "locus/rational.hpp"
#include "locus/runtime.hpp"

#include <json.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace locus {

struct SamplingInfo {
  bool engaged = false;
  std::size_t total_ranks = 0;
  std::vector<RankId> analyzed_ranks;
};

struct EstimateReport {
  std::string workload;
  RuntimeEstimate runtime;
  std::optional<SpeedupReport> speedup;
  SamplingInfo sampling;
  std::vector<std::string> backends;
  std::size_t unannotated_edges = 0;
  std::size_t unknown_mnemonics = 0;
  std::size_t backend_failures = 0;
};

inline nlohmann::json speedup_to_json(const SpeedupReport& s) {
  return {{"workload", s.workload},
          {"measured_s", to_double(s.measured_s)},
          {"estimated_s", to_double(s.estimated_s)},
          {"speedup", to_double(s.speedup)},
          {"speedup_exact", to_exact_string(s.speedup)},
          {"classification", to_string(s.classification)}};
}

inline nlohmann::json report_to_json(const EstimateReport& r) {
  nlohmann::json cycles = nlohmann::json::object();
  for (const auto& [rid, threads] : r.runtime.per_rank_per_thread_cycles)
    for (const auto& [tid, c] : threads) cycles[std::to_string(rid)][std::to_string(tid)] = to_double(c);
  return {{"workload", r.workload},
          {"frequency_hz", to_double(r.runtime.frequency_hz)},
          {"t_app_s", to_double(r.runtime.t_app_s)},
          {"t_app_s_exact", to_exact_string(r.runtime.t_app_s)},
          {"critical_rank", r.runtime.critical_rank},
          {"critical_thread", r.runtime.critical_thread},
          {"per_rank_per_thread_cycles", cycles},
          {"sampling",
           {{"engaged", r.sampling.engaged},
            {"total_ranks", r.sampling.total_ranks},
            {"analyzed_ranks", r.sampling.analyzed_ranks}}},
          {"backends", r.backends},
          {"unannotated_edges", r.unannotated_edges},
          {"unknown_mnemonics", r.unknown_mnemonics},
          {"backend_failures", r.backend_failures},
          {"speedup", r.speedup ? speedup_to_json(*r.speedup) : nlohmann::json()}};
}

inline const char* kCsvHeader =
    "workload,measured_s,estimated_s,speedup,critical_rank,critical_thread,unannotated_edges,"
    "unknown_mnemonics";

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string shortest(double v) { return nlohmann::json(v).dump(); }
}  // namespace detail

inline std::string report_to_csv(const EstimateReport& r) {
  std::ostringstream out;
  out << kCsvHeader << '\n'
      << detail::csv_field(r.workload) << ','
      << (r.speedup ? detail::shortest(to_double(r.speedup->measured_s)) : "") << ','
      << detail::shortest(to_double(r.runtime.t_app_s)) << ','
      << (r.speedup ? detail::shortest(to_double(r.speedup->speedup)) : "") << ','
      << r.runtime.critical_rank << ',' << r.runtime.critical_thread << ',' << r.unannotated_edges
      << ',' << r.unknown_mnemonics << '\n';
  return out.str();
}

inline std::string report_to_table(const EstimateReport& r) {
  std::ostringstream out;
  out << "workload            " << r.workload << '\n'
      << "frequency           " << format_fixed(r.runtime.frequency_hz / 1000000000, 3) << " GHz\n"
      << "estimated runtime   " << detail::shortest(to_double(r.runtime.t_app_s)) << " s\n"
      << "critical rank       " << r.runtime.critical_rank << '\n'
      << "critical thread     " << r.runtime.critical_thread << '\n'
      << "ranks analyzed      " << r.sampling.analyzed_ranks.size() << " of "
      << r.sampling.total_ranks << (r.sampling.engaged ? " (sampled)" : "") << '\n'
      << "unannotated edges   " << r.unannotated_edges << '\n'
      << "unknown mnemonics   " << r.unknown_mnemonics << '\n'
      << "backend failures    " << r.backend_failures << '\n';
  if (r.speedup)
    out << "measured runtime    " << detail::shortest(to_double(r.speedup->measured_s)) << " s\n"
        << "speedup             " << format_fixed(r.speedup->speedup, 2) << "x ("
        << to_string(r.speedup->classification) << ")\n";
  return out.str();
}

}  // namespace locus
