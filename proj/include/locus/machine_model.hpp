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

// Machine description consumed by the built-in throughput analyzer: dispatch
// width, execution ports and a per-mnemonic table of micro-op counts,
// admissible ports and result latencies.

#pragma once

#include "locus/profile.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <fstream>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace locus {

// Bit i set means port i of the owning model is admissible.
using PortMask = std::uint32_t;

inline constexpr std::size_t kMaxPorts = 16;

struct InstrSpec {
  int uops = 1;
  int latency = 1;
  std::vector<PortMask> port_choices;  // one entry per uop
  OperandRule operands;

  friend bool operator==(const InstrSpec&, const InstrSpec&) = default;
};

// Replacement values applied to a mnemonic before analysis.
struct Correction {
  std::optional<int> latency;
  std::optional<int> uops;
  std::optional<std::vector<PortMask>> port_choices;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MachineModel {
 public:
  std::string name;
  int dispatch_width = 1;
  std::vector<std::string> ports;
  std::map<std::string, InstrSpec> instruction_table;
  InstrSpec default_spec;
  std::map<std::string, Correction> correction_table;
  RegisterTable registers = RegisterTable::builtin();

  PortMask all_ports() const {
    return ports.size() >= 32 ? ~PortMask{0} : (PortMask{1} << ports.size()) - 1;
  }

  PortMask port_mask(const std::vector<std::string>& names) const {
    PortMask m = 0;
    for (const auto& n : names) {
      auto it = std::find(ports.begin(), ports.end(), n);
      if (it == ports.end()) throw ModelError("unknown port '" + n + "'");
      m |= PortMask{1} << (it - ports.begin());
    }
    return m;
  }

  std::vector<std::string> port_names(PortMask m) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ports.size(); ++i)
      if (m & (PortMask{1} << i)) out.push_back(ports[i]);
    return out;
  }

  struct Lookup {
    InstrSpec spec;
    bool known = true;
  };

  // Effective spec for a mnemonic with any correction already applied.
  Lookup lookup(const std::string& mnemonic) const {
    Lookup l;
    if (auto it = instruction_table.find(mnemonic); it != instruction_table.end()) {
      l.spec = it->second;
    } else {
      l.spec = default_spec;
      l.known = false;
    }
    if (auto c = correction_table.find(mnemonic); c != correction_table.end())
      apply_correction(l.spec, c->second);
    return l;
  }

  static void apply_correction(InstrSpec& spec, const Correction& c) {
    if (c.latency) spec.latency = *c.latency;
    if (c.port_choices) {
      spec.port_choices = *c.port_choices;
      spec.uops = static_cast<int>(spec.port_choices.size());
    }
    if (c.uops && *c.uops != spec.uops) {
      // Extra uops reuse the last uop's port set.
      PortMask fill = spec.port_choices.empty() ? 0 : spec.port_choices.back();
      spec.port_choices.resize(static_cast<std::size_t>(*c.uops), fill);
      spec.uops = *c.uops;
    }
  }

  // Throws ModelError on a structurally invalid model.
  void validate() const {
    if (dispatch_width < 1) throw ModelError("dispatch_width must be >= 1");
    if (ports.empty()) throw ModelError("model declares no ports");
    if (ports.size() > kMaxPorts)
      throw ModelError("at most " + std::to_string(kMaxPorts) + " ports are supported");
    auto check = [&](const std::string& what, const InstrSpec& s) {
      if (s.uops < 1) throw ModelError(what + ": uops must be >= 1");
      if (s.latency < 0) throw ModelError(what + ": latency must be >= 0");
      if (static_cast<int>(s.port_choices.size()) != s.uops)
        throw ModelError(what + ": uops must equal the number of port sets");
      for (PortMask m : s.port_choices) {
        if (m == 0) throw ModelError(what + ": empty port set");
        if (m & ~all_ports()) throw ModelError(what + ": references an undeclared port");
      }
      if (s.operands.dests < 0) throw ModelError(what + ": dests must be >= 0");
    };
    check("default", default_spec);
    for (const auto& [m, s] : instruction_table) check(m, s);
    for (const auto& [m, c] : correction_table) check("correction " + m, lookup(m).spec);
  }
};

namespace detail {

inline std::vector<PortMask> ports_from_json(const nlohmann::json& j, const MachineModel& model,
                                             const std::string& what) {
  if (!j.is_array()) throw ModelError(what + ": ports_per_uop must be an array of arrays");
  std::vector<PortMask> out;
  for (const auto& uop : j) {
    if (!uop.is_array()) throw ModelError(what + ": ports_per_uop entries must be arrays");
    out.push_back(model.port_mask(uop.get<std::vector<std::string>>()));
  }
  return out;
}

inline InstrSpec spec_from_json(const nlohmann::json& j, const MachineModel& model,
                                const std::string& what) {
  static const char* kKeys[] = {"uops",  "latency",     "ports_per_uop", "writes_flags",
                                "reads_flags", "dests", "reads_dests"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) == std::end(kKeys))
      throw ModelError(what + ": unknown key '" + it.key() + "'");
  InstrSpec s;
  s.latency = j.value("latency", 1);
  if (j.contains("ports_per_uop")) {
    s.port_choices = ports_from_json(j["ports_per_uop"], model, what);
    s.uops = j.value("uops", static_cast<int>(s.port_choices.size()));
  } else {
    s.uops = j.value("uops", 1);
    s.port_choices.assign(static_cast<std::size_t>(std::max(s.uops, 0)), model.all_ports());
  }
  s.operands.writes_flags = j.value("writes_flags", false);
  s.operands.reads_flags = j.value("reads_flags", false);
  s.operands.dests = j.value("dests", 1);
  s.operands.reads_dests = j.value("reads_dests", false);
  return s;
}

}  // namespace detail

inline MachineModel machine_model_from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"name",    "description", "dispatch_width", "ports",
                                "default", "instructions", "corrections",   "registers"};
  if (!j.is_object()) throw ModelError("machine model must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) == std::end(kKeys))
      throw ModelError("machine model: unknown key '" + it.key() + "'");
  try {
    MachineModel m;
    m.name = j.at("name").get<std::string>();
    m.dispatch_width = j.at("dispatch_width").get<int>();
    m.ports = j.at("ports").get<std::vector<std::string>>();
    if (m.ports.empty()) throw ModelError("model declares no ports");
    if (m.ports.size() > kMaxPorts)
      throw ModelError("at most " + std::to_string(kMaxPorts) + " ports are supported");
    if (j.contains("registers"))
      m.registers = RegisterTable(j["registers"].get<std::vector<std::string>>());
    m.default_spec = j.contains("default") ? detail::spec_from_json(j["default"], m, "default")
                                           : detail::spec_from_json(nlohmann::json::object(), m,
                                                                    "default");
    if (j.contains("instructions")) {
      for (auto it = j["instructions"].begin(); it != j["instructions"].end(); ++it) {
        std::string mnem = it.key();
        std::transform(mnem.begin(), mnem.end(), mnem.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        m.instruction_table[mnem] = detail::spec_from_json(*it, m, mnem);
      }
    }
    if (j.contains("corrections")) {
      for (auto it = j["corrections"].begin(); it != j["corrections"].end(); ++it) {
        std::string mnem = it.key();
        std::transform(mnem.begin(), mnem.end(), mnem.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        Correction c;
        for (auto k = it->begin(); k != it->end(); ++k) {
          if (k.key() == "latency") c.latency = k->get<int>();
          else if (k.key() == "uops") c.uops = k->get<int>();
          else if (k.key() == "ports_per_uop")
            c.port_choices = detail::ports_from_json(*k, m, "correction " + mnem);
          else
            throw ModelError("correction " + mnem + ": unknown key '" + k.key() + "'");
        }
        m.correction_table[mnem] = c;
      }
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("machine model: ") + e.what());
  }
}

inline MachineModel load_machine_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open machine model '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError("machine model '" + path + "': " + e.what());
  }
  return machine_model_from_json(j);
}

}  // namespace locus
