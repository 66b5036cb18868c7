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

#pragma once

#include "locus/machine_model.hpp"
#include "locus/profile.hpp"
#include "locus/rational.hpp"

#include <initializer_list>
#include <string>
#include <vector>

namespace locus::testing {

inline Rational Q(std::int64_t n, std::int64_t d = 1) { return make_rational(n, d); }

inline MachineModel make_model(int width, std::vector<std::string> ports) {
  MachineModel m;
  m.name = "test";
  m.dispatch_width = width;
  m.ports = std::move(ports);
  m.default_spec.uops = 1;
  m.default_spec.latency = 1;
  m.default_spec.port_choices = {m.all_ports()};
  return m;
}

inline InstrSpec& add_instr(MachineModel& m, const std::string& mnemonic, int latency,
                            std::initializer_list<std::vector<std::string>> uop_ports,
                            OperandRule rule = {}) {
  InstrSpec s;
  s.latency = latency;
  for (const auto& p : uop_ports) s.port_choices.push_back(m.port_mask(p));
  s.uops = static_cast<int>(s.port_choices.size());
  s.operands = rule;
  return m.instruction_table[mnemonic] = s;
}

inline BasicBlock block(BlockId id, std::vector<std::string> lines) {
  return make_block(id, lines);
}

inline CfgEdge edge(BlockId src, BlockId dst, std::uint64_t calls,
                    std::optional<Rational> cpiter = std::nullopt) {
  return CfgEdge{src, dst, calls, std::move(cpiter)};
}

}  // namespace locus::testing
