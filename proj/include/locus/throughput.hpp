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

// Built-in basic-block throughput analyzer.
//
// A block's cycles per iteration is the largest of three lower bounds:
//
//   dispatch   total uops / dispatch width
//   ports      max over port subsets S of (uops restricted to S) / |S|, which
//              is the optimum of the fractional uop-to-port assignment
//   registers  Loop mode: the maximum cycle ratio (latency / iterations
//              crossed) of the register dependence graph; Single mode: the
//              critical path of one iteration.
//
// Memory dependencies are ignored: every load is assumed to hit in L1.

#pragma once

#include "locus/machine_model.hpp"
#include "locus/profile.hpp"
#include "locus/rational.hpp"

#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace locus {

enum class AnalysisMode { Loop, Single };

enum class Bottleneck { DispatchWidth, PortPressure, DependencyChain };

inline const char* to_string(Bottleneck b) {
  switch (b) {
    case Bottleneck::DispatchWidth: return "DispatchWidth";
    case Bottleneck::PortPressure: return "PortPressure";
    case Bottleneck::DependencyChain: return "DependencyChain";
  }
  return "?";
}

inline const char* to_string(AnalysisMode m) { return m == AnalysisMode::Loop ? "loop" : "single"; }

struct BlockThroughput {
  Rational cpiter;
  Bottleneck bottleneck = Bottleneck::DispatchWidth;
  std::vector<std::string> bottleneck_ports;  // the critical subset, for PortPressure
  // Uops spread evenly over their admissible ports.
  std::map<std::string, Rational> per_port_pressure;
  Rational dispatch_bound;
  Rational port_bound;
  Rational dependency_bound;
  std::size_t total_uops = 0;
  std::size_t unknown_mnemonics = 0;
};

// An instruction after machine-model lookup.
struct ResolvedInstruction {
  InstrSpec spec;
  std::set<std::string> writes;
  std::set<std::string> reads;
  bool known = true;
};

inline std::vector<ResolvedInstruction> resolve(const BasicBlock& block, const MachineModel& model) {
  std::vector<ResolvedInstruction> out;
  out.reserve(block.instructions.size());
  for (const auto& ins : block.instructions) {
    auto l = model.lookup(ins.mnemonic);
    auto [w, r] = derive_def_use(ins.operands, model.registers, l.spec.operands);
    out.push_back({std::move(l.spec), std::move(w), std::move(r), l.known});
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Port pressure
//===----------------------------------------------------------------------===//

struct PortBound {
  Rational value;
  PortMask critical = 0;
};

// Exact min-max fractional load. The optimum equals the densest port subset
// (Hall-type argument), so enumerating all 2^n - 1 subsets is exact.
inline PortBound port_bound(std::span<const PortMask> uops, std::size_t num_ports) {
  if (num_ports == 0 || num_ports > kMaxPorts) throw std::invalid_argument("bad port count");
  std::map<PortMask, std::uint64_t> groups;
  for (PortMask m : uops) ++groups[m];
  std::uint64_t best_load = 0;
  std::uint64_t best_size = 1;
  PortMask best = 0;
  const PortMask limit = PortMask{1} << num_ports;
  for (PortMask s = 1; s < limit; ++s) {
    std::uint64_t load = 0;
    for (const auto& [m, n] : groups)
      if ((m & ~s) == 0) load += n;
    std::uint64_t size = static_cast<std::uint64_t>(std::popcount(s));
    if (load * best_size > best_load * size) {
      best_load = load;
      best_size = size;
      best = s;
    }
  }
  return {Rational(BigInt(best_load), BigInt(best_size)), best};
}

//===----------------------------------------------------------------------===//
// Register dependences
//===----------------------------------------------------------------------===//

struct DepEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  int latency = 0;  // latency of the producer
  bool loop_carried = false;

  friend bool operator==(const DepEdge&, const DepEdge&) = default;
};

// Each read is linked to its reaching definition: the closest earlier writer
// in program order, or else the last writer of the previous iteration.
inline std::vector<DepEdge> build_dependences(std::span<const ResolvedInstruction> instrs) {
  std::vector<DepEdge> edges;
  const std::size_t n = instrs.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& reg : instrs[j].reads) {
      std::optional<std::size_t> producer;
      bool carried = false;
      for (std::size_t i = j; i-- > 0;)
        if (instrs[i].writes.count(reg)) {
          producer = i;
          break;
        }
      if (!producer) {
        for (std::size_t i = n; i-- > j;)
          if (instrs[i].writes.count(reg)) {
            producer = i;
            carried = true;
            break;
          }
      }
      if (producer) edges.push_back({*producer, j, instrs[*producer].spec.latency, carried});
    }
  }
  return edges;
}

// Completion time of the last instruction of one iteration when every
// instruction starts as soon as its operands are ready.
inline std::int64_t critical_path(std::span<const ResolvedInstruction> instrs,
                                  std::span<const DepEdge> edges) {
  std::vector<std::int64_t> finish(instrs.size(), 0);
  std::vector<std::vector<std::size_t>> preds(instrs.size());
  for (const auto& e : edges)
    if (!e.loop_carried) preds[e.to].push_back(e.from);
  std::int64_t best = 0;
  for (std::size_t j = 0; j < instrs.size(); ++j) {
    std::int64_t ready = 0;
    for (std::size_t i : preds[j]) ready = std::max(ready, finish[i]);
    finish[j] = ready + instrs[j].spec.latency;
    best = std::max(best, finish[j]);
  }
  return best;
}

// Maximum over dependence cycles of total latency / iterations spanned.
//
// Every cycle crosses the iteration boundary at least once because
// intra-iteration edges point forward. The graph is reduced to the heads of
// loop-carried edges, where each reduced edge spans exactly one iteration and
// weighs the longest latency path between heads; Karp's maximum mean cycle
// algorithm then gives the exact ratio.
inline Rational loop_carried_bound(std::span<const ResolvedInstruction> instrs,
                                   std::span<const DepEdge> edges) {
  const std::size_t n = instrs.size();
  std::vector<std::vector<const DepEdge*>> intra_in(n);
  std::vector<std::size_t> heads;
  std::vector<int> head_index(n, -1);
  for (const auto& e : edges) {
    if (e.loop_carried) {
      if (head_index[e.to] < 0) {
        head_index[e.to] = static_cast<int>(heads.size());
        heads.push_back(e.to);
      }
    } else {
      intra_in[e.to].push_back(&e);
    }
  }
  const std::size_t m = heads.size();
  if (m == 0) return Rational(0);

  constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::min();
  std::vector<std::vector<std::int64_t>> weight(m, std::vector<std::int64_t>(m, kNone));
  std::vector<std::int64_t> longest(n);
  for (std::size_t h = 0; h < m; ++h) {
    std::size_t start = heads[h];
    std::fill(longest.begin(), longest.end(), kNone);
    longest[start] = 0;
    for (std::size_t x = start + 1; x < n; ++x)
      for (const DepEdge* e : intra_in[x])
        if (e->from >= start && longest[e->from] != kNone)
          longest[x] = std::max(longest[x], longest[e->from] + e->latency);
    for (const auto& e : edges) {
      if (!e.loop_carried || longest[e.from] == kNone) continue;
      auto& w = weight[h][static_cast<std::size_t>(head_index[e.to])];
      w = std::max(w, longest[e.from] + e.latency);
    }
  }

  // walks[k][v]: heaviest walk of exactly k reduced edges ending at v.
  std::vector<std::vector<std::int64_t>> walks(m + 1, std::vector<std::int64_t>(m, kNone));
  std::fill(walks[0].begin(), walks[0].end(), 0);
  for (std::size_t k = 1; k <= m; ++k)
    for (std::size_t u = 0; u < m; ++u) {
      if (walks[k - 1][u] == kNone) continue;
      for (std::size_t v = 0; v < m; ++v)
        if (weight[u][v] != kNone)
          walks[k][v] = std::max(walks[k][v], walks[k - 1][u] + weight[u][v]);
    }

  bool any = false;
  std::int64_t best_num = 0, best_den = 1;
  for (std::size_t v = 0; v < m; ++v) {
    if (walks[m][v] == kNone) continue;
    std::int64_t lo_num = 0, lo_den = 0;  // lo_den == 0 means +infinity
    for (std::size_t k = 0; k < m; ++k) {
      if (walks[k][v] == kNone) continue;
      std::int64_t num = walks[m][v] - walks[k][v];
      std::int64_t den = static_cast<std::int64_t>(m - k);
      if (lo_den == 0 || static_cast<__int128>(num) * lo_den < static_cast<__int128>(lo_num) * den) {
        lo_num = num;
        lo_den = den;
      }
    }
    if (!any || static_cast<__int128>(lo_num) * best_den > static_cast<__int128>(best_num) * lo_den) {
      best_num = lo_num;
      best_den = lo_den;
      any = true;
    }
  }
  if (!any || best_num <= 0) return Rational(0);
  return make_rational(best_num, best_den);
}

//===----------------------------------------------------------------------===//
// Block analysis
//===----------------------------------------------------------------------===//

inline BlockThroughput analyze_resolved(std::span<const ResolvedInstruction> instrs,
                                        const MachineModel& model, AnalysisMode mode) {
  if (instrs.empty()) throw std::invalid_argument("cannot analyze an empty block");
  BlockThroughput t;
  std::vector<PortMask> uops;
  for (const auto& r : instrs) {
    for (PortMask m : r.spec.port_choices) {
      uops.push_back(m);
      Rational share(BigInt(1), BigInt(std::popcount(m)));
      for (const auto& p : model.port_names(m)) t.per_port_pressure[p] += share;
    }
    if (!r.known) ++t.unknown_mnemonics;
  }
  for (const auto& p : model.ports) t.per_port_pressure.try_emplace(p);
  t.total_uops = uops.size();
  t.dispatch_bound = Rational(BigInt(t.total_uops), BigInt(model.dispatch_width));
  auto pb = port_bound(uops, model.ports.size());
  t.port_bound = pb.value;

  auto deps = build_dependences(instrs);
  t.dependency_bound = mode == AnalysisMode::Loop
                           ? loop_carried_bound(instrs, deps)
                           : Rational(BigInt(critical_path(instrs, deps)));

  // Ties favor the dependency chain, then ports.
  t.cpiter = t.dispatch_bound;
  if (t.port_bound >= t.cpiter) {
    t.cpiter = t.port_bound;
    t.bottleneck = Bottleneck::PortPressure;
    t.bottleneck_ports = model.port_names(pb.critical);
  }
  if (t.dependency_bound >= t.cpiter) {
    t.cpiter = t.dependency_bound;
    t.bottleneck = Bottleneck::DependencyChain;
    t.bottleneck_ports.clear();
  }
  return t;
}

inline BlockThroughput analyze_block(const BasicBlock& block, const MachineModel& model,
                                     AnalysisMode mode) {
  if (block.instructions.empty())
    throw std::invalid_argument("block " + std::to_string(block.id) + " has no instructions");
  auto instrs = resolve(block, model);
  return analyze_resolved(instrs, model, mode);
}

// Cost of `callee` when it runs right after `caller`: the Single-mode cycle
// count of the concatenation minus that of the caller alone, floored at 0.
// Callee work that overlaps the caller's tail is not charged twice.
inline Rational analyze_pair(const BasicBlock& caller, const BasicBlock& callee,
                             const MachineModel& model) {
  if (caller.instructions.empty() || callee.instructions.empty())
    throw std::invalid_argument("cannot analyze an empty block");
  Rational both = analyze_block(concatenate(caller, callee), model, AnalysisMode::Single).cpiter;
  Rational first = analyze_block(caller, model, AnalysisMode::Single).cpiter;
  Rational diff = both - first;
  return diff < 0 ? Rational(0) : diff;
}

inline std::size_t count_unknown_mnemonics(const BasicBlock& block, const MachineModel& model) {
  std::size_t n = 0;
  for (const auto& ins : block.instructions)
    if (!model.instruction_table.count(ins.mnemonic)) ++n;
  return n;
}

}  // namespace locus
