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

// Graph algorithms over a thread CFG: structural validation, the weighted
// cycle sum over all edges, and a trace-replay estimator that walks the PC
// sequence directly (used as an independent check of the aggregation).

#pragma once

#include "locus/profile.hpp"

#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace locus {

struct Violation {
  enum class Kind { MissingSourceOrSink, EmptyBlock, DanglingEdge, InvalidCpiter, FlowViolation };

  Kind kind;
  BlockId block = 0;  // FlowViolation, EmptyBlock, MissingSourceOrSink
  BlockId src = 0;    // DanglingEdge, InvalidCpiter
  BlockId dst = 0;
  std::uint64_t in_sum = 0;
  std::uint64_t out_sum = 0;
  std::string detail;

  std::string kind_name() const {
    switch (kind) {
      case Kind::MissingSourceOrSink: return "MissingSourceOrSink";
      case Kind::EmptyBlock: return "EmptyBlock";
      case Kind::DanglingEdge: return "DanglingEdge";
      case Kind::InvalidCpiter: return "InvalidCpiter";
      case Kind::FlowViolation: return "FlowViolation";
    }
    return "Unknown";
  }

  std::string message() const {
    switch (kind) {
      case Kind::FlowViolation:
        return "FlowViolation(" + std::to_string(block) + "," + std::to_string(in_sum) + "," +
               std::to_string(out_sum) + ")";
      case Kind::DanglingEdge:
        return "DanglingEdge(" + std::to_string(src) + "," + std::to_string(dst) + ")";
      case Kind::InvalidCpiter:
        return "InvalidCpiter(" + std::to_string(src) + "," + std::to_string(dst) + ")";
      case Kind::EmptyBlock: return "EmptyBlock(" + std::to_string(block) + ")";
      case Kind::MissingSourceOrSink: return "MissingSourceOrSink(" + detail + ")";
    }
    return detail;
  }

  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {
inline std::uint64_t saturate(unsigned __int128 v) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  return v > kMax ? kMax : static_cast<std::uint64_t>(v);
}
}  // namespace detail

// Returns every broken invariant; an empty list means the CFG is well formed.
// Flow rule: interior blocks balance in and out counts, the source emits one
// more than it receives and the sink receives one more than it emits (a block
// that is both source and sink balances). Self-loops count on both sides.
inline std::vector<Violation> validate_cfg(const ThreadCfg& cfg) {
  using Kind = Violation::Kind;
  std::vector<Violation> out;

  bool has_source = cfg.blocks.count(cfg.source) != 0;
  bool has_sink = cfg.blocks.count(cfg.sink) != 0;
  if (!has_source)
    out.push_back({Kind::MissingSourceOrSink, cfg.source, 0, 0, 0, 0,
                   "source " + std::to_string(cfg.source) + " is not a declared block"});
  if (!has_sink)
    out.push_back({Kind::MissingSourceOrSink, cfg.sink, 0, 0, 0, 0,
                   "sink " + std::to_string(cfg.sink) + " is not a declared block"});

  for (const auto& [id, block] : cfg.blocks)
    if (block.instructions.empty()) out.push_back({Kind::EmptyBlock, id, 0, 0, 0, 0, {}});

  std::map<BlockId, unsigned __int128> in, out_flow;
  for (const auto& e : cfg.edges) {
    if (!cfg.blocks.count(e.src) || !cfg.blocks.count(e.dst)) {
      out.push_back({Kind::DanglingEdge, 0, e.src, e.dst, 0, 0, {}});
      continue;
    }
    if (e.cpiter && *e.cpiter < 0) out.push_back({Kind::InvalidCpiter, 0, e.src, e.dst, 0, 0, {}});
    out_flow[e.src] += e.calls;
    in[e.dst] += e.calls;
  }

  for (const auto& [id, block] : cfg.blocks) {
    unsigned __int128 i = in[id];
    unsigned __int128 o = out_flow[id];
    bool ok;
    if (id == cfg.source && id == cfg.sink)
      ok = i == o;
    else if (id == cfg.source)
      ok = o == i + 1;
    else if (id == cfg.sink)
      ok = i == o + 1;
    else
      ok = i == o;
    if (!ok)
      out.push_back({Kind::FlowViolation, id, 0, 0, detail::saturate(i), detail::saturate(o), {}});
  }
  return out;
}

struct WeightedCfgSummary {
  ThreadId thread_id = 0;
  Rational total_cycles;
  std::size_t unannotated_edges = 0;
};

// Sum over edges of cpiter * calls, accumulated exactly. Positive-count
// edges without an estimate contribute nothing and are counted.
inline WeightedCfgSummary sum_weighted_cycles(const ThreadCfg& cfg) {
  WeightedCfgSummary s;
  s.thread_id = cfg.thread_id;
  for (const auto& e : cfg.edges) {
    if (e.calls == 0) continue;
    if (!e.cpiter) {
      ++s.unannotated_edges;
      continue;
    }
    s.total_cycles += *e.cpiter * from_uint64(e.calls);
  }
  return s;
}

using EdgeKey = std::pair<BlockId, BlockId>;
using CpiterMap = std::map<EdgeKey, Rational>;

class MissingCpiter : public std::invalid_argument {
 public:
  MissingCpiter(BlockId src, BlockId dst)
      : std::invalid_argument("no cpiter for edge " + std::to_string(src) + "->" +
                              std::to_string(dst)),
        edge_(src, dst) {}
  EdgeKey edge() const { return edge_; }

 private:
  EdgeKey edge_;
};

// Walks the PC sequence and charges the edge cost at every transition.
inline Rational replay_estimate(std::span<const BlockId> trace, const CpiterMap& cpiter) {
  Rational total;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    auto it = cpiter.find({trace[i - 1], trace[i]});
    if (it == cpiter.end()) throw MissingCpiter(trace[i - 1], trace[i]);
    total += it->second;
  }
  return total;
}

// Copies cpiter values from `cpiter` onto matching edges.
inline void annotate_edges(std::vector<CfgEdge>& edges, const CpiterMap& cpiter) {
  for (auto& e : edges)
    if (auto it = cpiter.find({e.src, e.dst}); it != cpiter.end()) e.cpiter = it->second;
}

}  // namespace locus
