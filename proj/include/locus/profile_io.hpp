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

// Reading and writing the JSON profile format:
//
//   { "workload": str, "frequency_hz": number, "measured_runtime_s": number|null,
//     "ranks": { "<rank>": { "<thread>": {
//         "source": int, "sink": int,
//         "blocks": { "<id>": { "addr": "0x..."|null, "asm": [str, ...] } },
//         "edges": [ { "src": int, "dst": int, "calls": int,
//                      "cpiter": number|null }, ... ] } } } }
//
// Unknown keys are rejected unless parsing is lenient.

#pragma once

#include "locus/cfg.hpp"
#include "locus/profile.hpp"
#include "locus/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

namespace locus {

using Json = nlohmann::json;

struct ParseOptions {
  bool lenient = false;
  const RegisterTable* registers = &RegisterTable::builtin();
};

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where, const ParseOptions& opts) {
  if (!obj.is_object()) throw SyntaxError(0, where + ": expected an object");
  if (opts.lenient) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) throw SyntaxError(0, where + ": unknown key '" + it.key() + "'");
  }
}

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SyntaxError(0, where + ": missing key '" + key + "'");
  return *it;
}

// Exact rational value of a JSON number, read from its shortest decimal form.
inline Rational json_rational(const Json& v, const std::string& where) {
  if (!v.is_number()) throw SyntaxError(0, where + ": expected a number");
  if (v.is_number_float() && !std::isfinite(v.get<double>()))
    throw SyntaxError(0, where + ": non-finite number");
  return parse_decimal(v.dump());
}

inline std::uint64_t json_count(const Json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto n = v.get<std::int64_t>();
    if (n >= 0) return static_cast<std::uint64_t>(n);
    throw SyntaxError(0, where + ": must be non-negative");
  }
  throw SyntaxError(0, where + ": must be an exact integer");
}

template <typename Int>
Int parse_int_key(const std::string& key, const std::string& where) {
  Int value{};
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), value);
  if (ec != std::errc() || ptr != key.data() + key.size())
    throw SyntaxError(0, where + ": '" + key + "' is not an integer id");
  return value;
}

inline std::optional<std::uint64_t> parse_address(const Json& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw SyntaxError(0, where + ": addr must be a hex string or null");
  std::string s = v.get<std::string>();
  if (s.size() < 3 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X'))
    throw SyntaxError(0, where + ": addr must start with 0x");
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data() + 2, s.data() + s.size(), value, 16);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SyntaxError(0, where + ": bad hex address '" + s + "'");
  return value;
}

inline ThreadCfg thread_from_json(const Json& j, ThreadId tid, const std::string& where,
                                  const ParseOptions& opts) {
  check_keys(j, {"source", "sink", "blocks", "edges"}, where, opts);
  ThreadCfg cfg;
  cfg.thread_id = tid;
  cfg.source = json_count(require(j, "source", where), where + ".source");
  cfg.sink = json_count(require(j, "sink", where), where + ".sink");

  const Json& blocks = require(j, "blocks", where);
  if (!blocks.is_object()) throw SyntaxError(0, where + ".blocks: expected an object");
  for (auto it = blocks.begin(); it != blocks.end(); ++it) {
    std::string bw = where + ".blocks." + it.key();
    BlockId id = parse_int_key<BlockId>(it.key(), bw);
    check_keys(*it, {"addr", "asm"}, bw, opts);
    BasicBlock b;
    b.id = id;
    if (auto a = it->find("addr"); a != it->end()) b.start_address = parse_address(*a, bw);
    const Json& lines = require(*it, "asm", bw);
    if (!lines.is_array()) throw SyntaxError(0, bw + ".asm: expected an array of strings");
    for (const auto& l : lines) {
      if (!l.is_string()) throw SyntaxError(0, bw + ".asm: expected strings");
      try {
        b.instructions.push_back(parse_instruction(l.get<std::string>(), *opts.registers));
      } catch (const std::invalid_argument& e) {
        throw SyntaxError(0, bw + ".asm: " + e.what());
      }
    }
    cfg.blocks.emplace(id, std::move(b));
  }

  const Json& edges = require(j, "edges", where);
  if (!edges.is_array()) throw SyntaxError(0, where + ".edges: expected an array");
  std::size_t k = 0;
  for (const auto& e : edges) {
    std::string ew = where + ".edges[" + std::to_string(k++) + "]";
    check_keys(e, {"src", "dst", "calls", "cpiter"}, ew, opts);
    CfgEdge edge;
    edge.src = json_count(require(e, "src", ew), ew + ".src");
    edge.dst = json_count(require(e, "dst", ew), ew + ".dst");
    edge.calls = json_count(require(e, "calls", ew), ew + ".calls");
    if (auto c = e.find("cpiter"); c != e.end() && !c->is_null()) {
      edge.cpiter = json_rational(*c, ew + ".cpiter");
      if (*edge.cpiter < 0) throw SyntaxError(0, ew + ".cpiter: must be non-negative");
    }
    cfg.edges.push_back(std::move(edge));
  }
  return cfg;
}

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

inline Json rational_to_json(const Rational& r) {
  if (denominator(r) == 1 && abs(r) < Rational(BigInt(1) << 53))
    return Json(numerator(r).convert_to<std::int64_t>());
  return Json(to_double(r));
}

}  // namespace detail

// Parses without running the CFG invariants. Syntactic and schema problems
// still throw SyntaxError.
inline WorkloadProfile parse_profile_unchecked(const std::string& text,
                                               const ParseOptions& opts = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SyntaxError(detail::line_of_byte(text, e.byte), e.what());
  }
  detail::check_keys(j, {"workload", "frequency_hz", "measured_runtime_s", "ranks"}, "profile",
                     opts);
  WorkloadProfile p;
  const Json& name = detail::require(j, "workload", "profile");
  if (!name.is_string()) throw SyntaxError(0, "profile.workload: expected a string");
  p.workload_name = name.get<std::string>();
  p.frequency_hz = detail::json_rational(detail::require(j, "frequency_hz", "profile"),
                                         "profile.frequency_hz");
  if (p.frequency_hz <= 0) throw SyntaxError(0, "profile.frequency_hz: must be positive");
  if (auto m = j.find("measured_runtime_s"); m != j.end() && !m->is_null()) {
    p.measured_runtime_s = detail::json_rational(*m, "profile.measured_runtime_s");
    if (*p.measured_runtime_s <= 0)
      throw SyntaxError(0, "profile.measured_runtime_s: must be positive");
  }
  const Json& ranks = detail::require(j, "ranks", "profile");
  if (!ranks.is_object()) throw SyntaxError(0, "profile.ranks: expected an object");
  for (auto r = ranks.begin(); r != ranks.end(); ++r) {
    std::string rw = "ranks." + r.key();
    RankId rid = detail::parse_int_key<RankId>(r.key(), rw);
    if (!r->is_object()) throw SyntaxError(0, rw + ": expected an object");
    auto& threads = p.ranks[rid];
    for (auto t = r->begin(); t != r->end(); ++t) {
      std::string tw = rw + "." + t.key();
      ThreadId tid = detail::parse_int_key<ThreadId>(t.key(), tw);
      threads.emplace(tid, detail::thread_from_json(*t, tid, tw, opts));
    }
    if (threads.empty()) throw SyntaxError(0, rw + ": rank has no threads");
  }
  if (p.ranks.empty()) throw SyntaxError(0, "profile.ranks: no ranks");
  return p;
}

// Throws the exception matching the first broken invariant of `p`.
inline void check_profile(const WorkloadProfile& p) {
  for (const auto& [rid, threads] : p.ranks) {
    for (const auto& [tid, cfg] : threads) {
      auto violations = validate_cfg(cfg);
      if (violations.empty()) continue;
      const Violation& v = violations.front();
      std::string where = "rank " + std::to_string(rid) + " thread " + std::to_string(tid) + ": ";
      switch (v.kind) {
        case Violation::Kind::DanglingEdge: throw DanglingEdge(v.src, v.dst);
        case Violation::Kind::FlowViolation: throw FlowViolation(v.block, v.in_sum, v.out_sum);
        case Violation::Kind::MissingSourceOrSink: throw MissingSourceOrSink(where + v.detail);
        default: throw SyntaxError(0, where + v.message());
      }
    }
  }
}

inline WorkloadProfile parse_profile_text(const std::string& text, const ParseOptions& opts = {}) {
  WorkloadProfile p = parse_profile_unchecked(text, opts);
  check_profile(p);
  return p;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline WorkloadProfile parse_profile(const std::string& path, const ParseOptions& opts = {}) {
  return parse_profile_text(read_file(path), opts);
}

inline Json profile_to_json(const WorkloadProfile& p) {
  Json ranks = Json::object();
  for (const auto& [rid, threads] : p.ranks) {
    Json tj = Json::object();
    for (const auto& [tid, cfg] : threads) {
      Json blocks = Json::object();
      for (const auto& [id, b] : cfg.blocks) {
        Json lines = Json::array();
        for (const auto& ins : b.instructions) lines.push_back(ins.raw_text);
        Json addr = nullptr;
        if (b.start_address) {
          std::ostringstream hex;
          hex << "0x" << std::hex << *b.start_address;
          addr = hex.str();
        }
        blocks[std::to_string(id)] = Json{{"addr", addr}, {"asm", lines}};
      }
      Json edges = Json::array();
      for (const auto& e : cfg.edges) {
        edges.push_back(Json{{"src", e.src},
                             {"dst", e.dst},
                             {"calls", e.calls},
                             {"cpiter", e.cpiter ? detail::rational_to_json(*e.cpiter) : Json()}});
      }
      tj[std::to_string(tid)] =
          Json{{"source", cfg.source}, {"sink", cfg.sink}, {"blocks", blocks}, {"edges", edges}};
    }
    ranks[std::to_string(rid)] = tj;
  }
  return Json{{"workload", p.workload_name},
              {"frequency_hz", detail::rational_to_json(p.frequency_hz)},
              {"measured_runtime_s",
               p.measured_runtime_s ? detail::rational_to_json(*p.measured_runtime_s) : Json()},
              {"ranks", ranks}};
}

inline std::string serialize_profile(const WorkloadProfile& p, int indent = 2) {
  return profile_to_json(p).dump(indent);
}

}  // namespace locus
