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

// In-memory representation of a profiled workload: ranks own threads, each
// thread owns a control-flow graph whose edges carry execution counts and,
// once analyzed, a cycles-per-iteration estimate for the callee block.

#pragma once

#include "locus/rational.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace locus {

using BlockId = std::uint64_t;
using RankId = std::int64_t;
using ThreadId = std::int64_t;

// Name of the pseudo-register that carries condition codes.
inline constexpr std::string_view kFlagsRegister = "FLAGS";

//===----------------------------------------------------------------------===//
// Register names
//===----------------------------------------------------------------------===//

// Decides which operand tokens name registers. Tokens are lowercased and
// stripped of a leading '%' and of any '.<arrangement>' suffix before lookup.
class RegisterTable {
 public:
  RegisterTable() = default;
  explicit RegisterTable(const std::vector<std::string>& patterns) {
    for (const auto& p : patterns) add_pattern(p);
  }

  void add_pattern(const std::string& pattern) {
    patterns_.emplace_back(pattern, std::regex::ECMAScript | std::regex::icase |
                                        std::regex::optimize);
    sources_.push_back(pattern);
  }

  bool is_register(std::string_view token) const {
    std::string t(token);
    for (const auto& re : patterns_)
      if (std::regex_match(t, re)) return true;
    return false;
  }

  const std::vector<std::string>& patterns() const { return sources_; }

  // Common x86-64 and AArch64 general-purpose, SIMD and predicate names plus
  // a generic r<N> family. Zero registers are deliberately absent: they never
  // carry a value between instructions.
  static const RegisterTable& builtin() {
    static const RegisterTable table(std::vector<std::string>{
        // x86-64
        "[re]?(ax|bx|cx|dx|si|di|bp|sp)", "(a|b|c|d)[lh]", "(si|di|bp|sp)l",
        "r([89]|1[0-5])[dwb]?", "[xyz]mm([0-9]|[12][0-9]|3[01])", "k[0-7]",
        // AArch64
        "[xw]([0-9]|[12][0-9]|30)", "w?sp", "lr", "fp",
        "[vqdshb]([0-9]|[12][0-9]|3[01])", "z([0-9]|[12][0-9]|3[01])",
        "p([0-9]|1[0-5])",
        // generic
        "r[0-9]+"});
    return table;
  }

 private:
  std::vector<std::regex> patterns_;
  std::vector<std::string> sources_;
};

//===----------------------------------------------------------------------===//
// Instructions and blocks
//===----------------------------------------------------------------------===//

// How the operands of a mnemonic map onto register definitions and uses.
// The default treats the first operand as the destination.
struct OperandRule {
  int dests = 1;
  bool reads_dests = false;
  bool writes_flags = false;
  bool reads_flags = false;

  friend bool operator==(const OperandRule&, const OperandRule&) = default;
};

struct Instruction {
  std::string mnemonic;
  std::vector<std::string> operands;
  std::string raw_text;
  std::set<std::string> writes;
  std::set<std::string> reads;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string strip_comment(std::string_view line) {
  std::size_t cut = line.size();
  if (auto p = line.find("//"); p != std::string_view::npos) cut = std::min(cut, p);
  if (auto p = line.find(';'); p != std::string_view::npos) cut = std::min(cut, p);
  return std::string(line.substr(0, cut));
}

// Splits on commas that are not nested inside (), [] or {}.
inline std::vector<std::string> split_operands(std::string_view text) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    char c = i < text.size() ? text[i] : ',';
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') depth = std::max(0, depth - 1);
    if (c == ',' && depth == 0) {
      std::string op = trim(text.substr(start, i - start));
      if (!op.empty()) out.push_back(std::move(op));
      start = i + 1;
    }
  }
  return out;
}

inline bool is_memory_operand(std::string_view op) {
  return op.find('[') != std::string_view::npos || op.find('(') != std::string_view::npos;
}

}  // namespace detail

// Register names mentioned by one operand, normalized to lowercase.
inline std::vector<std::string> operand_registers(std::string_view op, const RegisterTable& regs) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < op.size()) {
    unsigned char c = static_cast<unsigned char>(op[i]);
    if (std::isalpha(c) || c == '_' || c == '%') {
      std::size_t j = i + 1;
      while (j < op.size() && (std::isalnum(static_cast<unsigned char>(op[j])) || op[j] == '_' ||
                               op[j] == '.'))
        ++j;
      std::string tok(op.substr(i, j - i));
      if (!tok.empty() && tok[0] == '%') tok.erase(0, 1);
      if (auto dot = tok.find('.'); dot != std::string::npos) tok.resize(dot);
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      if (!tok.empty() && regs.is_register(tok)) out.push_back(tok);
      i = j;
    } else if (std::isdigit(c)) {
      // Skip numeric literals such as 0x10 so their tail is not a token.
      while (i < op.size() && std::isalnum(static_cast<unsigned char>(op[i]))) ++i;
    } else {
      ++i;
    }
  }
  return out;
}

// Derives register defs and uses from the operand list. Registers inside a
// memory operand are always uses (address computation).
inline std::pair<std::set<std::string>, std::set<std::string>> derive_def_use(
    const std::vector<std::string>& operands, const RegisterTable& regs, const OperandRule& rule) {
  std::set<std::string> writes, reads;
  for (std::size_t k = 0; k < operands.size(); ++k) {
    const std::string& op = operands[k];
    bool dest = static_cast<int>(k) < rule.dests && !detail::is_memory_operand(op);
    for (auto& r : operand_registers(op, regs)) {
      if (dest) {
        writes.insert(r);
        if (rule.reads_dests) reads.insert(r);
      } else {
        reads.insert(r);
      }
    }
  }
  if (rule.writes_flags) writes.insert(std::string(kFlagsRegister));
  if (rule.reads_flags) reads.insert(std::string(kFlagsRegister));
  return {std::move(writes), std::move(reads)};
}

// Parses one assembly line "<mnemonic> <op>, <op>, ...". Throws
// std::invalid_argument on an empty line.
inline Instruction parse_instruction(std::string_view line,
                                     const RegisterTable& regs = RegisterTable::builtin(),
                                     const OperandRule& rule = {}) {
  std::string body = detail::trim(detail::strip_comment(line));
  if (body.empty()) throw std::invalid_argument("empty instruction");
  Instruction ins;
  ins.raw_text = std::string(line);
  std::size_t sp = 0;
  while (sp < body.size() && !std::isspace(static_cast<unsigned char>(body[sp]))) ++sp;
  ins.mnemonic = body.substr(0, sp);
  std::transform(ins.mnemonic.begin(), ins.mnemonic.end(), ins.mnemonic.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  ins.operands = detail::split_operands(std::string_view(body).substr(sp));
  auto [w, r] = derive_def_use(ins.operands, regs, rule);
  ins.writes = std::move(w);
  ins.reads = std::move(r);
  return ins;
}

struct BasicBlock {
  BlockId id = 0;
  std::optional<std::uint64_t> start_address;
  std::vector<Instruction> instructions;

  bool empty() const { return instructions.empty(); }
  friend bool operator==(const BasicBlock&, const BasicBlock&) = default;
};

inline BasicBlock make_block(BlockId id, const std::vector<std::string>& asm_lines,
                             const RegisterTable& regs = RegisterTable::builtin()) {
  BasicBlock b;
  b.id = id;
  for (const auto& l : asm_lines) b.instructions.push_back(parse_instruction(l, regs));
  return b;
}

// Caller instructions followed by callee instructions.
inline BasicBlock concatenate(const BasicBlock& first, const BasicBlock& second) {
  BasicBlock out = first;
  out.instructions.insert(out.instructions.end(), second.instructions.begin(),
                          second.instructions.end());
  return out;
}

struct CfgEdge {
  BlockId src = 0;
  BlockId dst = 0;
  std::uint64_t calls = 0;
  std::optional<Rational> cpiter;

  friend bool operator==(const CfgEdge&, const CfgEdge&) = default;
};

struct ThreadCfg {
  ThreadId thread_id = 0;
  std::map<BlockId, BasicBlock> blocks;
  std::vector<CfgEdge> edges;
  BlockId source = 0;
  BlockId sink = 0;

  friend bool operator==(const ThreadCfg&, const ThreadCfg&) = default;
};

struct WorkloadProfile {
  std::string workload_name;
  Rational frequency_hz;
  std::optional<Rational> measured_runtime_s;
  std::map<RankId, std::map<ThreadId, ThreadCfg>> ranks;

  friend bool operator==(const WorkloadProfile&, const WorkloadProfile&) = default;
};

//===----------------------------------------------------------------------===//
// Errors
//===----------------------------------------------------------------------===//

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public ProfileError {
 public:
  SyntaxError(std::size_t line, const std::string& reason)
      : ProfileError("syntax error" + (line ? " at line " + std::to_string(line) : std::string()) +
                     ": " + reason),
        line_(line), reason_(reason) {}
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class DanglingEdge : public ProfileError {
 public:
  DanglingEdge(BlockId src, BlockId dst)
      : ProfileError("edge " + std::to_string(src) + "->" + std::to_string(dst) +
                     " references an undeclared block"),
        src_(src), dst_(dst) {}
  BlockId src() const { return src_; }
  BlockId dst() const { return dst_; }

 private:
  BlockId src_, dst_;
};

class FlowViolation : public ProfileError {
 public:
  FlowViolation(BlockId block, std::uint64_t in_sum, std::uint64_t out_sum)
      : ProfileError("flow not conserved at block " + std::to_string(block) + " (in " +
                     std::to_string(in_sum) + ", out " + std::to_string(out_sum) + ")"),
        block_(block), in_(in_sum), out_(out_sum) {}
  BlockId block() const { return block_; }
  std::uint64_t in_sum() const { return in_; }
  std::uint64_t out_sum() const { return out_; }

 private:
  BlockId block_;
  std::uint64_t in_, out_;
};

class MissingSourceOrSink : public ProfileError {
 public:
  explicit MissingSourceOrSink(const std::string& what) : ProfileError(what) {}
};

class EmptyTrace : public std::invalid_argument {
 public:
  EmptyTrace() : std::invalid_argument("trace is empty") {}
};

//===----------------------------------------------------------------------===//
// Trace ingestion
//===----------------------------------------------------------------------===//

// Counts adjacent (a, b) pairs of a program-counter block trace. Edges come
// back ordered by (src, dst).
inline std::vector<CfgEdge> edges_from_trace(std::span<const BlockId> trace) {
  if (trace.empty()) throw EmptyTrace();
  std::map<std::pair<BlockId, BlockId>, std::uint64_t> counts;
  for (std::size_t i = 1; i < trace.size(); ++i) ++counts[{trace[i - 1], trace[i]}];
  std::vector<CfgEdge> edges;
  edges.reserve(counts.size());
  for (const auto& [key, n] : counts) edges.push_back(CfgEdge{key.first, key.second, n, std::nullopt});
  return edges;
}

// Builds a complete thread CFG from a trace. Blocks absent from `blocks` are
// given a single NOP so the result is well formed.
inline ThreadCfg thread_cfg_from_trace(std::span<const BlockId> trace,
                                       const std::map<BlockId, BasicBlock>& blocks = {},
                                       ThreadId thread_id = 0) {
  ThreadCfg cfg;
  cfg.thread_id = thread_id;
  cfg.edges = edges_from_trace(trace);
  cfg.source = trace.front();
  cfg.sink = trace.back();
  for (BlockId id : trace) {
    if (cfg.blocks.count(id)) continue;
    if (auto it = blocks.find(id); it != blocks.end()) {
      cfg.blocks[id] = it->second;
      cfg.blocks[id].id = id;
    } else {
      cfg.blocks[id] = make_block(id, {"NOP"});
    }
  }
  return cfg;
}

}  // namespace locus
