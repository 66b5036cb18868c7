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

#include "locus/profile.hpp"
#include "locus/profile_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace locus {
namespace {

using testing::Q;

TEST(Rational, ParseDecimalIsExact) {
  EXPECT_EQ(parse_decimal("2.5"), Q(5, 2));
  EXPECT_EQ(parse_decimal("-0.125"), Q(-1, 8));
  EXPECT_EQ(parse_decimal("2.2e9"), Q(2200000000));
  EXPECT_EQ(parse_decimal("1E-3"), Q(1, 1000));
  EXPECT_EQ(parse_decimal("27.37/46.98"), Q(2737, 4698));
  EXPECT_EQ(parse_decimal("0.1") * 3, parse_decimal("0.3"));
  EXPECT_THROW(parse_decimal(""), std::invalid_argument);
  EXPECT_THROW(parse_decimal("1.2.3"), std::invalid_argument);
  EXPECT_THROW(parse_decimal("abc"), std::invalid_argument);
}

TEST(Rational, FormatFixedRoundsHalfToEven) {
  EXPECT_EQ(format_fixed(Q(125, 1000)), "0.12");
  EXPECT_EQ(format_fixed(Q(135, 1000)), "0.14");
  EXPECT_EQ(format_fixed(Q(-125, 1000)), "-0.12");
  EXPECT_EQ(format_fixed(Q(46977, 1000)), "46.98");
  EXPECT_EQ(format_fixed(Q(7), 0), "7");
  EXPECT_EQ(format_fixed(Q(1, 3), 3), "0.333");
}

TEST(Rational, DoubleRoundTrip) {
  EXPECT_EQ(from_double_exact(0.1), parse_decimal("0.1000000000000000055511151231257827021181583404541015625"));
  EXPECT_EQ(to_double(Q(1, 4)), 0.25);
}

TEST(Instruction, ParsesMnemonicAndOperands) {
  auto i = parse_instruction("  add x1, x1, #1   // bump");
  EXPECT_EQ(i.mnemonic, "ADD");
  EXPECT_EQ(i.operands, (std::vector<std::string>{"x1", "x1", "#1"}));
  EXPECT_EQ(i.writes, (std::set<std::string>{"x1"}));
  EXPECT_EQ(i.reads, (std::set<std::string>{"x1"}));
  EXPECT_THROW(parse_instruction("   ; only a comment"), std::invalid_argument);
}

TEST(Instruction, MemoryOperandRegistersAreReads) {
  auto ld = parse_instruction("ldr d1, [x2, x1, lsl #3]");
  EXPECT_EQ(ld.writes, (std::set<std::string>{"d1"}));
  EXPECT_EQ(ld.reads, (std::set<std::string>{"x1", "x2"}));
  auto st = parse_instruction("mov qword ptr [rax+8*rcx], rdx");
  EXPECT_TRUE(st.writes.empty());
  EXPECT_EQ(st.reads, (std::set<std::string>{"rax", "rcx", "rdx"}));
}

TEST(Instruction, NormalizesRegisterSpelling) {
  auto i = parse_instruction("FADD V0.2D, V1.2D, V2.2D");
  EXPECT_EQ(i.writes, (std::set<std::string>{"v0"}));
  EXPECT_EQ(i.reads, (std::set<std::string>{"v1", "v2"}));
  auto att = parse_instruction("addq %rax, %rbx");
  EXPECT_EQ(att.writes, (std::set<std::string>{"rax"}));
  // Zero registers never carry a dependence.
  auto z = parse_instruction("mov x0, xzr");
  EXPECT_TRUE(z.reads.empty());
}

TEST(Instruction, OperandRuleControlsDefs) {
  OperandRule store{.dests = 0};
  auto s = parse_instruction("str x0, [x1]", RegisterTable::builtin(), store);
  EXPECT_TRUE(s.writes.empty());
  EXPECT_EQ(s.reads, (std::set<std::string>{"x0", "x1"}));

  OperandRule fma{.dests = 1, .reads_dests = true};
  auto f = parse_instruction("vfmadd231pd ymm0, ymm1, ymm2", RegisterTable::builtin(), fma);
  EXPECT_EQ(f.writes, (std::set<std::string>{"ymm0"}));
  EXPECT_EQ(f.reads, (std::set<std::string>{"ymm0", "ymm1", "ymm2"}));

  OperandRule cmp{.dests = 0, .writes_flags = true};
  auto c = parse_instruction("cmp x1, x3", RegisterTable::builtin(), cmp);
  EXPECT_EQ(c.writes, (std::set<std::string>{std::string(kFlagsRegister)}));
}

TEST(Instruction, NumericLiteralsAreNotRegisters) {
  auto i = parse_instruction("add r1, r2, 0x1f");
  EXPECT_EQ(i.reads, (std::set<std::string>{"r2"}));
}

TEST(EdgesFromTrace, CountsAdjacentPairs) {
  std::vector<BlockId> t{0, 1, 1, 1, 2};
  auto e = edges_from_trace(t);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], testing::edge(0, 1, 1));
  EXPECT_EQ(e[1], testing::edge(1, 1, 2));
  EXPECT_EQ(e[2], testing::edge(1, 2, 1));
}

TEST(EdgesFromTrace, SingletonHasNoEdges) {
  std::vector<BlockId> t{7};
  EXPECT_TRUE(edges_from_trace(t).empty());
  auto cfg = thread_cfg_from_trace(t);
  EXPECT_EQ(cfg.source, 7u);
  EXPECT_EQ(cfg.sink, 7u);
}

TEST(EdgesFromTrace, EmptyTraceThrows) {
  std::vector<BlockId> t;
  EXPECT_THROW(edges_from_trace(t), EmptyTrace);
}

TEST(EdgesFromTrace, AccumulationLoopOf42) {
  std::vector<BlockId> t{10};
  t.insert(t.end(), 42, 11);
  t.push_back(12);
  auto e = edges_from_trace(t);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], testing::edge(10, 11, 1));
  EXPECT_EQ(e[1], testing::edge(11, 11, 41));
  EXPECT_EQ(e[2], testing::edge(11, 12, 1));
}

//===----------------------------------------------------------------------===//
// Profile I/O
//===----------------------------------------------------------------------===//

const char* kChain = R"({
  "workload": "chain", "frequency_hz": 2.2e9, "measured_runtime_s": null,
  "ranks": {"0": {"0": {
    "source": 0, "sink": 2,
    "blocks": {"0": {"addr": "0x1000", "asm": ["mov x0, #1"]},
               "1": {"addr": null, "asm": ["add x0, x0, #1"]},
               "2": {"asm": ["ret"]}},
    "edges": [{"src": 0, "dst": 1, "calls": 1, "cpiter": 2.5},
              {"src": 1, "dst": 2, "calls": 1}]}}}})";

TEST(ProfileIo, ParsesChain) {
  auto p = parse_profile_text(kChain);
  EXPECT_EQ(p.workload_name, "chain");
  EXPECT_EQ(p.frequency_hz, Q(2200000000));
  const auto& cfg = p.ranks.at(0).at(0);
  EXPECT_EQ(cfg.blocks.size(), 3u);
  EXPECT_EQ(cfg.blocks.at(0).start_address, 0x1000u);
  EXPECT_FALSE(cfg.blocks.at(1).start_address.has_value());
  EXPECT_EQ(cfg.edges[0].cpiter, Q(5, 2));
  EXPECT_FALSE(cfg.edges[1].cpiter.has_value());
}

TEST(ProfileIo, MinimalSingleBlock) {
  auto p = parse_profile_text(R"({"workload": "m", "frequency_hz": 1, "ranks": {"0": {"0":
      {"source": 0, "sink": 0, "blocks": {"0": {"asm": ["NOP"]}},
       "edges": [{"src": 0, "dst": 0, "calls": 0}]}}}})");
  EXPECT_EQ(p.ranks.at(0).at(0).blocks.at(0).instructions[0].mnemonic, "NOP");
}

TEST(ProfileIo, DanglingEdge) {
  try {
    parse_profile_text(R"({"workload": "d", "frequency_hz": 1, "ranks": {"0": {"0":
        {"source": 0, "sink": 0, "blocks": {"0": {"asm": ["nop"]}},
         "edges": [{"src": 0, "dst": 7, "calls": 0}]}}}})");
    FAIL() << "expected DanglingEdge";
  } catch (const DanglingEdge& e) {
    EXPECT_EQ(e.src(), 0u);
    EXPECT_EQ(e.dst(), 7u);
  }
}

TEST(ProfileIo, FlowViolation) {
  try {
    parse_profile_text(R"({"workload": "f", "frequency_hz": 1, "ranks": {"0": {"0":
        {"source": 0, "sink": 2, "blocks": {"0": {"asm": ["nop"]}, "1": {"asm": ["nop"]},
         "2": {"asm": ["nop"]}},
         "edges": [{"src": 0, "dst": 1, "calls": 1}, {"src": 1, "dst": 2, "calls": 2}]}}}})");
    FAIL() << "expected FlowViolation";
  } catch (const FlowViolation& e) {
    EXPECT_EQ(e.block(), 1u);
    EXPECT_EQ(e.in_sum(), 1u);
    EXPECT_EQ(e.out_sum(), 2u);
  }
}

TEST(ProfileIo, MissingSource) {
  EXPECT_THROW(parse_profile_text(R"({"workload": "s", "frequency_hz": 1, "ranks": {"0": {"0":
      {"source": 3, "sink": 0, "blocks": {"0": {"asm": ["nop"]}}, "edges": []}}}})"),
               MissingSourceOrSink);
}

TEST(ProfileIo, SyntaxErrorsCarryLine) {
  try {
    parse_profile_text("{\n\"workload\": \"x\",\n\"frequency_hz\": ,\n}");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ProfileIo, StructuralErrors) {
  auto bad = [](const std::string& text) {
    EXPECT_THROW(parse_profile_text(text), SyntaxError) << text;
  };
  // Fractional call count.
  bad(R"({"workload": "x", "frequency_hz": 1, "ranks": {"0": {"0": {"source": 0, "sink": 0,
      "blocks": {"0": {"asm": ["nop"]}}, "edges": [{"src": 0, "dst": 0, "calls": 1.5}]}}}})");
  // Negative count.
  bad(R"({"workload": "x", "frequency_hz": 1, "ranks": {"0": {"0": {"source": 0, "sink": 0,
      "blocks": {"0": {"asm": ["nop"]}}, "edges": [{"src": 0, "dst": 0, "calls": -1}]}}}})");
  // Zero frequency.
  bad(R"({"workload": "x", "frequency_hz": 0, "ranks": {"0": {"0": {"source": 0, "sink": 0,
      "blocks": {"0": {"asm": ["nop"]}}, "edges": []}}}})");
  // No ranks.
  bad(R"({"workload": "x", "frequency_hz": 1, "ranks": {}})");
  // Unknown key in strict mode.
  bad(R"({"workload": "x", "frequency_hz": 1, "extra": 1, "ranks": {"0": {"0": {"source": 0,
      "sink": 0, "blocks": {"0": {"asm": ["nop"]}}, "edges": []}}}})");
  // Block without instructions.
  bad(R"({"workload": "x", "frequency_hz": 1, "ranks": {"0": {"0": {"source": 0, "sink": 0,
      "blocks": {"0": {"asm": []}}, "edges": []}}}})");
  // Negative cpiter.
  bad(R"({"workload": "x", "frequency_hz": 1, "ranks": {"0": {"0": {"source": 0, "sink": 0,
      "blocks": {"0": {"asm": ["nop"]}}, "edges": [{"src": 0, "dst": 0, "calls": 0, "cpiter": -1}]}}}})");
}

TEST(ProfileIo, LenientAcceptsUnknownKeys) {
  std::string text = R"({"workload": "x", "frequency_hz": 1, "tool": "sde", "ranks": {"0": {"0":
      {"source": 0, "sink": 0, "blocks": {"0": {"asm": ["nop"], "size": 4}}, "edges": []}}}})";
  EXPECT_THROW(parse_profile_text(text), SyntaxError);
  EXPECT_NO_THROW(parse_profile_text(text, {.lenient = true}));
}

TEST(ProfileIo, LargeCountsSurvive) {
  auto p = parse_profile_text(R"({"workload": "big", "frequency_hz": 1, "ranks": {"0": {"0":
      {"source": 0, "sink": 0, "blocks": {"0": {"asm": ["nop"]}},
       "edges": [{"src": 0, "dst": 0, "calls": 18446744073709551615}]}}}})");
  EXPECT_EQ(p.ranks.at(0).at(0).edges[0].calls, 18446744073709551615ull);
}

TEST(ProfileIo, RoundTrip) {
  auto p = parse_profile_text(kChain);
  auto q = parse_profile_text(serialize_profile(p));
  EXPECT_EQ(p, q);
}

TEST(ProfileIo, MissingFileIsIoError) {
  EXPECT_THROW(parse_profile("/nonexistent/profile.json"), std::runtime_error);
}

}  // namespace
}  // namespace locus
