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

// Randomized properties that span several modules.

#include "locus/backends.hpp"
#include "locus/cfg.hpp"
#include "locus/profile_io.hpp"
#include "locus/runtime.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace locus {
namespace {

using testing::Q;

// CFG built from the oracle tally rather than edges_from_trace.
ThreadCfg oracle_cfg(const std::vector<BlockId>& trace) {
  ThreadCfg cfg;
  for (BlockId b : trace) cfg.blocks.try_emplace(b, make_block(b, {"nop"}));
  for (const auto& [k, n] : oracle::tally_pairs(trace)) cfg.edges.push_back({k.first, k.second, n, {}});
  cfg.source = trace.front();
  cfg.sink = trace.back();
  return cfg;
}

TEST(FlowConservation, OracleCfgsValidateAndMutationsAreCaught) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<std::size_t> steps(1, 400), blocks(1, 12);
  std::size_t mutations = 0;
  for (int i = 0; i < 300; ++i) {
    auto trace = oracle::random_trace(gen, steps(gen), blocks(gen));
    auto cfg = oracle_cfg(trace);
    ASSERT_TRUE(validate_cfg(cfg).empty()) << i;
    for (std::size_t e = 0; e < cfg.edges.size(); ++e) {
      if (cfg.edges[e].src == cfg.edges[e].dst) continue;
      for (int delta : {-1, +1}) {
        auto m = cfg;
        m.edges[e].calls += delta;
        auto v = validate_cfg(m);
        ASSERT_FALSE(v.empty()) << "edge " << e << " delta " << delta;
        std::set<BlockId> flagged;
        for (const auto& x : v) flagged.insert(x.block);
        EXPECT_TRUE(flagged.count(m.edges[e].src));
        EXPECT_TRUE(flagged.count(m.edges[e].dst));
        ++mutations;
      }
    }
  }
  EXPECT_GT(mutations, 1000u);
}

TEST(FlowConservation, SelfEdgeMutationsLeaveBalanceIntact) {
  std::vector<BlockId> t{0, 1, 1, 1, 2};
  auto cfg = oracle_cfg(t);
  for (auto& e : cfg.edges)
    if (e.src == e.dst) e.calls += 5;
  EXPECT_TRUE(validate_cfg(cfg).empty());
}

TEST(FlowConservation, ParserRejectsMutatedJson) {
  std::mt19937_64 gen(32);
  for (int i = 0; i < 40; ++i) {
    auto trace = oracle::random_trace(gen, 60, 6);
    WorkloadProfile p;
    p.workload_name = "m";
    p.frequency_hz = Q(1000);
    p.ranks[0][0] = oracle_cfg(trace);
    auto j = profile_to_json(p);
    EXPECT_NO_THROW(parse_profile_text(j.dump()));
    auto& edges = j["ranks"]["0"]["0"]["edges"];
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e]["src"] == edges[e]["dst"]) continue;
      auto m = j;
      auto& calls = m["ranks"]["0"]["0"]["edges"][e]["calls"];
      calls = calls.get<std::uint64_t>() + 1;
      EXPECT_THROW(parse_profile_text(m.dump()), FlowViolation);
    }
  }
}

TEST(Profile, RoundTrip) {
  std::mt19937_64 gen(33);
  std::uniform_int_distribution<std::int64_t> num(0, 99999);
  for (int i = 0; i < 50; ++i) {
    WorkloadProfile p;
    p.workload_name = "rt-" + std::to_string(i);
    p.frequency_hz = Q(num(gen) + 1, 100);
    if (i % 2) p.measured_runtime_s = Q(num(gen) + 1, 1000);
    for (RankId r = 0; r < 3; ++r) {
      for (ThreadId t = 0; t < 2; ++t) {
        auto cfg = thread_cfg_from_trace(oracle::random_trace(gen, 50, 5), {}, t);
        for (auto& e : cfg.edges) e.cpiter = Q(num(gen), 100);
        for (auto& [id, b] : cfg.blocks) b.start_address = 0x400000 + 16 * id;
        p.ranks[r][t] = cfg;
      }
    }
    EXPECT_EQ(parse_profile_text(serialize_profile(p)), p);
  }
}

TEST(SumWeightedCycles, Linear) {
  std::mt19937_64 gen(34);
  std::uniform_int_distribution<std::int64_t> num(0, 1000);
  for (int i = 0; i < 100; ++i) {
    auto cfg = thread_cfg_from_trace(oracle::random_trace(gen, 200, 8));
    for (auto& e : cfg.edges) e.cpiter = Q(num(gen), num(gen) + 1);
    Rational base = sum_weighted_cycles(cfg).total_cycles;
    Rational k = Q(num(gen), 7);
    auto scaled = cfg;
    for (auto& e : scaled.edges) e.cpiter = *e.cpiter * k;
    EXPECT_EQ(sum_weighted_cycles(scaled).total_cycles, base * k);
    auto doubled = cfg;
    for (auto& e : doubled.edges) e.calls *= 2;
    EXPECT_EQ(sum_weighted_cycles(doubled).total_cycles, base * 2);
  }
}

TEST(Median, Properties) {
  std::mt19937_64 gen(35);
  std::uniform_int_distribution<std::int64_t> num(-1000, 1000), den(1, 50);
  std::uniform_int_distribution<std::size_t> len(1, 15);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Rational> v(len(gen));
    for (auto& x : v) x = Q(num(gen), den(gen));
    Rational m = median_aggregate(v);
    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    EXPECT_EQ(median_aggregate(shuffled), m);
    EXPECT_LE(*std::min_element(v.begin(), v.end()), m);
    EXPECT_GE(*std::max_element(v.begin(), v.end()), m);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    if (n % 2 == 0) {
      EXPECT_EQ(m, (sorted[n / 2 - 1] + sorted[n / 2]) / 2);
    }
    std::vector<Rational> one{v[0]};
    EXPECT_EQ(median_aggregate(one), v[0]);
  }
}

TEST(Replay, EqualsAggregationAndRuntime) {
  std::mt19937_64 gen(36);
  std::uniform_int_distribution<std::int64_t> num(0, 500);
  for (int i = 0; i < 100; ++i) {
    WorkloadProfile p;
    p.workload_name = "r";
    p.frequency_hz = Q(num(gen) + 1);
    Rational best = 0;
    for (RankId r = 0; r < 2; ++r) {
      for (ThreadId t = 0; t < 3; ++t) {
        auto trace = oracle::random_trace(gen, 300, 10);
        CpiterMap m;
        for (const auto& [k, n] : oracle::tally_pairs(trace)) m[k] = Q(num(gen) + 1, 3);
        auto cfg = thread_cfg_from_trace(trace, {}, t);
        annotate_edges(cfg.edges, m);
        Rational replay = replay_estimate(trace, m);
        EXPECT_EQ(replay, sum_weighted_cycles(cfg).total_cycles);
        best = std::max(best, replay);
        p.ranks[r][t] = cfg;
      }
    }
    EXPECT_EQ(estimate_runtime(p).t_app_s, best / p.frequency_hz);
  }
}

}  // namespace
}  // namespace locus
