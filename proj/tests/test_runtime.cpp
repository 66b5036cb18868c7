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

#include "locus/report.hpp"
#include "locus/runtime.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace locus {
namespace {

using testing::block;
using testing::edge;
using testing::Q;

// One self-looping block whose edge carries exactly `cycles`.
ThreadCfg thread_with(ThreadId tid, std::int64_t cycles) {
  ThreadCfg cfg;
  cfg.thread_id = tid;
  cfg.blocks[0] = block(0, {"nop"});
  cfg.edges = {edge(0, 0, 1, Q(cycles))};
  return cfg;
}

WorkloadProfile profile(std::vector<std::vector<std::int64_t>> per_rank, Rational f) {
  WorkloadProfile p;
  p.workload_name = "w";
  p.frequency_hz = f;
  for (std::size_t r = 0; r < per_rank.size(); ++r)
    for (std::size_t t = 0; t < per_rank[r].size(); ++t)
      p.ranks[r][t] = thread_with(t, per_rank[r][t]);
  return p;
}

TEST(EstimateRuntime, OneSecond) {
  auto e = estimate_runtime(profile({{2200000000}}, Q(2200000000)));
  EXPECT_EQ(e.t_app_s, Q(1));
}

TEST(EstimateRuntime, SlowestThread) {
  auto e = estimate_runtime(profile({{1000, 2000}}, Q(1000000000)));
  EXPECT_EQ(e.t_app_s, Q(2, 1000000));
  EXPECT_EQ(e.critical_thread, 1u);
  EXPECT_EQ(e.per_rank_per_thread_cycles.at(0).at(0), Q(1000));
}

TEST(EstimateRuntime, SlowestRank) {
  auto e = estimate_runtime(profile({{1500}, {3000}}, Q(1000000000)));
  EXPECT_EQ(e.t_app_s, Q(3, 1000000));
  EXPECT_EQ(e.critical_rank, 1u);
}

TEST(EstimateRuntime, TiesGoToLowestIds) {
  auto e = estimate_runtime(profile({{5, 7, 7}, {7, 7}}, Q(1)));
  EXPECT_EQ(e.critical_rank, 0u);
  EXPECT_EQ(e.critical_thread, 1u);
}

TEST(EstimateRuntime, DifferingThreadCounts) {
  auto e = estimate_runtime(profile({{1}, {1, 2, 3, 9}, {4, 4}}, Q(1)));
  EXPECT_EQ(e.t_app_s, Q(9));
  EXPECT_EQ(e.critical_rank, 1u);
  EXPECT_EQ(e.critical_thread, 3u);
}

TEST(EstimateRuntime, RefusesWithoutAnnotations) {
  auto p = profile({{1}}, Q(1));
  p.ranks[0][0].edges[0].cpiter.reset();
  EXPECT_THROW(estimate_runtime(p), NoAnnotatedEdges);
}

TEST(EstimateRuntime, CountsUnannotatedEdges) {
  auto p = profile({{10}}, Q(1));
  p.ranks[0][0].edges.push_back(edge(0, 0, 3));
  auto e = estimate_runtime(p);
  EXPECT_EQ(e.t_app_s, Q(10));
  EXPECT_EQ(e.unannotated_edges, 1u);
}

TEST(EstimateRuntime, FrequencyScalesInversely) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int64_t> c(1, 1000000);
  for (int i = 0; i < 50; ++i) {
    auto p = profile({{c(gen), c(gen)}, {c(gen)}}, Q(c(gen)));
    auto base = estimate_runtime(p).t_app_s;
    Rational k = Q(c(gen), c(gen));
    p.frequency_hz *= k;
    EXPECT_EQ(estimate_runtime(p).t_app_s, base / k);
  }
}

TEST(EstimateRuntime, MonotoneInCycles) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::int64_t> c(1, 1000);
  for (int i = 0; i < 200; ++i) {
    auto p = profile({{c(gen), c(gen)}, {c(gen), c(gen), c(gen)}}, Q(7));
    auto before = estimate_runtime(p).t_app_s;
    RankId r = c(gen) % 2;
    ThreadId t = c(gen) % p.ranks[r].size();
    p.ranks[r][t].edges.push_back(edge(0, 0, c(gen), Q(c(gen), 3)));
    EXPECT_GE(estimate_runtime(p).t_app_s, before);
  }
}

TEST(EstimateRuntime, MaxOfSingleRankEstimates) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::int64_t> c(1, 100000);
  for (int i = 0; i < 50; ++i) {
    auto p = profile({{c(gen)}, {c(gen), c(gen)}, {c(gen)}, {c(gen), c(gen), c(gen)}}, Q(c(gen)));
    Rational best = 0;
    for (const auto& [rid, threads] : p.ranks) {
      WorkloadProfile one = p;
      one.ranks = {{rid, threads}};
      best = std::max(best, estimate_runtime(one).t_app_s);
    }
    EXPECT_EQ(estimate_runtime(p).t_app_s, best);
  }
}

TEST(SampleRanks, Examples) {
  EXPECT_EQ(sample_ranks(1, 9, 0), (std::set<std::int64_t>{0}));
  EXPECT_EQ(sample_ranks(5, 9, 0), (std::set<std::int64_t>{0, 1, 2, 3, 4}));
  auto a = sample_ranks(100, 9, 42);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_TRUE(a.count(0));
  EXPECT_EQ(a, sample_ranks(100, 9, 42));
  EXPECT_THROW(sample_ranks(0, 9, 0), std::invalid_argument);
  EXPECT_THROW(sample_ranks(3, -1, 0), std::invalid_argument);
}

TEST(SampleRanks, Properties) {
  std::mt19937_64 gen(6);
  std::uniform_int_distribution<std::int64_t> total(1, 5000), extra(0, 40);
  for (int i = 0; i < 500; ++i) {
    std::int64_t n = total(gen), k = extra(gen);
    std::uint64_t seed = gen();
    auto s = sample_ranks(n, k, seed);
    EXPECT_TRUE(s.count(0));
    EXPECT_EQ(static_cast<std::int64_t>(s.size()), std::min(1 + k, n));
    EXPECT_GE(*s.begin(), 0);
    EXPECT_LT(*s.rbegin(), n);
    EXPECT_EQ(s, sample_ranks(n, k, seed));
  }
}

TEST(SampleRanks, RoughlyUniform) {
  // Each of 1..9 should be drawn about 1/3 of the time with 3 extra picks.
  std::array<int, 10> hits{};
  for (std::uint64_t seed = 0; seed < 9000; ++seed)
    for (auto r : sample_ranks(10, 3, seed)) ++hits[r];
  EXPECT_EQ(hits[0], 9000);
  for (int r = 1; r < 10; ++r) EXPECT_NEAR(hits[r], 3000, 250) << r;
}

TEST(SampleRanks, RestrictKeepsPositionsInRankOrder) {
  WorkloadProfile p = profile({{1}, {2}, {3}}, Q(1));
  auto moved = p.ranks.extract(2);
  moved.key() = 17;
  p.ranks.insert(std::move(moved));
  auto r = restrict_to_rank_positions(p, {0, 2});
  ASSERT_EQ(r.ranks.size(), 2u);
  EXPECT_TRUE(r.ranks.count(0));
  EXPECT_TRUE(r.ranks.count(17));
}

TEST(Speedup, Examples) {
  auto a = speedup(Q(10), Q(2));
  EXPECT_EQ(a.speedup, Q(5));
  EXPECT_EQ(a.classification, SpeedupClass::Significant);
  auto b = speedup(Q(1), Q(1));
  EXPECT_EQ(b.speedup, Q(1));
  EXPECT_EQ(b.classification, SpeedupClass::Modest);
  auto c = speedup(Q(1, 2), Q(1));
  EXPECT_EQ(c.speedup, Q(1, 2));
  EXPECT_EQ(c.classification, SpeedupClass::Slowdown);
  EXPECT_THROW(speedup(Q(0), Q(1)), NonPositiveInput);
  EXPECT_THROW(speedup(Q(1), Q(-1)), NonPositiveInput);
}

TEST(Speedup, ConfigurableThresholds) {
  SpeedupThresholds th{Q(1, 2), Q(10)};
  EXPECT_EQ(speedup(Q(5), Q(1), "w", th).classification, SpeedupClass::Modest);
  EXPECT_EQ(speedup(Q(1), Q(4), "w", th).classification, SpeedupClass::Slowdown);
}

TEST(Report, CsvAndJson) {
  EstimateReport r;
  r.workload = "a,b";
  r.runtime = estimate_runtime(profile({{9}}, Q(3)));
  r.speedup = speedup(Q(6), r.runtime.t_app_s, r.workload);
  auto csv = report_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "workload,measured_s,estimated_s,speedup,critical_rank,critical_thread,"
            "unannotated_edges,unknown_mnemonics");
  EXPECT_NE(csv.find("\"a,b\",6.0,3.0,2.0,0,0,0,0"), std::string::npos) << csv;
  auto j = report_to_json(r);
  EXPECT_EQ(j["workload"], "a,b");
  EXPECT_EQ(j["speedup"]["classification"], "Significant");
}

}  // namespace
}  // namespace locus
