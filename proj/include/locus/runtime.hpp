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

// Workload runtime under the all-data-in-L1 assumption:
//
//   t_app = max over ranks ( max over threads ( sum_e cpiter_e * calls_e ) ) / f
//
// Ranks and threads are assumed not to share execution resources.

#pragma once

#include "locus/cfg.hpp"
#include "locus/profile.hpp"
#include "locus/rational.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace locus {

struct RuntimeEstimate {
  Rational t_app_s;
  RankId critical_rank = 0;
  ThreadId critical_thread = 0;
  std::map<RankId, std::map<ThreadId, Rational>> per_rank_per_thread_cycles;
  Rational frequency_hz;
  std::size_t unannotated_edges = 0;
};

class NoAnnotatedEdges : public std::runtime_error {
 public:
  NoAnnotatedEdges()
      : std::runtime_error("no executed edge carries a cycle estimate; refusing to report 0 s") {}
};

inline RuntimeEstimate estimate_runtime(const WorkloadProfile& profile) {
  if (profile.frequency_hz <= 0) throw std::invalid_argument("frequency_hz must be positive");
  RuntimeEstimate est;
  est.frequency_hz = profile.frequency_hz;
  bool any_annotated = false;
  bool have_max = false;
  Rational max_cycles;
  for (const auto& [rid, threads] : profile.ranks) {
    for (const auto& [tid, cfg] : threads) {
      auto s = sum_weighted_cycles(cfg);
      est.unannotated_edges += s.unannotated_edges;
      for (const auto& e : cfg.edges)
        if (e.calls > 0 && e.cpiter) any_annotated = true;
      // Maps iterate in ascending id order, so strict > keeps the lowest ids.
      if (!have_max || s.total_cycles > max_cycles) {
        max_cycles = s.total_cycles;
        est.critical_rank = rid;
        est.critical_thread = tid;
        have_max = true;
      }
      est.per_rank_per_thread_cycles[rid][tid] = std::move(s.total_cycles);
    }
  }
  if (!any_annotated) throw NoAnnotatedEdges();
  est.t_app_s = max_cycles / profile.frequency_hz;
  return est;
}

namespace detail {
// Unbiased draw in [0, bound) from a 64-bit engine by rejection.
inline std::uint64_t bounded_draw(std::mt19937_64& gen, std::uint64_t bound) {
  // 2^64 mod bound; values below it would bias the low residues.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t x = gen();
    if (x >= threshold) return x % bound;
  }
}
}  // namespace detail

// Rank 0 plus up to `max_extra` distinct ranks from 1..total-1, drawn with a
// partial Fisher-Yates shuffle over mt19937_64. Stable for a given seed on
// every platform.
inline std::set<std::int64_t> sample_ranks(std::int64_t total_ranks, std::int64_t max_extra = 9,
                                           std::uint64_t seed = 0) {
  if (total_ranks < 1) throw std::invalid_argument("total_ranks must be >= 1");
  if (max_extra < 0) throw std::invalid_argument("max_extra must be >= 0");
  std::set<std::int64_t> out{0};
  std::int64_t pool_size = total_ranks - 1;
  std::int64_t k = std::min(max_extra, pool_size);
  if (k == pool_size) {
    for (std::int64_t r = 1; r < total_ranks; ++r) out.insert(r);
    return out;
  }
  std::mt19937_64 gen(seed);
  std::map<std::int64_t, std::int64_t> swapped;  // sparse permutation of 1..total-1
  auto at = [&](std::int64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i + 1 : it->second;
  };
  for (std::int64_t i = 0; i < k; ++i) {
    auto j = i + static_cast<std::int64_t>(
                     detail::bounded_draw(gen, static_cast<std::uint64_t>(pool_size - i)));
    std::int64_t vi = at(i), vj = at(j);
    swapped[i] = vj;
    swapped[j] = vi;
    out.insert(vj);
  }
  return out;
}

// Copy of `profile` keeping only the listed positions of its rank order
// (position 0 is the lowest rank id).
inline WorkloadProfile restrict_to_rank_positions(const WorkloadProfile& profile,
                                                  const std::set<std::int64_t>& positions) {
  WorkloadProfile out = profile;
  out.ranks.clear();
  std::int64_t pos = 0;
  for (const auto& [rid, threads] : profile.ranks) {
    if (positions.count(pos)) out.ranks.emplace(rid, threads);
    ++pos;
  }
  return out;
}

enum class SpeedupClass { Slowdown, Modest, Significant };

inline const char* to_string(SpeedupClass c) {
  switch (c) {
    case SpeedupClass::Slowdown: return "Slowdown";
    case SpeedupClass::Modest: return "Modest";
    case SpeedupClass::Significant: return "Significant";
  }
  return "?";
}

struct SpeedupThresholds {
  Rational modest = 1;       // speedup >= modest is no longer a slowdown
  Rational significant = 2;  // speedup >= significant
};

struct SpeedupReport {
  std::string workload;
  Rational measured_s;
  Rational estimated_s;
  Rational speedup;
  SpeedupClass classification = SpeedupClass::Modest;
};

class NonPositiveInput : public std::invalid_argument {
 public:
  NonPositiveInput() : std::invalid_argument("measured and estimated runtimes must be positive") {}
};

inline SpeedupReport speedup(const Rational& measured_s, const Rational& estimated_s,
                             std::string workload = {}, const SpeedupThresholds& th = {}) {
  if (measured_s <= 0 || estimated_s <= 0) throw NonPositiveInput();
  SpeedupReport r;
  r.workload = std::move(workload);
  r.measured_s = measured_s;
  r.estimated_s = estimated_s;
  r.speedup = measured_s / estimated_s;
  if (r.speedup < th.modest)
    r.classification = SpeedupClass::Slowdown;
  else if (r.speedup < th.significant)
    r.classification = SpeedupClass::Modest;
  else
    r.classification = SpeedupClass::Significant;
  return r;
}

}  // namespace locus
