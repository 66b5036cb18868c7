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

// locus: L1-resident runtime estimation and stacked-cache arithmetic.
//
// Exit codes: 0 success, 1 domain violation, 2 usage or I/O error.

#include "locus/arch.hpp"
#include "locus/backends.hpp"
#include "locus/cfg.hpp"
#include "locus/machine_model.hpp"
#include "locus/profile_io.hpp"
#include "locus/report.hpp"
#include "locus/runtime.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using locus::Json;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

std::string data_dir() {
  if (const char* d = std::getenv("LOCUS_DATA_DIR")) return d;
  return LOCUS_DATA_DIR;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

int fail(int code, const std::string& msg) {
  std::cerr << "error: " << msg << '\n';
  return code;
}

//===----------------------------------------------------------------------===//
// validate
//===----------------------------------------------------------------------===//

struct ValidateArgs {
  std::string profile;
  std::string format = "table";
  bool lenient = false;
};

int cmd_validate(const ValidateArgs& a) {
  locus::WorkloadProfile p;
  try {
    p = locus::parse_profile_unchecked(locus::read_file(a.profile), {a.lenient});
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  Json violations = Json::array();
  std::ostringstream text;
  for (const auto& [rid, threads] : p.ranks)
    for (const auto& [tid, cfg] : threads)
      for (const auto& v : locus::validate_cfg(cfg)) {
        violations.push_back(
            {{"rank", rid}, {"thread", tid}, {"kind", v.kind_name()}, {"message", v.message()}});
        text << "rank " << rid << " thread " << tid << ": " << v.message() << '\n';
      }
  if (a.format == "json")
    std::cout << Json{{"valid", violations.empty()}, {"violations", violations}}.dump(2) << '\n';
  else
    std::cout << text.str();
  return violations.empty() ? kOk : kViolation;
}

//===----------------------------------------------------------------------===//
// estimate
//===----------------------------------------------------------------------===//

struct EstimateArgs {
  std::string profile;
  std::string model;
  std::string backends;
  std::string format = "table";
  std::string annotated_out;
  std::uint64_t seed = 0;
  std::int64_t max_sampled_ranks = 9;
  std::size_t parallelism = std::max(1u, std::thread::hardware_concurrency());
  bool all_ranks = false;
  bool lenient = false;
  bool keep_artifacts = false;
  bool use_annotations = false;
  bool no_builtin = false;
  std::string modest = "1";
  std::string significant = "2";
};

int cmd_estimate(const EstimateArgs& a) {
  if (a.parallelism < 1) return fail(kUsage, "--parallelism must be >= 1");
  if (a.max_sampled_ranks < 0) return fail(kUsage, "--max-sampled-ranks must be >= 0");

  std::string text;
  try {
    text = locus::read_file(a.profile);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  locus::WorkloadProfile profile;
  try {
    profile = locus::parse_profile_text(text, {a.lenient});
  } catch (const locus::SyntaxError& e) {
    return fail(kUsage, e.what());
  } catch (const locus::ProfileError& e) {
    return fail(kViolation, e.what());
  }

  locus::MachineModel model;
  std::vector<locus::BackendSpec> specs;
  try {
    model = locus::load_machine_model(a.model.empty()
                                          ? data_dir() + "/machine_models/illustrative.json"
                                          : a.model);
    std::string backends_path = a.backends;
    if (backends_path.empty())
      if (const char* env = std::getenv("LOCUS_BACKENDS")) backends_path = env;
    if (!backends_path.empty()) specs = locus::load_backend_specs(backends_path);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  if (a.no_builtin && specs.empty()) return fail(kUsage, "--no-builtin needs at least one backend");
  for (const auto& s : specs)
    if (s.name == "builtin") return fail(kUsage, "backend name 'builtin' is reserved");

  locus::SamplingInfo sampling;
  sampling.total_ranks = profile.ranks.size();
  auto total = static_cast<std::int64_t>(profile.ranks.size());
  if (!a.all_ranks && total > 1 + a.max_sampled_ranks) {
    auto picked = locus::sample_ranks(total, a.max_sampled_ranks, a.seed);
    profile = locus::restrict_to_rank_positions(profile, picked);
    sampling.engaged = true;
    warn("sampled " + std::to_string(profile.ranks.size()) + " of " + std::to_string(total) +
         " ranks (seed " + std::to_string(a.seed) + ")");
  }
  for (const auto& [rid, threads] : profile.ranks) sampling.analyzed_ranks.push_back(rid);

  locus::BuiltinBackend builtin(model);
  std::vector<std::unique_ptr<locus::ExternalBackend>> external;
  std::vector<const locus::Backend*> backends;
  if (!a.no_builtin) backends.push_back(&builtin);
  for (const auto& s : specs) {
    external.push_back(std::make_unique<locus::ExternalBackend>(s, a.keep_artifacts));
    backends.push_back(external.back().get());
  }
  locus::EstimateOptions opts;
  opts.parallelism = a.parallelism;
  opts.keep_existing = a.use_annotations;
  opts.model = &model;
  auto est = locus::estimate_all_blocks(profile, backends, opts);
  for (const auto& w : est.warnings) warn(w);

  locus::EstimateReport report;
  report.workload = profile.workload_name;
  for (const auto* b : backends) report.backends.push_back(b->name());
  try {
    report.runtime = locus::estimate_runtime(est.profile);
  } catch (const locus::NoAnnotatedEdges& e) {
    return fail(kViolation, e.what());
  }
  report.unannotated_edges = report.runtime.unannotated_edges;
  if (report.unannotated_edges) warn(std::to_string(report.unannotated_edges) + " executed edges unannotated");
  report.unknown_mnemonics = est.stats.unknown_mnemonics;
  if (report.unknown_mnemonics)
    warn(std::to_string(report.unknown_mnemonics) + " instructions used the default spec");
  report.backend_failures = est.stats.backend_failures;
  report.sampling = sampling;
  if (profile.measured_runtime_s) {
    locus::SpeedupThresholds th{locus::parse_decimal(a.modest), locus::parse_decimal(a.significant)};
    report.speedup = locus::speedup(*profile.measured_runtime_s, report.runtime.t_app_s,
                                    profile.workload_name, th);
  }

  if (!a.annotated_out.empty()) {
    std::ofstream out(a.annotated_out);
    if (!out) return fail(kUsage, "cannot write '" + a.annotated_out + "'");
    out << locus::serialize_profile(est.profile) << '\n';
  }

  if (a.format == "json")
    std::cout << locus::report_to_json(report).dump(2) << '\n';
  else if (a.format == "csv")
    std::cout << locus::report_to_csv(report);
  else
    std::cout << locus::report_to_table(report);
  return kOk;
}

//===----------------------------------------------------------------------===//
// speedup
//===----------------------------------------------------------------------===//

struct SpeedupArgs {
  std::string measured;
  std::string estimated;
  std::string workload;
  std::string format = "table";
  std::string modest = "1";
  std::string significant = "2";
};

int cmd_speedup(const SpeedupArgs& a) {
  locus::SpeedupReport r;
  try {
    locus::SpeedupThresholds th{locus::parse_decimal(a.modest), locus::parse_decimal(a.significant)};
    r = locus::speedup(locus::parse_decimal(a.measured), locus::parse_decimal(a.estimated),
                       a.workload, th);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  if (a.format == "json") {
    std::cout << locus::speedup_to_json(r).dump(2) << '\n';
  } else if (a.format == "csv") {
    std::cout << "workload,measured_s,estimated_s,speedup,classification\n"
              << r.workload << ',' << locus::to_double(r.measured_s) << ','
              << locus::to_double(r.estimated_s) << ',' << locus::to_double(r.speedup) << ','
              << locus::to_string(r.classification) << '\n';
  } else {
    std::cout << "speedup " << locus::format_fixed(r.speedup, 2) << "x ("
              << locus::to_string(r.classification) << ")\n";
  }
  return kOk;
}

//===----------------------------------------------------------------------===//
// arch
//===----------------------------------------------------------------------===//

struct ArchArgs {
  std::string presets;
  std::string preset = "LARC";
  std::string format = "table";
  std::string dies, channels, cap, width, fclk, tag_bytes, line_bytes;
  std::string cores, cmgs;
  std::vector<std::string> areas;
};

const locus::arch::Preset* find_preset(const locus::arch::PresetLibrary& lib, const std::string& name) {
  const auto* p = lib.find(name);
  if (!p) std::cerr << "error: unknown preset '" << name << "'\n";
  return p;
}

locus::arch::PresetLibrary load_library(const ArchArgs& a) {
  return locus::arch::load_presets(a.presets.empty() ? data_dir() + "/presets.json" : a.presets);
}

std::string w(const locus::Rational& r) { return locus::format_fixed(r, 2); }

int cmd_arch_cache(const ArchArgs& a) {
  using namespace locus::arch;
  StackedCacheSpec spec;
  std::string name = a.preset;
  std::uint64_t capacity = 0, tags = 0;
  locus::Rational bw;
  try {
    auto lib = load_library(a);
    const Preset* p = find_preset(lib, a.preset);
    if (!p) return kUsage;
    if (!p->cache) return fail(kUsage, "preset '" + a.preset + "' has no cache description");
    spec = *p->cache;
    if (!a.dies.empty()) spec.n_dies = parse_size(a.dies);
    if (!a.channels.empty()) spec.n_ch = parse_size(a.channels);
    if (!a.cap.empty()) spec.n_cap_bytes = parse_size(a.cap);
    if (!a.width.empty()) spec.width_bytes = parse_size(a.width);
    if (!a.fclk.empty()) spec.f_clk_hz = parse_frequency(a.fclk);
    if (!a.tag_bytes.empty()) spec.tag_bytes_per_line = parse_size(a.tag_bytes);
    if (!a.line_bytes.empty()) spec.line_bytes = parse_size(a.line_bytes);
    capacity = cache_capacity(spec);
    bw = cache_bandwidth(spec);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  std::optional<std::uint64_t> tag_bytes;
  try {
    tag_bytes = tag_array_bytes(spec);
  } catch (const IndivisibleCapacity& e) {
    warn(e.what());
  }
  tags = tag_bytes.value_or(0);

  if (a.format == "json") {
    Json j{{"preset", name},
           {"dies", spec.n_dies},
           {"channels", spec.n_ch},
           {"channel_capacity_bytes", spec.n_cap_bytes},
           {"width_bytes", spec.width_bytes},
           {"f_clk_hz", locus::to_double(spec.f_clk_hz)},
           {"capacity_bytes", capacity},
           {"bandwidth_bytes_per_s", locus::to_double(bw)},
           {"bandwidth_gb_per_s", locus::to_double(bw / 1000000000)},
           {"tag_array_bytes", tag_bytes ? Json(tags) : Json()}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "preset          " << name << '\n'
              << "capacity        " << format_bytes(capacity) << '\n'
              << "bandwidth       " << w(bw / 1000000000) << " GB/s\n"
              << "tag array       " << (tag_bytes ? format_bytes(tags) : std::string("n/a")) << '\n';
  }
  return kOk;
}

int cmd_arch_power(const ArchArgs& a) {
  using namespace locus::arch;
  PowerSummary s;
  PowerChain chain;
  std::vector<locus::Rational> areas;
  try {
    auto lib = load_library(a);
    const Preset* p = find_preset(lib, a.preset);
    if (!p) return kUsage;
    if (!p->power) return fail(kUsage, "preset '" + a.preset + "' has no power description");
    chain = *p->power;
    if (!a.cores.empty()) chain.cores_per_cmg = parse_size(a.cores);
    if (!a.cmgs.empty()) chain.cmg_count = parse_size(a.cmgs);
    s = chip_power_summary(chain, p->cache);
    areas = p->areas_mm2;
    if (!a.areas.empty()) {
      areas.clear();
      for (const auto& x : a.areas) areas.push_back(locus::parse_decimal(x));
    }
    for (const auto& x : areas) (void)s.power_density(x);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }

  if (a.format == "json") {
    Json nodes = Json::array();
    for (const auto& [node, watts] : s.cmg_power_by_node)
      nodes.push_back({{"node", node}, {"cmg_w", locus::to_double(watts)}});
    Json density = Json::array();
    for (const auto& x : areas)
      density.push_back({{"area_mm2", locus::to_double(x)},
                         {"w_per_mm2", locus::to_double(s.power_density(x))}});
    Json j{{"preset", a.preset},
           {"cores_per_cmg", chain.cores_per_cmg},
           {"cmg_count", chain.cmg_count},
           {"cmg_power_by_node", nodes},
           {"core_w", locus::to_double(s.core_w)},
           {"cache_static_per_cmg_w", locus::to_double(s.cache_static_per_cmg_w)},
           {"cache_static_w", locus::to_double(s.cache_static_w)},
           {"cache_total_w", locus::to_double(s.cache_total_w)},
           {"tdp_w", locus::to_double(s.tdp_w)},
           {"power_density", density}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "preset                 " << a.preset << '\n';
    for (const auto& [node, watts] : s.cmg_power_by_node)
      std::cout << "CMG power @ " << node << std::string(node.size() < 11 ? 11 - node.size() : 1, ' ')
                << w(watts) << " W\n";
    std::cout << "core power (" << chain.cmg_count << " CMGs)" << std::string(chain.cmg_count < 10 ? 4 : 3, ' ')
              << w(s.core_w) << " W\n"
              << "cache static / CMG     " << w(s.cache_static_per_cmg_w) << " W\n"
              << "cache static (chip)    " << w(s.cache_static_w) << " W\n"
              << "cache total (chip)     " << w(s.cache_total_w) << " W\n"
              << "TDP                    " << w(s.tdp_w) << " W\n";
    for (const auto& x : areas)
      std::cout << "density @ " << w(x) << " mm2   " << w(s.power_density(x)) << " W/mm2\n";
  }
  return kOk;
}

int cmd_arch_list(const ArchArgs& a) {
  locus::arch::PresetLibrary lib;
  try {
    lib = load_library(a);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  if (a.format == "json") {
    Json presets = Json::object();
    for (const auto& [name, p] : lib.presets)
      presets[name] = {{"description", p.description},
                       {"cache", p.cache.has_value()},
                       {"power", p.power.has_value()}};
    std::cout << Json{{"presets", presets}, {"aliases", lib.aliases}, {"configs", lib.configs}}.dump(2)
              << '\n';
    return kOk;
  }
  for (const auto& [name, p] : lib.presets) std::cout << name << "  " << p.description << '\n';
  for (const auto& [alias, target] : lib.aliases) std::cout << alias << " -> " << target << '\n';
  for (auto it = lib.configs.begin(); it != lib.configs.end(); ++it)
    std::cout << "config " << it.key() << "  " << it->dump() << '\n';
  return kOk;
}

//===----------------------------------------------------------------------===//
// trace-to-profile
//===----------------------------------------------------------------------===//

struct TraceArgs {
  std::string trace;
  std::string blocks;
  std::string output;
  std::string workload = "trace";
  std::string frequency = "2.2e9";
  std::string measured;
  std::int64_t rank = 0;
  std::int64_t thread = 0;
};

int cmd_trace_to_profile(const TraceArgs& a) {
  locus::WorkloadProfile p;
  try {
    std::string text = locus::read_file(a.trace);
    for (char& c : text)
      if (c == ',') c = ' ';
    std::istringstream in(text);
    std::vector<locus::BlockId> trace;
    std::string tok;
    while (in >> tok) {
      std::size_t used = 0;
      unsigned long long v = std::stoull(tok, &used);
      if (used != tok.size()) throw std::invalid_argument("bad block id '" + tok + "'");
      trace.push_back(v);
    }
    std::map<locus::BlockId, locus::BasicBlock> blocks;
    if (!a.blocks.empty()) {
      Json j = Json::parse(locus::read_file(a.blocks));
      for (auto it = j.begin(); it != j.end(); ++it) {
        locus::BlockId id = std::stoull(it.key());
        blocks[id] = locus::make_block(id, it->get<std::vector<std::string>>());
      }
    }
    p.workload_name = a.workload;
    p.frequency_hz = locus::parse_decimal(a.frequency);
    if (p.frequency_hz <= 0) throw std::invalid_argument("frequency must be positive");
    if (!a.measured.empty()) p.measured_runtime_s = locus::parse_decimal(a.measured);
    p.ranks[a.rank][a.thread] = locus::thread_cfg_from_trace(trace, blocks, a.thread);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  std::string out = locus::serialize_profile(p) + "\n";
  if (a.output.empty() || a.output == "-") {
    std::cout << out;
  } else {
    std::ofstream f(a.output);
    if (!f) return fail(kUsage, "cannot write '" + a.output + "'");
    f << out;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"locus: upper-bound speedup estimation under an all-data-in-L1 assumption"};
  app.require_subcommand(1);
  const std::vector<std::string> kFormats{"table", "json", "csv"};

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check a profile's CFG invariants");
  validate->add_option("profile", va.profile, "Profile JSON")->required();
  validate->add_option("--format", va.format)->check(CLI::IsMember(kFormats));
  validate->add_flag("--lenient", va.lenient, "Ignore unknown keys");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate L1-resident runtime of a profile");
  estimate->add_option("profile", ea.profile, "Profile JSON")->required();
  estimate->add_option("--model", ea.model, "Machine model JSON");
  estimate->add_option("--backends", ea.backends, "Backends JSON (default: $LOCUS_BACKENDS)");
  estimate->add_option("--format", ea.format)->check(CLI::IsMember(kFormats));
  estimate->add_option("--seed", ea.seed, "Rank sampling seed");
  estimate->add_option("--max-sampled-ranks", ea.max_sampled_ranks,
                       "Ranks sampled in addition to rank 0");
  estimate->add_flag("--all-ranks", ea.all_ranks, "Never sample ranks");
  estimate->add_option("--parallelism", ea.parallelism, "Concurrent analyses");
  estimate->add_flag("--lenient", ea.lenient, "Ignore unknown profile keys");
  estimate->add_flag("--keep-artifacts", ea.keep_artifacts, "Keep backend temp files");
  estimate->add_flag("--use-annotations", ea.use_annotations,
                     "Keep cpiter values already present in the profile");
  estimate->add_flag("--no-builtin", ea.no_builtin, "Use external backends only");
  estimate->add_option("--annotated-out", ea.annotated_out, "Write the annotated profile here");
  estimate->add_option("--modest-threshold", ea.modest, "Speedup below this is a slowdown");
  estimate->add_option("--significant-threshold", ea.significant, "Speedup at or above this is significant");

  SpeedupArgs sa;
  auto* speed = app.add_subcommand("speedup", "Measured / estimated runtime");
  speed->add_option("--measured", sa.measured, "Measured runtime [s]")->required();
  speed->add_option("--estimated", sa.estimated, "Estimated runtime [s]")->required();
  speed->add_option("--workload", sa.workload);
  speed->add_option("--format", sa.format)->check(CLI::IsMember(kFormats));
  speed->add_option("--modest-threshold", sa.modest);
  speed->add_option("--significant-threshold", sa.significant);

  ArchArgs aa;
  auto* arch = app.add_subcommand("arch", "Stacked-cache and power calculators");
  arch->require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--presets", aa.presets, "Preset JSON");
    c->add_option("--preset", aa.preset, "Preset name");
    c->add_option("--format", aa.format)->check(CLI::IsMember(kFormats));
  };
  auto* cache = arch->add_subcommand("cache", "Capacity, bandwidth and tag array size");
  common(cache);
  cache->add_option("--dies", aa.dies);
  cache->add_option("--channels", aa.channels);
  cache->add_option("--cap", aa.cap, "Per-channel capacity, e.g. 512KiB");
  cache->add_option("--width", aa.width, "Channel width [B]");
  cache->add_option("--fclk", aa.fclk, "Channel clock, e.g. 1GHz");
  cache->add_option("--tag-bytes", aa.tag_bytes);
  cache->add_option("--line-bytes", aa.line_bytes);
  auto* power = arch->add_subcommand("power", "Process-scaled power and TDP");
  common(power);
  power->add_option("--cores", aa.cores, "Cores per CMG");
  power->add_option("--cmgs", aa.cmgs, "CMG count");
  power->add_option("--area", aa.areas, "Die area [mm2] for power density");
  auto* list = arch->add_subcommand("list", "List presets");
  common(list);

  TraceArgs ta;
  auto* t2p = app.add_subcommand("trace-to-profile", "Build a profile from a block-id trace");
  t2p->add_option("trace", ta.trace, "Whitespace or comma separated block ids")->required();
  t2p->add_option("--blocks", ta.blocks, "JSON object: block id -> list of assembly lines");
  t2p->add_option("-o,--output", ta.output);
  t2p->add_option("--workload", ta.workload);
  t2p->add_option("--frequency", ta.frequency, "Hz");
  t2p->add_option("--measured", ta.measured, "Measured runtime [s]");
  t2p->add_option("--rank", ta.rank);
  t2p->add_option("--thread", ta.thread);
  t2p->add_option("--format", aa.format)->check(CLI::IsMember(kFormats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(va);
    if (*estimate) return cmd_estimate(ea);
    if (*speed) return cmd_speedup(sa);
    if (*cache) return cmd_arch_cache(aa);
    if (*power) return cmd_arch_power(aa);
    if (*list) return cmd_arch_list(aa);
    if (*t2p) return cmd_trace_to_profile(ta);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  return kUsage;
}
