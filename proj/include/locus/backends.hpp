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

// Throughput backends and per-edge annotation.
//
// A backend turns a basic block into cycles per iteration. The built-in
// analyzer is one backend; external machine-code analyzers are driven through
// a command template and one of three output dialects. Every positive-count
// CFG edge A->B is annotated with the median over backends of either the
// Loop-mode estimate of B (B loops) or the caller/callee pair cost of B
// after A (B does not loop).

#pragma once

#include "locus/machine_model.hpp"
#include "locus/profile.hpp"
#include "locus/rational.hpp"
#include "locus/subprocess.hpp"
#include "locus/throughput.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace locus {

//===----------------------------------------------------------------------===//
// Results
//===----------------------------------------------------------------------===//

struct Failure {
  enum class Kind { BackendMissing, BackendTimeout, ParseFailure, NonZeroExit, Unsupported };
  Kind kind;
  std::string reason;

  std::string kind_name() const {
    switch (kind) {
      case Kind::BackendMissing: return "BackendMissing";
      case Kind::BackendTimeout: return "BackendTimeout";
      case Kind::ParseFailure: return "ParseFailure";
      case Kind::NonZeroExit: return "NonZeroExit";
      case Kind::Unsupported: return "Unsupported";
    }
    return "Failure";
  }

  friend bool operator==(const Failure&, const Failure&) = default;
};

using BackendResult = std::variant<Rational, Failure>;

inline bool succeeded(const BackendResult& r) { return std::holds_alternative<Rational>(r); }

class EmptyInput : public std::invalid_argument {
 public:
  EmptyInput() : std::invalid_argument("median of an empty list") {}
};

// Middle order statistic; the mean of the two central values for even sizes.
inline Rational median_aggregate(std::span<const Rational> values) {
  if (values.empty()) throw EmptyInput();
  std::vector<Rational> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2;
}

struct ThroughputEstimate {
  BlockId block_id = 0;
  std::map<std::string, BackendResult> per_backend;
  std::optional<Rational> median_cpiter;  // absent when every backend failed
  std::size_t backends_used = 0;
};

inline ThroughputEstimate combine_results(BlockId block_id,
                                          std::map<std::string, BackendResult> results) {
  ThroughputEstimate t;
  t.block_id = block_id;
  std::vector<Rational> ok;
  for (const auto& [name, r] : results)
    if (auto* v = std::get_if<Rational>(&r)) ok.push_back(*v);
  t.backends_used = ok.size();
  if (!ok.empty()) t.median_cpiter = median_aggregate(ok);
  t.per_backend = std::move(results);
  return t;
}

//===----------------------------------------------------------------------===//
// Backend interface
//===----------------------------------------------------------------------===//

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& name() const = 0;
  virtual BackendResult estimate(const BasicBlock& block, AnalysisMode mode) const = 0;
  // Cost of `callee` executed right after `caller`.
  virtual BackendResult estimate_pair(const BasicBlock& caller, const BasicBlock& callee) const = 0;
};

class BuiltinBackend final : public Backend {
 public:
  explicit BuiltinBackend(const MachineModel& model, std::string name = "builtin")
      : model_(model), name_(std::move(name)) {}

  const std::string& name() const override { return name_; }
  const MachineModel& model() const { return model_; }

  BackendResult estimate(const BasicBlock& block, AnalysisMode mode) const override {
    return analyze_block(block, model_, mode).cpiter;
  }
  BackendResult estimate_pair(const BasicBlock& caller, const BasicBlock& callee) const override {
    return analyze_pair(caller, callee, model_);
  }

 private:
  const MachineModel& model_;
  std::string name_;
};

//===----------------------------------------------------------------------===//
// External analyzers
//===----------------------------------------------------------------------===//

enum class OutputDialect { Summary, Throughput, Timeline };

inline OutputDialect parse_dialect(const std::string& s) {
  if (s == "summary") return OutputDialect::Summary;
  if (s == "throughput") return OutputDialect::Throughput;
  if (s == "timeline") return OutputDialect::Timeline;
  throw std::invalid_argument("unknown output dialect '" + s + "'");
}

inline const char* to_string(OutputDialect d) {
  switch (d) {
    case OutputDialect::Summary: return "summary";
    case OutputDialect::Throughput: return "throughput";
    case OutputDialect::Timeline: return "timeline";
  }
  return "?";
}

struct BackendSpec {
  std::string name;
  // Placeholders: {asmfile} (required) and {iterations}.
  std::string invocation_template;
  OutputDialect parser = OutputDialect::Summary;
  double timeout_s = 60;
  int iterations = 100;
  bool dest_last = false;  // AT&T-style operand order in the emitted file
};

class BackendConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate_backend_spec(const BackendSpec& s) {
  if (s.name.empty()) throw BackendConfigError("backend without a name");
  if (s.invocation_template.find("{asmfile}") == std::string::npos)
    throw BackendConfigError("backend '" + s.name + "': template lacks {asmfile}");
  if (!(s.timeout_s > 0)) throw BackendConfigError("backend '" + s.name + "': timeout_s must be > 0");
  if (s.iterations < 1) throw BackendConfigError("backend '" + s.name + "': iterations must be >= 1");
}

inline std::vector<BackendSpec> backend_specs_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw BackendConfigError("backends file must hold a JSON array");
  std::vector<BackendSpec> out;
  std::set<std::string> names;
  for (const auto& e : j) {
    if (!e.is_object()) throw BackendConfigError("backend entries must be objects");
    for (auto it = e.begin(); it != e.end(); ++it) {
      static const char* kKeys[] = {"name",       "invocation_template", "parser",
                                    "timeout_s", "iterations",          "operand_order"};
      if (std::find(std::begin(kKeys), std::end(kKeys), it.key()) == std::end(kKeys))
        throw BackendConfigError("backend: unknown key '" + it.key() + "'");
    }
    try {
      BackendSpec s;
      s.name = e.at("name").get<std::string>();
      s.invocation_template = e.at("invocation_template").get<std::string>();
      s.parser = parse_dialect(e.value("parser", std::string("summary")));
      s.timeout_s = e.value("timeout_s", 60.0);
      s.iterations = e.value("iterations", 100);
      std::string order = e.value("operand_order", std::string("dest-first"));
      if (order != "dest-first" && order != "dest-last")
        throw BackendConfigError("backend '" + s.name + "': bad operand_order '" + order + "'");
      s.dest_last = order == "dest-last";
      validate_backend_spec(s);
      if (!names.insert(s.name).second)
        throw BackendConfigError("duplicate backend name '" + s.name + "'");
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      throw BackendConfigError(std::string("backend: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
      throw BackendConfigError(std::string("backend: ") + ex.what());
    }
  }
  return out;
}

inline std::vector<BackendSpec> load_backend_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BackendConfigError("cannot open backends file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendConfigError("backends file '" + path + "': " + e.what());
  }
  return backend_specs_from_json(j);
}

// One instruction per line, lowercase mnemonic, destination first unless the
// backend asks for the reverse.
inline std::string emit_assembly(const BasicBlock& block, bool dest_last = false) {
  std::string out;
  for (const auto& ins : block.instructions) {
    std::string m = ins.mnemonic;
    std::transform(m.begin(), m.end(), m.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out += m;
    std::vector<std::string> ops = ins.operands;
    if (dest_last) std::reverse(ops.begin(), ops.end());
    for (std::size_t i = 0; i < ops.size(); ++i) out += (i == 0 ? " " : ", ") + ops[i];
    out += '\n';
  }
  return out;
}

namespace detail {
inline std::string excerpt(const std::string& s, std::size_t n = 160) {
  std::string e = s.substr(0, n);
  std::replace(e.begin(), e.end(), '\n', ' ');
  return e;
}
}  // namespace detail

// "Iterations: <int>" and "Total Cycles: <int>" -> cycles / iterations.
inline BackendResult parse_summary_output(const std::string& out) {
  static const std::regex kIter(R"(Iterations:\s*([0-9]+))");
  static const std::regex kCycles(R"(Total Cycles:\s*([0-9]+))");
  std::smatch mi, mc;
  if (!std::regex_search(out, mi, kIter))
    return Failure{Failure::Kind::ParseFailure, "no 'Iterations' line: " + detail::excerpt(out)};
  if (!std::regex_search(out, mc, kCycles))
    return Failure{Failure::Kind::ParseFailure, "no 'Total Cycles' line: " + detail::excerpt(out)};
  Rational iters = parse_decimal(mi[1].str());
  if (iters == 0) return Failure{Failure::Kind::ParseFailure, "zero iterations"};
  return parse_decimal(mc[1].str()) / iters;
}

// "Block RThroughput: <float>".
inline BackendResult parse_throughput_output(const std::string& out) {
  static const std::regex kRt(R"(Block RThroughput:\s*([0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?))");
  std::smatch m;
  if (!std::regex_search(out, m, kRt))
    return Failure{Failure::Kind::ParseFailure,
                   "no 'Block RThroughput' line: " + detail::excerpt(out)};
  return parse_decimal(m[1].str());
}

// Retirement cycle of every instruction of iteration 0, read from a timeline
// view: a header "Index  0123456789..." fixes the column of cycle 0, and each
// "[iter,index]" row marks retirement with 'R' at the retire cycle's column.
inline std::optional<std::vector<std::int64_t>> parse_timeline_retire(const std::string& out) {
  static const std::regex kRow(R"(^\[([0-9]+),([0-9]+)\])");
  std::istringstream in(out);
  std::string line;
  std::optional<std::size_t> origin;
  std::map<std::size_t, std::int64_t> retire;
  while (std::getline(in, line)) {
    if (line.rfind("Index", 0) == 0) {
      auto p = line.find('0', 5);
      if (p != std::string::npos) origin = p;
      continue;
    }
    std::smatch m;
    if (!origin || !std::regex_search(line, m, kRow)) continue;
    if (std::stoul(m[1].str()) != 0) continue;
    std::size_t idx = std::stoul(m[2].str());
    auto r = line.find('R', *origin);
    if (r == std::string::npos) return std::nullopt;
    retire[idx] = static_cast<std::int64_t>(r - *origin);
  }
  if (retire.empty()) return std::nullopt;
  std::vector<std::int64_t> v;
  for (std::size_t i = 0; i < retire.size(); ++i) {
    auto it = retire.find(i);
    if (it == retire.end()) return std::nullopt;
    v.push_back(it->second);
  }
  return v;
}

inline std::string expand_template(std::string tmpl, const std::string& asmfile, int iterations) {
  auto replace_all = [&](const std::string& key, const std::string& value) {
    for (std::size_t p = tmpl.find(key); p != std::string::npos; p = tmpl.find(key, p + value.size()))
      tmpl.replace(p, key.size(), value);
  };
  replace_all("{asmfile}", asmfile);
  replace_all("{iterations}", std::to_string(iterations));
  return tmpl;
}

class ExternalBackend final : public Backend {
 public:
  explicit ExternalBackend(BackendSpec spec, bool keep_artifacts = false)
      : spec_(std::move(spec)), keep_(keep_artifacts) {
    validate_backend_spec(spec_);
  }

  const std::string& name() const override { return spec_.name; }
  const BackendSpec& spec() const { return spec_; }

  BackendResult estimate(const BasicBlock& block, AnalysisMode mode) const override {
    if (mode == AnalysisMode::Single && spec_.parser == OutputDialect::Throughput)
      return Failure{Failure::Kind::Unsupported, "throughput dialect has no single-iteration count"};
    int iters = mode == AnalysisMode::Loop ? spec_.iterations : 1;
    auto run = invoke(block, iters);
    if (auto* f = std::get_if<Failure>(&run)) return *f;
    const std::string& out = std::get<std::string>(run);
    if (spec_.parser == OutputDialect::Throughput) return parse_throughput_output(out);
    return parse_summary_output(out);
  }

  BackendResult estimate_pair(const BasicBlock& caller, const BasicBlock& callee) const override {
    BasicBlock both = concatenate(caller, callee);
    switch (spec_.parser) {
      case OutputDialect::Throughput:
        return Failure{Failure::Kind::Unsupported, "throughput dialect cannot price a block pair"};
      case OutputDialect::Summary: {
        auto a = estimate(both, AnalysisMode::Single);
        if (!succeeded(a)) return a;
        auto b = estimate(caller, AnalysisMode::Single);
        if (!succeeded(b)) return b;
        Rational d = std::get<Rational>(a) - std::get<Rational>(b);
        return d < 0 ? Rational(0) : d;
      }
      case OutputDialect::Timeline: {
        auto run = invoke(both, 1);
        if (auto* f = std::get_if<Failure>(&run)) return *f;
        const std::string& out = std::get<std::string>(run);
        auto retire = parse_timeline_retire(out);
        std::size_t n = both.instructions.size();
        if (!retire || retire->size() < n)
          return Failure{Failure::Kind::ParseFailure, "incomplete timeline: " + detail::excerpt(out)};
        std::int64_t d = (*retire)[n - 1] - (*retire)[caller.instructions.size() - 1];
        return make_rational(std::max<std::int64_t>(d, 0));
      }
    }
    return Failure{Failure::Kind::Unsupported, "unknown dialect"};
  }

 private:
  std::variant<std::string, Failure> invoke(const BasicBlock& block, int iterations) const {
    std::string command_probe = expand_template(spec_.invocation_template, "x", iterations);
    std::string program = command_probe.substr(0, command_probe.find_first_of(" \t"));
    if (!find_executable(program))
      return Failure{Failure::Kind::BackendMissing, "'" + program + "' not found"};

    TempDir dir(keep_);
    auto asm_path = dir.path() / "block.s";
    {
      std::ofstream f(asm_path);
      f << emit_assembly(block, spec_.dest_last);
    }
    auto res = run_command(expand_template(spec_.invocation_template, asm_path.string(), iterations),
                           spec_.timeout_s);
    if (res.timed_out)
      return Failure{Failure::Kind::BackendTimeout,
                     "no result within " + std::to_string(spec_.timeout_s) + " s"};
    if (res.exit_code == 127)
      return Failure{Failure::Kind::BackendMissing, detail::excerpt(res.output)};
    if (res.exit_code != 0)
      return Failure{Failure::Kind::NonZeroExit, "exit " + std::to_string(res.exit_code) + ": " +
                                                     detail::excerpt(res.output)};
    return res.output;
  }

  BackendSpec spec_;
  bool keep_;
};

// Convenience entry point that never throws for tool problems.
inline BackendResult run_backend(const BackendSpec& spec, const BasicBlock& block, AnalysisMode mode,
                                 bool keep_artifacts = false) {
  return ExternalBackend(spec, keep_artifacts).estimate(block, mode);
}

//===----------------------------------------------------------------------===//
// Edge annotation
//===----------------------------------------------------------------------===//

// Thread-safe memo of analysis requests. Concurrent callers asking for the
// same key wait for the first computation instead of repeating it.
class AnalysisCache {
 public:
  template <typename Compute>
  ThroughputEstimate get_or_compute(const std::string& key, Compute&& compute,
                                    bool* hit = nullptr) {
    std::shared_future<ThroughputEstimate> fut;
    std::promise<ThroughputEstimate> promise;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        fut = promise.get_future().share();
        entries_.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (hit) *hit = !owner;
    if (owner) {
      try {
        promise.set_value(compute());
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<ThroughputEstimate>> entries_;
};

struct EstimateOptions {
  std::size_t parallelism = std::max(1u, std::thread::hardware_concurrency());
  // Keep cpiter values already present in the profile.
  bool keep_existing = false;
  AnalysisCache* cache = nullptr;
  // Model used to count instructions that fell back to the default spec.
  const MachineModel* model = nullptr;
};

struct EstimationStats {
  std::size_t annotated_edges = 0;
  std::size_t unannotated_edges = 0;
  std::size_t requests = 0;
  std::size_t backend_failures = 0;
  std::size_t unknown_mnemonics = 0;
};

struct EstimationResult {
  WorkloadProfile profile;
  EstimationStats stats;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string block_key(const BasicBlock& b) {
  std::string k;
  for (const auto& ins : b.instructions) {
    k += ins.mnemonic;
    for (const auto& op : ins.operands) k += "\x1f" + op;
    k += '\n';
  }
  return k;
}

struct Request {
  std::string key;
  const BasicBlock* caller = nullptr;  // null for Loop-mode requests
  const BasicBlock* callee = nullptr;
};

}  // namespace detail

// A block loops when it has a positive-count self-edge.
inline std::set<BlockId> looping_blocks(const ThreadCfg& cfg) {
  std::set<BlockId> out;
  for (const auto& e : cfg.edges)
    if (e.src == e.dst && e.calls > 0) out.insert(e.src);
  return out;
}

inline EstimationResult estimate_all_blocks(const WorkloadProfile& profile,
                                            std::span<const Backend* const> backends,
                                            const EstimateOptions& opts = {}) {
  if (backends.empty()) throw std::invalid_argument("at least one backend is required");
  EstimationResult result{profile, {}, {}};
  AnalysisCache local_cache;
  AnalysisCache& cache = opts.cache ? *opts.cache : local_cache;

  std::vector<detail::Request> requests;
  std::map<std::string, std::size_t> index;
  struct Slot {
    CfgEdge* edge;
    std::size_t request;
  };
  std::vector<Slot> slots;

  for (auto& [rid, threads] : result.profile.ranks) {
    for (auto& [tid, cfg] : threads) {
      auto loops = looping_blocks(cfg);
      for (auto& e : cfg.edges) {
        if (e.calls == 0) continue;
        if (opts.keep_existing && e.cpiter) continue;
        auto src = cfg.blocks.find(e.src);
        auto dst = cfg.blocks.find(e.dst);
        if (src == cfg.blocks.end() || dst == cfg.blocks.end()) continue;
        detail::Request req;
        req.callee = &dst->second;
        if (e.src == e.dst || loops.count(e.dst)) {
          req.key = "L\n" + detail::block_key(dst->second);
        } else {
          req.caller = &src->second;
          req.key = "P\n" + detail::block_key(src->second) + "\x1e\n" +
                    detail::block_key(dst->second);
        }
        auto [it, inserted] = index.try_emplace(req.key, requests.size());
        if (inserted) requests.push_back(std::move(req));
        slots.push_back({&e, it->second});
      }
      if (opts.model)
        for (const auto& [id, b] : cfg.blocks)
          result.stats.unknown_mnemonics += count_unknown_mnemonics(b, *opts.model);
    }
  }
  result.stats.requests = requests.size();

  std::vector<ThroughputEstimate> estimates(requests.size());
  auto compute = [&](const detail::Request& req) {
    std::map<std::string, BackendResult> per;
    for (const Backend* b : backends) {
      try {
        per.emplace(b->name(), req.caller ? b->estimate_pair(*req.caller, *req.callee)
                                          : b->estimate(*req.callee, AnalysisMode::Loop));
      } catch (const std::exception& ex) {
        per.emplace(b->name(), Failure{Failure::Kind::ParseFailure, ex.what()});
      }
    }
    return combine_results(req.callee->id, std::move(per));
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++)
      estimates[i] = cache.get_or_compute(requests[i].key, [&] { return compute(requests[i]); });
  };
  std::size_t workers = std::clamp<std::size_t>(opts.parallelism, 1, std::max<std::size_t>(1, requests.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < requests.size(); ++i) {
    for (const auto& [name, r] : estimates[i].per_backend) {
      if (const auto* f = std::get_if<Failure>(&r)) {
        ++result.stats.backend_failures;
        result.warnings.push_back("backend " + name + " failed on block " +
                                  std::to_string(estimates[i].block_id) + ": " + f->kind_name() +
                                  " (" + f->reason + ")");
      }
    }
  }
  for (const auto& s : slots) {
    const auto& est = estimates[s.request];
    if (est.median_cpiter) {
      s.edge->cpiter = *est.median_cpiter;
      ++result.stats.annotated_edges;
    } else {
      s.edge->cpiter.reset();
      ++result.stats.unannotated_edges;
      result.warnings.push_back("edge " + std::to_string(s.edge->src) + "->" +
                                std::to_string(s.edge->dst) + " left unannotated: all backends failed");
    }
  }
  return result;
}

// Built-in analyzer plus one adapter per external spec.
inline EstimationResult estimate_all_blocks(const WorkloadProfile& profile,
                                            const std::vector<BackendSpec>& specs,
                                            const MachineModel& model, EstimateOptions opts = {},
                                            bool keep_artifacts = false) {
  BuiltinBackend builtin(model);
  std::vector<std::unique_ptr<ExternalBackend>> external;
  std::vector<const Backend*> all{&builtin};
  for (const auto& s : specs) {
    external.push_back(std::make_unique<ExternalBackend>(s, keep_artifacts));
    all.push_back(external.back().get());
  }
  if (!opts.model) opts.model = &model;
  return estimate_all_blocks(profile, all, opts);
}

}  // namespace locus
