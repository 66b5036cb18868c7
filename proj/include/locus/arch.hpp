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

// Closed-form models for a 3D-stacked SRAM last-level cache and for the
// power of a many-core chip extrapolated across process nodes.
//
//   capacity   = dies * channels * per-channel capacity
//   bandwidth  = channels * f_clk * channel width      (per die's channel count)
//   tags       = capacity / line size * tag bytes per line
//
//   CMG power  = cores * W/core + W/MIF, then multiplied by each node step
//   cache      = capacity / 4 MiB * static W per 4 MiB * CMGs, / static share
//   TDP        = CMGs * scaled CMG power + cache total
//
// All arithmetic is exact; rounding only happens when values are displayed.

#pragma once

#include "locus/rational.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace locus::arch {

inline constexpr std::uint64_t KiB = 1024;
inline constexpr std::uint64_t MiB = 1024 * KiB;
inline constexpr std::uint64_t GiB = 1024 * MiB;

class ArchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndivisibleCapacity : public ArchError {
 public:
  IndivisibleCapacity(std::uint64_t capacity, std::uint64_t line)
      : ArchError("capacity " + std::to_string(capacity) + " B is not a multiple of the " +
                  std::to_string(line) + " B line") {}
};

struct StackedCacheSpec {
  std::uint64_t n_dies = 1;
  std::uint64_t n_ch = 1;
  std::uint64_t n_cap_bytes = 1;
  std::uint64_t width_bytes = 1;
  Rational f_clk_hz = 1;
  std::uint64_t tag_bytes_per_line = 6;
  std::uint64_t line_bytes = 256;
};

inline void validate(const StackedCacheSpec& s) {
  if (!s.n_dies || !s.n_ch || !s.n_cap_bytes || !s.width_bytes || !s.tag_bytes_per_line ||
      !s.line_bytes)
    throw ArchError("cache parameters must be positive");
  if (s.f_clk_hz <= 0) throw ArchError("f_clk must be positive");
  if ((s.line_bytes & (s.line_bytes - 1)) != 0) throw ArchError("line size must be a power of two");
}

inline std::uint64_t cache_capacity(const StackedCacheSpec& s) {
  validate(s);
  return s.n_dies * s.n_ch * s.n_cap_bytes;
}

// Bytes per second.
inline Rational cache_bandwidth(const StackedCacheSpec& s) {
  validate(s);
  return Rational(BigInt(s.n_ch)) * s.f_clk_hz * Rational(BigInt(s.width_bytes));
}

inline std::uint64_t tag_array_bytes(const StackedCacheSpec& s) {
  std::uint64_t cap = cache_capacity(s);
  if (cap % s.line_bytes != 0) throw IndivisibleCapacity(cap, s.line_bytes);
  return cap / s.line_bytes * s.tag_bytes_per_line;
}

struct NodeScaling {
  std::string from_node;
  std::string to_node;
  Rational multiplier;
};

struct PowerChain {
  std::string base_node = "7nm";
  Rational w_per_core;
  Rational w_per_mif;
  std::uint64_t cores_per_cmg = 0;
  std::uint64_t cmg_count = 1;
  std::vector<NodeScaling> node_scalings;
  Rational sram_static_w_per_4mib;
  Rational static_fraction = 1;
};

inline void validate(const PowerChain& c) {
  if (c.w_per_core < 0 || c.w_per_mif < 0 || c.sram_static_w_per_4mib < 0)
    throw ArchError("power figures must be non-negative");
  for (const auto& n : c.node_scalings)
    if (n.multiplier <= 0 || n.multiplier > 1)
      throw ArchError("node multiplier " + n.from_node + "->" + n.to_node + " must be in (0, 1]");
  if (c.static_fraction <= 0 || c.static_fraction > 1)
    throw ArchError("static_fraction must be in (0, 1]");
}

inline Rational cmg_core_power(const PowerChain& c) {
  return Rational(BigInt(c.cores_per_cmg)) * c.w_per_core + c.w_per_mif;
}

// Power after each node step, preceded by the unscaled input.
inline std::vector<std::pair<std::string, Rational>> apply_node_scaling(const Rational& power_w,
                                                                        const PowerChain& c) {
  if (power_w <= 0) throw ArchError("power must be positive");
  std::vector<std::pair<std::string, Rational>> out{{c.base_node, power_w}};
  Rational p = power_w;
  for (const auto& n : c.node_scalings) {
    p *= n.multiplier;
    out.emplace_back(n.to_node, p);
  }
  return out;
}

struct PowerSummary {
  std::vector<std::pair<std::string, Rational>> cmg_power_by_node;
  Rational cmg_w;             // last node
  Rational core_w;            // all CMGs, without the stacked cache
  Rational cache_static_per_cmg_w;
  Rational cache_static_w;
  Rational cache_total_w;
  Rational tdp_w;

  Rational power_density(const Rational& area_mm2) const {
    if (area_mm2 <= 0) throw ArchError("area must be positive");
    return tdp_w / area_mm2;
  }
};

// Without a cache spec the stacked-cache terms are zero.
inline PowerSummary chip_power_summary(const PowerChain& c,
                                       const std::optional<StackedCacheSpec>& cache) {
  validate(c);
  PowerSummary s;
  Rational cmg = cmg_core_power(c);
  s.cmg_power_by_node = cmg > 0 ? apply_node_scaling(cmg, c)
                                : std::vector<std::pair<std::string, Rational>>{{c.base_node, 0}};
  s.cmg_w = s.cmg_power_by_node.back().second;
  s.core_w = Rational(BigInt(c.cmg_count)) * s.cmg_w;
  if (cache) {
    Rational units = Rational(BigInt(cache_capacity(*cache)), BigInt(4 * MiB));
    s.cache_static_per_cmg_w = units * c.sram_static_w_per_4mib;
  }
  s.cache_static_w = s.cache_static_per_cmg_w * Rational(BigInt(c.cmg_count));
  s.cache_total_w = s.cache_static_w / c.static_fraction;
  s.tdp_w = s.core_w + s.cache_total_w;
  return s;
}

//===----------------------------------------------------------------------===//
// Presets
//===----------------------------------------------------------------------===//

struct Preset {
  std::string name;
  std::string description;
  std::optional<StackedCacheSpec> cache;
  std::optional<PowerChain> power;
  std::vector<Rational> areas_mm2;  // areas for power-density reporting
};

struct PresetLibrary {
  std::map<std::string, Preset> presets;
  std::map<std::string, std::string> aliases;
  // Descriptive simulator configurations, shown verbatim.
  nlohmann::json configs = nlohmann::json::object();

  const Preset* find(const std::string& name) const {
    std::string key = name;
    if (auto a = aliases.find(name); a != aliases.end()) key = a->second;
    auto it = presets.find(key);
    return it == presets.end() ? nullptr : &it->second;
  }
};

namespace detail {

inline Rational num(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string()) return parse_decimal(v.get<std::string>());
  if (!v.is_number()) throw ArchError(std::string("'") + key + "' must be a number");
  return parse_decimal(v.dump());
}

inline std::uint64_t count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ArchError(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace detail

inline StackedCacheSpec cache_from_json(const nlohmann::json& j) {
  StackedCacheSpec s;
  s.n_dies = detail::count(j, "dies");
  s.n_ch = detail::count(j, "channels");
  s.n_cap_bytes = detail::count(j, "channel_capacity_bytes");
  s.width_bytes = detail::count(j, "width_bytes");
  s.f_clk_hz = detail::num(j, "f_clk_hz");
  s.tag_bytes_per_line = detail::count(j, "tag_bytes_per_line");
  s.line_bytes = detail::count(j, "line_bytes");
  validate(s);
  return s;
}

inline PowerChain power_from_json(const nlohmann::json& j) {
  PowerChain c;
  c.base_node = j.value("base_node", std::string("7nm"));
  c.w_per_core = detail::num(j, "w_per_core");
  c.w_per_mif = detail::num(j, "w_per_mif");
  c.cores_per_cmg = detail::count(j, "cores_per_cmg");
  c.cmg_count = detail::count(j, "cmg_count");
  if (j.contains("node_scalings"))
    for (const auto& n : j.at("node_scalings"))
      c.node_scalings.push_back(
          {n.at("from").get<std::string>(), n.at("to").get<std::string>(), detail::num(n, "multiplier")});
  c.sram_static_w_per_4mib = detail::num(j, "sram_static_w_per_4mib");
  c.static_fraction = detail::num(j, "static_fraction");
  validate(c);
  return c;
}

inline PresetLibrary presets_from_json(const nlohmann::json& j) {
  PresetLibrary lib;
  try {
    for (auto it = j.at("presets").begin(); it != j.at("presets").end(); ++it) {
      Preset p;
      p.name = it.key();
      p.description = it->value("description", std::string());
      if (it->contains("cache")) p.cache = cache_from_json(it->at("cache"));
      if (it->contains("power")) p.power = power_from_json(it->at("power"));
      if (it->contains("areas_mm2"))
        for (const auto& a : it->at("areas_mm2")) p.areas_mm2.push_back(parse_decimal(a.dump()));
      lib.presets.emplace(p.name, std::move(p));
    }
    if (j.contains("aliases"))
      for (auto it = j["aliases"].begin(); it != j["aliases"].end(); ++it) {
        std::string target = it->get<std::string>();
        if (!lib.presets.count(target))
          throw ArchError("alias '" + it.key() + "' points to unknown preset '" + target + "'");
        lib.aliases[it.key()] = target;
      }
    if (j.contains("configs")) lib.configs = j["configs"];
  } catch (const nlohmann::json::exception& e) {
    throw ArchError(std::string("preset file: ") + e.what());
  }
  return lib;
}

inline PresetLibrary load_presets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArchError("cannot open preset file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ArchError("preset file '" + path + "': " + e.what());
  }
  return presets_from_json(j);
}

// "384MiB", "1KiB", "4096", "2GiB" -> bytes.
inline std::uint64_t parse_size(const std::string& text) {
  static const std::pair<const char*, std::uint64_t> kUnits[] = {
      {"KiB", KiB}, {"MiB", MiB}, {"GiB", GiB}, {"KB", 1000}, {"MB", 1000000},
      {"GB", 1000000000}, {"B", 1}};
  for (const auto& [suffix, scale] : kUnits) {
    std::string s(suffix);
    if (text.size() > s.size() && text.compare(text.size() - s.size(), s.size(), s) == 0) {
      Rational v = parse_decimal(text.substr(0, text.size() - s.size())) * Rational(BigInt(scale));
      if (denominator(v) != 1 || v <= 0) throw ArchError("bad size '" + text + "'");
      return numerator(v).convert_to<std::uint64_t>();
    }
  }
  Rational v = parse_decimal(text);
  if (denominator(v) != 1 || v <= 0) throw ArchError("bad size '" + text + "'");
  return numerator(v).convert_to<std::uint64_t>();
}

// "1GHz", "300MHz", "2.2e9" -> Hz.
inline Rational parse_frequency(const std::string& text) {
  static const std::pair<const char*, std::uint64_t> kUnits[] = {
      {"GHz", 1000000000}, {"MHz", 1000000}, {"kHz", 1000}, {"Hz", 1}};
  for (const auto& [suffix, scale] : kUnits) {
    std::string s(suffix);
    if (text.size() > s.size() && text.compare(text.size() - s.size(), s.size(), s) == 0)
      return parse_decimal(text.substr(0, text.size() - s.size())) * Rational(BigInt(scale));
  }
  return parse_decimal(text);
}

// Largest binary unit that divides the size exactly, else bytes.
inline std::string format_bytes(std::uint64_t bytes) {
  if (bytes >= GiB && bytes % GiB == 0) return std::to_string(bytes / GiB) + " GiB";
  if (bytes >= MiB && bytes % MiB == 0) return std::to_string(bytes / MiB) + " MiB";
  if (bytes >= KiB && bytes % KiB == 0) return std::to_string(bytes / KiB) + " KiB";
  return std::to_string(bytes) + " B";
}

}  // namespace locus::arch
