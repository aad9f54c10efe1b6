#pragma once

// Engine configuration: one JSON document shared by the CLI and the service.
// Keys mirror the per-module config structs; any subset may be given and is
// layered over the current values (defaults < file < command-line flags).
//
// {
//   "first_stage":   {"top_k_per_space": 100, "keep": 100, "k0": 60, "space_weights": [1, 1]},
//   "normalization": {"epsilon": 1e-6},
//   "cascade":       {"rerank_depth": 100, "blend": "replace",
//                     "scorer_endpoint": null, "scorer_timeout_s": 10},
//   "temporal":      {"alpha": 0.01, "beam_width": 8, "per_event_top_m": 20, "max_sequences": 5},
//   "planner":       {"n_expansions": 4, "llm_endpoint": null, "llm_timeout_s": 15,
//                     "fallback": "rule_based",
//                     "rules": {"ocr": 0.7, "asr": 0.6, "vis": 0.5, "vis_solo": 0.8}},
//   "text":          {"top_k": 100}
// }

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "momentsearch/fusion.hpp"
#include "momentsearch/planner.hpp"
#include "momentsearch/rerank.hpp"
#include "momentsearch/temporal.hpp"
#include "momentsearch/vector_index.hpp"

namespace momentsearch {

inline constexpr const char* kConfigEnvVar = "MOMENTSEARCH_CONFIG";

struct EngineConfig {
  FirstStageConfig first_stage;
  NormalizationConfig normalization;
  CascadeConfig cascade;
  std::optional<std::string> scorer_endpoint;
  double scorer_timeout_s = 10.0;
  TemporalConfig temporal;
  PlannerConfig planner;
  std::size_t text_top_k = 100;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace config_detail {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) {
    dst = j.at(key).get<T>();
  }
}

inline void take_opt(const nlohmann::json& j, const char* key, std::optional<std::string>& dst) {
  if (j.contains(key)) {
    if (j.at(key).is_null()) {
      dst.reset();
    } else {
      dst = j.at(key).get<std::string>();
    }
  }
}

inline nlohmann::json opt(const std::optional<std::string>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace config_detail

inline void validate(const EngineConfig& c) {
  auto req = [](bool ok, const char* what) {
    if (!ok) {
      throw ConfigError(std::string("invalid config: ") + what);
    }
  };
  req(c.first_stage.top_k_per_space >= 1, "first_stage.top_k_per_space >= 1");
  req(c.first_stage.keep >= 1 && c.first_stage.keep <= 2 * c.first_stage.top_k_per_space,
      "1 <= first_stage.keep <= 2 * top_k_per_space");
  req(c.first_stage.srrf.k0 > 0.0, "first_stage.k0 > 0");
  for (double w : c.first_stage.srrf.space_weights) {
    req(w >= 0.0 && w <= 1.0, "first_stage.space_weights in [0, 1]");
  }
  req(c.normalization.epsilon > 0.0, "normalization.epsilon > 0");
  req(c.cascade.rerank_depth >= 1, "cascade.rerank_depth >= 1");
  req(c.scorer_timeout_s > 0.0, "cascade.scorer_timeout_s > 0");
  req(c.temporal.alpha >= 0.0, "temporal.alpha >= 0");
  req(c.temporal.beam_width >= 1, "temporal.beam_width >= 1");
  req(c.temporal.per_event_top_m >= 1, "temporal.per_event_top_m >= 1");
  req(c.temporal.max_sequences >= 1, "temporal.max_sequences >= 1");
  req(c.planner.n_expansions >= 1, "planner.n_expansions >= 1");
  req(c.planner.llm_timeout_s > 0.0, "planner.llm_timeout_s > 0");
  const auto& r = c.planner.rules;
  for (double w : {r.ocr, r.asr, r.vis, r.vis_solo}) {
    req(w >= 0.0 && w <= 1.0, "planner.rules weights in [0, 1]");
  }
  req(c.text_top_k >= 1, "text.top_k >= 1");
}

/// Layers the keys present in `j` over `base` and validates the result.
inline EngineConfig merge_config(EngineConfig c, const nlohmann::json& j) {
  using namespace config_detail;
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  try {
    if (j.contains("first_stage")) {
      const auto& f = j.at("first_stage");
      take(f, "top_k_per_space", c.first_stage.top_k_per_space);
      take(f, "keep", c.first_stage.keep);
      take(f, "k0", c.first_stage.srrf.k0);
      take(f, "space_weights", c.first_stage.srrf.space_weights);
    }
    if (j.contains("normalization")) {
      take(j.at("normalization"), "epsilon", c.normalization.epsilon);
    }
    if (j.contains("cascade")) {
      const auto& f = j.at("cascade");
      take(f, "rerank_depth", c.cascade.rerank_depth);
      if (f.contains("blend")) {
        const auto b = f.at("blend").get<std::string>();
        if (b == "replace") {
          c.cascade.blend = BlendMode::Replace;
        } else if (b == "multiply") {
          c.cascade.blend = BlendMode::Multiply;
        } else {
          throw ConfigError("cascade.blend must be replace or multiply");
        }
      }
      take_opt(f, "scorer_endpoint", c.scorer_endpoint);
      take(f, "scorer_timeout_s", c.scorer_timeout_s);
    }
    if (j.contains("temporal")) {
      const auto& f = j.at("temporal");
      take(f, "alpha", c.temporal.alpha);
      take(f, "beam_width", c.temporal.beam_width);
      take(f, "per_event_top_m", c.temporal.per_event_top_m);
      take(f, "max_sequences", c.temporal.max_sequences);
    }
    if (j.contains("planner")) {
      const auto& f = j.at("planner");
      take(f, "n_expansions", c.planner.n_expansions);
      take_opt(f, "llm_endpoint", c.planner.llm_endpoint);
      take(f, "llm_timeout_s", c.planner.llm_timeout_s);
      if (f.contains("fallback")) {
        const auto b = f.at("fallback").get<std::string>();
        if (b == "rule_based") {
          c.planner.fallback = PlannerFallback::RuleBased;
        } else if (b == "fail") {
          c.planner.fallback = PlannerFallback::Fail;
        } else {
          throw ConfigError("planner.fallback must be rule_based or fail");
        }
      }
      if (f.contains("rules")) {
        const auto& r = f.at("rules");
        take(r, "ocr", c.planner.rules.ocr);
        take(r, "asr", c.planner.rules.asr);
        take(r, "vis", c.planner.rules.vis);
        take(r, "vis_solo", c.planner.rules.vis_solo);
      }
    }
    if (j.contains("text")) {
      take(j.at("text"), "top_k", c.text_top_k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  validate(c);
  return c;
}

inline nlohmann::json config_to_json(const EngineConfig& c) {
  using config_detail::opt;
  return {
      {"first_stage",
       {{"top_k_per_space", c.first_stage.top_k_per_space},
        {"keep", c.first_stage.keep},
        {"k0", c.first_stage.srrf.k0},
        {"space_weights", c.first_stage.srrf.space_weights}}},
      {"normalization", {{"epsilon", c.normalization.epsilon}}},
      {"cascade",
       {{"rerank_depth", c.cascade.rerank_depth},
        {"blend", c.cascade.blend == BlendMode::Replace ? "replace" : "multiply"},
        {"scorer_endpoint", opt(c.scorer_endpoint)},
        {"scorer_timeout_s", c.scorer_timeout_s}}},
      {"temporal",
       {{"alpha", c.temporal.alpha},
        {"beam_width", c.temporal.beam_width},
        {"per_event_top_m", c.temporal.per_event_top_m},
        {"max_sequences", c.temporal.max_sequences}}},
      {"planner",
       {{"n_expansions", c.planner.n_expansions},
        {"llm_endpoint", opt(c.planner.llm_endpoint)},
        {"llm_timeout_s", c.planner.llm_timeout_s},
        {"fallback", c.planner.fallback == PlannerFallback::RuleBased ? "rule_based" : "fail"},
        {"rules",
         {{"ocr", c.planner.rules.ocr},
          {"asr", c.planner.rules.asr},
          {"vis", c.planner.rules.vis},
          {"vis_solo", c.planner.rules.vis_solo}}}}},
      {"text", {{"top_k", c.text_top_k}}},
  };
}

inline EngineConfig load_config_file(const std::filesystem::path& path, EngineConfig base = {}) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return merge_config(std::move(base), j);
}

/// Defaults layered with the file named by an explicit path, or else by
/// the MOMENTSEARCH_CONFIG environment variable when set.
inline EngineConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) {
    return load_config_file(*explicit_path);
  }
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    return load_config_file(env);
  }
  return {};
}

}  // namespace momentsearch
