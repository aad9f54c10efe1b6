#pragma once

// Planner backed by an external LLM service.
//
// Request:  {"query": str, "n_expansions": int, "schema_version": "1"}
// Response: {"expansions": [str], "sub_queries": {"vis"?, "ocr"?, "asr"?},
//            "weights": {"vis", "ocr", "asr"}, "events"?: [str], "rationale": str}
//
// Replies are validated, never trusted: weights are clamped to [0, 1],
// expansions padded (with rule-based variants) or truncated to N, and at
// least one non-empty sub-query is required.

#include <string>

#include "momentsearch/http_client.hpp"
#include "momentsearch/planner.hpp"

namespace momentsearch {

struct PlanOutcome {
  QueryPlan plan;
  bool degraded = false;  // the LLM failed and the rule-based plan was used
  std::string error;
};

/// Turns an LLM reply into a valid plan or throws SchemaViolation.
inline QueryPlan validate_llm_plan(const nlohmann::json& j, const std::string& query, const PlannerConfig& cfg) {
  using K = PlannerError::Kind;
  if (!j.is_object()) {
    throw PlannerError(K::SchemaViolation, "LLM plan is not an object");
  }
  const std::size_t n = std::max<std::size_t>(cfg.n_expansions, 1);
  QueryPlan plan;
  plan.original = query;

  if (j.contains("sub_queries")) {
    const auto& sq = j.at("sub_queries");
    if (!sq.is_object()) {
      throw PlannerError(K::SchemaViolation, "sub_queries must be an object");
    }
    for (Modality m : kModalities) {
      const std::string key(to_string(m));
      if (sq.contains(key) && !sq.at(key).is_null()) {
        if (!sq.at(key).is_string()) {
          throw PlannerError(K::SchemaViolation, "sub_queries." + key + " must be a string");
        }
        auto v = sq.at(key).get<std::string>();
        if (planner_detail::has_word_chars(v)) {
          plan.sub_queries[index_of(m)] = std::move(v);
        }
      }
    }
  }
  if (std::none_of(plan.sub_queries.begin(), plan.sub_queries.end(), [](const auto& s) { return s.has_value(); })) {
    throw PlannerError(K::SchemaViolation, "LLM plan has no sub-query");
  }

  if (!j.contains("weights") || !j.at("weights").is_object()) {
    throw PlannerError(K::SchemaViolation, "weights object missing");
  }
  for (Modality m : kModalities) {
    const std::string key(to_string(m));
    const auto& w = j.at("weights");
    double v = 0.0;
    if (w.contains(key) && !w.at(key).is_null()) {
      if (!w.at(key).is_number()) {
        throw PlannerError(K::SchemaViolation, "weights." + key + " must be a number");
      }
      v = w.at(key).get<double>();
    }
    plan.weights[m] = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  }

  if (j.contains("expansions")) {
    if (!j.at("expansions").is_array()) {
      throw PlannerError(K::SchemaViolation, "expansions must be an array");
    }
    for (const auto& e : j.at("expansions")) {
      if (!e.is_string()) {
        throw PlannerError(K::SchemaViolation, "expansions must hold strings");
      }
      plan.expansions.push_back(e.get<std::string>());
    }
  }
  if (plan.expansions.empty()) {
    plan.expansions.push_back(query);
  }
  if (plan.expansions.size() > n) {
    plan.expansions.resize(n);
  } else if (plan.expansions.size() < n) {
    const std::string base = plan.sub_queries[index_of(Modality::Visual)].value_or(query);
    const auto pad = rule_expansions(query, base, n);
    for (std::size_t i = plan.expansions.size(); i < n; ++i) {
      plan.expansions.push_back(pad[i]);
    }
  }

  if (j.contains("events") && !j.at("events").is_null()) {
    if (!j.at("events").is_array()) {
      throw PlannerError(K::SchemaViolation, "events must be an array");
    }
    std::vector<std::string> events;
    for (const auto& e : j.at("events")) {
      if (!e.is_string() || !planner_detail::has_word_chars(e.get<std::string>())) {
        throw PlannerError(K::SchemaViolation, "events must be non-empty strings");
      }
      events.push_back(e.get<std::string>());
    }
    plan.events = std::move(events);
  }
  if (j.contains("rationale") && j.at("rationale").is_string()) {
    plan.rationale = j.at("rationale").get<std::string>();
  }
  plan.weights.rationale = plan.rationale;
  return plan;
}

/// Plans through the LLM endpoint, falling back per `cfg.fallback`.
inline PlanOutcome plan_llm(const std::string& query, const PlannerConfig& cfg) {
  if (!planner_detail::has_word_chars(query)) {
    throw PlannerError(PlannerError::Kind::EmptyQuery, "query is empty");
  }
  std::string error;
  PlannerError::Kind kind = PlannerError::Kind::LlmUnavailable;
  if (!cfg.llm_endpoint) {
    error = "no LLM endpoint configured";
  } else {
    try {
      const nlohmann::json req{{"query", query},
                               {"n_expansions", std::max<std::size_t>(cfg.n_expansions, 1)},
                               {"schema_version", "1"}};
      const auto res = http::post_json(*cfg.llm_endpoint, req, cfg.llm_timeout_s);
      return {validate_llm_plan(res, query, cfg), false, {}};
    } catch (const http::RequestError& e) {
      error = e.what();
      kind = e.kind() == http::RequestError::Kind::BadBody ? PlannerError::Kind::SchemaViolation
                                                            : PlannerError::Kind::LlmUnavailable;
    } catch (const PlannerError& e) {
      error = e.what();
      kind = e.kind();
    } catch (const std::exception& e) {
      error = e.what();
      kind = PlannerError::Kind::SchemaViolation;
    }
  }
  if (cfg.fallback == PlannerFallback::Fail) {
    throw PlannerError(kind, "LLM planner: " + error);
  }
  return {plan_rule_based(query, cfg), true, "LLM planner: " + error};
}

}  // namespace momentsearch
