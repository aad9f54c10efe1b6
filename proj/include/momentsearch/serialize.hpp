#pragma once

// JSON bodies for the HTTP API and the CLI's --json output. Every score is
// rounded to 6 decimals here and nowhere else.

#include <cmath>
#include <string>

#include <json.hpp>

#include "momentsearch/engine.hpp"

namespace momentsearch::serialize {

using nlohmann::json;

inline double round6(double v) {
  if (!std::isfinite(v)) {
    return 0.0;
  }
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json opt_score(const std::optional<double>& v) { return v ? json(round6(*v)) : json(nullptr); }

inline json to_json(const Keyframe& kf) {
  return {{"keyframe_id", kf.keyframe_id}, {"shot_id", kf.shot_id},   {"video_id", kf.video_id},
          {"timestamp_s", round6(kf.timestamp_s)}, {"caption", opt(kf.caption)}, {"image_uri", opt(kf.image_uri)}};
}

inline json to_json(const StrategyBreakdown& b) {
  return {{"exact_phrase", round6(b.exact_phrase)},
          {"full_term", round6(b.full_term)},
          {"partial", round6(b.partial)},
          {"fuzzy", round6(b.fuzzy)}};
}

inline json to_json(const FusionWeights& w) {
  return {{"vis", round6(w.vis)}, {"ocr", round6(w.ocr)}, {"asr", round6(w.asr)}};
}

inline json to_json(const QueryPlan& p) {
  json sub = json::object();
  for (Modality m : kModalities) {
    sub[std::string(to_string(m))] = opt(p.sub_query(m));
  }
  return {{"original", p.original}, {"expansions", p.expansions}, {"sub_queries", sub},
          {"weights", to_json(p.weights)}, {"events", opt(p.events)}, {"rationale", p.rationale}};
}

inline json timings(const std::map<std::string, double>& t) {
  json out = json::object();
  for (const auto& [k, v] : t) {
    out[k] = round6(v);
  }
  return out;
}

inline json to_json(const ResultRow& r) {
  json raw = json::object();
  json norm = json::object();
  for (Modality m : kModalities) {
    const std::string key(to_string(m));
    raw[key] = opt_score(r.candidate.raw[index_of(m)]);
    norm[key] = round6(r.candidate.normalized[index_of(m)]);
  }
  return {{"keyframe_id", r.candidate.keyframe_id},
          {"fused", round6(r.candidate.fused)},
          {"raw", raw},
          {"normalized", norm},
          {"keyframe", to_json(r.keyframe)},
          {"visual",
           {{"cos_sem_a", opt_score(r.visual.cosine[0])},
            {"cos_sem_b", opt_score(r.visual.cosine[1])},
            {"srrf", opt_score(r.visual.srrf)},
            {"cross", opt_score(r.visual.cross_score)}}},
          {"ocr", r.ocr ? to_json(*r.ocr) : json(nullptr)},
          {"asr", r.asr ? to_json(*r.asr) : json(nullptr)}};
}

inline json to_json(const SearchResponse& r) {
  json results = json::array();
  for (const auto& row : r.results) {
    results.push_back(to_json(row));
  }
  return {{"results", results},
          {"plan", to_json(r.plan)},
          {"degraded", r.degraded},
          {"warnings", r.warnings},
          {"timings_ms", timings(r.timings_ms)}};
}

inline json to_json(const FinalSequence& s) {
  json events = json::array();
  for (const auto& e : s.events) {
    events.push_back({{"keyframe_id", e.candidate.keyframe_id},
                      {"video_id", e.candidate.video_id},
                      {"t", round6(e.candidate.t)},
                      {"s", round6(e.candidate.s)},
                      {"lambda", round6(e.lambda)},
                      {"b", round6(e.b)},
                      {"final_score", round6(e.final_score)}});
  }
  return {{"video_id", s.video_id},
          {"events", events},
          {"cumulative", round6(s.cumulative)},
          {"total_final", round6(s.total_final)},
          {"duration_s", round6(s.duration_s)}};
}

inline json to_json(const TemporalConfig& c) {
  return {{"alpha", c.alpha},
          {"beam_width", c.beam_width},
          {"per_event_top_m", c.per_event_top_m},
          {"max_sequences", c.max_sequences}};
}

inline json to_json(const TemporalResponse& r) {
  json seqs = json::array();
  for (const auto& s : r.sequences) {
    seqs.push_back(to_json(s));
  }
  json plans = json::array();
  for (const auto& p : r.event_plans) {
    plans.push_back(to_json(p));
  }
  return {{"sequences", seqs},       {"plan", to_json(r.plan)},  {"event_plans", plans},
          {"config", to_json(r.config)}, {"degraded", r.degraded}, {"warnings", r.warnings},
          {"timings_ms", timings(r.timings_ms)}};
}

/// Parses a SearchRequest body; throws EngineError(InvalidRequest).
inline SearchRequest search_request(const json& j) {
  auto bad = [](const std::string& msg) { return EngineError(EngineError::Kind::InvalidRequest, msg); };
  if (!j.is_object()) {
    throw bad("request body must be a JSON object");
  }
  SearchRequest req;
  try {
    if (!j.contains("query") || !j.at("query").is_string()) {
      throw bad("query must be a string");
    }
    req.query = j.at("query").get<std::string>();
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "auto") {
        req.mode = SearchMode::Auto;
      } else if (mode == "manual") {
        req.mode = SearchMode::Manual;
      } else {
        throw bad("mode must be auto or manual");
      }
    }
    if (j.contains("manual_weights") && !j.at("manual_weights").is_null()) {
      const auto& w = j.at("manual_weights");
      FusionWeights fw;
      fw.vis = w.value("vis", 0.0);
      fw.ocr = w.value("ocr", 0.0);
      fw.asr = w.value("asr", 0.0);
      req.manual_weights = fw;
    }
    if (j.contains("top_k")) {
      const auto& k = j.at("top_k");
      if (!k.is_number_integer() || k.get<long long>() < 1) {
        throw bad("top_k must be an integer >= 1");
      }
      req.top_k = k.get<std::size_t>();
    }
    if (j.contains("rerank")) {
      req.rerank = j.at("rerank").get<bool>();
    }
  } catch (const json::exception& e) {
    throw bad(e.what());
  }
  if (req.mode == SearchMode::Manual && !req.manual_weights) {
    throw bad("manual mode requires manual_weights");
  }
  return req;
}

inline TemporalRequest temporal_request(const json& j) {
  auto bad = [](const std::string& msg) { return EngineError(EngineError::Kind::InvalidRequest, msg); };
  if (!j.is_object()) {
    throw bad("request body must be a JSON object");
  }
  TemporalRequest req;
  try {
    if (j.contains("query") && !j.at("query").is_null()) {
      req.query = j.at("query").get<std::string>();
    }
    if (j.contains("events") && !j.at("events").is_null()) {
      req.events = j.at("events").get<std::vector<std::string>>();
    }
    const json cfg = j.contains("config") ? j.at("config") : j;
    auto count = [&](const char* key, std::optional<std::size_t>& dst) {
      if (cfg.contains(key) && !cfg.at(key).is_null()) {
        if (!cfg.at(key).is_number_integer() || cfg.at(key).get<long long>() < 1) {
          throw bad(std::string(key) + " must be an integer >= 1");
        }
        dst = cfg.at(key).get<std::size_t>();
      }
    };
    if (cfg.contains("alpha") && !cfg.at("alpha").is_null()) {
      req.alpha = cfg.at("alpha").get<double>();
    }
    count("beam_width", req.beam_width);
    count("per_event_top_m", req.per_event_top_m);
    count("max_sequences", req.max_sequences);
    if (j.contains("rerank")) {
      req.rerank = j.at("rerank").get<bool>();
    }
  } catch (const json::exception& e) {
    throw bad(e.what());
  }
  if (!req.query && !req.events) {
    throw bad("temporal request needs query or events");
  }
  return req;
}

inline json error_body(std::string_view kind, std::string_view message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace momentsearch::serialize
