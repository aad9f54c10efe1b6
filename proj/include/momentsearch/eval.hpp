#pragma once

// Synthetic benchmark over a generated corpus and its ground truth.
//
// Tasks, one query per planted target (or sequence):
//   visual    the target caption, auto mode, rerank on and off
//   ocr       caption plus the quoted on-screen string, auto mode
//   asr       "the narrator says <phrase>", auto mode
//   sequence  "e1 -> e2 -> e3" through temporal search
//
// A hit at rank r counts toward recall@k for every k >= r.

#include <algorithm>
#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentsearch/engine.hpp"
#include "momentsearch/generator.hpp"

namespace momentsearch {

struct RecallStats {
  std::size_t queries = 0;
  std::size_t hits_at_1 = 0;
  std::size_t hits_at_10 = 0;
  std::size_t hits_at_100 = 0;
  double total_ms = 0.0;

  void add(std::optional<std::size_t> rank, double ms) {
    ++queries;
    total_ms += ms;
    if (rank) {
      hits_at_1 += *rank <= 1;
      hits_at_10 += *rank <= 10;
      hits_at_100 += *rank <= 100;
    }
  }
  double rate(std::size_t hits) const { return queries ? static_cast<double>(hits) / queries : 0.0; }
  double recall_at_1() const { return rate(hits_at_1); }
  double recall_at_10() const { return rate(hits_at_10); }
  double recall_at_100() const { return rate(hits_at_100); }
  double mean_ms() const { return queries ? total_ms / queries : 0.0; }
};

struct EvalReport {
  std::uint64_t seed = 0;
  std::size_t videos = 0;
  std::size_t keyframes = 0;
  RecallStats visual_rerank;
  RecallStats visual_no_rerank;
  RecallStats ocr;
  RecallStats asr;
  RecallStats sequence;
  std::size_t degraded_responses = 0;
  double total_ms = 0.0;
};

namespace eval_detail {

inline std::optional<std::size_t> rank_of(const SearchResponse& r, const std::string& id) {
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    if (r.results[i].keyframe.keyframe_id == id) {
      return i + 1;
    }
  }
  return std::nullopt;
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace eval_detail

/// Runs every task against `engine`, which must hold the corpus `truth` describes.
inline EvalReport run_eval(const Engine& engine, const GroundTruth& truth) {
  using namespace eval_detail;
  EvalReport rep;
  const auto t_all = std::chrono::steady_clock::now();
  auto snap = engine.snapshot();
  if (!snap) {
    throw EngineError(EngineError::Kind::NoCorpus, "no corpus loaded");
  }
  rep.seed = truth.seed;
  rep.videos = snap->store->videos().size();
  rep.keyframes = snap->store->keyframes().size();

  auto single = [&](const std::string& query, const std::string& expected, bool rerank, RecallStats& stats) {
    SearchRequest req;
    req.query = query;
    req.top_k = 100;
    req.rerank = rerank;
    const auto t0 = std::chrono::steady_clock::now();
    const auto resp = engine.search(req);
    stats.add(rank_of(resp, expected), ms_since(t0));
    rep.degraded_responses += resp.degraded;
  };

  for (const auto& t : truth.targets) {
    single(t.visual_query, t.keyframe_id, true, rep.visual_rerank);
    single(t.visual_query, t.keyframe_id, false, rep.visual_no_rerank);
    single(t.ocr_query, t.keyframe_id, true, rep.ocr);
    single(t.asr_query, t.keyframe_id, true, rep.asr);
  }

  for (const auto& seq : truth.sequences) {
    TemporalRequest req;
    req.query = seq.query;
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<std::size_t> rank;
    try {
      const auto resp = engine.temporal(req);
      rep.degraded_responses += resp.degraded;
      for (std::size_t i = 0; i < resp.sequences.size() && !rank; ++i) {
        const auto& events = resp.sequences[i].events;
        bool same = events.size() == seq.keyframe_ids.size();
        for (std::size_t e = 0; same && e < events.size(); ++e) {
          same = events[e].candidate.keyframe_id == seq.keyframe_ids[e];
        }
        if (same) {
          rank = i + 1;
        }
      }
    } catch (const EngineError& e) {
      if (e.kind() != EngineError::Kind::NotFound) {
        throw;
      }
    }
    rep.sequence.add(rank, ms_since(t0));
  }
  rep.total_ms = ms_since(t_all);
  return rep;
}

inline nlohmann::ordered_json to_json(const RecallStats& s) {
  return {{"queries", s.queries},
          {"recall@1", s.recall_at_1()},
          {"recall@10", s.recall_at_10()},
          {"recall@100", s.recall_at_100()},
          {"mean_ms", s.mean_ms()}};
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["corpus"] = {{"videos", r.videos}, {"keyframes", r.keyframes}};
  j["recall@10"] = r.visual_rerank.recall_at_10();
  j["tasks"] = {{"visual_rerank", to_json(r.visual_rerank)},
                {"visual_no_rerank", to_json(r.visual_no_rerank)},
                {"ocr", to_json(r.ocr)},
                {"asr", to_json(r.asr)},
                {"sequence", to_json(r.sequence)}};
  j["ocr_rank1_rate"] = r.ocr.recall_at_1();
  j["asr_rank1_rate"] = r.asr.recall_at_1();
  j["sequence_rank1_accuracy"] = r.sequence.recall_at_1();
  j["degraded_responses"] = r.degraded_responses;
  j["timings_ms"] = {{"total", r.total_ms},
                     {"visual_mean", r.visual_rerank.mean_ms()},
                     {"ocr_mean", r.ocr.mean_ms()},
                     {"asr_mean", r.asr.mean_ms()},
                     {"sequence_mean", r.sequence.mean_ms()}};
  return j;
}

}  // namespace momentsearch
