#pragma once

// The online pipeline over one loaded corpus:
//
//   plan -> {visual, ocr, asr} branches in parallel -> fuse
//
// The visual branch embeds the visual sub-query and its expansions, runs the
// dual-space first stage with SRRF, then the cross-scorer cascade; its final
// score is the visual input to fusion. A failing branch contributes an empty
// list and marks the response degraded instead of failing the request.
//
// Temporal search runs the same pipeline once per event and feeds the fused
// scores into beam search and gated finalization.

#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "momentsearch/config.hpp"
#include "momentsearch/corpus.hpp"
#include "momentsearch/embedder.hpp"
#include "momentsearch/fusion.hpp"
#include "momentsearch/llm_planner.hpp"
#include "momentsearch/planner.hpp"
#include "momentsearch/remote_scorer.hpp"
#include "momentsearch/rerank.hpp"
#include "momentsearch/temporal.hpp"
#include "momentsearch/text_index.hpp"
#include "momentsearch/vector_index.hpp"

namespace momentsearch {

class EngineError : public std::runtime_error {
 public:
  enum class Kind { NoCorpus, InvalidRequest, NotFound, Upstream };
  EngineError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

enum class SearchMode { Auto, Manual };

struct SearchRequest {
  std::string query;
  SearchMode mode = SearchMode::Auto;
  std::optional<FusionWeights> manual_weights{};
  std::size_t top_k = 20;
  bool rerank = true;
};

struct VisualDetail {
  std::array<std::optional<double>, 2> cosine{};
  std::optional<double> srrf;
  std::optional<double> cross_score;
};

struct ResultRow {
  ScoredCandidate candidate;
  Keyframe keyframe;
  VisualDetail visual;
  std::optional<StrategyBreakdown> ocr;
  std::optional<StrategyBreakdown> asr;
};

struct SearchResponse {
  std::vector<ResultRow> results;
  QueryPlan plan;
  bool degraded = false;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_ms;
};

struct TemporalRequest {
  std::optional<std::string> query;
  std::optional<std::vector<std::string>> events;
  std::optional<double> alpha;
  std::optional<std::size_t> beam_width;
  std::optional<std::size_t> per_event_top_m;
  std::optional<std::size_t> max_sequences;
  bool rerank = true;
};

struct TemporalResponse {
  std::vector<FinalSequence> sequences;
  QueryPlan plan;
  std::vector<QueryPlan> event_plans;
  TemporalConfig config;
  bool degraded = false;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_ms;
};

/// Immutable per-corpus state: the store plus every index built from it.
struct Snapshot {
  CorpusPtr store;
  VectorIndex vectors;
  TextIndex ocr;
  TextIndex asr;
  ReferenceEmbedder embedder;

  static std::shared_ptr<const Snapshot> build(CorpusPtr store) {
    auto s = std::make_shared<Snapshot>(Snapshot{
        store, VectorIndex::build(*store), TextIndex::build(*store, TextChannel::Ocr),
        TextIndex::build(*store, TextChannel::Asr),
        ReferenceEmbedder(store->dim(Space::SemA), store->dim(Space::SemB))});
    return s;
  }
};

namespace engine_detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct BranchResult {
  std::vector<IdScore> list;
  std::unordered_map<std::string, VisualDetail> visual;
  std::unordered_map<std::string, StrategyBreakdown> text;
  bool degraded = false;
  std::string warning;
  double ms = 0.0;
  double rerank_ms = 0.0;
};

}  // namespace engine_detail

class Engine {
 public:
  explicit Engine(EngineConfig cfg = {}) : cfg_(std::move(cfg)) {
    validate(cfg_);
    auto reference = std::make_shared<ReferenceScorer>();
    if (cfg_.scorer_endpoint) {
      scorer_ = std::make_shared<FallbackScorer>(
          std::make_shared<RemoteScorer>(RemoteScorerConfig{*cfg_.scorer_endpoint, cfg_.scorer_timeout_s}),
          reference);
    } else {
      scorer_ = reference;
    }
  }

  const EngineConfig& config() const { return cfg_; }

  /// Builds indexes for `store` and swaps them in; in-flight requests keep
  /// the snapshot they started with.
  void load(CorpusPtr store) {
    auto snap = Snapshot::build(std::move(store));
    std::lock_guard lock(mu_);
    snapshot_ = std::move(snap);
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_;
  }

  SearchResponse search(const SearchRequest& req) const {
    auto snap = require_snapshot();
    if (req.top_k == 0) {
      throw EngineError(EngineError::Kind::InvalidRequest, "top_k must be >= 1");
    }
    if (text::tokenize(req.query).empty()) {
      throw EngineError(EngineError::Kind::InvalidRequest, "query is empty");
    }
    SearchResponse resp;
    const auto t0 = engine_detail::Clock::now();
    if (req.mode == SearchMode::Manual) {
      if (!req.manual_weights || !req.manual_weights->valid()) {
        throw EngineError(EngineError::Kind::InvalidRequest, "manual mode requires weights in [0, 1]");
      }
      resp.plan = manual_plan(req.query, *req.manual_weights);
    } else {
      auto outcome = plan_query(req.query);
      resp.plan = std::move(outcome.plan);
      if (outcome.degraded) {
        resp.degraded = true;
        resp.warnings.push_back(outcome.error);
      }
    }
    resp.timings_ms["plan"] = engine_detail::ms_since(t0);
    run_pipeline(*snap, resp.plan, req.top_k, req.rerank, req.mode == SearchMode::Auto, resp);
    resp.timings_ms["total"] = engine_detail::ms_since(t0);
    return resp;
  }

  TemporalResponse temporal(const TemporalRequest& req) const {
    auto snap = require_snapshot();
    TemporalResponse resp;
    resp.config = cfg_.temporal;
    if (req.alpha) resp.config.alpha = *req.alpha;
    if (req.beam_width) resp.config.beam_width = *req.beam_width;
    if (req.per_event_top_m) resp.config.per_event_top_m = *req.per_event_top_m;
    if (req.max_sequences) resp.config.max_sequences = *req.max_sequences;
    if (resp.config.alpha < 0.0 || resp.config.beam_width == 0 || resp.config.per_event_top_m == 0 ||
        resp.config.max_sequences == 0) {
      throw EngineError(EngineError::Kind::InvalidRequest, "invalid temporal overrides");
    }
    const auto t0 = engine_detail::Clock::now();

    std::vector<std::string> events;
    std::string original;
    try {
      if (req.events && !req.events->empty()) {
        events = *req.events;
        original = text::join(events, " -> ");
      } else if (req.query) {
        events = split_events(*req.query);
        original = *req.query;
      } else {
        throw EngineError(EngineError::Kind::InvalidRequest, "temporal request needs query or events");
      }
      auto tp = plan_temporal(events, original, cfg_.planner, [&](const std::string& e) {
        auto outcome = plan_query(e);
        if (outcome.degraded) {
          resp.degraded = true;
          resp.warnings.push_back(outcome.error);
        }
        return outcome.plan;
      });
      resp.plan = std::move(tp.plan);
      resp.event_plans = std::move(tp.event_plans);
    } catch (const PlannerError& e) {
      const bool upstream = e.kind() == PlannerError::Kind::LlmUnavailable || e.kind() == PlannerError::Kind::SchemaViolation;
      throw EngineError(upstream ? EngineError::Kind::Upstream : EngineError::Kind::InvalidRequest, e.what());
    }
    resp.timings_ms["plan"] = engine_detail::ms_since(t0);

    std::vector<std::vector<EventCandidate>> per_event;
    for (const auto& ep : resp.event_plans) {
      SearchResponse sr;
      sr.plan = ep;
      run_pipeline(*snap, ep, resp.config.per_event_top_m, req.rerank, true, sr);
      if (sr.degraded) {
        resp.degraded = true;
        resp.warnings.insert(resp.warnings.end(), sr.warnings.begin(), sr.warnings.end());
      }
      // fused scores exceed 1 when the plan's weights sum past 1
      const double scale = std::max(1.0, ep.weights.sum());
      std::vector<EventCandidate> cands;
      for (const auto& row : sr.results) {
        cands.push_back({row.keyframe.keyframe_id, row.keyframe.video_id, row.keyframe.timestamp_s,
                         std::clamp(row.candidate.fused / scale, 0.0, 1.0)});
      }
      per_event.push_back(std::move(cands));
    }
    resp.timings_ms["search"] = engine_detail::ms_since(t0) - resp.timings_ms["plan"];

    const auto tb = engine_detail::Clock::now();
    std::vector<SequenceState> beams;
    try {
      beams = beam_search(per_event, resp.config);
    } catch (const TemporalError& e) {
      if (e.kind() == TemporalError::Kind::NoValidSequence) {
        throw EngineError(EngineError::Kind::NotFound, e.what());
      }
      throw EngineError(EngineError::Kind::InvalidRequest, e.what());
    }
    resp.timings_ms["beam"] = engine_detail::ms_since(tb);
    const auto tf = engine_detail::Clock::now();
    auto fin = finalize(beams, events, *scorer_, *snap->store);
    resp.sequences = std::move(fin.sequences);
    if (fin.degraded) {
      resp.degraded = true;
      resp.warnings.push_back("cross scorer degraded during finalize");
    }
    resp.timings_ms["finalize"] = engine_detail::ms_since(tf);
    resp.timings_ms["total"] = engine_detail::ms_since(t0);
    return resp;
  }

 private:
  std::shared_ptr<const Snapshot> require_snapshot() const {
    auto snap = snapshot();
    if (!snap) {
      throw EngineError(EngineError::Kind::NoCorpus, "no corpus loaded");
    }
    return snap;
  }

  PlanOutcome plan_query(const std::string& query) const {
    try {
      if (cfg_.planner.llm_endpoint) {
        return plan_llm(query, cfg_.planner);
      }
      return {plan_rule_based(query, cfg_.planner), false, {}};
    } catch (const PlannerError& e) {
      if (e.kind() == PlannerError::Kind::EmptyQuery || e.kind() == PlannerError::Kind::EmptyEvent) {
        throw EngineError(EngineError::Kind::InvalidRequest, e.what());
      }
      // fallback=fail and the LLM is down
      throw EngineError(EngineError::Kind::Upstream, e.what());
    }
  }

  QueryPlan manual_plan(const std::string& query, const FusionWeights& w) const {
    QueryPlan plan;
    plan.original = query;
    plan.expansions = {query};
    plan.weights = w;
    plan.sub_queries[index_of(Modality::Visual)] = query;
    if (w.ocr > 0.0) {
      plan.sub_queries[index_of(Modality::Ocr)] = query;
    }
    if (w.asr > 0.0) {
      plan.sub_queries[index_of(Modality::Asr)] = query;
    }
    plan.rationale = "manual weights";
    plan.weights.rationale = plan.rationale;
    return plan;
  }

  engine_detail::BranchResult visual_branch(const Snapshot& snap, const QueryPlan& plan, bool rerank,
                                            bool use_expansions) const {
    engine_detail::BranchResult out;
    const auto t0 = engine_detail::Clock::now();
    const auto& sub = plan.sub_query(Modality::Visual);
    if (!sub) {
      return out;
    }
    std::vector<std::string> texts{*sub};
    if (use_expansions) {
      for (std::size_t i = 1; i < plan.expansions.size(); ++i) {
        if (std::find(texts.begin(), texts.end(), plan.expansions[i]) == texts.end()) {
          texts.push_back(plan.expansions[i]);
        }
      }
    }
    std::array<std::vector<std::vector<float>>, 2> queries;
    bool any = false;
    for (Space s : kSpaces) {
      if (snap.vectors[s].size() == 0 || snap.embedder.dim(s) == 0) {
        continue;
      }
      for (const auto& t : texts) {
        if (auto v = snap.embedder.embed(t, s)) {
          queries[index_of(s)].push_back(std::move(*v));
          any = true;
        }
      }
    }
    if (!any) {
      return out;
    }
    const auto first = first_stage(snap.vectors, queries, cfg_.first_stage, cfg_.normalization);
    std::vector<RerankItem> items;
    items.reserve(first.size());
    for (const auto& c : first) {
      out.visual[c.keyframe_id] = {c.cosine, c.srrf, std::nullopt};
      items.push_back({c.keyframe_id, c.srrf, std::nullopt});
    }
    if (rerank) {
      const auto tr = engine_detail::Clock::now();
      auto rr = rerank_candidates(std::move(items), *sub, *scorer_, cfg_.cascade, *snap.store);
      items = std::move(rr.items);
      if (rr.degraded) {
        out.degraded = true;
        out.warning = rr.error.empty() ? "cross scorer degraded" : rr.error;
      }
      for (const auto& it : items) {
        out.visual[it.keyframe_id].cross_score = it.cross_score;
      }
      out.rerank_ms = engine_detail::ms_since(tr);
    }
    out.list.reserve(items.size());
    for (const auto& it : items) {
      out.list.push_back({it.keyframe_id, it.score});
    }
    out.ms = engine_detail::ms_since(t0);
    return out;
  }

  engine_detail::BranchResult text_branch(const TextIndex& index, const std::optional<std::string>& sub) const {
    engine_detail::BranchResult out;
    const auto t0 = engine_detail::Clock::now();
    if (!sub || text::tokenize(*sub).empty()) {
      return out;
    }
    const auto hits = search_text(index, make_text_query(*sub), cfg_.text_top_k);
    out.list = to_id_scores(hits);
    for (const auto& h : hits) {
      out.text[h.keyframe_id] = h.breakdown;
    }
    out.ms = engine_detail::ms_since(t0);
    return out;
  }

  void run_pipeline(const Snapshot& snap, const QueryPlan& plan, std::size_t top_k, bool rerank,
                    bool use_expansions, SearchResponse& resp) const {
    using engine_detail::BranchResult;
    auto guarded = [](auto&& fn, const char* name) {
      try {
        return fn();
      } catch (const std::exception& e) {
        BranchResult r;
        r.degraded = true;
        r.warning = std::string(name) + " branch failed: " + e.what();
        return r;
      }
    };
    auto vis = std::async(std::launch::async, [&] {
      return guarded([&] { return visual_branch(snap, plan, rerank, use_expansions); }, "visual");
    });
    auto ocr = std::async(std::launch::async, [&] {
      return guarded([&] { return text_branch(snap.ocr, plan.sub_query(Modality::Ocr)); }, "ocr");
    });
    BranchResult asr = guarded([&] { return text_branch(snap.asr, plan.sub_query(Modality::Asr)); }, "asr");
    BranchResult v = vis.get();
    BranchResult o = ocr.get();

    resp.timings_ms["visual"] = v.ms;
    resp.timings_ms["rerank"] = v.rerank_ms;
    resp.timings_ms["ocr"] = o.ms;
    resp.timings_ms["asr"] = asr.ms;
    for (const BranchResult* b : {&v, &o, &asr}) {
      if (b->degraded) {
        resp.degraded = true;
        resp.warnings.push_back(b->warning);
      }
    }

    const auto tf = engine_detail::Clock::now();
    ModalityLists lists{v.list, o.list, asr.list};
    std::vector<ScoredCandidate> fused;
    try {
      fused = fuse(lists, plan.weights, cfg_.normalization, top_k);
    } catch (const FusionError&) {
      // nothing matched in any branch
    }
    resp.results.clear();
    resp.results.reserve(fused.size());
    for (auto& c : fused) {
      const Keyframe* kf = snap.store->find_keyframe(c.keyframe_id);
      if (!kf) {
        continue;
      }
      ResultRow row{std::move(c), *kf, {}, std::nullopt, std::nullopt};
      if (auto it = v.visual.find(row.keyframe.keyframe_id); it != v.visual.end()) {
        row.visual = it->second;
      }
      if (auto it = o.text.find(row.keyframe.keyframe_id); it != o.text.end()) {
        row.ocr = it->second;
      }
      if (auto it = asr.text.find(row.keyframe.keyframe_id); it != asr.text.end()) {
        row.asr = it->second;
      }
      resp.results.push_back(std::move(row));
    }
    resp.timings_ms["fuse"] = engine_detail::ms_since(tf);
  }

  EngineConfig cfg_;
  std::shared_ptr<const CrossScorer> scorer_;
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snapshot_;
};

}  // namespace momentsearch
