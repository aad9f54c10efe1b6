#include <gtest/gtest.h>

#include <cstdlib>

#include "fixtures.hpp"
#include "momentsearch/momentsearch.hpp"

namespace ms = momentsearch;
using nlohmann::json;

namespace {

class EngineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    gc_ = new ms::GeneratedCorpus(ms::gen_corpus(42, 10, 3));
    store_ = new ms::CorpusPtr(ms::CorpusStore::build(gc_->data));
  }
  static void TearDownTestSuite() {
    delete store_;
    delete gc_;
  }
  static std::unique_ptr<ms::Engine> loaded(ms::EngineConfig cfg = {}) {
    auto e = std::make_unique<ms::Engine>(std::move(cfg));
    e->load(*store_);
    return e;
  }
  static const ms::GroundTruth& truth() { return gc_->truth; }

  static ms::GeneratedCorpus* gc_;
  static ms::CorpusPtr* store_;
};

ms::GeneratedCorpus* EngineTest::gc_ = nullptr;
ms::CorpusPtr* EngineTest::store_ = nullptr;

json strip_timings(json j) {
  j.erase("timings_ms");
  return j;
}

}  // namespace

TEST_F(EngineTest, NoCorpusIsReported) {
  ms::Engine e;
  try {
    e.search({"x"});
    FAIL();
  } catch (const ms::EngineError& err) {
    EXPECT_EQ(err.kind(), ms::EngineError::Kind::NoCorpus);
  }
}

TEST_F(EngineTest, ManualVisualOnlyWithoutRerankEqualsFirstStage) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  const auto& target = truth().targets[0];
  ms::SearchRequest req{target.caption, ms::SearchMode::Manual, ms::FusionWeights{1, 0, 0, ""}, 100, false};
  const auto resp = engine.search(req);

  const auto snap = engine.snapshot();
  std::array<std::vector<std::vector<float>>, 2> q;
  for (auto s : ms::kSpaces) q[ms::index_of(s)].push_back(*snap->embedder.embed(target.caption, s));
  const auto first = ms::first_stage(snap->vectors, q, {});
  ASSERT_EQ(resp.results.size(), first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(resp.results[i].keyframe.keyframe_id, first[i].keyframe_id);
    EXPECT_EQ(resp.results[i].visual.srrf, first[i].srrf);
  }
}

TEST_F(EngineTest, QuotedOcrTargetIsRankOne) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  for (const auto& t : truth().targets) {
    const auto resp = engine.search({t.ocr_query});
    ASSERT_FALSE(resp.results.empty());
    EXPECT_EQ(resp.results[0].keyframe.keyframe_id, t.keyframe_id) << t.ocr_query;
    EXPECT_TRUE(resp.plan.sub_query(ms::Modality::Ocr));
    EXPECT_FALSE(resp.degraded);
  }
}

TEST_F(EngineTest, ResultsSortedAndBreakdownsPresent) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  const auto& t = truth().targets[3];
  const auto resp = engine.search({t.ocr_query});
  for (std::size_t i = 1; i < resp.results.size(); ++i) {
    EXPECT_GE(resp.results[i - 1].candidate.fused, resp.results[i].candidate.fused);
  }
  ASSERT_TRUE(resp.results[0].ocr);
  EXPECT_EQ(resp.results[0].ocr->exact_phrase, 1.0);
  EXPECT_TRUE(resp.results[0].visual.cross_score);
  for (const char* stage : {"plan", "visual", "ocr", "asr", "fuse", "total"}) {
    EXPECT_TRUE(resp.timings_ms.contains(stage)) << stage;
  }
}

TEST_F(EngineTest, InvalidRequests) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  ms::SearchRequest zero{"red car"};
  zero.top_k = 0;
  EXPECT_THROW(engine.search(zero), ms::EngineError);
  ms::SearchRequest manual{"red car", ms::SearchMode::Manual};
  EXPECT_THROW(engine.search(manual), ms::EngineError);
  EXPECT_THROW(engine.search({"   "}), ms::EngineError);
}

TEST_F(EngineTest, IdenticalRequestsGiveIdenticalBodies) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  const auto& t = truth().targets[5];
  const auto a = ms::serialize::to_json(engine.search({t.asr_query}));
  const auto b = ms::serialize::to_json(engine.search({t.asr_query}));
  EXPECT_EQ(strip_timings(a), strip_timings(b));
}

TEST_F(EngineTest, PlantedSequenceIsRankOne) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  for (const auto& seq : truth().sequences) {
    ms::TemporalRequest req;
    req.query = seq.query;
    const auto resp = engine.temporal(req);
    ASSERT_FALSE(resp.sequences.empty());
    const auto& top = resp.sequences[0];
    ASSERT_EQ(top.events.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(top.events[i].candidate.keyframe_id, seq.keyframe_ids[i]);
    EXPECT_LT(top.events[0].candidate.t, top.events[1].candidate.t);
    EXPECT_LT(top.events[1].candidate.t, top.events[2].candidate.t);
  }
}

TEST_F(EngineTest, SingleEventSequencesComeFromSearchResults) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  const auto& t = truth().targets[1];
  ms::TemporalRequest req;
  req.events = std::vector<std::string>{t.caption};
  const auto resp = engine.temporal(req);
  const auto search = engine.search({t.caption, ms::SearchMode::Auto, std::nullopt, 20, true});
  for (const auto& s : resp.sequences) {
    ASSERT_EQ(s.events.size(), 1u);
    const auto it = std::find_if(search.results.begin(), search.results.end(), [&](const auto& r) {
      return r.keyframe.keyframe_id == s.events[0].candidate.keyframe_id;
    });
    ASSERT_NE(it, search.results.end());
    EXPECT_NEAR(s.events[0].candidate.s, it->candidate.fused / std::max(1.0, search.plan.weights.sum()), 1e-12);
    EXPECT_EQ(s.events[0].lambda, 1.0);
  }
}

TEST_F(EngineTest, GreedyDecayFreeTemporal) {
  auto engine_ptr = loaded();
  auto& engine = *engine_ptr;
  ms::TemporalRequest req;
  req.query = truth().sequences[0].events[0] + " -> " + truth().sequences[0].events[1];
  req.alpha = 0.0;
  req.beam_width = 1;
  const auto resp = engine.temporal(req);
  ASSERT_FALSE(resp.sequences.empty());
  for (const auto& e : resp.sequences[0].events) EXPECT_EQ(e.lambda, 1.0);
  EXPECT_EQ(resp.config.beam_width, 1u);
}

TEST(EngineSmall, EventsInDifferentVideosOnlyIsNotFound) {
  ms::CorpusData d;
  ms::ReferenceEmbedder emb;
  const std::vector<std::tuple<std::string, std::string, std::string>> kfs{
      {"A", "a1", "a red apple on a table"}, {"B", "b1", "a blue ocean wave"}};
  for (const auto& [v, id, cap] : kfs) {
    d.videos.push_back({v, v, 10});
    d.shots.push_back({id + "_s", v, 0, 10});
    d.keyframes.push_back({id, id + "_s", v, 5, cap, std::nullopt});
  }
  for (auto s : ms::kSpaces) {
    d.embeddings[ms::index_of(s)].dim = emb.dim(s);
    for (const auto& kf : d.keyframes) d.embeddings[ms::index_of(s)].vectors[kf.keyframe_id] = *emb.embed(*kf.caption, s);
  }
  ms::Engine engine;
  engine.load(ms::CorpusStore::build(d));
  ms::TemporalRequest req;
  req.query = "a red apple on a table -> a blue ocean wave";
  req.per_event_top_m = 1;
  try {
    engine.temporal(req);
    FAIL();
  } catch (const ms::EngineError& e) {
    EXPECT_EQ(e.kind(), ms::EngineError::Kind::NotFound);
  }
}

TEST_F(EngineTest, OutagesDegradeToReferencePath) {
  ms::EngineConfig broken;
  broken.planner.llm_endpoint = fixtures::kUnreachable;
  broken.scorer_endpoint = fixtures::kUnreachable;
  auto degraded_ptr = loaded(broken);
  auto& degraded = *degraded_ptr;
  auto reference_ptr = loaded();
  auto& reference = *reference_ptr;
  const auto& t = truth().targets[2];
  for (const auto& q : {t.ocr_query, t.asr_query, t.visual_query}) {
    const auto a = degraded.search({q});
    const auto b = reference.search({q});
    EXPECT_TRUE(a.degraded);
    EXPECT_FALSE(b.degraded);
    auto ja = strip_timings(ms::serialize::to_json(a));
    auto jb = strip_timings(ms::serialize::to_json(b));
    EXPECT_EQ(ja["results"], jb["results"]);
    EXPECT_EQ(ja["plan"], jb["plan"]);
  }
}

TEST(Serialize, RoundsToSixDecimals) {
  EXPECT_EQ(ms::serialize::round6(0.1234567), 0.123457);
  EXPECT_EQ(ms::serialize::round6(-0.0000001), 0.0);
  EXPECT_EQ(ms::serialize::round6(std::nan("")), 0.0);
}

TEST(Serialize, ParsesSearchRequests) {
  const auto r = ms::serialize::search_request(json::parse(
      R"({"query":"q","mode":"manual","manual_weights":{"vis":1,"ocr":0.5,"asr":0},"top_k":3,"rerank":false})"));
  EXPECT_EQ(r.mode, ms::SearchMode::Manual);
  EXPECT_EQ(r.manual_weights->ocr, 0.5);
  EXPECT_EQ(r.top_k, 3u);
  EXPECT_FALSE(r.rerank);
  EXPECT_THROW(ms::serialize::search_request(json::parse(R"({"query":"q","top_k":0})")), ms::EngineError);
  EXPECT_THROW(ms::serialize::search_request(json::parse(R"({"query":"q","mode":"manual"})")), ms::EngineError);
  EXPECT_THROW(ms::serialize::search_request(json::parse(R"({"top_k":3})")), ms::EngineError);
}

TEST(Config, LayersFileOverDefaults) {
  const auto c = ms::merge_config({}, json::parse(R"({"temporal":{"alpha":0.05},"cascade":{"blend":"multiply"}})"));
  EXPECT_EQ(c.temporal.alpha, 0.05);
  EXPECT_EQ(c.temporal.beam_width, 8u);
  EXPECT_EQ(c.cascade.blend, ms::BlendMode::Multiply);
  EXPECT_THROW(ms::merge_config({}, json::parse(R"({"temporal":{"beam_width":0}})")), ms::ConfigError);
  EXPECT_THROW(ms::merge_config({}, json::parse(R"({"cascade":{"blend":"avg"}})")), ms::ConfigError);
  // round trip through JSON
  EXPECT_EQ(ms::config_to_json(ms::merge_config({}, ms::config_to_json(c))), ms::config_to_json(c));
}

TEST(Config, EnvironmentVariableNamesTheFile) {
  fixtures::TempDir dir;
  const auto path = dir.path() / "cfg.json";
  std::ofstream(path) << R"({"planner":{"n_expansions":2}})";
  ::setenv(ms::kConfigEnvVar, path.c_str(), 1);
  EXPECT_EQ(ms::resolve_config(std::nullopt).planner.n_expansions, 2u);
  ::unsetenv(ms::kConfigEnvVar);
  EXPECT_EQ(ms::resolve_config(std::nullopt).planner.n_expansions, 4u);
}
