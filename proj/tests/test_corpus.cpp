#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "momentsearch/corpus.hpp"
#include "momentsearch/embedder.hpp"
#include "momentsearch/generator.hpp"
#include "momentsearch/text_index.hpp"

namespace ms = momentsearch;
using K = ms::CorpusError::Kind;

namespace {

ms::CorpusError::Kind build_error(ms::CorpusData d) {
  try {
    ms::CorpusStore::build(std::move(d));
  } catch (const ms::CorpusError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected CorpusError";
  return K::Io;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

}  // namespace

TEST(Embeddings, EncodeDecodeRoundTrip) {
  ms::SpaceEmbeddings e;
  e.dim = 2;
  e.vectors["k1"] = {0.6f, 0.8f};
  e.vectors["k2"] = {1.0f, 0.0f};
  const auto bytes = ms::encode_embeddings(e);
  EXPECT_EQ(bytes.substr(0, 4), "EMB1");
  // 4 magic + 4 dim + 4 count + 2 * (2 + 2 + 8)
  EXPECT_EQ(bytes.size(), 12u + 2u * 12u);
  EXPECT_EQ(ms::decode_embeddings(bytes), e);
}

TEST(Embeddings, LittleEndianLayout) {
  ms::SpaceEmbeddings e;
  e.dim = 2;
  e.vectors["ab"] = {0.6f, 0.8f};
  const auto b = ms::encode_embeddings(e);
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 2u);  // dim
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1u);  // count
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 2u); // id length
  EXPECT_EQ(b.substr(14, 2), "ab");
}

TEST(Embeddings, ZeroCountGivesEmptyMap) {
  ms::SpaceEmbeddings e;
  e.dim = 16;
  EXPECT_TRUE(ms::decode_embeddings(ms::encode_embeddings(e)).vectors.empty());
}

TEST(Embeddings, ThreeFourFiveVectorIsUnit) {
  ms::SpaceEmbeddings e;
  e.dim = 2;
  e.vectors["k"] = {0.6f, 0.8f};
  EXPECT_NO_THROW(ms::decode_embeddings(ms::encode_embeddings(e)));
}

TEST(Embeddings, Errors) {
  ms::SpaceEmbeddings e;
  e.dim = 2;
  for (int i = 0; i < 5; ++i) {
    e.vectors["k" + std::to_string(i)] = {1.0f, 0.0f};
  }
  auto bytes = ms::encode_embeddings(e);
  auto kind_of = [](const std::string& b) {
    try {
      ms::decode_embeddings(b);
    } catch (const ms::CorpusError& err) {
      return err.kind();
    }
    return K::Io;
  };
  // header says 5, only 4 records present
  EXPECT_EQ(kind_of(bytes.substr(0, bytes.size() - 12)), K::TruncatedFile);
  EXPECT_EQ(kind_of(bytes.substr(0, 6)), K::TruncatedFile);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(kind_of(bad), K::BadMagic);

  ms::SpaceEmbeddings nonunit;
  nonunit.dim = 2;
  nonunit.vectors["k"] = {0.5f, 0.5f};
  EXPECT_EQ(kind_of(ms::encode_embeddings(nonunit)), K::NonUnitVector);
}

TEST(Embeddings, LoadFromFile) {
  fixtures::TempDir dir;
  ms::SpaceEmbeddings e;
  e.dim = 2;
  e.vectors["k"] = {0.6f, 0.8f};
  ms::save_embeddings(dir.path() / "a.bin", e);
  EXPECT_EQ(ms::load_embeddings(dir.path() / "a.bin", ms::Space::SemA), e);
  EXPECT_THROW(ms::load_embeddings(dir.path() / "missing.bin", ms::Space::SemA), ms::CorpusError);
}

TEST(CorpusStore, MinimalCorpus) {
  ms::CorpusData d;
  d.videos.push_back({"v1", "t", 10.0});
  d.shots.push_back({"s1", "v1", 0.0, 5.0});
  d.keyframes.push_back({"k1", "s1", "v1", 2.0, std::nullopt, std::nullopt});
  auto store = ms::CorpusStore::build(d);
  EXPECT_EQ(store->keyframes().size(), 1u);
  EXPECT_TRUE(ms::TextIndex::build(*store, ms::TextChannel::Ocr).empty());
  EXPECT_TRUE(ms::TextIndex::build(*store, ms::TextChannel::Asr).empty());
}

TEST(CorpusStore, RejectsDanglingShotVideo) {
  ms::CorpusData d;
  d.videos.push_back({"v1", "t", 10.0});
  d.shots.push_back({"s1", "v9", 0.0, 5.0});
  EXPECT_EQ(build_error(d), K::DanglingReference);
}

TEST(CorpusStore, RejectsInvariantViolations) {
  auto base = fixtures::toy_corpus({{"k1", "a"}, {"k2", "b"}});
  {
    auto d = base;
    d.keyframes.push_back(d.keyframes[0]);
    EXPECT_EQ(build_error(d), K::DuplicateId);
  }
  {
    auto d = base;
    d.keyframes[0].timestamp_s = 100.0;  // outside its shot
    EXPECT_EQ(build_error(d), K::InvariantViolation);
  }
  {
    auto d = base;
    for (int i = 0; i < 3; ++i) {
      auto extra = d.keyframes[0];
      extra.keyframe_id = "extra" + std::to_string(i);
      d.keyframes.push_back(extra);
    }
    EXPECT_EQ(build_error(d), K::InvariantViolation);  // 4 keyframes in one shot
  }
  {
    auto d = base;
    d.ocr.push_back({"o1", "nope", "TEXT", std::nullopt});
    EXPECT_EQ(build_error(d), K::DanglingReference);
  }
  {
    auto d = base;
    d.ocr.push_back({"o1", "k1", "", std::nullopt});
    EXPECT_EQ(build_error(d), K::InvariantViolation);
  }
  {
    auto d = base;
    d.embeddings[0].dim = 3;
    d.embeddings[0].vectors["k1"] = {1.0f, 0.0f};
    EXPECT_EQ(build_error(d), K::DimensionMismatch);
  }
}

TEST(CorpusStore, AsrAlignmentUsesMidpointWithTiesToEarlierKeyframe) {
  auto d = fixtures::toy_corpus({{"k1", "a"}, {"k2", "b"}, {"k3", "c"}});  // t = 10, 20, 30
  d.asr.push_back({"a1", "v1", 14.0, 16.0, "hello", ""});  // midpoint 15: tie between 10 and 20
  d.asr.push_back({"a2", "v1", 24.0, 28.0, "world", ""});  // midpoint 26 -> 30
  auto store = ms::CorpusStore::build(d);
  EXPECT_EQ(store->asr_segments()[0].aligned_keyframe_id, "k1");
  EXPECT_EQ(store->asr_segments()[1].aligned_keyframe_id, "k3");

  d.asr[1].aligned_keyframe_id = "k2";
  EXPECT_EQ(build_error(d), K::InvariantViolation);
}

TEST(Manifest, RoundTripIsIdentical) {
  fixtures::TempDir dir;
  const auto gc = ms::gen_corpus(5, 3, 2);
  const auto path = ms::write_manifest(gc.data, dir.path());
  const auto store = ms::ingest_manifest(path);
  EXPECT_EQ(store->data(), ms::CorpusStore::build(gc.data)->data());

  // export the ingested store again: byte-identical files
  fixtures::TempDir dir2;
  ms::write_manifest(store->data(), dir2.path());
  for (const char* f : {"manifest.jsonl", "emb_sem_a.bin", "emb_sem_b.bin"}) {
    EXPECT_EQ(slurp(dir.path() / f), slurp(dir2.path() / f)) << f;
  }
}

TEST(Manifest, MetaLineMustComeFirst) {
  fixtures::TempDir dir;
  write_text(dir.path() / "m.jsonl",
             R"({"kind":"video","video_id":"v1","title":"t","duration_s":1})"
             "\n"
             R"({"kind":"meta","sem_a_dim":2,"sem_b_dim":2,"embedding_files":[]})"
             "\n");
  try {
    ms::ingest_manifest(dir.path() / "m.jsonl");
    FAIL();
  } catch (const ms::CorpusError& e) {
    EXPECT_EQ(e.kind(), K::MalformedLine);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Manifest, MalformedLineIsNamed) {
  fixtures::TempDir dir;
  write_text(dir.path() / "m.jsonl",
             R"({"kind":"meta","sem_a_dim":2,"sem_b_dim":2,"embedding_files":[]})"
             "\n"
             R"({"kind":"video","video_id":"v1","title":"t","duration_s":1})"
             "\n"
             "{not json\n");
  try {
    ms::ingest_manifest(dir.path() / "m.jsonl");
    FAIL();
  } catch (const ms::CorpusError& e) {
    EXPECT_EQ(e.kind(), K::MalformedLine);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Manifest, DanglingReferenceNamesTheLine) {
  fixtures::TempDir dir;
  write_text(dir.path() / "m.jsonl",
             R"({"kind":"meta","sem_a_dim":2,"sem_b_dim":2,"embedding_files":[]})"
             "\n"
             R"({"kind":"video","video_id":"v1","title":"t","duration_s":10})"
             "\n"
             R"({"kind":"shot","shot_id":"s1","video_id":"v9","start_s":0,"end_s":1})"
             "\n");
  try {
    ms::ingest_manifest(dir.path() / "m.jsonl");
    FAIL();
  } catch (const ms::CorpusError& e) {
    EXPECT_EQ(e.kind(), K::DanglingReference);
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("v9"), std::string::npos);
  }
}

TEST(Manifest, SidecarDimensionMustMatchMeta) {
  fixtures::TempDir dir;
  auto d = fixtures::toy_corpus({{"k1", "a"}});
  d.embeddings[0].dim = 2;
  d.embeddings[0].vectors["k1"] = {0.6f, 0.8f};
  d.embeddings[1].dim = 2;
  d.embeddings[1].vectors["k1"] = {1.0f, 0.0f};
  const auto path = ms::write_manifest(d, dir.path());
  ms::SpaceEmbeddings wrong;
  wrong.dim = 3;
  wrong.vectors["k1"] = {1.0f, 0.0f, 0.0f};
  ms::save_embeddings(dir.path() / "emb_sem_b.bin", wrong);
  try {
    ms::ingest_manifest(path);
    FAIL();
  } catch (const ms::CorpusError& e) {
    EXPECT_EQ(e.kind(), K::DimensionMismatch);
  }
}

TEST(Embedder, UnitNormAndDeterministic) {
  ms::ReferenceEmbedder emb;
  const auto a = emb.embed("a red car on the street", ms::Space::SemA);
  const auto b = emb.embed("a red car on the street", ms::Space::SemB);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->size(), 128u);
  EXPECT_EQ(b->size(), 256u);
  double n = 0.0;
  for (float x : *b) n += double(x) * x;
  EXPECT_NEAR(n, 1.0, 1e-6);
  EXPECT_EQ(*a, *emb.embed("A RED car, on the street!", ms::Space::SemA));
  EXPECT_FALSE(emb.embed("...", ms::Space::SemA));
}
