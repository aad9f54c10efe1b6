#pragma once

// Domain records, the JSONL manifest, the binary embedding sidecars and the
// immutable in-memory store every index is built from.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace momentsearch {

struct VideoRecord {
  std::string video_id;
  std::string title;
  double duration_s = 0.0;
  bool operator==(const VideoRecord&) const = default;
};

struct ShotRecord {
  std::string shot_id;
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const ShotRecord&) const = default;
};

struct Keyframe {
  std::string keyframe_id;
  std::string shot_id;
  std::string video_id;
  double timestamp_s = 0.0;
  std::optional<std::string> caption;
  std::optional<std::string> image_uri;
  bool operator==(const Keyframe&) const = default;
};

struct OcrDoc {
  std::string doc_id;
  std::string keyframe_id;
  std::string text;
  std::optional<std::string> language_tag;
  bool operator==(const OcrDoc&) const = default;
};

struct AsrSegment {
  std::string segment_id;
  std::string video_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
  std::string aligned_keyframe_id;
  bool operator==(const AsrSegment&) const = default;
};

/// The two dual-encoder embedding spaces stored per keyframe.
enum class Space : std::uint8_t { SemA = 0, SemB = 1 };
inline constexpr std::array<Space, 2> kSpaces{Space::SemA, Space::SemB};

inline std::string_view to_string(Space s) { return s == Space::SemA ? "SEM_A" : "SEM_B"; }
inline std::size_t index_of(Space s) { return static_cast<std::size_t>(s); }

inline constexpr double kUnitNormTolerance = 1e-6;

class CorpusError : public std::runtime_error {
 public:
  enum class Kind {
    Io,
    MalformedLine,
    DanglingReference,
    DimensionMismatch,
    DuplicateId,
    InvariantViolation,
    BadMagic,
    TruncatedFile,
    NonUnitVector,
  };

  CorpusError(Kind kind, std::string message, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(std::move(message)), kind_(kind), line_(line) {}

  Kind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

  static std::string_view kind_name(Kind k) {
    switch (k) {
      case Kind::Io: return "Io";
      case Kind::MalformedLine: return "MalformedLine";
      case Kind::DanglingReference: return "DanglingReference";
      case Kind::DimensionMismatch: return "DimensionMismatch";
      case Kind::DuplicateId: return "DuplicateId";
      case Kind::InvariantViolation: return "InvariantViolation";
      case Kind::BadMagic: return "BadMagic";
      case Kind::TruncatedFile: return "TruncatedFile";
      case Kind::NonUnitVector: return "NonUnitVector";
    }
    return "Unknown";
  }

 private:
  Kind kind_;
  std::optional<std::size_t> line_;
};

// ---------------------------------------------------------------------------
// Embedding sidecar: "EMB1" | u32 dim | u32 count | count x (u16 id_len, id, dim x f32), all LE.

/// Vectors of one space keyed by keyframe id.
struct SpaceEmbeddings {
  std::uint32_t dim = 0;
  std::map<std::string, std::vector<float>> vectors;
  bool operator==(const SpaceEmbeddings&) const = default;
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline double l2_norm(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) {
    acc += static_cast<double>(x) * static_cast<double>(x);
  }
  return std::sqrt(acc);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError(CorpusError::Kind::Io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::string encode_embeddings(const SpaceEmbeddings& emb) {
  std::string out = "EMB1";
  detail::put_u32(out, emb.dim);
  detail::put_u32(out, static_cast<std::uint32_t>(emb.vectors.size()));
  for (const auto& [id, vec] : emb.vectors) {
    detail::put_u16(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    for (float f : vec) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      detail::put_u32(out, bits);
    }
  }
  return out;
}

inline SpaceEmbeddings decode_embeddings(std::string_view bytes) {
  using K = CorpusError::Kind;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 4 || bytes.substr(0, 4) != "EMB1") {
    throw CorpusError(K::BadMagic, "embedding sidecar: bad magic");
  }
  if (n < 12) {
    throw CorpusError(K::TruncatedFile, "embedding sidecar: truncated header");
  }
  SpaceEmbeddings out;
  out.dim = detail::get_u32(p + 4);
  const std::uint32_t count = detail::get_u32(p + 8);
  std::size_t off = 12;
  for (std::uint32_t r = 0; r < count; ++r) {
    if (off + 2 > n) {
      throw CorpusError(K::TruncatedFile, "embedding sidecar: expected " + std::to_string(count) +
                                              " records, found " + std::to_string(r));
    }
    const std::size_t id_len = static_cast<std::size_t>(p[off]) | (static_cast<std::size_t>(p[off + 1]) << 8);
    off += 2;
    if (off + id_len + 4ULL * out.dim > n) {
      throw CorpusError(K::TruncatedFile, "embedding sidecar: expected " + std::to_string(count) +
                                              " records, found " + std::to_string(r));
    }
    std::string id(bytes.substr(off, id_len));
    off += id_len;
    std::vector<float> vec(out.dim);
    for (std::uint32_t d = 0; d < out.dim; ++d) {
      const std::uint32_t bits = detail::get_u32(p + off);
      std::memcpy(&vec[d], &bits, sizeof bits);
      off += 4;
    }
    if (std::abs(detail::l2_norm(vec) - 1.0) > kUnitNormTolerance) {
      throw CorpusError(K::NonUnitVector, "embedding for '" + id + "' is not unit norm");
    }
    if (!out.vectors.emplace(id, std::move(vec)).second) {
      throw CorpusError(K::DuplicateId, "embedding sidecar: duplicate id '" + id + "'");
    }
  }
  return out;
}

/// Reads one sidecar file. `space` only labels errors; the dimension check
/// against the manifest happens at ingest.
inline SpaceEmbeddings load_embeddings(const std::filesystem::path& path, Space space) {
  try {
    return decode_embeddings(detail::read_file(path));
  } catch (const CorpusError& e) {
    throw CorpusError(e.kind(), std::string(to_string(space)) + " " + path.string() + ": " + e.what());
  }
}

inline void save_embeddings(const std::filesystem::path& path, const SpaceEmbeddings& emb) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CorpusError(CorpusError::Kind::Io, "cannot write " + path.string());
  }
  const std::string bytes = encode_embeddings(emb);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------

/// Plain record bundle: what a manifest describes before validation.
struct CorpusData {
  std::vector<VideoRecord> videos;
  std::vector<ShotRecord> shots;
  std::vector<Keyframe> keyframes;
  std::vector<OcrDoc> ocr;
  std::vector<AsrSegment> asr;
  std::array<SpaceEmbeddings, 2> embeddings;
  bool operator==(const CorpusData&) const = default;
};

/// Source line of each record, used to name the offending line in errors.
struct LineMap {
  std::vector<std::size_t> videos, shots, keyframes, ocr, asr;
};

/// Row-major matrix of unit vectors aligned with CorpusStore::keyframes().
struct EmbeddingMatrix {
  std::uint32_t dim = 0;
  std::vector<float> data;  // empty when the space has no vectors
  bool empty() const { return data.empty(); }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

/// Keyframe in `candidates` whose timestamp is nearest to `t`; ties go to the
/// earlier keyframe, then the smaller id.
inline const Keyframe* nearest_keyframe(std::span<const Keyframe* const> candidates, double t) {
  const Keyframe* best = nullptr;
  double best_d = 0.0;
  for (const Keyframe* kf : candidates) {
    const double d = std::abs(kf->timestamp_s - t);
    if (!best || d < best_d ||
        (d == best_d && (kf->timestamp_s < best->timestamp_s ||
                         (kf->timestamp_s == best->timestamp_s && kf->keyframe_id < best->keyframe_id)))) {
      best = kf;
      best_d = d;
    }
  }
  return best;
}

class CorpusStore {
 public:
  /// Validates every record invariant and builds lookup tables. ASR segments
  /// with an empty aligned_keyframe_id get it computed.
  static std::shared_ptr<const CorpusStore> build(CorpusData data, const LineMap* lines = nullptr) {
    std::shared_ptr<CorpusStore> store(new CorpusStore());
    store->data_ = std::move(data);
    store->validate(lines);
    return store;
  }

  std::span<const VideoRecord> videos() const { return data_.videos; }
  std::span<const ShotRecord> shots() const { return data_.shots; }
  std::span<const Keyframe> keyframes() const { return data_.keyframes; }
  std::span<const OcrDoc> ocr_docs() const { return data_.ocr; }
  std::span<const AsrSegment> asr_segments() const { return data_.asr; }
  const CorpusData& data() const { return data_; }

  const Keyframe* find_keyframe(std::string_view id) const {
    auto it = keyframe_index_.find(std::string(id));
    return it == keyframe_index_.end() ? nullptr : &data_.keyframes[it->second];
  }
  const VideoRecord* find_video(std::string_view id) const {
    auto it = video_index_.find(std::string(id));
    return it == video_index_.end() ? nullptr : &data_.videos[it->second];
  }
  std::uint32_t dim(Space s) const { return data_.embeddings[index_of(s)].dim; }
  const EmbeddingMatrix& matrix(Space s) const { return matrices_[index_of(s)]; }

  /// Keyframes of one video ordered by timestamp.
  std::vector<const Keyframe*> keyframes_of(std::string_view video_id) const {
    std::vector<const Keyframe*> out;
    auto it = by_video_.find(std::string(video_id));
    if (it != by_video_.end()) {
      for (std::size_t i : it->second) {
        out.push_back(&data_.keyframes[i]);
      }
    }
    return out;
  }

 private:
  CorpusStore() = default;

  [[noreturn]] static void fail(CorpusError::Kind kind, const std::string& msg,
                                const std::vector<std::size_t>* lines, std::size_t idx) {
    std::optional<std::size_t> line;
    if (lines && idx < lines->size()) {
      line = (*lines)[idx];
    }
    throw CorpusError(kind, line ? "line " + std::to_string(*line) + ": " + msg : msg, line);
  }

  void validate(const LineMap* lm) {
    using K = CorpusError::Kind;
    std::unordered_map<std::string, std::size_t> shot_index;
    std::unordered_map<std::string, std::size_t> ocr_ids, asr_ids;
    std::unordered_map<std::string, int> kf_per_shot;

    for (std::size_t i = 0; i < data_.videos.size(); ++i) {
      const auto& v = data_.videos[i];
      if (!(v.duration_s >= 0.0)) {
        fail(K::InvariantViolation, "video '" + v.video_id + "' has negative duration", lm ? &lm->videos : nullptr, i);
      }
      if (!video_index_.emplace(v.video_id, i).second) {
        fail(K::DuplicateId, "duplicate video id '" + v.video_id + "'", lm ? &lm->videos : nullptr, i);
      }
    }
    for (std::size_t i = 0; i < data_.shots.size(); ++i) {
      const auto& s = data_.shots[i];
      if (!video_index_.contains(s.video_id)) {
        fail(K::DanglingReference, "shot '" + s.shot_id + "' references missing video '" + s.video_id + "'",
             lm ? &lm->shots : nullptr, i);
      }
      if (!(0.0 <= s.start_s && s.start_s <= s.end_s)) {
        fail(K::InvariantViolation, "shot '" + s.shot_id + "' has invalid span", lm ? &lm->shots : nullptr, i);
      }
      if (!shot_index.emplace(s.shot_id, i).second) {
        fail(K::DuplicateId, "duplicate shot id '" + s.shot_id + "'", lm ? &lm->shots : nullptr, i);
      }
    }
    for (std::size_t i = 0; i < data_.keyframes.size(); ++i) {
      const auto& k = data_.keyframes[i];
      const auto* lines = lm ? &lm->keyframes : nullptr;
      auto sit = shot_index.find(k.shot_id);
      if (sit == shot_index.end()) {
        fail(K::DanglingReference, "keyframe '" + k.keyframe_id + "' references missing shot '" + k.shot_id + "'",
             lines, i);
      }
      const auto& shot = data_.shots[sit->second];
      if (shot.video_id != k.video_id) {
        fail(K::InvariantViolation, "keyframe '" + k.keyframe_id + "' video differs from its shot's", lines, i);
      }
      if (!(shot.start_s <= k.timestamp_s && k.timestamp_s <= shot.end_s)) {
        fail(K::InvariantViolation, "keyframe '" + k.keyframe_id + "' timestamp outside its shot", lines, i);
      }
      if (k.timestamp_s > data_.videos[video_index_.at(k.video_id)].duration_s) {
        fail(K::InvariantViolation, "keyframe '" + k.keyframe_id + "' beyond video duration", lines, i);
      }
      if (++kf_per_shot[k.shot_id] > 3) {
        fail(K::InvariantViolation, "shot '" + k.shot_id + "' has more than 3 keyframes", lines, i);
      }
      if (!keyframe_index_.emplace(k.keyframe_id, i).second) {
        fail(K::DuplicateId, "duplicate keyframe id '" + k.keyframe_id + "'", lines, i);
      }
      by_video_[k.video_id].push_back(i);
    }
    for (std::size_t i = 0; i < data_.shots.size(); ++i) {
      if (!kf_per_shot.contains(data_.shots[i].shot_id)) {
        fail(K::InvariantViolation, "shot '" + data_.shots[i].shot_id + "' has no keyframe",
             lm ? &lm->shots : nullptr, i);
      }
    }
    for (auto& [vid, idxs] : by_video_) {
      std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
        const auto& ka = data_.keyframes[a];
        const auto& kb = data_.keyframes[b];
        return ka.timestamp_s != kb.timestamp_s ? ka.timestamp_s < kb.timestamp_s : ka.keyframe_id < kb.keyframe_id;
      });
    }
    for (std::size_t i = 0; i < data_.ocr.size(); ++i) {
      const auto& d = data_.ocr[i];
      const auto* lines = lm ? &lm->ocr : nullptr;
      if (!keyframe_index_.contains(d.keyframe_id)) {
        fail(K::DanglingReference, "ocr '" + d.doc_id + "' references missing keyframe '" + d.keyframe_id + "'",
             lines, i);
      }
      if (d.text.empty()) {
        fail(K::InvariantViolation, "ocr '" + d.doc_id + "' has empty text", lines, i);
      }
      if (!ocr_ids.emplace(d.doc_id, i).second) {
        fail(K::DuplicateId, "duplicate ocr id '" + d.doc_id + "'", lines, i);
      }
    }
    for (std::size_t i = 0; i < data_.asr.size(); ++i) {
      auto& a = data_.asr[i];
      const auto* lines = lm ? &lm->asr : nullptr;
      auto vit = video_index_.find(a.video_id);
      if (vit == video_index_.end()) {
        fail(K::DanglingReference, "asr '" + a.segment_id + "' references missing video '" + a.video_id + "'",
             lines, i);
      }
      if (!(a.start_s <= a.end_s) || a.text.empty()) {
        fail(K::InvariantViolation, "asr '" + a.segment_id + "' has invalid span or empty text", lines, i);
      }
      if (a.end_s > data_.videos[vit->second].duration_s) {
        fail(K::InvariantViolation, "asr '" + a.segment_id + "' beyond video duration", lines, i);
      }
      const auto kfs = keyframes_of(a.video_id);
      const Keyframe* nearest = nearest_keyframe(kfs, 0.5 * (a.start_s + a.end_s));
      if (!nearest) {
        fail(K::InvariantViolation, "asr '" + a.segment_id + "' belongs to a video without keyframes", lines, i);
      }
      if (a.aligned_keyframe_id.empty()) {
        a.aligned_keyframe_id = nearest->keyframe_id;
      } else if (a.aligned_keyframe_id != nearest->keyframe_id) {
        if (!keyframe_index_.contains(a.aligned_keyframe_id)) {
          fail(K::DanglingReference, "asr '" + a.segment_id + "' references missing keyframe '" +
                                         a.aligned_keyframe_id + "'", lines, i);
        }
        fail(K::InvariantViolation, "asr '" + a.segment_id + "' is not aligned to its nearest keyframe '" +
                                        nearest->keyframe_id + "'", lines, i);
      }
      if (!asr_ids.emplace(a.segment_id, i).second) {
        fail(K::DuplicateId, "duplicate asr id '" + a.segment_id + "'", lines, i);
      }
    }

    for (Space s : kSpaces) {
      const auto& emb = data_.embeddings[index_of(s)];
      auto& m = matrices_[index_of(s)];
      m.dim = emb.dim;
      if (emb.vectors.empty()) {
        continue;
      }
      for (const auto& [id, vec] : emb.vectors) {
        if (!keyframe_index_.contains(id)) {
          throw CorpusError(K::DanglingReference,
                            std::string(to_string(s)) + " embedding references missing keyframe '" + id + "'");
        }
        if (vec.size() != emb.dim) {
          throw CorpusError(K::DimensionMismatch, std::string(to_string(s)) + " vector '" + id + "' expected dim " +
                                                      std::to_string(emb.dim) + ", got " + std::to_string(vec.size()));
        }
        if (std::abs(detail::l2_norm(vec) - 1.0) > kUnitNormTolerance) {
          throw CorpusError(K::NonUnitVector, "embedding for '" + id + "' is not unit norm");
        }
      }
      m.data.resize(data_.keyframes.size() * static_cast<std::size_t>(emb.dim));
      for (std::size_t i = 0; i < data_.keyframes.size(); ++i) {
        auto it = emb.vectors.find(data_.keyframes[i].keyframe_id);
        if (it == emb.vectors.end()) {
          throw CorpusError(K::InvariantViolation, std::string(to_string(s)) + " has no vector for keyframe '" +
                                                       data_.keyframes[i].keyframe_id + "'");
        }
        std::copy(it->second.begin(), it->second.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * emb.dim));
      }
    }
  }

  CorpusData data_;
  std::unordered_map<std::string, std::size_t> video_index_;
  std::unordered_map<std::string, std::size_t> keyframe_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_video_;
  std::array<EmbeddingMatrix, 2> matrices_;
};

using CorpusPtr = std::shared_ptr<const CorpusStore>;

// ---------------------------------------------------------------------------
// JSONL manifest

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson opt(const std::optional<std::string>& v) { return v ? ojson(*v) : ojson(nullptr); }

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  }
  return j.at(key).get<T>();
}

inline std::optional<std::string> opt_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return std::nullopt;
  }
  return j.at(key).get<std::string>();
}

}  // namespace detail

/// Manifest lines for a corpus; sidecar file names are written into the meta line.
inline std::string manifest_text(const CorpusData& data, const std::array<std::string, 2>& embedding_files) {
  using detail::ojson;
  std::string out;
  auto emit = [&](const ojson& j) {
    out += j.dump();
    out += '\n';
  };
  ojson meta;
  meta["kind"] = "meta";
  meta["sem_a_dim"] = data.embeddings[0].dim;
  meta["sem_b_dim"] = data.embeddings[1].dim;
  meta["embedding_files"] = ojson::array();
  for (const auto& f : embedding_files) {
    meta["embedding_files"].push_back(f);
  }
  emit(meta);
  for (const auto& v : data.videos) {
    emit({{"kind", "video"}, {"video_id", v.video_id}, {"title", v.title}, {"duration_s", v.duration_s}});
  }
  for (const auto& s : data.shots) {
    emit({{"kind", "shot"}, {"shot_id", s.shot_id}, {"video_id", s.video_id}, {"start_s", s.start_s},
          {"end_s", s.end_s}});
  }
  for (const auto& k : data.keyframes) {
    emit({{"kind", "keyframe"},
          {"keyframe_id", k.keyframe_id},
          {"shot_id", k.shot_id},
          {"video_id", k.video_id},
          {"timestamp_s", k.timestamp_s},
          {"caption", detail::opt(k.caption)},
          {"image_uri", detail::opt(k.image_uri)}});
  }
  for (const auto& d : data.ocr) {
    emit({{"kind", "ocr"},
          {"doc_id", d.doc_id},
          {"keyframe_id", d.keyframe_id},
          {"text", d.text},
          {"language_tag", detail::opt(d.language_tag)}});
  }
  for (const auto& a : data.asr) {
    emit({{"kind", "asr"},
          {"segment_id", a.segment_id},
          {"video_id", a.video_id},
          {"start_s", a.start_s},
          {"end_s", a.end_s},
          {"text", a.text},
          {"aligned_keyframe_id", a.aligned_keyframe_id}});
  }
  return out;
}

/// Writes manifest.jsonl plus the two sidecars into `dir`; returns the manifest path.
inline std::filesystem::path write_manifest(const CorpusData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::array<std::string, 2> files{"emb_sem_a.bin", "emb_sem_b.bin"};
  for (std::size_t s = 0; s < 2; ++s) {
    save_embeddings(dir / files[s], data.embeddings[s]);
  }
  const auto path = dir / "manifest.jsonl";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CorpusError(CorpusError::Kind::Io, "cannot write " + path.string());
  }
  out << manifest_text(data, files);
  return path;
}

/// Parses and validates a manifest together with its embedding sidecars.
inline CorpusPtr ingest_manifest(const std::filesystem::path& path) {
  using K = CorpusError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError(K::Io, "cannot open manifest " + path.string());
  }
  CorpusData data;
  LineMap lines;
  std::array<std::uint32_t, 2> dims{0, 0};
  std::vector<std::string> files;
  bool saw_meta = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) {
        throw std::invalid_argument("line is not a JSON object");
      }
      const auto kind = detail::field<std::string>(j, "kind");
      if (!saw_meta && kind != "meta") {
        throw std::invalid_argument("first record must be kind=meta");
      }
      if (kind == "meta") {
        if (saw_meta) {
          throw std::invalid_argument("duplicate meta line");
        }
        saw_meta = true;
        dims[0] = detail::field<std::uint32_t>(j, "sem_a_dim");
        dims[1] = detail::field<std::uint32_t>(j, "sem_b_dim");
        files = j.value("embedding_files", std::vector<std::string>{});
        if (files.size() > 2) {
          throw std::invalid_argument("at most two embedding files (SEM_A, SEM_B)");
        }
      } else if (kind == "video") {
        data.videos.push_back({detail::field<std::string>(j, "video_id"), j.value("title", std::string{}),
                               detail::field<double>(j, "duration_s")});
        lines.videos.push_back(line_no);
      } else if (kind == "shot") {
        data.shots.push_back({detail::field<std::string>(j, "shot_id"), detail::field<std::string>(j, "video_id"),
                              detail::field<double>(j, "start_s"), detail::field<double>(j, "end_s")});
        lines.shots.push_back(line_no);
      } else if (kind == "keyframe") {
        data.keyframes.push_back({detail::field<std::string>(j, "keyframe_id"),
                                  detail::field<std::string>(j, "shot_id"), detail::field<std::string>(j, "video_id"),
                                  detail::field<double>(j, "timestamp_s"), detail::opt_field(j, "caption"),
                                  detail::opt_field(j, "image_uri")});
        lines.keyframes.push_back(line_no);
      } else if (kind == "ocr") {
        data.ocr.push_back({detail::field<std::string>(j, "doc_id"), detail::field<std::string>(j, "keyframe_id"),
                            detail::field<std::string>(j, "text"), detail::opt_field(j, "language_tag")});
        lines.ocr.push_back(line_no);
      } else if (kind == "asr") {
        data.asr.push_back({detail::field<std::string>(j, "segment_id"), detail::field<std::string>(j, "video_id"),
                            detail::field<double>(j, "start_s"), detail::field<double>(j, "end_s"),
                            detail::field<std::string>(j, "text"),
                            detail::opt_field(j, "aligned_keyframe_id").value_or("")});
        lines.asr.push_back(line_no);
      } else {
        throw std::invalid_argument("unknown kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw CorpusError(K::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  if (!saw_meta) {
    throw CorpusError(K::MalformedLine, "manifest has no meta line", line_no == 0 ? 1 : line_no);
  }
  for (std::size_t s = 0; s < 2; ++s) {
    data.embeddings[s].dim = dims[s];
    if (s < files.size()) {
      std::filesystem::path p = files[s];
      if (p.is_relative()) {
        p = path.parent_path() / p;
      }
      auto emb = load_embeddings(p, kSpaces[s]);
      if (emb.dim != dims[s]) {
        throw CorpusError(K::DimensionMismatch, std::string(to_string(kSpaces[s])) + ": expected dim " +
                                                    std::to_string(dims[s]) + ", got " + std::to_string(emb.dim));
      }
      data.embeddings[s] = std::move(emb);
    }
  }
  return CorpusStore::build(std::move(data), &lines);
}

}  // namespace momentsearch
