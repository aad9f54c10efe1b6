#pragma once

// Seeded synthetic corpus with planted retrieval targets.
//
// Every video gets a run of shots (1-3 keyframes each) with captions drawn
// from a fixed vocabulary. `events_per_video` keyframes in consecutive shots
// become planted targets: each has a corpus-unique caption, a unique on-screen
// string and a unique spoken phrase. Together they form the video's planted
// event sequence. For sequences of two or more events, a decoy keyframe at
// least 30 s before the first target repeats the first target's caption, so
// only the temporal decay separates the planted sequence from the decoy one.
//
// Output is a pure function of (seed, n_videos, events_per_video).

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentsearch/corpus.hpp"
#include "momentsearch/embedder.hpp"
#include "momentsearch/text.hpp"

namespace momentsearch {

struct PlantedTarget {
  std::string keyframe_id;
  std::string video_id;
  double timestamp_s = 0.0;
  std::string caption;
  std::string visual_query;
  std::string ocr_text;
  std::string ocr_query;
  std::string asr_phrase;
  std::string asr_query;
};

struct PlantedSequence {
  std::string video_id;
  std::vector<std::string> events;        // per-event query text
  std::vector<std::string> keyframe_ids;  // expected assignment
  std::string query;                      // "e1 -> e2 -> ..."
  std::optional<std::string> decoy_keyframe_id;
};

struct GroundTruth {
  std::uint64_t seed = 0;
  std::size_t n_videos = 0;
  std::size_t events_per_video = 0;
  std::vector<PlantedTarget> targets;
  std::vector<PlantedSequence> sequences;
  // every record id the generator emitted, by kind
  std::vector<std::string> video_ids, shot_ids, keyframe_ids, ocr_ids, asr_ids;
  // lowercase words the generator wrote into OCR / ASR text
  std::set<std::string> ocr_terms, asr_terms;
};

struct GeneratedCorpus {
  CorpusData data;
  GroundTruth truth;
};

namespace gen_detail {

/// Platform-independent draws on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  template <typename C>
  const auto& pick(const C& c) {
    return c[below(c.size())];
  }

 private:
  std::mt19937_64 eng_;
};

inline const std::array<std::string, 20> kSubjects{
    "man",   "woman",   "child",  "dog",    "cat",       "worker", "reporter", "farmer", "chef",  "soldier",
    "student", "teacher", "dancer", "singer", "fisherman", "nurse",  "pilot",    "driver", "tourist", "monk"};
inline const std::array<std::string, 15> kActions{
    "holding", "carrying", "pushing",   "painting", "repairing", "cleaning", "lifting", "watching",
    "selling", "opening",  "examining", "loading",  "throwing",  "dragging", "washing"};
inline const std::array<std::string, 11> kColors{"red",    "blue",   "green", "yellow", "white", "black",
                                                 "orange", "purple", "brown", "gray",   "pink"};
inline const std::array<std::string, 20> kObjects{
    "box",    "bicycle", "basket", "umbrella", "ladder", "kite",   "drum",  "flag",  "lantern", "suitcase",
    "bucket", "guitar",  "net",    "wheel",    "barrel", "chair",  "cart",  "blanket", "camera", "boat"};
inline const std::array<std::string, 12> kScenes{"kitchen", "market",  "street",  "beach",  "factory", "field",
                                                 "river",   "harbor",  "temple",  "stadium", "garden", "classroom"};

inline const std::array<std::string, 20> kOcrWords{
    "program", "financial", "support", "notice",  "grand", "opening", "festival", "sale",    "exit",   "warning",
    "welcome", "station",   "market",  "news",    "live",  "breaking", "weather", "traffic", "school", "hospital"};
inline const std::array<std::string, 10> kOcrWordsVi{"chương", "trình", "hỗ",   "trợ",  "tin",
                                                     "tức",    "thời",  "tiết", "giao", "thông"};
inline const std::array<std::string, 30> kSpeechWords{
    "today",  "weather", "forecast", "market", "prices", "rising",  "falling", "players", "winner", "season",
    "city",   "council", "budget",   "river",  "flood",  "harvest", "festival", "concert", "tickets", "traffic",
    "school", "exam",    "results",  "bridge", "repair", "station", "delay",   "rain",    "storm",   "victory"};

inline std::string upper_ascii(std::string s) {
  for (auto& c : s) {
    if (c >= 'a' && c <= 'z') {
      c = static_cast<char>(c - 'a' + 'A');
    }
  }
  return s;
}

inline std::string pad_id(std::size_t n, int width) {
  std::string s = std::to_string(n);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace gen_detail

inline GeneratedCorpus gen_corpus(std::uint64_t seed, std::size_t n_videos, std::size_t events_per_video,
                                  const ReferenceEmbedder& embedder = ReferenceEmbedder()) {
  using namespace gen_detail;
  if (n_videos == 0) {
    throw std::invalid_argument("gen_corpus: n_videos must be >= 1");
  }
  Rng rng(seed);
  GeneratedCorpus out;
  auto& data = out.data;
  auto& truth = out.truth;
  truth.seed = seed;
  truth.n_videos = n_videos;
  truth.events_per_video = events_per_video;

  std::set<std::string> used_captions;
  std::set<std::string> target_captions;
  std::set<std::string> used_phrases;
  std::size_t ocr_counter = 0;
  std::size_t asr_counter = 0;
  std::size_t target_counter = 0;
  const std::size_t k = events_per_video;

  auto make_caption = [&](const std::string& subject, const std::string& scene) {
    return "a " + subject + " " + rng.pick(kActions) + " a " + rng.pick(kColors) + " " + rng.pick(kObjects) +
           " in the " + scene;
  };
  auto add_ocr = [&](const Keyframe& kf, const std::vector<std::string>& words, bool vi) {
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) {
        text += ' ';
      }
      text += vi ? words[i] : upper_ascii(words[i]);
      truth.ocr_terms.insert(words[i]);
    }
    const std::string id = "ocr_" + pad_id(ocr_counter++, 6);
    data.ocr.push_back({id, kf.keyframe_id, text, vi ? std::optional<std::string>("vi") : std::optional<std::string>("en")});
    truth.ocr_ids.push_back(id);
    return text;
  };
  auto add_asr = [&](const Keyframe& kf, double duration, const std::vector<std::string>& words) {
    std::string text;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) {
        text += ' ';
      }
      text += words[i];
      truth.asr_terms.insert(words[i]);
    }
    const std::string id = "asr_" + pad_id(asr_counter++, 6);
    const double start = std::max(0.0, kf.timestamp_s - 0.5);
    const double end = std::min(duration, kf.timestamp_s + 1.0);
    data.asr.push_back({id, kf.video_id, start, end, text, kf.keyframe_id});
    truth.asr_ids.push_back(id);
    return text;
  };

  for (std::size_t v = 0; v < n_videos; ++v) {
    const std::string video_id = "v" + pad_id(v + 1, 4);
    const std::size_t n_shots = std::max<std::size_t>(12 + rng.below(7), k + 8);
    std::vector<std::pair<double, double>> spans;
    double t = 0.0;
    for (std::size_t s = 0; s < n_shots; ++s) {
      const double len = std::round(rng.range(6.0, 12.0) * 100.0) / 100.0;
      spans.emplace_back(t, t + len);
      t += len;
    }
    const double duration = t;
    data.videos.push_back({video_id, "Synthetic video " + std::to_string(v + 1), duration});
    truth.video_ids.push_back(video_id);

    const std::size_t first_kf = data.keyframes.size();
    std::vector<std::vector<std::size_t>> shot_kfs(n_shots);
    for (std::size_t s = 0; s < n_shots; ++s) {
      const std::string shot_id = video_id + "_s" + pad_id(s + 1, 2);
      data.shots.push_back({shot_id, video_id, spans[s].first, spans[s].second});
      truth.shot_ids.push_back(shot_id);
      const std::string subject = rng.pick(kSubjects);
      const std::string scene = rng.pick(kScenes);
      const std::size_t n_kf = 1 + rng.below(3);
      for (std::size_t j = 0; j < n_kf; ++j) {
        const double len = spans[s].second - spans[s].first;
        const double ts = std::round((spans[s].first + len * static_cast<double>(j + 1) / static_cast<double>(n_kf + 1)) * 1000.0) / 1000.0;
        Keyframe kf;
        kf.keyframe_id = shot_id + "_k" + std::to_string(j + 1);
        kf.shot_id = shot_id;
        kf.video_id = video_id;
        kf.timestamp_s = ts;
        std::string caption;
        do {
          caption = make_caption(subject, scene);
        } while (target_captions.contains(caption));
        kf.caption = std::move(caption);
        shot_kfs[s].push_back(data.keyframes.size());
        data.keyframes.push_back(std::move(kf));
      }
    }

    for (std::size_t i = first_kf; i < data.keyframes.size(); ++i) {
      used_captions.insert(*data.keyframes[i].caption);
    }

    // planted targets in consecutive shots, decoy well before the first one
    std::vector<std::size_t> target_kfs;
    std::optional<std::size_t> decoy_kf;
    if (k > 0) {
      const std::size_t s0 = 5 + rng.below(n_shots - k - 5 + 1);
      for (std::size_t e = 0; e < k; ++e) {
        const auto& cands = shot_kfs[s0 + e];
        target_kfs.push_back(cands[rng.below(cands.size())]);
      }
      if (k >= 2) {
        std::size_t ds = rng.below(s0 - 4);
        const double limit = data.keyframes[target_kfs[0]].timestamp_s - 30.0;
        while (ds > 0 && data.keyframes[shot_kfs[ds].front()].timestamp_s > limit) {
          --ds;
        }
        const std::size_t cand = shot_kfs[ds].front();
        if (data.keyframes[cand].timestamp_s <= limit) {
          decoy_kf = cand;
        }
      }
    }
    for (std::size_t idx : target_kfs) {
      std::string caption;
      do {
        caption = make_caption(rng.pick(kSubjects), rng.pick(kScenes));
      } while (used_captions.contains(caption) || target_captions.contains(caption));
      target_captions.insert(caption);
      data.keyframes[idx].caption = caption;
    }
    if (decoy_kf) {
      data.keyframes[*decoy_kf].caption = data.keyframes[target_kfs[0]].caption;
    }

    PlantedSequence seq;
    seq.video_id = video_id;
    if (decoy_kf) {
      seq.decoy_keyframe_id = data.keyframes[*decoy_kf].keyframe_id;
    }
    for (std::size_t idx : target_kfs) {
      const Keyframe& kf = data.keyframes[idx];
      PlantedTarget tgt;
      tgt.keyframe_id = kf.keyframe_id;
      tgt.video_id = video_id;
      tgt.timestamp_s = kf.timestamp_s;
      tgt.caption = *kf.caption;
      tgt.visual_query = *kf.caption;
      const std::vector<std::string> words{rng.pick(kOcrWords), rng.pick(kOcrWords),
                                           std::to_string(1000 + target_counter)};
      tgt.ocr_text = add_ocr(kf, words, false);
      tgt.ocr_query = *kf.caption + " \"" + tgt.ocr_text + "\"";
      std::vector<std::string> phrase;
      std::string joined;
      do {
        phrase = {rng.pick(kSpeechWords), rng.pick(kSpeechWords), rng.pick(kSpeechWords), rng.pick(kSpeechWords)};
        joined = text::join(phrase);
      } while (used_phrases.contains(joined));
      used_phrases.insert(joined);
      tgt.asr_phrase = add_asr(kf, duration, phrase);
      tgt.asr_query = "the narrator says " + tgt.asr_phrase;
      ++target_counter;
      seq.events.push_back(tgt.visual_query);
      seq.keyframe_ids.push_back(kf.keyframe_id);
      truth.targets.push_back(std::move(tgt));
    }
    if (!target_kfs.empty()) {
      seq.query = text::join(seq.events, " -> ");
      truth.sequences.push_back(std::move(seq));
    }

    // background text on other keyframes
    for (std::size_t i = first_kf; i < data.keyframes.size(); ++i) {
      if (std::find(target_kfs.begin(), target_kfs.end(), i) != target_kfs.end()) {
        continue;
      }
      const Keyframe kf = data.keyframes[i];
      if (rng.uniform() < 0.35) {
        if (rng.uniform() < 0.2) {
          add_ocr(kf, {rng.pick(kOcrWordsVi), rng.pick(kOcrWordsVi), rng.pick(kOcrWordsVi)}, true);
        } else {
          add_ocr(kf, {rng.pick(kOcrWords), rng.pick(kOcrWords), std::to_string(10 + rng.below(900))}, false);
        }
      }
      if (rng.uniform() < 0.4) {
        add_asr(kf, duration, {rng.pick(kSpeechWords), rng.pick(kSpeechWords), rng.pick(kSpeechWords)});
      }
    }
  }

  for (const auto& kf : data.keyframes) {
    truth.keyframe_ids.push_back(kf.keyframe_id);
  }
  for (Space s : kSpaces) {
    auto& emb = data.embeddings[index_of(s)];
    emb.dim = embedder.dim(s);
    for (const auto& kf : data.keyframes) {
      emb.vectors.emplace(kf.keyframe_id, *embedder.embed(*kf.caption, s));
    }
  }
  return out;
}

inline nlohmann::ordered_json truth_to_json(const GroundTruth& t) {
  nlohmann::ordered_json j;
  j["seed"] = t.seed;
  j["n_videos"] = t.n_videos;
  j["events_per_video"] = t.events_per_video;
  j["targets"] = nlohmann::ordered_json::array();
  for (const auto& x : t.targets) {
    j["targets"].push_back({{"keyframe_id", x.keyframe_id},
                            {"video_id", x.video_id},
                            {"timestamp_s", x.timestamp_s},
                            {"caption", x.caption},
                            {"visual_query", x.visual_query},
                            {"ocr_text", x.ocr_text},
                            {"ocr_query", x.ocr_query},
                            {"asr_phrase", x.asr_phrase},
                            {"asr_query", x.asr_query}});
  }
  j["sequences"] = nlohmann::ordered_json::array();
  for (const auto& s : t.sequences) {
    j["sequences"].push_back({{"video_id", s.video_id},
                              {"query", s.query},
                              {"events", s.events},
                              {"keyframe_ids", s.keyframe_ids},
                              {"decoy_keyframe_id", s.decoy_keyframe_id ? nlohmann::ordered_json(*s.decoy_keyframe_id)
                                                                        : nlohmann::ordered_json(nullptr)}});
  }
  j["records"] = {{"videos", t.video_ids},
                  {"shots", t.shot_ids},
                  {"keyframes", t.keyframe_ids},
                  {"ocr", t.ocr_ids},
                  {"asr", t.asr_ids}};
  j["ocr_terms"] = t.ocr_terms;
  j["asr_terms"] = t.asr_terms;
  return j;
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  GroundTruth t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.n_videos = j.at("n_videos").get<std::size_t>();
  t.events_per_video = j.at("events_per_video").get<std::size_t>();
  for (const auto& x : j.at("targets")) {
    t.targets.push_back({x.at("keyframe_id"), x.at("video_id"), x.at("timestamp_s"), x.at("caption"),
                         x.at("visual_query"), x.at("ocr_text"), x.at("ocr_query"), x.at("asr_phrase"),
                         x.at("asr_query")});
  }
  for (const auto& s : j.at("sequences")) {
    PlantedSequence seq;
    seq.video_id = s.at("video_id");
    seq.query = s.at("query");
    seq.events = s.at("events").get<std::vector<std::string>>();
    seq.keyframe_ids = s.at("keyframe_ids").get<std::vector<std::string>>();
    if (!s.at("decoy_keyframe_id").is_null()) {
      seq.decoy_keyframe_id = s.at("decoy_keyframe_id").get<std::string>();
    }
    t.sequences.push_back(std::move(seq));
  }
  const auto& r = j.at("records");
  t.video_ids = r.at("videos").get<std::vector<std::string>>();
  t.shot_ids = r.at("shots").get<std::vector<std::string>>();
  t.keyframe_ids = r.at("keyframes").get<std::vector<std::string>>();
  t.ocr_ids = r.at("ocr").get<std::vector<std::string>>();
  t.asr_ids = r.at("asr").get<std::vector<std::string>>();
  t.ocr_terms = j.at("ocr_terms").get<std::set<std::string>>();
  t.asr_terms = j.at("asr_terms").get<std::set<std::string>>();
  return t;
}

/// Writes manifest.jsonl, both sidecars and truth.json; returns the manifest path.
inline std::filesystem::path write_generated(const GeneratedCorpus& gc, const std::filesystem::path& dir) {
  const auto manifest = write_manifest(gc.data, dir);
  std::ofstream out(dir / "truth.json", std::ios::binary | std::ios::trunc);
  out << truth_to_json(gc.truth).dump(2) << '\n';
  return manifest;
}

}  // namespace momentsearch
