#pragma once

// Min-max normalization of per-modality scores and their weighted late fusion.
//
//   norm(f) = (s(f) - min) / (max - min + eps)
//   S(f)    = sum_m w_m * norm_m(f)
//
// A single-element list normalizes to 1.0 (it is its own maximum). A list
// whose scores are all equal normalizes to 0.0 everywhere.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace momentsearch {

enum class Modality : std::uint8_t { Visual = 0, Ocr = 1, Asr = 2 };
inline constexpr std::array<Modality, 3> kModalities{Modality::Visual, Modality::Ocr, Modality::Asr};

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Visual: return "vis";
    case Modality::Ocr: return "ocr";
    case Modality::Asr: return "asr";
  }
  return "?";
}
inline std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

struct IdScore {
  std::string id;
  double score = 0.0;
  bool operator==(const IdScore&) const = default;
};

struct FusionWeights {
  double vis = 0.0;
  double ocr = 0.0;
  double asr = 0.0;
  std::string rationale;

  double operator[](Modality m) const {
    return m == Modality::Visual ? vis : m == Modality::Ocr ? ocr : asr;
  }
  double& operator[](Modality m) { return m == Modality::Visual ? vis : m == Modality::Ocr ? ocr : asr; }
  double sum() const { return vis + ocr + asr; }
  bool valid() const {
    auto in01 = [](double w) { return w >= 0.0 && w <= 1.0; };
    return in01(vis) && in01(ocr) && in01(asr);
  }
  bool operator==(const FusionWeights&) const = default;
};

struct NormalizationConfig {
  double epsilon = 1e-6;
};

class FusionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Order-preserving min-max rescale into [0, 1].
inline std::vector<IdScore> minmax_normalize(const std::vector<IdScore>& scores,
                                             const NormalizationConfig& cfg = {}) {
  std::vector<IdScore> out = scores;
  if (out.empty()) {
    return out;
  }
  if (out.size() == 1) {
    out[0].score = 1.0;
    return out;
  }
  const auto [lo_it, hi_it] = std::minmax_element(
      out.begin(), out.end(), [](const IdScore& a, const IdScore& b) { return a.score < b.score; });
  const double lo = lo_it->score;
  const double denom = hi_it->score - lo + cfg.epsilon;
  for (auto& s : out) {
    s.score = denom > 0.0 ? std::clamp((s.score - lo) / denom, 0.0, 1.0) : 0.0;
  }
  return out;
}

struct ScoredCandidate {
  std::string keyframe_id;
  std::array<std::optional<double>, 3> raw{};  // s_m(f), absent when the modality did not return f
  std::array<double, 3> normalized{};          // s_m^norm(f), 0 when absent
  double fused = 0.0;                           // S(f)

  std::optional<double> raw_of(Modality m) const { return raw[index_of(m)]; }
  double normalized_of(Modality m) const { return normalized[index_of(m)]; }
};

using ModalityLists = std::array<std::vector<IdScore>, 3>;

/// Descending by score, ties by ascending id.
inline bool ranks_before(double score_a, std::string_view id_a, double score_b, std::string_view id_b) {
  return score_a != score_b ? score_a > score_b : id_a < id_b;
}

/// Normalizes each modality independently and ranks the union by S(f).
/// Zero-weight modalities are skipped entirely, so dropping a list and
/// zeroing its weight give the same result.
inline std::vector<ScoredCandidate> fuse(const ModalityLists& per_modality, const FusionWeights& weights,
                                         const NormalizationConfig& cfg, std::size_t top_k) {
  if (std::all_of(per_modality.begin(), per_modality.end(), [](const auto& l) { return l.empty(); })) {
    throw FusionError("fuse: every modality list is empty");
  }
  std::vector<ScoredCandidate> out;
  std::unordered_map<std::string, std::size_t> slot;
  for (Modality m : kModalities) {
    const auto& list = per_modality[index_of(m)];
    if (weights[m] == 0.0) {
      continue;
    }
    const auto norm = minmax_normalize(list, cfg);
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto [it, fresh] = slot.emplace(list[i].id, out.size());
      if (fresh) {
        out.push_back({});
        out.back().keyframe_id = list[i].id;
      }
      auto& c = out[it->second];
      // duplicate ids within one list keep the best score
      if (!c.raw[index_of(m)] || list[i].score > *c.raw[index_of(m)]) {
        c.raw[index_of(m)] = list[i].score;
        c.normalized[index_of(m)] = norm[i].score;
      }
    }
  }
  for (auto& c : out) {
    c.fused = 0.0;
    for (Modality m : kModalities) {
      c.fused += weights[m] * c.normalized[index_of(m)];
    }
  }
  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return ranks_before(a.fused, a.keyframe_id, b.fused, b.keyframe_id);
  });
  if (out.size() > top_k) {
    out.resize(top_k);
  }
  return out;
}

}  // namespace momentsearch
