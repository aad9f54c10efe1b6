#pragma once

// Exact cosine top-k over the two keyframe embedding spaces, and
// Score-Reflected Reciprocal Rank Fusion (SRRF) of the two result lists.
//
// SRRF(f) = sum_m w_m * norm_m(f) / (k0 + rank_m(f))
//
// i.e. the usual 1/(k0 + rank) kernel scaled by the min-max normalized cosine
// of f within list m, so two frames at the same rank still differ by how
// strongly they matched. Frames missing from a list contribute 0 for it.

#include <algorithm>
#include <array>
#include <cstddef>
#include <future>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "momentsearch/corpus.hpp"
#include "momentsearch/fusion.hpp"

namespace momentsearch {

struct SpaceHit {
  std::string keyframe_id;
  double cosine = 0.0;
  std::size_t rank = 0;  // 1-based
  bool operator==(const SpaceHit&) const = default;
};

struct SrrfConfig {
  double k0 = 60.0;
  std::array<double, 2> space_weights{1.0, 1.0};
};

class VectorIndexError : public std::runtime_error {
 public:
  enum class Kind { DimensionMismatch, EmptyIndex, InvalidArgument };
  VectorIndexError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Flat (brute-force) index over one space. Vectors are stored row-major.
class FlatIndex {
 public:
  FlatIndex() = default;
  FlatIndex(std::uint32_t dim, std::vector<std::string> ids, std::vector<float> data)
      : dim_(dim), ids_(std::move(ids)), data_(std::move(data)) {
    if (data_.size() != ids_.size() * static_cast<std::size_t>(dim_)) {
      throw VectorIndexError(VectorIndexError::Kind::InvalidArgument, "FlatIndex: data size does not match ids x dim");
    }
  }

  static FlatIndex from_store(const CorpusStore& store, Space space) {
    const auto& m = store.matrix(space);
    if (m.empty()) {
      return FlatIndex(m.dim, {}, {});
    }
    std::vector<std::string> ids;
    ids.reserve(store.keyframes().size());
    for (const auto& kf : store.keyframes()) {
      ids.push_back(kf.keyframe_id);
    }
    return FlatIndex(m.dim, std::move(ids), m.data);
  }

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }

  /// Exactly min(top_k, size()) hits, cosine descending, ties by id.
  std::vector<SpaceHit> search(std::span<const float> query, std::size_t top_k) const {
    if (top_k == 0) {
      throw VectorIndexError(VectorIndexError::Kind::InvalidArgument, "top_k must be >= 1");
    }
    if (ids_.empty()) {
      throw VectorIndexError(VectorIndexError::Kind::EmptyIndex, "vector index is empty");
    }
    if (query.size() != dim_) {
      throw VectorIndexError(VectorIndexError::Kind::DimensionMismatch,
                             "query dim " + std::to_string(query.size()) + " != index dim " + std::to_string(dim_));
    }
    std::vector<double> scores(ids_.size());
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      const float* row = data_.data() + r * dim_;
      double dot = 0.0;
      for (std::uint32_t d = 0; d < dim_; ++d) {
        dot += static_cast<double>(row[d]) * static_cast<double>(query[d]);
      }
      scores[r] = dot;
    }
    std::vector<std::size_t> order(ids_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t k = std::min(top_k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return ranks_before(scores[a], ids_[a], scores[b], ids_[b]); });
    std::vector<SpaceHit> hits;
    hits.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      hits.push_back({ids_[order[i]], scores[order[i]], i + 1});
    }
    return hits;
  }

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
};

/// Both spaces of one corpus.
struct VectorIndex {
  std::array<FlatIndex, 2> spaces;

  static VectorIndex build(const CorpusStore& store) {
    return {{FlatIndex::from_store(store, Space::SemA), FlatIndex::from_store(store, Space::SemB)}};
  }
  const FlatIndex& operator[](Space s) const { return spaces[index_of(s)]; }
};

inline std::vector<SpaceHit> search_space(const VectorIndex& index, std::span<const float> query, Space space,
                                          std::size_t top_k) {
  return index[space].search(query, top_k);
}

/// Keeps each keyframe's best cosine across several hit lists and re-ranks.
/// Used to merge the hit lists of several query expansions in one space.
inline std::vector<SpaceHit> merge_hits_by_max(const std::vector<std::vector<SpaceHit>>& lists, std::size_t top_k) {
  std::unordered_map<std::string, double> best;
  for (const auto& list : lists) {
    for (const auto& h : list) {
      auto [it, fresh] = best.emplace(h.keyframe_id, h.cosine);
      if (!fresh) {
        it->second = std::max(it->second, h.cosine);
      }
    }
  }
  std::vector<SpaceHit> out;
  out.reserve(best.size());
  for (auto& [id, c] : best) {
    out.push_back({id, c, 0});
  }
  std::sort(out.begin(), out.end(),
            [](const SpaceHit& a, const SpaceHit& b) { return ranks_before(a.cosine, a.keyframe_id, b.cosine, b.keyframe_id); });
  if (out.size() > top_k) {
    out.resize(top_k);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = i + 1;
  }
  return out;
}

inline std::vector<IdScore> srrf_fuse(const std::vector<SpaceHit>& list_a, const std::vector<SpaceHit>& list_b,
                                      const SrrfConfig& cfg, const NormalizationConfig& norm = {}) {
  std::unordered_map<std::string, double> acc;
  std::vector<std::string> order;
  const std::array<const std::vector<SpaceHit>*, 2> lists{&list_a, &list_b};
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& list = *lists[s];
    std::vector<IdScore> raw;
    raw.reserve(list.size());
    for (const auto& h : list) {
      raw.push_back({h.keyframe_id, h.cosine});
    }
    const auto normalized = minmax_normalize(raw, norm);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const double contrib = cfg.space_weights[s] * normalized[i].score / (cfg.k0 + static_cast<double>(list[i].rank));
      auto [it, fresh] = acc.emplace(list[i].keyframe_id, 0.0);
      if (fresh) {
        order.push_back(list[i].keyframe_id);
      }
      it->second += contrib;
    }
  }
  std::vector<IdScore> out;
  out.reserve(order.size());
  for (auto& id : order) {
    out.push_back({id, acc[id]});
  }
  std::sort(out.begin(), out.end(),
            [](const IdScore& a, const IdScore& b) { return ranks_before(a.score, a.id, b.score, b.id); });
  return out;
}

/// A first-stage visual candidate: SRRF score plus the cosines behind it.
struct VisualCandidate {
  std::string keyframe_id;
  double srrf = 0.0;
  std::array<std::optional<double>, 2> cosine{};
};

struct FirstStageConfig {
  std::size_t top_k_per_space = 100;
  std::size_t keep = 100;
  SrrfConfig srrf;
};

/// Searches both spaces (concurrently) with one or more query vectors per
/// space, merges expansions by per-keyframe max, fuses with SRRF and keeps the
/// best `keep`. `queries[s]` may hold several vectors for space s.
inline std::vector<VisualCandidate> first_stage(const VectorIndex& index,
                                                const std::array<std::vector<std::vector<float>>, 2>& queries,
                                                const FirstStageConfig& cfg, const NormalizationConfig& norm = {}) {
  if (cfg.keep > cfg.top_k_per_space * 2) {
    throw VectorIndexError(VectorIndexError::Kind::InvalidArgument, "keep must be <= 2 * top_k_per_space");
  }
  auto run_space = [&](Space s) {
    std::vector<std::vector<SpaceHit>> lists;
    for (const auto& q : queries[index_of(s)]) {
      lists.push_back(index[s].search(q, cfg.top_k_per_space));
    }
    return lists.size() == 1 ? lists.front() : merge_hits_by_max(lists, cfg.top_k_per_space);
  };
  auto fut_a = std::async(std::launch::async, run_space, Space::SemA);
  auto hits_b = run_space(Space::SemB);
  auto hits_a = fut_a.get();

  const auto fused = srrf_fuse(hits_a, hits_b, cfg.srrf, norm);
  std::unordered_map<std::string, std::array<std::optional<double>, 2>> cos;
  for (const auto& h : hits_a) {
    cos[h.keyframe_id][0] = h.cosine;
  }
  for (const auto& h : hits_b) {
    cos[h.keyframe_id][1] = h.cosine;
  }
  std::vector<VisualCandidate> out;
  const std::size_t n = std::min(cfg.keep, fused.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({fused[i].id, fused[i].score, cos[fused[i].id]});
  }
  return out;
}

}  // namespace momentsearch
