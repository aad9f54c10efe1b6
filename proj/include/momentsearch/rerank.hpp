#pragma once

// Second stage of the visual cascade: a cross scorer re-scores the first
// `rerank_depth` candidates. Scorer failures never fail the query; the
// affected candidates keep their first-stage score and the outcome is
// flagged degraded.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "momentsearch/corpus.hpp"
#include "momentsearch/fusion.hpp"
#include "momentsearch/text.hpp"

namespace momentsearch {

/// Scores for one batch; nullopt marks a per-item failure.
struct ScoreBatch {
  std::vector<std::optional<double>> scores;
  bool degraded = false;
  std::string error;
};

/// Joint (query, keyframe) scorer producing values in [0, 1].
/// Implementations must be safe to call from concurrent queries.
class CrossScorer {
 public:
  virtual ~CrossScorer() = default;
  virtual ScoreBatch score_batch(std::string_view query, std::span<const Keyframe* const> items) const = 0;

  std::optional<double> score(std::string_view query, const Keyframe& kf) const {
    const Keyframe* one[] = {&kf};
    auto batch = score_batch(query, one);
    return batch.scores.empty() ? std::nullopt : batch.scores.front();
  }
};

/// Jaccard overlap of the normalized token sets of query and caption.
inline double reference_score(std::string_view query, const Keyframe& kf) {
  if (!kf.caption) {
    return 0.0;
  }
  const auto qa = text::tokenize(query);
  const auto ca = text::tokenize(*kf.caption);
  const std::unordered_set<std::string> q(qa.begin(), qa.end());
  const std::unordered_set<std::string> c(ca.begin(), ca.end());
  if (q.empty() && c.empty()) {
    return 0.0;
  }
  std::size_t inter = 0;
  for (const auto& t : q) {
    inter += c.count(t);
  }
  const std::size_t uni = q.size() + c.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Deterministic caption-based stand-in for an image-text matching model.
class ReferenceScorer final : public CrossScorer {
 public:
  ScoreBatch score_batch(std::string_view query, std::span<const Keyframe* const> items) const override {
    ScoreBatch out;
    out.scores.reserve(items.size());
    for (const Keyframe* kf : items) {
      out.scores.emplace_back(reference_score(query, *kf));
    }
    return out;
  }
};

/// Asks `primary` first and re-scores its failures with `fallback`,
/// flagging the batch degraded whenever that happens.
class FallbackScorer final : public CrossScorer {
 public:
  FallbackScorer(std::shared_ptr<const CrossScorer> primary, std::shared_ptr<const CrossScorer> fallback)
      : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

  ScoreBatch score_batch(std::string_view query, std::span<const Keyframe* const> items) const override {
    ScoreBatch out = primary_->score_batch(query, items);
    out.scores.resize(items.size());
    std::vector<const Keyframe*> missing;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!out.scores[i]) {
        missing.push_back(items[i]);
        where.push_back(i);
      }
    }
    if (missing.empty()) {
      return out;
    }
    out.degraded = true;
    auto rescue = fallback_->score_batch(query, missing);
    for (std::size_t j = 0; j < where.size() && j < rescue.scores.size(); ++j) {
      out.scores[where[j]] = rescue.scores[j];
    }
    return out;
  }

 private:
  std::shared_ptr<const CrossScorer> primary_;
  std::shared_ptr<const CrossScorer> fallback_;
};

enum class BlendMode { Replace, Multiply };

struct CascadeConfig {
  std::size_t rerank_depth = 100;
  BlendMode blend = BlendMode::Replace;
};

struct RerankItem {
  std::string keyframe_id;
  double score = 0.0;                  // first-stage score on input, blended score on output
  std::optional<double> cross_score;   // scorer output when it succeeded
};

struct RerankOutcome {
  std::vector<RerankItem> items;
  bool degraded = false;
  std::size_t scorer_calls = 0;  // items sent to the scorer
  std::string error;
};

/// `items` must be sorted by first-stage score. Output is re-sorted
/// descending with ties by keyframe id.
inline RerankOutcome rerank_candidates(std::vector<RerankItem> items, std::string_view query_text,
                                       const CrossScorer& scorer, const CascadeConfig& cfg,
                                       const CorpusStore& store) {
  RerankOutcome out;
  const std::size_t depth = std::min(cfg.rerank_depth, items.size());
  std::vector<const Keyframe*> kfs;
  std::vector<std::size_t> slot;
  kfs.reserve(depth);
  for (std::size_t i = 0; i < depth; ++i) {
    if (const Keyframe* kf = store.find_keyframe(items[i].keyframe_id)) {
      kfs.push_back(kf);
      slot.push_back(i);
    } else {
      out.degraded = true;
    }
  }
  if (!kfs.empty()) {
    ScoreBatch batch = scorer.score_batch(query_text, kfs);
    out.scorer_calls = kfs.size();
    out.degraded = out.degraded || batch.degraded;
    out.error = batch.error;
    batch.scores.resize(kfs.size());
    for (std::size_t j = 0; j < kfs.size(); ++j) {
      auto& item = items[slot[j]];
      if (!batch.scores[j]) {
        out.degraded = true;
        continue;
      }
      const double b = std::clamp(*batch.scores[j], 0.0, 1.0);
      item.cross_score = b;
      item.score = cfg.blend == BlendMode::Replace ? b : item.score * b;
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const RerankItem& a, const RerankItem& b) {
    return ranks_before(a.score, a.keyframe_id, b.score, b.keyframe_id);
  });
  out.items = std::move(items);
  return out;
}

}  // namespace momentsearch
