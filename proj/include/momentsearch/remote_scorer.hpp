#pragma once

// Cross scorer backed by an external image-text matching service.
//
// Request:  {"query": str, "items": [{"keyframe_id", "image_uri", "caption"}]}
// Response: {"scores": [{"keyframe_id", "score"}]}
//
// Scores are clamped to [0, 1]. Transport errors, timeouts and malformed
// replies turn into per-item failures rather than exceptions.

#include <string>
#include <unordered_map>

#include "momentsearch/http_client.hpp"
#include "momentsearch/rerank.hpp"

namespace momentsearch {

struct RemoteScorerConfig {
  std::string endpoint;
  double timeout_s = 10.0;
};

class RemoteScorer final : public CrossScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig cfg) : cfg_(std::move(cfg)) {}

  ScoreBatch score_batch(std::string_view query, std::span<const Keyframe* const> items) const override {
    ScoreBatch out;
    out.scores.assign(items.size(), std::nullopt);
    if (items.empty()) {
      return out;
    }
    nlohmann::json req;
    req["query"] = std::string(query);
    req["items"] = nlohmann::json::array();
    for (const Keyframe* kf : items) {
      req["items"].push_back({{"keyframe_id", kf->keyframe_id},
                              {"image_uri", kf->image_uri ? nlohmann::json(*kf->image_uri) : nlohmann::json(nullptr)},
                              {"caption", kf->caption ? nlohmann::json(*kf->caption) : nlohmann::json(nullptr)}});
    }
    try {
      const auto res = http::post_json(cfg_.endpoint, req, cfg_.timeout_s);
      std::unordered_map<std::string, double> by_id;
      for (const auto& s : res.at("scores")) {
        const auto& v = s.at("score");
        if (v.is_number()) {
          by_id[s.at("keyframe_id").get<std::string>()] = std::clamp(v.get<double>(), 0.0, 1.0);
        }
      }
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (auto it = by_id.find(items[i]->keyframe_id); it != by_id.end()) {
          out.scores[i] = it->second;
        }
      }
    } catch (const std::exception& e) {
      out.error = std::string("remote scorer: ") + e.what();
    }
    for (const auto& s : out.scores) {
      if (!s) {
        out.degraded = true;
      }
    }
    return out;
  }

 private:
  RemoteScorerConfig cfg_;
};

}  // namespace momentsearch
