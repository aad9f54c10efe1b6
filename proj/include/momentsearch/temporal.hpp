#pragma once

// Multi-event sequence search.
//
// A sequence assigns one keyframe per event, all from the same video, with
// strictly increasing timestamps. Its cumulative score is additive with an
// exponential decay on every transition gap:
//
//   lambda_i = exp(-alpha * (t_i - t_{i-1})),  lambda_1 = 1
//   SS       = sum_i s_i * lambda_i
//
// Beam search keeps the best `beam_width` partial sequences per video at each
// event. finalize() then gates every event with a cross-scorer value b_i:
//
//   S_i^final = s_i * lambda_i * b_i,   SS^final = sum_i S_i^final

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "momentsearch/corpus.hpp"
#include "momentsearch/rerank.hpp"

namespace momentsearch {

struct EventCandidate {
  std::string keyframe_id;
  std::string video_id;
  double t = 0.0;
  double s = 0.0;
  bool operator==(const EventCandidate&) const = default;
};

struct TemporalConfig {
  double alpha = 0.01;
  std::size_t beam_width = 8;
  std::size_t per_event_top_m = 20;
  std::size_t max_sequences = 5;
};

class TemporalError : public std::runtime_error {
 public:
  enum class Kind { NegativeGap, NoValidSequence, InvalidArgument };
  TemporalError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline double decay(double alpha, double dt) {
  if (dt < 0.0) {
    throw TemporalError(TemporalError::Kind::NegativeGap, "decay: negative time gap");
  }
  return std::exp(-alpha * dt);
}

struct SequenceEvent {
  EventCandidate candidate;
  double lambda = 1.0;
  bool operator==(const SequenceEvent&) const = default;
};

struct SequenceState {
  std::string video_id;
  std::vector<SequenceEvent> events;
  double cumulative = 0.0;
  bool operator==(const SequenceState&) const = default;
};

/// Ranking order for sequences: higher score, then earlier last timestamp,
/// then lexicographically smaller keyframe-id sequence, then video id.
inline bool sequence_before(const SequenceState& a, const SequenceState& b) {
  if (a.cumulative != b.cumulative) {
    return a.cumulative > b.cumulative;
  }
  const double ta = a.events.empty() ? 0.0 : a.events.back().candidate.t;
  const double tb = b.events.empty() ? 0.0 : b.events.back().candidate.t;
  if (ta != tb) {
    return ta < tb;
  }
  const std::size_t n = std::min(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ia = a.events[i].candidate.keyframe_id;
    const auto& ib = b.events[i].candidate.keyframe_id;
    if (ia != ib) {
      return ia < ib;
    }
  }
  if (a.events.size() != b.events.size()) {
    return a.events.size() < b.events.size();
  }
  return a.video_id < b.video_id;
}

namespace detail {

inline void keep_top(std::vector<SequenceState>& beams, std::size_t width) {
  if (beams.size() > width) {
    std::partial_sort(beams.begin(), beams.begin() + static_cast<std::ptrdiff_t>(width), beams.end(), sequence_before);
    beams.resize(width);
  } else {
    std::sort(beams.begin(), beams.end(), sequence_before);
  }
}

}  // namespace detail

/// `per_event[i]` lists the candidates for event i (any mix of videos).
inline std::vector<SequenceState> beam_search(const std::vector<std::vector<EventCandidate>>& per_event,
                                              const TemporalConfig& cfg) {
  if (per_event.empty()) {
    throw TemporalError(TemporalError::Kind::InvalidArgument, "beam_search: no events");
  }
  if (cfg.beam_width == 0 || cfg.alpha < 0.0) {
    throw TemporalError(TemporalError::Kind::InvalidArgument, "beam_search: beam_width >= 1 and alpha >= 0 required");
  }
  const std::size_t k = per_event.size();
  // video -> event -> candidates
  std::map<std::string, std::vector<std::vector<const EventCandidate*>>> by_video;
  for (std::size_t i = 0; i < k; ++i) {
    for (const auto& c : per_event[i]) {
      auto& slots = by_video[c.video_id];
      slots.resize(k);
      slots[i].push_back(&c);
    }
  }

  std::vector<SequenceState> finished;
  for (const auto& [video, slots] : by_video) {
    if (std::any_of(slots.begin(), slots.end(), [](const auto& s) { return s.empty(); })) {
      continue;
    }
    std::vector<SequenceState> beams;
    for (const EventCandidate* c : slots[0]) {
      beams.push_back({video, {{*c, 1.0}}, c->s});
    }
    detail::keep_top(beams, cfg.beam_width);
    for (std::size_t i = 1; i < k && !beams.empty(); ++i) {
      std::vector<SequenceState> next;
      for (const auto& beam : beams) {
        const double last_t = beam.events.back().candidate.t;
        for (const EventCandidate* c : slots[i]) {
          if (!(c->t > last_t)) {
            continue;
          }
          const double lambda = decay(cfg.alpha, c->t - last_t);
          SequenceState ext = beam;
          ext.events.push_back({*c, lambda});
          ext.cumulative += c->s * lambda;
          next.push_back(std::move(ext));
        }
      }
      detail::keep_top(next, cfg.beam_width);
      beams = std::move(next);
    }
    for (auto& b : beams) {
      finished.push_back(std::move(b));
    }
  }
  if (finished.empty()) {
    throw TemporalError(TemporalError::Kind::NoValidSequence, "no video admits a time-ordered assignment");
  }
  std::sort(finished.begin(), finished.end(), sequence_before);
  if (finished.size() > cfg.max_sequences) {
    finished.resize(cfg.max_sequences);
  }
  return finished;
}

struct FinalEvent {
  EventCandidate candidate;
  double lambda = 1.0;
  double b = 1.0;
  double final_score = 0.0;
};

struct FinalSequence {
  std::string video_id;
  std::vector<FinalEvent> events;
  double cumulative = 0.0;   // SS from the beam
  double total_final = 0.0;  // SS^final
  double duration_s = 0.0;
};

struct FinalizeOutcome {
  std::vector<FinalSequence> sequences;
  bool degraded = false;
};

/// Gates every event of every sequence with b_i from `scorer`, using the
/// event's own query text. Failed scores fall back to b_i = 1.
inline FinalizeOutcome finalize(const std::vector<SequenceState>& sequences,
                                const std::vector<std::string>& query_events, const CrossScorer& scorer,
                                const CorpusStore& store) {
  FinalizeOutcome out;
  out.sequences.reserve(sequences.size());
  for (const auto& seq : sequences) {
    FinalSequence fs;
    fs.video_id = seq.video_id;
    fs.cumulative = seq.cumulative;
    for (const auto& e : seq.events) {
      fs.events.push_back({e.candidate, e.lambda, 1.0, 0.0});
    }
    if (!seq.events.empty()) {
      fs.duration_s = seq.events.back().candidate.t - seq.events.front().candidate.t;
    }
    out.sequences.push_back(std::move(fs));
  }
  const std::size_t k = sequences.empty() ? 0 : sequences.front().events.size();
  if (query_events.size() < k) {
    throw TemporalError(TemporalError::Kind::InvalidArgument, "finalize: one query per event required");
  }
  // one batch per event position across all sequences
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<const Keyframe*> kfs;
    std::vector<FinalEvent*> targets;
    for (auto& fs : out.sequences) {
      if (i >= fs.events.size()) {
        continue;
      }
      if (const Keyframe* kf = store.find_keyframe(fs.events[i].candidate.keyframe_id)) {
        kfs.push_back(kf);
        targets.push_back(&fs.events[i]);
      } else {
        out.degraded = true;
      }
    }
    if (kfs.empty()) {
      continue;
    }
    ScoreBatch batch = scorer.score_batch(query_events[i], kfs);
    out.degraded = out.degraded || batch.degraded;
    batch.scores.resize(kfs.size());
    for (std::size_t j = 0; j < kfs.size(); ++j) {
      if (batch.scores[j]) {
        targets[j]->b = std::clamp(*batch.scores[j], 0.0, 1.0);
      } else {
        out.degraded = true;
      }
    }
  }
  for (auto& fs : out.sequences) {
    fs.total_final = 0.0;
    for (auto& e : fs.events) {
      e.final_score = e.candidate.s * e.lambda * e.b;
      fs.total_final += e.final_score;
    }
  }
  std::stable_sort(out.sequences.begin(), out.sequences.end(),
                   [](const FinalSequence& a, const FinalSequence& b) { return a.total_final > b.total_final; });
  return out;
}

}  // namespace momentsearch
