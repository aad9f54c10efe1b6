#pragma once

// Inverted index over OCR documents or ASR segments with four matching
// strategies, combined per document as
//
//   raw = 4.0 * exact_phrase + 2.0 * full_term + 1.0 * partial + 0.5 * fuzzy
//
// Each query term is credited to at most one of full_term / partial / fuzzy,
// in that order of precedence, so the three fractions sum to at most 1 and
// raw never exceeds 6.0.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "momentsearch/corpus.hpp"
#include "momentsearch/fusion.hpp"
#include "momentsearch/text.hpp"

namespace momentsearch {

enum class TextChannel { Ocr, Asr };

inline constexpr double kExactPhraseWeight = 4.0;
inline constexpr double kFullTermWeight = 2.0;
inline constexpr double kPartialWeight = 1.0;
inline constexpr double kFuzzyWeight = 0.5;
inline constexpr std::size_t kMinPrefixLength = 3;

struct TextQuery {
  std::string raw;
  std::vector<std::string> terms;
  std::optional<std::vector<std::string>> phrase;
};

class TextQueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tokenizes `raw`; the phrase defaults to the full term sequence.
inline TextQuery make_text_query(std::string raw) {
  TextQuery q;
  q.terms = text::tokenize(raw);
  if (q.terms.empty()) {
    throw TextQueryError("text query has no terms: '" + raw + "'");
  }
  q.phrase = q.terms;
  q.raw = std::move(raw);
  return q;
}

struct StrategyBreakdown {
  double exact_phrase = 0.0;
  double full_term = 0.0;
  double partial = 0.0;
  double fuzzy = 0.0;

  double weighted() const {
    return kExactPhraseWeight * exact_phrase + kFullTermWeight * full_term + kPartialWeight * partial +
           kFuzzyWeight * fuzzy;
  }
  bool operator==(const StrategyBreakdown&) const = default;
};

struct TextHit {
  std::string keyframe_id;
  double raw_score = 0.0;
  StrategyBreakdown breakdown;
};

/// Maximum edit distance for a fuzzy match of a term with `len` code points.
inline std::optional<std::size_t> fuzzy_budget(std::size_t len) {
  if (len >= 8) {
    return 2;
  }
  if (len >= 4) {
    return 1;
  }
  return std::nullopt;
}

class TextIndex {
 public:
  struct Posting {
    std::uint32_t doc = 0;
    std::vector<std::uint32_t> positions;
  };

  static TextIndex build(const CorpusStore& store, TextChannel channel) {
    TextIndex idx;
    if (channel == TextChannel::Ocr) {
      for (const auto& d : store.ocr_docs()) {
        idx.add(d.doc_id, d.keyframe_id, d.text);
      }
    } else {
      for (const auto& s : store.asr_segments()) {
        idx.add(s.segment_id, s.aligned_keyframe_id, s.text);
      }
    }
    idx.finish();
    return idx;
  }

  std::size_t doc_count() const { return docs_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  bool empty() const { return docs_.empty(); }

  const std::vector<Posting>* postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
  }
  std::vector<std::string> vocabulary() const {
    std::vector<std::string> out;
    out.reserve(vocab_.size());
    for (const auto& v : vocab_) {
      out.push_back(v.term);
    }
    return out;
  }

  /// Keyframe-level hits; a keyframe with several matching docs keeps its best.
  std::vector<TextHit> search(const TextQuery& q, std::size_t top_k) const {
    if (q.terms.empty() || docs_.empty() || top_k == 0) {
      return {};
    }
    enum Match : std::uint8_t { None = 0, Fuzzy = 1, Partial = 2, Exact = 3 };
    const std::size_t n_terms = q.terms.size();
    // doc -> best match per query term
    std::unordered_map<std::uint32_t, std::vector<std::uint8_t>> per_doc;
    auto credit = [&](const std::vector<Posting>& plist, std::size_t term_i, Match m) {
      for (const auto& p : plist) {
        auto& slots = per_doc.try_emplace(p.doc, n_terms, std::uint8_t{None}).first->second;
        slots[term_i] = std::max<std::uint8_t>(slots[term_i], m);
      }
    };

    for (std::size_t i = 0; i < n_terms; ++i) {
      const std::string& term = q.terms[i];
      if (auto it = postings_.find(term); it != postings_.end()) {
        credit(it->second, i, Exact);
      }
      const std::u32string term32 = text::to_u32(term);
      if (term32.size() >= kMinPrefixLength) {
        auto lo = std::lower_bound(vocab_.begin(), vocab_.end(), term,
                                   [](const VocabEntry& e, const std::string& t) { return e.term < t; });
        for (auto it = lo; it != vocab_.end() && it->term.compare(0, term.size(), term) == 0; ++it) {
          if (it->term.size() > term.size()) {
            credit(postings_.at(it->term), i, Partial);
          }
        }
      }
      if (auto budget = fuzzy_budget(term32.size())) {
        for (const auto& e : vocab_) {
          const std::size_t a = e.term32.size();
          const std::size_t b = term32.size();
          if ((a > b ? a - b : b - a) > *budget || e.term == term) {
            continue;
          }
          if (text::bounded_levenshtein(term32, e.term32, *budget) <= *budget) {
            credit(postings_.at(e.term), i, Fuzzy);
          }
        }
      }
    }

    std::unordered_map<std::string, TextHit> best;
    for (const auto& [doc, slots] : per_doc) {
      StrategyBreakdown b;
      for (auto m : slots) {
        if (m == Exact) {
          b.full_term += 1.0;
        } else if (m == Partial) {
          b.partial += 1.0;
        } else if (m == Fuzzy) {
          b.fuzzy += 1.0;
        }
      }
      b.full_term /= static_cast<double>(n_terms);
      b.partial /= static_cast<double>(n_terms);
      b.fuzzy /= static_cast<double>(n_terms);
      if (q.phrase && !q.phrase->empty() && contains_phrase(doc, *q.phrase)) {
        b.exact_phrase = 1.0;
      }
      const double raw = b.weighted();
      if (raw <= 0.0) {
        continue;
      }
      const std::string& kf = docs_[doc].keyframe_id;
      auto [it, fresh] = best.try_emplace(kf, TextHit{kf, raw, b});
      if (!fresh && raw > it->second.raw_score) {
        it->second = TextHit{kf, raw, b};
      }
    }
    std::vector<TextHit> hits;
    hits.reserve(best.size());
    for (auto& [kf, h] : best) {
      hits.push_back(std::move(h));
    }
    std::sort(hits.begin(), hits.end(), [](const TextHit& a, const TextHit& b) {
      return ranks_before(a.raw_score, a.keyframe_id, b.raw_score, b.keyframe_id);
    });
    if (hits.size() > top_k) {
      hits.resize(top_k);
    }
    return hits;
  }

 private:
  struct Doc {
    std::string doc_id;
    std::string keyframe_id;
  };
  struct VocabEntry {
    std::string term;
    std::u32string term32;
  };

  void add(const std::string& doc_id, const std::string& keyframe_id, const std::string& body) {
    const auto doc = static_cast<std::uint32_t>(docs_.size());
    docs_.push_back({doc_id, keyframe_id});
    const auto tokens = text::tokenize(body);
    for (std::uint32_t pos = 0; pos < tokens.size(); ++pos) {
      auto& plist = postings_[tokens[pos]];
      if (plist.empty() || plist.back().doc != doc) {
        plist.push_back({doc, {}});
      }
      plist.back().positions.push_back(pos);
    }
  }

  void finish() {
    vocab_.clear();
    vocab_.reserve(postings_.size());
    for (const auto& [term, _] : postings_) {
      vocab_.push_back({term, text::to_u32(term)});
    }
    std::sort(vocab_.begin(), vocab_.end(), [](const VocabEntry& a, const VocabEntry& b) { return a.term < b.term; });
  }

  const std::vector<std::uint32_t>* positions(const std::string& term, std::uint32_t doc) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) {
      return nullptr;
    }
    auto p = std::lower_bound(it->second.begin(), it->second.end(), doc,
                              [](const Posting& a, std::uint32_t d) { return a.doc < d; });
    return (p != it->second.end() && p->doc == doc) ? &p->positions : nullptr;
  }

  bool contains_phrase(std::uint32_t doc, const std::vector<std::string>& phrase) const {
    std::vector<const std::vector<std::uint32_t>*> pos(phrase.size());
    for (std::size_t i = 0; i < phrase.size(); ++i) {
      pos[i] = positions(phrase[i], doc);
      if (!pos[i]) {
        return false;
      }
    }
    for (std::uint32_t start : *pos[0]) {
      bool ok = true;
      for (std::size_t i = 1; i < phrase.size() && ok; ++i) {
        ok = std::binary_search(pos[i]->begin(), pos[i]->end(), start + static_cast<std::uint32_t>(i));
      }
      if (ok) {
        return true;
      }
    }
    return false;
  }

  std::vector<Doc> docs_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<VocabEntry> vocab_;
};

inline TextIndex build_text_index(const CorpusStore& store, TextChannel channel) {
  return TextIndex::build(store, channel);
}

inline std::vector<TextHit> search_text(const TextIndex& index, const TextQuery& q, std::size_t top_k) {
  return index.search(q, top_k);
}

inline std::vector<IdScore> to_id_scores(const std::vector<TextHit>& hits) {
  std::vector<IdScore> out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    out.push_back({h.keyframe_id, h.raw_score});
  }
  return out;
}

}  // namespace momentsearch
