#pragma once

// Query expansion and modality routing.
//
// The rule-based planner is the deterministic reference:
//   - quoted spans ("..." or curly quotes) route to OCR
//   - a speech cue (says, said, mentions, speech, lyrics, announces) routes
//     the clause after it to ASR
//   - whatever remains is the visual sub-query
// Expansions are the original query followed by N-1 synonym / word-order
// variants of the visual sub-query.

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momentsearch/fusion.hpp"
#include "momentsearch/text.hpp"

namespace momentsearch {

enum class PlannerFallback { RuleBased, Fail };

struct RuleWeights {
  double ocr = 0.7;
  double asr = 0.6;
  double vis = 0.5;       // visual alongside another modality
  double vis_solo = 0.8;  // visual when nothing else fired
};

struct PlannerConfig {
  std::size_t n_expansions = 4;
  std::optional<std::string> llm_endpoint;
  double llm_timeout_s = 15.0;
  PlannerFallback fallback = PlannerFallback::RuleBased;
  RuleWeights rules;
};

struct QueryPlan {
  std::string original;
  std::vector<std::string> expansions;
  std::array<std::optional<std::string>, 3> sub_queries{};  // indexed by Modality
  FusionWeights weights;
  std::optional<std::vector<std::string>> events;
  std::string rationale;

  const std::optional<std::string>& sub_query(Modality m) const { return sub_queries[index_of(m)]; }
  bool operator==(const QueryPlan&) const = default;
};

class PlannerError : public std::runtime_error {
 public:
  enum class Kind { EmptyQuery, EmptyEvent, LlmUnavailable, SchemaViolation };
  PlannerError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace planner_detail {

inline std::string trim(std::string_view s) {
  const auto is_pad = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_pad(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && is_pad(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return std::string(s.substr(b, e - b));
}

/// Collapses whitespace runs and strips leading/trailing spaces and clause punctuation.
inline std::string tidy(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) {
      out.push_back(' ');
      space = false;
    }
    out.push_back(c);
  }
  auto strip = [](char c) { return c == ',' || c == ';' || c == ':' || c == '.' || c == '-' || c == ' '; };
  while (!out.empty() && strip(out.back())) {
    out.pop_back();
  }
  std::size_t b = 0;
  while (b < out.size() && strip(out[b])) {
    ++b;
  }
  return out.substr(b);
}

inline bool has_word_chars(std::string_view s) { return !text::tokenize(s).empty(); }

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline constexpr std::array<std::string_view, 6> kSpeechCues{"says", "said", "mentions", "speech", "lyrics",
                                                             "announces"};

/// Fixed synonym table for the reference expansion transform.
inline const std::map<std::string, std::vector<std::string>>& synonyms() {
  static const std::map<std::string, std::vector<std::string>> table{
      {"car", {"vehicle", "automobile"}},     {"man", {"person", "guy"}},
      {"woman", {"lady", "person"}},          {"child", {"kid", "youngster"}},
      {"children", {"kids", "youngsters"}},   {"dog", {"puppy", "hound"}},
      {"cat", {"kitten", "feline"}},          {"big", {"large", "huge"}},
      {"small", {"little", "tiny"}},          {"walking", {"strolling", "moving"}},
      {"running", {"jogging", "sprinting"}},  {"holding", {"carrying", "gripping"}},
      {"carrying", {"holding", "hauling"}},   {"street", {"road", "avenue"}},
      {"house", {"home", "building"}},        {"boat", {"ship", "vessel"}},
      {"river", {"stream", "waterway"}},      {"sign", {"banner", "placard"}},
      {"crowd", {"group", "gathering"}},      {"field", {"meadow", "pasture"}},
      {"kitchen", {"cookhouse", "galley"}},   {"market", {"bazaar", "marketplace"}},
      {"bird", {"songbird", "fowl"}},         {"tree", {"trunk", "sapling"}},
      {"road", {"street", "highway"}},        {"worker", {"laborer", "employee"}},
      {"workers", {"laborers", "employees"}}, {"factory", {"plant", "workshop"}},
      {"reporter", {"journalist", "correspondent"}}, {"talking", {"speaking", "chatting"}},
      {"eating", {"dining", "feeding"}},      {"looking", {"gazing", "staring"}},
      {"picture", {"photo", "image"}},        {"bag", {"sack", "pouch"}},
      {"box", {"crate", "carton"}},           {"table", {"desk", "counter"}},
      {"shirt", {"top", "tee"}},              {"hat", {"cap", "headwear"}},
      {"beach", {"shore", "coast"}},          {"mountain", {"peak", "hill"}},
      {"building", {"structure", "tower"}},   {"bicycle", {"bike", "cycle"}},
      {"fire", {"flame", "blaze"}},           {"happy", {"cheerful", "joyful"}},
      {"old", {"elderly", "aged"}},           {"young", {"youthful", "junior"}},
      {"fast", {"quick", "rapid"}},           {"door", {"gate", "entrance"}},
      {"stage", {"platform", "podium"}},      {"frame", {"chassis", "body"}},
  };
  return table;
}

inline constexpr std::array<std::string_view, 16> kReorderAdjectives{
    "red",   "blue", "green", "yellow", "white", "black", "orange", "purple",
    "brown", "gray", "pink",  "big",    "small", "old",   "young",  "tall"};

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    out.push_back(std::move(cur));
  }
  return out;
}

inline std::string synonym_variant(const std::vector<std::string>& tokens, std::size_t which) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    auto it = synonyms().find(t);
    out.push_back(it == synonyms().end() ? t : it->second[which % it->second.size()]);
  }
  return text::join(out);
}

/// "a red car" -> "a car in red"
inline std::string reorder_variant(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool adj = std::find(kReorderAdjectives.begin(), kReorderAdjectives.end(), tokens[i]) !=
                     kReorderAdjectives.end();
    if (adj && i + 1 < tokens.size()) {
      out.push_back(tokens[i + 1]);
      out.push_back("in");
      out.push_back(tokens[i]);
      ++i;
    } else {
      out.push_back(tokens[i]);
    }
  }
  return text::join(out);
}

/// Deterministic variants 1..n-1 of `base`.
inline std::vector<std::string> expansion_variants(std::string_view base, std::size_t count) {
  const auto tokens = text::tokenize(base);
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k) {
    switch (k % 4) {
      case 0: out.push_back(synonym_variant(tokens, 0)); break;
      case 1: out.push_back(reorder_variant(tokens)); break;
      case 2: out.push_back(synonym_variant(tokens, 1)); break;
      default: out.push_back(reorder_variant(text::tokenize(synonym_variant(tokens, k / 4)))); break;
    }
  }
  return out;
}

}  // namespace planner_detail

inline std::vector<std::string> rule_expansions(const std::string& original, const std::string& base,
                                                std::size_t n) {
  std::vector<std::string> out{original};
  if (n > 1) {
    auto more = planner_detail::expansion_variants(base, n - 1);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

inline QueryPlan plan_rule_based(const std::string& query, const PlannerConfig& cfg) {
  using namespace planner_detail;
  if (!has_word_chars(query)) {
    throw PlannerError(PlannerError::Kind::EmptyQuery, "query is empty");
  }
  QueryPlan plan;
  plan.original = query;
  std::vector<std::string> fired;

  // 1. quoted spans -> OCR
  std::string residual;
  std::vector<std::string> quoted;
  {
    static const std::array<std::pair<std::string_view, std::string_view>, 2> kQuotes{
        {{"\"", "\""}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}}};
    std::size_t i = 0;
    while (i < query.size()) {
      bool matched = false;
      for (const auto& [open, close] : kQuotes) {
        if (query.compare(i, open.size(), open) == 0) {
          const auto end = query.find(close, i + open.size());
          if (end != std::string::npos) {
            const auto inner = tidy(std::string_view(query).substr(i + open.size(), end - i - open.size()));
            if (has_word_chars(inner)) {
              quoted.push_back(inner);
            }
            residual += ' ';
            i = end + close.size();
            matched = true;
            break;
          }
        }
      }
      if (!matched) {
        residual += query[i++];
      }
    }
  }
  if (!quoted.empty()) {
    plan.sub_queries[index_of(Modality::Ocr)] = text::join(quoted);
    plan.weights.ocr = cfg.rules.ocr;
    fired.push_back("quoted text -> ocr");
  }

  // 2. speech cue -> ASR clause
  {
    const auto words = split_words(residual);
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto bare = lower_ascii(tidy(words[w]));
      if (std::find(kSpeechCues.begin(), kSpeechCues.end(), bare) == kSpeechCues.end()) {
        continue;
      }
      std::vector<std::string> clause;
      std::size_t end = w + 1;
      for (; end < words.size(); ++end) {
        const std::string& word = words[end];
        const char last = word.back();
        clause.push_back(word);
        if (last == ',' || last == ';' || last == '.' || last == '!' || last == '?') {
          ++end;
          break;
        }
      }
      std::string asr = tidy(text::join(clause));
      if (lower_ascii(asr).rfind("that ", 0) == 0) {
        asr = tidy(asr.substr(5));
      }
      if (!has_word_chars(asr)) {
        continue;
      }
      plan.sub_queries[index_of(Modality::Asr)] = asr;
      plan.weights.asr = cfg.rules.asr;
      fired.push_back("speech cue '" + bare + "' -> asr");
      std::vector<std::string> rest(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(w));
      rest.insert(rest.end(), words.begin() + static_cast<std::ptrdiff_t>(end), words.end());
      residual = text::join(rest);
      break;
    }
  }

  // 3. residual -> visual
  const std::string visual = tidy(residual);
  const bool other = plan.sub_queries[index_of(Modality::Ocr)] || plan.sub_queries[index_of(Modality::Asr)];
  if (has_word_chars(visual)) {
    plan.sub_queries[index_of(Modality::Visual)] = visual;
    plan.weights.vis = other ? cfg.rules.vis : cfg.rules.vis_solo;
    fired.push_back(other ? "residual -> visual" : "residual -> visual (only modality)");
  }

  const std::string base = plan.sub_queries[index_of(Modality::Visual)].value_or(query);
  plan.expansions = rule_expansions(query, base, std::max<std::size_t>(cfg.n_expansions, 1));
  plan.rationale = "rules: " + text::join(fired, "; ");
  plan.weights.rationale = plan.rationale;
  return plan;
}

/// Splits "a -> b -> c" into events; each must contain at least one word.
inline std::vector<std::string> split_events(const std::string& query) {
  std::vector<std::string> events;
  std::size_t start = 0;
  while (true) {
    const auto pos = query.find("->", start);
    const auto piece = planner_detail::trim(std::string_view(query).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!planner_detail::has_word_chars(piece)) {
      throw PlannerError(PlannerError::Kind::EmptyEvent, "empty event in temporal query");
    }
    events.push_back(piece);
    if (pos == std::string::npos) {
      break;
    }
    start = pos + 2;
  }
  return events;
}

struct TemporalPlan {
  QueryPlan plan;                     // plan.events holds the event list
  std::vector<QueryPlan> event_plans;  // one per event
};

/// `planner` plans each event independently (rule-based or LLM-backed).
template <typename EventPlanner>
TemporalPlan plan_temporal(const std::vector<std::string>& events, const std::string& original,
                           const PlannerConfig& cfg, EventPlanner&& planner) {
  if (events.empty()) {
    throw PlannerError(PlannerError::Kind::EmptyEvent, "temporal query has no events");
  }
  TemporalPlan out;
  for (const auto& e : events) {
    if (!planner_detail::has_word_chars(e)) {
      throw PlannerError(PlannerError::Kind::EmptyEvent, "empty event in temporal query");
    }
    out.event_plans.push_back(planner(e));
  }
  out.plan.original = original;
  out.plan.events = events;
  out.plan.expansions = rule_expansions(original, original, std::max<std::size_t>(cfg.n_expansions, 1));
  out.plan.sub_queries[index_of(Modality::Visual)] = text::join(events, " ");
  out.plan.weights.vis = cfg.rules.vis_solo;
  out.plan.rationale = "temporal: " + std::to_string(events.size()) + " events planned independently";
  out.plan.weights.rationale = out.plan.rationale;
  return out;
}

inline TemporalPlan plan_temporal(const std::string& query, const PlannerConfig& cfg) {
  return plan_temporal(split_events(query), query, cfg,
                       [&](const std::string& e) { return plan_rule_based(e, cfg); });
}

}  // namespace momentsearch
