#pragma once

// Deterministic text embedder standing in for the two dual encoders. Both
// spaces hash normalized tokens into signed feature buckets (the hashing
// trick); SEM_B additionally hashes adjacent-token bigrams so the two spaces
// rank slightly differently.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "momentsearch/corpus.hpp"
#include "momentsearch/text.hpp"

namespace momentsearch {

inline constexpr std::uint32_t kDefaultSemADim = 128;
inline constexpr std::uint32_t kDefaultSemBDim = 256;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ReferenceEmbedder {
 public:
  ReferenceEmbedder(std::uint32_t sem_a_dim = kDefaultSemADim, std::uint32_t sem_b_dim = kDefaultSemBDim)
      : dims_{sem_a_dim, sem_b_dim} {}

  std::uint32_t dim(Space s) const { return dims_[index_of(s)]; }

  /// Unit vector for `text`, or nullopt when the text has no tokens.
  std::optional<std::vector<float>> embed(std::string_view text, Space space) const {
    const auto tokens = text::tokenize(text);
    if (tokens.empty()) {
      return std::nullopt;
    }
    const std::uint32_t d = dim(space);
    std::vector<double> acc(d, 0.0);
    const std::uint64_t seed = space == Space::SemA ? 0x9e3779b97f4a7c15ULL : 0xc2b2ae3d27d4eb4fULL;
    auto add = [&](std::string_view feature, double weight) {
      const std::uint64_t h = fnv1a64(feature, seed);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      acc[h % d] += sign * weight;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      add(tokens[i], 1.0);
      if (space == Space::SemB && i + 1 < tokens.size()) {
        add(tokens[i] + '\x1f' + tokens[i + 1], 0.5);
      }
    }
    double norm = 0.0;
    for (double x : acc) {
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      // every feature cancelled out; fall back to a fixed direction
      acc[fnv1a64(tokens.front(), seed) % d] = 1.0;
      norm = 1.0;
    }
    std::vector<float> out(d);
    for (std::uint32_t i = 0; i < d; ++i) {
      out[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
  }

 private:
  std::array<std::uint32_t, 2> dims_;
};

}  // namespace momentsearch
