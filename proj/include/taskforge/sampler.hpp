#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskforge/corpus.hpp"
#include "taskforge/error.hpp"

namespace taskforge {

inline constexpr std::size_t kSentencesPerGroup = 5;

class CorpusTooSmall : public Error {
 public:
  explicit CorpusTooSmall(std::size_t n)
      : Error("CorpusTooSmall", "need at least 5 sentences, store has " + std::to_string(n)) {}
};

struct SampleGroup {
  std::size_t group_id = 0;
  std::array<std::size_t, kSentencesPerGroup> sentence_ids{};

  friend bool operator==(const SampleGroup&, const SampleGroup&) = default;
};

// Seeded permutation of 0..n-1.
//
// Generator: std::mt19937_64 constructed with `seed` (the standard fixes its
// output sequence). Shuffle: Fisher-Yates from the last index down; each draw
// in [0, bound) takes 64-bit outputs, rejects those >= bound * floor(2^64 / bound),
// and returns the remainder modulo bound.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Disjoint groups of five taken in order from the seeded permutation of the
// store's ids. A trailing chunk of fewer than five is discarded.
std::vector<SampleGroup> sample_groups(const SentenceStore& store, std::uint64_t seed,
                                       std::optional<std::size_t> max_groups = std::nullopt);

// {"group_id": g, "sentence_ids": [...]}
void to_json(nlohmann::json& j, const SampleGroup& group);
void from_json(const nlohmann::json& j, SampleGroup& group);

}  // namespace taskforge
