#include "taskforge/sampler.hpp"

#include <limits>
#include <numeric>
#include <random>

namespace taskforge {
namespace {

// Uniform draw in [0, bound) by rejection; bound > 0.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  // Largest multiple of bound that fits in 2^64, minus one.
  const std::uint64_t limit = kMax - (kMax % bound + 1) % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x > limit);
  return x % bound;
}

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (n < 2) return perm;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

std::vector<SampleGroup> sample_groups(const SentenceStore& store, std::uint64_t seed,
                                       std::optional<std::size_t> max_groups) {
  if (store.size() < kSentencesPerGroup) throw CorpusTooSmall(store.size());
  if (max_groups && *max_groups == 0) throw InvalidArgument("max_groups must be positive");

  const auto perm = seeded_permutation(store.size(), seed);
  std::size_t count = perm.size() / kSentencesPerGroup;
  if (max_groups) count = std::min(count, *max_groups);

  std::vector<SampleGroup> groups(count);
  for (std::size_t g = 0; g < count; ++g) {
    groups[g].group_id = g;
    for (std::size_t k = 0; k < kSentencesPerGroup; ++k) {
      groups[g].sentence_ids[k] = perm[g * kSentencesPerGroup + k];
    }
  }
  return groups;
}

void to_json(nlohmann::json& j, const SampleGroup& group) {
  j = nlohmann::json{{"group_id", group.group_id},
                     {"sentence_ids", std::vector<std::size_t>(group.sentence_ids.begin(), group.sentence_ids.end())}};
}

void from_json(const nlohmann::json& j, SampleGroup& group) {
  group.group_id = j.at("group_id").get<std::size_t>();
  const auto ids = j.at("sentence_ids").get<std::vector<std::size_t>>();
  if (ids.size() != kSentencesPerGroup) throw InvalidArgument("a sample group holds exactly 5 sentence ids");
  std::copy(ids.begin(), ids.end(), group.sentence_ids.begin());
}

}  // namespace taskforge
