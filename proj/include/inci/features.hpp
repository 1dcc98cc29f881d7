#ifndef INCI_FEATURES_HPP
#define INCI_FEATURES_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace inci {

inline constexpr int kDefaultHashBits = 18;

/// Sparse non-negative feature counts, sorted by index, no duplicates.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double value(std::uint32_t index) const;

  bool operator==(const FeatureVector&) const = default;
};

/// Lowercased maximal runs of ASCII alphanumerics. Bytes >= 0x80 count as
/// word characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view s);

/// Bucket of a feature string: low `hash_bits` bits of its 64-bit FNV-1a hash.
std::uint32_t feature_bucket(std::string_view feature, int hash_bits = kDefaultHashBits);

/// Unigrams hashed as "u:<tok>", adjacent bigrams as "b:<tok1> <tok2>".
FeatureVector featurize(std::string_view s, int hash_bits = kDefaultHashBits);

}  // namespace inci

#endif  // INCI_FEATURES_HPP
