#include "inci/features.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "inci/random.hpp"

namespace inci {

double FeatureVector::value(std::uint32_t index) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), index,
                                   [](const auto& e, std::uint32_t i) { return e.first < i; });
  return it != entries.end() && it->first == index ? it->second : 0.0;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
    if (word) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint32_t feature_bucket(std::string_view feature, int hash_bits) {
  if (hash_bits < 1 || hash_bits > 30) throw std::invalid_argument("hash_bits must lie in [1, 30]");
  return static_cast<std::uint32_t>(fnv1a64(feature) & ((std::uint64_t{1} << hash_bits) - 1));
}

FeatureVector featurize(std::string_view s, int hash_bits) {
  const auto tokens = tokenize(s);
  std::map<std::uint32_t, double> counts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    counts[feature_bucket("u:" + tokens[i], hash_bits)] += 1.0;
    if (i + 1 < tokens.size()) counts[feature_bucket("b:" + tokens[i] + " " + tokens[i + 1], hash_bits)] += 1.0;
  }
  FeatureVector fv;
  fv.entries.assign(counts.begin(), counts.end());
  return fv;
}

}  // namespace inci
