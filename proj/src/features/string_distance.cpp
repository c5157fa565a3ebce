#include <algorithm>
#include <numeric>
#include <vector>

#include "cdcr/features.hpp"

namespace cdcr {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = up;
    }
  }
  return row[b.size()];
}

int mlipns_distance(std::string_view a, std::string_view b, double threshold,
                    int max_mismatches) {
  if (a == b) return 0;
  if (a.empty() || b.empty()) return 1;
  // Hamming distance with the length difference counted as mismatches.
  const std::size_t common = std::min(a.size(), b.size());
  double hamming = static_cast<double>(std::max(a.size(), b.size()) - common);
  for (std::size_t i = 0; i < common; ++i) hamming += a[i] != b[i] ? 1 : 0;
  double max_length = static_cast<double>(std::max(a.size(), b.size()));
  for (int mismatches = 0; mismatches <= max_mismatches; ++mismatches) {
    if (max_length < 1 || 1.0 - (max_length - hamming) / max_length <= threshold) return 0;
    hamming -= 1;
    max_length -= 1;
  }
  return max_length < 1 ? 0 : 1;
}

}  // namespace cdcr
