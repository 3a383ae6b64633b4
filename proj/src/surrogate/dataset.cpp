#include "fq/surrogate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fq/error.hpp"

namespace fq::surrogate {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void TrainingSet::validate() const {
  if (entries.empty()) throw ValidationError("training set is empty");
  std::unordered_set<std::string> seen;
  const auto n_coords = entries.front().coords.size();
  for (const auto& e : entries) {
    if (!seen.insert(e.id).second) throw ValidationError("duplicate provenance id '" + e.id + "'");
    if (e.coords.size() != n_coords) throw ValidationError("entry '" + e.id + "' has inconsistent coordinate length");
    if (!std::isfinite(e.energy)) throw ValidationError("non-finite energy in entry '" + e.id + "'");
    if (e.forces) {
      if (e.tier == model::Tier::high) throw ValidationError("entry '" + e.id + "': HIGH tier provides energies only");
      if (e.forces->size() != n_coords) throw ValidationError("entry '" + e.id + "' has inconsistent force length");
      for (double f : *e.forces) {
        if (!std::isfinite(f)) throw ValidationError("non-finite force in entry '" + e.id + "'");
      }
    }
    for (double x : e.coords) {
      if (!std::isfinite(x)) throw ValidationError("non-finite coordinate in entry '" + e.id + "'");
    }
  }
}

std::uint64_t TrainingSet::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& e : entries) {
    h = fnv1a(e.id.data(), e.id.size(), h);
    h = fnv1a(e.coords.data(), e.coords.size() * sizeof(double), h);
    h = fnv1a(&e.energy, sizeof(double), h);
    if (e.forces) h = fnv1a(e.forces->data(), e.forces->size() * sizeof(double), h);
  }
  return h;
}

Split split_dataset(const TrainingSet& set, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ValidationError("train fraction must be in (0, 1]");
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  ranked.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& id = set.entries[i].id;
    std::uint64_t h = fnv1a(&set.split_seed, sizeof(set.split_seed));
    h = fnv1a(id.data(), id.size(), h);
    ranked.emplace_back(h, i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return set.entries[a.second].id < set.entries[b.second].id;
  });
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(set.size())));
  Split s;
  for (std::size_t r = 0; r < ranked.size(); ++r) (r < n_train ? s.train : s.validation).push_back(ranked[r].second);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

}  // namespace fq::surrogate
