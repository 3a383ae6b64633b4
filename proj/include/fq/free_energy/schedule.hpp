#pragma once

#include <vector>

namespace fq::free_energy {

/// Strictly monotone coupling values with endpoints exactly 1 and 0
/// (either 1 → 0 or 0 → 1).
class LambdaSchedule {
 public:
  explicit LambdaSchedule(std::vector<double> values);

  /// `windows` evenly spaced values from 1 down to 0.
  static LambdaSchedule uniform_decoupling(std::size_t windows);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

 private:
  std::vector<double> values_;
};

/// Inserts a midpoint window between every adjacent pair whose overlap is
/// below `threshold`. `overlaps[k]` belongs to the pair (k, k+1).
LambdaSchedule refine_schedule(const LambdaSchedule& schedule, const std::vector<double>& overlaps,
                               double threshold = 0.03);

}  // namespace fq::free_energy
