#include "fq/free_energy/schedule.hpp"

#include "fq/error.hpp"

namespace fq::free_energy {

LambdaSchedule::LambdaSchedule(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw ValidationError("a lambda schedule needs at least two windows");
  const bool decreasing = values_.front() == 1.0 && values_.back() == 0.0;
  const bool increasing = values_.front() == 0.0 && values_.back() == 1.0;
  if (!decreasing && !increasing) throw ValidationError("lambda schedule endpoints must be exactly 1 and 0");
  for (std::size_t k = 1; k < values_.size(); ++k) {
    const bool ok = decreasing ? values_[k] < values_[k - 1] : values_[k] > values_[k - 1];
    if (!ok) throw ValidationError("lambda schedule must be strictly monotone");
  }
}

LambdaSchedule LambdaSchedule::uniform_decoupling(std::size_t windows) {
  if (windows < 2) throw ValidationError("a lambda schedule needs at least two windows");
  std::vector<double> v(windows);
  for (std::size_t k = 0; k < windows; ++k) {
    v[k] = 1.0 - static_cast<double>(k) / static_cast<double>(windows - 1);
  }
  v.back() = 0.0;
  return LambdaSchedule(std::move(v));
}

LambdaSchedule refine_schedule(const LambdaSchedule& schedule, const std::vector<double>& overlaps, double threshold) {
  if (overlaps.size() + 1 != schedule.size()) throw ValidationError("one overlap per adjacent window pair expected");
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
    out.push_back(schedule[k]);
    if (overlaps[k] < threshold) out.push_back(0.5 * (schedule[k] + schedule[k + 1]));
  }
  out.push_back(schedule[schedule.size() - 1]);
  return LambdaSchedule(std::move(out));
}

}  // namespace fq::free_energy
