#include "fq/free_energy/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fq/error.hpp"
#include "fq/sampling/rng.hpp"

namespace fq::free_energy {

namespace {

double log_sum_exp_neg(std::span<const double> x, double scale) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, -scale * v);
  double s = 0.0;
  for (double v : x) s += std::exp(-scale * v - mx);
  return mx + std::log(s);
}

// Logistic 1/(1 + e^z) without overflow.
double fermi(double z) {
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = 0.0;
  for (double v : xs) m += v;
  m /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double v : xs) var += (v - m) * (v - m);
  return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

void resample(std::span<const double> src, std::vector<double>& dst, sampling::Philox4x32& rng) {
  dst.resize(src.size());
  for (auto& v : dst) v = src[static_cast<std::size_t>(sampling::uniform01(rng) * static_cast<double>(src.size()))];
}

}  // namespace

double zwanzig_estimate(std::span<const double> delta_u) {
  if (delta_u.empty()) throw ValidationError("Zwanzig estimate needs at least one sample");
  return -(log_sum_exp_neg(delta_u, 1.0) - std::log(static_cast<double>(delta_u.size())));
}

Estimate zwanzig_with_error(std::span<const double> delta_u) {
  const double df = zwanzig_estimate(delta_u);
  // w_i = exp(−(Δu_i − Δf)) has mean 1.
  double var = 0.0;
  for (double d : delta_u) {
    const double w = std::exp(-(d - df));
    var += (w - 1.0) * (w - 1.0);
  }
  const double n = static_cast<double>(delta_u.size());
  var /= std::max(n - 1.0, 1.0);
  return {df, std::sqrt(var / n)};
}

Estimate telescope_sum(std::span<const Estimate> window_deltas) {
  if (window_deltas.empty()) throw ValidationError("telescope sum needs at least one window");
  Estimate total;
  double var = 0.0;
  for (const auto& w : window_deltas) {
    total.value += w.value;
    var += w.error * w.error;
  }
  total.error = std::sqrt(var);
  return total;
}

const char* to_string(Direction direction) { return direction == Direction::forward ? "forward" : "backward"; }

Estimate jarzynski_estimate(std::span<const double> forward_work, const model::ThermoState& state,
                            const BootstrapOptions& options) {
  if (forward_work.empty()) throw ValidationError("Jarzynski estimate needs at least one work value");
  const double beta = state.beta;
  auto point = [beta](std::span<const double> w) {
    return -(log_sum_exp_neg(w, beta) - std::log(static_cast<double>(w.size()))) / beta;
  };
  Estimate out{point(forward_work), 0.0};
  sampling::Philox4x32 rng(options.seed, 0x6a61727aULL);
  std::vector<double> boot;
  std::vector<double> values;
  values.reserve(options.n_resamples);
  for (std::size_t b = 0; b < options.n_resamples; ++b) {
    resample(forward_work, boot, rng);
    values.push_back(point(boot));
  }
  out.error = stddev(values);
  return out;
}

BarResult bar_point(std::span<const double> forward_work, std::span<const double> backward_work, double beta) {
  if (forward_work.empty() || backward_work.empty()) {
    throw ValidationError("BAR needs forward and backward work values");
  }
  const double m = std::log(static_cast<double>(forward_work.size()) / static_cast<double>(backward_work.size()));
  // h(Δ) is increasing in Δ (β-scaled).
  auto h = [&](double delta) {
    double lhs = 0.0;
    for (double w : forward_work) lhs += fermi(m + beta * w - delta);
    double rhs = 0.0;
    for (double w : backward_work) rhs += fermi(-m + beta * w + delta);
    return lhs - rhs;
  };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double w : forward_work) {
    lo = std::min(lo, beta * w);
    hi = std::max(hi, beta * w);
  }
  for (double w : backward_work) {
    lo = std::min(lo, -beta * w);
    hi = std::max(hi, -beta * w);
  }
  lo -= 1.0;
  hi += 1.0;
  BarResult out;
  int expand = 0;
  while (h(lo) > 0.0 && expand < 200) {
    lo -= (hi - lo);
    ++expand;
  }
  while (h(hi) < 0.0 && expand < 400) {
    hi += (hi - lo);
    ++expand;
  }
  if (!(h(lo) <= 0.0 && h(hi) >= 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) {
    out.estimate.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 0.0 ? lo : hi) = mid;
  }
  out.estimate.value = 0.5 * (lo + hi) / beta;
  out.converged = true;
  return out;
}

BarResult crooks_bar_estimate(std::span<const double> forward_work, std::span<const double> backward_work,
                              const model::ThermoState& state, const BootstrapOptions& options) {
  auto out = bar_point(forward_work, backward_work, state.beta);
  if (!out.converged) return out;
  sampling::Philox4x32 rng(options.seed, 0x62617221ULL);
  std::vector<double> bf;
  std::vector<double> bb;
  std::vector<double> values;
  values.reserve(options.n_resamples);
  for (std::size_t b = 0; b < options.n_resamples; ++b) {
    resample(forward_work, bf, rng);
    resample(backward_work, bb, rng);
    const auto r = bar_point(bf, bb, state.beta);
    if (r.converged) values.push_back(r.estimate.value);
  }
  out.estimate.error = stddev(values);
  return out;
}

HistogramCrossing work_histogram_crossing(std::span<const double> forward_work, std::span<const double> backward_work,
                                          std::size_t n_bins) {
  if (forward_work.empty() || backward_work.empty() || n_bins < 2) {
    throw ValidationError("histogram crossing needs both work sets and at least two bins");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double w : forward_work) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  for (double w : backward_work) {
    lo = std::min(lo, -w);
    hi = std::max(hi, -w);
  }
  HistogramCrossing out;
  if (!(hi > lo)) {
    out.crossing = lo;
    out.found = true;
    return out;
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  out.bin_width = width;
  std::vector<double> pf(n_bins, 0.0);
  std::vector<double> pb(n_bins, 0.0);
  auto bin = [&](double w) {
    return std::min(n_bins - 1, static_cast<std::size_t>((w - lo) / width));
  };
  for (double w : forward_work) pf[bin(w)] += 1.0 / static_cast<double>(forward_work.size());
  for (double w : backward_work) pb[bin(-w)] += 1.0 / static_cast<double>(backward_work.size());

  // Sign changes of p_F − p_B from below to above; keep the one carrying the most mass.
  double best_mass = -1.0;
  for (std::size_t i = 0; i + 1 < n_bins; ++i) {
    const double d0 = pf[i] - pb[i];
    const double d1 = pf[i + 1] - pb[i + 1];
    if (d0 < 0.0 && d1 >= 0.0) {
      const double mass = pf[i] + pb[i] + pf[i + 1] + pb[i + 1];
      if (mass > best_mass) {
        best_mass = mass;
        const double c0 = lo + (static_cast<double>(i) + 0.5) * width;
        const double t = d0 / (d0 - d1);
        out.crossing = c0 + t * width;
        out.found = true;
      }
    }
  }
  return out;
}

BindingCycleResult binding_cycle(const Estimate& partial_binding, const Estimate& ligand_solvation, std::string tier) {
  BindingCycleResult r;
  r.partial_binding = partial_binding;
  r.ligand_solvation = ligand_solvation;
  r.binding.value = partial_binding.value - ligand_solvation.value;
  r.binding.error = std::hypot(partial_binding.error, ligand_solvation.error);
  r.tier = std::move(tier);
  return r;
}

}  // namespace fq::free_energy
