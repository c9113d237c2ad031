#include "sppf/gof.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sppf/confidence.hpp"

namespace sppf {

RescaledTimes time_rescale(const SpikeTrain& spikes,
                           const Eigen::VectorXd& lam_delta,
                           const TimeRescaleOptions& opts) {
  const long T = spikes.length();
  if (lam_delta.size() != T)
    throw std::invalid_argument("intensity length != spike train length");
  if (opts.jitter && opts.rng == nullptr)
    throw std::invalid_argument("jittered rescaling needs an rng");

  std::vector<long> spike_bins;
  for (long t = 0; t < T; ++t) {
    if (spikes.bins[t]) spike_bins.push_back(t);
    const double p = lam_delta(t);
    if (!(p > 0.0) || !(p < 1.0))
      throw std::invalid_argument("rescaling needs lambda*delta in (0, 1)");
  }
  if (spike_bins.size() < 2)
    throw std::invalid_argument("rescaling needs at least 2 spikes");

  RescaledTimes out;
  out.n_spikes = static_cast<long>(spike_bins.size());
  out.z.reserve(spike_bins.size() - 1);
  for (std::size_t s = 1; s < spike_bins.size(); ++s) {
    const long a = spike_bins[s - 1];
    const long b = spike_bins[s];
    // log survival over (a, b]; the final bin is optionally randomized
    double log_surv = 0.0;
    for (long t = a + 1; t < b; ++t) log_surv += std::log1p(-lam_delta(t));
    const double p_last = lam_delta(b);
    double z;
    if (opts.jitter) {
      // randomized probability integral transform:
      // z = F(b-1) + u (F(b) - F(b-1)) with u ~ U(0,1)
      const double surv_prev = std::exp(log_surv);
      z = 1.0 - surv_prev + opts.rng->uniform() * surv_prev * p_last;
    } else {
      z = -std::expm1(log_surv + std::log1p(-p_last));
    }
    out.z.push_back(std::clamp(z, 0.0, 1.0));
  }
  return out;
}

KsTest ks_test(const RescaledTimes& rescaled) {
  const long n = static_cast<long>(rescaled.z.size());
  if (rescaled.n_spikes < 10 || n < 9)
    throw std::invalid_argument("ks test needs at least 10 spikes");
  std::vector<double> sorted = rescaled.z;
  std::sort(sorted.begin(), sorted.end());
  KsTest out;
  out.band = 1.36 / std::sqrt(static_cast<double>(n));
  out.quantiles.reserve(n);
  for (long j = 0; j < n; ++j) {
    const double model_q = (static_cast<double>(j) + 0.5) / n;
    out.quantiles.push_back({model_q, sorted[j]});
    out.statistic = std::max(out.statistic, std::abs(sorted[j] - model_q));
  }
  out.pass = out.statistic < out.band;
  return out;
}

AcfTest acf_test(const RescaledTimes& rescaled, int max_lag) {
  if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
  AcfTest out;
  const long n = static_cast<long>(rescaled.z.size());
  out.band = n > 0 ? 1.96 / std::sqrt(static_cast<double>(n)) : 0.0;
  out.pass = true;
  if (max_lag == 0) return out;
  if (rescaled.n_spikes < max_lag + 10)
    throw std::invalid_argument("acf test needs n_spikes >= max_lag + 10");

  Eigen::VectorXd u(n);
  for (long j = 0; j < n; ++j)
    u(j) = normal_quantile(std::clamp(rescaled.z[j], 1e-6, 1.0 - 1e-6));
  const double mean = u.mean();
  u.array() -= mean;
  const double denom = u.squaredNorm();
  out.acf.resize(max_lag);
  for (int lag = 1; lag <= max_lag; ++lag) {
    double num = 0.0;
    for (long j = 0; j + lag < n; ++j) num += u(j) * u(j + lag);
    out.acf[lag - 1] = denom > 0.0 ? num / denom : 0.0;
    if (std::abs(out.acf[lag - 1]) >= out.band) out.pass = false;
  }
  return out;
}

}  // namespace sppf
