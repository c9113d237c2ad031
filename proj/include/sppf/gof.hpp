#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "sppf/model.hpp"
#include "sppf/rng.hpp"

namespace sppf {

// Rescaled inter-spike values; i.i.d. Uniform[0,1] under the true model.
struct RescaledTimes {
  std::vector<double> z;
  long n_spikes = 0;
};

struct TimeRescaleOptions {
  // Randomize the final bin's contribution so the rescaled values are exactly
  // uniform under the discrete model (resolves ties); the deterministic
  // variant uses the full survival product.
  bool jitter = false;
  Rng* rng = nullptr;  // required when jitter is set
};

// Discrete-time rescaling: for consecutive spikes at bins a < b,
// z = 1 - prod_{t=a+1..b} (1 - lambda_t * delta), i.e. the integrated
// intensity uses -log(1 - lambda*delta) per bin rather than lambda*delta.
RescaledTimes time_rescale(const SpikeTrain& spikes,
                           const Eigen::VectorXd& lam_delta,
                           const TimeRescaleOptions& opts = {});

struct KsTest {
  double statistic = 0.0;
  double band = 0.0;  // 1.36 / sqrt(n), asymptotic 95%
  bool pass = false;
  // (model quantile (j-0.5)/n, sorted empirical value) pairs for plotting
  std::vector<std::array<double, 2>> quantiles;
};

KsTest ks_test(const RescaledTimes& rescaled);

struct AcfTest {
  std::vector<double> acf;  // lags 1..max_lag
  double band = 0.0;        // 1.96 / sqrt(n)
  bool pass = false;
};

// Autocorrelation of u_j = Phi^{-1}(z_j) at lags 1..max_lag; z clipped to
// [1e-6, 1 - 1e-6] before the transform. max_lag = 0 passes vacuously.
AcfTest acf_test(const RescaledTimes& rescaled, int max_lag);

}  // namespace sppf
