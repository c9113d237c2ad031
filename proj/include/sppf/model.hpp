#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace sppf {

// Binned binary observations. bins[t-1] holds n_t for t = 1..T.
struct SpikeTrain {
  std::vector<std::uint8_t> bins;
  double delta = 1e-3;  // seconds per bin

  long length() const { return static_cast<long>(bins.size()); }
  long count() const;
  void validate() const;  // throws if any bin is not 0/1
};

// Stimulus samples s_t for t = 1..T plus `pad` pre-history samples covering
// t = 1-pad..0. Lags reaching further back than the stored history are
// treated as zero; indices past T are an error.
class StimulusSequence {
 public:
  StimulusSequence() = default;
  StimulusSequence(std::vector<double> values, int pad);

  double at(long t) const;
  long length() const { return static_cast<long>(values_.size()) - pad_; }
  int pad() const { return pad_; }
  const std::vector<double>& raw() const { return values_; }

  double bound() const;            // max |s_t| over the stored samples
  double sample_variance() const;  // mean of squares minus squared mean

 private:
  std::vector<double> values_;
  int pad_ = 0;
};

// Model parameters w = [mu, theta_0, ..., theta_{M-2}].
struct ParamVector {
  Eigen::VectorXd w;

  ParamVector() = default;
  explicit ParamVector(Eigen::VectorXd coeffs) : w(std::move(coeffs)) {}
  static ParamVector zero(Eigen::Index m) {
    return ParamVector(Eigen::VectorXd::Zero(m));
  }

  Eigen::Index size() const { return w.size(); }
  double mu() const { return w(0); }
  double& mu() { return w(0); }
  auto theta() const { return w.tail(w.size() - 1); }
  auto theta() { return w.tail(w.size() - 1); }

  // l1 distance to the best l-term approximation; 0 iff the vector is
  // l-sparse.
  double compressibility_error(int l) const;
};

// W x M covariate block for one window; column 0 is the intercept, row j is
// [1, s_t, ..., s_{t-M+2}] for t = (k-1)W + j + 1.
struct DesignWindow {
  Eigen::MatrixXd X;
  long index = 1;  // window number k, 1-based

  int samples() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

// Overflow-safe logit^{-1}.
double logistic(double z);
// Stable log(1 + exp(z)).
double log1p_exp(double z);

// Per-bin spiking probabilities lambda_t * delta = logit^{-1}(X w).
// Values are strictly inside (0, 1); excursions beyond
// [1e-12, 1 - 1e-12] are counted (see cif_range_excursions) but not clamped.
Eigen::VectorXd logistic_cif(const DesignWindow& X, const ParamVector& w);

std::uint64_t cif_range_excursions();
void reset_cif_range_excursions();

// Innovation eps = n - lambda*delta, elementwise in (-1, 1).
Eigen::VectorXd innovation(const Eigen::VectorXd& n,
                           const Eigen::VectorXd& lam_delta);

// Bernoulli log-likelihood of one window:
// sum_j n_j (x_j' w) - log(1 + exp(x_j' w)).
double window_loglik(const ParamVector& w, const DesignWindow& X,
                     const Eigen::VectorXd& n);

// Exponentially weighted log-likelihood sum_i beta^{k-i} L_i(w) over
// windows 1..k. beta must lie in (0, 1]; beta = 1 is the plain sum.
double weighted_loglik(const ParamVector& w, std::span<const DesignWindow> xs,
                       std::span<const Eigen::VectorXd> ns, double beta);

// Gradient of weighted_loglik: sum_i beta^{k-i} X_i' eps_i(w).
Eigen::VectorXd weighted_loglik_gradient(const ParamVector& w,
                                         std::span<const DesignWindow> xs,
                                         std::span<const Eigen::VectorXd> ns,
                                         double beta);

// Covariate block for window k from the stimulus. Lags extending before the
// stored history are zero; requesting samples past the end of the stimulus
// throws.
DesignWindow build_design(const StimulusSequence& s, int m, int w, long k);

}  // namespace sppf
