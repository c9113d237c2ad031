#pragma once

#include <Eigen/Dense>

#include <span>

#include "sppf/model.hpp"
#include "sppf/prox.hpp"

namespace sppf {

struct FilterHyper {
  double beta = 0.999;  // forgetting factor, (0, 1]
  ProxHyper prox;
};

// Streaming l1-regularized filter, zeroth-order gradient recursion:
// g_k = beta * g_{k-1} + X_k' eps_k, followed by a shrinkage step. O(M) per
// iteration. State carries the decayed gradient and the current iterate.
class Ppf0Filter {
 public:
  // literal_decay = true re-applies the beta decay on every inner iteration
  // instead of once per window; the two coincide for R = 1.
  Ppf0Filter(int dim, FilterHyper hyper, bool literal_decay = false);

  void update(const Eigen::VectorXd& n, const DesignWindow& X);

  const ParamVector& estimate() const { return w_; }
  const Eigen::VectorXd& gradient_state() const { return g_; }
  long window() const { return k_; }
  int last_window_size() const { return last_w_; }
  const FilterHyper& hyper() const { return hyper_; }

  // used by snapshot restore
  void restore(Eigen::VectorXd g, ParamVector w, long k, int last_w);

 private:
  FilterHyper hyper_;
  bool literal_decay_;
  Eigen::VectorXd g_;
  ParamVector w_;
  long k_ = 0;
  int last_w_ = 0;
};

// First-order filter: decayed linearization statistics
//   u_k = beta u_{k-1} + X_k'(eps_k + Lam_k X_k w)
//   B_k = beta B_{k-1} + X_k' Lam_k X_k
// and gradient g = u_k - B_k w. O(M^2) per iteration.
class Ppf1Filter {
 public:
  Ppf1Filter(int dim, FilterHyper hyper, bool literal_decay = false);

  void update(const Eigen::VectorXd& n, const DesignWindow& X);

  const ParamVector& estimate() const { return w_; }
  const Eigen::VectorXd& linear_state() const { return u_; }
  const Eigen::MatrixXd& hessian() const { return B_; }
  Eigen::VectorXd gradient() const { return u_ - B_ * w_.w; }
  long window() const { return k_; }
  int last_window_size() const { return last_w_; }
  const FilterHyper& hyper() const { return hyper_; }

  void restore(Eigen::VectorXd u, Eigen::MatrixXd B, ParamVector w, long k,
               int last_w);

 private:
  FilterHyper hyper_;
  bool literal_decay_;
  Eigen::VectorXd u_;
  Eigen::MatrixXd B_;
  ParamVector w_;
  long k_ = 0;
  int last_w_ = 0;
};

// Steepest-ascent baseline: one gradient step on the current window's
// log-likelihood, no memory, no shrinkage.
class SdppfFilter {
 public:
  SdppfFilter(int dim, double rho);

  void update(const Eigen::VectorXd& n, const DesignWindow& X);

  const ParamVector& estimate() const { return w_; }
  double rho() const { return rho_; }
  long window() const { return k_; }

 private:
  double rho_;
  ParamVector w_;
  long k_ = 0;
};

struct SsppfHyper {
  double q = 1e-5;           // random-walk covariance inflation per bin
  double initial_cov = 1.0;  // prior variance (times identity)
};

// Gaussian-approximation baseline. Per bin: covariance inflation, then a
// rank-one information update with weight lam*delta*(1 - lam*delta) and a
// mean correction along the innovation.
class SsppfFilter {
 public:
  SsppfFilter(int dim, SsppfHyper hyper);

  void update(const Eigen::VectorXd& n, const DesignWindow& X);

  const ParamVector& estimate() const { return w_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  long window() const { return k_; }
  const SsppfHyper& hyper() const { return hyper_; }

 private:
  SsppfHyper hyper_;
  ParamVector w_;
  Eigen::MatrixXd cov_;
  long k_ = 0;
  long bins_seen_ = 0;
};

// Least-squares fit of the spikes on the covariates (linear model, not
// logistic). Predicted probabilities x'w can be negative. Singular normal
// equations fall back to a small ridge.
ParamVector nrc_estimate(const SpikeTrain& spikes, const StimulusSequence& stim,
                         int dim);

struct BatchSolveOptions {
  double tol_objective = 1e-10;  // relative objective change
  double tol_kkt = 1e-9;         // subgradient residual; <= 0 disables
  long max_iterations = 2000000;
  double step_size = 0.0;  // <= 0: 1 / (trace bound on the Hessian)
  bool penalize_baseline = true;
  ParamVector warm_start;  // empty: zero init
};

struct BatchSolveResult {
  ParamVector w;
  long iterations = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
};

// Full proximal-gradient maximization of the weighted, l1-penalized
// log-likelihood over a window batch. Serves as the accuracy oracle for the
// streaming filters; for a stationary L-sparse target the estimation error
// shrinks like sqrt((1 - beta) L log M), so larger beta trades adaptivity
// for accuracy.
BatchSolveResult batch_solve(std::span<const DesignWindow> xs,
                             std::span<const Eigen::VectorXd> ns, double beta,
                             double gamma, const BatchSolveOptions& opts = {});

// Penalized objective L^beta(w) - gamma * |w|_1 (baseline exempt when
// penalize_baseline is false).
double l1_objective(const ParamVector& w, std::span<const DesignWindow> xs,
                    std::span<const Eigen::VectorXd> ns, double beta,
                    double gamma, bool penalize_baseline = true);

// Max-norm violation of the subgradient optimality condition g = gamma * s.
double kkt_residual(const ParamVector& w, const Eigen::VectorXd& grad,
                    double gamma, bool penalize_baseline = true);

}  // namespace sppf
