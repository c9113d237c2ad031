#pragma once

#include <Eigen/Dense>

#include <vector>

#include "sppf/filters.hpp"
#include "sppf/model.hpp"

namespace sppf {

// Phi^{-1}(p), accurate to better than 1e-9 absolute (rational approximation
// plus one Newton step on the erfc-based CDF).
double normal_quantile(double p);
double normal_cdf(double x);

// Decayed outer-product recursion for the score covariance:
// G_k = beta^2 * G_{k-1} + (X' eps)(X' eps)'.
Eigen::MatrixXd update_score_covariance(Eigen::MatrixXd g_prev,
                                        const DesignWindow& X,
                                        const Eigen::VectorXd& eps,
                                        double beta);

struct NodewiseOptions {
  double step_size = 0.0;  // <= 0: 1 / (Gershgorin bound on the submatrix)
  int iterations = 2000;
};

// Approximate minimizer of -2 b' psi + psi' A psi + 2 gamma_m |psi|_1 with
// A = B without row/column m and b = row m of B without entry m. Iterates
// psi <- S_{gamma_m * alpha}(psi + alpha (b - A psi)), optionally from a
// warm start.
Eigen::VectorXd nodewise_lasso(const Eigen::MatrixXd& hessian, int m,
                               double gamma_m, const NodewiseOptions& opts = {},
                               Eigen::VectorXd warm = Eigen::VectorXd());

struct InverseRow {
  Eigen::VectorXd row;  // length M, row m of the approximate inverse
  double tau_sq = 0.0;  // residual scale; must be > 0
};

// Row m of the approximate inverse Hessian from the nodewise solution:
// c_m = 1, c_{\m} = -psi, row = c / tau^2 with
// tau^2 = B_{mm} - psi' (row m of B without entry m).
InverseRow inverse_hessian_row(const Eigen::MatrixXd& hessian,
                               const Eigen::VectorXd& psi, int m);

struct Interval {
  double estimate = 0.0;  // shrunk coordinate estimate
  double debiased = 0.0;  // de-sparsified value
  double sigma = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// De-sparsified coordinate and its two-sided interval at the given level:
// debiased = w_m - row_m' grad, sigma^2 = row_m' G row_m.
Interval confidence_interval(const ParamVector& w_hat, int m,
                             const Eigen::VectorXd& inverse_row,
                             const Eigen::VectorXd& grad,
                             const Eigen::MatrixXd& score_cov, double level);

struct CoordInterval {
  long window = 0;
  int coord = 0;
  double estimate = 0.0;
  double debiased = 0.0;
  double sigma = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
};

struct ConfidenceOptions {
  std::vector<int> coords;  // parameter indices to track
  double level = 0.95;
  long stride = 10;          // evaluate every `stride` windows
  double gamma_node = -1.0;  // < 0: reuse the filter's gamma
  int nodewise_iterations = 50;
  double nodewise_step = 0.0;  // <= 0: auto
  // Maintain an internal Hessian recursion; needed for filters that do not
  // carry one (the zeroth-order filter).
  bool track_hessian = false;
};

// Streaming confidence-region state: the score covariance recursion plus
// warm-started nodewise solutions per tracked coordinate. Intervals for the
// baseline coordinate are as-reported; shrinkage of the baseline makes them
// conservative at best (caveat emptor).
class ConfidenceTracker {
 public:
  ConfidenceTracker(int dim, double beta, ConfidenceOptions opts);

  // Call once per window with the innovation at the post-update estimate.
  // lam is required when track_hessian is set.
  void observe(const DesignWindow& X, const Eigen::VectorXd& eps,
               const Eigen::VectorXd& lam = Eigen::VectorXd());

  bool due() const { return k_ > 0 && k_ % opts_.stride == 0; }
  long window() const { return k_; }
  const Eigen::MatrixXd& score_covariance() const { return score_cov_; }
  const Eigen::MatrixXd& tracked_hessian() const { return hessian_; }

  // Nodewise regressions against the supplied Hessian; gamma_node < 0 falls
  // back to `gamma`.
  std::vector<CoordInterval> evaluate(const ParamVector& w_hat,
                                      const Eigen::VectorXd& grad,
                                      const Eigen::MatrixXd& hessian,
                                      double gamma);

  // Convenience overloads wiring the filters' state through Algorithm-style
  // plumbing (g = u - B w for the first-order filter; the zeroth-order filter
  // supplies its own gradient state and the tracker's Hessian).
  std::vector<CoordInterval> evaluate(const Ppf1Filter& filter);
  std::vector<CoordInterval> evaluate(const Ppf0Filter& filter);

 private:
  ConfidenceOptions opts_;
  double beta_;
  Eigen::MatrixXd score_cov_;
  Eigen::MatrixXd hessian_;  // only when track_hessian
  std::vector<Eigen::VectorXd> warm_;
  long k_ = 0;
};

}  // namespace sppf
