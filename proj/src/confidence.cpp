#include "sppf/confidence.hpp"

#include <cmath>
#include <stdexcept>

#include "sppf/errors.hpp"

namespace sppf {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {
// Acklam's rational approximation to the standard normal quantile.
double quantile_seed(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}
}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("quantile needs p in (0, 1)");
  double x = quantile_seed(p);
  // one Newton step: x -= (Phi(x) - p) / phi(x)
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 0.0) x -= (normal_cdf(x) - p) / pdf;
  return x;
}

Eigen::MatrixXd update_score_covariance(Eigen::MatrixXd g_prev,
                                        const DesignWindow& X,
                                        const Eigen::VectorXd& eps,
                                        double beta) {
  if (eps.size() != X.samples())
    throw std::invalid_argument("innovation length != design rows");
  if (g_prev.rows() != X.dim() || g_prev.cols() != X.dim())
    throw std::invalid_argument("score covariance dimension mismatch");
  const Eigen::VectorXd score = X.X.transpose() * eps;
  g_prev *= beta * beta;
  g_prev.noalias() += score * score.transpose();
  return g_prev;
}

namespace {
// sub-views of a symmetric matrix with row/column m removed
Eigen::MatrixXd drop_rowcol(const Eigen::MatrixXd& a, int m) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd out(n - 1, n - 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == m) continue;
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == m) continue;
      out(r, c++) = a(i, j);
    }
    ++r;
  }
  return out;
}

Eigen::VectorXd drop_entry(const Eigen::VectorXd& v, int m) {
  Eigen::VectorXd out(v.size() - 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i == m) continue;
    out(r++) = v(i);
  }
  return out;
}
}  // namespace

Eigen::VectorXd nodewise_lasso(const Eigen::MatrixXd& hessian, int m,
                               double gamma_m, const NodewiseOptions& opts,
                               Eigen::VectorXd warm) {
  const Eigen::Index dim = hessian.rows();
  if (hessian.cols() != dim)
    throw std::invalid_argument("nodewise regression needs a square matrix");
  if (m < 0 || m >= dim)
    throw std::invalid_argument("nodewise target index out of range");
  if (gamma_m < 0.0) throw std::invalid_argument("gamma_m must be >= 0");

  const Eigen::MatrixXd a = drop_rowcol(hessian, m);
  const Eigen::VectorXd b = drop_entry(hessian.col(m), m);

  double alpha = opts.step_size;
  if (alpha <= 0.0) {
    // Gershgorin bound on the largest eigenvalue
    const double bound = a.cwiseAbs().rowwise().sum().maxCoeff();
    alpha = bound > 0.0 ? 1.0 / bound : 1.0;
  }

  Eigen::VectorXd psi = warm.size() == dim - 1
                            ? std::move(warm)
                            : Eigen::VectorXd::Zero(dim - 1).eval();
  for (int l = 0; l < opts.iterations; ++l) {
    psi = soft_threshold(
        (psi + alpha * (b - a * psi)).eval(), gamma_m * alpha);
  }
  if (!psi.allFinite())
    throw numerical_error("nodewise regression diverged (non-PSD input?)");
  return psi;
}

InverseRow inverse_hessian_row(const Eigen::MatrixXd& hessian,
                               const Eigen::VectorXd& psi, int m) {
  const Eigen::Index dim = hessian.rows();
  if (psi.size() != dim - 1)
    throw std::invalid_argument("nodewise solution has wrong length");
  const Eigen::VectorXd b = drop_entry(hessian.col(m), m);
  const double tau_sq = hessian(m, m) - psi.dot(b);
  if (!(tau_sq > 0.0))
    throw numerical_error("degenerate nodewise fit: tau^2 <= 0");
  InverseRow out;
  out.tau_sq = tau_sq;
  out.row.resize(dim);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (i == m) {
      out.row(i) = 1.0;
    } else {
      out.row(i) = -psi(r++);
    }
  }
  out.row /= tau_sq;
  return out;
}

Interval confidence_interval(const ParamVector& w_hat, int m,
                             const Eigen::VectorXd& inverse_row,
                             const Eigen::VectorXd& grad,
                             const Eigen::MatrixXd& score_cov, double level) {
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("confidence level must lie in (0, 1)");
  if (inverse_row.size() != w_hat.size() || grad.size() != w_hat.size())
    throw std::invalid_argument("confidence interval dimension mismatch");
  Interval out;
  out.estimate = w_hat.w(m);
  // The inverse row is built from the positive-definite curvature matrix, so
  // removing the shrinkage bias means stepping along +grad (a Newton step);
  // with the signed Hessian convention this term carries a minus.
  out.debiased = w_hat.w(m) + inverse_row.dot(grad);
  const double var = inverse_row.dot(score_cov * inverse_row);
  if (var < 0.0)
    throw numerical_error("negative interval variance");
  out.sigma = std::sqrt(var);
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  out.lo = out.debiased - z * out.sigma;
  out.hi = out.debiased + z * out.sigma;
  return out;
}

ConfidenceTracker::ConfidenceTracker(int dim, double beta,
                                     ConfidenceOptions opts)
    : opts_(std::move(opts)),
      beta_(beta),
      score_cov_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (opts_.stride < 1) throw std::invalid_argument("stride must be >= 1");
  for (int c : opts_.coords) {
    if (c < 0 || c >= dim)
      throw std::invalid_argument("tracked coordinate out of range");
  }
  if (opts_.track_hessian) hessian_ = Eigen::MatrixXd::Zero(dim, dim);
  warm_.assign(opts_.coords.size(), Eigen::VectorXd());
}

void ConfidenceTracker::observe(const DesignWindow& X,
                                const Eigen::VectorXd& eps,
                                const Eigen::VectorXd& lam) {
  score_cov_ = update_score_covariance(std::move(score_cov_), X, eps, beta_);
  if (opts_.track_hessian) {
    if (lam.size() != X.samples())
      throw std::invalid_argument(
          "tracker needs per-bin intensities to maintain the Hessian");
    const Eigen::VectorXd weights = lam.array() * (1.0 - lam.array());
    hessian_ *= beta_;
    hessian_.noalias() +=
        X.X.transpose() * (weights.asDiagonal() * X.X);
  }
  ++k_;
}

std::vector<CoordInterval> ConfidenceTracker::evaluate(
    const ParamVector& w_hat, const Eigen::VectorXd& grad,
    const Eigen::MatrixXd& hessian, double gamma) {
  std::vector<CoordInterval> out;
  out.reserve(opts_.coords.size());
  const double gamma_node = opts_.gamma_node >= 0.0 ? opts_.gamma_node : gamma;
  NodewiseOptions nopts;
  nopts.step_size = opts_.nodewise_step;
  nopts.iterations = opts_.nodewise_iterations;
  for (std::size_t i = 0; i < opts_.coords.size(); ++i) {
    const int m = opts_.coords[i];
    warm_[i] = nodewise_lasso(hessian, m, gamma_node, nopts,
                              std::move(warm_[i]));
    const InverseRow row = inverse_hessian_row(hessian, warm_[i], m);
    const Interval iv =
        confidence_interval(w_hat, m, row.row, grad, score_cov_, opts_.level);
    out.push_back({k_, m, iv.estimate, iv.debiased, iv.sigma, iv.lo, iv.hi,
                   opts_.level});
  }
  return out;
}

std::vector<CoordInterval> ConfidenceTracker::evaluate(
    const Ppf1Filter& filter) {
  return evaluate(filter.estimate(), filter.gradient(), filter.hessian(),
                  filter.hyper().prox.gamma);
}

std::vector<CoordInterval> ConfidenceTracker::evaluate(
    const Ppf0Filter& filter) {
  if (!opts_.track_hessian)
    throw std::invalid_argument(
        "zeroth-order filter needs a tracker with track_hessian");
  return evaluate(filter.estimate(), filter.gradient_state(), hessian_,
                  filter.hyper().prox.gamma);
}

}  // namespace sppf
