#include "sppf/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sppf/errors.hpp"

namespace sppf {

namespace {

void check_update_args(int dim, const Eigen::VectorXd& n,
                       const DesignWindow& X) {
  if (X.dim() != dim) throw std::invalid_argument("design width != filter dim");
  if (n.size() != X.samples())
    throw std::invalid_argument("spike window length != design rows");
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw numerical_error(std::string("filter state became non-finite: ") +
                          what);
  }
}

}  // namespace

Ppf0Filter::Ppf0Filter(int dim, FilterHyper hyper, bool literal_decay)
    : hyper_(hyper),
      literal_decay_(literal_decay),
      g_(Eigen::VectorXd::Zero(dim)),
      w_(ParamVector::zero(dim)) {
  if (!(hyper_.beta > 0.0) || hyper_.beta > 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  if (hyper_.prox.iterations < 1)
    throw std::invalid_argument("iterations per window must be >= 1");
}

void Ppf0Filter::update(const Eigen::VectorXd& n, const DesignWindow& X) {
  check_update_args(static_cast<int>(w_.size()), n, X);
  const double beta = hyper_.beta;
  const ProxHyper& prox = hyper_.prox;
  const Eigen::VectorXd g_in = g_;  // final gradient state of window k-1
  for (int l = 0; l < prox.iterations; ++l) {
    const Eigen::VectorXd eps = innovation(n, logistic_cif(X, w_));
    if (literal_decay_) {
      g_ = beta * g_ + X.X.transpose() * eps;
    } else {
      g_ = beta * g_in + X.X.transpose() * eps;
    }
    w_ = proximal_step(w_, g_, prox);
  }
  check_finite(g_, "g");
  check_finite(w_.w, "w");
  ++k_;
  last_w_ = X.samples();
}

void Ppf0Filter::restore(Eigen::VectorXd g, ParamVector w, long k, int last_w) {
  g_ = std::move(g);
  w_ = std::move(w);
  k_ = k;
  last_w_ = last_w;
}

Ppf1Filter::Ppf1Filter(int dim, FilterHyper hyper, bool literal_decay)
    : hyper_(hyper),
      literal_decay_(literal_decay),
      u_(Eigen::VectorXd::Zero(dim)),
      B_(Eigen::MatrixXd::Zero(dim, dim)),
      w_(ParamVector::zero(dim)) {
  if (!(hyper_.beta > 0.0) || hyper_.beta > 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  if (hyper_.prox.iterations < 1)
    throw std::invalid_argument("iterations per window must be >= 1");
}

void Ppf1Filter::update(const Eigen::VectorXd& n, const DesignWindow& X) {
  check_update_args(static_cast<int>(w_.size()), n, X);
  const double beta = hyper_.beta;
  const ProxHyper& prox = hyper_.prox;
  const Eigen::VectorXd u_in = u_;
  const Eigen::MatrixXd B_in = B_;
  for (int l = 0; l < prox.iterations; ++l) {
    const Eigen::VectorXd lam = logistic_cif(X, w_);
    const Eigen::VectorXd eps = innovation(n, lam);
    const Eigen::VectorXd weights =
        lam.array() * (1.0 - lam.array());  // Bernoulli variance per bin
    const Eigen::MatrixXd Xw = weights.asDiagonal() * X.X;
    if (literal_decay_) {
      u_ = beta * u_ + X.X.transpose() * (eps + Xw * w_.w);
      B_ = beta * B_ + X.X.transpose() * Xw;
    } else {
      u_ = beta * u_in + X.X.transpose() * (eps + Xw * w_.w);
      B_ = beta * B_in + X.X.transpose() * Xw;
    }
    const Eigen::VectorXd g = u_ - B_ * w_.w;
    w_ = proximal_step(w_, g, prox);
  }
  check_finite(u_, "u");
  check_finite(w_.w, "w");
  ++k_;
  last_w_ = X.samples();
}

void Ppf1Filter::restore(Eigen::VectorXd u, Eigen::MatrixXd B, ParamVector w,
                         long k, int last_w) {
  u_ = std::move(u);
  B_ = std::move(B);
  w_ = std::move(w);
  k_ = k;
  last_w_ = last_w;
}

SdppfFilter::SdppfFilter(int dim, double rho)
    : rho_(rho), w_(ParamVector::zero(dim)) {
  if (!(rho > 0.0)) throw std::invalid_argument("sdppf step must be > 0");
}

void SdppfFilter::update(const Eigen::VectorXd& n, const DesignWindow& X) {
  check_update_args(static_cast<int>(w_.size()), n, X);
  const Eigen::VectorXd eps = innovation(n, logistic_cif(X, w_));
  w_.w.noalias() += rho_ * (X.X.transpose() * eps);
  check_finite(w_.w, "w");
  ++k_;
}

SsppfFilter::SsppfFilter(int dim, SsppfHyper hyper)
    : hyper_(hyper),
      w_(ParamVector::zero(dim)),
      cov_(Eigen::MatrixXd::Identity(dim, dim) * hyper.initial_cov) {
  if (hyper.q < 0.0) throw std::invalid_argument("ssppf q must be >= 0");
  if (!(hyper.initial_cov > 0.0))
    throw std::invalid_argument("ssppf prior variance must be > 0");
}

void SsppfFilter::update(const Eigen::VectorXd& n, const DesignWindow& X) {
  check_update_args(static_cast<int>(w_.size()), n, X);
  const Eigen::Index dim = w_.size();
  for (Eigen::Index j = 0; j < X.samples(); ++j) {
    cov_.diagonal().array() += hyper_.q;  // random-walk prediction
    const Eigen::VectorXd x = X.X.row(j).transpose();
    const double p = logistic(x.dot(w_.w));
    const double s = p * (1.0 - p);
    const Eigen::VectorXd cx = cov_ * x;
    const double denom = 1.0 + s * x.dot(cx);
    if (!(denom > 0.0) || !std::isfinite(denom))
      throw numerical_error("ssppf covariance update degenerate");
    cov_.noalias() -= (s / denom) * (cx * cx.transpose());
    w_.w.noalias() += (cov_ * x) * (n(j) - p);
    if (++bins_seen_ % 256 == 0) {
      cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
    }
    for (Eigen::Index d = 0; d < dim; ++d) {
      if (!(cov_(d, d) > 0.0))
        throw numerical_error("ssppf covariance lost positive definiteness");
    }
  }
  check_finite(w_.w, "w");
  ++k_;
}

ParamVector nrc_estimate(const SpikeTrain& spikes, const StimulusSequence& stim,
                         int dim) {
  const long T = spikes.length();
  if (T < 1) throw std::invalid_argument("nrc needs at least one bin");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd x(dim);
  for (long t = 1; t <= T; ++t) {
    x(0) = 1.0;
    for (int c = 1; c < dim; ++c) x(c) = stim.at(t - (c - 1));
    A.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
    b.noalias() += x * static_cast<double>(spikes.bins[t - 1]);
  }
  A = A.selfadjointView<Eigen::Lower>();
  Eigen::VectorXd theta = A.ldlt().solve(b);
  const double rhs = b.norm();
  if (!theta.allFinite() ||
      (A * theta - b).norm() > 1e-8 * std::max(1.0, rhs)) {
    const double ridge = 1e-6 * A.trace() / dim;
    Eigen::MatrixXd Ar = A;
    Ar.diagonal().array() += ridge;
    theta = Ar.ldlt().solve(b);
  }
  return ParamVector(std::move(theta));
}

double l1_objective(const ParamVector& w, std::span<const DesignWindow> xs,
                    std::span<const Eigen::VectorXd> ns, double beta,
                    double gamma, bool penalize_baseline) {
  double pen = w.w.lpNorm<1>();
  if (!penalize_baseline) pen -= std::abs(w.w(0));
  return weighted_loglik(w, xs, ns, beta) - gamma * pen;
}

double kkt_residual(const ParamVector& w, const Eigen::VectorXd& grad,
                    double gamma, bool penalize_baseline) {
  double r = 0.0;
  for (Eigen::Index m = 0; m < w.size(); ++m) {
    const double g = grad(m);
    const double gm = (m == 0 && !penalize_baseline) ? 0.0 : gamma;
    if (w.w(m) != 0.0) {
      r = std::max(r, std::abs(g - gm * (w.w(m) > 0 ? 1.0 : -1.0)));
    } else {
      r = std::max(r, std::max(0.0, std::abs(g) - gm));
    }
  }
  return r;
}

BatchSolveResult batch_solve(std::span<const DesignWindow> xs,
                             std::span<const Eigen::VectorXd> ns, double beta,
                             double gamma, const BatchSolveOptions& opts) {
  if (xs.empty()) throw std::invalid_argument("batch solve needs data");
  if (xs.size() != ns.size())
    throw std::invalid_argument("window batch size mismatch");
  if (!(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");

  const int dim = xs.front().dim();
  long rows = 0;
  for (const auto& xw : xs) rows += xw.samples();

  // stack windows once; per-row weight beta^{k-i}
  Eigen::MatrixXd X(rows, dim);
  Eigen::VectorXd n(rows), wgt(rows);
  {
    long r0 = 0;
    double weight = 1.0;
    std::vector<double> wq(xs.size());
    for (std::size_t i = xs.size(); i-- > 0;) {
      wq[i] = weight;
      weight *= beta;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const long wrows = xs[i].samples();
      X.middleRows(r0, wrows) = xs[i].X;
      n.segment(r0, wrows) = ns[i];
      wgt.segment(r0, wrows).setConstant(wq[i]);
      r0 += wrows;
    }
  }

  double alpha = opts.step_size;
  if (alpha <= 0.0) {
    const double trace_bound = 0.25 * (wgt.array() * X.array().square().rowwise().sum().array()).sum();
    alpha = trace_bound > 0.0 ? 1.0 / trace_bound : 1.0;
  }

  ParamVector w = opts.warm_start.size() == dim ? opts.warm_start
                                                : ParamVector::zero(dim);
  const auto objective = [&](const ParamVector& v) {
    const Eigen::VectorXd z = X * v.w;
    double ll = 0.0;
    for (long t = 0; t < rows; ++t)
      ll += wgt(t) * (n(t) * z(t) - log1p_exp(z(t)));
    double pen = v.w.lpNorm<1>();
    if (!opts.penalize_baseline) pen -= std::abs(v.w(0));
    return ll - gamma * pen;
  };
  const auto gradient = [&](const ParamVector& v) -> Eigen::VectorXd {
    Eigen::VectorXd z = X * v.w;
    for (long t = 0; t < rows; ++t) z(t) = wgt(t) * (n(t) - logistic(z(t)));
    return X.transpose() * z;
  };

  double obj = objective(w);
  long it = 0;
  double kkt = std::numeric_limits<double>::infinity();
  bool stalled = false;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd g = gradient(w);
    ParamVector w_next(shrink(w.w + alpha * g, gamma * alpha,
                              opts.penalize_baseline));
    const double obj_next = objective(w_next);
    const double rel =
        std::abs(obj_next - obj) / std::max(1.0, std::abs(obj_next));
    w = std::move(w_next);
    obj = obj_next;
    stalled = rel < opts.tol_objective;
    if (stalled) {
      if (opts.tol_kkt <= 0.0) break;
      kkt = kkt_residual(w, gradient(w), gamma, opts.penalize_baseline);
      if (kkt <= opts.tol_kkt) break;
    } else if (opts.tol_kkt > 0.0 && (it & 127) == 0) {
      kkt = kkt_residual(w, gradient(w), gamma, opts.penalize_baseline);
      if (kkt <= opts.tol_kkt && it > 0) break;
    }
  }
  if (it == opts.max_iterations) {
    std::ostringstream msg;
    msg << "batch solve did not converge: iterations=" << it
        << " objective=" << obj << " kkt=" << kkt;
    throw numerical_error(msg.str());
  }
  if (!std::isfinite(kkt))
    kkt = kkt_residual(w, gradient(w), gamma, opts.penalize_baseline);
  return {std::move(w), it + 1, obj, kkt};
}

}  // namespace sppf
