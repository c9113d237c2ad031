#include "sppf/prox.hpp"

#include <cmath>
#include <stdexcept>

namespace sppf {

double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau) {
  if (tau < 0.0) throw std::invalid_argument("threshold must be >= 0");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = soft_threshold(x(i), tau);
  return out;
}

Eigen::VectorXd shrink(Eigen::VectorXd x, double tau, bool penalize_first) {
  if (tau < 0.0) throw std::invalid_argument("threshold must be >= 0");
  const Eigen::Index start = penalize_first ? 0 : 1;
  for (Eigen::Index i = start; i < x.size(); ++i)
    x(i) = soft_threshold(x(i), tau);
  return x;
}

ParamVector proximal_step(const ParamVector& w, const Eigen::VectorXd& grad,
                          const ProxHyper& hyper) {
  if (w.size() != grad.size())
    throw std::invalid_argument("proximal step dimension mismatch");
  return ParamVector(shrink(w.w + hyper.step_size * grad,
                            hyper.gamma * hyper.step_size,
                            hyper.penalize_baseline));
}

double default_step_size(double beta, int m, int w, double sigma_bar_sq,
                         double c) {
  if (!(beta > 0.0) || beta >= 1.0)
    throw std::invalid_argument(
        "step-size rule needs beta in (0, 1); pick alpha directly otherwise");
  if (m < 1 || w < 1) throw std::invalid_argument("M and W must be >= 1");
  if (!(sigma_bar_sq > 0.0))
    throw std::invalid_argument("covariate variance must be > 0");
  if (c < 0.25) throw std::invalid_argument("step constant must be >= 1/4");
  return (1.0 - beta) / (c * m * w * sigma_bar_sq);
}

}  // namespace sppf
