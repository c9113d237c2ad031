#pragma once

#include <Eigen/Dense>

#include "sppf/model.hpp"

namespace sppf {

// Knobs of the proximal iteration shared by the streaming filters and the
// batch solver.
struct ProxHyper {
  double step_size = 1e-3;  // alpha
  double gamma = 0.0;       // l1 weight
  int iterations = 1;       // inner iterations per window (R)
  // constant c >= 1/4 of the step-size rule alpha = (1-beta)/(c M W sigma^2)
  double step_constant = 0.25;
  // When false the baseline coordinate w[0] is exempt from shrinkage.
  bool penalize_baseline = true;
};

double soft_threshold(double x, double tau);
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& x, double tau);

// soft_threshold with an optional exemption for the baseline coordinate.
Eigen::VectorXd shrink(Eigen::VectorXd x, double tau, bool penalize_first);

// One ascent-plus-shrinkage step S_{gamma*alpha}(w + alpha * grad).
ParamVector proximal_step(const ParamVector& w, const Eigen::VectorXd& grad,
                          const ProxHyper& hyper);

// alpha = (1 - beta) / (c * M * W * sigma_bar_sq). Requires beta in (0, 1);
// with beta = 1 the effective window is infinite and the caller must pick
// alpha directly.
double default_step_size(double beta, int m, int w, double sigma_bar_sq,
                         double c = 0.25);

}  // namespace sppf
