#pragma once

// Shared helpers and independent oracles for the test suites. Oracles use
// direct formulas (long-double sums, explicit products) rather than the
// library's evaluation paths.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "sppf/model.hpp"
#include "sppf/rng.hpp"

namespace sppf::test {

inline DesignWindow random_design(Rng& rng, int w, int m, double scale = 1.0,
                                  long index = 1) {
  DesignWindow out;
  out.index = index;
  out.X.resize(w, m);
  for (int j = 0; j < w; ++j) {
    out.X(j, 0) = 1.0;
    for (int c = 1; c < m; ++c) out.X(j, c) = scale * rng.normal();
  }
  return out;
}

inline Eigen::VectorXd random_spikes(Rng& rng, int w, double p = 0.3) {
  Eigen::VectorXd n(w);
  for (int j = 0; j < w; ++j) n(j) = rng.bernoulli(p) ? 1.0 : 0.0;
  return n;
}

inline Eigen::VectorXd random_vector(Rng& rng, int m, double scale = 1.0) {
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v(i) = scale * rng.normal();
  return v;
}

// direct Bernoulli log-likelihood sum in long double
inline double loglik_direct(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& n) {
  long double sum = 0.0L;
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    long double z = 0.0L;
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      z += static_cast<long double>(X(j, c)) * w(c);
    sum += static_cast<long double>(n(j)) * z -
           std::log(1.0L + std::exp(z));
  }
  return static_cast<double>(sum);
}

// batch gradient sum_i beta^{k-i} X_i' (n_i - sigma(X_i w)), direct loops
inline Eigen::VectorXd gradient_direct(const Eigen::VectorXd& w,
                                       const std::vector<DesignWindow>& xs,
                                       const std::vector<Eigen::VectorXd>& ns,
                                       double beta) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double weight = std::pow(beta, static_cast<double>(xs.size() - 1 - i));
    for (Eigen::Index j = 0; j < xs[i].X.rows(); ++j) {
      const double z = xs[i].X.row(j).dot(w);
      const double p = 1.0 / (1.0 + std::exp(-z));
      g += weight * (ns[i](j) - p) * xs[i].X.row(j).transpose();
    }
  }
  return g;
}

}  // namespace sppf::test
