#include "sppf/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace sppf {

namespace {
std::atomic<std::uint64_t> g_cif_excursions{0};

void note_cif_excursion(std::uint64_t n) {
  if (n == 0) return;
  const auto before = g_cif_excursions.fetch_add(n);
  if (before == 0) {
    std::cerr << "sppf: warning: CIF left [1e-12, 1-1e-12]; "
                 "estimates may be saturating\n";
  }
}
}  // namespace

long SpikeTrain::count() const {
  long c = 0;
  for (auto b : bins) c += b;
  return c;
}

void SpikeTrain::validate() const {
  for (auto b : bins) {
    if (b > 1) throw std::invalid_argument("spike train entries must be 0/1");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("bin width must be > 0");
}

StimulusSequence::StimulusSequence(std::vector<double> values, int pad)
    : values_(std::move(values)), pad_(pad) {
  if (pad_ < 0) throw std::invalid_argument("stimulus pad must be >= 0");
  if (static_cast<long>(values_.size()) < pad_)
    throw std::invalid_argument("stimulus shorter than its pad");
}

double StimulusSequence::at(long t) const {
  if (t > length())
    throw std::invalid_argument("stimulus index past end of sequence");
  const long idx = t - 1 + pad_;
  if (idx < 0) return 0.0;  // absent pre-history
  return values_[static_cast<std::size_t>(idx)];
}

double StimulusSequence::bound() const {
  double b = 0.0;
  for (double v : values_) b = std::max(b, std::abs(v));
  return b;
}

double StimulusSequence::sample_variance() const {
  if (values_.empty()) return 0.0;
  double mean = 0.0, sq = 0.0;
  for (double v : values_) {
    mean += v;
    sq += v * v;
  }
  const double n = static_cast<double>(values_.size());
  mean /= n;
  return sq / n - mean * mean;
}

double ParamVector::compressibility_error(int l) const {
  if (l < 0) throw std::invalid_argument("sparsity level must be >= 0");
  if (l >= w.size()) return 0.0;
  std::vector<double> mags(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) mags[i] = std::abs(w(i));
  std::nth_element(mags.begin(), mags.begin() + l, mags.end(),
                   std::greater<double>());
  double tail = 0.0;
  for (Eigen::Index i = l; i < w.size(); ++i) tail += mags[i];
  return tail;
}

double logistic(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  // stay strictly inside (0, 1) at machine resolution
  static const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, std::numeric_limits<double>::min(), hi);
}

double log1p_exp(double z) {
  // breakpoints follow the usual accurate-log1pexp recipe
  if (z <= -37.0) return std::exp(z);
  if (z <= 18.0) return std::log1p(std::exp(z));
  if (z <= 33.3) return z + std::exp(-z);
  return z;
}

Eigen::VectorXd logistic_cif(const DesignWindow& X, const ParamVector& w) {
  if (X.dim() != w.size())
    throw std::invalid_argument("design/parameter dimension mismatch");
  Eigen::VectorXd z = X.X * w.w;
  std::uint64_t excursions = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = logistic(z(i));
    if (p < 1e-12 || p > 1.0 - 1e-12) ++excursions;
    z(i) = p;
  }
  note_cif_excursion(excursions);
  return z;
}

std::uint64_t cif_range_excursions() { return g_cif_excursions.load(); }
void reset_cif_range_excursions() { g_cif_excursions.store(0); }

Eigen::VectorXd innovation(const Eigen::VectorXd& n,
                           const Eigen::VectorXd& lam_delta) {
  if (n.size() != lam_delta.size())
    throw std::invalid_argument("innovation length mismatch");
  return n - lam_delta;
}

double window_loglik(const ParamVector& w, const DesignWindow& X,
                     const Eigen::VectorXd& n) {
  if (X.dim() != w.size() || X.samples() != n.size())
    throw std::invalid_argument("window log-likelihood dimension mismatch");
  const Eigen::VectorXd z = X.X * w.w;
  double ll = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    ll += n(j) * z(j) - log1p_exp(z(j));
  }
  return ll;
}

namespace {
void check_batch(std::span<const DesignWindow> xs,
                 std::span<const Eigen::VectorXd> ns, double beta) {
  if (xs.size() != ns.size())
    throw std::invalid_argument("window batch size mismatch");
  if (!(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
}
}  // namespace

double weighted_loglik(const ParamVector& w, std::span<const DesignWindow> xs,
                       std::span<const Eigen::VectorXd> ns, double beta) {
  check_batch(xs, ns, beta);
  double sum = 0.0;
  double weight = 1.0;  // beta^{k-i}, most recent window first
  for (std::size_t r = xs.size(); r-- > 0;) {
    sum += weight * window_loglik(w, xs[r], ns[r]);
    weight *= beta;
  }
  return sum;
}

Eigen::VectorXd weighted_loglik_gradient(const ParamVector& w,
                                         std::span<const DesignWindow> xs,
                                         std::span<const Eigen::VectorXd> ns,
                                         double beta) {
  check_batch(xs, ns, beta);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
  double weight = 1.0;
  for (std::size_t r = xs.size(); r-- > 0;) {
    const Eigen::VectorXd eps =
        innovation(ns[r], logistic_cif(xs[r], w));
    g.noalias() += weight * (xs[r].X.transpose() * eps);
    weight *= beta;
  }
  return g;
}

DesignWindow build_design(const StimulusSequence& s, int m, int w, long k) {
  if (m < 2) throw std::invalid_argument("design needs at least 2 columns");
  if (w < 1 || k < 1) throw std::invalid_argument("window size/index must be >= 1");
  DesignWindow out;
  out.index = k;
  out.X.resize(w, m);
  for (int j = 0; j < w; ++j) {
    const long t = (k - 1) * w + j + 1;
    out.X(j, 0) = 1.0;
    for (int c = 1; c < m; ++c) {
      out.X(j, c) = s.at(t - (c - 1));
    }
  }
  return out;
}

}  // namespace sppf
