#include "sppf/cv.hpp"

#include <algorithm>
#include <cmath>

#include "sppf/errors.hpp"

namespace sppf {

namespace {

// One fold: train on bins with parity `train_parity` (0-based), score the
// others under the running estimate.
template <typename Filter>
double fold_score(const SpikeTrain& spikes, const StimulusSequence& stim,
                  int dim, int window, Filter& filter, int train_parity) {
  const long T = spikes.length();
  Eigen::MatrixXd pending(window, dim);
  Eigen::VectorXd pending_n(window);
  int buffered = 0;
  long train_windows = 0;
  double score = 0.0;
  Eigen::VectorXd x(dim);
  for (long t = 1; t <= T; ++t) {
    x(0) = 1.0;
    for (int c = 1; c < dim; ++c) x(c) = stim.at(t - (c - 1));
    if ((t - 1) % 2 == train_parity) {
      pending.row(buffered) = x;
      pending_n(buffered) = static_cast<double>(spikes.bins[t - 1]);
      if (++buffered == window) {
        DesignWindow X;
        X.X = pending;
        X.index = ++train_windows;
        filter.update(pending_n, X);
        buffered = 0;
      }
    } else {
      const double z = x.dot(filter.estimate().w);
      score += spikes.bins[t - 1] * z - log1p_exp(z);
    }
  }
  return score;
}

}  // namespace

CvResult cross_validate_gamma(const SpikeTrain& spikes,
                              const StimulusSequence& stim, int dim, int window,
                              std::span<const double> grid,
                              const FilterHyper& base,
                              const std::string& filter_kind) {
  if (grid.empty()) throw config_error("cross validation needs a gamma grid");
  if (spikes.count() == 0)
    throw config_error("cross validation needs at least one spike");
  if (filter_kind != "ppf0" && filter_kind != "ppf1")
    throw config_error("cross validation supports ppf0/ppf1, got " +
                       filter_kind);

  CvResult out;
  out.grid.assign(grid.begin(), grid.end());
  std::sort(out.grid.begin(), out.grid.end());
  out.scores.reserve(out.grid.size());

  for (double gamma : out.grid) {
    FilterHyper hyper = base;
    hyper.prox.gamma = gamma;
    double total = 0.0;
    for (int parity = 0; parity < 2; ++parity) {
      if (filter_kind == "ppf1") {
        Ppf1Filter f(dim, hyper);
        total += fold_score(spikes, stim, dim, window, f, parity);
      } else {
        Ppf0Filter f(dim, hyper);
        total += fold_score(spikes, stim, dim, window, f, parity);
      }
    }
    out.scores.push_back(total / 2.0);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.grid.size(); ++i) {
    if (out.scores[i] >= out.scores[best]) best = i;  // ties -> larger gamma
  }
  out.gamma_star = out.grid[best];
  return out;
}

}  // namespace sppf
