#pragma once

#include <span>
#include <string>
#include <vector>

#include "sppf/filters.hpp"
#include "sppf/model.hpp"

namespace sppf {

struct CvResult {
  double gamma_star = 0.0;
  std::vector<double> grid;    // ascending
  std::vector<double> scores;  // mean held-out log-likelihood per grid value
};

// Two-fold even-odd cross validation of the regularization weight. Bins are
// split into interleaved halves; the filter runs over one half (consecutive
// retained bins grouped into windows of W, treated as adjacent) while the
// other half is scored with the unweighted log-likelihood under the current
// streaming estimate; folds are then swapped and the scores averaged. Ties
// break toward the larger (sparser) gamma.
CvResult cross_validate_gamma(const SpikeTrain& spikes,
                              const StimulusSequence& stim, int dim, int window,
                              std::span<const double> grid,
                              const FilterHyper& base,
                              const std::string& filter_kind);

}  // namespace sppf
