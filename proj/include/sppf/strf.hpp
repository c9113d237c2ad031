#pragma once

#include <Eigen/Dense>

#include "sppf/model.hpp"
#include "sppf/rng.hpp"

namespace sppf {

// Gaussian-bump dictionary over the lag-by-frequency plane. Column p is a
// unit-l2 kernel centered on a regular grid point; atoms are truncated at
// three standard deviations.
struct GaborDictionary {
  Eigen::MatrixXd atoms;  // (lags * bands) x (grid_rows * grid_cols)
  int lags = 0;           // I
  int bands = 0;          // J
  int grid_rows = 0;
  int grid_cols = 0;
  double spacing_row = 0.0;  // D along lags
  double spacing_col = 0.0;  // D along bands

  int patch_size() const { return lags * bands; }
  int num_atoms() const { return grid_rows * grid_cols; }
};

// Atoms sit at linspace(0, I-1, grid_rows) x linspace(0, J-1, grid_cols),
// each with per-dimension variance (D/2)^2 for the corresponding spacing D.
GaborDictionary gabor_dictionary(int lags, int bands, int grid_rows,
                                 int grid_cols);

// Spectrogram, one row per frequency band, columns are time bins.
struct Spectrogram {
  Eigen::MatrixXd power;  // bands x bins
  double delta = 1e-3;
  double f_lo = 500.0;   // Hz, log-spaced band edges
  double f_hi = 16000.0;

  int bands() const { return static_cast<int>(power.rows()); }
  long bins() const { return power.cols(); }
  double sample_variance() const;
};

// Covariate block for window k: row t is [1, vec(patch_t)] with
// vec index i*J + j mapping (lag i, band j) to spec(j, t - i); bins before
// the start are zero. When a dictionary is supplied the patch is projected
// onto it, giving [1, vec(patch_t)' F] of width 1 + P.
DesignWindow spectrogram_design(const Spectrogram& spec, int lags, int window,
                                long k, const GaborDictionary* dict = nullptr);

// theta = F xi reshaped to lags x bands.
Eigen::MatrixXd strf_reconstruct(const Eigen::VectorXd& xi,
                                 const GaborDictionary& dict);

// Broadband ripple-sum stimulus, spectrally dense like a TORC: each component
// drifts across the log-frequency axis at its own rate. Scaled so the sample
// variance of the entries equals target_var.
Spectrogram gen_torc(int bands, long bins, double delta, double f_lo,
                     double f_hi, int n_ripples, double target_var, Rng& rng);

// Streaming equivalent of spectrogram_design with the dictionary absorbed.
// Exploits the separability of the Gaussian atoms: the band axis is projected
// once, covariates per bin then cost grid^2 * taps instead of I*J*P. Agrees
// with the explicit product up to rounding.
class DictionaryProjector {
 public:
  DictionaryProjector(const GaborDictionary& dict, const Spectrogram& spec);

  // F' patch_t for bin t (1-based); bins before the start count as zero
  Eigen::VectorXd covariates(long t) const;
  // [1, covariates'] rows for window k
  DesignWindow design(int window, long k) const;

  long bins() const { return band_projection_.cols(); }
  const GaborDictionary& dictionary() const { return *dict_; }

 private:
  const GaborDictionary* dict_;
  Eigen::MatrixXd band_projection_;  // grid_cols x T
  // normalized lag kernels per grid row, restricted to their support
  struct LagKernel {
    int first = 0;  // first lag with support
    Eigen::VectorXd taps;
  };
  std::vector<LagKernel> lag_kernels_;
};

}  // namespace sppf
