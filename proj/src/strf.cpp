#include "sppf/strf.hpp"

#include <cmath>
#include <stdexcept>

namespace sppf {

GaborDictionary gabor_dictionary(int lags, int bands, int grid_rows,
                                 int grid_cols) {
  if (lags < 1 || bands < 1)
    throw std::invalid_argument("dictionary plane must be at least 1x1");
  if (grid_rows < 1 || grid_cols < 1 || grid_rows > lags || grid_cols > bands)
    throw std::invalid_argument("atom grid must fit inside the plane");

  GaborDictionary out;
  out.lags = lags;
  out.bands = bands;
  out.grid_rows = grid_rows;
  out.grid_cols = grid_cols;
  out.spacing_row =
      grid_rows > 1 ? static_cast<double>(lags - 1) / (grid_rows - 1)
                    : static_cast<double>(lags);
  out.spacing_col =
      grid_cols > 1 ? static_cast<double>(bands - 1) / (grid_cols - 1)
                    : static_cast<double>(bands);
  if (out.spacing_row < 1.0 || out.spacing_col < 1.0)
    throw std::invalid_argument("atom spacing below one bin");

  const double var_row = out.spacing_row * out.spacing_row / 4.0;
  const double var_col = out.spacing_col * out.spacing_col / 4.0;
  const double cut_row = 3.0 * std::sqrt(var_row);
  const double cut_col = 3.0 * std::sqrt(var_col);

  out.atoms = Eigen::MatrixXd::Zero(lags * bands, grid_rows * grid_cols);
  for (int gr = 0; gr < grid_rows; ++gr) {
    const double ci = grid_rows > 1 ? gr * out.spacing_row : (lags - 1) / 2.0;
    for (int gc = 0; gc < grid_cols; ++gc) {
      const double cj =
          grid_cols > 1 ? gc * out.spacing_col : (bands - 1) / 2.0;
      const int p = gr * grid_cols + gc;
      for (int i = 0; i < lags; ++i) {
        const double di = i - ci;
        if (std::abs(di) > cut_row) continue;
        for (int j = 0; j < bands; ++j) {
          const double dj = j - cj;
          if (std::abs(dj) > cut_col) continue;
          out.atoms(i * bands + j, p) =
              std::exp(-0.5 * (di * di / var_row + dj * dj / var_col));
        }
      }
      const double nrm = out.atoms.col(p).norm();
      if (nrm > 0.0) out.atoms.col(p) /= nrm;
    }
  }
  return out;
}

double Spectrogram::sample_variance() const {
  const double n = static_cast<double>(power.size());
  if (n == 0.0) return 0.0;
  const double mean = power.mean();
  return power.array().square().sum() / n - mean * mean;
}

DesignWindow spectrogram_design(const Spectrogram& spec, int lags, int window,
                                long k, const GaborDictionary* dict) {
  if (lags < 1) throw std::invalid_argument("need at least one lag");
  if (window < 1 || k < 1)
    throw std::invalid_argument("window size/index must be >= 1");
  const int bands = spec.bands();
  if (dict && (dict->lags != lags || dict->bands != bands))
    throw std::invalid_argument("dictionary plane does not match spectrogram");
  const long t_last = (k - 1) * static_cast<long>(window) + window;
  if (t_last > spec.bins())
    throw std::invalid_argument("spectrogram too short for window");

  const int patch = lags * bands;
  DesignWindow out;
  out.index = k;
  const int width = 1 + (dict ? dict->num_atoms() : patch);
  out.X.resize(window, width);
  Eigen::RowVectorXd row(patch);
  for (int j = 0; j < window; ++j) {
    const long t = (k - 1) * static_cast<long>(window) + j + 1;  // 1-based bin
    for (int lag = 0; lag < lags; ++lag) {
      const long src = t - lag;  // bin index, zero before the start
      for (int b = 0; b < bands; ++b) {
        row(lag * bands + b) = src >= 1 ? spec.power(b, src - 1) : 0.0;
      }
    }
    out.X(j, 0) = 1.0;
    if (dict) {
      out.X.row(j).tail(width - 1) = row * dict->atoms;
    } else {
      out.X.row(j).tail(width - 1) = row;
    }
  }
  return out;
}

Eigen::MatrixXd strf_reconstruct(const Eigen::VectorXd& xi,
                                 const GaborDictionary& dict) {
  if (xi.size() != dict.num_atoms())
    throw std::invalid_argument("coefficient length != dictionary atoms");
  const Eigen::VectorXd theta = dict.atoms * xi;
  Eigen::MatrixXd strf(dict.lags, dict.bands);
  for (int i = 0; i < dict.lags; ++i)
    strf.row(i) = theta.segment(static_cast<Eigen::Index>(i) * dict.bands,
                                dict.bands);
  return strf;
}

DictionaryProjector::DictionaryProjector(const GaborDictionary& dict,
                                         const Spectrogram& spec)
    : dict_(&dict) {
  if (dict.bands != spec.bands())
    throw std::invalid_argument("dictionary plane does not match spectrogram");
  const double var_row = dict.spacing_row * dict.spacing_row / 4.0;
  const double var_col = dict.spacing_col * dict.spacing_col / 4.0;
  const double cut_row = 3.0 * std::sqrt(var_row);
  const double cut_col = 3.0 * std::sqrt(var_col);

  // normalized per-grid-column band kernels
  Eigen::MatrixXd band_kernels =
      Eigen::MatrixXd::Zero(dict.grid_cols, dict.bands);
  for (int gc = 0; gc < dict.grid_cols; ++gc) {
    const double cj = dict.grid_cols > 1 ? gc * dict.spacing_col
                                         : (dict.bands - 1) / 2.0;
    for (int j = 0; j < dict.bands; ++j) {
      const double dj = j - cj;
      if (std::abs(dj) > cut_col) continue;
      band_kernels(gc, j) = std::exp(-0.5 * dj * dj / var_col);
    }
    const double nrm = band_kernels.row(gc).norm();
    if (nrm > 0.0) band_kernels.row(gc) /= nrm;
  }
  band_projection_ = band_kernels * spec.power;

  lag_kernels_.resize(dict.grid_rows);
  for (int gr = 0; gr < dict.grid_rows; ++gr) {
    const double ci =
        dict.grid_rows > 1 ? gr * dict.spacing_row : (dict.lags - 1) / 2.0;
    int first = dict.lags, last = -1;
    for (int i = 0; i < dict.lags; ++i) {
      if (std::abs(i - ci) <= cut_row) {
        first = std::min(first, i);
        last = std::max(last, i);
      }
    }
    LagKernel lk;
    lk.first = first;
    lk.taps = Eigen::VectorXd::Zero(std::max(0, last - first + 1));
    for (int i = first; i <= last; ++i)
      lk.taps(i - first) = std::exp(-0.5 * (i - ci) * (i - ci) / var_row);
    const double nrm = lk.taps.norm();
    if (nrm > 0.0) lk.taps /= nrm;
    lag_kernels_[gr] = std::move(lk);
  }
}

Eigen::VectorXd DictionaryProjector::covariates(long t) const {
  const auto& d = *dict_;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d.num_atoms());
  for (int gr = 0; gr < d.grid_rows; ++gr) {
    const LagKernel& lk = lag_kernels_[gr];
    for (int tap = 0; tap < lk.taps.size(); ++tap) {
      const long src = t - (lk.first + tap);
      if (src < 1 || src > bins()) continue;
      const double coef = lk.taps(tap);
      v.segment(static_cast<Eigen::Index>(gr) * d.grid_cols, d.grid_cols)
          .noalias() += coef * band_projection_.col(src - 1);
    }
  }
  return v;
}

DesignWindow DictionaryProjector::design(int window, long k) const {
  if (window < 1 || k < 1)
    throw std::invalid_argument("window size/index must be >= 1");
  const long t_last = (k - 1) * static_cast<long>(window) + window;
  if (t_last > bins())
    throw std::invalid_argument("spectrogram too short for window");
  DesignWindow out;
  out.index = k;
  out.X.resize(window, 1 + dict_->num_atoms());
  for (int j = 0; j < window; ++j) {
    const long t = (k - 1) * static_cast<long>(window) + j + 1;
    out.X(j, 0) = 1.0;
    out.X.row(j).tail(dict_->num_atoms()) = covariates(t).transpose();
  }
  return out;
}

Spectrogram gen_torc(int bands, long bins, double delta, double f_lo,
                     double f_hi, int n_ripples, double target_var, Rng& rng) {
  if (bands < 1 || bins < 1)
    throw std::invalid_argument("spectrogram must be at least 1x1");
  if (n_ripples < 1) throw std::invalid_argument("need at least one ripple");
  if (!(target_var > 0.0))
    throw std::invalid_argument("target variance must be > 0");

  Spectrogram out;
  out.delta = delta;
  out.f_lo = f_lo;
  out.f_hi = f_hi;
  out.power = Eigen::MatrixXd::Zero(bands, bins);

  const double octaves =
      bands > 1 ? std::log2(f_hi / f_lo) : 1.0;
  for (int r = 0; r < n_ripples; ++r) {
    const double velocity = 4.0 + 44.0 * rng.uniform();   // Hz
    const double density = 0.2 + 1.2 * rng.uniform();     // cycles/octave
    const double phase = 2.0 * M_PI * rng.uniform();
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (int b = 0; b < bands; ++b) {
      const double pos =
          bands > 1 ? octaves * b / (bands - 1) : 0.0;  // octaves above f_lo
      const double spatial = 2.0 * M_PI * density * pos;
      for (long t = 0; t < bins; ++t) {
        const double arg =
            2.0 * M_PI * velocity * (t * delta) * sign + spatial + phase;
        out.power(b, t) += std::cos(arg);
      }
    }
  }
  const double var = out.sample_variance();
  if (var > 0.0) out.power *= std::sqrt(target_var / var);
  return out;
}

}  // namespace sppf
