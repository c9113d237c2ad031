#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sppf/simulation.hpp"
#include "sppf/strf.hpp"

namespace sppf {

struct StrfConfig {
  // plane and dictionary
  int lags = 50;   // I
  int bands = 50;  // J
  int grid = 13;   // atoms per axis
  double f_lo = 500.0;
  double f_hi = 16000.0;
  // data
  double delta = 1e-3;
  long bins = 200000;
  int window = 10;  // W
  double mu = -2.51;
  double target_var = 1.0;  // synthetic spectrogram variance
  int n_ripples = 24;
  // planted truth (synthetic mode): atom indices and coefficients
  std::vector<int> planted_atoms{45, 122};
  std::vector<double> planted_coeffs{0.9, -0.7};
  // estimation
  double beta = 0.9998;
  double gamma = 40.0;
  int iterations = 1;
  double step_constant = 0.25;  // alpha = 4(1-beta)/(M W var) at c = 1/4
  double step_size = 0.0;       // explicit alpha; 0 = rule above
  // outputs
  std::vector<double> snapshot_times{60.0, 120.0, 200.0};
  std::vector<std::pair<int, int>> trace_points;  // (lag, band)
  // real-data mode: read these instead of generating
  std::filesystem::path spectrogram_file;
  std::filesystem::path spike_file;

  void validate() const;
};

struct StrfRunResult {
  GaborDictionary dict;
  // planted truth; empty in real-data mode
  Eigen::VectorXd xi_true;
  Eigen::MatrixXd strf_true;
  Eigen::VectorXd xi_hat;  // final coefficients
  double mu_hat = 0.0;
  Eigen::MatrixXd strf_hat;
  std::vector<std::pair<double, Eigen::MatrixXd>> snapshots;  // (sec, strf)
  // trajectory of selected points: rows = windows, cols = trace points
  Eigen::ArrayXd trace_time;
  Eigen::MatrixXd traces;
};

// Full receptive-field pipeline: dictionary, (synthetic or read) spectrogram,
// spikes, first-order filter in coefficient space, snapshot reconstructions.
StrfRunResult run_strf(const StrfConfig& cfg, std::uint64_t seed);

struct CustomConfig {
  std::filesystem::path spike_file;
  std::filesystem::path stimulus_file;
  int dim = 101;
  int window = 1;
};

struct ExperimentConfig {
  std::string mode = "study1";  // study1 | study2 | strf | custom
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  StudyConfig study;
  StrfConfig strf;
  CustomConfig custom;
  // non-empty grid: cross-validate gamma for cv_filter before the run
  std::vector<double> cv_grid;
  std::string cv_filter = "ppf1";
  // time slice of the per-bin rate traces written for the rate figure
  double rate_t0 = 34.2;
  double rate_t1 = 34.4;

  void validate() const;
};

// Defaults per mode (paper-style scenarios and tuned filters).
ExperimentConfig default_config(const std::string& mode);

// Strict JSON config: unknown keys are rejected. Values overlay the mode's
// defaults.
ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");

// Runs the experiment and writes CSV outputs plus manifest.json under
// config.out_dir. Returns the list of files written (relative paths).
std::vector<std::string> run_experiment(const ExperimentConfig& config);

}  // namespace sppf
