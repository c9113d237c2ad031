#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sppf/confidence.hpp"
#include "sppf/filters.hpp"
#include "sppf/gof.hpp"
#include "sppf/model.hpp"
#include "sppf/rng.hpp"

namespace sppf {

// Piecewise-linear value over time; constant before the first and after the
// last knot.
struct PiecewiseTrajectory {
  std::vector<std::pair<double, double>> knots;  // (time_sec, value), sorted
  double at(double t) const;
};

struct CoordSchedule {
  int omega_index = 1;  // 1..M-1 (position within the parameter vector)
  PiecewiseTrajectory trajectory;
};

// One synthetic experiment. Support indices refer to positions in the full
// parameter vector (1..M-1); index 0 is the baseline.
struct Scenario {
  double delta = 1e-3;       // seconds per bin
  int window = 1;            // W
  long num_windows = 30000;  // K; total bins T = K * W
  int dim = 101;             // M
  // stationary draw (used when schedule is empty)
  int sparsity = 3;        // L
  double theta_norm = 10.0;
  double target_rate = 0.13;  // mean lambda*delta; used when mu is NaN
  double mu = std::numeric_limits<double>::quiet_NaN();
  double stimulus_variance = 0.01;
  // scheduled dynamics (used when non-empty)
  std::vector<CoordSchedule> schedule;

  long bins() const { return num_windows * window; }
  double duration() const { return static_cast<double>(bins()) * delta; }
  void validate() const;
};

// Truth over time: a base vector plus scheduled coordinates. Evaluated at
// the end of each window, t_k = k * W * delta.
class TruthTrajectory {
 public:
  TruthTrajectory(ParamVector base, std::vector<CoordSchedule> schedule,
                  double window_sec);

  Eigen::VectorXd at_window(long k) const;
  bool stationary() const { return schedule_.empty(); }
  // support of the base vector plus all scheduled coordinates
  const std::vector<int>& support() const { return support_; }

 private:
  ParamVector base_;
  std::vector<CoordSchedule> schedule_;
  double window_sec_;
  std::vector<int> support_;
};

// L-sparse parameter draw: uniformly random support within 1..M-1, Gaussian
// values rescaled so the modulation part has exactly the requested l2 norm.
// The baseline coordinate is left at zero.
ParamVector gen_sparse_param(int m, int l, double norm, Rng& rng);

// i.i.d. N(0, sigma_sq) samples for t = 1..n with `pad` pre-history samples.
StimulusSequence gen_stimulus(long n, double sigma_sq, Rng& rng, int pad = 0);

// Conditionally independent Bernoulli draws with success rates lam_delta.
SpikeTrain sample_spikes(const Eigen::VectorXd& lam_delta, double delta,
                         Rng& rng);

// Baseline that brings the mean of logistic(mu + modulation) to the target
// rate, found by bisection over the realized covariate stream.
double calibrate_baseline(const Eigen::VectorXd& modulation, double target_rate);

// One draw of everything a scenario needs: parameters (with the baseline
// calibrated when mu is unset), stimulus, per-bin rates, spikes.
struct ScenarioData {
  StimulusSequence stimulus;
  TruthTrajectory truth;
  Eigen::VectorXd true_rate;
  SpikeTrain spikes;
};
ScenarioData generate_scenario_data(const Scenario& sc, Rng& rng);

struct MseValue {
  double value = 0.0;
  double db = 0.0;  // 10 log10(value); kDbFloor when value == 0
};
inline constexpr double kDbFloor = -999.0;

// Ensemble-normalized error at one time step.
MseValue mse_metric(std::span<const Eigen::VectorXd> w_hat,
                    std::span<const Eigen::VectorXd> w_true);

// Fraction of estimated modulation energy outside the support (indices in
// 1..M-1); 0 when the estimate is identically zero.
double spm_metric(std::span<const Eigen::VectorXd> theta_hat,
                  std::span<const int> support);

struct FilterSettings {
  FilterHyper ppf1;
  FilterHyper ppf0;
  double sdppf_rho = 0.5;
  SsppfHyper ssppf;
};

struct StudyConfig {
  Scenario scenario;
  FilterSettings filters;
  std::vector<std::string> selection{"ppf1", "ppf0", "ssppf", "sdppf"};
  int realizations = 200;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware; SPARSE_PPF_THREADS caps
  // trajectory-study extras
  ConfidenceOptions confidence;
  int gof_max_lag = 60;
  double gof_burn_in = 0.05;  // fraction of initial bins excluded from GOF
  bool gof_jitter = false;
  bool with_nrc = true;

  void validate() const;
};

// Paper-style defaults.
Scenario study1_scenario();
Scenario study2_scenario();
FilterSettings study1_filters();
FilterSettings study2_filters();
StudyConfig study1_defaults();
StudyConfig study2_defaults();

struct Study1Result {
  std::vector<std::string> filters;
  double delta = 1e-3;
  int window = 1;
  // per filter, per window: ensemble-averaged learning curves
  std::vector<Eigen::ArrayXd> mse;
  std::vector<Eigen::ArrayXd> mse_db;
  std::vector<Eigen::ArrayXd> spm;

  // mean over the last `fraction` of windows
  double steady_state_mse_db(const std::string& filter,
                             double fraction = 0.2) const;
  double steady_state_spm(const std::string& filter,
                          double fraction = 0.2) const;
};

// Stationary learning curves: all selected filters consume identical
// stimulus/spike realizations; metrics are ensemble averages.
Study1Result study1(const StudyConfig& config);

struct Study2Result {
  std::vector<std::string> filters;
  double delta = 1e-3;
  int window = 1;
  std::vector<int> tracked_coords;  // parameter indices
  Eigen::ArrayXd time;              // seconds, per window
  Eigen::MatrixXd truth;            // windows x tracked coords
  std::map<std::string, Eigen::MatrixXd> estimates;
  std::map<std::string, Eigen::ArrayXd> off_support_max;
  std::map<std::string, std::vector<CoordInterval>> intervals;
  Eigen::ArrayXd true_rate;  // per bin lambda*delta
  std::map<std::string, Eigen::ArrayXd> rate;
  SpikeTrain spikes;
  std::map<std::string, KsTest> ks;
  std::map<std::string, AcfTest> acf;
  long gof_burn_in_bins = 0;
};

// Tracking run with scheduled dynamics, confidence intervals and
// goodness-of-fit inputs; a single realization.
Study2Result study2(const StudyConfig& config);

}  // namespace sppf
