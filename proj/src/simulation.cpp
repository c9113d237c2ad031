#include "sppf/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "sppf/errors.hpp"
#include "sppf/parallel.hpp"

namespace sppf {

double PiecewiseTrajectory::at(double t) const {
  if (knots.empty()) return 0.0;
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].first) {
      const auto& [t0, v0] = knots[i - 1];
      const auto& [t1, v1] = knots[i];
      if (t1 == t0) return v1;
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return knots.back().second;
}

void Scenario::validate() const {
  if (!(delta > 0.0)) throw config_error("scenario: delta must be > 0");
  if (window < 1) throw config_error("scenario: window must be >= 1");
  if (num_windows < 1) throw config_error("scenario: num_windows must be >= 1");
  if (dim < 2) throw config_error("scenario: dim must be >= 2");
  if (sparsity < 0 || sparsity >= dim)
    throw config_error("scenario: sparsity must lie in [0, dim)");
  if (stimulus_variance < 0.0)
    throw config_error("scenario: stimulus variance must be >= 0");
  if (schedule.empty()) {
    if (std::isnan(mu) && (!(target_rate > 0.0) || !(target_rate < 1.0)))
      throw config_error("scenario: target rate must lie in (0, 1)");
  } else {
    if (std::isnan(mu))
      throw config_error("scenario: scheduled dynamics need an explicit mu");
    std::vector<int> seen;
    for (const auto& cs : schedule) {
      if (cs.omega_index < 1 || cs.omega_index >= dim)
        throw config_error("scenario: scheduled index must lie in 1..M-1");
      if (std::find(seen.begin(), seen.end(), cs.omega_index) != seen.end())
        throw config_error("scenario: duplicate scheduled index");
      seen.push_back(cs.omega_index);
    }
  }
}

TruthTrajectory::TruthTrajectory(ParamVector base,
                                 std::vector<CoordSchedule> schedule,
                                 double window_sec)
    : base_(std::move(base)),
      schedule_(std::move(schedule)),
      window_sec_(window_sec) {
  for (Eigen::Index i = 1; i < base_.size(); ++i) {
    if (base_.w(i) != 0.0) support_.push_back(static_cast<int>(i));
  }
  for (const auto& cs : schedule_) {
    if (std::find(support_.begin(), support_.end(), cs.omega_index) ==
        support_.end())
      support_.push_back(cs.omega_index);
  }
  std::sort(support_.begin(), support_.end());
}

Eigen::VectorXd TruthTrajectory::at_window(long k) const {
  Eigen::VectorXd w = base_.w;
  const double t = static_cast<double>(k) * window_sec_;
  for (const auto& cs : schedule_) w(cs.omega_index) = cs.trajectory.at(t);
  return w;
}

ParamVector gen_sparse_param(int m, int l, double norm, Rng& rng) {
  if (l >= m) throw std::invalid_argument("sparsity must be below dimension");
  if (l < 0) throw std::invalid_argument("sparsity must be >= 0");
  ParamVector out = ParamVector::zero(m);
  if (l == 0) return out;
  // partial Fisher-Yates over 1..m-1
  std::vector<int> idx(m - 1);
  for (int i = 0; i < m - 1; ++i) idx[i] = i + 1;
  for (int i = 0; i < l; ++i) {
    const int j =
        i + static_cast<int>(rng.uniform() * static_cast<double>(m - 1 - i));
    std::swap(idx[i], idx[std::min(j, m - 2)]);
  }
  Eigen::VectorXd values(l);
  for (int i = 0; i < l; ++i) values(i) = rng.normal();
  const double nrm = values.norm();
  if (nrm > 0.0 && norm > 0.0) values *= norm / nrm;
  for (int i = 0; i < l; ++i) out.w(idx[i]) = values(i);
  return out;
}

StimulusSequence gen_stimulus(long n, double sigma_sq, Rng& rng, int pad) {
  if (n < 1) throw std::invalid_argument("stimulus length must be >= 1");
  if (sigma_sq < 0.0) throw std::invalid_argument("variance must be >= 0");
  const double sd = std::sqrt(sigma_sq);
  std::vector<double> values(static_cast<std::size_t>(n) + pad);
  for (auto& v : values) v = sd * rng.normal();
  return StimulusSequence(std::move(values), pad);
}

SpikeTrain sample_spikes(const Eigen::VectorXd& lam_delta, double delta,
                         Rng& rng) {
  SpikeTrain out;
  out.delta = delta;
  out.bins.resize(lam_delta.size());
  for (Eigen::Index t = 0; t < lam_delta.size(); ++t) {
    const double p = lam_delta(t);
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("spike probability outside [0, 1]");
    out.bins[t] = rng.bernoulli(p) ? 1 : 0;
  }
  return out;
}

double calibrate_baseline(const Eigen::VectorXd& modulation,
                          double target_rate) {
  if (!(target_rate > 0.0) || !(target_rate < 1.0))
    throw std::invalid_argument("target rate must lie in (0, 1)");
  const auto mean_rate = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < modulation.size(); ++t)
      s += logistic(mu + modulation(t));
    return s / static_cast<double>(modulation.size());
  };
  double lo = -30.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_rate(mid) < target_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12) break;
  }
  return 0.5 * (lo + hi);
}

MseValue mse_metric(std::span<const Eigen::VectorXd> w_hat,
                    std::span<const Eigen::VectorXd> w_true) {
  if (w_hat.size() != w_true.size() || w_hat.empty())
    throw std::invalid_argument("mse needs matched non-empty ensembles");
  double num = 0.0, den = 0.0;
  for (std::size_t r = 0; r < w_hat.size(); ++r) {
    if (w_hat[r].size() != w_true[r].size())
      throw std::invalid_argument("mse dimension mismatch");
    num += (w_hat[r] - w_true[r]).squaredNorm();
    den += w_true[r].squaredNorm();
  }
  if (den == 0.0) throw std::invalid_argument("mse: zero true norm");
  MseValue out;
  out.value = num / den;
  out.db = out.value > 0.0 ? 10.0 * std::log10(out.value) : kDbFloor;
  return out;
}

double spm_metric(std::span<const Eigen::VectorXd> theta_hat,
                  std::span<const int> support) {
  double num = 0.0, den = 0.0;
  for (const auto& th : theta_hat) {
    double on = 0.0;
    for (int s : support) {
      if (s < 1 || s > th.size())
        throw std::invalid_argument("support index out of range");
      on += th(s - 1) * th(s - 1);  // support uses parameter indexing (1..M-1)
    }
    den += th.squaredNorm();
    num += th.squaredNorm() - on;
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

namespace {

class FilterInstance {
 public:
  static FilterInstance make(const std::string& name, int dim,
                             const FilterSettings& fs) {
    FilterInstance out;
    out.name_ = name;
    if (name == "ppf1") {
      out.impl_.emplace<Ppf1Filter>(dim, fs.ppf1);
    } else if (name == "ppf0") {
      out.impl_.emplace<Ppf0Filter>(dim, fs.ppf0);
    } else if (name == "sdppf") {
      out.impl_.emplace<SdppfFilter>(dim, fs.sdppf_rho);
    } else if (name == "ssppf") {
      out.impl_.emplace<SsppfFilter>(dim, fs.ssppf);
    } else {
      throw config_error("unknown filter: " + name);
    }
    return out;
  }

  void update(const Eigen::VectorXd& n, const DesignWindow& X) {
    std::visit(
        [&](auto& f) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(f)>,
                                        std::monostate>) {
            f.update(n, X);
          }
        },
        impl_);
  }

  const ParamVector& estimate() const {
    return std::visit(
        [](const auto& f) -> const ParamVector& {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>,
                                       std::monostate>) {
            throw std::logic_error("empty filter instance");
          } else {
            return f.estimate();
          }
        },
        impl_);
  }

  const std::string& name() const { return name_; }
  Ppf1Filter* ppf1() { return std::get_if<Ppf1Filter>(&impl_); }
  Ppf0Filter* ppf0() { return std::get_if<Ppf0Filter>(&impl_); }

 private:
  std::string name_;
  std::variant<std::monostate, Ppf0Filter, Ppf1Filter, SdppfFilter,
               SsppfFilter>
      impl_;
};

}  // namespace

ScenarioData generate_scenario_data(const Scenario& sc, Rng& rng) {
  ParamVector base = ParamVector::zero(sc.dim);
  if (sc.schedule.empty()) {
    base = gen_sparse_param(sc.dim, sc.sparsity, sc.theta_norm, rng);
  }
  StimulusSequence stim =
      gen_stimulus(sc.bins(), sc.stimulus_variance, rng, sc.dim);

  TruthTrajectory truth(ParamVector(base.w), sc.schedule,
                        static_cast<double>(sc.window) * sc.delta);

  // per-bin modulation x_t' w excluding the baseline, then the baseline
  const long T = sc.bins();
  Eigen::VectorXd rate(T);
  {
    Eigen::VectorXd mod(T);
    for (long k = 1; k <= sc.num_windows; ++k) {
      const DesignWindow X = build_design(stim, sc.dim, sc.window, k);
      Eigen::VectorXd w = truth.at_window(k);
      w(0) = 0.0;
      mod.segment((k - 1) * sc.window, sc.window) = X.X * w;
    }
    double mu = sc.mu;
    if (std::isnan(mu)) mu = calibrate_baseline(mod, sc.target_rate);
    base.w(0) = mu;
    truth = TruthTrajectory(ParamVector(base.w), sc.schedule,
                            static_cast<double>(sc.window) * sc.delta);
    for (long t = 0; t < T; ++t) rate(t) = logistic(mu + mod(t));
  }

  SpikeTrain spikes = sample_spikes(rate, sc.delta, rng);
  return {std::move(stim), std::move(truth), std::move(rate),
          std::move(spikes)};
}

namespace {

Eigen::VectorXd window_spikes(const SpikeTrain& spikes, long k, int w) {
  Eigen::VectorXd n(w);
  for (int j = 0; j < w; ++j)
    n(j) = static_cast<double>(spikes.bins[(k - 1) * w + j]);
  return n;
}

}  // namespace

void StudyConfig::validate() const {
  scenario.validate();
  if (realizations < 1)
    throw config_error("study: realizations must be >= 1");
  if (selection.empty()) throw config_error("study: no filters selected");
  for (const auto& f : selection) {
    if (f != "ppf1" && f != "ppf0" && f != "ssppf" && f != "sdppf")
      throw config_error("study: unknown filter " + f);
  }
  if (gof_burn_in < 0.0 || gof_burn_in >= 1.0)
    throw config_error("study: gof burn-in must lie in [0, 1)");
}

Scenario study1_scenario() {
  Scenario sc;
  sc.delta = 1e-3;
  sc.window = 1;
  sc.num_windows = 30000;  // 30 s
  sc.dim = 101;
  sc.sparsity = 3;
  sc.theta_norm = 10.0;
  sc.stimulus_variance = 0.01;
  sc.target_rate = 0.13;
  return sc;
}

Scenario study2_scenario() {
  Scenario sc;
  sc.delta = 1e-3;
  sc.window = 1;
  sc.num_windows = 60000;  // 60 s
  sc.dim = 101;
  sc.sparsity = 3;
  sc.theta_norm = 0.0;  // values are scheduled, not drawn
  sc.mu = -2.51;
  sc.stimulus_variance = 0.01;
  const double t_drop = 30.0;  // halfway; the drop completes within 1 s
  sc.schedule = {
      {1, {{{0.0, 10.0}, {t_drop, 10.0}, {t_drop + 1.0, 0.0}}}},
      {10, {{{0.0, -5.0}}}},
      {20, {{{0.0, 5.0}}}},
  };
  return sc;
}

FilterSettings study1_filters() {
  // Tuned so every filter runs as a tracker with comparable effective
  // memory (about 1/(1-beta) bins); the baselines' knobs are their
  // adaptivity, not a convergence rate toward the static solution.
  FilterSettings fs;
  const double alpha = default_step_size(0.999, 101, 1, 0.01, 1.0);
  fs.ppf1.beta = 0.999;
  fs.ppf1.prox = {alpha, 0.5, 1, 1.0, true};
  fs.ppf0.beta = 0.999;
  fs.ppf0.prox = {alpha, 0.72, 1, 1.0, true};
  fs.sdppf_rho = 1.0;
  fs.ssppf = {7e-4, 1.0};
  return fs;
}

FilterSettings study2_filters() {
  FilterSettings fs;
  fs.ppf1.beta = 0.9995;
  fs.ppf1.prox = {default_step_size(0.9995, 101, 1, 0.01, 1.0), 0.5, 1, 1.0,
                  true};
  fs.ppf0.beta = 0.995;
  fs.ppf0.prox = {default_step_size(0.995, 101, 1, 0.01, 1.0), 0.1, 1, 1.0,
                  true};
  fs.sdppf_rho = 1.0;
  fs.ssppf = {6e-4, 1.0};
  return fs;
}

StudyConfig study1_defaults() {
  StudyConfig cfg;
  cfg.scenario = study1_scenario();
  cfg.filters = study1_filters();
  cfg.realizations = 200;
  return cfg;
}

StudyConfig study2_defaults() {
  StudyConfig cfg;
  cfg.scenario = study2_scenario();
  cfg.filters = study2_filters();
  cfg.realizations = 1;
  cfg.confidence.coords = {1};
  cfg.confidence.stride = 10;
  return cfg;
}

double Study1Result::steady_state_mse_db(const std::string& filter,
                                         double fraction) const {
  for (std::size_t i = 0; i < filters.size(); ++i) {
    if (filters[i] == filter) {
      const long K = mse[i].size();
      const long tail = std::max<long>(1, static_cast<long>(fraction * K));
      const double mean = mse[i].tail(tail).mean();
      return mean > 0.0 ? 10.0 * std::log10(mean) : kDbFloor;
    }
  }
  throw std::invalid_argument("unknown filter: " + filter);
}

double Study1Result::steady_state_spm(const std::string& filter,
                                      double fraction) const {
  for (std::size_t i = 0; i < filters.size(); ++i) {
    if (filters[i] == filter) {
      const long K = spm[i].size();
      const long tail = std::max<long>(1, static_cast<long>(fraction * K));
      return spm[i].tail(tail).mean();
    }
  }
  throw std::invalid_argument("unknown filter: " + filter);
}

Study1Result study1(const StudyConfig& config) {
  config.validate();
  const Scenario& sc = config.scenario;
  const long K = sc.num_windows;
  const std::size_t nf = config.selection.size();

  struct Buffer {
    std::vector<Eigen::ArrayXd> err, spm_num, spm_den;
    Eigen::ArrayXd truth_sq;
  };

  auto work = [&](long r) -> Buffer {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    ScenarioData data = generate_scenario_data(sc, rng);
    const std::vector<int>& support = data.truth.support();

    std::vector<FilterInstance> filters;
    filters.reserve(nf);
    for (const auto& name : config.selection)
      filters.push_back(FilterInstance::make(name, sc.dim, config.filters));

    Buffer buf;
    buf.err.assign(nf, Eigen::ArrayXd::Zero(K));
    buf.spm_num.assign(nf, Eigen::ArrayXd::Zero(K));
    buf.spm_den.assign(nf, Eigen::ArrayXd::Zero(K));
    buf.truth_sq = Eigen::ArrayXd::Zero(K);

    for (long k = 1; k <= K; ++k) {
      const DesignWindow X = build_design(data.stimulus, sc.dim, sc.window, k);
      const Eigen::VectorXd n = window_spikes(data.spikes, k, sc.window);
      const Eigen::VectorXd truth = data.truth.at_window(k);
      buf.truth_sq(k - 1) = truth.squaredNorm();
      for (std::size_t f = 0; f < nf; ++f) {
        filters[f].update(n, X);
        const Eigen::VectorXd& est = filters[f].estimate().w;
        buf.err[f](k - 1) = (est - truth).squaredNorm();
        const double total = est.tail(sc.dim - 1).squaredNorm();
        double on = 0.0;
        for (int s : support) on += est(s) * est(s);
        buf.spm_num[f](k - 1) = total - on;
        buf.spm_den[f](k - 1) = total;
      }
    }
    return buf;
  };

  std::vector<Eigen::ArrayXd> err_sum(nf, Eigen::ArrayXd::Zero(K));
  std::vector<Eigen::ArrayXd> spm_num(nf, Eigen::ArrayXd::Zero(K));
  std::vector<Eigen::ArrayXd> spm_den(nf, Eigen::ArrayXd::Zero(K));
  Eigen::ArrayXd truth_sum = Eigen::ArrayXd::Zero(K);

  ordered_parallel<Buffer>(config.realizations, config.threads, work,
                           [&](long, Buffer& b) {
                             for (std::size_t f = 0; f < nf; ++f) {
                               err_sum[f] += b.err[f];
                               spm_num[f] += b.spm_num[f];
                               spm_den[f] += b.spm_den[f];
                             }
                             truth_sum += b.truth_sq;
                           });

  Study1Result out;
  out.filters = config.selection;
  out.delta = sc.delta;
  out.window = sc.window;
  out.mse.resize(nf);
  out.mse_db.resize(nf);
  out.spm.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    out.mse[f] = err_sum[f] / truth_sum.max(1e-300);
    out.mse_db[f] = out.mse[f].unaryExpr([](double v) {
      return v > 0.0 ? 10.0 * std::log10(v) : kDbFloor;
    });
    out.spm[f] = spm_num[f] / spm_den[f].max(1e-300);
  }
  return out;
}

Study2Result study2(const StudyConfig& config) {
  config.validate();
  const Scenario& sc = config.scenario;
  if (sc.schedule.empty())
    throw config_error("study2 needs scheduled dynamics");
  const long K = sc.num_windows;
  const long T = sc.bins();

  Rng rng(derive_seed(config.seed, 0));
  ScenarioData data = generate_scenario_data(sc, rng);
  const std::vector<int>& support = data.truth.support();

  Study2Result out;
  out.filters = config.selection;
  out.delta = sc.delta;
  out.window = sc.window;
  out.tracked_coords = support;
  out.time.resize(K);
  for (long k = 1; k <= K; ++k)
    out.time(k - 1) = static_cast<double>(k * sc.window) * sc.delta;
  out.truth.resize(K, static_cast<Eigen::Index>(support.size()));
  out.true_rate = data.true_rate;
  out.spikes = data.spikes;
  out.gof_burn_in_bins = static_cast<long>(config.gof_burn_in * T);

  std::vector<FilterInstance> filters;
  for (const auto& name : config.selection)
    filters.push_back(FilterInstance::make(name, sc.dim, config.filters));

  std::map<std::string, ConfidenceTracker> trackers;
  const bool want_ci = !config.confidence.coords.empty();
  for (auto& fi : filters) {
    out.estimates[fi.name()] =
        Eigen::MatrixXd::Zero(K, static_cast<Eigen::Index>(support.size()));
    out.off_support_max[fi.name()] = Eigen::ArrayXd::Zero(K);
    out.rate[fi.name()] = Eigen::ArrayXd::Zero(T);
    if (want_ci && (fi.name() == "ppf1" || fi.name() == "ppf0")) {
      ConfidenceOptions copts = config.confidence;
      copts.track_hessian = (fi.name() == "ppf0");
      const double beta = fi.name() == "ppf1" ? config.filters.ppf1.beta
                                              : config.filters.ppf0.beta;
      trackers.emplace(fi.name(), ConfidenceTracker(sc.dim, beta, copts));
    }
  }

  for (long k = 1; k <= K; ++k) {
    const DesignWindow X = build_design(data.stimulus, sc.dim, sc.window, k);
    const Eigen::VectorXd n = window_spikes(data.spikes, k, sc.window);
    const Eigen::VectorXd truth = data.truth.at_window(k);
    for (std::size_t c = 0; c < support.size(); ++c)
      out.truth(k - 1, static_cast<Eigen::Index>(c)) = truth(support[c]);

    for (auto& fi : filters) {
      fi.update(n, X);
      const Eigen::VectorXd& est = fi.estimate().w;
      for (std::size_t c = 0; c < support.size(); ++c)
        out.estimates[fi.name()](k - 1, static_cast<Eigen::Index>(c)) =
            est(support[c]);
      double off = 0.0;
      for (int i = 1; i < sc.dim; ++i) {
        if (std::find(support.begin(), support.end(), i) == support.end())
          off = std::max(off, std::abs(est(i)));
      }
      out.off_support_max[fi.name()](k - 1) = off;

      const Eigen::VectorXd lam = logistic_cif(X, fi.estimate());
      out.rate[fi.name()].segment((k - 1) * sc.window, sc.window) = lam;

      auto it = trackers.find(fi.name());
      if (it != trackers.end()) {
        const Eigen::VectorXd eps = innovation(n, lam);
        it->second.observe(X, eps, lam);
        if (it->second.due()) {
          std::vector<CoordInterval> rows;
          if (auto* p1 = fi.ppf1()) {
            rows = it->second.evaluate(*p1);
          } else if (auto* p0 = fi.ppf0()) {
            rows = it->second.evaluate(*p0);
          }
          auto& dst = out.intervals[fi.name()];
          dst.insert(dst.end(), rows.begin(), rows.end());
        }
      }
    }
  }

  // goodness-of-fit on the post-warm-up segment
  const long b0 = out.gof_burn_in_bins;
  if (T - b0 > 20) {
    SpikeTrain tail;
    tail.delta = sc.delta;
    tail.bins.assign(data.spikes.bins.begin() + b0, data.spikes.bins.end());
    for (auto& fi : filters) {
      const Eigen::VectorXd lam =
          out.rate[fi.name()].segment(b0, T - b0).matrix();
      Rng gof_rng(derive_seed(config.seed, 9000 + out.ks.size()));
      TimeRescaleOptions topts;
      topts.jitter = config.gof_jitter;
      topts.rng = &gof_rng;
      const RescaledTimes z = time_rescale(tail, lam, topts);
      out.ks.emplace(fi.name(), ks_test(z));
      out.acf.emplace(fi.name(), acf_test(z, config.gof_max_lag));
    }
  }

  if (config.with_nrc) {
    const ParamVector theta = nrc_estimate(data.spikes, data.stimulus, sc.dim);
    Eigen::ArrayXd rate(T);
    for (long k = 1; k <= K; ++k) {
      const DesignWindow X = build_design(data.stimulus, sc.dim, sc.window, k);
      rate.segment((k - 1) * sc.window, sc.window) = (X.X * theta.w).array();
    }
    out.rate["nrc"] = rate;  // linear-model probabilities; may be negative
  }

  return out;
}

}  // namespace sppf
