#include "sppf/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "sppf/cv.hpp"
#include "sppf/errors.hpp"
#include "sppf/io.hpp"
#include "sppf/prox.hpp"

namespace sppf {

using nlohmann::json;

void StrfConfig::validate() const {
  if (lags < 1 || bands < 1) throw config_error("strf: plane must be >= 1x1");
  if (grid < 1 || grid > lags || grid > bands)
    throw config_error("strf: atom grid must fit inside the plane");
  if (!(delta > 0.0)) throw config_error("strf: delta must be > 0");
  if (bins < window) throw config_error("strf: fewer bins than one window");
  if (window < 1) throw config_error("strf: window must be >= 1");
  if (!(beta > 0.0) || beta >= 1.0)
    throw config_error("strf: beta must lie in (0, 1)");
  if (gamma < 0.0) throw config_error("strf: gamma must be >= 0");
  if (planted_atoms.size() != planted_coeffs.size())
    throw config_error("strf: planted atoms/coeffs size mismatch");
  for (int a : planted_atoms) {
    if (a < 0 || a >= grid * grid)
      throw config_error("strf: planted atom index out of range");
  }
  if (spectrogram_file.empty() != spike_file.empty())
    throw config_error("strf: real-data mode needs both files");
}

void ExperimentConfig::validate() const {
  if (mode != "study1" && mode != "study2" && mode != "strf" &&
      mode != "custom")
    throw config_error("mode must be study1|study2|strf|custom, got " + mode);
  if (out_dir.empty()) throw config_error("output directory must be set");
  if (mode == "study1" || mode == "study2") study.validate();
  if (mode == "strf") strf.validate();
  if (mode == "custom") {
    if (custom.spike_file.empty() || custom.stimulus_file.empty())
      throw config_error("custom mode needs spike and stimulus files");
    if (custom.dim < 2) throw config_error("custom: dim must be >= 2");
    if (custom.window < 1) throw config_error("custom: window must be >= 1");
  }
  if (!cv_grid.empty()) {
    if (cv_filter != "ppf0" && cv_filter != "ppf1")
      throw config_error("cv filter must be ppf0 or ppf1");
    for (double g : cv_grid)
      if (g < 0.0) throw config_error("cv grid values must be >= 0");
  }
  if (!(rate_t1 >= rate_t0)) throw config_error("rate window must be ordered");
}

ExperimentConfig default_config(const std::string& mode) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  if (mode == "study2") {
    cfg.study = study2_defaults();
  } else {
    cfg.study = study1_defaults();
    if (mode == "custom") {
      cfg.study.selection = {"ppf1"};
      cfg.study.confidence.coords = {};
    }
  }
  return cfg;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw config_error("unknown key '" + it.key() + "' in " + where);
  }
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<double>();
}

void parse_prox(const json& j, const std::string& where, FilterHyper& hyper) {
  check_keys(j,
             {"beta", "gamma", "step_size", "iterations", "step_constant",
              "penalize_baseline"},
             where);
  hyper.beta = get_number(j, "beta", hyper.beta);
  hyper.prox.gamma = get_number(j, "gamma", hyper.prox.gamma);
  // explicit null means "use the step-size rule"
  if (j.contains("step_size"))
    hyper.prox.step_size =
        j.at("step_size").is_null() ? 0.0 : j.at("step_size").get<double>();
  if (j.contains("iterations"))
    hyper.prox.iterations = j.at("iterations").get<int>();
  hyper.prox.step_constant =
      get_number(j, "step_constant", hyper.prox.step_constant);
  if (j.contains("penalize_baseline"))
    hyper.prox.penalize_baseline = j.at("penalize_baseline").get<bool>();
}

void parse_scenario(const json& j, Scenario& sc) {
  check_keys(j,
             {"delta", "window", "num_windows", "duration_sec", "dim",
              "sparsity", "theta_norm", "target_rate", "mu",
              "stimulus_variance", "schedule"},
             "scenario");
  sc.delta = get_number(j, "delta", sc.delta);
  if (j.contains("window")) sc.window = j.at("window").get<int>();
  if (j.contains("num_windows"))
    sc.num_windows = j.at("num_windows").get<long>();
  if (j.contains("duration_sec")) {
    const double dur = j.at("duration_sec").get<double>();
    sc.num_windows = std::lround(dur / (sc.delta * sc.window));
  }
  if (j.contains("dim")) sc.dim = j.at("dim").get<int>();
  if (j.contains("sparsity")) sc.sparsity = j.at("sparsity").get<int>();
  sc.theta_norm = get_number(j, "theta_norm", sc.theta_norm);
  sc.target_rate = get_number(j, "target_rate", sc.target_rate);
  if (j.contains("mu"))
    sc.mu = j.at("mu").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                 : j.at("mu").get<double>();
  sc.stimulus_variance =
      get_number(j, "stimulus_variance", sc.stimulus_variance);
  if (j.contains("schedule")) {
    sc.schedule.clear();
    for (const auto& e : j.at("schedule")) {
      check_keys(e, {"index", "knots"}, "scenario.schedule[]");
      CoordSchedule cs;
      cs.omega_index = e.at("index").get<int>();
      for (const auto& kn : e.at("knots")) {
        if (!kn.is_array() || kn.size() != 2)
          throw config_error("schedule knots must be [time, value] pairs");
        cs.trajectory.knots.emplace_back(kn[0].get<double>(),
                                         kn[1].get<double>());
      }
      sc.schedule.push_back(std::move(cs));
    }
  }
}

void parse_confidence(const json& j, ConfidenceOptions& c) {
  check_keys(j,
             {"coords", "level", "stride", "gamma_node", "nodewise_iterations",
              "nodewise_step"},
             "confidence");
  if (j.contains("coords")) c.coords = j.at("coords").get<std::vector<int>>();
  c.level = get_number(j, "level", c.level);
  if (j.contains("stride")) c.stride = j.at("stride").get<long>();
  if (j.contains("gamma_node"))
    c.gamma_node = j.at("gamma_node").is_null()
                       ? -1.0
                       : j.at("gamma_node").get<double>();
  if (j.contains("nodewise_iterations"))
    c.nodewise_iterations = j.at("nodewise_iterations").get<int>();
  c.nodewise_step = get_number(j, "nodewise_step", c.nodewise_step);
}

void parse_strf(const json& j, StrfConfig& s) {
  check_keys(j,
             {"lags", "bands", "grid", "f_lo", "f_hi", "delta", "bins",
              "window", "mu", "target_var", "n_ripples", "planted_atoms",
              "planted_coeffs", "beta", "gamma", "iterations", "step_constant",
              "step_size", "snapshot_times", "trace_points",
              "spectrogram_file", "spike_file"},
             "strf");
  if (j.contains("lags")) s.lags = j.at("lags").get<int>();
  if (j.contains("bands")) s.bands = j.at("bands").get<int>();
  if (j.contains("grid")) s.grid = j.at("grid").get<int>();
  s.f_lo = get_number(j, "f_lo", s.f_lo);
  s.f_hi = get_number(j, "f_hi", s.f_hi);
  s.delta = get_number(j, "delta", s.delta);
  if (j.contains("bins")) s.bins = j.at("bins").get<long>();
  if (j.contains("window")) s.window = j.at("window").get<int>();
  s.mu = get_number(j, "mu", s.mu);
  s.target_var = get_number(j, "target_var", s.target_var);
  if (j.contains("n_ripples")) s.n_ripples = j.at("n_ripples").get<int>();
  if (j.contains("planted_atoms"))
    s.planted_atoms = j.at("planted_atoms").get<std::vector<int>>();
  if (j.contains("planted_coeffs"))
    s.planted_coeffs = j.at("planted_coeffs").get<std::vector<double>>();
  s.beta = get_number(j, "beta", s.beta);
  s.gamma = get_number(j, "gamma", s.gamma);
  if (j.contains("iterations")) s.iterations = j.at("iterations").get<int>();
  s.step_constant = get_number(j, "step_constant", s.step_constant);
  s.step_size = get_number(j, "step_size", s.step_size);
  if (j.contains("snapshot_times"))
    s.snapshot_times = j.at("snapshot_times").get<std::vector<double>>();
  if (j.contains("trace_points")) {
    s.trace_points.clear();
    for (const auto& p : j.at("trace_points")) {
      if (!p.is_array() || p.size() != 2)
        throw config_error("trace points must be [lag, band] pairs");
      s.trace_points.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
  }
  if (j.contains("spectrogram_file"))
    s.spectrogram_file = j.at("spectrogram_file").get<std::string>();
  if (j.contains("spike_file"))
    s.spike_file = j.at("spike_file").get<std::string>();
}

// Fill rule-based step sizes once the scenario is known.
void resolve_step_sizes(StudyConfig& s) {
  for (FilterHyper* h : {&s.filters.ppf1, &s.filters.ppf0}) {
    if (h->prox.step_size <= 0.0) {
      h->prox.step_size =
          default_step_size(h->beta, s.scenario.dim, s.scenario.window,
                            s.scenario.stimulus_variance,
                            h->prox.step_constant);
    }
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(origin + ": " + e.what());
  }
  check_keys(j,
             {"mode", "seed", "out", "ensemble", "threads", "filters",
              "scenario", "hyper", "confidence", "gof", "cv", "strf", "custom",
              "rate_window"},
             origin);
  const std::string mode =
      j.contains("mode") ? j.at("mode").get<std::string>() : "study1";
  ExperimentConfig cfg = default_config(mode);

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  if (j.contains("ensemble"))
    cfg.study.realizations = j.at("ensemble").get<int>();
  if (j.contains("threads")) cfg.study.threads = j.at("threads").get<int>();
  if (j.contains("filters"))
    cfg.study.selection = j.at("filters").get<std::vector<std::string>>();
  if (j.contains("scenario")) parse_scenario(j.at("scenario"), cfg.study.scenario);
  if (j.contains("hyper")) {
    const json& h = j.at("hyper");
    check_keys(h, {"ppf1", "ppf0", "ssppf", "sdppf"}, "hyper");
    if (h.contains("ppf1"))
      parse_prox(h.at("ppf1"), "hyper.ppf1", cfg.study.filters.ppf1);
    if (h.contains("ppf0"))
      parse_prox(h.at("ppf0"), "hyper.ppf0", cfg.study.filters.ppf0);
    if (h.contains("ssppf")) {
      check_keys(h.at("ssppf"), {"q", "initial_cov"}, "hyper.ssppf");
      cfg.study.filters.ssppf.q =
          get_number(h.at("ssppf"), "q", cfg.study.filters.ssppf.q);
      cfg.study.filters.ssppf.initial_cov = get_number(
          h.at("ssppf"), "initial_cov", cfg.study.filters.ssppf.initial_cov);
    }
    if (h.contains("sdppf")) {
      check_keys(h.at("sdppf"), {"rho"}, "hyper.sdppf");
      cfg.study.filters.sdppf_rho =
          get_number(h.at("sdppf"), "rho", cfg.study.filters.sdppf_rho);
    }
  }
  if (j.contains("confidence"))
    parse_confidence(j.at("confidence"), cfg.study.confidence);
  if (j.contains("gof")) {
    const json& g = j.at("gof");
    check_keys(g, {"max_lag", "burn_in", "jitter"}, "gof");
    if (g.contains("max_lag"))
      cfg.study.gof_max_lag = g.at("max_lag").get<int>();
    cfg.study.gof_burn_in = get_number(g, "burn_in", cfg.study.gof_burn_in);
    if (g.contains("jitter")) cfg.study.gof_jitter = g.at("jitter").get<bool>();
  }
  if (j.contains("cv")) {
    const json& c = j.at("cv");
    check_keys(c, {"grid", "filter"}, "cv");
    if (c.contains("grid"))
      cfg.cv_grid = c.at("grid").get<std::vector<double>>();
    if (c.contains("filter"))
      cfg.cv_filter = c.at("filter").get<std::string>();
  }
  if (j.contains("strf")) parse_strf(j.at("strf"), cfg.strf);
  if (j.contains("custom")) {
    const json& c = j.at("custom");
    check_keys(c, {"spike_file", "stimulus_file", "dim", "window"}, "custom");
    if (c.contains("spike_file"))
      cfg.custom.spike_file = c.at("spike_file").get<std::string>();
    if (c.contains("stimulus_file"))
      cfg.custom.stimulus_file = c.at("stimulus_file").get<std::string>();
    if (c.contains("dim")) cfg.custom.dim = c.at("dim").get<int>();
    if (c.contains("window")) cfg.custom.window = c.at("window").get<int>();
  }
  if (j.contains("rate_window")) {
    const json& r = j.at("rate_window");
    check_keys(r, {"t0", "t1"}, "rate_window");
    cfg.rate_t0 = get_number(r, "t0", cfg.rate_t0);
    cfg.rate_t1 = get_number(r, "t1", cfg.rate_t1);
  }
  resolve_step_sizes(cfg.study);
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text, path.string());
}

StrfRunResult run_strf(const StrfConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, 0));

  StrfRunResult out;
  out.dict = gabor_dictionary(cfg.lags, cfg.bands, cfg.grid, cfg.grid);
  const int n_atoms = out.dict.num_atoms();
  const int dim = 1 + n_atoms;  // baseline + coefficients

  Spectrogram spec;
  SpikeTrain spikes;
  if (cfg.spectrogram_file.empty()) {
    spec = gen_torc(cfg.bands, cfg.bins, cfg.delta, cfg.f_lo, cfg.f_hi,
                    cfg.n_ripples, cfg.target_var, rng);
  } else {
    spec = read_spectrogram(cfg.spectrogram_file);
    spikes = read_spike_train(cfg.spike_file);
    if (spikes.length() != spec.bins())
      throw config_error("strf: spike train and spectrogram length differ");
  }

  DictionaryProjector projector(out.dict, spec);
  const long K = spec.bins() / cfg.window;

  if (cfg.spectrogram_file.empty()) {
    // plant a sparse coefficient vector and sample spikes from it
    out.xi_true = Eigen::VectorXd::Zero(n_atoms);
    for (std::size_t i = 0; i < cfg.planted_atoms.size(); ++i)
      out.xi_true(cfg.planted_atoms[i]) = cfg.planted_coeffs[i];
    out.strf_true = strf_reconstruct(out.xi_true, out.dict);
    Eigen::VectorXd rate(spec.bins());
    for (long t = 1; t <= spec.bins(); ++t)
      rate(t - 1) = logistic(cfg.mu + projector.covariates(t).dot(out.xi_true));
    spikes = sample_spikes(rate, cfg.delta, rng);
  }

  FilterHyper hyper;
  hyper.beta = cfg.beta;
  hyper.prox.gamma = cfg.gamma;
  hyper.prox.iterations = cfg.iterations;
  hyper.prox.step_constant = cfg.step_constant;
  hyper.prox.step_size = cfg.step_size;
  if (hyper.prox.step_size <= 0.0) {
    // the step rule uses the full plane dimension and the raw spectrogram
    // variance, not the coefficient-space width
    hyper.prox.step_size =
        default_step_size(cfg.beta, cfg.lags * cfg.bands + 1, cfg.window,
                          spec.sample_variance(), cfg.step_constant);
  }
  Ppf1Filter filter(dim, hyper);

  std::vector<long> snapshot_windows;
  for (double t : cfg.snapshot_times) {
    long k = std::lround(t / (cfg.delta * cfg.window));
    snapshot_windows.push_back(std::clamp<long>(k, 1, K));
  }

  out.trace_time.resize(K);
  out.traces.resize(K, static_cast<Eigen::Index>(cfg.trace_points.size()));
  Eigen::VectorXd n(cfg.window);
  for (long k = 1; k <= K; ++k) {
    const DesignWindow X = projector.design(cfg.window, k);
    for (int j = 0; j < cfg.window; ++j)
      n(j) = static_cast<double>(spikes.bins[(k - 1) * cfg.window + j]);
    filter.update(n, X);

    out.trace_time(k - 1) = static_cast<double>(k * cfg.window) * cfg.delta;
    if (!cfg.trace_points.empty()) {
      const Eigen::VectorXd theta =
          out.dict.atoms * filter.estimate().w.tail(n_atoms);
      for (std::size_t p = 0; p < cfg.trace_points.size(); ++p) {
        const auto& [lag, band] = cfg.trace_points[p];
        out.traces(k - 1, static_cast<Eigen::Index>(p)) =
            theta(static_cast<Eigen::Index>(lag) * cfg.bands + band);
      }
    }
    for (std::size_t s = 0; s < snapshot_windows.size(); ++s) {
      if (snapshot_windows[s] == k) {
        out.snapshots.emplace_back(
            out.trace_time(k - 1),
            strf_reconstruct(filter.estimate().w.tail(n_atoms), out.dict));
      }
    }
  }

  out.xi_hat = filter.estimate().w.tail(n_atoms);
  out.mu_hat = filter.estimate().w(0);
  out.strf_hat = strf_reconstruct(out.xi_hat, out.dict);
  return out;
}

namespace {

std::string series_csv_name(const std::string& prefix, const std::string& tag) {
  return prefix + "." + tag;
}

void write_rate_csv(const std::filesystem::path& path, double delta,
                    double t0, double t1, const Eigen::ArrayXd& true_rate,
                    const SpikeTrain& spikes,
                    const std::map<std::string, Eigen::ArrayXd>& rates) {
  CsvWriter csv(path, "rates", {"time", "series_name", "value"});
  const long T = true_rate.size();
  const long b0 = std::max<long>(0, std::lround(t0 / delta));
  const long b1 = std::min<long>(T, std::lround(t1 / delta) + 1);
  for (long t = b0; t < b1; ++t) {
    const double time = (t + 1) * delta;
    csv.row(time, "true", true_rate(t));
    csv.row(time, "spikes", static_cast<double>(spikes.bins[t]));
    for (const auto& [name, r] : rates) csv.row(time, name, r(t));
  }
}

void write_strf_matrix_csv(const std::filesystem::path& path,
                           const std::string& name,
                           const Eigen::MatrixXd& strf) {
  std::vector<std::string> cols;
  cols.push_back("lag");
  for (int b = 0; b < strf.cols(); ++b)
    cols.push_back("band" + std::to_string(b));
  CsvWriter csv(path, name, cols);
  for (int i = 0; i < strf.rows(); ++i) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(i));
    for (int b = 0; b < strf.cols(); ++b)
      cells.push_back(CsvWriter::format_cell(strf(i, b)));
    csv.raw_row(cells);
  }
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& config_in) {
  ExperimentConfig config = config_in;
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.out_dir);
  std::vector<std::string> files;
  json manifest;
  manifest["schema"] = kCsvSchema;
  manifest["mode"] = config.mode;
  manifest["seed"] = config.seed;
  manifest["git"] = git_describe();

  // optional cross-validation of gamma for one filter
  if (!config.cv_grid.empty() && config.mode != "strf") {
    SpikeTrain spikes;
    StimulusSequence stim;
    int dim = 0, window = 1;
    if (config.mode == "custom") {
      spikes = read_spike_train(config.custom.spike_file);
      stim = read_stimulus(config.custom.stimulus_file);
      dim = config.custom.dim;
      window = config.custom.window;
    } else {
      Rng rng(derive_seed(config.seed, 0xCF));
      ScenarioData data = generate_scenario_data(config.study.scenario, rng);
      spikes = std::move(data.spikes);
      stim = std::move(data.stimulus);
      dim = config.study.scenario.dim;
      window = config.study.scenario.window;
    }
    const FilterHyper& base = config.cv_filter == "ppf1"
                                  ? config.study.filters.ppf1
                                  : config.study.filters.ppf0;
    const CvResult cv = cross_validate_gamma(spikes, stim, dim, window,
                                             config.cv_grid, base,
                                             config.cv_filter);
    if (config.cv_filter == "ppf1") {
      config.study.filters.ppf1.prox.gamma = cv.gamma_star;
    } else {
      config.study.filters.ppf0.prox.gamma = cv.gamma_star;
    }
    manifest["cv"] = {{"filter", config.cv_filter},
                      {"gamma_star", cv.gamma_star},
                      {"grid", cv.grid},
                      {"scores", cv.scores}};
  }

  const auto add_file = [&](const std::string& rel) { files.push_back(rel); };

  if (config.mode == "study1") {
    const Study1Result res = study1(config.study);
    const std::string rel = "learning_curves.csv";
    CsvWriter csv(config.out_dir / rel, "learning_curves",
                  {"k_or_time", "series_name", "value"});
    const long K = res.mse_db.empty() ? 0 : res.mse_db.front().size();
    for (long k = 0; k < K; ++k) {
      const double time = (k + 1) * res.delta * res.window;
      for (std::size_t f = 0; f < res.filters.size(); ++f) {
        csv.row(time, series_csv_name("mse_db", res.filters[f]),
                res.mse_db[f](k));
        csv.row(time, series_csv_name("spm", res.filters[f]), res.spm[f](k));
      }
    }
    add_file(rel);
    manifest["inputs"] = {
        {"realizations", config.study.realizations},
        {"dim", config.study.scenario.dim},
        {"num_windows", config.study.scenario.num_windows},
        {"window", config.study.scenario.window}};
    json steady;
    for (const auto& f : res.filters) {
      steady[f] = {{"mse_db", res.steady_state_mse_db(f)},
                   {"spm", res.steady_state_spm(f)}};
    }
    manifest["steady_state"] = steady;
  } else if (config.mode == "study2") {
    const Study2Result res = study2(config.study);
    {
      const std::string rel = "trajectories.csv";
      CsvWriter csv(config.out_dir / rel, "trajectories",
                    {"k_or_time", "series_name", "value"});
      for (long k = 0; k < res.time.size(); ++k) {
        for (std::size_t c = 0; c < res.tracked_coords.size(); ++c) {
          const std::string coord = "w" + std::to_string(res.tracked_coords[c]);
          csv.row(res.time(k), series_csv_name("true", coord),
                  res.truth(k, static_cast<Eigen::Index>(c)));
          for (const auto& [name, est] : res.estimates)
            csv.row(res.time(k), name + "." + coord,
                    est(k, static_cast<Eigen::Index>(c)));
        }
        for (const auto& [name, off] : res.off_support_max)
          csv.row(res.time(k), series_csv_name("offmax", name), off(k));
      }
      add_file(rel);
    }
    for (const auto& [name, rows] : res.intervals) {
      const std::string rel = "confidence_" + name + ".csv";
      write_confidence_csv(config.out_dir / rel, rows);
      add_file(rel);
    }
    for (const auto& [name, ks] : res.ks) {
      const std::string rel = "ks_" + name + ".csv";
      write_ks_csv(config.out_dir / rel, ks);
      add_file(rel);
    }
    for (const auto& [name, acf] : res.acf) {
      const std::string rel = "acf_" + name + ".csv";
      write_acf_csv(config.out_dir / rel, acf);
      add_file(rel);
    }
    {
      const std::string rel = "rates.csv";
      write_rate_csv(config.out_dir / rel, res.delta, config.rate_t0,
                     config.rate_t1, res.true_rate, res.spikes, res.rate);
      add_file(rel);
    }
    json gof;
    for (const auto& [name, ks] : res.ks) {
      gof[name] = {{"ks_statistic", ks.statistic},
                   {"ks_band", ks.band},
                   {"ks_pass", ks.pass},
                   {"acf_pass", res.acf.at(name).pass}};
    }
    manifest["gof"] = gof;
  } else if (config.mode == "strf") {
    const StrfRunResult res = run_strf(config.strf, config.seed);
    if (res.xi_true.size() > 0) {
      write_strf_matrix_csv(config.out_dir / "strf_true.csv", "strf_true",
                            res.strf_true);
      add_file("strf_true.csv");
    }
    write_strf_matrix_csv(config.out_dir / "strf_final.csv", "strf_final",
                          res.strf_hat);
    add_file("strf_final.csv");
    for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
      const std::string rel = "strf_snapshot_" + std::to_string(s) + ".csv";
      write_strf_matrix_csv(config.out_dir / rel,
                            "strf_snapshot t=" +
                                CsvWriter::format_cell(res.snapshots[s].first),
                            res.snapshots[s].second);
      add_file(rel);
    }
    {
      CsvWriter csv(config.out_dir / "xi_final.csv", "xi_final",
                    {"atom", "value"});
      for (long p = 0; p < res.xi_hat.size(); ++p)
        csv.row(p, res.xi_hat(p));
      add_file("xi_final.csv");
    }
    if (!config.strf.trace_points.empty()) {
      CsvWriter csv(config.out_dir / "strf_trace.csv", "strf_trace",
                    {"time", "point", "value"});
      for (long k = 0; k < res.trace_time.size(); ++k) {
        for (std::size_t p = 0; p < config.strf.trace_points.size(); ++p) {
          const auto& [lag, band] = config.strf.trace_points[p];
          csv.row(res.trace_time(k),
                  "lag" + std::to_string(lag) + "_band" + std::to_string(band),
                  res.traces(k, static_cast<Eigen::Index>(p)));
        }
      }
      add_file("strf_trace.csv");
    }
    manifest["mu_hat"] = res.mu_hat;
  } else {  // custom
    const SpikeTrain spikes = read_spike_train(config.custom.spike_file);
    const StimulusSequence stim = read_stimulus(config.custom.stimulus_file);
    const int dim = config.custom.dim;
    const int window = config.custom.window;
    const long K = spikes.length() / window;
    if (K < 1) throw config_error("custom: not enough bins for one window");
    const long T = K * window;

    // filters over the stream, rates recorded at the post-update estimate
    std::map<std::string, Eigen::ArrayXd> rates;
    std::map<std::string, Eigen::VectorXd> finals;
    std::map<std::string, std::vector<CoordInterval>> intervals;
    for (const auto& name : config.study.selection) {
      Eigen::ArrayXd rate(T);
      std::vector<CoordInterval> ivs;
      const bool want_ci = !config.study.confidence.coords.empty() &&
                           (name == "ppf1" || name == "ppf0");
      Ppf1Filter ppf1(dim, config.study.filters.ppf1);
      Ppf0Filter ppf0(dim, config.study.filters.ppf0);
      SdppfFilter sdppf(dim, config.study.filters.sdppf_rho);
      SsppfFilter ssppf(dim, config.study.filters.ssppf);
      ConfidenceOptions copts = config.study.confidence;
      copts.track_hessian = (name == "ppf0");
      const double beta = name == "ppf0" ? config.study.filters.ppf0.beta
                                         : config.study.filters.ppf1.beta;
      ConfidenceTracker tracker(dim, beta, copts);
      Eigen::VectorXd n(window);
      for (long k = 1; k <= K; ++k) {
        const DesignWindow X = build_design(stim, dim, window, k);
        for (int j = 0; j < window; ++j)
          n(j) = static_cast<double>(spikes.bins[(k - 1) * window + j]);
        const ParamVector* est = nullptr;
        if (name == "ppf1") {
          ppf1.update(n, X);
          est = &ppf1.estimate();
        } else if (name == "ppf0") {
          ppf0.update(n, X);
          est = &ppf0.estimate();
        } else if (name == "sdppf") {
          sdppf.update(n, X);
          est = &sdppf.estimate();
        } else {
          ssppf.update(n, X);
          est = &ssppf.estimate();
        }
        const Eigen::VectorXd lam = logistic_cif(X, *est);
        rate.segment((k - 1) * window, window) = lam;
        if (want_ci) {
          tracker.observe(X, innovation(n, lam), lam);
          if (tracker.due()) {
            auto rows = name == "ppf1" ? tracker.evaluate(ppf1)
                                       : tracker.evaluate(ppf0);
            ivs.insert(ivs.end(), rows.begin(), rows.end());
          }
        }
      }
      rates[name] = rate;
      finals[name] = name == "ppf1"    ? ppf1.estimate().w
                     : name == "ppf0"  ? ppf0.estimate().w
                     : name == "sdppf" ? sdppf.estimate().w
                                       : ssppf.estimate().w;
      if (name == "ppf1") {
        save_snapshot(ppf1, config.out_dir / "snapshot_ppf1.bin");
        add_file("snapshot_ppf1.bin");
      } else if (name == "ppf0") {
        save_snapshot(ppf0, config.out_dir / "snapshot_ppf0.bin");
        add_file("snapshot_ppf0.bin");
      }
      if (!ivs.empty()) intervals[name] = std::move(ivs);
    }

    {
      CsvWriter csv(config.out_dir / "final_estimates.csv", "final_estimates",
                    {"coord", "series_name", "value"});
      for (int c = 0; c < dim; ++c) {
        for (const auto& [name, w] : finals) csv.row(c, name, w(c));
      }
      add_file("final_estimates.csv");
    }
    {
      Eigen::ArrayXd true_rate = Eigen::ArrayXd::Zero(T);  // unknown
      SpikeTrain cut = spikes;
      cut.bins.resize(T);
      write_rate_csv(config.out_dir / "rates.csv", spikes.delta, 0.0,
                     T * spikes.delta, true_rate, cut, rates);
      add_file("rates.csv");
    }
    for (const auto& [name, rows] : intervals) {
      const std::string rel = "confidence_" + name + ".csv";
      write_confidence_csv(config.out_dir / rel, rows);
      add_file(rel);
    }
    // goodness-of-fit on the post-warm-up segment
    const long b0 = static_cast<long>(config.study.gof_burn_in * T);
    json gof;
    if (T - b0 > 20 && spikes.count() >= 12) {
      SpikeTrain tail;
      tail.delta = spikes.delta;
      tail.bins.assign(spikes.bins.begin() + b0, spikes.bins.begin() + T);
      int gi = 0;
      for (const auto& [name, rate] : rates) {
        Rng gof_rng(derive_seed(config.seed, 9000 + gi++));
        TimeRescaleOptions topts;
        topts.jitter = config.study.gof_jitter;
        topts.rng = &gof_rng;
        try {
          const RescaledTimes z =
              time_rescale(tail, rate.segment(b0, T - b0).matrix(), topts);
          const KsTest ks = ks_test(z);
          const AcfTest acf = acf_test(z, config.study.gof_max_lag);
          write_ks_csv(config.out_dir / ("ks_" + name + ".csv"), ks);
          add_file("ks_" + name + ".csv");
          write_acf_csv(config.out_dir / ("acf_" + name + ".csv"), acf);
          add_file("acf_" + name + ".csv");
          gof[name] = {{"ks_pass", ks.pass}, {"acf_pass", acf.pass}};
        } catch (const std::invalid_argument& e) {
          gof[name] = {{"error", e.what()}};
        }
      }
    }
    manifest["gof"] = gof;
  }

  const auto elapsed = std::chrono::steady_clock::now() - start;
  manifest["wall_time_sec"] =
      std::chrono::duration<double>(elapsed).count();
  manifest["outputs"] = files;
  {
    std::ofstream out(config.out_dir / "manifest.json");
    if (!out) throw config_error("cannot write manifest");
    out << manifest.dump(2) << "\n";
  }
  files.push_back("manifest.json");
  return files;
}

}  // namespace sppf
