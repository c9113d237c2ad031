#include <doctest.h>

#include "sppf/cv.hpp"
#include "sppf/errors.hpp"
#include "sppf/rng.hpp"
#include "sppf/simulation.hpp"

using namespace sppf;

namespace {

ScenarioData small_tracking_data(std::uint64_t seed) {
  Scenario sc;
  sc.delta = 1e-3;
  sc.window = 1;
  sc.num_windows = 20000;
  sc.dim = 31;
  sc.mu = -2.3;
  sc.stimulus_variance = 0.01;
  sc.schedule = {
      {1, {{{0.0, 8.0}}}},
      {10, {{{0.0, -4.0}}}},
      {20, {{{0.0, 4.0}}}},
  };
  Rng rng(derive_seed(seed, 0));
  return generate_scenario_data(sc, rng);
}

}  // namespace

TEST_CASE("cross validation basics") {
  const ScenarioData data = small_tracking_data(31);
  FilterHyper base;
  base.beta = 0.995;
  base.prox = {default_step_size(0.995, 31, 1, 0.01, 1.0), 0.0, 1, 1.0, true};

  SUBCASE("single-value grid returns it") {
    const double grid[] = {0.37};
    const CvResult res = cross_validate_gamma(data.spikes, data.stimulus, 31,
                                              1, grid, base, "ppf1");
    CHECK(res.gamma_star == doctest::Approx(0.37));
    CHECK(res.scores.size() == 1);
  }

  SUBCASE("empty grid and spikeless data are rejected") {
    const std::vector<double> grid;
    CHECK_THROWS_AS(cross_validate_gamma(data.spikes, data.stimulus, 31, 1,
                                         grid, base, "ppf1"),
                    config_error);
    SpikeTrain silent;
    silent.delta = 1e-3;
    silent.bins.assign(1000, 0);
    const double g2[] = {0.1};
    CHECK_THROWS_AS(cross_validate_gamma(silent, data.stimulus, 31, 1, g2,
                                         base, "ppf1"),
                    config_error);
  }

  SUBCASE("unknown filter kind is rejected") {
    const double grid[] = {0.1};
    CHECK_THROWS_AS(cross_validate_gamma(data.spikes, data.stimulus, 31, 1,
                                         grid, base, "ssppf"),
                    config_error);
  }

  SUBCASE("selection prefers a moderate gamma over extremes") {
    const double grid[] = {0.0, 0.2, 50.0};
    const CvResult res = cross_validate_gamma(data.spikes, data.stimulus, 31,
                                              1, grid, base, "ppf1");
    // gigantic gamma zeroes the modulation and must lose
    CHECK(res.gamma_star < 50.0);
    CHECK(res.scores.front() <= res.scores[1] + 1e-9);
  }
}

TEST_CASE("fold swap symmetry") {
  // swapping even/odd roles is built into the averaged score; reversing the
  // grid order must not change the winner
  const ScenarioData data = small_tracking_data(33);
  FilterHyper base;
  base.beta = 0.995;
  base.prox = {default_step_size(0.995, 31, 1, 0.01, 1.0), 0.0, 1, 1.0, true};
  const std::vector<double> a{0.05, 0.2, 0.8};
  const std::vector<double> b{0.8, 0.05, 0.2};
  const CvResult ra = cross_validate_gamma(data.spikes, data.stimulus, 31, 1,
                                           a, base, "ppf1");
  const CvResult rb = cross_validate_gamma(data.spikes, data.stimulus, 31, 1,
                                           b, base, "ppf1");
  CHECK(ra.gamma_star == doctest::Approx(rb.gamma_star));
  for (std::size_t i = 0; i < ra.scores.size(); ++i)
    CHECK(ra.scores[i] == doctest::Approx(rb.scores[i]));
}

TEST_CASE("ties break toward the sparser gamma") {
  // a grid with one value duplicated: equal scores, larger value wins
  const ScenarioData data = small_tracking_data(35);
  FilterHyper base;
  base.beta = 0.995;
  base.prox = {default_step_size(0.995, 31, 1, 0.01, 1.0), 0.0, 1, 1.0, true};
  const std::vector<double> grid{0.3, 0.3};
  const CvResult res = cross_validate_gamma(data.spikes, data.stimulus, 31, 1,
                                            grid, base, "ppf1");
  CHECK(res.gamma_star == doctest::Approx(0.3));
  CHECK(res.scores[0] == doctest::Approx(res.scores[1]));
}
