#include <doctest.h>

#include <cmath>
#include <vector>

#include "sppf/model.hpp"
#include "sppf/rng.hpp"
#include "support.hpp"

using namespace sppf;

TEST_CASE("logistic cif basics") {
  Rng rng(11);
  DesignWindow X = test::random_design(rng, 4, 5);

  SUBCASE("zero parameter gives one half everywhere") {
    const Eigen::VectorXd lam = logistic_cif(X, ParamVector::zero(5));
    for (int j = 0; j < 4; ++j) CHECK(lam(j) == doctest::Approx(0.5));
  }

  SUBCASE("baseline only") {
    // logit^{-1}(-2.51), frozen from a high-precision scalar evaluation
    ParamVector w = ParamVector::zero(5);
    w.mu() = -2.51;
    const Eigen::VectorXd lam = logistic_cif(X, w);
    for (int j = 0; j < 4; ++j)
      CHECK(lam(j) == doctest::Approx(0.0751601094821266).epsilon(1e-12));
  }

  SUBCASE("saturation is finite and strictly below one") {
    DesignWindow one;
    one.X = Eigen::MatrixXd::Ones(1, 1);
    ParamVector w(Eigen::VectorXd::Constant(1, 50.0));
    const Eigen::VectorXd lam = logistic_cif(one, w);
    CHECK(std::isfinite(lam(0)));
    // the mathematical value 1 - 2e-22 rounds to the predecessor of 1
    CHECK(lam(0) < 1.0);
    CHECK(lam(0) > 1.0 - 1e-15);

    w.w(0) = -800.0;  // would underflow; stays finite and positive
    const Eigen::VectorXd lo = logistic_cif(one, w);
    CHECK(std::isfinite(lo(0)));
    CHECK(lo(0) > 0.0);
    CHECK(lo(0) < 1e-300);
  }

  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(logistic_cif(X, ParamVector::zero(4)),
                    std::invalid_argument);
  }

  SUBCASE("monotone in the linear predictor") {
    DesignWindow one;
    one.X = Eigen::MatrixXd::Ones(1, 1);
    double prev = 0.0;
    for (double z = -40.0; z <= 40.0; z += 0.5) {
      ParamVector w(Eigen::VectorXd::Constant(1, z));
      const double p = logistic_cif(one, w)(0);
      if (std::abs(z) <= 30.0) {
        CHECK(p > prev);  // strict away from the representable boundary
      } else {
        CHECK(p >= prev);
      }
      CHECK(p < 1.0);
      CHECK(p > 0.0);
      prev = p;
    }
  }
}

TEST_CASE("innovation") {
  Eigen::VectorXd n1(1), lam1(1);
  n1 << 1.0;
  lam1 << 0.3;
  CHECK(innovation(n1, lam1)(0) == doctest::Approx(0.7));

  Eigen::VectorXd n2(2), lam2(2);
  n2 << 0.0, 0.0;
  lam2 << 0.5, 0.25;
  const Eigen::VectorXd eps = innovation(n2, lam2);
  CHECK(eps(0) == doctest::Approx(-0.5));
  CHECK(eps(1) == doctest::Approx(-0.25));

  CHECK(innovation(lam2, lam2).norm() == 0.0);
  CHECK_THROWS_AS(innovation(n1, lam2), std::invalid_argument);

  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    DesignWindow X = test::random_design(rng, 6, 4, 2.0);
    const Eigen::VectorXd lam =
        logistic_cif(X, ParamVector(test::random_vector(rng, 4)));
    const Eigen::VectorXd e = innovation(test::random_spikes(rng, 6), lam);
    CHECK(e.minCoeff() > -1.0);
    CHECK(e.maxCoeff() < 1.0);
  }
}

TEST_CASE("window log-likelihood") {
  SUBCASE("zero parameter, one empty bin") {
    DesignWindow X;
    X.X = Eigen::MatrixXd::Ones(1, 2);
    X.X(0, 1) = 0.7;
    Eigen::VectorXd n = Eigen::VectorXd::Zero(1);
    CHECK(window_loglik(ParamVector::zero(2), X, n) ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-14));
  }

  SUBCASE("additivity over four bins") {
    Rng rng(5);
    DesignWindow X = test::random_design(rng, 4, 3);
    Eigen::VectorXd n = Eigen::VectorXd::Zero(4);
    CHECK(window_loglik(ParamVector::zero(3), X, n) ==
          doctest::Approx(-4.0 * std::log(2.0)).epsilon(1e-14));
  }

  SUBCASE("matches the direct-sum oracle") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
      DesignWindow X = test::random_design(rng, 5, 6, 1.5);
      const Eigen::VectorXd n = test::random_spikes(rng, 5);
      const ParamVector w(test::random_vector(rng, 6));
      const double got = window_loglik(w, X, n);
      const double want = test::loglik_direct(w.w, X.X, n);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("weighted log-likelihood") {
  Rng rng(9);
  std::vector<DesignWindow> xs;
  std::vector<Eigen::VectorXd> ns;
  for (int i = 0; i < 3; ++i) {
    xs.push_back(test::random_design(rng, 2, 3, 1.0, i + 1));
    ns.push_back(test::random_spikes(rng, 2));
  }
  const ParamVector w(test::random_vector(rng, 3));

  SUBCASE("beta one is the plain sum") {
    double plain = 0.0;
    for (int i = 0; i < 3; ++i) plain += window_loglik(w, xs[i], ns[i]);
    CHECK(weighted_loglik(w, xs, ns, 1.0) ==
          doctest::Approx(plain).epsilon(1e-12));
  }

  SUBCASE("single window ignores beta") {
    const std::vector<DesignWindow> x1(xs.begin(), xs.begin() + 1);
    const std::vector<Eigen::VectorXd> n1(ns.begin(), ns.begin() + 1);
    CHECK(weighted_loglik(w, x1, n1, 0.25) ==
          doctest::Approx(window_loglik(w, xs[0], ns[0])).epsilon(1e-14));
  }

  SUBCASE("hand-weighted sum at beta one half") {
    const double l1 = test::loglik_direct(w.w, xs[0].X, ns[0]);
    const double l2 = test::loglik_direct(w.w, xs[1].X, ns[1]);
    const double l3 = test::loglik_direct(w.w, xs[2].X, ns[2]);
    CHECK(weighted_loglik(w, xs, ns, 0.5) ==
          doctest::Approx(0.25 * l1 + 0.5 * l2 + l3).epsilon(1e-12));
  }

  SUBCASE("beta outside (0,1] throws") {
    CHECK_THROWS_AS(weighted_loglik(w, xs, ns, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_loglik(w, xs, ns, 1.5), std::invalid_argument);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    const int m = 2 + static_cast<int>(rng.uniform() * 6);  // M <= 8
    const int k = 1 + static_cast<int>(rng.uniform() * 5);
    const double beta = 0.5 + 0.5 * rng.uniform();
    std::vector<DesignWindow> xs;
    std::vector<Eigen::VectorXd> ns;
    for (int i = 0; i < k; ++i) {
      xs.push_back(test::random_design(rng, 3, m, 1.0, i + 1));
      ns.push_back(test::random_spikes(rng, 3));
    }
    const ParamVector w(test::random_vector(rng, m, 0.5));
    const Eigen::VectorXd g = weighted_loglik_gradient(w, xs, ns, beta);
    const double h = 1e-5;
    for (int c = 0; c < m; ++c) {
      ParamVector wp = w, wm = w;
      wp.w(c) += h;
      wm.w(c) -= h;
      const double fd = (weighted_loglik(wp, xs, ns, beta) -
                         weighted_loglik(wm, xs, ns, beta)) /
                        (2.0 * h);
      CHECK(g(c) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("design construction") {
  SUBCASE("definition row") {
    // s_1 = a, s_2 = b; row for t = 2 with M = 3 is [1, b, a]
    StimulusSequence s({0.4, -1.2}, 0);
    const DesignWindow X = build_design(s, 3, 1, 2);
    CHECK(X.X(0, 0) == 1.0);
    CHECK(X.X(0, 1) == doctest::Approx(-1.2));
    CHECK(X.X(0, 2) == doctest::Approx(0.4));
  }

  SUBCASE("rows share shifted entries") {
    Rng rng(17);
    StimulusSequence s = [&] {
      std::vector<double> v(40);
      for (auto& x : v) x = rng.normal();
      return StimulusSequence(std::move(v), 8);
    }();
    const int m = 6, w = 5;
    const DesignWindow X = build_design(s, m, w, 3);
    for (int j = 0; j + 1 < w; ++j) {
      for (int c = 2; c < m; ++c) {
        CHECK(X.X(j + 1, c) == doctest::Approx(X.X(j, c - 1)));
      }
    }
  }

  SUBCASE("windowed build equals stacked single-sample builds") {
    Rng rng(19);
    std::vector<double> v(30);
    for (auto& x : v) x = rng.normal();
    StimulusSequence s(std::move(v), 4);
    const int m = 5;
    const DesignWindow big = build_design(s, m, 2, 3);  // bins 5,6
    const DesignWindow a = build_design(s, m, 1, 5);
    const DesignWindow b = build_design(s, m, 1, 6);
    CHECK((big.X.row(0) - a.X.row(0)).norm() == 0.0);
    CHECK((big.X.row(1) - b.X.row(0)).norm() == 0.0);
  }

  SUBCASE("adjacent windows are one-sample shifts at W = 1") {
    Rng rng(23);
    std::vector<double> v(20);
    for (auto& x : v) x = rng.normal();
    StimulusSequence s(std::move(v), 5);
    const int m = 4;
    const DesignWindow xk = build_design(s, m, 1, 7);
    const DesignWindow xk1 = build_design(s, m, 1, 8);
    for (int c = 2; c < m; ++c)
      CHECK(xk1.X(0, c) == doctest::Approx(xk.X(0, c - 1)));
  }

  SUBCASE("history before the pad is zero, past the end throws") {
    StimulusSequence s({1.0, 2.0}, 0);  // s_1 = 1, s_2 = 2, no pre-history
    const DesignWindow X = build_design(s, 4, 1, 1);  // needs s_1, s_0, s_{-1}
    CHECK(X.X(0, 1) == doctest::Approx(1.0));
    CHECK(X.X(0, 2) == 0.0);
    CHECK(X.X(0, 3) == 0.0);
    CHECK_THROWS_AS(build_design(s, 3, 1, 3), std::invalid_argument);
  }
}

TEST_CASE("compressibility error") {
  ParamVector w(Eigen::VectorXd::Zero(5));
  w.w << 0.0, 3.0, 0.0, -1.0, 0.5;
  CHECK(w.compressibility_error(3) == doctest::Approx(0.0));  // 3-sparse
  CHECK(w.compressibility_error(2) == doctest::Approx(0.5));
  CHECK(w.compressibility_error(0) == doctest::Approx(4.5));
}

TEST_CASE("spike train validation") {
  SpikeTrain t;
  t.bins = {0, 1, 1, 0};
  t.delta = 1e-3;
  CHECK(t.count() == 2);
  CHECK_NOTHROW(t.validate());
  t.bins.push_back(2);
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}
