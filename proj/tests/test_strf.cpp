#include <doctest.h>

#include <cmath>

#include "sppf/filters.hpp"
#include "sppf/rng.hpp"
#include "sppf/strf.hpp"

using namespace sppf;

TEST_CASE("gabor dictionary geometry") {
  SUBCASE("paper-sized dictionary") {
    const GaborDictionary d = gabor_dictionary(50, 50, 13, 13);
    CHECK(d.atoms.rows() == 2500);
    CHECK(d.atoms.cols() == 169);
    CHECK(d.spacing_row == doctest::Approx(49.0 / 12.0));
  }

  SUBCASE("columns have unit norm") {
    const GaborDictionary d = gabor_dictionary(20, 16, 5, 4);
    for (int p = 0; p < d.num_atoms(); ++p)
      CHECK(d.atoms.col(p).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("single atom reconstructs a centered bump") {
    const GaborDictionary d = gabor_dictionary(21, 21, 3, 3);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(9);
    xi(4) = 1.0;  // center atom of the 3x3 grid
    const Eigen::MatrixXd strf = strf_reconstruct(xi, d);
    Eigen::Index mi, mj;
    strf.maxCoeff(&mi, &mj);
    CHECK(mi == 10);
    CHECK(mj == 10);
    CHECK(strf.maxCoeff() > 0.0);
  }

  SUBCASE("degenerate grids are rejected") {
    CHECK_THROWS_AS(gabor_dictionary(4, 4, 8, 2), std::invalid_argument);
    CHECK_THROWS_AS(gabor_dictionary(12, 12, 13, 13), std::invalid_argument);
  }
}

TEST_CASE("strf reconstruction is linear") {
  Rng rng(3);
  const GaborDictionary d = gabor_dictionary(12, 10, 4, 3);
  Eigen::VectorXd a(d.num_atoms()), b(d.num_atoms());
  for (int i = 0; i < d.num_atoms(); ++i) {
    a(i) = rng.normal();
    b(i) = rng.normal();
  }
  const Eigen::MatrixXd sum = strf_reconstruct(a + b, d);
  const Eigen::MatrixXd parts = strf_reconstruct(a, d) + strf_reconstruct(b, d);
  CHECK((sum - parts).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(strf_reconstruct(Eigen::VectorXd::Zero(d.num_atoms()), d).norm() ==
        0.0);
  CHECK_THROWS_AS(strf_reconstruct(Eigen::VectorXd::Zero(3), d),
                  std::invalid_argument);
}

TEST_CASE("round trip through the dictionary span") {
  Rng rng(5);
  const GaborDictionary d = gabor_dictionary(16, 14, 5, 4);
  Eigen::VectorXd xi(d.num_atoms());
  for (int i = 0; i < d.num_atoms(); ++i) xi(i) = rng.normal();
  const Eigen::VectorXd theta = d.atoms * xi;
  // noiseless least squares back to coefficients
  const Eigen::VectorXd xi_fit =
      (d.atoms.transpose() * d.atoms)
          .ldlt()
          .solve(d.atoms.transpose() * theta);
  const Eigen::VectorXd theta_fit = d.atoms * xi_fit;
  CHECK((theta_fit - theta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("spectrogram design") {
  Spectrogram spec;
  spec.delta = 1e-3;
  spec.power = Eigen::MatrixXd::Zero(4, 12);

  SUBCASE("all-zero spectrogram gives intercept-only rows") {
    const DesignWindow X = spectrogram_design(spec, 3, 2, 2);
    CHECK(X.X.rows() == 2);
    CHECK(X.X.cols() == 1 + 3 * 4);
    CHECK(X.X(0, 0) == 1.0);
    CHECK(X.X.rightCols(12).norm() == 0.0);
  }

  SUBCASE("impulse propagates along the lag axis") {
    spec.power(2, 5) = 1.0;  // band 2, bin 6
    const int lags = 3;
    for (long t = 1; t <= 12; ++t) {
      const DesignWindow X = spectrogram_design(spec, lags, 1, t);
      const Eigen::VectorXd row = X.X.row(0).tail(lags * 4);
      if (t >= 6 && t <= 8) {
        const long lag = t - 6;
        CHECK(row(lag * 4 + 2) == doctest::Approx(1.0));
        CHECK(row.lpNorm<1>() == doctest::Approx(1.0));
      } else {
        CHECK(row.norm() == 0.0);
      }
    }
  }

  SUBCASE("absorbed design equals the explicit product") {
    Rng rng(7);
    Spectrogram s2;
    s2.power.resize(5, 30);
    for (int b = 0; b < 5; ++b)
      for (int t = 0; t < 30; ++t) s2.power(b, t) = rng.normal();
    const GaborDictionary d = gabor_dictionary(6, 5, 3, 2);
    for (long k : {1L, 3L, 7L}) {
      const DesignWindow raw = spectrogram_design(s2, 6, 4, k);
      const DesignWindow eff = spectrogram_design(s2, 6, 4, k, &d);
      Eigen::MatrixXd expected(4, 1 + d.num_atoms());
      expected.col(0).setOnes();
      expected.rightCols(d.num_atoms()) =
          raw.X.rightCols(6 * 5) * d.atoms;
      CHECK((eff.X - expected).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }

  SUBCASE("projector matches the absorbed design") {
    Rng rng(9);
    Spectrogram s2;
    s2.power.resize(7, 40);
    for (int b = 0; b < 7; ++b)
      for (int t = 0; t < 40; ++t) s2.power(b, t) = rng.normal();
    const GaborDictionary d = gabor_dictionary(8, 7, 3, 3);
    const DictionaryProjector proj(d, s2);
    for (long k : {1L, 2L, 9L}) {
      const DesignWindow a = spectrogram_design(s2, 8, 4, k, &d);
      const DesignWindow b = proj.design(4, k);
      CHECK((a.X - b.X).lpNorm<Eigen::Infinity>() < 1e-10);
    }
  }

  SUBCASE("too short spectrogram throws") {
    CHECK_THROWS_AS(spectrogram_design(spec, 3, 5, 4), std::invalid_argument);
  }
}

TEST_CASE("torc generator") {
  Rng rng(11);
  const Spectrogram s = gen_torc(18, 4000, 1e-3, 500.0, 16000.0, 12, 0.5, rng);
  CHECK(s.bands() == 18);
  CHECK(s.bins() == 4000);
  CHECK(s.sample_variance() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s.power.allFinite());
}

TEST_CASE("coefficient-space estimation equals explicit-design estimation") {
  // absorbing the dictionary must give the same iterates as multiplying it
  // into the design by hand
  Rng rng(13);
  const int lags = 6, bands = 5;
  const GaborDictionary d = gabor_dictionary(lags, bands, 3, 2);
  Spectrogram spec;
  spec.power.resize(bands, 400);
  for (int b = 0; b < bands; ++b)
    for (int t = 0; t < 400; ++t) spec.power(b, t) = 0.5 * rng.normal();

  FilterHyper h;
  h.beta = 0.99;
  h.prox = {1e-3, 0.2, 1, 0.25, true};
  const int dim = 1 + d.num_atoms();
  Ppf1Filter absorbed(dim, h);
  Ppf1Filter explicit_design(dim, h);

  Rng spike_rng(17);
  const int w = 4;
  for (long k = 1; k <= 100; ++k) {
    const DesignWindow eff = spectrogram_design(spec, lags, w, k, &d);
    const DesignWindow raw = spectrogram_design(spec, lags, w, k);
    DesignWindow manual;
    manual.index = k;
    manual.X.resize(w, dim);
    manual.X.col(0).setOnes();
    manual.X.rightCols(d.num_atoms()) =
        raw.X.rightCols(lags * bands) * d.atoms;
    Eigen::VectorXd n(w);
    for (int j = 0; j < w; ++j) n(j) = spike_rng.bernoulli(0.1) ? 1.0 : 0.0;
    absorbed.update(n, eff);
    explicit_design.update(n, manual);
    CHECK((absorbed.estimate().w - explicit_design.estimate().w)
              .lpNorm<Eigen::Infinity>() < 1e-10);
  }
}
