#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracle_utils.hpp"
#include "trackdeg/priors.hpp"

#include <cmath>
#include <vector>

using namespace trackdeg;

TEST_CASE("halfnormal_logpdf: value at the origin") {
  CHECK(halfnormal_logpdf(0.0, 1.0) ==
        doctest::Approx(std::log(2.0 / std::sqrt(2.0 * oracle::kPi))).epsilon(1e-12));
  CHECK(halfnormal_logpdf(0.0, 1.0) == doctest::Approx(-0.22579).epsilon(1e-4));
}

TEST_CASE("halfnormal_logpdf: negative support and bad scale") {
  CHECK(halfnormal_logpdf(-1.0, 1.0) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(halfnormal_logpdf(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("halfnormal: density integrates to one") {
  for (double scale : {0.5, 1.0, 3.0}) {
    const double integral = oracle::simpson(
        [&](double x) { return std::exp(halfnormal_logpdf(x, scale)); }, 0.0, 12.0 * scale);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("halfnormal_sample: sample mean matches the moment formula") {
  Rng rng(808);
  const int n = 10000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) {
    draws[i] = halfnormal_sample(2.0, rng);
    CHECK(draws[i] >= 0.0);
  }
  const double want = 2.0 * std::sqrt(2.0 / oracle::kPi);  // ~1.5958
  const double sd = std::sqrt(oracle::variance(draws));
  CHECK(std::abs(oracle::mean(draws) - want) < 3.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("lognormal_logpdf: support boundary and bad scale") {
  CHECK(lognormal_logpdf(0.0, 0.0, 1.0) == -std::numeric_limits<double>::infinity());
  CHECK(lognormal_logpdf(-3.0, 0.0, 1.0) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(lognormal_logpdf(1.0, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("lognormal_logpdf: change-of-variables oracle") {
  Rng rng(90210);
  for (int rep = 0; rep < 200; ++rep) {
    const double x = rng.uniform(0.01, 30.0);
    const double m = rng.uniform(-1.0, 3.0);
    const double s = rng.uniform(0.1, 2.0);
    const double want = normal_logpdf(std::log(x), m, s) - std::log(x);
    CHECK(lognormal_logpdf(x, m, s) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("lognormal: density integrates to one") {
  const double integral = oracle::simpson(
      [&](double x) { return std::exp(lognormal_logpdf(x, 0.4, 0.5)); }, 1e-9, 60.0, 20000);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("lognormal_sample: median of draws with m=2.3 is near exp(2.3)") {
  Rng rng(11);
  const int n = 10000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = lognormal_sample(2.3, 1.0, rng);
  const double med = oracle::median(draws);
  CHECK(std::abs(med - std::exp(2.3)) / std::exp(2.3) < 0.05);  // ~9.97
}

TEST_CASE("lkj_logpdf: eta=1 is constant over correlation matrices") {
  Rng rng(37);
  const double ref = lkj_logpdf(lkj_sample(3, 1.0, rng), 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd r = lkj_sample(3, 1.0, rng);
    CHECK(lkj_logpdf(r, 1.0) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("lkj_logpdf: d=2 normalizing constant is 1/2 at eta=1") {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(2, 2);
  CHECK(lkj_logpdf(r, 1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(lkj_log_normalizer(2, 1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("lkj_logpdf: d=2 density integrates to one for several eta") {
  for (double eta : {0.5, 1.0, 2.0, 5.0}) {
    // Substituting r = sin(theta) removes the endpoint singularity at
    // eta < 1; Gauss-Legendre keeps nodes off the +-1 boundary.
    auto integrand = [&](double theta) {
      const double r = std::sin(theta);
      Eigen::MatrixXd mat(2, 2);
      mat << 1.0, r, r, 1.0;
      return std::exp(lkj_logpdf(mat, eta)) * std::cos(theta);
    };
    const double integral =
        oracle::gauss_legendre(integrand, -oracle::kPi / 2, oracle::kPi / 2, 400);
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("lkj_logpdf: d=2 marginal equals scaled Beta(eta, eta)") {
  Rng rng(4);
  for (double eta : {0.7, 1.0, 2.5}) {
    for (int rep = 0; rep < 20; ++rep) {
      const double r = rng.uniform(-0.95, 0.95);
      Eigen::MatrixXd mat(2, 2);
      mat << 1.0, r, r, 1.0;
      CHECK(lkj_logpdf(mat, eta) ==
            doctest::Approx(scaled_beta_logpdf(r, eta)).epsilon(1e-10));
    }
  }
}

TEST_CASE("lkj_sample: d=2 eta=1 marginal is uniform on (-1,1)") {
  Rng rng(20240601);
  const int n = 10000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = lkj_sample(2, 1.0, rng)(0, 1);
  const double d = oracle::ks_statistic(draws, [](double x) { return (x + 1.0) / 2.0; });
  CHECK(oracle::ks_pvalue(d, n) > 0.01);
  CHECK(d < 0.02);
}

TEST_CASE("lkj_sample: every draw is a valid correlation matrix") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::MatrixXd r = lkj_sample(4, 1.0, rng);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(r(i, i) == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("lkj_sample: large eta concentrates correlations near zero") {
  Rng rng(6);
  double sum_abs = 0.0;
  int count = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const Eigen::MatrixXd r = lkj_sample(4, 50.0, rng);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        sum_abs += std::abs(r(i, j));
        ++count;
      }
  }
  CHECK(sum_abs / count < 0.15);
}

TEST_CASE("partial correlation transform: round trip and determinant identity") {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const int dim = 2 + static_cast<int>(rng.uniform() * 4);  // 2..5
    Eigen::VectorXd partials(n_pairs(dim));
    for (int i = 0; i < partials.size(); ++i) partials[i] = rng.uniform(-0.9, 0.9);
    const Eigen::MatrixXd r = corr_from_partials(partials, dim);

    Eigen::LLT<Eigen::MatrixXd> llt(r);
    REQUIRE(llt.info() == Eigen::Success);

    const Eigen::VectorXd back = partials_from_corr(r);
    CHECK((back - partials).cwiseAbs().maxCoeff() < 1e-10);

    // |R| = prod(1 - p^2) over all canonical partial correlations
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double want = (1.0 - partials.array().square()).log().sum();
    CHECK(log_det == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("sample_hyperparams: defaults respect Table-style ranges") {
  auto config = HyperpriorConfig::defaults(4);
  Rng rng(8);
  for (int rep = 0; rep < 500; ++rep) {
    const Hyperparams h = sample_hyperparams(config, rng);
    for (int q = 0; q < 4; ++q) {
      CHECK(h.s_mu[q] > 0.0);
      CHECK(h.s_mu[q] < 10.0);
      CHECK(h.s_sigma[q] > 0.0);
      CHECK(h.s_sigma[q] < 10.0);
      CHECK(h.s_z[q] > 0.0);
      CHECK(h.s_z[q] < 2.0);
      CHECK(h.m_z[q] > 0.0);
    }
    CHECK(h.eta == 1.0);
  }
}

TEST_CASE("sample_hyperparams: degenerate range is a point mass") {
  auto config = HyperpriorConfig::defaults(2);
  config.s_mu_range.assign(2, {3.5, 3.5});
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const Hyperparams h = sample_hyperparams(config, rng);
    CHECK(h.s_mu[0] == 3.5);
    CHECK(h.s_mu[1] == 3.5);
  }
}

TEST_CASE("sample_hyperparams: m_z median near exp(2.3)") {
  auto config = HyperpriorConfig::defaults(1);
  Rng rng(10);
  const int n = 10000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = sample_hyperparams(config, rng).m_z[0];
  CHECK(std::abs(oracle::median(draws) - std::exp(2.3)) / std::exp(2.3) < 0.05);
}

TEST_CASE("rng: gamma sampler moments") {
  Rng rng(123);
  for (double shape : {0.5, 1.5, 4.0}) {
    const int n = 20000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = rng.gamma(shape);
    const double se = std::sqrt(shape / n);  // sd of the sample mean, roughly
    CHECK(std::abs(oracle::mean(draws) - shape) < 4.0 * se);
    CHECK(std::abs(oracle::variance(draws) - shape) / shape < 0.1);
  }
}

TEST_CASE("rng: fork streams are reproducible and distinct") {
  Rng a(42);
  Rng b(42);
  CHECK(a.fork(3).next_u64() == b.fork(3).next_u64());
  CHECK(a.fork(3).next_u64() != a.fork(4).next_u64());
}
