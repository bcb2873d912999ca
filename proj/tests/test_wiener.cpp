#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracle_utils.hpp"
#include "trackdeg/priors.hpp"
#include "trackdeg/wiener.hpp"

#include <cmath>
#include <map>
#include <vector>

using namespace trackdeg;

namespace {

SegmentSeries make_series(const std::vector<double>& times,
                          const std::vector<std::vector<double>>& obs,
                          const std::vector<int>& maint = {}) {
  SegmentSeries s;
  s.segment_id = 1;
  const int k = static_cast<int>(times.size());
  const int d = static_cast<int>(obs[0].size());
  s.times.resize(k);
  s.observations.resize(k, d);
  s.maint_flags.assign(k, 0);
  for (int i = 0; i < k; ++i) {
    s.times[i] = times[i];
    for (int q = 0; q < d; ++q) s.observations(i, q) = obs[i][q];
  }
  for (int m : maint) s.maint_flags[m] = 1;
  return s;
}

// Random fitting problem: series + params + post-maintenance states.
struct RandomInstance {
  SegmentSeries series;
  WienerParams params;
  PostMaintMap post_maint;
};

// Draws the parameters first and simulates the observations from them, so
// the instances look like data the model could have produced.
RandomInstance random_instance(Rng& rng, int n_obs, int dim, bool with_maint) {
  RandomInstance inst;
  inst.params.drift.resize(dim);
  inst.params.marginal_sd.resize(dim);
  for (int q = 0; q < dim; ++q) {
    inst.params.drift[q] = rng.uniform(0.0, 0.1);
    inst.params.marginal_sd[q] = rng.uniform(0.02, 0.5);
  }
  inst.params.correlation = (dim >= 2) ? lkj_sample(dim, 1.0, rng)
                                       : Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd lower =
      Eigen::LLT<Eigen::MatrixXd>(
          build_covariance(inst.params.marginal_sd, inst.params.correlation))
          .matrixL();

  inst.series.segment_id = 7;
  inst.series.times.resize(n_obs);
  inst.series.observations.resize(n_obs, dim);
  inst.series.maint_flags.assign(n_obs, 0);
  Eigen::VectorXd z(dim), eps(dim);
  for (int q = 0; q < dim; ++q) z[q] = rng.uniform(0.5, 5.0);
  double t = 0.0;
  inst.series.times[0] = t;
  inst.series.observations.row(0) = z.transpose();
  for (int i = 1; i < n_obs; ++i) {
    const double dt = rng.uniform(20.0, 120.0);
    t += dt;
    inst.series.times[i] = t;
    for (int q = 0; q < dim; ++q) eps[q] = rng.normal();
    if (with_maint && rng.uniform() < 0.3) {
      inst.series.maint_flags[i] = 1;
      PostMaintenanceState pm;
      pm.segment_id = inst.series.segment_id;
      pm.interval_index = i;
      pm.values.resize(dim);
      for (int q = 0; q < dim; ++q) pm.values[q] = rng.uniform(0.5, 5.0);
      z = pm.values + inst.params.drift * (0.5 * dt) + std::sqrt(0.5 * dt) * (lower * eps);
      inst.post_maint[i] = pm;
    } else {
      z += inst.params.drift * dt + std::sqrt(dt) * (lower * eps);
    }
    inst.series.observations.row(i) = z.transpose();
  }
  return inst;
}

std::vector<oracle::IntervalDatum> to_oracle_intervals(const RandomInstance& inst) {
  std::vector<oracle::IntervalDatum> out;
  for (int i = 1; i < inst.series.n_obs(); ++i) {
    oracle::IntervalDatum d;
    d.dt = inst.series.times[i] - inst.series.times[i - 1];
    d.maint = inst.series.maint_flags[i] != 0;
    if (d.maint) {
      d.z_end = inst.series.observations.row(i).transpose();
      d.zplus = inst.post_maint.at(i).values;
    } else {
      d.dz = (inst.series.observations.row(i) - inst.series.observations.row(i - 1)).transpose();
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

TEST_CASE("increments: direct difference") {
  auto s = make_series({0, 90}, {{1, 1, 1, 1}, {2, 2, 2, 2}});
  auto inc = increments(s);
  REQUIRE(inc.size() == 1);
  CHECK(inc[0].dt == doctest::Approx(90.0));
  CHECK(inc[0].maint == false);
  for (int q = 0; q < 4; ++q) CHECK(inc[0].dz[q] == doctest::Approx(1.0));
}

TEST_CASE("increments: constant series has zero increments") {
  auto s = make_series({0, 90, 180}, {{3, 1}, {3, 1}, {3, 1}});
  auto inc = increments(s);
  REQUIRE(inc.size() == 2);
  for (const auto& i : inc) CHECK(i.dz.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("increments: randomized series matches element-wise difference oracle") {
  Rng rng(1234);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = random_instance(rng, 10, 3, true);
    auto inc = increments(inst.series);
    REQUIRE(static_cast<int>(inc.size()) == inst.series.n_obs() - 1);
    for (int i = 1; i < inst.series.n_obs(); ++i) {
      CHECK(inc[i - 1].dt ==
            doctest::Approx(inst.series.times[i] - inst.series.times[i - 1]));
      CHECK(inc[i - 1].maint == (inst.series.maint_flags[i] != 0));
      for (int q = 0; q < 3; ++q) {
        const double want =
            inst.series.observations(i, q) - inst.series.observations(i - 1, q);
        CHECK(inc[i - 1].dz[q] == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("increments: fewer than two observations is an error") {
  auto s = make_series({0}, {{1.0, 2.0}});
  CHECK_THROWS_AS(increments(s), std::invalid_argument);
}

TEST_CASE("build_covariance: identity") {
  Eigen::VectorXd sd = Eigen::VectorXd::Ones(4);
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(4, 4);
  CHECK((build_covariance(sd, r) - r).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("build_covariance: forced 2x2 value") {
  Eigen::VectorXd sd(2);
  sd << 2, 3;
  Eigen::MatrixXd r(2, 2);
  r << 1, 0.5, 0.5, 1;
  Eigen::MatrixXd sigma = build_covariance(sd, r);
  CHECK(sigma(0, 0) == doctest::Approx(4.0));
  CHECK(sigma(0, 1) == doctest::Approx(3.0));
  CHECK(sigma(1, 0) == doctest::Approx(3.0));
  CHECK(sigma(1, 1) == doctest::Approx(9.0));
}

TEST_CASE("build_covariance: random inputs match triple-product oracle and stay SPD") {
  Rng rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd sd(4);
    for (int q = 0; q < 4; ++q) sd[q] = rng.uniform(0.05, 3.0);
    Eigen::MatrixXd r = lkj_sample(4, 1.0, rng);
    Eigen::MatrixXd sigma = build_covariance(sd, r);
    // explicit loop oracle for D * R * D
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(sigma(i, j) == doctest::Approx(sd[i] * r(i, j) * sd[j]).epsilon(1e-12));
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    CHECK(llt.info() == Eigen::Success);
    for (int q = 0; q < 4; ++q)
      CHECK(sigma(q, q) == doctest::Approx(sd[q] * sd[q]).epsilon(1e-12));
  }
}

TEST_CASE("build_covariance: non-positive-definite correlation is an error") {
  Eigen::VectorXd sd = Eigen::VectorXd::Ones(2);
  Eigen::MatrixXd r(2, 2);
  r << 1.0, 1.5, 1.5, 1.0;
  CHECK_THROWS(build_covariance(sd, r));
}

TEST_CASE("loglik_multivariate: standard normal at the origin") {
  auto s = make_series({0, 1}, {{0, 0, 0, 0}, {0, 0, 0, 0}});
  WienerParams p;
  p.drift = Eigen::VectorXd::Zero(4);
  p.marginal_sd = Eigen::VectorXd::Ones(4);
  p.correlation = Eigen::MatrixXd::Identity(4, 4);
  const double ll = loglik_multivariate(p, s, {});
  CHECK(ll == doctest::Approx(-2.0 * std::log(2.0 * oracle::kPi)).epsilon(1e-10));
  CHECK(ll == doctest::Approx(-3.67575).epsilon(1e-4));
}

TEST_CASE("loglik_multivariate: diagonal covariance equals sum of univariate") {
  Rng rng(5150);
  for (int rep = 0; rep < 30; ++rep) {
    auto inst = random_instance(rng, 8, 4, true);
    inst.params.correlation = Eigen::MatrixXd::Identity(4, 4);
    const double multi = loglik_multivariate(inst.params, inst.series, inst.post_maint);
    double uni = 0.0;
    for (int q = 0; q < 4; ++q)
      uni += loglik_univariate(inst.params.drift[q],
                               inst.params.marginal_sd[q] * inst.params.marginal_sd[q],
                               inst.series, q, inst.post_maint);
    CHECK(std::abs(multi - uni) < 1e-9);
  }
}

TEST_CASE("loglik_multivariate: random instances match the term-by-term oracle") {
  Rng rng(864);
  for (int rep = 0; rep < 50; ++rep) {
    auto inst = random_instance(rng, 9, 4, true);
    const double got = loglik_multivariate(inst.params, inst.series, inst.post_maint);
    const Eigen::MatrixXd sigma =
        build_covariance(inst.params.marginal_sd, inst.params.correlation);
    const double want = oracle::tamped_mvn_loglik(to_oracle_intervals(inst),
                                                  inst.params.drift, sigma);
    CHECK(std::abs(got - want) < 1e-9);
  }
}

TEST_CASE("loglik_multivariate: no-maintenance case equals the plain product form") {
  Rng rng(4242);
  for (int rep = 0; rep < 40; ++rep) {
    auto inst = random_instance(rng, 10, 4, false);
    const double got = loglik_multivariate(inst.params, inst.series, {});
    const Eigen::MatrixXd sigma =
        build_covariance(inst.params.marginal_sd, inst.params.correlation);
    double want = 0.0;
    for (int i = 1; i < inst.series.n_obs(); ++i) {
      const double dt = inst.series.times[i] - inst.series.times[i - 1];
      const Eigen::VectorXd dz =
          (inst.series.observations.row(i) - inst.series.observations.row(i - 1)).transpose();
      want += oracle::mvn_logpdf(dz, inst.params.drift * dt, sigma * dt);
    }
    CHECK(std::abs(got - want) < 1e-10);
  }
}

TEST_CASE("loglik_multivariate: one indicator equals the univariate model") {
  Rng rng(31337);
  for (int rep = 0; rep < 40; ++rep) {
    auto inst = random_instance(rng, 8, 1, true);
    const double multi = loglik_multivariate(inst.params, inst.series, inst.post_maint);
    const double uni = loglik_univariate(
        inst.params.drift[0], inst.params.marginal_sd[0] * inst.params.marginal_sd[0],
        inst.series, 0, inst.post_maint);
    CHECK(std::abs(multi - uni) < 1e-10);
  }
}

TEST_CASE("loglik_multivariate: missing post-maintenance entry is an error") {
  auto s = make_series({0, 30, 60}, {{1, 1}, {5, 5}, {2, 2}}, {2});
  WienerParams p;
  p.drift = Eigen::VectorXd::Constant(2, 0.02);
  p.marginal_sd = Eigen::VectorXd::Constant(2, 0.1);
  p.correlation = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(loglik_multivariate(p, s, {}), std::invalid_argument);
}

TEST_CASE("loglik_multivariate: joint indicator permutation leaves value unchanged") {
  Rng rng(2718);
  const std::vector<int> perm = {2, 0, 3, 1};
  for (int rep = 0; rep < 25; ++rep) {
    auto inst = random_instance(rng, 8, 4, true);
    const double base = loglik_multivariate(inst.params, inst.series, inst.post_maint);

    RandomInstance permuted = inst;
    for (int q = 0; q < 4; ++q) {
      permuted.series.observations.col(q) = inst.series.observations.col(perm[q]);
      permuted.params.drift[q] = inst.params.drift[perm[q]];
      permuted.params.marginal_sd[q] = inst.params.marginal_sd[perm[q]];
      for (int r = 0; r < 4; ++r)
        permuted.params.correlation(q, r) = inst.params.correlation(perm[q], perm[r]);
    }
    for (auto& [k, pm] : permuted.post_maint)
      for (int q = 0; q < 4; ++q) pm.values[q] = inst.post_maint.at(k).values[perm[q]];

    const double after = loglik_multivariate(permuted.params, permuted.series, permuted.post_maint);
    CHECK(std::abs(base - after) < 1e-10);
  }
}

TEST_CASE("loglik_multivariate: maximized over drift at the least-squares estimate") {
  Rng rng(1616);
  auto inst = random_instance(rng, 12, 2, false);
  const auto inc = increments(inst.series);
  Eigen::VectorXd num = Eigen::VectorXd::Zero(2);
  double den = 0.0;
  for (const auto& i : inc) {
    num += i.dz;
    den += i.dt;
  }
  Eigen::VectorXd mu_hat = (num / den).cwiseMax(0.0);

  const double at_hat = [&] {
    WienerParams p = inst.params;
    p.drift = mu_hat;
    return loglik_multivariate(p, inst.series, {});
  }();
  for (double d0 = -0.02; d0 <= 0.02; d0 += 0.004) {
    for (double d1 = -0.02; d1 <= 0.02; d1 += 0.004) {
      Eigen::VectorXd mu = mu_hat + Eigen::Vector2d(d0, d1);
      if ((mu.array() < 0.0).any()) continue;
      WienerParams p = inst.params;
      p.drift = mu;
      CHECK(loglik_multivariate(p, inst.series, {}) <= at_hat + 1e-12);
    }
  }
}

TEST_CASE("loglik_univariate: standard normal at the origin") {
  auto s = make_series({0, 1}, {{0.0}, {0.0}});
  const double ll = loglik_univariate(0.0, 1.0, s, 0, {});
  CHECK(ll == doctest::Approx(-0.5 * std::log(2.0 * oracle::kPi)).epsilon(1e-10));
  CHECK(ll == doctest::Approx(-0.91894).epsilon(1e-4));
}

TEST_CASE("loglik_univariate: maintenance interval at its mean") {
  // z_k = zplus + mu*dt/2 makes the exponent vanish: the term is
  // -0.5*log(pi*var*dt).
  const double mu = 0.03, var = 0.04, dt = 80.0, zplus = 2.5;
  const double z_end = zplus + mu * dt / 2.0;
  auto s = make_series({0, dt}, {{10.0}, {z_end}}, {1});
  PostMaintMap pm;
  pm[1] = {1, 1, Eigen::VectorXd::Constant(1, zplus)};
  const double ll = loglik_univariate(mu, var, s, 0, pm);
  CHECK(ll == doctest::Approx(-0.5 * std::log(oracle::kPi * var * dt)).epsilon(1e-12));
}

TEST_CASE("loglik_univariate: random inputs match the direct-formula oracle") {
  Rng rng(777);
  for (int rep = 0; rep < 50; ++rep) {
    auto inst = random_instance(rng, 9, 3, true);
    for (int q = 0; q < 3; ++q) {
      const double var = inst.params.marginal_sd[q] * inst.params.marginal_sd[q];
      const double got =
          loglik_univariate(inst.params.drift[q], var, inst.series, q, inst.post_maint);
      const double want =
          oracle::tamped_uni_loglik(to_oracle_intervals(inst), inst.params.drift[q], var, q);
      CHECK(std::abs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("simulate_path: drift-only limit") {
  WienerParams p;
  p.drift = Eigen::VectorXd::Ones(4);
  p.marginal_sd = Eigen::VectorXd::Constant(4, 1e-6);  // variance 1e-12
  p.correlation = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd times(2);
  times << 0.0, 1.0;
  auto path = simulate_path(p, Eigen::VectorXd::Zero(4), times, {}, 42);
  REQUIRE(path.size() == 2);
  for (int q = 0; q < 4; ++q) CHECK(path[1][q] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("simulate_path: sample mean of many paths matches the drift") {
  WienerParams p;
  p.drift = Eigen::VectorXd::Constant(4, 0.5);
  p.marginal_sd = Eigen::VectorXd::Constant(4, 0.3);
  p.correlation = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd times(2);
  times << 0.0, 1.0;
  const int n = 10000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < n; ++i) {
    auto path = simulate_path(p, Eigen::VectorXd::Zero(4), times, {}, 1000 + i);
    sum += path[1];
  }
  const Eigen::VectorXd mean = sum / n;
  const double se = 0.3 / std::sqrt(static_cast<double>(n));
  for (int q = 0; q < 4; ++q) CHECK(std::abs(mean[q] - 0.5) < 3.0 * se);
}

TEST_CASE("simulate_path: increment covariance matches Sigma*dt") {
  Rng rng(12);
  Eigen::VectorXd sd(3);
  sd << 0.4, 0.2, 0.6;
  Eigen::MatrixXd corr(3, 3);
  corr << 1.0, 0.7, 0.2, 0.7, 1.0, 0.1, 0.2, 0.1, 1.0;
  WienerParams p{Eigen::VectorXd::Constant(3, 0.1), sd, corr};
  const Eigen::MatrixXd sigma = build_covariance(sd, corr);
  const double dt = 2.5;
  Eigen::VectorXd times(2);
  times << 0.0, dt;

  const int n = 10000;
  Eigen::MatrixXd draws(n, 3);
  for (int i = 0; i < n; ++i) {
    auto path = simulate_path(p, Eigen::VectorXd::Zero(3), times, {}, 555000 + i);
    draws.row(i) = (path[1] - p.drift * dt).transpose();
  }
  Eigen::RowVectorXd mean = draws.colwise().mean();
  Eigen::MatrixXd centered = draws.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
  const double rel = (cov - sigma * dt).norm() / (sigma * dt).norm();
  CHECK(rel < 0.05);
}

TEST_CASE("simulate_path: scheduled reset jumps to the post-maintenance state") {
  WienerParams p;
  p.drift = Eigen::VectorXd::Constant(2, 0.1);
  p.marginal_sd = Eigen::VectorXd::Constant(2, 1e-6);
  p.correlation = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd times(3);
  times << 0.0, 10.0, 20.0;
  std::map<double, Eigen::VectorXd> schedule;
  schedule[15.0] = Eigen::VectorXd::Constant(2, 1.0);
  auto path = simulate_path(p, Eigen::VectorXd::Constant(2, 5.0), times, schedule, 3);
  // step 1: plain drift; step 2: reset + drift over half the interval
  CHECK(path[1][0] == doctest::Approx(6.0).epsilon(1e-4));
  CHECK(path[2][0] == doctest::Approx(1.0 + 0.1 * 5.0).epsilon(1e-4));
}

TEST_CASE("simulate_path: deterministic for a fixed seed") {
  Rng rng(1);
  auto inst = random_instance(rng, 5, 3, false);
  Eigen::VectorXd times(4);
  times << 0.0, 30.0, 65.0, 101.0;
  auto a = simulate_path(inst.params, Eigen::VectorXd::Zero(3), times, {}, 987);
  auto b = simulate_path(inst.params, Eigen::VectorXd::Zero(3), times, {}, 987);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
}
