#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trackdeg/maintenance.hpp"
#include "trackdeg/synthgen.hpp"
#include "trackdeg/wiener.hpp"

#include <cmath>

using namespace trackdeg;

TEST_CASE("generate: zero-drift near-zero-noise spec gives constant observations") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 3;
  spec.n_inspections = 8;
  spec.draw_from_hyper = false;
  spec.mu_fixed = Eigen::VectorXd::Zero(4);
  spec.sigma_fixed = Eigen::VectorXd::Constant(4, 1e-9);
  spec.seed = 1;
  const auto [data, truth] = generate(spec);
  for (const auto& s : data.segments)
    for (int k = 0; k < s.n_obs(); ++k)
      for (int q = 0; q < 4; ++q)
        CHECK(s.observations(k, q) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("generate: series satisfy the dataset invariants") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 12;
  spec.tamping = ScenarioSpec::Tamping::threshold;
  spec.seed = 2;
  const auto [data, truth] = generate(spec);
  data.validate(true);
  CHECK(static_cast<int>(data.segments.size()) == 12);
  for (const auto& s : data.segments) CHECK(s.n_obs() == spec.n_inspections);
}

TEST_CASE("generate: same spec and seed give identical datasets") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 5;
  spec.tamping = ScenarioSpec::Tamping::threshold;
  spec.seed = 77;
  const auto [a, ta] = generate(spec);
  const auto [b, tb] = generate(spec);
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK((a.segments[i].times - b.segments[i].times).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.segments[i].observations - b.segments[i].observations).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(a.segments[i].maint_flags == b.segments[i].maint_flags);
  }
  REQUIRE(ta.entries.size() == tb.entries.size());
  for (std::size_t i = 0; i < ta.entries.size(); ++i)
    CHECK(ta.entries[i].value == tb.entries[i].value);
}

TEST_CASE("generate: increment covariance matches Sigma*dt across segments") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 1500;
  spec.n_inspections = 5;
  spec.jitter_days = 0.0;  // fixed dt so increments share one covariance
  spec.draw_from_hyper = false;
  spec.mu_fixed = Eigen::VectorXd::Constant(4, 0.01);
  spec.sigma_fixed.resize(4);
  spec.sigma_fixed << 0.08, 0.1, 0.05, 0.12;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(4, 4);
  corr(0, 1) = corr(1, 0) = 0.8;
  corr(2, 3) = corr(3, 2) = 0.6;
  spec.correlation_true = corr;
  spec.seed = 3;
  const auto [data, truth] = generate(spec);

  const Eigen::MatrixXd sigma = build_covariance(spec.sigma_fixed, corr);
  const double dt = 90.0;
  std::vector<Eigen::VectorXd> incs;
  for (const auto& s : data.segments)
    for (const auto& inc : increments(s))
      incs.push_back(inc.dz - spec.mu_fixed * inc.dt);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (const auto& v : incs) mean += v;
  mean /= static_cast<double>(incs.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& v : incs) cov += (v - mean) * (v - mean).transpose();
  cov /= static_cast<double>(incs.size() - 1);
  const double rel = (cov - sigma * dt).norm() / (sigma * dt).norm();
  CHECK(rel < 0.05);
}

TEST_CASE("generate: threshold rule only tamps above the threshold") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 20;
  spec.n_inspections = 25;
  spec.draw_from_hyper = false;
  spec.mu_fixed = Eigen::VectorXd::Constant(4, 0.04);  // fast drift
  spec.sigma_fixed = Eigen::VectorXd::Constant(4, 0.08);
  spec.tamping = ScenarioSpec::Tamping::threshold;
  spec.tamping_threshold = 12.0;
  spec.seed = 4;
  const auto [data, truth] = generate(spec);
  int events = 0;
  for (const auto& s : data.segments) {
    for (int k : s.maintenance_intervals()) {
      ++events;
      CHECK(s.observations.row(k - 1).maxCoeff() >= 12.0);
    }
  }
  CHECK(events > 20);
}

TEST_CASE("generate: scheduled tamping lands in the right intervals") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 4;
  spec.n_inspections = 10;
  spec.jitter_days = 0.0;
  spec.draw_from_hyper = false;
  spec.mu_fixed = Eigen::VectorXd::Constant(4, 0.02);
  spec.sigma_fixed = Eigen::VectorXd::Constant(4, 0.08);
  spec.tamping = ScenarioSpec::Tamping::scheduled;
  spec.scheduled_days = {200.0, 500.0};
  spec.seed = 5;
  const auto [data, truth] = generate(spec);
  for (const auto& s : data.segments) {
    const auto flags = s.maintenance_intervals();
    REQUIRE(flags.size() == 2);
    for (std::size_t e = 0; e < flags.size(); ++e) {
      const int k = flags[e];
      const double day = spec.scheduled_days[e];
      CHECK(s.times[k - 1] < day);
      CHECK(day <= s.times[k]);
    }
  }
}

TEST_CASE("generate: inconsistent spec is rejected") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.tamping = ScenarioSpec::Tamping::threshold;
  spec.tamping_threshold = 1.0;  // below the initial state
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("round trip: identification recovers the true flags on separated drops") {
  // post-tamping values sit far below pre-tamping levels (> 4 interval sds)
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 30;
  spec.n_inspections = 26;
  spec.draw_from_hyper = false;
  spec.mu_fixed = Eigen::VectorXd::Constant(4, 0.03);
  spec.sigma_fixed = Eigen::VectorXd::Constant(4, 0.08);
  spec.tamping = ScenarioSpec::Tamping::threshold;
  spec.tamping_threshold = 14.0;
  spec.zplus_m = Eigen::VectorXd::Constant(4, std::log(2.0));
  spec.zplus_s = Eigen::VectorXd::Constant(4, 0.25);
  spec.seed = 6;
  const auto [data, truth] = generate(spec);

  int true_events = 0;
  for (const auto& s : data.segments) true_events += static_cast<int>(s.maintenance_intervals().size());
  REQUIRE(true_events >= 50);

  const Dataset identified = identify_all(data, IdentificationConfig::uniform(4, 0.5));
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < data.segments.size(); ++i) {
    for (int k = 1; k < data.segments[i].n_obs(); ++k) {
      const bool truth_flag = data.segments[i].maint_flags[k] != 0;
      const bool found = identified.segments[i].maint_flags[k] != 0;
      if (truth_flag && found) ++tp;
      if (!truth_flag && found) ++fp;
      if (truth_flag && !found) ++fn;
    }
  }
  const double precision = tp / static_cast<double>(tp + fp);
  const double recall = tp / static_cast<double>(tp + fn);
  CHECK(precision >= 0.95);
  CHECK(recall >= 0.95);
}

TEST_CASE("generate: truncated-normal misspecification toggle stays positive") {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = 10;
  spec.n_inspections = 20;
  spec.draw_from_hyper = false;
  spec.mu_fixed = Eigen::VectorXd::Constant(4, 0.04);
  spec.sigma_fixed = Eigen::VectorXd::Constant(4, 0.08);
  spec.tamping = ScenarioSpec::Tamping::threshold;
  spec.zplus_truncnormal = true;
  spec.seed = 8;
  const auto [data, truth] = generate(spec);
  for (const auto& e : truth.entries)
    if (e.parameter.rfind("zplus[", 0) == 0) CHECK(e.value > 0.0);
}
