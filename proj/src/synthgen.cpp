#include "trackdeg/synthgen.hpp"

#include "trackdeg/priors.hpp"
#include "trackdeg/rng.hpp"
#include "trackdeg/wiener.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace trackdeg {

ScenarioSpec ScenarioSpec::defaults() {
  ScenarioSpec s;
  s.labels = {"top_left", "top_right", "align_left", "align_right"};
  s.s_mu_true = Eigen::VectorXd::Constant(4, 0.02);
  s.s_sigma_true = Eigen::VectorXd::Constant(4, 0.1);
  s.mu_fixed = Eigen::VectorXd::Constant(4, 0.02);
  s.sigma_fixed = Eigen::VectorXd::Constant(4, 0.08);
  s.correlation_true = Eigen::MatrixXd::Identity(4, 4);
  s.initial_state = Eigen::VectorXd::Constant(4, 2.0);
  s.zplus_m = Eigen::VectorXd::Constant(4, std::log(2.5));
  s.zplus_s = Eigen::VectorXd::Constant(4, 0.3);
  return s;
}

void ScenarioSpec::validate() const {
  const int d = n_indicators;
  if (d < 1) throw std::invalid_argument("ScenarioSpec: n_indicators must be >= 1");
  if (n_segments < 1) throw std::invalid_argument("ScenarioSpec: n_segments must be >= 1");
  if (n_inspections < 2) throw std::invalid_argument("ScenarioSpec: need >= 2 inspections");
  if (!(nominal_interval_days > 0.0))
    throw std::invalid_argument("ScenarioSpec: inspection interval must be positive");
  if (jitter_days < 0.0 || jitter_days >= nominal_interval_days)
    throw std::invalid_argument("ScenarioSpec: jitter must lie in [0, interval)");
  if (static_cast<int>(labels.size()) != d)
    throw std::invalid_argument("ScenarioSpec: label count must equal n_indicators");
  auto dim_check = [&](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != d) throw std::invalid_argument(std::string("ScenarioSpec: ") + what +
                                                   " must have one entry per indicator");
  };
  if (draw_from_hyper) {
    dim_check(s_mu_true, "s_mu_true");
    dim_check(s_sigma_true, "s_sigma_true");
    if ((s_mu_true.array() <= 0.0).any() || (s_sigma_true.array() <= 0.0).any())
      throw std::invalid_argument("ScenarioSpec: hyper truth scales must be positive");
  } else {
    dim_check(mu_fixed, "mu_fixed");
    dim_check(sigma_fixed, "sigma_fixed");
    if ((mu_fixed.array() < 0.0).any() || (sigma_fixed.array() <= 0.0).any())
      throw std::invalid_argument("ScenarioSpec: fixed truth must have mu >= 0, sigma > 0");
  }
  if (correlation_true.rows() != d || correlation_true.cols() != d)
    throw std::invalid_argument("ScenarioSpec: correlation_true has wrong dimension");
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_true);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("ScenarioSpec: correlation_true is not positive definite");
  dim_check(initial_state, "initial_state");
  if (tamping != Tamping::none) {
    dim_check(zplus_m, "zplus_m");
    dim_check(zplus_s, "zplus_s");
    if ((zplus_s.array() <= 0.0).any())
      throw std::invalid_argument("ScenarioSpec: zplus_s must be positive");
  }
  if (tamping == Tamping::threshold && (initial_state.array() >= tamping_threshold).any())
    throw std::invalid_argument("ScenarioSpec: tamping threshold lies below the initial state");
}

double TruthRecord::value(const std::string& parameter) const {
  for (const auto& e : entries)
    if (e.parameter == parameter) return e.value;
  throw std::invalid_argument("truth record has no entry '" + parameter + "'");
}

bool TruthRecord::has(const std::string& parameter) const {
  for (const auto& e : entries)
    if (e.parameter == parameter) return true;
  return false;
}

std::pair<Dataset, TruthRecord> generate(const ScenarioSpec& spec) {
  spec.validate();
  const int d = spec.n_indicators;
  Rng master(spec.seed);

  Dataset dataset;
  dataset.labels = spec.labels;
  TruthRecord truth;

  if (spec.draw_from_hyper) {
    for (int q = 0; q < d; ++q) {
      truth.entries.push_back({"hyper.s_mu[" + std::to_string(q) + "]", -1, spec.s_mu_true[q]});
      truth.entries.push_back(
          {"hyper.s_sigma[" + std::to_string(q) + "]", -1, spec.s_sigma_true[q]});
    }
  }
  if (spec.tamping != ScenarioSpec::Tamping::none) {
    for (int q = 0; q < d; ++q) {
      truth.entries.push_back({"hyper.m_z[" + std::to_string(q) + "]", -1, spec.zplus_m[q]});
      truth.entries.push_back({"hyper.s_z[" + std::to_string(q) + "]", -1, spec.zplus_s[q]});
    }
  }

  for (int i = 0; i < spec.n_segments; ++i) {
    Rng rng = master.fork(static_cast<std::uint64_t>(i));
    const std::string sid = std::to_string(i);

    Eigen::VectorXd mu(d), sd(d);
    for (int q = 0; q < d; ++q) {
      if (spec.draw_from_hyper) {
        mu[q] = halfnormal_sample(spec.s_mu_true[q], rng);
        sd[q] = std::max(halfnormal_sample(spec.s_sigma_true[q], rng), 1e-4);
      } else {
        mu[q] = spec.mu_fixed[q];
        sd[q] = spec.sigma_fixed[q];
      }
    }
    const Eigen::MatrixXd sigma = sd.asDiagonal() * spec.correlation_true * sd.asDiagonal();
    const Eigen::MatrixXd lower = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();

    const int k_total = spec.n_inspections;
    SegmentSeries series;
    series.segment_id = i;
    series.times.resize(k_total);
    series.observations.resize(k_total, d);
    series.maint_flags.assign(k_total, 0);

    series.times[0] = spec.t0;
    for (int k = 1; k < k_total; ++k)
      series.times[k] =
          series.times[k - 1] + rng.uniform(spec.nominal_interval_days - spec.jitter_days,
                                            spec.nominal_interval_days + spec.jitter_days);

    Eigen::VectorXd z = spec.initial_state;
    series.observations.row(0) = z.transpose();
    for (int k = 1; k < k_total; ++k) {
      const double dt = series.times[k] - series.times[k - 1];
      bool tamp = false;
      switch (spec.tamping) {
        case ScenarioSpec::Tamping::none:
          break;
        case ScenarioSpec::Tamping::threshold:
          tamp = (z.array() >= spec.tamping_threshold).any();
          break;
        case ScenarioSpec::Tamping::scheduled:
          for (double day : spec.scheduled_days)
            if (day > series.times[k - 1] && day <= series.times[k]) tamp = true;
          break;
      }
      Eigen::VectorXd eps(d);
      for (int q = 0; q < d; ++q) eps[q] = rng.normal();
      if (tamp) {
        Eigen::VectorXd zplus(d);
        for (int q = 0; q < d; ++q) {
          if (spec.zplus_truncnormal) {
            const double m = std::exp(spec.zplus_m[q]);
            double v;
            do {
              v = rng.normal(m, spec.zplus_s[q] * m);
            } while (v <= 0.0);
            zplus[q] = v;
          } else {
            zplus[q] = lognormal_sample(spec.zplus_m[q], spec.zplus_s[q], rng);
          }
        }
        z = zplus + mu * (0.5 * dt) + std::sqrt(0.5 * dt) * (lower * eps);
        series.maint_flags[k] = 1;
        for (int q = 0; q < d; ++q)
          truth.entries.push_back(
              {"zplus[" + sid + "][" + std::to_string(k) + "][" + std::to_string(q) + "]", i,
               zplus[q]});
      } else {
        z = z + mu * dt + std::sqrt(dt) * (lower * eps);
      }
      series.observations.row(k) = z.transpose();
    }

    for (int q = 0; q < d; ++q) {
      truth.entries.push_back({"mu[" + sid + "][" + std::to_string(q) + "]", i, mu[q]});
      truth.entries.push_back({"sigma[" + sid + "][" + std::to_string(q) + "]", i, sd[q]});
    }
    for (int q1 = 0; q1 < d; ++q1)
      for (int q2 = q1 + 1; q2 < d; ++q2)
        truth.entries.push_back(
            {"R[" + sid + "][" + std::to_string(q1) + "][" + std::to_string(q2) + "]", i,
             spec.correlation_true(q1, q2)});

    dataset.segments.push_back(std::move(series));
  }
  return {std::move(dataset), std::move(truth)};
}

}  // namespace trackdeg
