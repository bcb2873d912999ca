#include "trackdeg/wiener.hpp"

#include <cmath>
#include <stdexcept>

namespace trackdeg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

std::vector<Increment> increments(const SegmentSeries& series) {
  series.validate(true);
  const int k = series.n_obs();
  std::vector<Increment> out;
  out.reserve(k - 1);
  for (int i = 1; i < k; ++i) {
    Increment inc;
    inc.dt = series.times[i] - series.times[i - 1];
    inc.dz = (series.observations.row(i) - series.observations.row(i - 1)).transpose();
    inc.maint = series.maint_flags[i] != 0;
    out.push_back(std::move(inc));
  }
  return out;
}

Eigen::MatrixXd build_covariance(const Eigen::VectorXd& marginal_sd,
                                 const Eigen::MatrixXd& correlation) {
  const int d = static_cast<int>(marginal_sd.size());
  if (correlation.rows() != d || correlation.cols() != d)
    throw std::invalid_argument("build_covariance: dimension mismatch");
  if ((marginal_sd.array() <= 0.0).any())
    throw std::invalid_argument("build_covariance: marginal_sd must be positive");
  Eigen::MatrixXd sigma =
      marginal_sd.asDiagonal() * correlation * marginal_sd.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("build_covariance: covariance is not positive definite");
  return sigma;
}

CovarianceChol::CovarianceChol(const Eigen::VectorXd& marginal_sd,
                               const Eigen::MatrixXd& correlation) {
  Eigen::MatrixXd sigma =
      marginal_sd.asDiagonal() * correlation * marginal_sd.asDiagonal();
  llt_.compute(sigma);
  valid_ = llt_.info() == Eigen::Success;
  if (valid_) log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

double CovarianceChol::inv_quad(const Eigen::VectorXd& x) const {
  return llt_.matrixL().solve(x).squaredNorm();
}

double interval_loglik(const Eigen::VectorXd& drift, const CovarianceChol& chol,
                       double dt, const Eigen::VectorXd& dz_or_obs, bool maint,
                       const Eigen::VectorXd* zplus) {
  const double d = static_cast<double>(chol.dim());
  if (!maint) {
    const double quad = chol.inv_quad(dz_or_obs - drift * dt) / dt;
    return -0.5 * (d * (kLog2Pi + std::log(dt)) + chol.log_det() + quad);
  }
  const double half_dt = 0.5 * dt;
  const Eigen::VectorXd resid = dz_or_obs - *zplus - drift * half_dt;
  const double quad = chol.inv_quad(resid) / half_dt;
  return -0.5 * (d * (kLog2Pi + std::log(half_dt)) + chol.log_det() + quad);
}

double loglik_multivariate(const Eigen::VectorXd& drift, const CovarianceChol& chol,
                           const SegmentSeries& series, const PostMaintMap& post_maint) {
  if (!chol.valid()) throw std::invalid_argument("loglik_multivariate: covariance not positive definite");
  const int k = series.n_obs();
  double total = 0.0;
  for (int i = 1; i < k; ++i) {
    const double dt = series.times[i] - series.times[i - 1];
    if (series.maint_flags[i]) {
      auto it = post_maint.find(i);
      if (it == post_maint.end())
        throw std::invalid_argument("loglik_multivariate: segment " +
                                    std::to_string(series.segment_id) +
                                    " interval " + std::to_string(i) +
                                    " is flagged but has no post-maintenance state");
      const Eigen::VectorXd obs = series.observations.row(i).transpose();
      total += interval_loglik(drift, chol, dt, obs, true, &it->second.values);
    } else {
      const Eigen::VectorXd dz =
          (series.observations.row(i) - series.observations.row(i - 1)).transpose();
      total += interval_loglik(drift, chol, dt, dz, false, nullptr);
    }
  }
  if (!std::isfinite(total))
    throw std::runtime_error("loglik_multivariate: non-finite log-likelihood");
  return total;
}

double loglik_multivariate(const WienerParams& params, const SegmentSeries& series,
                           const PostMaintMap& post_maint) {
  series.validate(true);
  CovarianceChol chol(params.marginal_sd, params.correlation);
  return loglik_multivariate(params.drift, chol, series, post_maint);
}

double interval_loglik_1d(double drift, double variance, double dt,
                          double dz_or_obs, bool maint, double zplus) {
  if (!maint) {
    const double r = dz_or_obs - drift * dt;
    return -0.5 * (kLog2Pi + std::log(variance * dt) + r * r / (variance * dt));
  }
  const double v = 0.5 * variance * dt;
  const double r = dz_or_obs - zplus - 0.5 * drift * dt;
  return -0.5 * (kLog2Pi + std::log(v) + r * r / v);
}

double loglik_univariate(double drift, double variance, const SegmentSeries& series,
                         int indicator, const PostMaintMap& post_maint) {
  series.validate(true);
  if (variance <= 0.0) throw std::invalid_argument("loglik_univariate: variance must be positive");
  if (indicator < 0 || indicator >= series.n_indicators())
    throw std::invalid_argument("loglik_univariate: indicator index out of range");
  const int k = series.n_obs();
  double total = 0.0;
  for (int i = 1; i < k; ++i) {
    const double dt = series.times[i] - series.times[i - 1];
    if (series.maint_flags[i]) {
      auto it = post_maint.find(i);
      if (it == post_maint.end())
        throw std::invalid_argument("loglik_univariate: segment " +
                                    std::to_string(series.segment_id) +
                                    " interval " + std::to_string(i) +
                                    " is flagged but has no post-maintenance state");
      total += interval_loglik_1d(drift, variance, dt, series.observations(i, indicator),
                                  true, it->second.values[indicator]);
    } else {
      const double dz = series.observations(i, indicator) - series.observations(i - 1, indicator);
      total += interval_loglik_1d(drift, variance, dt, dz, false, 0.0);
    }
  }
  if (!std::isfinite(total))
    throw std::runtime_error("loglik_univariate: non-finite log-likelihood");
  return total;
}

Eigen::VectorXd wiener_step(const Eigen::VectorXd& state, const Eigen::VectorXd& drift,
                            const Eigen::MatrixXd& chol_lower, double dt, Rng& rng) {
  Eigen::VectorXd eps(state.size());
  for (int q = 0; q < eps.size(); ++q) eps[q] = rng.normal();
  return state + drift * dt + std::sqrt(dt) * (chol_lower * eps);
}

std::vector<IndicatorVector> simulate_path(
    const WienerParams& params, const IndicatorVector& start,
    const Eigen::VectorXd& times,
    const std::map<double, Eigen::VectorXd>& maint_schedule, std::uint64_t seed) {
  params.validate();
  const int n = static_cast<int>(times.size());
  for (int i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("simulate_path: times must be strictly increasing");
  Eigen::LLT<Eigen::MatrixXd> llt(build_covariance(params.marginal_sd, params.correlation));
  const Eigen::MatrixXd lower = llt.matrixL();

  Rng rng(seed);
  std::vector<IndicatorVector> out;
  out.reserve(n);
  out.push_back(start);
  for (int i = 1; i < n; ++i) {
    const double dt = times[i] - times[i - 1];
    // Last scheduled reset inside (times[i-1], times[i]], if any.
    auto hi = maint_schedule.upper_bound(times[i]);
    const Eigen::VectorXd* reset = nullptr;
    if (hi != maint_schedule.begin()) {
      auto it = std::prev(hi);
      if (it->first > times[i - 1]) reset = &it->second;
    }
    if (reset) {
      const double half_dt = 0.5 * dt;
      Eigen::VectorXd eps(start.size());
      for (int q = 0; q < eps.size(); ++q) eps[q] = rng.normal();
      out.push_back(*reset + params.drift * half_dt + std::sqrt(half_dt) * (lower * eps));
    } else {
      out.push_back(wiener_step(out.back(), params.drift, lower, dt, rng));
    }
  }
  return out;
}

}  // namespace trackdeg
