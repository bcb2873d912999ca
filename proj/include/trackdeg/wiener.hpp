// Multivariate Wiener degradation process: increment extraction, covariance
// construction, log-likelihoods with and without tamping intervals, and
// forward path simulation.
//
// Likelihood conventions (all log-domain):
//  - interval without maintenance: dz ~ N(mu*dt, Sigma*dt)
//  - interval with maintenance: the observation at the interval end is
//    z_k ~ N(zplus + mu*dt/2, Sigma*dt/2); tamping is assumed to happen at
//    the interval midpoint and the post-tamping state zplus is a parameter.
#pragma once

#include "trackdeg/rng.hpp"
#include "trackdeg/types.hpp"

#include <Eigen/Cholesky>

#include <map>
#include <vector>

namespace trackdeg {

struct Increment {
  double dt = 0.0;
  Eigen::VectorXd dz;
  bool maint = false;
};

// Successive differences of a series: K-1 tuples (dt, dz, maint flag).
// Throws on series with fewer than two observations.
std::vector<Increment> increments(const SegmentSeries& series);

// Sigma = diag(sd) * R * diag(sd). Throws if R is not a valid correlation
// matrix or sd is not positive.
Eigen::MatrixXd build_covariance(const Eigen::VectorXd& marginal_sd,
                                 const Eigen::MatrixXd& correlation);

// Cached Cholesky of a process covariance; reused across likelihood calls
// with unchanged (sd, R).
class CovarianceChol {
 public:
  CovarianceChol() = default;
  CovarianceChol(const Eigen::VectorXd& marginal_sd, const Eigen::MatrixXd& correlation);

  int dim() const { return static_cast<int>(llt_.rows()); }
  double log_det() const { return log_det_; }
  // x^T Sigma^{-1} x
  double inv_quad(const Eigen::VectorXd& x) const;
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }
  bool valid() const { return valid_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  bool valid_ = false;
};

// Log-density contribution of a single interval under the multivariate model.
// For maint intervals, obs_end is z_k and zplus must be non-null.
double interval_loglik(const Eigen::VectorXd& drift, const CovarianceChol& chol,
                       double dt, const Eigen::VectorXd& dz_or_obs, bool maint,
                       const Eigen::VectorXd* zplus);

// Log of the full-series multivariate likelihood. Every flagged interval of
// the series must have an entry in post_maint; a missing entry throws.
double loglik_multivariate(const WienerParams& params, const SegmentSeries& series,
                           const PostMaintMap& post_maint);

// Same with a precomputed covariance Cholesky (hot path for samplers).
double loglik_multivariate(const Eigen::VectorXd& drift, const CovarianceChol& chol,
                           const SegmentSeries& series, const PostMaintMap& post_maint);

// Log-likelihood of a single indicator under the independent univariate model.
double loglik_univariate(double drift, double variance, const SegmentSeries& series,
                         int indicator, const PostMaintMap& post_maint);

// Contribution of one interval to loglik_univariate (hot path for samplers).
double interval_loglik_1d(double drift, double variance, double dt,
                          double dz_or_obs, bool maint, double zplus);

// Simulates the process at the given times. The value at times[0] is `start`;
// each later value is drawn sequentially. A schedule entry with a reset time
// inside (times[j-1], times[j]] replaces that step by a midpoint-tamping jump
// to the scheduled post-maintenance state. Deterministic for a fixed seed.
std::vector<IndicatorVector> simulate_path(
    const WienerParams& params, const IndicatorVector& start,
    const Eigen::VectorXd& times,
    const std::map<double, Eigen::VectorXd>& maint_schedule, std::uint64_t seed);

// Single forward step used by path simulators: z + mu*dt + L*sqrt(dt)*eps.
Eigen::VectorXd wiener_step(const Eigen::VectorXd& state, const Eigen::VectorXd& drift,
                            const Eigen::MatrixXd& chol_lower, double dt, Rng& rng);

}  // namespace trackdeg
