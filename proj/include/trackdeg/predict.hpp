// Posterior-predictive trajectories, holdout validation, and Monte-Carlo
// first-passage analysis against maintenance thresholds.
#pragma once

#include "trackdeg/mcmc.hpp"
#include "trackdeg/types.hpp"

#include <string>
#include <vector>

namespace trackdeg {

struct BandsResult {
  Eigen::VectorXd times;          // absolute days
  std::vector<double> quantiles;  // ascending
  // values[time_index](quantile_index, indicator)
  std::vector<Eigen::MatrixXd> values;
};

// Pointwise posterior-predictive quantile curves for one segment, simulated
// forward from its last observation, one path per stored draw. The
// convergence gate (split-Rhat <= rhat_limit) applies whenever the posterior
// has at least two chains, unless force is set.
BandsResult predictive_bands(const PosteriorSamples& samples, const Dataset& dataset,
                             int segment_id, const Eigen::VectorXd& future_times,
                             const std::vector<double>& quantiles, std::uint64_t seed,
                             bool force = false, double rhat_limit = 1.05);

// Convenience wrapper: an evenly spaced grid from the last observation.
BandsResult predictive_bands_horizon(const PosteriorSamples& samples, const Dataset& dataset,
                                     int segment_id, double horizon_days, double step_days,
                                     const std::vector<double>& quantiles, std::uint64_t seed,
                                     bool force = false, double rhat_limit = 1.05);

struct CoverageReport {
  int holdout_count = 0;
  double band = 0.95;
  int n_points = 0;  // scalar (segment, time, indicator) scores
  Eigen::VectorXd per_indicator_coverage;
  double overall_coverage = 0.0;
  Eigen::VectorXd per_indicator_crps;
  double mean_crps = 0.0;
  std::string to_text(const std::vector<std::string>& labels = {}) const;
};

// Scores the last holdout_count observations of every series against the
// posterior predictive implied by `samples`, which the caller fitted on the
// truncated series (no refitting happens here). Held-out intervals flagged as
// maintained are simulated with a midpoint reset to a post-maintenance value
// drawn from the fitted hierarchy, so maintained windows stay scoreable.
CoverageReport validate(const PosteriorSamples& samples, const Dataset& full_dataset,
                        int holdout_count, double band, std::uint64_t seed,
                        bool force = false, double rhat_limit = 1.05);

struct HittingTimeResult {
  int segment_id = 0;
  std::vector<double> hitting_times;  // days from the path start, non-censored paths
  std::vector<int> first_indicator;   // aligned with hitting_times
  Eigen::VectorXd first_hit_probabilities;  // over non-censored paths, sums to 1
  Eigen::VectorXd hit_fraction_all;         // per indicator, fraction of all paths
  double censored_fraction = 0.0;
  long ties = 0;
  int n_paths = 0;

  std::vector<double> time_quantiles(const std::vector<double>& probs) const;
};

// First-passage Monte Carlo: simulates forward from the segment's last
// observation on a fixed grid until any indicator reaches its threshold.
// Paths cycle through the stored draws; crossing times are interpolated
// within the step; simultaneous crossings go to the lowest indicator index
// and are tallied. Fully deterministic in (seed, draw, path).
HittingTimeResult hitting_time(const PosteriorSamples& samples, const Dataset& dataset,
                               int segment_id, const Thresholds& thresholds,
                               double horizon_days, int n_paths, std::uint64_t seed,
                               double step_days = 1.0, int threads = 1,
                               bool force = false, double rhat_limit = 1.05);

struct ModelComparison {
  HittingTimeResult multivariate;
  HittingTimeResult univariate;
  double median_multivariate = 0.0;
  double median_univariate = 0.0;
  double median_diff = 0.0;  // multivariate - univariate
};

// Paired hitting-time summaries of the joint model against the
// independent-indicators benchmark fitted on the same data.
ModelComparison compare_models(const PosteriorSamples& multi_samples,
                               const PosteriorSamples& uni_samples, const Dataset& dataset,
                               int segment_id, const Thresholds& thresholds,
                               double horizon_days, int n_paths, std::uint64_t seed,
                               double step_days = 1.0, int threads = 1, bool force = false);

// Empirical quantile (type 7) of a sample; exposed for table writers.
double sample_quantile(std::vector<double> values, double p);

}  // namespace trackdeg
