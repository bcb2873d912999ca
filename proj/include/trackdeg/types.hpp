// Core domain types for track geometry degradation series and process
// parameters. Time is measured in days, indicator values in mm.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace trackdeg {

// One inspection's summary values, one entry per geometry indicator.
using IndicatorVector = Eigen::VectorXd;

// Time series of inspection summaries for one track segment.
//
// maint_flags[k] marks the interval (times[k-1], times[k]] as containing a
// tamping event; index 0 is never flagged since no interval precedes the
// first observation.
struct SegmentSeries {
  int segment_id = 0;
  Eigen::VectorXd times;                   // days, strictly increasing
  Eigen::MatrixXd observations;            // n_obs x n_indicators
  std::vector<std::uint8_t> maint_flags;   // n_obs entries, 0/1

  int n_obs() const { return static_cast<int>(times.size()); }
  int n_indicators() const { return static_cast<int>(observations.cols()); }

  std::vector<int> maintenance_intervals() const;

  // Throws std::invalid_argument on any violated invariant. require_fit
  // additionally demands at least two observations.
  void validate(bool require_fit = true) const;
};

// A collection of segment series sharing one indicator ordering.
struct Dataset {
  std::vector<std::string> labels;      // indicator names, model order
  std::vector<SegmentSeries> segments;

  int n_indicators() const { return static_cast<int>(labels.size()); }
  const SegmentSeries& by_id(int segment_id) const;
  void validate(bool require_fit = true) const;
};

// Copy with the last `count` observations of every series removed; the usual
// way to carve a training set out for holdout validation.
Dataset drop_last_observations(const Dataset& dataset, int count);

// Parameters of one segment's multivariate Wiener process.
struct WienerParams {
  Eigen::VectorXd drift;        // mm/day, each >= 0
  Eigen::VectorXd marginal_sd;  // mm/sqrt(day), each > 0
  Eigen::MatrixXd correlation;  // symmetric, unit diagonal, positive definite

  int n_indicators() const { return static_cast<int>(drift.size()); }
  void validate() const;
};

// Indicator values immediately after the tamping event in one interval.
struct PostMaintenanceState {
  int segment_id = 0;
  int interval_index = 0;   // k with maint_flags[k] set in the owning series
  Eigen::VectorXd values;   // mm, each > 0
};

// Post-maintenance states of one segment, keyed by interval index.
using PostMaintMap = std::map<int, PostMaintenanceState>;

// Maintenance limits, one per indicator.
struct Thresholds {
  Eigen::VectorXd limits;  // mm, positive and finite
  std::string label;       // e.g. M3, M1, D7, D1 or custom
  void validate() const;
};

}  // namespace trackdeg
