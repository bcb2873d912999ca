// Ground-truth synthetic data generation: simulates the degradation process
// with tamping at inspection times and records every parameter the fitter is
// later asked to recover.
#pragma once

#include "trackdeg/io.hpp"
#include "trackdeg/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace trackdeg {

struct ScenarioSpec {
  int n_segments = 20;
  int n_indicators = 4;
  int n_inspections = 20;
  double nominal_interval_days = 90.0;  // inspection cycle
  double jitter_days = 30.0;            // uniform +/- jitter around the cycle
  double t0 = 0.0;
  std::vector<std::string> labels;      // default: top/alignment left/right

  // Per-segment truth: either drawn from the hierarchy (half-normal with the
  // scales below) or fixed to the same vector for every segment.
  bool draw_from_hyper = true;
  Eigen::VectorXd s_mu_true;     // half-normal scales for drift
  Eigen::VectorXd s_sigma_true;  // half-normal scales for marginal sd
  Eigen::VectorXd mu_fixed;      // used when draw_from_hyper is false
  Eigen::VectorXd sigma_fixed;
  Eigen::MatrixXd correlation_true;  // shared across segments

  Eigen::VectorXd initial_state;  // mm at t0

  enum class Tamping { none, threshold, scheduled };
  Tamping tamping = Tamping::none;
  // threshold rule: tamp in interval k when any indicator at t_{k-1} reaches
  // the threshold. scheduled rule: tamp in intervals containing a listed day.
  double tamping_threshold = 12.0;
  std::vector<double> scheduled_days;
  Eigen::VectorXd zplus_m;  // log-normal truth for post-tamping states
  Eigen::VectorXd zplus_s;
  // Misspecification toggle: draw zplus from a positive-truncated normal with
  // mean exp(zplus_m) and sd zplus_s * exp(zplus_m) instead.
  bool zplus_truncnormal = false;

  std::uint64_t seed = 0;

  static ScenarioSpec defaults();
  void validate() const;
};

struct TruthRecord {
  std::vector<TruthEntry> entries;
  double value(const std::string& parameter) const;  // throws when absent
  bool has(const std::string& parameter) const;
};

// Simulates the scenario. Returned flags are the true tamping intervals; the
// truth record holds every per-segment parameter, post-tamping state, and
// (when drawn) the generating hyperparameters.
std::pair<Dataset, TruthRecord> generate(const ScenarioSpec& spec);

}  // namespace trackdeg
