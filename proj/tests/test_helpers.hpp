// Shared construction helpers for tests.
#pragma once

#include "trackdeg/mcmc.hpp"
#include "trackdeg/types.hpp"

#include <string>
#include <vector>

namespace testhelp {

// Posterior with every draw fixed to the given parameters (one chain, one
// draw): lets predictive code run with known process parameters.
inline trackdeg::PosteriorSamples degenerate_samples(const trackdeg::WienerParams& params,
                                                     int segment_id,
                                                     bool multivariate = true) {
  using namespace trackdeg;
  PosteriorSamples s;
  const int d = params.n_indicators();
  s.model_kind = multivariate ? ModelKind::multivariate : ModelKind::univariate;
  s.n_indicators = d;
  s.segment_ids = {segment_id};
  const std::string sid = std::to_string(segment_id);
  std::vector<double> row;
  for (int q = 0; q < d; ++q) {
    s.names.push_back("mu[" + sid + "][" + std::to_string(q) + "]");
    row.push_back(params.drift[q]);
  }
  for (int q = 0; q < d; ++q) {
    s.names.push_back("sigma[" + sid + "][" + std::to_string(q) + "]");
    row.push_back(params.marginal_sd[q]);
  }
  if (multivariate && d >= 2) {
    for (int q1 = 0; q1 < d; ++q1)
      for (int q2 = q1 + 1; q2 < d; ++q2) {
        s.names.push_back("R[" + sid + "][" + std::to_string(q1) + "][" + std::to_string(q2) +
                          "]");
        row.push_back(params.correlation(q1, q2));
      }
  }
  for (int q = 0; q < d; ++q) {
    s.names.push_back("hyper.s_mu[" + std::to_string(q) + "]");
    row.push_back(1.0);
  }
  Eigen::MatrixXd m(1, static_cast<int>(row.size()));
  for (std::size_t i = 0; i < row.size(); ++i) m(0, static_cast<int>(i)) = row[i];
  s.chains = {m};
  return s;
}

// Two-observation series anchoring a simulation start state.
inline trackdeg::Dataset start_dataset(int segment_id, const Eigen::VectorXd& start,
                                       double t_last = 0.0) {
  using namespace trackdeg;
  Dataset d;
  const int n_ind = static_cast<int>(start.size());
  for (int q = 0; q < n_ind; ++q) d.labels.push_back("ind" + std::to_string(q));
  SegmentSeries s;
  s.segment_id = segment_id;
  s.times.resize(2);
  s.times << t_last - 90.0, t_last;
  s.observations.resize(2, n_ind);
  s.observations.row(0) = start.transpose();
  s.observations.row(1) = start.transpose();
  s.maint_flags = {0, 0};
  d.segments.push_back(std::move(s));
  return d;
}

}  // namespace testhelp
