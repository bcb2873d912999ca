#include "trackdeg/types.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace trackdeg {

std::vector<int> SegmentSeries::maintenance_intervals() const {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(maint_flags.size()); ++k)
    if (maint_flags[k]) out.push_back(k);
  return out;
}

void SegmentSeries::validate(bool require_fit) const {
  const int k = n_obs();
  if (require_fit && k < 2)
    throw std::invalid_argument("segment " + std::to_string(segment_id) +
                                ": needs at least 2 observations");
  if (observations.rows() != k)
    throw std::invalid_argument("segment " + std::to_string(segment_id) +
                                ": observations/times length mismatch");
  if (static_cast<int>(maint_flags.size()) != k)
    throw std::invalid_argument("segment " + std::to_string(segment_id) +
                                ": maint_flags/times length mismatch");
  if (!maint_flags.empty() && maint_flags[0])
    throw std::invalid_argument("segment " + std::to_string(segment_id) +
                                ": maint_flags[0] must be false");
  for (int i = 1; i < k; ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("segment " + std::to_string(segment_id) +
                                  ": times must be strictly increasing");
  if (!times.allFinite() || !observations.allFinite())
    throw std::invalid_argument("segment " + std::to_string(segment_id) +
                                ": non-finite time or observation");
}

const SegmentSeries& Dataset::by_id(int segment_id) const {
  for (const auto& s : segments)
    if (s.segment_id == segment_id) return s;
  throw std::invalid_argument("unknown segment id " + std::to_string(segment_id));
}

void Dataset::validate(bool require_fit) const {
  for (const auto& s : segments) {
    s.validate(require_fit);
    if (s.n_indicators() != n_indicators())
      throw std::invalid_argument("segment " + std::to_string(s.segment_id) +
                                  ": indicator count does not match dataset labels");
  }
}

Dataset drop_last_observations(const Dataset& dataset, int count) {
  if (count < 0) throw std::invalid_argument("drop_last_observations: negative count");
  Dataset out;
  out.labels = dataset.labels;
  for (const auto& s : dataset.segments) {
    const int keep = s.n_obs() - count;
    if (keep < 2)
      throw std::invalid_argument("segment " + std::to_string(s.segment_id) +
                                  ": fewer than 2 observations would remain");
    SegmentSeries t;
    t.segment_id = s.segment_id;
    t.times = s.times.head(keep);
    t.observations = s.observations.topRows(keep);
    t.maint_flags.assign(s.maint_flags.begin(), s.maint_flags.begin() + keep);
    out.segments.push_back(std::move(t));
  }
  return out;
}

void WienerParams::validate() const {
  const int d = n_indicators();
  if (marginal_sd.size() != d || correlation.rows() != d || correlation.cols() != d)
    throw std::invalid_argument("WienerParams: dimension mismatch");
  if ((drift.array() < 0.0).any() || !drift.allFinite())
    throw std::invalid_argument("WienerParams: drift must be nonnegative and finite");
  if ((marginal_sd.array() <= 0.0).any() || !marginal_sd.allFinite())
    throw std::invalid_argument("WienerParams: marginal_sd must be positive");
  if (!correlation.allFinite() || (correlation - correlation.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("WienerParams: correlation must be symmetric");
  for (int i = 0; i < d; ++i)
    if (std::abs(correlation(i, i) - 1.0) > 1e-12)
      throw std::invalid_argument("WienerParams: correlation diagonal must be 1");
  Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("WienerParams: correlation is not positive definite");
}

void Thresholds::validate() const {
  if (limits.size() == 0) throw std::invalid_argument("Thresholds: empty");
  if (!limits.allFinite() || (limits.array() <= 0.0).any())
    throw std::invalid_argument("Thresholds: limits must be positive and finite");
}

}  // namespace trackdeg
