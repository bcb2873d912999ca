#include "trackdeg/maintenance.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace trackdeg {

IdentificationConfig IdentificationConfig::uniform(int n_indicators, double drop) {
  IdentificationConfig c;
  c.min_drop = Eigen::VectorXd::Constant(n_indicators, drop);
  return c;
}

void IdentificationConfig::validate() const {
  if (min_drop.size() == 0)
    throw std::invalid_argument("IdentificationConfig: empty min_drop");
  if (!min_drop.allFinite() || (min_drop.array() < 0.0).any())
    throw std::invalid_argument("IdentificationConfig: min_drop must be finite and nonnegative");
}

SegmentSeries identify(const SegmentSeries& series, const IdentificationConfig& config) {
  config.validate();
  series.validate(false);
  if (series.n_indicators() != config.min_drop.size())
    throw std::invalid_argument("identify: indicator count mismatch between series and config");
  SegmentSeries out = series;
  std::fill(out.maint_flags.begin(), out.maint_flags.end(), 0);
  const int d = series.n_indicators();
  for (int k = 1; k < series.n_obs(); ++k) {
    bool all = true;
    bool any = false;
    for (int q = 0; q < d; ++q) {
      const bool dropped =
          series.observations(k, q) <= series.observations(k - 1, q) - config.min_drop[q];
      all = all && dropped;
      any = any || dropped;
    }
    out.maint_flags[k] = (config.require_all ? all : any) ? 1 : 0;
  }
  return out;
}

Dataset identify_all(const Dataset& dataset, const IdentificationConfig& config) {
  Dataset out = dataset;
  for (auto& s : out.segments) s = identify(s, config);
  return out;
}

ConsistencyReport report(const Dataset& dataset, const std::vector<WorkOrder>& work_orders) {
  ConsistencyReport r;
  r.n_segments = static_cast<int>(dataset.segments.size());
  for (const auto& s : dataset.segments)
    r.flagged_intervals += static_cast<int>(s.maintenance_intervals().size());
  if (work_orders.empty()) return r;

  r.has_work_orders = true;
  // An order matches a flagged interval of its segment when its day falls in
  // (t_{k-1}, t_k]. Flagged intervals without any order are geometry-only.
  std::vector<std::vector<bool>> interval_matched(dataset.segments.size());
  for (std::size_t i = 0; i < dataset.segments.size(); ++i)
    interval_matched[i].assign(dataset.segments[i].n_obs(), false);

  for (const auto& order : work_orders) {
    bool matched = false;
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
      const auto& s = dataset.segments[i];
      if (s.segment_id != order.segment_id) continue;
      for (int k = 1; k < s.n_obs(); ++k) {
        if (!s.maint_flags[k]) continue;
        if (order.day > s.times[k - 1] && order.day <= s.times[k]) {
          matched = true;
          interval_matched[i][k] = true;
        }
      }
    }
    if (matched)
      ++r.matched;
    else
      ++r.workorder_only;
  }
  for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
    const auto& s = dataset.segments[i];
    for (int k = 1; k < s.n_obs(); ++k)
      if (s.maint_flags[k] && !interval_matched[i][k]) ++r.geometry_only;
  }
  return r;
}

std::string ConsistencyReport::to_text() const {
  std::ostringstream os;
  os << "segments: " << n_segments << "\n";
  os << "flagged_intervals: " << flagged_intervals << "\n";
  if (has_work_orders) {
    os << "workorder_matched: " << matched << "\n";
    os << "geometry_only: " << geometry_only << "\n";
    os << "workorder_only: " << workorder_only << "\n";
  }
  return os.str();
}

}  // namespace trackdeg
