// Statistical identification of tamping intervals from simultaneous drops in
// the geometry indicators, plus reconciliation against work-order records.
#pragma once

#include "trackdeg/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trackdeg {

struct IdentificationConfig {
  Eigen::VectorXd min_drop;  // mm, required decrease per indicator, >= 0
  bool require_all = true;   // conjunction over indicators (else any)

  static IdentificationConfig uniform(int n_indicators, double drop = 0.5);
  void validate() const;
};

// Returns a copy of the series with maint_flags set: interval k is flagged
// iff z[k][q] <= z[k-1][q] - min_drop[q] for every indicator q (or any, when
// require_all is false). Index 0 is never flagged. Existing flags are
// discarded, so the operation is idempotent.
SegmentSeries identify(const SegmentSeries& series, const IdentificationConfig& config);

Dataset identify_all(const Dataset& dataset, const IdentificationConfig& config);

struct WorkOrder {
  int segment_id = 0;
  double day = 0.0;
};

// Flag counts plus, when work orders are supplied, the reconciliation between
// geometry-identified intervals and recorded orders.
struct ConsistencyReport {
  int n_segments = 0;
  int flagged_intervals = 0;
  bool has_work_orders = false;
  int matched = 0;          // orders falling inside a flagged interval
  int geometry_only = 0;    // flagged intervals with no order inside
  int workorder_only = 0;   // orders with no flagged interval around them

  std::string to_text() const;
};

ConsistencyReport report(const Dataset& dataset,
                         const std::vector<WorkOrder>& work_orders = {});

}  // namespace trackdeg
