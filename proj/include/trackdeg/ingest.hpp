// Loading of raw distance-sampled TRV channels, track segmentation, and
// reduction of each segment-inspection to one scalar per indicator.
#pragma once

#include "trackdeg/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace trackdeg {

// One indicator channel of one inspection run: deviations sampled along the
// track at a nominal 0.25 m spacing.
struct ChannelSamples {
  std::vector<double> position;   // meters, nondecreasing
  std::vector<double> deviation;  // mm
};

struct RawInspection {
  double day = 0.0;
  std::map<std::string, ChannelSamples> channels;
};

enum class SummaryStatistic { max_abs, mean_abs, std_abs, p95_abs };

SummaryStatistic parse_statistic(const std::string& name);
std::string statistic_name(SummaryStatistic s);

struct SegmentationConfig {
  double segment_length = 100.0;  // meters
  SummaryStatistic statistic = SummaryStatistic::max_abs;
  double track_start = 0.0;
  double track_end = 0.0;
  std::vector<std::string> indicators;  // channel names, model order
  double nominal_spacing = 0.25;        // meters
  double spacing_tolerance = 0.15;      // meters

  int n_segments() const;
  double segment_length_of(int segment) const;  // trailing segment may be short
  void validate() const;
};

// Applies the configured reducer to the absolute deviations of a sample set.
double reduce_samples(const std::vector<double>& deviations, SummaryStatistic statistic);

// Segment summaries of one inspection. values(i, q) is NaN when segment i had
// no samples for indicator q.
struct SegmentedInspection {
  double day = 0.0;
  Eigen::MatrixXd values;   // n_segments x n_indicators
  Eigen::MatrixXi counts;   // samples reduced per (segment, indicator)
  int out_of_bounds = 0;    // samples outside [track_start, track_end)
  int dropped_nan = 0;      // non-finite raw samples dropped before reduction
  int spacing_violations = 0;
};

// Assigns samples to half-open segments [start, start + L) by position and
// reduces |deviation| within each segment. Throws on empty channels or
// decreasing positions; out-of-bounds samples are counted, not fatal.
SegmentedInspection segmentize(const RawInspection& raw, const SegmentationConfig& config);

struct LoadReport {
  int n_inspections = 0;
  int n_segments = 0;
  int out_of_bounds = 0;
  int dropped_nan = 0;
  int spacing_violations = 0;
  int incomplete_rows = 0;  // (segment, inspection) pairs missing an indicator
  std::vector<double> segment_lengths;
  std::string to_text() const;
};

// Joins segmented inspections into per-segment series ordered by date.
// Segments missing an inspection simply skip it (larger dt). Duplicate
// inspection dates are an error.
Dataset assemble(const std::vector<SegmentedInspection>& inspections,
                 const SegmentationConfig& config, LoadReport* report = nullptr);

// Raw sample file: header `date,channel,position_m,deviation_mm`.
std::vector<RawInspection> read_raw_file(const std::string& path);

// Full pipeline: raw file -> segment series dataset.
Dataset ingest_file(const std::string& path, const SegmentationConfig& config,
                    LoadReport* report = nullptr);

}  // namespace trackdeg
