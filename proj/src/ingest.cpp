#include "trackdeg/ingest.hpp"

#include "trackdeg/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace trackdeg {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

SummaryStatistic parse_statistic(const std::string& name) {
  if (name == "max_abs") return SummaryStatistic::max_abs;
  if (name == "mean_abs") return SummaryStatistic::mean_abs;
  if (name == "std_abs") return SummaryStatistic::std_abs;
  if (name == "p95_abs") return SummaryStatistic::p95_abs;
  throw std::invalid_argument("unknown summary statistic '" + name + "'");
}

std::string statistic_name(SummaryStatistic s) {
  switch (s) {
    case SummaryStatistic::max_abs: return "max_abs";
    case SummaryStatistic::mean_abs: return "mean_abs";
    case SummaryStatistic::std_abs: return "std_abs";
    case SummaryStatistic::p95_abs: return "p95_abs";
  }
  return "?";
}

int SegmentationConfig::n_segments() const {
  return static_cast<int>(std::ceil((track_end - track_start) / segment_length - 1e-12));
}

double SegmentationConfig::segment_length_of(int segment) const {
  const double start = track_start + segment * segment_length;
  return std::min(segment_length, track_end - start);
}

void SegmentationConfig::validate() const {
  if (segment_length <= 0.0)
    throw std::invalid_argument("SegmentationConfig: segment_length must be positive");
  if (!(track_end > track_start))
    throw std::invalid_argument("SegmentationConfig: track_end must exceed track_start");
  if (indicators.empty())
    throw std::invalid_argument("SegmentationConfig: no indicator channels configured");
}

double reduce_samples(const std::vector<double>& deviations, SummaryStatistic statistic) {
  if (deviations.empty())
    throw std::invalid_argument("reduce_samples: empty sample set");
  std::vector<double> abs_dev(deviations.size());
  for (std::size_t i = 0; i < deviations.size(); ++i) abs_dev[i] = std::abs(deviations[i]);
  switch (statistic) {
    case SummaryStatistic::max_abs:
      return *std::max_element(abs_dev.begin(), abs_dev.end());
    case SummaryStatistic::mean_abs: {
      double s = 0.0;
      for (double x : abs_dev) s += x;
      return s / static_cast<double>(abs_dev.size());
    }
    case SummaryStatistic::std_abs: {
      double s = 0.0;
      for (double x : abs_dev) s += x;
      const double m = s / static_cast<double>(abs_dev.size());
      double ss = 0.0;
      for (double x : abs_dev) ss += (x - m) * (x - m);
      return abs_dev.size() > 1 ? std::sqrt(ss / static_cast<double>(abs_dev.size() - 1)) : 0.0;
    }
    case SummaryStatistic::p95_abs: {
      std::sort(abs_dev.begin(), abs_dev.end());
      const double h = 0.95 * (static_cast<double>(abs_dev.size()) - 1.0);
      const std::size_t lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, abs_dev.size() - 1);
      return abs_dev[lo] + (h - lo) * (abs_dev[hi] - abs_dev[lo]);
    }
  }
  throw std::logic_error("reduce_samples: unhandled statistic");
}

SegmentedInspection segmentize(const RawInspection& raw, const SegmentationConfig& config) {
  config.validate();
  const int n_seg = config.n_segments();
  const int d = static_cast<int>(config.indicators.size());

  SegmentedInspection out;
  out.day = raw.day;
  out.values = Eigen::MatrixXd::Constant(n_seg, d, kNan);
  out.counts = Eigen::MatrixXi::Zero(n_seg, d);

  for (int q = 0; q < d; ++q) {
    auto it = raw.channels.find(config.indicators[q]);
    if (it == raw.channels.end() || it->second.position.empty())
      throw std::invalid_argument("segmentize: channel '" + config.indicators[q] +
                                  "' is empty or missing");
    const auto& ch = it->second;
    std::vector<std::vector<double>> buckets(n_seg);
    double prev_pos = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ch.position.size(); ++i) {
      const double pos = ch.position[i];
      if (pos < prev_pos)
        throw std::invalid_argument("segmentize: positions of channel '" +
                                    config.indicators[q] + "' decrease");
      if (i > 0) {
        const double gap = pos - prev_pos;
        if (std::abs(gap - config.nominal_spacing) > config.spacing_tolerance)
          ++out.spacing_violations;
      }
      prev_pos = pos;
      if (!std::isfinite(ch.deviation[i])) {
        ++out.dropped_nan;
        continue;
      }
      if (pos < config.track_start || pos >= config.track_end) {
        ++out.out_of_bounds;
        continue;
      }
      const int seg = static_cast<int>((pos - config.track_start) / config.segment_length);
      buckets[std::min(seg, n_seg - 1)].push_back(ch.deviation[i]);
    }
    for (int s = 0; s < n_seg; ++s) {
      out.counts(s, q) = static_cast<int>(buckets[s].size());
      if (!buckets[s].empty()) out.values(s, q) = reduce_samples(buckets[s], config.statistic);
    }
  }
  return out;
}

Dataset assemble(const std::vector<SegmentedInspection>& inspections,
                 const SegmentationConfig& config, LoadReport* report) {
  const int n_seg = config.n_segments();
  const int d = static_cast<int>(config.indicators.size());

  std::vector<SegmentedInspection> sorted = inspections;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.day < b.day; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].day == sorted[i - 1].day)
      throw std::invalid_argument("assemble: duplicate inspection date " +
                                  format_double(sorted[i].day));

  LoadReport rep;
  rep.n_inspections = static_cast<int>(sorted.size());
  rep.n_segments = n_seg;
  for (int s = 0; s < n_seg; ++s) rep.segment_lengths.push_back(config.segment_length_of(s));

  Dataset out;
  out.labels = config.indicators;
  for (int s = 0; s < n_seg; ++s) {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> rows;
    for (const auto& insp : sorted) {
      bool complete = true;
      for (int q = 0; q < d; ++q)
        if (!std::isfinite(insp.values(s, q))) complete = false;
      if (!complete) {
        ++rep.incomplete_rows;
        continue;  // gap: the next interval simply spans a larger dt
      }
      times.push_back(insp.day);
      rows.push_back(insp.values.row(s).transpose());
    }
    SegmentSeries series;
    series.segment_id = s;
    series.times.resize(static_cast<int>(times.size()));
    series.observations.resize(static_cast<int>(times.size()), d);
    series.maint_flags.assign(times.size(), 0);
    for (std::size_t k = 0; k < times.size(); ++k) {
      series.times[static_cast<int>(k)] = times[k];
      series.observations.row(static_cast<int>(k)) = rows[k].transpose();
    }
    out.segments.push_back(std::move(series));
  }
  for (const auto& insp : sorted) {
    rep.out_of_bounds += insp.out_of_bounds;
    rep.dropped_nan += insp.dropped_nan;
    rep.spacing_violations += insp.spacing_violations;
  }
  if (report) *report = rep;
  return out;
}

std::vector<RawInspection> read_raw_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line.empty())
    throw DataError(path + ":1: missing header");
  auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "date" || header[1] != "channel" ||
      header[2] != "position_m" || header[3] != "deviation_mm")
    throw DataError(path + ":1: missing header (expected date,channel,position_m,deviation_mm)");

  std::map<double, RawInspection> by_day;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() < 4)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields");
    double day = 0.0, pos = 0.0, dev = 0.0;
    try {
      day = parse_day(fields[0]);
      pos = std::stod(fields[2]);
      dev = fields[3] == "nan" ? kNan : std::stod(fields[3]);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad value (" + e.what() + ")");
    }
    auto& insp = by_day[day];
    insp.day = day;
    auto& ch = insp.channels[fields[1]];
    ch.position.push_back(pos);
    ch.deviation.push_back(dev);
  }
  if (by_day.empty()) throw DataError(path + ": no data rows");
  std::vector<RawInspection> out;
  for (auto& [day, insp] : by_day) out.push_back(std::move(insp));
  return out;
}

Dataset ingest_file(const std::string& path, const SegmentationConfig& config,
                    LoadReport* report) {
  const auto raw = read_raw_file(path);
  std::vector<SegmentedInspection> segmented;
  segmented.reserve(raw.size());
  for (const auto& r : raw) segmented.push_back(segmentize(r, config));
  return assemble(segmented, config, report);
}

std::string LoadReport::to_text() const {
  std::ostringstream os;
  os << "inspections: " << n_inspections << "\n";
  os << "segments: " << n_segments << "\n";
  os << "out_of_bounds_samples: " << out_of_bounds << "\n";
  os << "dropped_nan_samples: " << dropped_nan << "\n";
  os << "spacing_violations: " << spacing_violations << "\n";
  os << "incomplete_segment_inspections: " << incomplete_rows << "\n";
  if (!segment_lengths.empty() && segment_lengths.back() < segment_lengths.front())
    os << "short_trailing_segment_m: " << format_double(segment_lengths.back()) << "\n";
  return os.str();
}

}  // namespace trackdeg
