// File formats: segment-series CSV, work-order lists, posterior sample
// tables, synthetic-truth tables, and plot-ready output tables.
//
// All numeric values are written with 17 significant digits so files
// round-trip exactly. Times are stored as fractional days; ISO dates
// (YYYY-MM-DD) are accepted anywhere a day number is expected and converted
// to days since 1970-01-01.
#pragma once

#include "trackdeg/maintenance.hpp"
#include "trackdeg/types.hpp"

#include <string>
#include <vector>

namespace trackdeg {

// Shortest-round-trip-style formatting (17 significant digits).
std::string format_double(double value);

// Days since 1970-01-01 for an ISO calendar date.
double day_from_civil(int year, int month, int day);

// Parses either an ISO date or a plain number of days.
double parse_day(const std::string& token);

// Splits one CSV record; no quoting, fields must not contain the delimiter.
std::vector<std::string> split_csv(const std::string& line, char delim = ',');

// Errors raised by malformed input files; message includes the line number.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Segment-series file: header `segment_id,date,<labels...>,maint_flag`,
// one row per (segment, inspection). An empty maint_flag column marks a
// series whose maintenance intervals have not been identified yet.
void write_series_file(const std::string& path, const Dataset& dataset,
                       bool with_flags = true);
Dataset read_series_file(const std::string& path);

// Work-order file: header `segment_id,date`, one record per line.
std::vector<WorkOrder> read_workorder_file(const std::string& path);
void write_workorder_file(const std::string& path, const std::vector<WorkOrder>& orders);

// Truth table: header `parameter,segment,value` with posterior-style
// parameter names (mu[i][q], sigma[i][q], R[i][q1][q2], zplus[i][k][q],
// hyper.s_mu[q], ...). Hyperparameters use segment -1.
struct TruthEntry {
  std::string parameter;
  int segment_id = -1;
  double value = 0.0;
};
void write_truth_file(const std::string& path, const std::vector<TruthEntry>& entries);
std::vector<TruthEntry> read_truth_file(const std::string& path);

// Generic delimiter-separated table with a header row.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  void add_row(std::vector<std::string> row);
};
void write_table(const std::string& path, const Table& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace trackdeg
