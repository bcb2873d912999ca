#include "trackdeg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace trackdeg {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double day_from_civil(int year, int month, int day) {
  // days_from_civil, proleptic Gregorian calendar
  year -= month <= 2;
  const int era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<double>(era * 146097LL + static_cast<long long>(doe) - 719468LL);
}

double parse_day(const std::string& token) {
  if (token.size() == 10 && token[4] == '-' && token[7] == '-') {
    const int y = std::stoi(token.substr(0, 4));
    const int m = std::stoi(token.substr(5, 2));
    const int d = std::stoi(token.substr(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > 31)
      throw DataError("bad date '" + token + "'");
    return day_from_civil(y, m, d);
  }
  std::size_t used = 0;
  const double v = std::stod(token, &used);
  if (used != token.size()) throw DataError("bad day value '" + token + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return f;
}

double parse_num(const std::string& token, const std::string& path, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" + token + "'");
  }
}

}  // namespace

void write_series_file(const std::string& path, const Dataset& dataset, bool with_flags) {
  auto f = open_out(path);
  f << "segment_id,date";
  for (const auto& label : dataset.labels) f << "," << label;
  f << ",maint_flag\n";
  for (const auto& s : dataset.segments) {
    for (int k = 0; k < s.n_obs(); ++k) {
      f << s.segment_id << "," << format_double(s.times[k]);
      for (int q = 0; q < s.n_indicators(); ++q)
        f << "," << format_double(s.observations(k, q));
      f << ",";
      if (with_flags) f << (s.maint_flags[k] ? 1 : 0);
      f << "\n";
    }
  }
}

Dataset read_series_file(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line) || line.empty())
    throw DataError(path + ":1: missing header");
  auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "segment_id" || header[1] != "date" ||
      header.back() != "maint_flag")
    throw DataError(path + ":1: missing header (expected segment_id,date,...,maint_flag)");

  Dataset out;
  out.labels.assign(header.begin() + 2, header.end() - 1);
  const int d = out.n_indicators();

  std::map<int, SegmentSeries> by_id;
  std::map<int, std::vector<std::tuple<double, Eigen::VectorXd, std::uint8_t>>> rows;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != d + 3)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(d + 3) + " fields, got " + std::to_string(fields.size()));
    const int id = static_cast<int>(parse_num(fields[0], path, line_no));
    const double day = [&] {
      try {
        return parse_day(fields[1]);
      } catch (const DataError& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }();
    Eigen::VectorXd obs(d);
    for (int q = 0; q < d; ++q) obs[q] = parse_num(fields[2 + q], path, line_no);
    std::uint8_t flag = 0;
    if (!fields.back().empty())
      flag = parse_num(fields.back(), path, line_no) != 0.0 ? 1 : 0;
    rows[id].emplace_back(day, std::move(obs), flag);
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  for (auto& [id, recs] : rows) {
    std::sort(recs.begin(), recs.end(),
              [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    SegmentSeries s;
    s.segment_id = id;
    const int k = static_cast<int>(recs.size());
    s.times.resize(k);
    s.observations.resize(k, d);
    s.maint_flags.resize(k);
    for (int i = 0; i < k; ++i) {
      s.times[i] = std::get<0>(recs[i]);
      s.observations.row(i) = std::get<1>(recs[i]).transpose();
      s.maint_flags[i] = std::get<2>(recs[i]);
    }
    if (!s.maint_flags.empty()) s.maint_flags[0] = 0;
    for (int i = 1; i < k; ++i)
      if (!(s.times[i] > s.times[i - 1]))
        throw DataError(path + ": segment " + std::to_string(id) +
                        " has duplicate inspection dates");
    out.segments.push_back(std::move(s));
  }
  return out;
}

std::vector<WorkOrder> read_workorder_file(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ":1: missing header");
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "segment_id" || header[1] != "date")
    throw DataError(path + ":1: missing header (expected segment_id,date)");
  std::vector<WorkOrder> out;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() < 2)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected segment_id,date");
    WorkOrder w;
    w.segment_id = static_cast<int>(parse_num(fields[0], path, line_no));
    w.day = parse_day(fields[1]);
    out.push_back(w);
  }
  return out;
}

void write_workorder_file(const std::string& path, const std::vector<WorkOrder>& orders) {
  auto f = open_out(path);
  f << "segment_id,date\n";
  for (const auto& w : orders) f << w.segment_id << "," << format_double(w.day) << "\n";
}

void write_truth_file(const std::string& path, const std::vector<TruthEntry>& entries) {
  auto f = open_out(path);
  f << "parameter,segment,value\n";
  for (const auto& e : entries)
    f << e.parameter << "," << e.segment_id << "," << format_double(e.value) << "\n";
}

std::vector<TruthEntry> read_truth_file(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ":1: missing header");
  std::vector<TruthEntry> out;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 3)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
    TruthEntry e;
    e.parameter = fields[0];
    e.segment_id = static_cast<int>(parse_num(fields[1], path, line_no));
    e.value = parse_num(fields[2], path, line_no);
    out.push_back(std::move(e));
  }
  return out;
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("Table: row width does not match header");
  rows.push_back(std::move(row));
}

void write_table(const std::string& path, const Table& table) {
  auto f = open_out(path);
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    f << (i ? "," : "") << table.columns[i];
  f << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << "\n";
  }
}

std::string read_text_file(const std::string& path) {
  auto f = open_in(path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  auto f = open_out(path);
  f << content;
}

}  // namespace trackdeg
