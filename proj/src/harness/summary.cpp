#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mdesign/error.hpp"
#include "mdesign/harness.hpp"

namespace mdesign::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::ifstream open_csv(const fs::path& path, const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != expected_header) {
    throw InvalidArgument("'" + path.string() + "' has header '" + header + "', expected '" +
                          expected_header + "'");
  }
  return in;
}

constexpr const char* kSummaryHeader = "variant,episode,q10,median,q90";

}  // namespace

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<RawRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.variant)) order.push_back(r.variant);
    groups[r.variant][r.episode].push_back(r.suboptimality);
  }
  std::vector<SummaryRow> out;
  for (const auto& v : order) {
    for (auto& [episode, values] : groups[v]) {
      std::sort(values.begin(), values.end());
      out.push_back({v, episode, quantile(values, 0.1), quantile(values, 0.5),
                     quantile(values, 0.9)});
    }
  }
  return out;
}

double tail_slope(const std::vector<double>& series, double floor) {
  const std::size_t T = series.size();
  if (T < 2) throw InvalidArgument("tail_slope needs at least two episodes");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t t = T / 2 + 1; t <= T; ++t) {
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(std::max(series[t - 1], floor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (n < 2 || denom <= 0.0) throw InvalidArgument("tail_slope: fewer than two tail points");
  return (nn * sxy - sx * sy) / denom;
}

std::map<std::string, double> summary_slopes(const std::vector<SummaryRow>& summary,
                                             double floor) {
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> series;
  for (const auto& r : summary) series[r.variant].emplace_back(r.episode, r.median);
  std::map<std::string, double> out;
  for (auto& [v, points] : series) {
    std::sort(points.begin(), points.end());
    std::vector<double> y(points.back().first, floor);
    for (const auto& [episode, value] : points) y[episode - 1] = value;
    out[v] = tail_slope(y, floor);
  }
  return out;
}

void write_summary_csv(const fs::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.variant << ',' << r.episode << ',' << fmt(r.q10) << ',' << fmt(r.median) << ','
        << fmt(r.q90) << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(const fs::path& path) {
  auto in = open_csv(path, kSummaryHeader);
  std::vector<SummaryRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 5) throw InvalidArgument("malformed summary row: " + line);
    try {
      rows.push_back({cells[0], std::stoul(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
                      std::stod(cells[4])});
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed summary row: " + line);
    }
  }
  return rows;
}

void write_slopes_csv(const fs::path& path, const std::map<std::string, double>& slopes,
                      const std::vector<SummaryRow>& summary) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << "variant,tail_slope,final_median\n";
  std::vector<std::string> order;
  std::map<std::string, double> last;
  for (const auto& r : summary) {
    if (!last.count(r.variant)) order.push_back(r.variant);
    last[r.variant] = r.median;
  }
  for (const auto& v : order) {
    const auto it = slopes.find(v);
    out << v << ',' << (it == slopes.end() ? std::string("nan") : fmt(it->second)) << ','
        << fmt(last[v]) << '\n';
  }
}

// ---------------------------------------------------------------------------

void write_raw_csv(const fs::path& path, const std::vector<RawRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << "variant,rerun,episode,objective_value,suboptimality,fw_iters,wall_ms\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << r.rerun << ',' << r.episode << ',' << fmt(r.objective_value)
        << ',' << fmt(r.suboptimality) << ',' << r.fw_iters << ',' << fmt(r.wall_ms) << '\n';
  }
}

std::vector<RawRow> read_raw_csv(const fs::path& path) {
  auto in = open_csv(path, "variant,rerun,episode,objective_value,suboptimality,fw_iters,wall_ms");
  std::vector<RawRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 7) throw InvalidArgument("malformed raw row: " + line);
    try {
      rows.push_back({c[0], std::stoul(c[1]), std::stoul(c[2]), std::stod(c[3]), std::stod(c[4]),
                      std::stoul(c[5]), std::stod(c[6])});
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed raw row: " + line);
    }
  }
  return rows;
}

}  // namespace mdesign::harness
