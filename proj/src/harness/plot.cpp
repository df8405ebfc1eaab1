#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mdesign/error.hpp"
#include "mdesign/harness.hpp"

namespace mdesign::harness {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.0e", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<SummaryRow>& summary, double floor,
                       const PlotFrame& frame) {
  if (summary.empty()) throw InvalidArgument("render_svg: empty summary");
  if (!(floor > 0.0)) throw InvalidArgument("render_svg: floor must be positive");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const SummaryRow*>> series;
  double xmax = 1.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& r : summary) {
    if (!series.count(r.variant)) order.push_back(r.variant);
    series[r.variant].push_back(&r);
    xmax = std::max(xmax, static_cast<double>(r.episode));
    for (double v : {r.q10, r.median, r.q90}) {
      const double y = std::log10(std::max(v, floor));
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  const double lx0 = 0.0;
  double lx1 = std::log10(xmax);
  if (lx1 <= lx0) lx1 = 1.0;
  double ly0 = std::floor(ymin);
  double ly1 = std::ceil(ymax);
  if (ly1 <= ly0) ly1 = ly0 + 1.0;

  const double px0 = frame.left;
  const double px1 = frame.width - frame.right;
  const double py0 = frame.top;
  const double py1 = frame.height - frame.bottom;
  auto X = [&](double episode) {
    return px0 + (std::log10(episode) - lx0) / (lx1 - lx0) * (px1 - px0);
  };
  auto Y = [&](double value) {
    const double y = std::log10(std::max(value, floor));
    return py1 - (y - ly0) / (ly1 - ly0) * (py1 - py0);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(frame.width)
    << "\" height=\"" << num(frame.height) << "\" viewBox=\"0 0 " << num(frame.width) << ' '
    << num(frame.height) << "\" data-log-x=\"" << num(lx0) << ' ' << num(lx1)
    << "\" data-log-y=\"" << num(ly0) << ' ' << num(ly1) << "\" data-box=\"" << num(px0) << ' '
    << num(py0) << ' ' << num(px1) << ' ' << num(py1) << "\" data-floor=\"" << floor << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << num(frame.width) << "\" height=\""
    << num(frame.height) << "\" fill=\"white\"/>\n";
  s << "<rect x=\"" << num(px0) << "\" y=\"" << num(py0) << "\" width=\"" << num(px1 - px0)
    << "\" height=\"" << num(py1 - py0) << "\" fill=\"none\" stroke=\"black\"/>\n";

  // decade ticks
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= static_cast<int>(std::floor(lx1)); ++k) {
    const double x = X(std::pow(10.0, k));
    s << "<line x1=\"" << num(x) << "\" y1=\"" << num(py1) << "\" x2=\"" << num(x) << "\" y2=\""
      << num(py1 + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << num(x) << "\" y=\"" << num(py1 + 18) << "\" text-anchor=\"middle\">"
      << sci(std::pow(10.0, k)) << "</text>\n";
  }
  const int ystep = std::max(1, static_cast<int>(std::ceil((ly1 - ly0) / 8.0)));
  for (int k = static_cast<int>(ly0); k <= static_cast<int>(ly1); k += ystep) {
    const double y = py1 - (k - ly0) / (ly1 - ly0) * (py1 - py0);
    s << "<line x1=\"" << num(px0 - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(px0)
      << "\" y2=\"" << num(y) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << num(px0 - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
      << sci(std::pow(10.0, k)) << "</text>\n";
  }
  s << "<text x=\"" << num((px0 + px1) / 2) << "\" y=\"" << num(frame.height - 15)
    << "\" text-anchor=\"middle\">episode</text>\n";
  s << "<text x=\"15\" y=\"" << num((py0 + py1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
    << num((py0 + py1) / 2) << ")\">suboptimality</text>\n";
  s << "</g>\n";

  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = order[i];
    auto pts = series[v];
    std::sort(pts.begin(), pts.end(),
              [](const SummaryRow* a, const SummaryRow* b) { return a->episode < b->episode; });
    const char* color = kPalette[i % std::size(kPalette)];

    s << "<polygon data-variant=\"" << v << "\" data-role=\"band\" fill=\"" << color
      << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto* p : pts) s << num(X(p->episode)) << ',' << num(Y(p->q90)) << ' ';
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      s << num(X((*it)->episode)) << ',' << num(Y((*it)->q10)) << ' ';
    }
    s << "\"/>\n";

    s << "<polyline data-variant=\"" << v << "\" data-role=\"median\" fill=\"none\" stroke=\""
      << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto* p : pts) s << num(X(p->episode)) << ',' << num(Y(p->median)) << ' ';
    s << "\"/>\n";

    const double ly = py0 + 16.0 + 18.0 * static_cast<double>(i);
    s << "<line x1=\"" << num(px1 + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(px1 + 36)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(px1 + 42) << "\" y=\"" << num(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << v << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << svg;
}

}  // namespace mdesign::harness
