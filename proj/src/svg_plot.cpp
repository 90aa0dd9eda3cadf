#include "seisfrag/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "seisfrag/common.hpp"

namespace seisfrag::plot {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct Scale {
  double lo = 0, hi = 1, px_lo = 0, px_hi = 1;
  bool log = false;

  double tr(double v) const { return log ? std::log10(v) : v; }
  double operator()(double v) const {
    const double a = tr(lo), b = tr(hi);
    return px_lo + (tr(v) - a) / (b - a) * (px_hi - px_lo);
  }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); e += 1.0) {
        const double v = std::pow(10.0, e);
        if (v >= lo * 0.999 && v <= hi * 1.001) t.push_back(v);
      }
      if (t.size() < 2) t = {lo, hi};
      return t;
    }
    for (int k = 0; k <= 5; ++k) t.push_back(lo + (hi - lo) * k / 5.0);
    return t;
  }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

Scale make_scale(std::vector<double> vals, bool log, double px_lo, double px_hi) {
  Scale s;
  s.log = log;
  s.px_lo = px_lo;
  s.px_hi = px_hi;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : vals)
    if (usable(v, log)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = log ? 0.1 : 0.0, hi = 1.0;
  if (hi <= lo) {
    hi = log ? lo * 10.0 : lo + 1.0;
    if (!log) lo -= 1.0;
  }
  if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  s.lo = lo;
  s.hi = hi;
  return s;
}

void frame(std::ostream& out, const Axes& axes, const Scale& sx, const Scale& sy, bool x_ticks) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(axes.title) << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : sy.ticks())
    out << "<line x1=\"" << x0 - 4 << "\" x2=\"" << x0 << "\" y1=\"" << sy(t) << "\" y2=\"" << sy(t)
        << "\" stroke=\"black\"/><text x=\"" << x0 - 6 << "\" y=\"" << sy(t) + 4
        << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  if (x_ticks)
    for (double t : sx.ticks())
      out << "<line x1=\"" << sx(t) << "\" x2=\"" << sx(t) << "\" y1=\"" << y0 << "\" y2=\"" << y0 + 4
          << "\" stroke=\"black\"/><text x=\"" << sx(t) << "\" y=\"" << y0 + 18
          << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << escape(axes.xlabel) << "</text>\n"
      << "<text transform=\"translate(18," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(axes.ylabel) << "</text>\n";
}

void legend(std::ostream& out, const std::vector<std::string>& names) {
  const double x = kWidth - kRight + 12;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 14 + 18 * static_cast<double>(i);
    out << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"10\" fill=\""
        << kColors[i % 7] << "\"/><text x=\"" << x + 18 << "\" y=\"" << y << "\">" << escape(names[i])
        << "</text>\n";
  }
}

std::ofstream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const Axes& axes,
                     const std::vector<Series>& series) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DomainError("write_line_plot: x and y lengths differ");
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const Scale sx = make_scale(xs, axes.log_x, kLeft, kWidth - kRight);
  const Scale sy = make_scale(ys, axes.log_y, kHeight - kBottom, kTop);
  auto out = open(path);
  frame(out, axes, sx, sy, true);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    names.push_back(series[i].label);
    out << "<polyline fill=\"none\" stroke-width=\"1.6\" stroke=\"" << kColors[i % 7] << "\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      const double x = series[i].x[k], y = series[i].y[k];
      if (usable(x, axes.log_x) && usable(y, axes.log_y)) out << sx(x) << ',' << sy(y) << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, names);
  out << "</svg>\n";
}

void write_box_plot(const std::filesystem::path& path, const Axes& axes,
                    const std::vector<BoxGroup>& groups) {
  std::vector<double> ys;
  std::vector<std::string> names;
  std::map<std::string, std::size_t> color;
  for (const auto& g : groups) {
    ys.insert(ys.end(), g.values.begin(), g.values.end());
    if (color.emplace(g.series, names.size()).second) names.push_back(g.series);
  }
  Scale sx;
  sx.lo = 0;
  sx.hi = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  sx.px_lo = kLeft;
  sx.px_hi = kWidth - kRight;
  const Scale sy = make_scale(ys, axes.log_y, kHeight - kBottom, kTop);
  auto out = open(path);
  frame(out, axes, sx, sy, false);
  const double slot = (sx.px_hi - sx.px_lo) / sx.hi;
  std::string last_label;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::vector<double> v;
    for (double y : groups[i].values)
      if (usable(y, axes.log_y)) v.push_back(y);
    const double cx = sx(static_cast<double>(i) + 0.5);
    if (groups[i].label != last_label) {
      out << "<text x=\"" << cx << "\" y=\"" << kHeight - kBottom + 18 << "\" text-anchor=\"middle\">"
          << escape(groups[i].label) << "</text>\n";
      last_label = groups[i].label;
    }
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
      const double pos = p * static_cast<double>(v.size() - 1);
      const auto k = static_cast<std::size_t>(pos);
      const double f = pos - static_cast<double>(k);
      return k + 1 < v.size() ? v[k] * (1 - f) + v[k + 1] * f : v[k];
    };
    const char* c = kColors[color[groups[i].series] % 7];
    const double w = 0.35 * slot;
    out << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << sy(v.front()) << "\" y2=\""
        << sy(v.back()) << "\" stroke=\"" << c << "\"/>\n"
        << "<rect x=\"" << cx - w << "\" y=\"" << sy(q(0.75)) << "\" width=\"" << 2 * w
        << "\" height=\"" << std::max(sy(q(0.25)) - sy(q(0.75)), 0.5) << "\" fill=\"white\" stroke=\""
        << c << "\"/>\n"
        << "<line x1=\"" << cx - w << "\" x2=\"" << cx + w << "\" y1=\"" << sy(q(0.5)) << "\" y2=\""
        << sy(q(0.5)) << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
  }
  legend(out, names);
  out << "</svg>\n";
}

}  // namespace seisfrag::plot
