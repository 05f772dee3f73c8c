#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "temper/csv.hpp"
#include "temper/errors.hpp"

namespace temper {

/// Which columns to draw.  With `group` set, rows are split into one series
/// per distinct group value and `y` must name a single column.
struct PlotSpec {
  std::string x;
  std::vector<std::string> y;
  std::string group;
  bool log_x = false;
  bool log_y = false;
  std::string title;
};

namespace detail {

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}
inline std::string tick(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}
inline std::string escape_xml(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '"') o += "&quot;";
    else o.push_back(c);
  }
  return o;
}

}  // namespace detail

/// Fixed-canvas line plot; identical input gives identical bytes.
inline std::string svg_lineplot(const CsvTable& t, const PlotSpec& spec) {
  if (spec.y.empty()) throw DomainError("svg: no y columns");
  if (!spec.group.empty() && spec.y.size() != 1) throw DomainError("svg: grouped plots take one y column");
  if (t.rows.empty()) throw DomainError("svg: no data rows");
  const auto xs = t.numeric(spec.x);
  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  if (spec.group.empty()) {
    for (const auto& col : spec.y) {
      const auto ys = t.numeric(col);
      Series s{col, {}};
      for (std::size_t i = 0; i < xs.size(); ++i)
        if (usable(xs[i], ys[i])) s.pts.emplace_back(xs[i], ys[i]);
      series.push_back(std::move(s));
    }
  } else {
    const auto ys = t.numeric(spec.y[0]);
    const std::size_t g = t.column(spec.group);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto& key = t.rows[i][g];
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, series.size()).first;
        series.push_back({key, {}});
      }
      if (usable(xs[i], ys[i])) series[it->second].pts.emplace_back(xs[i], ys[i]);
    }
  }
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  std::size_t npts = 0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.pts) {
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
      ++npts;
    }
  if (npts == 0) throw DomainError("svg: no plottable points");
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;

  const double W = 720, H = 440, L = 80, R = 170, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return T + ph - (ty(v) - y0) / (y1 - y0) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  using detail::num;
  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    o += "<text x=\"" + num(L + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + detail::escape_xml(spec.title) + "</text>\n";
  o += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    const double gx = L + pw * i / 4, gy = T + ph - ph * i / 4;
    const double lx = spec.log_x ? std::pow(10.0, fx) : fx, ly = spec.log_y ? std::pow(10.0, fy) : fy;
    o += "<line x1=\"" + num(gx) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(gx) + "\" y2=\"" + num(T + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(gx) + "\" y=\"" + num(T + ph + 18) + "\" text-anchor=\"middle\">" + detail::tick(lx) + "</text>\n";
    o += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(gy) + "\" x2=\"" + num(L) + "\" y2=\"" + num(gy) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(L - 8) + "\" y=\"" + num(gy + 4) + "\" text-anchor=\"end\">" + detail::tick(ly) + "</text>\n";
  }
  o += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 18) + "\" text-anchor=\"middle\">" +
       detail::escape_xml(spec.x) + (spec.log_x ? " (log)" : "") + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % 8];
    if (!series[k].pts.empty()) {
      o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series[k].pts.size(); ++i) {
        if (i) o += ' ';
        o += num(px(series[k].pts[i].first)) + "," + num(py(series[k].pts[i].second));
      }
      o += "\"/>\n";
    }
    const double ly = T + 12 + 18.0 * static_cast<double>(k);
    o += "<line x1=\"" + num(L + pw + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(L + pw + 36) + "\" y2=\"" + num(ly) +
         "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + num(L + pw + 42) + "\" y=\"" + num(ly + 4) + "\">" + detail::escape_xml(series[k].name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace temper
