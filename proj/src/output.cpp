#include "fvdp/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fvdp/errors.hpp"

namespace fvdp::out {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorKind::precondition, "cannot write " + path.string());
}

namespace {

constexpr double kW = 720, kH = 540;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;

std::string f3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string r;
  for (char c : s) {
    if (c == '<') r += "&lt;";
    else if (c == '>') r += "&gt;";
    else if (c == '&') r += "&amp;";
    else r += c;
  }
  return r;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

void SvgPlot::set_bounds(double xmin, double xmax, double ymin, double ymax) {
  fixed_ = true;
  xmin_ = xmin;
  xmax_ = xmax;
  ymin_ = ymin;
  ymax_ = ymax;
}

void SvgPlot::polyline(const std::vector<Point>& pts, const std::string& color, double width) {
  items_.push_back({0, pts, color, width, {}});
}

void SvgPlot::markers(const std::vector<Point>& pts, const std::string& color, double radius) {
  items_.push_back({1, pts, color, radius, {}});
}

void SvgPlot::rect(double x0, double y0, double x1, double y1, const std::string& fill) {
  items_.push_back({2, {{x0, y0}, {x1, y1}}, fill, 0.0, {}});
}

void SvgPlot::text(double x, double y, const std::string& s) { items_.push_back({3, {{x, y}}, "#000", 0.0, s}); }

void SvgPlot::legend(const std::string& color, const std::string& s) { legend_.emplace_back(color, s); }

std::string SvgPlot::str() const {
  double x0 = xmin_, x1 = xmax_, y0 = ymin_, y1 = ymax_;
  if (!fixed_) {
    x0 = y0 = std::numeric_limits<double>::infinity();
    x1 = y1 = -x0;
    for (const auto& it : items_)
      for (const auto& p : it.pts) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    const double px = 0.05 * std::max(x1 - x0, 1e-12), py = 0.05 * std::max(y1 - y0, 1e-12);
    x0 -= px, x1 += px, y0 -= py, y1 += py;
  }
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"540\" viewBox=\"0 0 720 540\">\n";
  s += "<rect width=\"720\" height=\"540\" fill=\"#fff\"/>\n";
  s += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" + esc(title_) +
       "</text>\n";
  s += "<rect x=\"" + f3(kLeft) + "\" y=\"" + f3(kTop) + "\" width=\"" + f3(pw) + "\" height=\"" + f3(ph) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", xv);
    s += "<text x=\"" + f3(sx(xv)) + "\" y=\"" + f3(kH - kBottom + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + buf + "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", yv);
    s += "<text x=\"" + f3(kLeft - 6) + "\" y=\"" + f3(sy(yv) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + buf + "</text>\n";
  }
  s += "<text x=\"" + f3(kLeft + pw / 2) + "\" y=\"" + f3(kH - 16) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + esc(xlabel_) + "</text>\n";
  s += "<text x=\"18\" y=\"" + f3(kTop + ph / 2) + "\" transform=\"rotate(-90 18 " + f3(kTop + ph / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + esc(ylabel_) + "</text>\n";

  for (const auto& it : items_) {
    if (it.kind == 0) {
      std::string pts;
      auto flush = [&] {
        if (!pts.empty()) {
          s += "<polyline fill=\"none\" stroke=\"" + it.color + "\" stroke-width=\"" + f3(it.size) + "\" points=\"" +
               pts + "\"/>\n";
        }
        pts.clear();
      };
      for (const auto& p : it.pts) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
          flush();
          continue;
        }
        if (!pts.empty()) pts += ' ';
        pts += f3(sx(p[0])) + "," + f3(sy(p[1]));
      }
      flush();
    } else if (it.kind == 1) {
      for (const auto& p : it.pts) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
        s += "<circle cx=\"" + f3(sx(p[0])) + "\" cy=\"" + f3(sy(p[1])) + "\" r=\"" + f3(it.size) + "\" fill=\"" +
             it.color + "\"/>\n";
      }
    } else if (it.kind == 2) {
      const double ax = sx(it.pts[0][0]), bx = sx(it.pts[1][0]);
      const double ay = sy(it.pts[1][1]), by = sy(it.pts[0][1]);
      s += "<rect x=\"" + f3(std::min(ax, bx)) + "\" y=\"" + f3(std::min(ay, by)) + "\" width=\"" +
           f3(std::abs(bx - ax)) + "\" height=\"" + f3(std::abs(by - ay)) + "\" fill=\"" + it.color + "\"/>\n";
    } else {
      s += "<text x=\"" + f3(sx(it.pts[0][0])) + "\" y=\"" + f3(sy(it.pts[0][1])) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + esc(it.label) + "</text>\n";
    }
  }
  double ly = kTop + 14;
  for (const auto& [color, label] : legend_) {
    s += "<rect x=\"" + f3(kW - kRight - 150) + "\" y=\"" + f3(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         color + "\"/>\n";
    s += "<text x=\"" + f3(kW - kRight - 135) + "\" y=\"" + f3(ly) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         esc(label) + "</text>\n";
    ly += 16;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace fvdp::out
