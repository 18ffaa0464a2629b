#pragma once

// Text output shared by the command line front end: round-trip number
// formatting and a small deterministic SVG writer.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace fvdp::out {

// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string num(double v);

void write_file(const std::filesystem::path& path, const std::string& text);

using Point = std::array<double, 2>;

// Fixed 720x540 viewport; data bounds are taken from everything added unless
// set explicitly. Output depends only on the calls made.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel);

  void set_bounds(double xmin, double xmax, double ymin, double ymax);
  // Non-finite points split the line.
  void polyline(const std::vector<Point>& pts, const std::string& color, double width = 1.0);
  void markers(const std::vector<Point>& pts, const std::string& color, double radius = 3.0);
  void rect(double x0, double y0, double x1, double y1, const std::string& fill);
  void text(double x, double y, const std::string& s);
  void legend(const std::string& color, const std::string& s);

  std::string str() const;

 private:
  struct Item {
    int kind;
    std::vector<Point> pts;
    std::string color;
    double size;
    std::string label;
  };
  std::string title_, xlabel_, ylabel_;
  std::vector<Item> items_;
  std::vector<std::pair<std::string, std::string>> legend_;
  bool fixed_ = false;
  double xmin_ = 0, xmax_ = 1, ymin_ = 0, ymax_ = 1;
};

}  // namespace fvdp::out
