#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace gatetrain::svg {

/// Hand-written SVG 1.1 output; enough for scatter panels and line charts.
class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0, const std::string& stroke = "none");
  void circle(double cx, double cy, double r, const std::string& fill, double opacity = 1.0,
              const std::string& stroke = "none");
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, bool dashed = false);
  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke,
                double width = 1.5, bool dashed = false);
  void text(double x, double y, const std::string& content, double size = 12.0,
            const std::string& anchor = "start");

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_;
  double height_;
  std::string body_;
};

/// Maps data values onto a pixel interval, optionally in log10 space.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double value, double pixel_lo, double pixel_hi) const;
};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "black";
  bool dashed = false;
  bool markers = true;
};

struct Frame {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Axes box, tick labels at both ends, legend, and one polyline per series.
void line_chart(Document& doc, const Frame& frame, const Axis& x_axis, const Axis& y_axis,
                const std::vector<Series>& series, const std::string& title,
                const std::string& x_label, const std::string& y_label);

/// Axis covering all series (padded), in log space when requested.
Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log);

/// White-to-red ramp for t in [0, 1].
std::string heat_color(double t);

/// Escapes &, <, > and quotes.
std::string escape(const std::string& s);

}  // namespace gatetrain::svg
