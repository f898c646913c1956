#include "gatetrain/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gatetrain/errors.hpp"

namespace gatetrain::svg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::rect(double x, double y, double w, double h, const std::string& fill,
                    double opacity, const std::string& stroke) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"" + fill + "\" fill-opacity=\"" +
           num(opacity) + "\" stroke=\"" + stroke + "\"/>\n";
}

void Document::circle(double cx, double cy, double r, const std::string& fill, double opacity,
                      const std::string& stroke) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
           "\" fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) + "\" stroke=\"" +
           stroke + "\" stroke-width=\"0.6\"/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                    double width, bool dashed) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
           "\"" + (dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& points,
                        const std::string& stroke, double width, bool dashed) {
  if (points.empty()) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
           "\"" + (dashed ? " stroke-dasharray=\"5,3\"" : "") + " points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ += ' ';
    body_ += num(points[i].first) + "," + num(points[i].second);
  }
  body_ += "\"/>\n";
}

void Document::text(double x, double y, const std::string& content, double size,
                    const std::string& anchor) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
           num(size) + "\" text-anchor=\"" + anchor + "\">" + escape(content) + "</text>\n";
}

std::string Document::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " +
         num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ +
         "</svg>\n";
}

void Document::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << str();
  if (!out) throw IoError("write failed: " + path.string());
}

double Axis::map(double value, double pixel_lo, double pixel_hi) const {
  const double a = log ? std::log10(lo) : lo;
  const double b = log ? std::log10(hi) : hi;
  const double v = log ? std::log10(value) : value;
  const double t = b > a ? (v - a) / (b - a) : 0.5;
  return pixel_lo + t * (pixel_hi - pixel_lo);
}

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      const double v = use_x ? p.first : p.second;
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) return {log ? 1.0 : 0.0, log ? 10.0 : 1.0, log};
  if (log) {
    return {lo / 1.2, hi * 1.2, true};
  }
  const double pad = hi > lo ? 0.05 * (hi - lo) : (lo == 0.0 ? 1.0 : 0.05 * std::fabs(lo));
  return {lo - pad, hi + pad, false};
}

void line_chart(Document& doc, const Frame& f, const Axis& x_axis, const Axis& y_axis,
                const std::vector<Series>& series, const std::string& title,
                const std::string& x_label, const std::string& y_label) {
  const double left = f.x + 60;
  const double right = f.x + f.width - 20;
  const double top = f.y + 30;
  const double bottom = f.y + f.height - 45;

  doc.text((left + right) / 2, f.y + 18, title, 14, "middle");
  doc.rect(left, top, right - left, bottom - top, "none", 1.0, "#444");
  doc.text((left + right) / 2, bottom + 36, x_label, 12, "middle");
  doc.text(f.x + 12, (top + bottom) / 2, y_label, 12, "start");
  doc.text(left, bottom + 16, tick(x_axis.lo), 10, "start");
  doc.text(right, bottom + 16, tick(x_axis.hi), 10, "end");
  doc.text(left - 4, bottom, tick(y_axis.lo), 10, "end");
  doc.text(left - 4, top + 10, tick(y_axis.hi), 10, "end");

  double legend_y = top + 14;
  for (const auto& s : series) {
    std::vector<std::pair<double, double>> px;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((x_axis.log && x <= 0.0) || (y_axis.log && y <= 0.0)) continue;
      px.emplace_back(x_axis.map(x, left, right), y_axis.map(y, bottom, top));
    }
    doc.polyline(px, s.color, 1.5, s.dashed);
    if (s.markers) {
      for (const auto& [x, y] : px) doc.circle(x, y, 2.5, s.color);
    }
    if (!s.label.empty()) {
      doc.line(right - 130, legend_y - 4, right - 110, legend_y - 4, s.color, 2.0, s.dashed);
      doc.text(right - 105, legend_y, s.label, 10);
      legend_y += 14;
    }
  }
}

std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int g = static_cast<int>(std::lround(200.0 * (1.0 - t)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", 230, g, g / 2);
  return buf;
}

}  // namespace gatetrain::svg
