#include "distmap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "distmap/io.hpp"

namespace distmap::svg {

namespace {

constexpr int kMargin = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Frame {
  double x0, y0, w, h;  // plot area in pixel coordinates

  double px(double u) const { return x0 + u * w; }        // u in [0,1]
  double py(double v) const { return y0 + (1.0 - v) * h; }  // v in [0,1]
};

std::string open_svg(const Style& style) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width
    << "\" height=\"" << style.height << "\" viewBox=\"0 0 " << style.width
    << ' ' << style.height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty())
    s << "<text x=\"" << style.width / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << style.title << "</text>\n";
  return s.str();
}

void draw_axes(std::ostringstream& s, const Frame& f, const std::string& xlab,
               const std::string& ylab, double ymin, double ymax) {
  s << "<rect x=\"" << num(f.x0) << "\" y=\"" << num(f.y0) << "\" width=\""
    << num(f.w) << "\" height=\"" << num(f.h)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double u = t / 4.0;
    s << "<text x=\"" << num(f.px(u)) << "\" y=\"" << num(f.y0 + f.h + 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << short_num(u) << "</text>\n";
    s << "<text x=\"" << num(f.x0 - 8) << "\" y=\"" << num(f.py(u) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << short_num(ymin + u * (ymax - ymin)) << "</text>\n";
  }
  s << "<text x=\"" << num(f.x0 + f.w / 2) << "\" y=\"" << num(f.y0 + f.h + 38)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
    << xlab << "</text>\n";
  s << "<text x=\"" << num(f.x0 - 42) << "\" y=\"" << num(f.y0 + f.h / 2)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
       "transform=\"rotate(-90 "
    << num(f.x0 - 42) << ' ' << num(f.y0 + f.h / 2) << ")\">" << ylab
    << "</text>\n";
}

// Five-stop sequential color map from dark blue through white to dark red.
std::string heat_color(double t) {
  t = std::min(1.0, std::max(0.0, t));
  const double stops[5][3] = {{33, 102, 172},
                              {146, 197, 222},
                              {247, 247, 247},
                              {244, 165, 130},
                              {178, 24, 43}};
  const double pos = t * 4.0;
  const int lo = std::min(3, static_cast<int>(pos));
  const double frac = pos - lo;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[lo][0] +
                                             frac * (stops[lo + 1][0] - stops[lo][0]))),
                static_cast<int>(std::lround(stops[lo][1] +
                                             frac * (stops[lo + 1][1] - stops[lo][1]))),
                static_cast<int>(std::lround(stops[lo][2] +
                                             frac * (stops[lo + 1][2] - stops[lo][2]))));
  return buf;
}

}  // namespace

std::string render_curve(const DistortionCurve& curve, const Style& style) {
  const Frame f{kMargin, kMargin,
                static_cast<double>(style.width - 2 * kMargin),
                static_cast<double>(style.height - 2 * kMargin)};
  std::ostringstream s;
  s << open_svg(style);
  draw_axes(s, f, "q", "D(q)", 0.0, 1.0);

  s << "<line x1=\"" << num(f.px(0)) << "\" y1=\"" << num(f.py(0))
    << "\" x2=\"" << num(f.px(1)) << "\" y2=\"" << num(f.py(1))
    << "\" stroke=\"black\" stroke-dasharray=\"6,4\" stroke-width=\"1\"/>\n";

  s << "<path fill=\"none\" stroke=\"#b2182b\" stroke-width=\"2\" d=\"";
  for (std::size_t i = 0; i < curve.q_grid.size(); ++i) {
    s << (i ? "L" : "M") << num(f.px(curve.q_grid[i])) << ' '
      << num(f.py(std::min(1.0, std::max(0.0, curve.D_values[i]))));
  }
  s << "\"/>\n</svg>\n";
  return s.str();
}

std::string render_surface(const SurfaceGrid& grid, const Style& style) {
  const Frame f{kMargin, kMargin,
                static_cast<double>(style.width - 2 * kMargin - 70),
                static_cast<double>(style.height - 2 * kMargin)};
  double vmin = grid.values[0], vmax = grid.values[0];
  for (double v : grid.values) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double span = (vmax > vmin) ? vmax - vmin : 1.0;

  std::ostringstream s;
  s << open_svg(style);
  const int cells = grid.n - 1;
  const double cw = f.w / cells;
  const double ch = f.h / cells;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const double v = 0.25 * (grid.at(i, j) + grid.at(i + 1, j) +
                               grid.at(i, j + 1) + grid.at(i + 1, j + 1));
      s << "<rect x=\"" << num(f.x0 + i * cw) << "\" y=\""
        << num(f.y0 + f.h - (j + 1) * ch) << "\" width=\"" << num(cw + 0.5)
        << "\" height=\"" << num(ch + 0.5) << "\" fill=\""
        << heat_color((v - vmin) / span) << "\"/>\n";
    }
  }
  draw_axes(s, f, "q1", "q2", 0.0, 1.0);

  // Legend: vertical gradient spanning [min, max] of the data.
  const double lx = f.x0 + f.w + 20;
  const int steps = 64;
  for (int t = 0; t < steps; ++t) {
    const double frac = (t + 0.5) / steps;
    s << "<rect x=\"" << num(lx) << "\" y=\""
      << num(f.y0 + f.h * (1.0 - (t + 1.0) / steps)) << "\" width=\"18\" height=\""
      << num(f.h / steps + 0.5) << "\" fill=\"" << heat_color(frac) << "\"/>\n";
  }
  s << "<rect x=\"" << num(lx) << "\" y=\"" << num(f.y0)
    << "\" width=\"18\" height=\"" << num(f.h)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(f.y0 + f.h)
    << "\" font-family=\"sans-serif\" font-size=\"11\">" << short_num(vmin)
    << "</text>\n";
  s << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(f.y0 + 10)
    << "\" font-family=\"sans-serif\" font-size=\"11\">" << short_num(vmax)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string render_histogram(const RankHistogram& hist, const Style& style) {
  const Frame f{kMargin, kMargin,
                static_cast<double>(style.width - 2 * kMargin),
                static_cast<double>(style.height - 2 * kMargin)};
  double hmax = 1.0;
  for (double h : hist.heights) hmax = std::max(hmax, h);
  const double ymax = 1.1 * hmax;

  std::ostringstream s;
  s << open_svg(style);
  for (int b = 0; b < hist.n_bins; ++b) {
    const double x = f.px(hist.edges[b]);
    const double w = f.px(hist.edges[b + 1]) - x;
    const double top = f.py(hist.heights[b] / ymax);
    s << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\""
      << num(w) << "\" height=\"" << num(f.y0 + f.h - top)
      << "\" fill=\"#92c5de\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  }
  const double ref = f.py(1.0 / ymax);
  s << "<line x1=\"" << num(f.x0) << "\" y1=\"" << num(ref) << "\" x2=\""
    << num(f.x0 + f.w) << "\" y2=\"" << num(ref)
    << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  draw_axes(s, f, "q", "density", 0.0, ymax);
  s << "</svg>\n";
  return s.str();
}

void render_csv_file(const std::string& csv_path, const std::string& svg_path,
                     const Style& style) {
  std::ifstream probe(csv_path);
  if (!probe) throw std::runtime_error("cannot open: " + csv_path);
  std::string header;
  if (!std::getline(probe, header))
    throw std::runtime_error("empty csv: " + csv_path);
  probe.close();

  std::string body;
  if (header == "q,D,d")
    body = render_curve(io::read_curve_csv(csv_path), style);
  else if (header == "q1,q2,d")
    body = render_surface(io::read_surface_csv(csv_path), style);
  else if (header == "bin_lo,bin_hi,height")
    body = render_histogram(io::read_histogram_csv(csv_path), style);
  else
    throw std::runtime_error("unrecognized csv header in " + csv_path);

  std::ofstream out(svg_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + svg_path);
  out << body;
}

}  // namespace distmap::svg
