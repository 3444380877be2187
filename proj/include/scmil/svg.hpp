#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "scmil/bag.hpp"
#include "scmil/error.hpp"
#include "scmil/model.hpp"

namespace scmil {

// Per-patch interpretability table, one row per patch in original order.
inline void write_patch_table(const PatchBag& bag, const PatchInterpretation& interp,
                              const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("write_patch_table: cannot open " + path);
  os << "patch_index,x,y,importance,cluster,alpha\n";
  for (int i = 0; i < bag.positions.rows(); ++i) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.9g,%d,%.9g", i,
                  bag.positions.at(i, 0), bag.positions.at(i, 1),
                  interp.importance[static_cast<size_t>(i)],
                  interp.cluster[static_cast<size_t>(i)],
                  interp.alpha[static_cast<size_t>(i)]);
    os << buf << '\n';
  }
}

namespace detail {

// Blue -> yellow -> red ramp; high values run hot.
inline std::string importance_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  double r, g, b;
  if (v < 0.5) {
    const double u = v / 0.5;
    r = 40 + u * (250 - 40);
    g = 80 + u * (220 - 80);
    b = 220 - u * (220 - 60);
  } else {
    const double u = (v - 0.5) / 0.5;
    r = 250;
    g = 220 - u * (220 - 40);
    b = 60 - u * 30;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(r),
                static_cast<int>(g), static_cast<int>(b));
  return buf;
}

inline std::string cluster_color(int c) {
  if (c < 0) return "#c8c8c8";
  const double hue = std::fmod(c * 137.50776405, 360.0);
  // hsl -> rgb with fixed s=0.65, l=0.5
  const double s = 0.65, l = 0.5;
  const double cc = (1 - std::fabs(2 * l - 1)) * s;
  const double x = cc * (1 - std::fabs(std::fmod(hue / 60.0, 2.0) - 1));
  double r = 0, g = 0, b = 0;
  if (hue < 60) { r = cc; g = x; }
  else if (hue < 120) { r = x; g = cc; }
  else if (hue < 180) { g = cc; b = x; }
  else if (hue < 240) { g = x; b = cc; }
  else if (hue < 300) { r = x; b = cc; }
  else { r = cc; b = x; }
  const double m = l - cc / 2;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(255 * (r + m)), static_cast<int>(255 * (g + m)),
                static_cast<int>(255 * (b + m)));
  return buf;
}

}  // namespace detail

// Two scatter panels over normalized patch positions: importance on the
// left, cluster membership on the right. Point size scales mildly with the
// pooling weight.
inline void write_scatter_svg(const PatchBag& bag, const PatchInterpretation& interp,
                              const std::string& path) {
  const int n = bag.positions.rows();
  const Matrix pos = normalize_positions(bag.positions);
  const double panel = 420.0, margin = 30.0, gap = 40.0;
  const double width = 2 * panel + 2 * margin + gap;
  const double height = panel + 2 * margin + 24.0;
  double amax = 0.0;
  for (const double a : interp.alpha) amax = std::fmax(amax, a);
  if (amax <= 0.0) amax = 1.0;

  std::ofstream os(path);
  if (!os) throw FormatError("write_scatter_svg: cannot open " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto panel_origin = [&](int which) { return margin + which * (panel + gap); };
  for (int which = 0; which < 2; ++which) {
    const double ox = panel_origin(which);
    os << "<rect x=\"" << ox << "\" y=\"" << margin + 20 << "\" width=\"" << panel
       << "\" height=\"" << panel << "\" fill=\"none\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << ox << "\" y=\"" << margin + 8 << "\" font-size=\"13\" "
       << "font-family=\"sans-serif\">"
       << (which == 0 ? "importance score" : "cluster assignment") << "</text>\n";
    for (int i = 0; i < n; ++i) {
      const double cx = ox + pos.at(i, 0) * panel;
      const double cy = margin + 20 + (1.0 - pos.at(i, 1)) * panel;
      const double r =
          2.0 + 3.0 * std::sqrt(interp.alpha[static_cast<size_t>(i)] / amax);
      const std::string color =
          which == 0
              ? detail::importance_color(interp.importance[static_cast<size_t>(i)])
              : detail::cluster_color(interp.cluster[static_cast<size_t>(i)]);
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" "
                    "fill-opacity=\"0.85\"/>\n",
                    cx, cy, r, color.c_str());
      os << buf;
    }
  }
  os << "</svg>\n";
}

}  // namespace scmil
