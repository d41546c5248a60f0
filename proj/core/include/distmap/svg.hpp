#pragma once

#include <string>

#include "distmap/baselines.hpp"
#include "distmap/curve.hpp"
#include "distmap/distortion.hpp"

// Deterministic SVG rendering of the diagnostic artifacts: identical input
// and style always produce identical bytes.
namespace distmap::svg {

struct Style {
  int width = 640;
  int height = 640;
  std::string title;
};

// Fitted map (solid) against the dashed identity reference.
std::string render_curve(const DistortionCurve& curve, const Style& style);

// Heat map with a legend spanning [min, max] of the data.
std::string render_surface(const SurfaceGrid& grid, const Style& style);

// Density-scale bars with a reference line at height 1.
std::string render_histogram(const RankHistogram& hist, const Style& style);

// Dispatch on the CSV header (curve, surface, or histogram) and write the
// rendering next to it; throws on malformed input.
void render_csv_file(const std::string& csv_path, const std::string& svg_path,
                     const Style& style);

}  // namespace distmap::svg
