#pragma once

#include <string>
#include <utility>
#include <vector>

#include "distmap/approximators.hpp"
#include "distmap/baselines.hpp"
#include "distmap/betamdn.hpp"
#include "distmap/curve.hpp"
#include "distmap/distortion.hpp"
#include "distmap/generative.hpp"
#include "distmap/samplers.hpp"

// Plain-text persistence. All floating-point values are written with 17
// significant digits so every file round-trips bit-exactly.
namespace distmap::io {

std::string format_double(double v);

// Line-delimited batch file: header (model_id, seed, n, dims) then one
// record per line holding x followed by s. y itself is not persisted: every
// model in scope uses s(y) = y, so readers restore y from s.
void write_sim_batch(const SimBatch& batch, const std::string& path);
SimBatch read_sim_batch(const std::string& path);

// q + input coordinates per line, window descriptor in the header.
void write_qdataset(const QDataset& data, const std::string& path);
QDataset read_qdataset(const std::string& path);

// Self-describing network file: config block, standardization vectors, then
// each layer's dimensions and numbers.
void write_net_params(const NetParams& params, const std::string& path);
NetParams read_net_params(const std::string& path);

// Chains persist like batch files (one draw per line).
void write_chain(const Chain& chain, const std::string& path);
Chain read_chain(const std::string& path);

// CSV artifacts.
void write_curve_csv(const DistortionCurve& curve, const std::string& path);
DistortionCurve read_curve_csv(const std::string& path);

void write_density_csv(const DistortionCurve& curve, const std::string& path);

void write_surface_csv(const SurfaceGrid& grid, const std::string& path);
SurfaceGrid read_surface_csv(const std::string& path);

void write_histogram_csv(const RankHistogram& hist, const std::string& path);
RankHistogram read_histogram_csv(const std::string& path);

void write_coverage_csv(const CoverageEstimate& est, const std::string& path);

// Sectioned key = value manifest (order-preserving).
using Manifest = std::vector<std::pair<std::string, std::string>>;
void write_manifest(const Manifest& entries, const std::string& path);
Manifest read_manifest(const std::string& path);

}  // namespace distmap::io
