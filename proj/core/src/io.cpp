#include "distmap/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace distmap::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

double parse_double(const std::string& tok, const std::string& path) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + tok + "' in " + path);
  }
  if (pos != tok.size())
    throw std::runtime_error("malformed number '" + tok + "' in " + path);
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream is(line);
  while (std::getline(is, tok, sep)) out.push_back(tok);
  return out;
}

std::string expect_line(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("unexpected end of file in " + path);
  return line;
}

// Header lines are "key value"; returns the value part after checking the key.
std::string header_value(std::ifstream& in, const std::string& key,
                         const std::string& path) {
  const std::string line = expect_line(in, path);
  if (line.rfind(key + " ", 0) != 0)
    throw std::runtime_error("expected '" + key + "' header in " + path);
  return line.substr(key.size() + 1);
}

void write_vector(std::ofstream& out, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

std::vector<double> read_vector(const std::string& line,
                                const std::string& path) {
  std::vector<double> v;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) v.push_back(parse_double(tok, path));
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sim_batch(const SimBatch& batch, const std::string& path) {
  std::ofstream out = open_out(path);
  const std::size_t xd = batch.pairs.empty() ? 0 : batch.pairs[0].x.size();
  const std::size_t sd = batch.pairs.empty() ? 0 : batch.pairs[0].s.size();
  out << "simbatch v1\n";
  out << "model_id " << batch.model_id << '\n';
  out << "seed " << batch.seed << '\n';
  out << "n " << batch.pairs.size() << '\n';
  out << "param_dim " << xd << '\n';
  out << "summary_dim " << sd << '\n';
  for (const SimPair& p : batch.pairs) {
    for (std::size_t k = 0; k < p.x.size(); ++k)
      out << (k ? " " : "") << format_double(p.x[k]);
    for (double v : p.s) out << ' ' << format_double(v);
    out << '\n';
  }
}

SimBatch read_sim_batch(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "simbatch v1")
    throw std::runtime_error("not a batch file: " + path);
  SimBatch batch;
  batch.model_id = header_value(in, "model_id", path);
  batch.seed = std::stoull(header_value(in, "seed", path));
  const std::size_t n = std::stoull(header_value(in, "n", path));
  const std::size_t xd = std::stoull(header_value(in, "param_dim", path));
  const std::size_t sd = std::stoull(header_value(in, "summary_dim", path));
  batch.pairs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> vals = read_vector(expect_line(in, path), path);
    if (vals.size() != xd + sd)
      throw std::runtime_error("record width mismatch in " + path);
    SimPair& p = batch.pairs[i];
    p.x.assign(vals.begin(), vals.begin() + xd);
    p.s.assign(vals.begin() + xd, vals.end());
    p.y = p.s;  // all in-scope models use s(y) = y
  }
  return batch;
}

void write_qdataset(const QDataset& data, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "qdataset v1\n";
  out << "n " << data.records.size() << '\n';
  out << "input_dim " << data.input_dim() << '\n';
  out << "keep_fraction " << format_double(data.window.keep_fraction) << '\n';
  out << "standardize " << (data.window.standardize ? 1 : 0) << '\n';
  out << "center";
  for (double v : data.window.center) out << ' ' << format_double(v);
  out << '\n';
  for (const QRecord& rec : data.records) {
    out << format_double(rec.q);
    for (double v : rec.input) out << ' ' << format_double(v);
    out << '\n';
  }
}

QDataset read_qdataset(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "qdataset v1")
    throw std::runtime_error("not a qdataset file: " + path);
  QDataset data;
  const std::size_t n = std::stoull(header_value(in, "n", path));
  const std::size_t dim = std::stoull(header_value(in, "input_dim", path));
  data.window.keep_fraction =
      parse_double(header_value(in, "keep_fraction", path), path);
  data.window.standardize =
      header_value(in, "standardize", path) != "0";
  data.window.center = read_vector(header_value(in, "center", path), path);
  data.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> vals = read_vector(expect_line(in, path), path);
    if (vals.size() != dim + 1)
      throw std::runtime_error("record width mismatch in " + path);
    data.records[i].q = vals[0];
    data.records[i].input.assign(vals.begin() + 1, vals.end());
  }
  return data;
}

void write_net_params(const NetParams& params, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "netparams v1\n";
  out << "input_dim " << params.config.input_dim << '\n';
  out << "hidden";
  for (int h : params.config.hidden_widths) out << ' ' << h;
  out << '\n';
  out << "n_components " << params.config.n_components << '\n';
  out << "param_floor " << format_double(params.config.param_floor) << '\n';
  out << "init_seed " << params.config.init_seed << '\n';
  out << "input_mean";
  for (double v : params.input_mean) out << ' ' << format_double(v);
  out << '\n';
  out << "input_sd";
  for (double v : params.input_sd) out << ' ' << format_double(v);
  out << '\n';
  out << "layers " << params.weights.size() << '\n';
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const Matrix& w = params.weights[l];
    out << "layer " << l << ' ' << w.rows << ' ' << w.cols << '\n';
    for (int r = 0; r < w.rows; ++r) {
      for (int c = 0; c < w.cols; ++c)
        out << (c ? " " : "") << format_double(w.at(r, c));
      out << '\n';
    }
    write_vector(out, params.biases[l]);
  }
}

NetParams read_net_params(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "netparams v1")
    throw std::runtime_error("not a netparams file: " + path);
  NetParams p;
  p.config.input_dim = std::stoi(header_value(in, "input_dim", path));
  {
    p.config.hidden_widths.clear();
    std::istringstream is(header_value(in, "hidden", path));
    int h;
    while (is >> h) p.config.hidden_widths.push_back(h);
  }
  p.config.n_components = std::stoi(header_value(in, "n_components", path));
  p.config.param_floor =
      parse_double(header_value(in, "param_floor", path), path);
  p.config.init_seed = std::stoull(header_value(in, "init_seed", path));
  p.input_mean = read_vector(header_value(in, "input_mean", path), path);
  p.input_sd = read_vector(header_value(in, "input_sd", path), path);
  const std::size_t n_layers = std::stoull(header_value(in, "layers", path));
  p.weights.resize(n_layers);
  p.biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::istringstream is(expect_line(in, path));
    std::string tag;
    std::size_t idx;
    int rows, cols;
    if (!(is >> tag >> idx >> rows >> cols) || tag != "layer" || idx != l)
      throw std::runtime_error("bad layer header in " + path);
    Matrix& w = p.weights[l];
    w.rows = rows;
    w.cols = cols;
    w.data.resize(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
      const std::vector<double> row = read_vector(expect_line(in, path), path);
      if (static_cast<int>(row.size()) != cols)
        throw std::runtime_error("matrix row width mismatch in " + path);
      for (int c = 0; c < cols; ++c) w.at(r, c) = row[c];
    }
    p.biases[l] = read_vector(expect_line(in, path), path);
    if (static_cast<int>(p.biases[l].size()) != rows)
      throw std::runtime_error("bias width mismatch in " + path);
  }
  return p;
}

void write_chain(const Chain& chain, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "chain v1\n";
  out << "seed " << chain.config.seed << '\n';
  out << "n " << chain.draws.size() << '\n';
  out << "dim " << (chain.draws.empty() ? 0 : chain.draws[0].size()) << '\n';
  out << "n_steps " << chain.config.n_steps << '\n';
  out << "burn_in " << chain.config.burn_in << '\n';
  out << "thin " << chain.config.thin << '\n';
  out << "step_sd " << format_double(chain.config.step_sd) << '\n';
  out << "acceptance_rate " << format_double(chain.acceptance_rate) << '\n';
  for (const auto& draw : chain.draws) {
    for (std::size_t k = 0; k < draw.size(); ++k)
      out << (k ? " " : "") << format_double(draw[k]);
    out << '\n';
  }
}

Chain read_chain(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "chain v1")
    throw std::runtime_error("not a chain file: " + path);
  Chain chain;
  chain.config.seed = std::stoull(header_value(in, "seed", path));
  const std::size_t n = std::stoull(header_value(in, "n", path));
  const std::size_t dim = std::stoull(header_value(in, "dim", path));
  chain.config.n_steps = std::stoull(header_value(in, "n_steps", path));
  chain.config.burn_in = std::stoull(header_value(in, "burn_in", path));
  chain.config.thin = std::stoull(header_value(in, "thin", path));
  chain.config.step_sd = parse_double(header_value(in, "step_sd", path), path);
  chain.acceptance_rate =
      parse_double(header_value(in, "acceptance_rate", path), path);
  chain.draws.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    chain.draws[i] = read_vector(expect_line(in, path), path);
    if (chain.draws[i].size() != dim)
      throw std::runtime_error("draw width mismatch in " + path);
  }
  return chain;
}

void write_curve_csv(const DistortionCurve& curve, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "q,D,d\n";
  for (std::size_t i = 0; i < curve.q_grid.size(); ++i)
    out << format_double(curve.q_grid[i]) << ','
        << format_double(curve.D_values[i]) << ','
        << format_double(curve.d_values[i]) << '\n';
}

DistortionCurve read_curve_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "q,D,d")
    throw std::runtime_error("not a curve csv: " + path);
  DistortionCurve c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> toks = split(line, ',');
    if (toks.size() != 3)
      throw std::runtime_error("bad curve row in " + path);
    c.q_grid.push_back(parse_double(toks[0], path));
    c.D_values.push_back(parse_double(toks[1], path));
    c.d_values.push_back(parse_double(toks[2], path));
  }
  if (c.q_grid.size() < 2) throw std::runtime_error("curve too short: " + path);
  return c;
}

void write_density_csv(const DistortionCurve& curve, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "q,d\n";
  for (std::size_t i = 0; i < curve.q_grid.size(); ++i)
    out << format_double(curve.q_grid[i]) << ','
        << format_double(curve.d_values[i]) << '\n';
}

void write_surface_csv(const SurfaceGrid& grid, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "q1,q2,d\n";
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j)
      out << format_double(grid.nodes[i]) << ',' << format_double(grid.nodes[j])
          << ',' << format_double(grid.at(i, j)) << '\n';
}

SurfaceGrid read_surface_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "q1,q2,d")
    throw std::runtime_error("not a surface csv: " + path);
  std::vector<double> q1, q2, d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> toks = split(line, ',');
    if (toks.size() != 3)
      throw std::runtime_error("bad surface row in " + path);
    q1.push_back(parse_double(toks[0], path));
    q2.push_back(parse_double(toks[1], path));
    d.push_back(parse_double(toks[2], path));
  }
  const std::size_t total = d.size();
  const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(total))));
  if (static_cast<std::size_t>(n) * n != total || n < 2)
    throw std::runtime_error("surface csv is not a square grid: " + path);
  SurfaceGrid grid;
  grid.n = n;
  grid.nodes.resize(n);
  for (int j = 0; j < n; ++j) grid.nodes[j] = q2[j];
  grid.values = std::move(d);
  return grid;
}

void write_histogram_csv(const RankHistogram& hist, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "bin_lo,bin_hi,height\n";
  for (int b = 0; b < hist.n_bins; ++b)
    out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1])
        << ',' << format_double(hist.heights[b]) << '\n';
}

RankHistogram read_histogram_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  if (expect_line(in, path) != "bin_lo,bin_hi,height")
    throw std::runtime_error("not a histogram csv: " + path);
  RankHistogram h;
  h.edges.clear();
  h.heights.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> toks = split(line, ',');
    if (toks.size() != 3)
      throw std::runtime_error("bad histogram row in " + path);
    if (h.edges.empty()) h.edges.push_back(parse_double(toks[0], path));
    h.edges.push_back(parse_double(toks[1], path));
    h.heights.push_back(parse_double(toks[2], path));
  }
  h.n_bins = static_cast<int>(h.heights.size());
  if (h.n_bins < 1) throw std::runtime_error("empty histogram csv: " + path);
  return h;
}

void write_coverage_csv(const CoverageEstimate& est, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "alpha,lo,hi,coverage,se\n";
  out << format_double(est.nominal) << ',' << format_double(est.lo) << ','
      << format_double(est.hi) << ',' << format_double(est.coverage) << ','
      << format_double(est.se) << '\n';
}

void write_manifest(const Manifest& entries, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& [key, value] : entries) {
    if (key == "section")
      out << '[' << value << "]\n";
    else
      out << key << " = " << value << '\n';
  }
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in = open_in(path);
  Manifest entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      entries.emplace_back("section", line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("malformed manifest line in " + path);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const std::size_t b = s.find_first_not_of(" \t");
      const std::size_t e = s.find_last_not_of(" \t");
      s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    entries.emplace_back(key, value);
  }
  return entries;
}

}  // namespace distmap::io
