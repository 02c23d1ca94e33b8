#include "mmhcan/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mmhcan/errors.hpp"

MMHCAN_NAMESPACE_BEGIN

void validate(const HypergraphConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("graph.k must be >= 1");
  auto in_range = [](double t) { return t >= -1.0 && t <= 1.0; };
  if (!in_range(cfg.theta_intra) || !in_range(cfg.theta_cross)) {
    throw ConfigError("similarity thresholds must lie in [-1, 1]");
  }
}

double cosine_sim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("cosine_sim: length mismatch");
  double dot = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0 || ny == 0) throw DomainError("cosine similarity of a zero vector");
  double s = dot / (std::sqrt(nx) * std::sqrt(ny));
  return std::clamp(s, -1.0, 1.0);
}

std::vector<std::vector<std::size_t>> hyperedge_members(const RealMatrix& profiles,
                                                        std::size_t k,
                                                        double threshold) {
  const std::size_t n = profiles.rows;
  const std::size_t p = profiles.cols;
  if (n < 1) throw ContractError("hypergraph needs at least one node");
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < p; ++c) norms[i] += profiles(i, c) * profiles(i, c);
    norms[i] = std::sqrt(norms[i]);
  }
  // Pairwise similarities once; symmetric.
  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norms[i] == 0 || norms[j] == 0) continue;
      double dot = 0;
      for (std::size_t c = 0; c < p; ++c) dot += profiles(i, c) * profiles(j, c);
      double s = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      sim[i * n + j] = s;
      sim[j * n + i] = s;
    }
  }
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    members[i].push_back(i);
    if (norms[i] == 0) continue;
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && norms[j] != 0 && sim[i * n + j] >= threshold) cand.push_back(j);
    }
    std::size_t take = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<long>(take), cand.end(),
                      [&](std::size_t a, std::size_t b) {
                        double sa = sim[i * n + a], sb = sim[i * n + b];
                        return sa != sb ? sa > sb : a < b;
                      });
    members[i].insert(members[i].end(), cand.begin(), cand.begin() + static_cast<long>(take));
  }
  return members;
}

void compute_laplacian(Hypergraph& g) {
  const std::size_t n = g.nodes, e = g.edges;
  g.node_degree.assign(n, 0.0);
  g.edge_degree.assign(e, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < e; ++j) {
      if (g.h(i, j)) {
        g.node_degree[i] += 1;
        g.edge_degree[j] += 1;
      }
    }
  for (std::size_t j = 0; j < e; ++j) {
    if (g.edge_degree[j] == 0) {
      throw ContractError("hyperedge " + std::to_string(j) + " is empty");
    }
  }
  std::vector<double> inv_sqrt_dv(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt_dv[i] = g.node_degree[i] > 0 ? 1.0 / std::sqrt(g.node_degree[i]) : 0.0;
  }
  // Edge membership lists keep the product at O(sum |e|^2).
  std::vector<std::vector<std::size_t>> edge_nodes(e);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < e; ++j)
      if (g.h(i, j)) edge_nodes[j].push_back(i);

  RealMatrix a{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t j = 0; j < e; ++j) {
    double w = 1.0 / g.edge_degree[j];
    for (auto u : edge_nodes[j])
      for (auto v : edge_nodes[j]) a(u, v) += w;
  }
  g.laplacian = RealMatrix{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      double off = a(u, v) * inv_sqrt_dv[u] * inv_sqrt_dv[v];
      g.laplacian(u, v) = (u == v ? 1.0 : 0.0) - off;
    }
}

Hypergraph from_incidence(std::size_t nodes, std::size_t edges,
                          std::vector<std::uint8_t> incidence) {
  if (incidence.size() != nodes * edges) {
    throw DimensionError("incidence has " + std::to_string(incidence.size()) +
                         " entries, expected " + std::to_string(nodes * edges));
  }
  for (auto v : incidence) {
    if (v > 1) throw ContractError("incidence entries must be 0 or 1");
  }
  Hypergraph g;
  g.nodes = nodes;
  g.edges = edges;
  g.incidence = std::move(incidence);
  compute_laplacian(g);
  return g;
}

Hypergraph build_hyperedges(const RealMatrix& profiles, std::size_t k,
                            double threshold) {
  if (profiles.rows < 2) throw ContractError("build_hyperedges needs N >= 2");
  auto members = hyperedge_members(profiles, k, threshold);
  const std::size_t n = profiles.rows;
  std::vector<std::uint8_t> inc(n * n, 0);
  for (std::size_t e = 0; e < n; ++e)
    for (auto v : members[e]) inc[v * n + e] = 1;
  return from_incidence(n, n, std::move(inc));
}

Hypergraph build_feature_graph(const RealMatrix& batch, std::size_t k, double threshold) {
  if (batch.rows < 2) {
    throw ContractError("feature hypergraph needs a batch of >= 2 samples");
  }
  RealMatrix profiles{batch.cols, batch.rows, std::vector<double>(batch.data.size())};
  for (std::size_t s = 0; s < batch.rows; ++s)
    for (std::size_t f = 0; f < batch.cols; ++f) profiles(f, s) = batch(s, f);
  return build_hyperedges(profiles, k, threshold);
}

ModalGraphs build_modal_graphs(const RealMatrix& f_t, const RealMatrix& f_s,
                               const HypergraphConfig& cfg) {
  validate(cfg);
  if (f_t.rows != f_s.rows) throw DimensionError("modal batches differ in size");
  RealMatrix f_c{f_t.rows, f_t.cols + f_s.cols,
                 std::vector<double>(f_t.rows * (f_t.cols + f_s.cols))};
  for (std::size_t r = 0; r < f_t.rows; ++r) {
    for (std::size_t c = 0; c < f_t.cols; ++c) f_c(r, c) = f_t(r, c);
    for (std::size_t c = 0; c < f_s.cols; ++c) f_c(r, f_t.cols + c) = f_s(r, c);
  }
  return {build_feature_graph(f_t, cfg.k, cfg.theta_intra),
          build_feature_graph(f_s, cfg.k, cfg.theta_intra),
          build_feature_graph(f_c, cfg.k, cfg.theta_cross)};
}

void write_csv(const RealMatrix& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

void write_incidence_csv(const Hypergraph& g, const std::filesystem::path& path) {
  RealMatrix m{g.nodes, g.edges, std::vector<double>(g.incidence.begin(), g.incidence.end())};
  write_csv(m, path);
}

MMHCAN_NAMESPACE_END
