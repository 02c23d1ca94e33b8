#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mmhcan/precision.hpp"
#include "mmhcan/stft.hpp"  // RealMatrix

MMHCAN_NAMESPACE_BEGIN

struct HypergraphConfig {
  std::size_t k = 5;
  double theta_intra = 0.90;
  double theta_cross = 0.90;
};

void validate(const HypergraphConfig& cfg);

struct Hypergraph {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::vector<std::uint8_t> incidence;  // nodes x edges, 0/1
  std::vector<double> node_degree;      // Dv diagonal
  std::vector<double> edge_degree;      // De diagonal
  RealMatrix laplacian;                 // nodes x nodes

  std::uint8_t h(std::size_t node, std::size_t edge) const {
    return incidence[node * edges + edge];
  }
};

// x.y / (|x||y|); DomainError if either vector is zero.
double cosine_sim(std::span<const double> x, std::span<const double> y);

// Row i of `profiles` is node i's similarity profile. Edge i holds node i and
// up to k other nodes with similarity >= threshold, best first (ties go to the
// lower index). Zero profiles neither gain nor act as neighbours.
std::vector<std::vector<std::size_t>> hyperedge_members(const RealMatrix& profiles,
                                                        std::size_t k,
                                                        double threshold);

// nodes x edges incidence matrix (E = N) from the members above.
Hypergraph build_hyperedges(const RealMatrix& profiles, std::size_t k,
                            double threshold);

// Fills degrees and L = I - Dv^-1/2 H De^-1 H^T Dv^-1/2. Zero-degree nodes get
// Dv^-1/2 := 0 (their L row is the identity row); an empty edge is a
// ContractError.
void compute_laplacian(Hypergraph& g);
Hypergraph from_incidence(std::size_t nodes, std::size_t edges,
                          std::vector<std::uint8_t> incidence);

struct ModalGraphs {
  Hypergraph temporal;  // D nodes
  Hypergraph spectral;  // D nodes
  Hypergraph cross;     // 2D nodes
};

// Batch matrices are samples x features; node j's profile is column j.
// Requires >= 2 samples.
Hypergraph build_feature_graph(const RealMatrix& batch, std::size_t k, double threshold);
ModalGraphs build_modal_graphs(const RealMatrix& f_t, const RealMatrix& f_s,
                               const HypergraphConfig& cfg);

// Debug dumps: comma-separated rows.
void write_csv(const RealMatrix& m, const std::filesystem::path& path);
void write_incidence_csv(const Hypergraph& g, const std::filesystem::path& path);

MMHCAN_NAMESPACE_END
