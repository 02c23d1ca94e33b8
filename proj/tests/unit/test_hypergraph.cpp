#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "mmhcan/errors.hpp"
#include "mmhcan/hypergraph.hpp"
#include "oracles.hpp"

using namespace mmhcan;

namespace {

Eigen::MatrixXd to_eigen(const RealMatrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) e(r, c) = m(r, c);
  return e;
}

oracle::Matrix rows_of(const RealMatrix& m) {
  oracle::Matrix out(m.rows, std::vector<double>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out[r][c] = m(r, c);
  return out;
}

}  // namespace

TEST(Hypergraph, SingleNodeSingleEdge) {
  auto g = from_incidence(1, 1, {1});
  EXPECT_EQ(g.laplacian(0, 0), 0.0);
}

TEST(Hypergraph, TwoNodesSharedEdge) {
  auto g = from_incidence(2, 1, {1, 1});
  EXPECT_EQ(g.laplacian(0, 0), 0.5);
  EXPECT_EQ(g.laplacian(0, 1), -0.5);
  EXPECT_EQ(g.laplacian(1, 0), -0.5);
  EXPECT_EQ(g.laplacian(1, 1), 0.5);
  EXPECT_EQ(g.node_degree, (std::vector<double>{1, 1}));
  EXPECT_EQ(g.edge_degree, (std::vector<double>{2}));
}

TEST(Hypergraph, IsolatedNodeKeepsIdentityRow) {
  auto g = from_incidence(3, 1, {1, 1, 0});
  EXPECT_EQ(g.laplacian(2, 2), 1.0);
  EXPECT_EQ(g.laplacian(2, 0), 0.0);
  EXPECT_THROW(from_incidence(2, 2, {1, 0, 1, 0}), ContractError);
  EXPECT_THROW(from_incidence(2, 2, {1, 0, 1}), DimensionError);
  EXPECT_THROW(from_incidence(1, 1, {2}), ContractError);
}

TEST(Hypergraph, CosineSimilarity) {
  std::vector<double> a{1, 0}, b{1, 1}, z{0, 0};
  EXPECT_NEAR(cosine_sim(a, b), std::sqrt(0.5), 1e-15);
  EXPECT_THROW(cosine_sim(a, z), DomainError);
}

TEST(Hypergraph, KnnMatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + trial % 20, p = 1 + trial % 4;
    RealMatrix m{n, p, std::vector<double>(n * p)};
    for (auto& v : m.data) v = pick(rng) == 0 ? 0.0 : std::round(u(rng) * 4) / 4;  // ties and zeros
    std::size_t k = 1 + trial % 5;
    double theta = trial % 3 == 0 ? -1.0 : 0.3;
    EXPECT_EQ(hyperedge_members(m, k, theta), oracle::knn_members(rows_of(m), k, theta));
  }
}

TEST(Hypergraph, LaplacianMatchesDenseFormula) {
  std::mt19937_64 rng(6);
  std::bernoulli_distribution b(0.4);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 1 + trial % 9, e = 1 + trial % 5;
    std::vector<std::vector<int>> h(n, std::vector<int>(e));
    std::vector<std::uint8_t> flat(n * e);
    for (std::size_t j = 0; j < e; ++j) {
      h[j % n][j] = 1;
      for (std::size_t i = 0; i < n; ++i) h[i][j] |= b(rng);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < e; ++j) flat[i * e + j] = static_cast<std::uint8_t>(h[i][j]);
    auto g = from_incidence(n, e, flat);
    auto ref = oracle::laplacian(h);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) EXPECT_NEAR(g.laplacian(u, v), ref[u][v], 1e-12);
  }
}

TEST(Hypergraph, SpectralPropertiesOnFeatureGraphs) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t samples = 2 + trial % 6, dims = 3 + trial % 20;
    RealMatrix batch{samples, dims, std::vector<double>(samples * dims)};
    for (auto& v : batch.data) v = g(rng);
    auto hg = build_feature_graph(batch, 1 + trial % 5, trial % 2 ? 0.0 : -1.0);
    ASSERT_EQ(hg.nodes, dims);
    ASSERT_EQ(hg.edges, dims);
    Eigen::MatrixXd l = to_eigen(hg.laplacian);
    EXPECT_LT((l - l.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
    EXPECT_LT(es.eigenvalues().maxCoeff(), 1 + 1e-9);
    Eigen::VectorXd s(dims);
    for (std::size_t i = 0; i < dims; ++i) s(i) = std::sqrt(hg.node_degree[i]);
    EXPECT_LT((l * s).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Hypergraph, FeatureGraphUsesColumnsAsNodes) {
  // Columns 0 and 1 are parallel, column 2 is orthogonal to both.
  RealMatrix batch{2, 3, {1, 2, 0, 0, 0, 5}};
  auto g = build_feature_graph(batch, 2, 0.9);
  EXPECT_EQ(g.h(1, 0), 1);
  EXPECT_EQ(g.h(0, 1), 1);
  EXPECT_EQ(g.h(2, 0), 0);
  EXPECT_EQ(g.h(2, 2), 1);
  EXPECT_EQ(g.edge_degree[2], 1);
  RealMatrix one{1, 3, {1, 2, 3}};
  EXPECT_THROW(build_feature_graph(one, 2, 0.9), ContractError);
}

TEST(Hypergraph, ModalGraphsSizes) {
  RealMatrix t{3, 4, {1, 2, 3, 4, 4, 3, 2, 1, 0, 1, 0, 1}};
  RealMatrix s{3, 4, {1, 0, 0, 1, 0, 1, 1, 0, 2, 2, 1, 1}};
  auto g = build_modal_graphs(t, s, HypergraphConfig{});
  EXPECT_EQ(g.temporal.nodes, 4u);
  EXPECT_EQ(g.spectral.nodes, 4u);
  EXPECT_EQ(g.cross.nodes, 8u);
  HypergraphConfig bad;
  bad.theta_intra = 1.5;
  EXPECT_THROW(validate(bad), ConfigError);
}
