#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmhcan/stft.hpp"  // RealMatrix
#include "mmhcan/tensor.hpp"

MMHCAN_NAMESPACE_BEGIN

enum class Mining { kBatchHard, kRandom };

Mining parse_mining(const std::string& name);
std::string to_string(Mining m);

struct LossConfig {
  double margin = 0.27;
  double lambda = 0.5;
  Mining mining = Mining::kBatchHard;
};

void validate(const LossConfig& cfg);

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;
  bool operator==(const Triplet&) const = default;
};

// Anchors need one other same-label sample and one different-label sample.
// Batch-hard picks the farthest positive and nearest negative (Euclidean,
// ties to the lower index); random picks uniformly with a seeded generator.
std::vector<Triplet> mine_triplets(const RealMatrix& embeddings,
                                   std::span<const int> labels, Mining mode,
                                   std::uint64_t seed = 0);

// Mean over triplets of max(0, |a-p| - |a-n| + margin), rows of `embeddings`.
// An empty triplet list gives a constant zero.
Tensor triplet_loss(std::span<const Triplet> triplets, const Tensor& embeddings,
                    double margin);

struct LossParts {
  Tensor total;
  double ce = 0;
  double triplet = 0;
};

// Mean cross entropy + lambda * triplet.
LossParts total_loss(const Tensor& logits, std::span<const int> labels,
                     const Tensor& triplet, double lambda);

// Plain values of a B x E tensor.
RealMatrix to_matrix(const Tensor& t);

MMHCAN_NAMESPACE_END
