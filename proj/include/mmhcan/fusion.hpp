#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmhcan/encoders.hpp"
#include "mmhcan/hypergraph.hpp"

MMHCAN_NAMESPACE_BEGIN

enum class Propagation {
  kLaplacian,  // L itself in the update rule
  kSmoothing,  // I - L (standard HGNN smoothing)
};

Propagation parse_propagation(const std::string& name);
std::string to_string(Propagation p);

struct HgnnConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  Propagation propagation = Propagation::kLaplacian;
};

// Architecture block toggles: temporal, spectral, cross-modality branches,
// contrastive loss, attention fusion.
struct BlockSwitches {
  bool w_t = true;
  bool w_s = true;
  bool w_cr = true;
  bool w_cl = true;
  bool w_att = true;

  bool needs_temporal() const { return w_t || w_cr; }
  bool needs_spectral() const { return w_s || w_cr; }
  std::string label() const;
};

// ConfigError unless some branch is on and w_cr is either alone or paired
// with both intra-modality branches.
void validate(const BlockSwitches& s);

// Constant N x N operator for one modality graph.
Tensor propagation_operator(const Hypergraph& g, Propagation p);

// relu(F . P . W): F is samples x nodes, P the nodes x nodes operator, W
// mixes node features (nodes x nodes').
Tensor hgnn_layer(const Tensor& f, const Tensor& op, const Tensor& w);

struct Embeddings {
  Tensor f_t;  // B x D (undefined when the temporal encoder is off)
  Tensor f_s;  // B x D
  Tensor f_c;  // B x 2D
};

struct Refined {
  Tensor t;       // B x D, after the last HGNN layer
  Tensor s;       // B x D
  Tensor c;       // B x 2D
  Tensor c_proj;  // B x D, input to fusion
};

void init_hgnn(ParamStore& params, const BlockSwitches& sw, std::size_t embed_dim,
               const HgnnConfig& cfg, Rng& rng);

// Stacked hgnn_layer per enabled branch under `hgnn.<t|s|c>.layer<l>.w`.
Refined refine(const ParamStore& params, const Embeddings& emb,
               const ModalGraphs& graphs, const HgnnConfig& cfg,
               const BlockSwitches& sw);

struct Branch {
  std::string key;  // "t", "s", "c"
  Tensor embedding; // B x D
};

std::vector<Branch> fusion_branches(const Refined& r, const BlockSwitches& sw);

struct FusionOutput {
  Tensor fused;                           // B x D
  std::vector<std::vector<double>> alpha; // per head, B x M row-major
};

void init_attention(ParamStore& params, const BlockSwitches& sw, std::size_t embed_dim,
                    std::size_t heads, Rng& rng);

// Per head: scalar score per branch, softmax across branches, weighted sum;
// heads averaged.
FusionOutput attend_fuse(const ParamStore& params, std::span<const Branch> branches,
                         std::size_t heads);
// Unweighted mean when attention is switched off.
FusionOutput mean_fuse(std::span<const Branch> branches);

void init_classifier(ParamStore& params, std::size_t embed_dim, std::size_t classes,
                     Rng& rng);
Tensor classify_logits(const ParamStore& params, const Tensor& fused);
Tensor classify(const ParamStore& params, const Tensor& fused);  // probabilities

MMHCAN_NAMESPACE_END
