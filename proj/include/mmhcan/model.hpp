#pragma once

#include <cstdint>
#include <optional>

#include "mmhcan/fusion.hpp"
#include "mmhcan/hypergraph.hpp"

MMHCAN_NAMESPACE_BEGIN

struct ModelConfig {
  EncoderConfig encoder;
  HypergraphConfig graph;
  HgnnConfig hgnn;
  BlockSwitches switches;
  std::size_t classes = 4;
};

void validate(const ModelConfig& cfg);

struct ForwardResult {
  Tensor logits;  // B x C
  Embeddings embeddings;
  Refined refined;
  FusionOutput fusion;
  ModalGraphs graphs;  // only the graphs of enabled branches are populated
};

// Encoders -> per-batch hypergraphs (built from detached embeddings) ->
// stacked HGNN layers -> attention or mean fusion -> dense classifier.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);
  // Adopts loaded parameters; the name set must match a fresh model exactly.
  Model(ModelConfig cfg, ParamStore params);

  // x: B x 1 x T, images: B x 1 x rows x cols; B >= 2. Hypergraphs are built
  // from the batch unless `graphs` supplies them.
  ForwardResult forward(const Tensor& x, const Tensor& images,
                        const ModalGraphs* graphs = nullptr) const;

  const ModelConfig& config() const noexcept { return cfg_; }
  const ParamStore& params() const noexcept { return params_; }
  ParamStore& params() noexcept { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed);

MMHCAN_NAMESPACE_END
