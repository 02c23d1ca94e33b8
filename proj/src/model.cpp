#include "mmhcan/model.hpp"

#include <algorithm>

#include "mmhcan/losses.hpp"

MMHCAN_NAMESPACE_BEGIN

void validate(const ModelConfig& cfg) {
  validate(cfg.encoder);
  validate(cfg.graph);
  validate(cfg.switches);
  if (cfg.classes < 2) throw ConfigError("model.classes must be >= 2");
  if (cfg.hgnn.layers < 1) throw ConfigError("hgnn.layers must be >= 1");
  if (cfg.hgnn.heads < 1) throw ConfigError("hgnn.heads must be >= 1");
}

ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  ParamStore params;
  const auto& sw = cfg.switches;
  if (sw.needs_temporal()) init_temporal(params, cfg.encoder, rng);
  if (sw.needs_spectral()) init_spectral(params, cfg.encoder, rng);
  init_hgnn(params, sw, cfg.encoder.embed_dim, cfg.hgnn, rng);
  if (sw.w_att) init_attention(params, sw, cfg.encoder.embed_dim, cfg.hgnn.heads, rng);
  init_classifier(params, cfg.encoder.embed_dim, cfg.classes, rng);
  return params;
}

Model::Model(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), params_(init_params(cfg_, seed)) {}

Model::Model(ModelConfig cfg, ParamStore params) : cfg_(std::move(cfg)) {
  ParamStore fresh = init_params(cfg_, 0);
  auto expected = fresh.names(), got = params.names();
  std::sort(expected.begin(), expected.end());
  std::sort(got.begin(), got.end());
  if (expected != got) {
    throw DataError("checkpoint parameters do not match the configured model");
  }
  fresh.assign_from(params);
  params_ = std::move(fresh);
}

ForwardResult Model::forward(const Tensor& x, const Tensor& images,
                             const ModalGraphs* graphs) const {
  const auto& sw = cfg_.switches;
  if (x.rank() < 1 || images.rank() < 1 || x.dim(0) != images.dim(0)) {
    throw DimensionError("forward: signal and image batches differ");
  }
  if (x.dim(0) < 2) throw ContractError("forward needs a batch of >= 2 samples");

  ForwardResult r;
  auto& emb = r.embeddings;
  if (sw.needs_temporal()) emb.f_t = temporal_encode(params_, cfg_.encoder, x);
  if (sw.needs_spectral()) emb.f_s = spectral_encode(params_, cfg_.encoder, images);
  if (sw.w_cr) emb.f_c = concat_cross(emb.f_t, emb.f_s);

  const auto& g = cfg_.graph;
  if (graphs) {
    r.graphs = *graphs;
  } else {
    if (sw.w_t) r.graphs.temporal = build_feature_graph(to_matrix(emb.f_t), g.k, g.theta_intra);
    if (sw.w_s) r.graphs.spectral = build_feature_graph(to_matrix(emb.f_s), g.k, g.theta_intra);
    if (sw.w_cr) r.graphs.cross = build_feature_graph(to_matrix(emb.f_c), g.k, g.theta_cross);
  }

  r.refined = refine(params_, emb, r.graphs, cfg_.hgnn, sw);
  auto branches = fusion_branches(r.refined, sw);
  r.fusion = sw.w_att ? attend_fuse(params_, branches, cfg_.hgnn.heads) : mean_fuse(branches);
  r.logits = classify_logits(params_, r.fusion.fused);
  return r;
}

MMHCAN_NAMESPACE_END
