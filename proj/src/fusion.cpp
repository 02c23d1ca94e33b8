#include "mmhcan/fusion.hpp"

#include "mmhcan/ops.hpp"

MMHCAN_NAMESPACE_BEGIN

Propagation parse_propagation(const std::string& name) {
  if (name == "laplacian") return Propagation::kLaplacian;
  if (name == "smoothing") return Propagation::kSmoothing;
  throw ConfigError("unknown propagation operator '" + name + "'");
}

std::string to_string(Propagation p) {
  return p == Propagation::kLaplacian ? "laplacian" : "smoothing";
}

std::string BlockSwitches::label() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(w_t, "w_t");
  add(w_s, "w_s");
  add(w_cr, "w_cr");
  add(w_cl, "w_cl");
  add(w_att, "w_att");
  return out.empty() ? "none" : out;
}

void validate(const BlockSwitches& s) {
  if (!s.w_t && !s.w_s && !s.w_cr) {
    throw ConfigError("at least one of w_t, w_s, w_cr must be enabled");
  }
  if (s.w_cr && (s.w_t != s.w_s)) {
    throw ConfigError("w_cr needs both w_t and w_s (or neither, for a cross-only run)");
  }
}

Tensor propagation_operator(const Hypergraph& g, Propagation p) {
  const std::size_t n = g.nodes;
  std::vector<Scalar> values(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double l = g.laplacian(i, j);
      values[i * n + j] = static_cast<Scalar>(
          p == Propagation::kLaplacian ? l : (i == j ? 1.0 : 0.0) - l);
    }
  return Tensor({n, n}, std::move(values));
}

Tensor hgnn_layer(const Tensor& f, const Tensor& op, const Tensor& w) {
  if (op.rank() != 2 || op.dim(0) != op.dim(1) || f.rank() != 2 || f.dim(1) != op.dim(0)) {
    throw DimensionError("hgnn_layer: operator " + shape_str(op.shape()) +
                         " does not match features " + shape_str(f.shape()));
  }
  return relu(matmul(matmul(f, op), w));
}

namespace {

std::string layer_name(const std::string& key, std::size_t l) {
  return "hgnn." + key + ".layer" + std::to_string(l) + ".w";
}

void init_branch(ParamStore& params, const std::string& key, std::size_t nodes,
                 std::size_t layers, Rng& rng) {
  for (std::size_t l = 0; l < layers; ++l) {
    params.add(layer_name(key, l), uniform_init({nodes, nodes}, nodes, 2.449489742783178, rng));
  }
}

Tensor run_branch(const ParamStore& params, const std::string& key, Tensor f,
                  const Tensor& op, std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l) f = hgnn_layer(f, op, params.get(layer_name(key, l)));
  return f;
}

}  // namespace

void init_hgnn(ParamStore& params, const BlockSwitches& sw, std::size_t embed_dim,
               const HgnnConfig& cfg, Rng& rng) {
  if (cfg.layers < 1) throw ConfigError("hgnn.layers must be >= 1");
  if (sw.w_t) init_branch(params, "t", embed_dim, cfg.layers, rng);
  if (sw.w_s) init_branch(params, "s", embed_dim, cfg.layers, rng);
  if (sw.w_cr) {
    init_branch(params, "c", 2 * embed_dim, cfg.layers, rng);
    params.add("hgnn.c.proj.w", uniform_init({2 * embed_dim, embed_dim}, 2 * embed_dim, 1.0, rng));
    params.add("hgnn.c.proj.b", Tensor::zeros({embed_dim}));
  }
}

Refined refine(const ParamStore& params, const Embeddings& emb, const ModalGraphs& graphs,
               const HgnnConfig& cfg, const BlockSwitches& sw) {
  Refined r;
  if (sw.w_t) {
    r.t = run_branch(params, "t", emb.f_t, propagation_operator(graphs.temporal, cfg.propagation),
                     cfg.layers);
  }
  if (sw.w_s) {
    r.s = run_branch(params, "s", emb.f_s, propagation_operator(graphs.spectral, cfg.propagation),
                     cfg.layers);
  }
  if (sw.w_cr) {
    r.c = run_branch(params, "c", emb.f_c, propagation_operator(graphs.cross, cfg.propagation),
                     cfg.layers);
    r.c_proj = add_row_bias(matmul(r.c, params.get("hgnn.c.proj.w")), params.get("hgnn.c.proj.b"));
  }
  return r;
}

std::vector<Branch> fusion_branches(const Refined& r, const BlockSwitches& sw) {
  std::vector<Branch> out;
  if (sw.w_t) out.push_back({"t", r.t});
  if (sw.w_s) out.push_back({"s", r.s});
  if (sw.w_cr) out.push_back({"c", r.c_proj});
  return out;
}

void init_attention(ParamStore& params, const BlockSwitches& sw, std::size_t embed_dim,
                    std::size_t heads, Rng& rng) {
  if (heads < 1) throw ConfigError("hgnn.heads must be >= 1");
  std::vector<std::string> keys;
  if (sw.w_t) keys.push_back("t");
  if (sw.w_s) keys.push_back("s");
  if (sw.w_cr) keys.push_back("c");
  for (std::size_t h = 0; h < heads; ++h) {
    std::string prefix = "fuse.head" + std::to_string(h) + ".";
    for (const auto& k : keys) {
      params.add(prefix + "w_" + k, uniform_init({embed_dim, 1}, embed_dim, 1.0, rng));
      params.add(prefix + "b_" + k, Tensor::zeros({1}));
    }
  }
}

FusionOutput attend_fuse(const ParamStore& params, std::span<const Branch> branches,
                         std::size_t heads) {
  if (branches.empty()) throw ContractError("attend_fuse with no branches");
  if (heads < 1) throw ContractError("attend_fuse needs >= 1 head");
  const std::size_t m = branches.size();
  FusionOutput out;
  Tensor total;
  for (std::size_t h = 0; h < heads; ++h) {
    std::string prefix = "fuse.head" + std::to_string(h) + ".";
    std::vector<Tensor> scores;
    for (const auto& b : branches) {
      scores.push_back(add_row_bias(matmul(b.embedding, params.get(prefix + "w_" + b.key)),
                                    params.get(prefix + "b_" + b.key)));
    }
    Tensor alpha = softmax(concat_cols(scores), 1);  // B x M
    out.alpha.emplace_back(alpha.data().begin(), alpha.data().end());
    Tensor head;
    for (std::size_t k = 0; k < m; ++k) {
      Tensor term = scale_rows(branches[k].embedding, slice_cols(alpha, k, 1));
      head = k == 0 ? term : add(head, term);
    }
    total = h == 0 ? head : add(total, head);
  }
  out.fused = heads == 1 ? total : scale(total, Scalar(1) / static_cast<Scalar>(heads));
  return out;
}

FusionOutput mean_fuse(std::span<const Branch> branches) {
  if (branches.empty()) throw ContractError("mean_fuse with no branches");
  Tensor total = branches[0].embedding;
  for (std::size_t k = 1; k < branches.size(); ++k) total = add(total, branches[k].embedding);
  FusionOutput out;
  out.fused = branches.size() == 1
                  ? total
                  : scale(total, Scalar(1) / static_cast<Scalar>(branches.size()));
  return out;
}

void init_classifier(ParamStore& params, std::size_t embed_dim, std::size_t classes,
                     Rng& rng) {
  if (classes < 2) throw ConfigError("need >= 2 classes");
  params.add("head.dense.w", uniform_init({embed_dim, classes}, embed_dim, 1.0, rng));
  params.add("head.dense.b", Tensor::zeros({classes}));
}

Tensor classify_logits(const ParamStore& params, const Tensor& fused) {
  return add_row_bias(matmul(fused, params.get("head.dense.w")), params.get("head.dense.b"));
}

Tensor classify(const ParamStore& params, const Tensor& fused) {
  return softmax(classify_logits(params, fused), 1);
}

MMHCAN_NAMESPACE_END
