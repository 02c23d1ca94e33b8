#include "mmhcan/losses.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mmhcan/ops.hpp"

MMHCAN_NAMESPACE_BEGIN

Mining parse_mining(const std::string& name) {
  if (name == "batch_hard") return Mining::kBatchHard;
  if (name == "random") return Mining::kRandom;
  throw ConfigError("unknown mining mode '" + name + "'");
}

std::string to_string(Mining m) { return m == Mining::kBatchHard ? "batch_hard" : "random"; }

void validate(const LossConfig& cfg) {
  if (!(cfg.margin > 0)) throw ConfigError("loss.margin must be > 0");
  if (!(cfg.lambda >= 0)) throw ConfigError("loss.lambda must be >= 0");
}

RealMatrix to_matrix(const Tensor& t) {
  if (t.rank() != 2) throw DimensionError("to_matrix expects a 2-D tensor");
  auto d = t.data();
  return {t.dim(0), t.dim(1), std::vector<double>(d.begin(), d.end())};
}

std::vector<Triplet> mine_triplets(const RealMatrix& emb, std::span<const int> labels,
                                   Mining mode, std::uint64_t seed) {
  const std::size_t n = emb.rows;
  if (labels.size() != n) throw DimensionError("mine_triplets: label count mismatch");
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0;
      for (std::size_t c = 0; c < emb.cols; ++c) {
        double d = emb(i, c) - emb(j, c);
        acc += d * d;
      }
      dist[i * n + j] = dist[j * n + i] = std::sqrt(acc);
    }

  std::mt19937_64 rng(seed);
  std::vector<Triplet> out;
  std::vector<std::size_t> pos, neg;
  for (std::size_t a = 0; a < n; ++a) {
    pos.clear();
    neg.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      (labels[j] == labels[a] ? pos : neg).push_back(j);
    }
    if (pos.empty() || neg.empty()) continue;
    if (mode == Mining::kBatchHard) {
      std::size_t p = pos[0], q = neg[0];
      for (auto j : pos)
        if (dist[a * n + j] > dist[a * n + p]) p = j;
      for (auto j : neg)
        if (dist[a * n + j] < dist[a * n + q]) q = j;
      out.push_back({a, p, q});
    } else {
      std::uniform_int_distribution<std::size_t> pick_p(0, pos.size() - 1);
      std::uniform_int_distribution<std::size_t> pick_n(0, neg.size() - 1);
      std::size_t p = pos[pick_p(rng)];
      std::size_t q = neg[pick_n(rng)];
      out.push_back({a, p, q});
    }
  }
  return out;
}

Tensor triplet_loss(std::span<const Triplet> triplets, const Tensor& embeddings,
                    double margin) {
  if (!(margin > 0)) throw ContractError("triplet margin must be > 0");
  if (triplets.empty()) return Tensor::scalar(0);
  std::vector<std::size_t> a, p, q;
  for (const auto& t : triplets) {
    a.push_back(t.anchor);
    p.push_back(t.positive);
    q.push_back(t.negative);
  }
  Tensor ea = gather_rows(embeddings, a);
  auto distance = [&](const std::vector<std::size_t>& idx) {
    Tensor diff = sub(ea, gather_rows(embeddings, idx));
    return sqrt(sum_cols(mul(diff, diff)));
  };
  Tensor hinge = relu(add_scalar(sub(distance(p), distance(q)), static_cast<Scalar>(margin)));
  return mean(hinge);
}

LossParts total_loss(const Tensor& logits, std::span<const int> labels,
                     const Tensor& triplet, double lambda) {
  Tensor ce = cross_entropy(logits, labels);
  LossParts parts;
  parts.ce = ce.item();
  parts.triplet = triplet.item();
  parts.total = lambda == 0 ? ce : add(ce, scale(triplet, static_cast<Scalar>(lambda)));
  return parts;
}

MMHCAN_NAMESPACE_END
