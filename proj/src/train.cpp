#include "mmhcan/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "mmhcan/ops.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ParamStore snapshot(const ParamStore& params) {
  ParamStore out;
  for (const auto& [name, t] : params) out.add(name, t.detach().clone());
  return out;
}

}  // namespace

std::vector<std::size_t> evaluation_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(kEvalOrderSeed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

PreparedSet PreparedSet::subset(std::span<const std::size_t> idx) const {
  PreparedSet out;
  out.length = length;
  out.rows = rows;
  out.cols = cols;
  const std::size_t pix = rows * cols;
  for (auto i : idx) {
    if (i >= size()) throw ContractError("PreparedSet::subset index out of range");
    out.signals.insert(out.signals.end(), signals.begin() + i * length,
                       signals.begin() + (i + 1) * length);
    out.images.insert(out.images.end(), images.begin() + i * pix, images.begin() + (i + 1) * pix);
    out.labels.push_back(labels[i]);
  }
  return out;
}

PreparedSet prepare(const std::vector<SignalSegment>& segments, const WindowSpec& window,
                    double sample_rate_hz, std::size_t rows, std::size_t cols) {
  PreparedSet out;
  out.rows = rows;
  out.cols = cols;
  if (segments.empty()) return out;
  out.length = segments.front().values.size();
  out.signals.reserve(segments.size() * out.length);
  out.images.reserve(segments.size() * rows * cols);
  for (const auto& s : segments) {
    if (s.values.size() != out.length) throw DataError("prepare: segments differ in length");
    out.signals.insert(out.signals.end(), s.values.begin(), s.values.end());
    Spectrogram img = spectrogram(s.values, window, sample_rate_hz, rows, cols, s.label);
    out.images.insert(out.images.end(), img.values.data.begin(), img.values.data.end());
    out.labels.push_back(s.label);
  }
  return out;
}

Batch make_batch(const PreparedSet& set, std::span<const std::size_t> idx) {
  const std::size_t b = idx.size(), pix = set.rows * set.cols;
  std::vector<Scalar> x(b * set.length), img(b * pix);
  Batch out;
  for (std::size_t k = 0; k < b; ++k) {
    std::size_t i = idx[k];
    if (i >= set.size()) throw ContractError("make_batch index out of range");
    for (std::size_t t = 0; t < set.length; ++t) {
      x[k * set.length + t] = static_cast<Scalar>(set.signals[i * set.length + t]);
    }
    for (std::size_t p = 0; p < pix; ++p) img[k * pix + p] = static_cast<Scalar>(set.images[i * pix + p]);
    out.labels.push_back(set.labels[i]);
  }
  out.x = Tensor({b, 1, set.length}, std::move(x));
  out.images = Tensor({b, 1, set.rows, set.cols}, std::move(img));
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch) {
  if (batch < 2) throw ConfigError("batch size must be >= 2");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch) {
    std::size_t end = std::min(order.size(), i + batch);
    out.emplace_back(order.begin() + i, order.begin() + end);
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

std::pair<PreparedSet, PreparedSet> stratified_split(const PreparedSet& set, double fraction,
                                                     std::uint64_t seed) {
  if (!(fraction >= 0 && fraction < 1)) throw ConfigError("split fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < set.size(); ++i) by_class[set.labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> first, second;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n2 = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    n2 = std::min(n2, idx.size() - 1);
    second.insert(second.end(), idx.begin(), idx.begin() + n2);
    first.insert(first.end(), idx.begin() + n2, idx.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {set.subset(first), set.subset(second)};
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.adam.lr > 0)) throw ConfigError("train.lr must be > 0");
  if (!(cfg.adam.beta1 >= 0 && cfg.adam.beta1 < 1) || !(cfg.adam.beta2 >= 0 && cfg.adam.beta2 < 1)) {
    throw ConfigError("adam betas must be in [0, 1)");
  }
  if (!(cfg.adam.eps > 0)) throw ConfigError("adam eps must be > 0");
  if (cfg.epochs == 0) throw ConfigError("train.epochs must be > 0");
  if (cfg.batch < 2) throw ConfigError("train.batch must be >= 2");
  if (!(cfg.val_fraction >= 0 && cfg.val_fraction < 1)) {
    throw ConfigError("train.val_fraction must be in [0, 1)");
  }
}

TripletTerm branch_triplet_loss(const ForwardResult& fwd, std::span<const int> labels,
                                const BlockSwitches& sw, const LossConfig& loss,
                                std::uint64_t seed) {
  TripletTerm out;
  std::vector<const Tensor*> embeddings;
  if (sw.w_t) embeddings.push_back(&fwd.refined.t);
  if (sw.w_s) embeddings.push_back(&fwd.refined.s);
  if (sw.w_cr) embeddings.push_back(&fwd.refined.c);
  for (std::size_t m = 0; m < embeddings.size(); ++m) {
    auto triplets = mine_triplets(to_matrix(*embeddings[m]), labels, loss.mining, mix(seed, m));
    if (triplets.empty()) continue;
    out.triplets += triplets.size();
    Tensor term = triplet_loss(triplets, *embeddings[m], loss.margin);
    out.loss = out.loss.defined() ? add(out.loss, term) : term;
  }
  if (!out.loss.defined()) out.loss = Tensor::scalar(0);
  return out;
}

TrainResult train(const PreparedSet& data, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, const LossConfig& loss_cfg,
                  const EpochCallback& on_epoch) {
  validate(cfg);
  validate(loss_cfg);
  validate(model_cfg);
  if (data.size() < 2) throw DataError("training set needs >= 2 samples");
  std::vector<int> seen;
  for (int l : data.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= model_cfg.classes) {
      throw DataError("label " + std::to_string(l) + " outside [0, " +
                      std::to_string(model_cfg.classes) + ")");
    }
    if (std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
  }
  if (seen.size() < 2) throw DataError("training set needs >= 2 classes");

  PreparedSet fit_set = data, val_set;
  if (cfg.val_fraction > 0) {
    std::tie(fit_set, val_set) = stratified_split(data, cfg.val_fraction, mix(cfg.seed, 1));
  }
  if (fit_set.size() < 2) throw DataError("too few samples left for training after the split");

  Model model(model_cfg, cfg.seed);
  TrainResult result{Model(model_cfg, snapshot(model.params())), {}, 0, std::nullopt};
  Adam adam(cfg.adam);
  std::mt19937_64 shuffle_rng(mix(cfg.seed, 2));
  const double lambda = model_cfg.switches.w_cl ? loss_cfg.lambda : 0.0;

  std::vector<std::size_t> order(fit_set.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    auto batches = make_batches(order, cfg.batch);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      Batch batch = make_batch(fit_set, batches[bi]);
      try {
        model.params().zero_grad();
        ForwardResult fwd = model.forward(batch.x, batch.images);
        Tensor triplet = Tensor::scalar(0);
        if (lambda > 0) {
          TripletTerm term = branch_triplet_loss(fwd, batch.labels, model_cfg.switches, loss_cfg,
                                                 mix(mix(cfg.seed, epoch + 3), bi));
          if (term.triplets == 0) ++rec.empty_triplet_batches;
          triplet = term.loss;
        }
        LossParts parts = total_loss(fwd.logits, batch.labels, triplet, lambda);
        backward(parts.total);
        adam.step(model.params());
        rec.loss_total += parts.total.item();
        rec.loss_ce += parts.ce;
        rec.loss_triplet += parts.triplet;
      } catch (const NonFiniteError& e) {
        Tape::current().clear();
        throw NonFiniteError(e.op(), "training diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(bi) +
                                         ": first non-finite value from op '" + e.op() + "'");
      } catch (...) {
        Tape::current().clear();
        throw;
      }
    }
    const auto nb = static_cast<double>(batches.size());
    rec.loss_total /= nb;
    rec.loss_ce /= nb;
    rec.loss_triplet /= nb;
    if (val_set.size() >= 2) rec.val_acc = evaluate(model, val_set, cfg.batch).accuracy;

    bool improve = epoch == 0 || (rec.val_acc && (!result.best_val_acc || *rec.val_acc > *result.best_val_acc));
    if (!rec.val_acc) improve = true;  // no validation: keep the latest epoch
    if (improve) {
      result.model = Model(model_cfg, snapshot(model.params()));
      result.best_epoch = epoch;
      result.best_val_acc = rec.val_acc;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

std::vector<double> predict(const Model& model, const PreparedSet& set, std::size_t batch) {
  if (set.size() < 2) throw ContractError("predict needs >= 2 samples");
  NoGradGuard guard;
  std::vector<std::size_t> order = evaluation_order(set.size());
  const std::size_t classes = model.config().classes;
  std::vector<double> probs(set.size() * classes);
  for (const auto& idx : make_batches(order, batch)) {
    Batch b = make_batch(set, idx);
    Tensor p = softmax(model.forward(b.x, b.images).logits, 1);
    auto d = p.data();
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < classes; ++c) probs[idx[k] * classes + c] = d[k * classes + c];
  }
  return probs;
}

MetricsReport evaluate(const Model& model, const PreparedSet& set, std::size_t batch) {
  if (set.size() == 0) throw ContractError("evaluate: empty test set");
  return compute_metrics(predict(model, set, batch), set.labels, model.config().classes);
}

MMHCAN_NAMESPACE_END
