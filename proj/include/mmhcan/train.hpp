#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmhcan/losses.hpp"
#include "mmhcan/metrics.hpp"
#include "mmhcan/model.hpp"
#include "mmhcan/signal.hpp"
#include "mmhcan/stft.hpp"

MMHCAN_NAMESPACE_BEGIN

// Model-ready samples: z-scored signals and their spectrogram images.
struct PreparedSet {
  std::size_t length = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> signals;  // n x length
  std::vector<double> images;   // n x rows x cols
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  PreparedSet subset(std::span<const std::size_t> idx) const;
};

PreparedSet prepare(const std::vector<SignalSegment>& segments, const WindowSpec& window,
                    double sample_rate_hz, std::size_t rows, std::size_t cols);

struct Batch {
  Tensor x;       // B x 1 x T
  Tensor images;  // B x 1 x rows x cols
  std::vector<int> labels;
};

Batch make_batch(const PreparedSet& set, std::span<const std::size_t> idx);

// Consecutive chunks of `order`; a trailing chunk of one sample joins the
// previous chunk since graph construction needs two samples.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order,
                                                   std::size_t batch);

// Per-class seeded split; `fraction` of each class goes to the second set.
std::pair<PreparedSet, PreparedSet> stratified_split(const PreparedSet& set, double fraction,
                                                     std::uint64_t seed);

struct TrainConfig {
  AdamConfig adam;  // lr 1e-4 by default
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_total = 0;
  double loss_ce = 0;
  double loss_triplet = 0;
  std::optional<double> val_acc;
  std::size_t empty_triplet_batches = 0;
};

struct TrainResult {
  Model model;  // parameters at the best validation accuracy
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_acc;
};

// Triplet term summed over the enabled branches (t, s, c), each mined on its
// own final-layer embedding.
struct TripletTerm {
  Tensor loss;
  std::size_t triplets = 0;
};
TripletTerm branch_triplet_loss(const ForwardResult& fwd, std::span<const int> labels,
                                const BlockSwitches& sw, const LossConfig& loss,
                                std::uint64_t seed);

using EpochCallback = std::function<void(const EpochRecord&)>;

// NonFiniteError from a forward op aborts training with the epoch, batch and
// op in the message.
TrainResult train(const PreparedSet& data, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, const LossConfig& loss_cfg,
                  const EpochCallback& on_epoch = {});

// Fixed permutation used to batch evaluation sets. Hypergraphs are built per
// batch, so batches should mix classes the way training batches do.
inline constexpr std::uint64_t kEvalOrderSeed = 0x5EED0E7A1ULL;
std::vector<std::size_t> evaluation_order(std::size_t n);

// Class probabilities (n x C) in the set's order, batched along evaluation_order.
std::vector<double> predict(const Model& model, const PreparedSet& set, std::size_t batch = 32);
MetricsReport evaluate(const Model& model, const PreparedSet& set, std::size_t batch = 32);

MMHCAN_NAMESPACE_END
