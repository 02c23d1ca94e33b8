#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mmhcan/train.hpp"

using namespace mmhcan;

namespace {

ModelConfig tiny_model(BlockSwitches sw = {}, std::size_t classes = 2) {
  ModelConfig cfg;
  cfg.encoder.embed_dim = 8;
  cfg.encoder.segment_length = 64;
  cfg.encoder.image_rows = 16;
  cfg.encoder.image_cols = 16;
  cfg.encoder.temporal = {6, 5, 8, 3, 2, 2};
  cfg.encoder.spectral.channels = {4, 8};
  cfg.graph.k = 3;
  cfg.hgnn.heads = 2;
  cfg.switches = sw;
  cfg.classes = classes;
  return cfg;
}

PreparedSet tiny_data(std::size_t per_class, double noise, std::uint64_t seed) {
  auto specs = default_benchmark_classes(noise);
  std::vector<SynthClassSpec> two{specs[0], specs[3]};
  auto split = make_dataset(two, per_class, 0.5, 64, 1000, seed);
  std::vector<SignalSegment> all = split.train;
  all.insert(all.end(), split.test.begin(), split.test.end());
  return prepare(all, WindowSpec{WindowKind::kHann, 32, 4, 32, 0}, 1000, 16, 16);
}

TrainConfig quick_train(std::size_t epochs, double val_fraction = 0) {
  TrainConfig t;
  t.adam.lr = 1e-2;
  t.epochs = epochs;
  t.batch = 8;
  t.seed = 3;
  t.val_fraction = val_fraction;
  return t;
}

}  // namespace

TEST(Model, ParameterSetsFollowSwitches) {
  Model full(tiny_model(), 1);
  EXPECT_FALSE(full.params().names_with_prefix("fuse.").empty());
  EXPECT_TRUE(full.params().contains("hgnn.c.proj.w"));
  Model no_att(tiny_model({true, true, true, true, false}), 1);
  EXPECT_TRUE(no_att.params().names_with_prefix("fuse.").empty());
  Model temporal(tiny_model({true, false, false, false, false}), 1);
  EXPECT_TRUE(temporal.params().names_with_prefix("enc.spectral.").empty());
  EXPECT_TRUE(temporal.params().names_with_prefix("hgnn.s.").empty());
  Model cross(tiny_model({false, false, true, false, false}), 1);
  EXPECT_FALSE(cross.params().names_with_prefix("enc.spectral.").empty());
  EXPECT_TRUE(cross.params().names_with_prefix("hgnn.t.").empty());
}

TEST(Model, InitIsSeedDeterministic) {
  Model a(tiny_model(), 5), b(tiny_model(), 5), c(tiny_model(), 6);
  for (const auto& name : a.params().names()) {
    auto x = a.params().get(name).data(), y = b.params().get(name).data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin())) << name;
  }
  auto x = a.params().get("head.dense.w").data(), z = c.params().get("head.dense.w").data();
  EXPECT_FALSE(std::equal(x.begin(), x.end(), z.begin()));
}

TEST(Model, ForwardShapesAndGraphs) {
  auto data = tiny_data(4, 0.1, 1);
  Model m(tiny_model(), 2);
  std::vector<std::size_t> idx{0, 1, 4, 5};
  Batch b = make_batch(data, idx);
  NoGradGuard guard;
  auto fwd = m.forward(b.x, b.images);
  EXPECT_EQ(fwd.logits.shape(), (Shape{4, 2}));
  EXPECT_EQ(fwd.refined.c.shape(), (Shape{4, 16}));
  EXPECT_EQ(fwd.fusion.fused.shape(), (Shape{4, 8}));
  EXPECT_EQ(fwd.graphs.temporal.nodes, 8u);
  EXPECT_EQ(fwd.graphs.cross.nodes, 16u);
  auto again = m.forward(b.x, b.images, &fwd.graphs);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(again.logits.at(i), fwd.logits.at(i));
  std::vector<std::size_t> one{0};
  Batch single = make_batch(data, one);
  EXPECT_THROW(m.forward(single.x, single.images), ContractError);
}

TEST(Model, AdoptsMatchingParametersOnly) {
  Model a(tiny_model(), 1);
  Model b(tiny_model(), a.params());
  EXPECT_EQ(b.params().get("head.dense.w").at(0), a.params().get("head.dense.w").at(0));
  EXPECT_THROW(Model(tiny_model({true, true, true, true, false}), a.params()), DataError);
}

TEST(Train, BatchingHelpers) {
  std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6};
  auto b = make_batches(order, 3);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[1], (std::vector<std::size_t>{3, 4, 5, 6}));
  EXPECT_THROW(make_batches(order, 1), ConfigError);
  auto e = evaluation_order(50);
  EXPECT_EQ(e, evaluation_order(50));
  std::vector<std::size_t> sorted = e;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Train, StratifiedSplitKeepsClassBalance) {
  auto data = tiny_data(10, 0.1, 1);
  auto [fit, val] = stratified_split(data, 0.2, 7);
  EXPECT_EQ(fit.size(), 16u);
  EXPECT_EQ(val.size(), 4u);
  EXPECT_EQ(std::count(val.labels.begin(), val.labels.end(), 0), 2);
  EXPECT_EQ(fit.signals.size(), 16u * 64);
  EXPECT_EQ(fit.images.size(), 16u * 256);
}

TEST(Train, LossDropsOnSeparableTwoClassProblem) {
  auto data = tiny_data(16, 0.0, 2);
  auto result = train(data, tiny_model(), quick_train(20), LossConfig{});
  ASSERT_EQ(result.history.size(), 20u);
  double first = result.history.front().loss_total, last = result.history.back().loss_total;
  EXPECT_LE(last, 0.5 * first) << "first " << first << " last " << last;
  EXPECT_GE(evaluate(result.model, data).accuracy, 0.9);
}

TEST(Train, FirstEpochIsDeterministic) {
  auto data = tiny_data(8, 0.2, 3);
  auto a = train(data, tiny_model(), quick_train(1, 0.25), LossConfig{});
  auto b = train(data, tiny_model(), quick_train(1, 0.25), LossConfig{});
  EXPECT_EQ(a.history[0].loss_total, b.history[0].loss_total);
  EXPECT_EQ(a.history[0].loss_triplet, b.history[0].loss_triplet);
  EXPECT_EQ(a.history[0].val_acc, b.history[0].val_acc);
  for (const auto& name : a.model.params().names()) {
    auto x = a.model.params().get(name).data(), y = b.model.params().get(name).data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin())) << name;
  }
}

TEST(Train, ContrastiveSwitchControlsTripletTerm) {
  auto data = tiny_data(8, 0.2, 3);
  auto off = train(data, tiny_model({true, true, true, false, true}), quick_train(1), LossConfig{});
  EXPECT_EQ(off.history[0].loss_triplet, 0);
  EXPECT_EQ(off.history[0].loss_total, off.history[0].loss_ce);
  auto on = train(data, tiny_model(), quick_train(1), LossConfig{});
  EXPECT_GT(on.history[0].loss_triplet, 0);
  EXPECT_NEAR(on.history[0].loss_total, on.history[0].loss_ce + 0.5 * on.history[0].loss_triplet,
              1e-5);
}

TEST(Train, RejectsBadInputs) {
  auto data = tiny_data(4, 0.1, 1);
  TrainConfig bad = quick_train(1);
  bad.batch = 1;
  EXPECT_THROW(train(data, tiny_model(), bad, LossConfig{}), ConfigError);
  PreparedSet one_class = data;
  std::fill(one_class.labels.begin(), one_class.labels.end(), 0);
  EXPECT_THROW(train(one_class, tiny_model(), quick_train(1), LossConfig{}), DataError);
  PreparedSet out_of_range = data;
  out_of_range.labels[0] = 5;
  EXPECT_THROW(train(out_of_range, tiny_model(), quick_train(1), LossConfig{}), DataError);
}

TEST(Train, DivergenceReportsOp) {
  auto data = tiny_data(4, 0.1, 1);
  data.signals[5] = std::numeric_limits<double>::infinity();
  try {
    train(data, tiny_model(), quick_train(1), LossConfig{});
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_FALSE(e.op().empty());
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
  EXPECT_TRUE(Tape::current().empty());
}
