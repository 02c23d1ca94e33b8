#include "mmhcan/encoders.hpp"

#include <cmath>

#include "mmhcan/ops.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace {

std::size_t conv_out(std::size_t len, std::size_t kernel, std::size_t stride) {
  if (kernel > len) return 0;
  return (len - kernel) / stride + 1;
}

constexpr double kReluGain = 2.449489742783178;  // sqrt(6)

void add_conv2d(ParamStore& params, const std::string& name, std::size_t cout,
                std::size_t cin, std::size_t k, double gain, Rng& rng) {
  params.add(name + ".w", uniform_init({cout, cin, k, k}, cin * k * k, gain, rng));
  params.add(name + ".b", Tensor::zeros({cout}));
}

Tensor apply_conv2d(const ParamStore& params, const std::string& name,
                    const Tensor& x, std::size_t stride, std::size_t pad) {
  return conv2d(x, params.get(name + ".w"), params.get(name + ".b"), stride, pad);
}

}  // namespace

std::size_t temporal_steps(const EncoderConfig& cfg) {
  const auto& t = cfg.temporal;
  if (t.pool_size == 0 || t.pool_stride == 0) throw ConfigError("pool size/stride must be > 0");
  std::size_t len = conv_out(cfg.segment_length, t.conv1_kernel, 1);
  len = len ? conv_out(len, t.pool_size, t.pool_stride) : 0;
  len = len ? conv_out(len, t.conv2_kernel, 1) : 0;
  len = len ? conv_out(len, t.pool_size, t.pool_stride) : 0;
  if (len == 0) {
    throw ConfigError("segment length " + std::to_string(cfg.segment_length) +
                      " too short for the temporal conv/pool stack");
  }
  return len;
}

void validate(const EncoderConfig& cfg) {
  if (cfg.embed_dim == 0) throw ConfigError("embed_dim must be > 0");
  const auto& t = cfg.temporal;
  if (!t.conv1_filters || !t.conv1_kernel || !t.conv2_filters || !t.conv2_kernel) {
    throw ConfigError("temporal conv filters/kernels must be > 0");
  }
  temporal_steps(cfg);
  const auto& ch = cfg.spectral.channels;
  if (ch.empty()) throw ConfigError("spectral.channels must list at least one block");
  for (auto c : ch) {
    if (c == 0) throw ConfigError("spectral channel counts must be > 0");
  }
  std::size_t rows = cfg.image_rows, cols = cfg.image_cols;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    rows = (rows + 1) / 2;
    cols = (cols + 1) / 2;
  }
  if (cfg.image_rows < 2 || cfg.image_cols < 2 || rows == 0 || cols == 0) {
    throw ConfigError("image dims too small for the residual stack");
  }
}

Tensor uniform_init(Shape shape, std::size_t fan_in, double gain, Rng& rng) {
  double bound = gain / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<Scalar> values(numel_of(shape));
  for (auto& v : values) v = static_cast<Scalar>(dist(rng));
  return Tensor(std::move(shape), std::move(values));
}

void init_temporal(ParamStore& params, const EncoderConfig& cfg, Rng& rng) {
  const auto& t = cfg.temporal;
  const std::size_t h = cfg.embed_dim;
  params.add("enc.temporal.conv1.w",
             uniform_init({t.conv1_filters, 1, t.conv1_kernel}, t.conv1_kernel, kReluGain, rng));
  params.add("enc.temporal.conv1.b", Tensor::zeros({t.conv1_filters}));
  params.add("enc.temporal.conv2.w",
             uniform_init({t.conv2_filters, t.conv1_filters, t.conv2_kernel},
                          t.conv1_filters * t.conv2_kernel, kReluGain, rng));
  params.add("enc.temporal.conv2.b", Tensor::zeros({t.conv2_filters}));
  params.add("enc.temporal.lstm.w_ih",
             uniform_init({t.conv2_filters, 4 * h}, t.conv2_filters, 1.0, rng));
  params.add("enc.temporal.lstm.w_hh", uniform_init({h, 4 * h}, h, 1.0, rng));
  std::vector<Scalar> bias(4 * h, Scalar(0));
  for (std::size_t i = h; i < 2 * h; ++i) bias[i] = Scalar(1);  // forget gate
  params.add("enc.temporal.lstm.b", Tensor({4 * h}, std::move(bias)));
}

void init_spectral(ParamStore& params, const EncoderConfig& cfg, Rng& rng) {
  const auto& ch = cfg.spectral.channels;
  add_conv2d(params, "enc.spectral.stem", ch[0], 1, 3, kReluGain, rng);
  for (std::size_t i = 0; i < ch.size(); ++i) {
    std::size_t cin = i == 0 ? ch[0] : ch[i - 1];
    std::string prefix = "enc.spectral.block" + std::to_string(i);
    add_conv2d(params, prefix + ".conv1", ch[i], cin, 3, kReluGain, rng);
    add_conv2d(params, prefix + ".conv2", ch[i], ch[i], 3, 1.0, rng);
    add_conv2d(params, prefix + ".proj", ch[i], cin, 1, 1.0, rng);
  }
  params.add("enc.spectral.fc.w", uniform_init({ch.back(), cfg.embed_dim}, ch.back(), 1.0, rng));
  params.add("enc.spectral.fc.b", Tensor::zeros({cfg.embed_dim}));
}

Tensor lstm_final_state(const Tensor& sequence, std::size_t batch,
                        const Tensor& w_ih, const Tensor& w_hh, const Tensor& b) {
  const std::size_t hidden = w_hh.dim(0);
  if (w_hh.dim(1) != 4 * hidden || w_ih.dim(1) != 4 * hidden || b.numel() != 4 * hidden) {
    throw DimensionError("lstm weight shapes are inconsistent");
  }
  if (sequence.dim(0) % batch != 0) {
    throw DimensionError("lstm sequence rows not a multiple of batch");
  }
  const std::size_t steps = sequence.dim(0) / batch;
  Tensor pre = add_row_bias(matmul(sequence, w_ih), b);
  Tensor h, c;
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor gates = slice_rows(pre, t * batch, batch);
    if (t > 0) gates = add(gates, matmul(h, w_hh));
    Tensor i = sigmoid(slice_cols(gates, 0, hidden));
    Tensor f = sigmoid(slice_cols(gates, hidden, hidden));
    Tensor g = tanh(slice_cols(gates, 2 * hidden, hidden));
    Tensor o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
    c = t > 0 ? add(mul(f, c), mul(i, g)) : mul(i, g);
    h = mul(o, tanh(c));
  }
  return h;
}

Tensor temporal_encode(const ParamStore& params, const EncoderConfig& cfg,
                       const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != cfg.segment_length) {
    throw DimensionError("temporal_encode expects (B x 1 x " +
                         std::to_string(cfg.segment_length) + "), got " +
                         shape_str(x.shape()));
  }
  const auto& t = cfg.temporal;
  const std::size_t batch = x.dim(0);
  Tensor y = relu(conv1d(x, params.get("enc.temporal.conv1.w"),
                         params.get("enc.temporal.conv1.b")));
  y = maxpool1d(y, t.pool_size, t.pool_stride);
  y = relu(conv1d(y, params.get("enc.temporal.conv2.w"), params.get("enc.temporal.conv2.b")));
  y = maxpool1d(y, t.pool_size, t.pool_stride);
  return lstm_final_state(time_major(y), batch, params.get("enc.temporal.lstm.w_ih"),
                          params.get("enc.temporal.lstm.w_hh"),
                          params.get("enc.temporal.lstm.b"));
}

Tensor residual_block(const ParamStore& params, const std::string& prefix,
                      const Tensor& x, std::size_t stride) {
  Tensor branch = relu(apply_conv2d(params, prefix + ".conv1", x, stride, 1));
  branch = apply_conv2d(params, prefix + ".conv2", branch, 1, 1);
  Tensor shortcut = params.contains(prefix + ".proj.w")
                        ? apply_conv2d(params, prefix + ".proj", x, stride, 0)
                        : x;
  if (shortcut.shape() != branch.shape()) {
    throw DimensionError("residual block " + prefix + ": shortcut " +
                         shape_str(shortcut.shape()) + " vs branch " +
                         shape_str(branch.shape()));
  }
  return relu(add(branch, shortcut));
}

Tensor spectral_encode(const ParamStore& params, const EncoderConfig& cfg,
                       const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 1 || images.dim(2) != cfg.image_rows ||
      images.dim(3) != cfg.image_cols) {
    throw DimensionError("spectral_encode expects (B x 1 x " +
                         std::to_string(cfg.image_rows) + " x " +
                         std::to_string(cfg.image_cols) + "), got " +
                         shape_str(images.shape()));
  }
  Tensor y = relu(apply_conv2d(params, "enc.spectral.stem", images, 1, 1));
  for (std::size_t i = 0; i < cfg.spectral.channels.size(); ++i) {
    y = residual_block(params, "enc.spectral.block" + std::to_string(i), y, 2);
  }
  y = global_avg_pool2d(y);
  return add_row_bias(matmul(y, params.get("enc.spectral.fc.w")),
                      params.get("enc.spectral.fc.b"));
}

Tensor concat_cross(const Tensor& f_t, const Tensor& f_s) {
  if (f_t.rank() != 2 || f_s.rank() != 2 || f_t.dim(0) != f_s.dim(0)) {
    throw DimensionError("concat_cross: batch mismatch " + shape_str(f_t.shape()) +
                         " vs " + shape_str(f_s.shape()));
  }
  std::vector<Tensor> parts{f_t, f_s};
  return concat_cols(parts);
}

MMHCAN_NAMESPACE_END
