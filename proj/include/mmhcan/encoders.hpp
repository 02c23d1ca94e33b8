#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mmhcan/params.hpp"

MMHCAN_NAMESPACE_BEGIN

struct TemporalConfig {
  std::size_t conv1_filters = 64;
  std::size_t conv1_kernel = 7;
  std::size_t conv2_filters = 128;
  std::size_t conv2_kernel = 5;
  std::size_t pool_size = 2;
  std::size_t pool_stride = 2;
};

struct SpectralConfig {
  // Output channels of the stem and of each residual block; every block
  // halves the spatial extent.
  std::vector<std::size_t> channels = {8, 16, 32};
};

struct EncoderConfig {
  std::size_t embed_dim = 64;
  std::size_t segment_length = 256;
  std::size_t image_rows = 64;
  std::size_t image_cols = 64;
  TemporalConfig temporal;
  SpectralConfig spectral;
};

// Sequence length reaching the recurrent cell; ConfigError when any stage
// would be empty.
std::size_t temporal_steps(const EncoderConfig& cfg);
void validate(const EncoderConfig& cfg);

using Rng = std::mt19937_64;

// Fan-in scaled uniform initializer, U(-bound, bound) with bound = gain/sqrt(fan_in).
Tensor uniform_init(Shape shape, std::size_t fan_in, double gain, Rng& rng);

void init_temporal(ParamStore& params, const EncoderConfig& cfg, Rng& rng);
void init_spectral(ParamStore& params, const EncoderConfig& cfg, Rng& rng);

// Single-layer LSTM over `sequence` ((steps*B) x in, time-major), returning the
// final hidden state (B x hidden). Weights: w_ih (in x 4H), w_hh (H x 4H),
// b (4H), gate order i, f, g, o.
Tensor lstm_final_state(const Tensor& sequence, std::size_t batch,
                        const Tensor& w_ih, const Tensor& w_hh, const Tensor& b);

// x (B x 1 x T) -> f_t (B x D)
Tensor temporal_encode(const ParamStore& params, const EncoderConfig& cfg,
                       const Tensor& x);

// out = relu(F(x) + shortcut(x)), F = conv3x3(relu(conv3x3_stride(x))).
// The shortcut is a strided 1x1 projection named `<prefix>.proj.*` when
// present in `params`, identity otherwise.
Tensor residual_block(const ParamStore& params, const std::string& prefix,
                      const Tensor& x, std::size_t stride);

// images (B x 1 x rows x cols) -> f_s (B x D)
Tensor spectral_encode(const ParamStore& params, const EncoderConfig& cfg,
                       const Tensor& images);

// f_c = [f_t | f_s]
Tensor concat_cross(const Tensor& f_t, const Tensor& f_s);

MMHCAN_NAMESPACE_END
