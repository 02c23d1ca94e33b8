#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmhcan/tensor.hpp"

MMHCAN_NAMESPACE_BEGIN

inline constexpr const char* kCheckpointMagic = "MMHCAN-CKPT-1";

/// Named learnable tensors in registration order.
class ParamStore {
 public:
  // Registers a leaf tensor with requires_grad on; names must be unique.
  Tensor& add(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();

  // Copies values from `other` into matching entries; names and shapes must
  // agree exactly.
  void assign_from(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Every parameter must carry a gradient; ContractError otherwise.
  void step(ParamStore& params);
  std::size_t steps_taken() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> moments_;
};

// Checkpoint: first line is the magic string, then one JSON document
// {"precision": ..., "params": [{"name","shape","values"}...], "meta": {...}}.
void save_checkpoint(const ParamStore& params, const std::filesystem::path& path,
                     const std::string& meta_json = "{}");
ParamStore load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_meta(const std::filesystem::path& path);

MMHCAN_NAMESPACE_END
