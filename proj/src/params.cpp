#include "mmhcan/params.hpp"

#include <cmath>
#include <fstream>
#include "json.hpp"
#include <sstream>

MMHCAN_NAMESPACE_BEGIN

using nlohmann::json;

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw ContractError("duplicate parameter " + name);
  value.set_requires_grad(true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(value));
  return entries_.back().second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return entries_[it->second].second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return entries_[it->second].second;
}

bool ParamStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) {
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  }
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

void ParamStore::assign_from(const ParamStore& other) {
  if (other.size() != size()) {
    throw ContractError("parameter sets differ in size: " +
                        std::to_string(other.size()) + " vs " +
                        std::to_string(size()));
  }
  for (auto& [name, t] : entries_) {
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) {
      throw DimensionError("parameter " + name + " has shape " +
                           shape_str(src.shape()) + ", expected " +
                           shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(src.data().begin(), src.data().end(), dst.begin());
  }
}

void Adam::step(ParamStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    if (!p.has_grad()) {
      throw ContractError("adam_step: parameter " + name + " has no gradient");
    }
  }
  for (auto& [name, p] : params) {
    auto& mom = moments_[name];
    auto g = p.grad();
    if (mom.m.empty()) {
      mom.m.assign(g.size(), 0.0);
      mom.v.assign(g.size(), 0.0);
    }
    auto w = p.mutable_data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double gi = g[i];
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * gi;
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * gi * gi;
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      w[i] = static_cast<Scalar>(w[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path,
                     const std::string& meta_json) {
  json doc;
  doc["precision"] = kPrecisionName;
  doc["meta"] = json::parse(meta_json);
  json list = json::array();
  for (const auto& [name, t] : params) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["values"] = std::vector<Scalar>(t.data().begin(), t.data().end());
    list.push_back(std::move(entry));
  }
  doc["params"] = std::move(list);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n' << doc.dump() << '\n';
}

namespace {

json read_checkpoint_doc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) {
    throw DataError(path.string() + " is not an " + kCheckpointMagic +
                    " checkpoint");
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace

ParamStore load_checkpoint(const std::filesystem::path& path) {
  json doc = read_checkpoint_doc(path);
  ParamStore store;
  for (const auto& entry : doc.at("params")) {
    Shape shape = entry.at("shape").get<Shape>();
    std::vector<Scalar> values;
    for (const auto& v : entry.at("values")) values.push_back(v.get<double>());
    store.add(entry.at("name").get<std::string>(),
              Tensor(std::move(shape), std::move(values)));
  }
  return store;
}

std::string checkpoint_meta(const std::filesystem::path& path) {
  return read_checkpoint_doc(path).at("meta").dump();
}

MMHCAN_NAMESPACE_END
