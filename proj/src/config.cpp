#include "mmhcan/config.hpp"

#include <cstdio>
#include <fstream>

MMHCAN_NAMESPACE_BEGIN

using nlohmann::json;

json default_config() {
  return json{
      {"seed", 0},
      {"data",
       {{"source", "synthetic"},
        {"manifest", ""},
        {"per_class", 400},
        {"split", 0.8},
        {"segment_length", 256},
        {"sample_rate_hz", 1000.0},
        {"noise_floor", 0.2},
        {"supply_harmonics", 0.1},
        {"noise_drift", 0.5},
        {"base_freq_hz", 60.0}}},
      {"stft",
       {{"preset", ""},
        {"window", "hann"},
        {"length", 128},
        {"hop", 4},
        {"fft_size", 128},
        {"band_hz", 0.0},
        {"image_rows", 64},
        {"image_cols", 64}}},
      {"model",
       {{"embed_dim", 64},
        {"classes", 4},
        {"temporal",
         {{"conv1_filters", 64},
          {"conv1_kernel", 7},
          {"conv2_filters", 128},
          {"conv2_kernel", 5},
          {"pool_size", 2},
          {"pool_stride", 2}}},
        {"spectral", {{"channels", {8, 16, 32}}}},
        {"hypergraph", {{"k", 5}, {"theta_intra", 0.9}, {"theta_cross", 0.9}}},
        {"hgnn", {{"layers", 2}, {"heads", 4}, {"propagation", "laplacian"}}},
        {"switches",
         {{"w_t", true}, {"w_s", true}, {"w_cr", true}, {"w_cl", true}, {"w_att", true}}}}},
      {"loss", {{"margin", 0.27}, {"lambda", 0.5}, {"mining", "batch_hard"}}},
      {"train",
       {{"lr", 0.0001},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"eps", 1e-8},
        {"epochs", 200},
        {"batch", 32},
        {"val_fraction", 0.1}}},
      {"perturb",
       {{"gaussian", {{"snr_db", 10.0}}},
        {"harmonics", {{"orders", {3, 5, 7}}, {"rel_amp", 0.2}}},
        {"spikes", {{"rel_amp", 0.2}, {"rate", 0.01}}}}},
  };
}

namespace {

bool compatible(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

}  // namespace

void merge_config(json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    std::string key = join(prefix, it.key());
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_config(slot, it.value(), key);
    } else {
      if (!compatible(slot, it.value())) {
        throw ConfigError("config key '" + key + "' expects " + slot.type_name() + ", got " +
                          it.value().type_name());
      }
      slot = it.value();
    }
  }
}

void apply_override(json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json overlay = value;
  std::size_t end = key.size();
  while (true) {
    auto dot = key.rfind('.', end - 1);
    std::size_t start = dot == std::string::npos ? 0 : dot + 1;
    std::string part = key.substr(start, end - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    overlay = json{{part, overlay}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_config(doc, overlay);
}

std::string config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

template <class T>
T get(const json& doc, const char* section, const char* key) {
  try {
    return doc.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + section + "." + key + "': " + e.what());
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace

Settings settings_from_json(const json& doc) {
  Settings s;
  s.effective = doc;
  s.hash = config_hash(doc);
  try {
    const json& seed = doc.at("seed");
    if (!seed.is_number_integer() || seed.get<long long>() < 0) {
      throw ConfigError("seed must be a non-negative integer");
    }
    s.seed = seed.get<std::uint64_t>();

    const json& d = doc.at("data");
    s.data.source = d.at("source").get<std::string>();
    if (s.data.source != "synthetic" && s.data.source != "manifest") {
      throw ConfigError("data.source must be 'synthetic' or 'manifest'");
    }
    s.data.manifest = d.at("manifest").get<std::string>();
    s.data.per_class = get_count(d.at("per_class"), "data.per_class");
    s.data.split = d.at("split").get<double>();
    s.data.segment_length = get_count(d.at("segment_length"), "data.segment_length");
    s.data.sample_rate_hz = d.at("sample_rate_hz").get<double>();
    s.data.noise_floor = d.at("noise_floor").get<double>();
    s.data.supply_harmonics = d.at("supply_harmonics").get<double>();
    s.data.noise_drift = d.at("noise_drift").get<double>();
    s.data.base_freq_hz = d.at("base_freq_hz").get<double>();
    if (!(s.data.split > 0 && s.data.split < 1)) throw ConfigError("data.split must be in (0, 1)");
    if (!(s.data.sample_rate_hz > 0)) throw ConfigError("data.sample_rate_hz must be > 0");
    if (!(s.data.noise_floor >= 0)) throw ConfigError("data.noise_floor must be >= 0");
    if (!(s.data.supply_harmonics >= 0 && s.data.supply_harmonics <= 1)) {
      throw ConfigError("data.supply_harmonics must be in [0, 1]");
    }
    if (!(s.data.noise_drift >= 0 && s.data.noise_drift < 1)) {
      throw ConfigError("data.noise_drift must be in [0, 1)");
    }
    if (s.data.source == "manifest" && s.data.manifest.empty()) {
      throw ConfigError("data.source=manifest needs data.manifest");
    }

    const json& st = doc.at("stft");
    s.preset = st.at("preset").get<std::string>();
    s.window.kind = parse_window_kind(st.at("window").get<std::string>());
    s.window.length = get_count(st.at("length"), "stft.length");
    s.window.hop = get_count(st.at("hop"), "stft.hop");
    s.window.fft_size = get_count(st.at("fft_size"), "stft.fft_size");
    s.window.band_limit_hz = st.at("band_hz").get<double>();
    if (!s.preset.empty()) {
      const json defaults = default_config().at("stft");
      for (const char* k : {"window", "length", "hop", "fft_size", "band_hz"}) {
        if (st.at(k) != defaults.at(k)) {
          throw ConfigError(std::string("stft.") + k + " cannot be combined with stft.preset");
        }
      }
      RegimePreset p = regime_preset(s.preset);
      s.window = p.window;
      s.data.sample_rate_hz = p.sample_rate_hz;
      s.data.segment_length = p.segment_length;
    }
    try {
      validate(s.window);
    } catch (const ContractError& e) {
      throw ConfigError(std::string("stft: ") + e.what());
    }

    const json& m = doc.at("model");
    auto& enc = s.model.encoder;
    enc.embed_dim = get_count(m.at("embed_dim"), "model.embed_dim");
    enc.segment_length = s.data.segment_length;
    enc.image_rows = get_count(st.at("image_rows"), "stft.image_rows");
    enc.image_cols = get_count(st.at("image_cols"), "stft.image_cols");
    const json& t = m.at("temporal");
    enc.temporal.conv1_filters = get_count(t.at("conv1_filters"), "model.temporal.conv1_filters");
    enc.temporal.conv1_kernel = get_count(t.at("conv1_kernel"), "model.temporal.conv1_kernel");
    enc.temporal.conv2_filters = get_count(t.at("conv2_filters"), "model.temporal.conv2_filters");
    enc.temporal.conv2_kernel = get_count(t.at("conv2_kernel"), "model.temporal.conv2_kernel");
    enc.temporal.pool_size = get_count(t.at("pool_size"), "model.temporal.pool_size");
    enc.temporal.pool_stride = get_count(t.at("pool_stride"), "model.temporal.pool_stride");
    enc.spectral.channels.clear();
    for (const auto& c : m.at("spectral").at("channels")) {
      enc.spectral.channels.push_back(get_count(c, "model.spectral.channels"));
    }
    s.model.classes = get_count(m.at("classes"), "model.classes");
    const json& hg = m.at("hypergraph");
    s.model.graph.k = get_count(hg.at("k"), "model.hypergraph.k");
    s.model.graph.theta_intra = hg.at("theta_intra").get<double>();
    s.model.graph.theta_cross = hg.at("theta_cross").get<double>();
    const json& hn = m.at("hgnn");
    s.model.hgnn.layers = get_count(hn.at("layers"), "model.hgnn.layers");
    s.model.hgnn.heads = get_count(hn.at("heads"), "model.hgnn.heads");
    s.model.hgnn.propagation = parse_propagation(hn.at("propagation").get<std::string>());
    const json& sw = m.at("switches");
    s.model.switches = {sw.at("w_t").get<bool>(), sw.at("w_s").get<bool>(),
                        sw.at("w_cr").get<bool>(), sw.at("w_cl").get<bool>(),
                        sw.at("w_att").get<bool>()};
    validate(s.model);

    s.loss.margin = get<double>(doc, "loss", "margin");
    s.loss.lambda = get<double>(doc, "loss", "lambda");
    s.loss.mining = parse_mining(get<std::string>(doc, "loss", "mining"));
    validate(s.loss);

    const json& tr = doc.at("train");
    s.train.adam.lr = tr.at("lr").get<double>();
    s.train.adam.beta1 = tr.at("beta1").get<double>();
    s.train.adam.beta2 = tr.at("beta2").get<double>();
    s.train.adam.eps = tr.at("eps").get<double>();
    s.train.epochs = get_count(tr.at("epochs"), "train.epochs");
    s.train.batch = get_count(tr.at("batch"), "train.batch");
    s.train.val_fraction = tr.at("val_fraction").get<double>();
    s.train.seed = s.seed;
    validate(s.train);

    const json& pt = doc.at("perturb");
    s.gaussian.snr_db = pt.at("gaussian").at("snr_db").get<double>();
    s.harmonics.orders = pt.at("harmonics").at("orders").get<std::vector<int>>();
    s.harmonics.rel_amp = pt.at("harmonics").at("rel_amp").get<double>();
    s.harmonics.base_freq_hz = s.data.base_freq_hz;
    s.harmonics.sample_rate_hz = s.data.sample_rate_hz;
    s.spikes.rel_amp = pt.at("spikes").at("rel_amp").get<double>();
    s.spikes.rate = pt.at("spikes").at("rate").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return s;
}

Settings load_settings(const std::optional<std::filesystem::path>& file,
                       std::span<const std::string> overrides,
                       std::optional<std::uint64_t> seed) {
  json doc = default_config();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    json user = json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ConfigError("config file " + file->string() + " is not valid JSON");
    merge_config(doc, user);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  if (seed) doc["seed"] = *seed;
  return settings_from_json(doc);
}

MMHCAN_NAMESPACE_END
