#include "mmhcan/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mmhcan/errors.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Segments whose spread is below this fraction of their scale are constant.
constexpr double kDegenerateSigma = 1e-12;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void check_rel_amp(double a, const char* what) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw ContractError(std::string(what) + " rel_amp must be in (0, 1]");
  }
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

std::string to_string(Channel c) {
  return c == Channel::kCurrent ? "current" : "vibration";
}

Channel parse_channel(const std::string& name) {
  if (name == "current") return Channel::kCurrent;
  if (name == "vibration") return Channel::kVibration;
  throw ConfigError("unknown channel '" + name + "'");
}

void validate(const SynthClassSpec& spec) {
  if (!(spec.base_freq_hz > 0)) throw ContractError("base_freq_hz must be > 0");
  if (spec.noise_floor < 0) throw ContractError("noise_floor must be >= 0");
  if (!(spec.supply_harmonics >= 0 && spec.supply_harmonics <= 1)) {
    throw ContractError("supply_harmonics must be in [0, 1]");
  }
  if (!(spec.noise_drift >= 0 && spec.noise_drift < 1)) {
    throw ContractError("noise_drift must be in [0, 1)");
  }
  std::visit(Overloaded{
                 [](const signature::Healthy&) {},
                 [&](const signature::Sidebands& s) {
                   check_rel_amp(s.rel_amp, "sidebands");
                   if (!(s.offset_hz > 0 && s.offset_hz < spec.base_freq_hz)) {
                     throw ContractError(
                         "sideband offset must lie in (0, base_freq_hz)");
                   }
                 },
                 [](const signature::ImpulseTrain& s) {
                   check_rel_amp(s.rel_amp, "impulse_train");
                   if (!(s.rate_hz > 0 && s.decay_s > 0)) {
                     throw ContractError("impulse rate and decay must be > 0");
                   }
                 },
                 [](const signature::HarmonicImbalance& s) {
                   if (s.orders.empty() || s.orders.size() != s.rel_amps.size()) {
                     throw ContractError(
                         "harmonic orders and rel_amps must pair up");
                   }
                   for (double a : s.rel_amps) check_rel_amp(a, "harmonic");
                   for (int k : s.orders) {
                     if (k < 2) throw ContractError("harmonic order must be >= 2");
                   }
                 },
             },
             spec.signature);
}

SignalSegment normalize(std::span<const double> values, int label,
                        Channel channel) {
  SignalSegment seg;
  seg.label = label;
  seg.channel = channel;
  const double n = static_cast<double>(values.size());
  double mu = 0;
  for (double v : values) mu += v;
  mu /= n;
  double var = 0;
  for (double v : values) var += (v - mu) * (v - mu);
  var /= n;
  double sigma = std::sqrt(var);
  seg.mu = mu;
  seg.values.resize(values.size());
  if (sigma <= kDegenerateSigma * std::max(1.0, std::abs(mu))) {
    seg.sigma = 0;
    seg.degenerate = true;
    std::fill(seg.values.begin(), seg.values.end(), 0.0);
    return seg;
  }
  seg.sigma = sigma;
  for (std::size_t i = 0; i < values.size(); ++i) {
    seg.values[i] = (values[i] - mu) / sigma;
  }
  return seg;
}

std::vector<SignalSegment> segment(const RawSignal& signal, std::size_t length) {
  if (length < 2) throw ContractError("segment length must be >= 2");
  if (length > signal.samples.size()) {
    throw DataError("segment length " + std::to_string(length) +
                    " exceeds signal length " +
                    std::to_string(signal.samples.size()) +
                    "; no segments produced");
  }
  std::size_t count = signal.samples.size() / length;
  std::vector<SignalSegment> out;
  out.reserve(count);
  std::span<const double> all(signal.samples);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(normalize(all.subspan(i * length, length), signal.label,
                            signal.channel));
  }
  return out;
}

RawSignal synthesize(const SynthClassSpec& spec, double duration_s,
                     double sample_rate_hz, std::uint64_t seed, int label) {
  validate(spec);
  if (!(sample_rate_hz > 0)) throw ContractError("sample_rate_hz must be > 0");
  auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  if (n < 2) throw ContractError("duration x rate must give >= 2 samples");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double f0 = spec.base_freq_hz;
  const double phi0 = phase(rng);

  RawSignal sig;
  sig.sample_rate_hz = sample_rate_hz;
  sig.label = label;
  sig.channel = spec.channel;
  sig.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / sample_rate_hz;
    sig.samples[i] = std::sin(kTwoPi * f0 * t + phi0);
  }

  std::visit(
      Overloaded{
          [](const signature::Healthy&) {},
          [&](const signature::Sidebands& s) {
            double lo = phase(rng), hi = phase(rng);
            for (std::size_t i = 0; i < n; ++i) {
              double t = static_cast<double>(i) / sample_rate_hz;
              sig.samples[i] += s.rel_amp * (std::sin(kTwoPi * (f0 - s.offset_hz) * t + lo) +
                                             std::sin(kTwoPi * (f0 + s.offset_hz) * t + hi));
            }
          },
          [&](const signature::ImpulseTrain& s) {
            const double period = 1.0 / s.rate_hz;
            const double start = std::uniform_real_distribution<double>(0.0, period)(rng);
            for (std::size_t i = 0; i < n; ++i) {
              double t = static_cast<double>(i) / sample_rate_hz;
              if (t < start) continue;
              double tau = std::fmod(t - start, period);
              sig.samples[i] += s.rel_amp * std::exp(-tau / s.decay_s) *
                                std::sin(kTwoPi * s.resonance_hz * tau);
            }
          },
          [&](const signature::HarmonicImbalance& s) {
            for (std::size_t h = 0; h < s.orders.size(); ++h) {
              double ph = phase(rng);
              double k = s.orders[h];
              for (std::size_t i = 0; i < n; ++i) {
                double t = static_cast<double>(i) / sample_rate_hz;
                sig.samples[i] += s.rel_amps[h] * std::sin(kTwoPi * k * f0 * t + ph);
              }
            }
          },
      },
      spec.signature);

  if (spec.supply_harmonics > 0) {
    std::uniform_real_distribution<double> drift_hz(0.02, 0.2);
    for (int k : {3, 5, 7}) {
      double ph = phase(rng), drift_ph = phase(rng), rate = drift_hz(rng);
      for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / sample_rate_hz;
        double amp = spec.supply_harmonics * 0.5 * (1 - std::cos(kTwoPi * rate * t + drift_ph));
        sig.samples[i] += amp * std::sin(kTwoPi * k * f0 * t + ph);
      }
    }
  }

  if (spec.noise_floor > 0) {
    std::normal_distribution<double> noise(0.0, spec.noise_floor);
    double drift_ph = phase(rng);
    double rate = std::uniform_real_distribution<double>(0.02, 0.2)(rng);
    for (std::size_t i = 0; i < n; ++i) {
      double t = static_cast<double>(i) / sample_rate_hz;
      double scale = 1 + spec.noise_drift * std::sin(kTwoPi * rate * t + drift_ph);
      sig.samples[i] += scale * noise(rng);
    }
  }
  return sig;
}

RawSignal ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  RawSignal sig;
  sig.sample_rate_hz = schema.sample_rate_hz;
  sig.label = schema.label;
  sig.channel = schema.channel;
  if (!(sig.sample_rate_hz > 0)) throw DataError("sample_rate_hz must be > 0");

  std::string line;
  std::size_t line_no = 0;
  bool header_pending = schema.skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string text = trim(line);
    if (text.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (schema.value_column >= fields.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": missing column " + std::to_string(schema.value_column));
    }
    const std::string& cell = fields[schema.value_column];
    double value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed numeric value '" + cell + "'");
    }
    sig.samples.push_back(value);
  }
  if (sig.samples.empty()) throw DataError(path.string() + ": no samples");
  return sig;
}

void export_csv(const RawSignal& signal, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[64];
  for (double v : signal.samples) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
    out.put('\n');
  }
}

DatasetSplit split_segments(std::vector<SignalSegment> segments, double split,
                            std::uint64_t seed) {
  if (!(split > 0.0 && split < 1.0)) throw ContractError("split must be in (0, 1)");
  std::map<int, std::vector<SignalSegment>> by_class;
  for (auto& s : segments) by_class[s.label].push_back(std::move(s));
  if (by_class.empty()) throw DataError("dataset has no segments");
  std::size_t per_class = SIZE_MAX;
  for (const auto& [_, v] : by_class) per_class = std::min(per_class, v.size());
  if (per_class < 2) throw DataError("need >= 2 segments per class");
  auto n_train = static_cast<std::size_t>(std::llround(per_class * split));
  if (n_train == 0 || n_train >= per_class) {
    throw DataError("per-class count " + std::to_string(per_class) +
                    " too small for split " + std::to_string(split));
  }
  DatasetSplit out;
  std::mt19937_64 rng(seed);
  for (auto& [label, items] : by_class) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(per_class);
    for (std::size_t i = 0; i < per_class; ++i) {
      auto& dst = i < n_train ? out.train : out.test;
      dst.push_back(std::move(items[order[i]]));
    }
  }
  return out;
}

DatasetSplit make_dataset(const std::vector<SynthClassSpec>& specs,
                          std::size_t per_class, double split,
                          std::size_t segment_length, double sample_rate_hz,
                          std::uint64_t seed) {
  if (specs.size() < 2) throw ContractError("need >= 2 classes");
  if (per_class < 2) throw ContractError("per_class must be >= 2");
  std::vector<SignalSegment> all;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    double duration = static_cast<double>(per_class * segment_length) / sample_rate_hz;
    RawSignal raw = synthesize(specs[c], duration, sample_rate_hz,
                               seed * 1000003ULL + c + 1, static_cast<int>(c));
    auto segs = segment(raw, segment_length);
    segs.resize(per_class);
    for (auto& s : segs) all.push_back(std::move(s));
  }
  return split_segments(std::move(all), split, seed);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  std::vector<ManifestEntry> out;
  auto base = path.parent_path();
  try {
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      std::filesystem::path p = e.at("path").get<std::string>();
      entry.path = p.is_absolute() ? p : base / p;
      entry.schema.label = e.at("label").get<int>();
      entry.schema.sample_rate_hz = e.at("sample_rate_hz").get<double>();
      entry.schema.channel = parse_channel(e.value("channel", std::string("current")));
      entry.schema.value_column = e.value("value_column", std::size_t{0});
      entry.schema.skip_header = e.value("skip_header", false);
      out.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  if (out.empty()) throw DataError("manifest " + path.string() + " lists no files");
  return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["version"] = 1;
  auto list = nlohmann::json::array();
  auto base = path.parent_path();
  for (const auto& e : entries) {
    list.push_back({{"path", e.path.lexically_relative(base).generic_string()},
                    {"label", e.schema.label},
                    {"channel", to_string(e.schema.channel)},
                    {"sample_rate_hz", e.schema.sample_rate_hz},
                    {"value_column", e.schema.value_column},
                    {"skip_header", e.schema.skip_header}});
  }
  doc["entries"] = std::move(list);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<SynthClassSpec> default_benchmark_classes(double noise_floor,
                                                     double supply_harmonics,
                                                     double noise_drift) {
  std::vector<SynthClassSpec> specs(4);
  specs[0].signature = signature::Healthy{};
  specs[1].signature = signature::Sidebands{20.0, 0.35};
  specs[2].signature = signature::ImpulseTrain{25.0, 0.006, 0.8, 250.0};
  specs[3].signature = signature::HarmonicImbalance{{2, 4}, {0.35, 0.25}};
  for (auto& s : specs) {
    s.base_freq_hz = 60.0;
    s.noise_floor = noise_floor;
    s.supply_harmonics = supply_harmonics;
    s.noise_drift = noise_drift;
  }
  return specs;
}

MMHCAN_NAMESPACE_END
