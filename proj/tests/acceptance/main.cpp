#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "gradient_suite.hpp"
#include "mmhcan/commands.hpp"
#include "oracle_checks.hpp"
#include "oracles.hpp"

using namespace mmhcan;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string summary;
};

// ---- 1: gradient integrity -------------------------------------------------

Verdict gradient_integrity() {
  const std::size_t cases = 100;
  auto t0 = Clock::now();
  auto r32 = run_gradient_suite_f32(cases, 20240611);
  auto r64 = run_gradient_suite_f64(cases, 20240611);
  double secs = seconds_since(t0);
  double worst32 = 0, worst64 = 0;
  bool enough = r32.size() == 7 && r64.size() == 7;
  for (std::size_t i = 0; i < r32.size(); ++i) {
    std::printf("    %-17s f32 max %.2e mean %.2e | f64 max %.2e mean %.2e (%zu cases)\n",
                r32[i].op.c_str(), r32[i].max_rel_error, r32[i].mean_rel_error,
                r64[i].max_rel_error, r64[i].mean_rel_error, r32[i].cases);
    worst32 = std::max(worst32, r32[i].max_rel_error);
    worst64 = std::max(worst64, r64[i].max_rel_error);
    enough = enough && r32[i].cases >= cases && r64[i].cases >= cases;
  }
  bool pass = enough && worst32 < 1e-3 && worst64 < 1e-5 && secs < 120;
  return {pass, fmt("7 ops x %zu cases, f32 max rel err %.2e (< 1e-3), f64 max %.2e (< 1e-5), %.1f s (< 120 s)",
                    cases, worst32, worst64, secs)};
}

// ---- 2: hypergraph spectral suite --------------------------------------------

Verdict hypergraph_spectral() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  double asym = 0, min_quad = INFINITY, max_eig = -INFINITY, null_res = 0;
  const int graphs = 500;
  for (int it = 0; it < graphs; ++it) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(2, 32)(rng);
    std::size_t p = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    std::size_t k = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    double theta = std::uniform_real_distribution<double>(-1, 0.95)(rng);
    RealMatrix profiles{n, p, std::vector<double>(n * p)};
    for (auto& v : profiles.data) v = g(rng);
    Hypergraph hg = build_hyperedges(profiles, k, theta);
    Eigen::MatrixXd l(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) l(i, j) = hg.laplacian(i, j);
    asym = std::max(asym, (l - l.transpose()).cwiseAbs().maxCoeff());
    for (int trial = 0; trial < 8; ++trial) {
      Eigen::VectorXd x(n);
      for (std::size_t i = 0; i < n; ++i) x(i) = g(rng);
      min_quad = std::min(min_quad, x.dot(l * x));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    min_quad = std::min(min_quad, es.eigenvalues().minCoeff());
    max_eig = std::max(max_eig, es.eigenvalues().maxCoeff());
    Eigen::VectorXd s(n);
    for (std::size_t i = 0; i < n; ++i) s(i) = std::sqrt(hg.node_degree[i]);
    null_res = std::max(null_res, (l * s).cwiseAbs().maxCoeff());
  }
  Hypergraph one = from_incidence(1, 1, {1});
  Hypergraph two = from_incidence(2, 1, {1, 1});
  bool hand = one.laplacian.data == std::vector<double>{0.0} &&
              two.laplacian.data == std::vector<double>{0.5, -0.5, -0.5, 0.5};
  bool pass = asym <= 1e-6 && min_quad >= -1e-6 && max_eig <= 1 + 1e-6 && null_res < 1e-6 && hand;
  return {pass, fmt("%d graphs: max|L-L^T| %.1e, min x'Lx %.1e, max eig %.9f, max|L Dv^1/2 1| %.1e, hand cases %s",
                    graphs, asym, min_quad, max_eig, null_res, hand ? "exact" : "WRONG")};
}

// ---- 3: oracle equivalence ---------------------------------------------------

Verdict oracle_equivalence() {
  auto r = acceptance::check_oracle_equivalence(400, 3);
  bool pass = r.integer_mismatches == 0 && r.max_real_error <= 1e-6;
  std::string s = fmt("%zu instances (<= 32 samples): %zu integer mismatches, max real error %.1e (<= 1e-6)",
                      r.instances, r.integer_mismatches, r.max_real_error);
  if (!r.first_failure.empty()) s += "; first failure: " + r.first_failure;
  return {pass, s};
}

// ---- 4: STFT fidelity --------------------------------------------------------

Verdict stft_fidelity() {
  double worst = 0;
  std::size_t frames_checked = 0;
  struct Case {
    WindowSpec w;
    double fs;
    std::size_t len;
  };
  std::vector<Case> cases{{{WindowKind::kHann, 128, 4, 128, 0}, 1000, 256},
                          {{WindowKind::kHann, 100, 25, 128, 0}, 1000, 400},
                          {{WindowKind::kBlackmanHarris, 256, 64, 512, 0}, 51200, 1024},
                          {{WindowKind::kHann, 500, 125, 512, 0}, 10000, 2000}};
  std::mt19937_64 rng(4);
  for (const auto& c : cases) {
    for (int tone = 0; tone < 3; ++tone) {
      double f = std::uniform_real_distribution<double>(1, c.fs / 2)(rng);
      double a = std::uniform_real_distribution<double>(0.5, 2)(rng);
      double ph = std::uniform_real_distribution<double>(0, 6.28)(rng);
      std::vector<double> x(c.len);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = a * std::sin(2 * std::numbers::pi * f * i / c.fs + ph);
      auto frames = stft(x, c.w);
      auto win = make_window(c.w.kind, c.w.length);
      for (std::size_t fr = 0; fr < frames.frames; ++fr, ++frames_checked) {
        std::vector<std::complex<double>> buf(c.w.fft_size);
        for (std::size_t i = 0; i < c.w.length; ++i) buf[i] = x[fr * c.w.hop + i] * win[i];
        auto ref = oracle::dft(buf);
        for (std::size_t b = 0; b < frames.bins; ++b) worst = std::max(worst, std::abs(frames(fr, b) - ref[b]));
      }
    }
  }
  struct Expect {
    const char* name;
    double resolution;  // sample rate / FFT size
    double quoted;      // rounded value as quoted for the regime
    double quoted_step;
  };
  bool presets = true;
  std::string res;
  for (auto e : {Expect{"rotor", 10000.0 / 2048, 4.88, 0.01}, Expect{"bearing", 51200.0 / 512, 100, 1},
                 Expect{"stator-vib", 25600.0 / 1024, 25, 1}, Expect{"stator-cur", 100000.0 / 8192, 12.2, 0.1}}) {
    auto p = regime_preset(e.name);
    double r = p.sample_rate_hz / static_cast<double>(p.window.fft_size);
    double rounded = std::round(r / e.quoted_step) * e.quoted_step;
    presets = presets && r == e.resolution && std::abs(rounded - e.quoted) < 1e-9;
    res += fmt(" %s %.7g Hz", e.name, r);
  }
  bool pass = worst < 1e-4 && presets;
  return {pass, fmt("%zu frames vs naive DFT, max |diff| %.1e (< 1e-4); presets:", frames_checked, worst) + res};
}

// ---- 5-7: desk-scale benchmark ----------------------------------------------

struct Benchmark {
  Settings base;
  std::vector<AblationRow> rows;
  std::vector<double> train_seconds;
  fs::path dir;
};

const std::vector<BlockSwitches>& chain_rows() {
  static const std::vector<BlockSwitches> rows{
      {true, false, false, false, false}, {true, true, false, false, false},
      {true, true, true, false, false},   {true, true, true, true, false},
      {true, true, true, true, true}};
  return rows;
}

std::size_t benchmark_epochs = 40;

Benchmark& benchmark(const fs::path& work) {
  static std::optional<Benchmark> b;
  if (b) return *b;
  b.emplace();
  std::vector<std::string> over{"train.lr=0.001",
                                "train.epochs=" + std::to_string(benchmark_epochs)};
  b->base = load_settings(std::nullopt, over, 0);
  b->dir = work / "benchmark";
  fs::remove_all(b->dir);
  std::ofstream log(work / "benchmark.log");
  for (const auto& sw : chain_rows()) {
    auto t0 = Clock::now();
    std::vector<BlockSwitches> one{sw};
    auto row = run_ablation(b->base, b->dir, log, one);
    b->train_seconds.push_back(seconds_since(t0));
    b->rows.push_back(row.front());
    std::printf("    %-28s acc %.4f  f1 %.4f  (%.0f s)\n", sw.label().c_str(), row.front().metrics.accuracy,
                row.front().metrics.macro_f1, b->train_seconds.back());
    std::fflush(stdout);
  }
  return *b;
}

Verdict desk_learning(const fs::path& work) {
  auto& b = benchmark(work);
  const auto& full = b.rows.back();
  auto meta = nlohmann::json::parse(
      checkpoint_meta(b.dir / "ablate" / full.switches.label() / "checkpoint.ckpt"));
  double secs = b.train_seconds.back();
  const auto& s = b.base;
  bool pass = full.metrics.accuracy >= 0.95 && s.train.epochs <= 60 && secs < 600 &&
              s.data.per_class == 400 && s.model.encoder.embed_dim == 64 &&
              s.model.encoder.image_rows == 64 && s.model.encoder.image_cols == 64;
  return {pass, fmt("full model, 4 classes x 400, D=%zu, %zux%zu images: test acc %.4f (>= 0.95) after %zu epochs "
                    "(best val epoch %zu), %.0f s (< 600 s)",
                    s.model.encoder.embed_dim, s.model.encoder.image_rows, s.model.encoder.image_cols,
                    full.metrics.accuracy, s.train.epochs, meta.at("best_epoch").get<std::size_t>(), secs)};
}

Verdict ablation_ordering(const fs::path& work) {
  auto& b = benchmark(work);
  bool pass = true;
  std::string chain;
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    double acc = 100 * b.rows[i].metrics.accuracy;
    if (i > 0) {
      double prev = 100 * b.rows[i - 1].metrics.accuracy;
      bool ok = prev <= acc + 0.5;
      pass = pass && ok;
      chain += ok ? " <= " : " > ";
    }
    chain += fmt("%.2f", acc);
  }
  return {pass, "accuracy % ({w_t}, +w_s, +w_cr, +w_cl, +w_att) with 0.5-pt slack: " + chain};
}

Verdict robustness(const fs::path& work) {
  auto& b = benchmark(work);
  const auto& full = b.rows.back();
  Settings s = settings_with_switches(b.base, full.switches);
  Model model(s.model, load_checkpoint(b.dir / "ablate" / full.switches.label() / "checkpoint.ckpt"));
  DatasetSplit split = load_dataset(s);
  auto rows = run_robustness(s, model, split.test);
  write_robustness_csv(rows, b.dir / "robustness.csv");
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    if (r.kind == "clean") {
      detail += fmt("clean %.2f%%", 100 * r.metrics.accuracy);
      continue;
    }
    bool ok = -r.delta <= 0.05 + 1e-12;
    pass = pass && ok;
    detail += fmt(", %s drop %.2f pt", r.kind.c_str(), -100 * r.delta);
  }
  double worst_snr = 0;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const auto& x = split.test[i].values;
    auto y = perturb(x, s.gaussian, 1000 + i);
    worst_snr = std::max(worst_snr, std::abs(snr_db(x, y) - 10.0));
  }
  double mean_snr = rows[1].realized_snr_db.value_or(NAN);
  pass = pass && std::abs(mean_snr - 10) <= 0.1 && worst_snr <= 0.1;
  return {pass, detail + fmt(" (<= 5 pt each); realized SNR mean %.4f dB, max |SNR-10| %.1e dB (<= 0.1)",
                             mean_snr, worst_snr)};
}

// ---- 8: determinism ----------------------------------------------------------

std::map<std::string, std::string> snapshot_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).generic_string()] = ss.str();
  }
  return out;
}

Verdict determinism(const fs::path& work) {
  const fs::path dir = work / "determinism";
  const fs::path cfg = work / "determinism.json";
  std::ofstream(cfg) << R"({
  "data": {"per_class": 16, "segment_length": 64},
  "stft": {"length": 32, "hop": 4, "fft_size": 32, "image_rows": 16, "image_cols": 16},
  "model": {"embed_dim": 8, "temporal": {"conv1_filters": 6, "conv1_kernel": 5,
            "conv2_filters": 8, "conv2_kernel": 3}, "spectral": {"channels": [4, 8]},
            "hypergraph": {"k": 3}, "hgnn": {"heads": 2}},
  "train": {"epochs": 3, "batch": 8, "lr": 0.01}
})";
  auto pipeline = [&](std::string& log_text) {
    fs::remove_all(dir);
    std::ostringstream log;
    for (const char* cmd : {"gen-data", "train", "eval", "perturb-eval", "ablate", "report"}) {
      CommandOptions o;
      o.command = cmd;
      o.config = cfg;
      o.out = dir;
      o.seed = 11;
      log << "$ " << cmd << '\n';
      run_command(o, log);
    }
    log_text = log.str();
    return snapshot_tree(dir);
  };
  std::string log_a, log_b;
  auto a = pipeline(log_a);
  auto b = pipeline(log_b);
  std::size_t differing = 0;
  std::string first;
  std::set<std::string> names;
  for (const auto& [k, v] : a) names.insert(k);
  for (const auto& [k, v] : b) names.insert(k);
  for (const auto& n : names) {
    if (!a.count(n) || !b.count(n) || a[n] != b[n]) {
      ++differing;
      if (first.empty()) first = n;
    }
  }
  std::size_t ckpts = 0, histories = 0;
  for (const auto& [k, v] : a) {
    ckpts += k.ends_with(".ckpt");
    histories += k.ends_with("history.jsonl");
  }
  bool logs_same = log_a == log_b;
  bool pass = differing == 0 && logs_same && ckpts >= 9 && histories >= 9 && a.count("report.md");
  std::string s = fmt("all 6 commands run twice: %zu files (%zu checkpoints, %zu histories, report) %s, console log %s",
                      a.size(), ckpts, histories, differing ? "DIFFER" : "bit-identical",
                      logs_same ? "bit-identical" : "DIFFERS");
  if (!first.empty()) s += "; first difference: " + first;
  return {pass, s};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  fs::path work = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for training runs");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--epochs", benchmark_epochs, "Training epochs for the benchmark runs")
      ->check(CLI::Range(1, 60));
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient integrity", gradient_integrity},
      {"hypergraph spectral suite", hypergraph_spectral},
      {"oracle equivalence", oracle_equivalence},
      {"STFT fidelity", stft_fidelity},
      {"desk-scale learning", [&] { return desk_learning(work); }},
      {"ablation ordering", [&] { return ablation_ordering(work); }},
      {"robustness", [&] { return robustness(work); }},
      {"determinism", [&] { return determinism(work); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.summary.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
