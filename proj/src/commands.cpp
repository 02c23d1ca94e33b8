#include "mmhcan/commands.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

MMHCAN_NAMESPACE_BEGIN

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t segment_seed(std::uint64_t seed, std::size_t kind, std::size_t i) {
  return seed * 0x9E3779B97F4A7C15ULL + (kind + 1) * 0xBF58476D1CE4E5B9ULL + i;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

json history_record(const EpochRecord& r) {
  return json{{"epoch", r.epoch},
              {"loss_total", r.loss_total},
              {"loss_ce", r.loss_ce},
              {"loss_triplet", r.loss_triplet},
              {"val_acc", r.val_acc ? json(*r.val_acc) : json(nullptr)},
              {"empty_triplet_batches", r.empty_triplet_batches}};
}

struct PreparedData {
  DatasetSplit split;
  PreparedSet train, test;
};

PreparedData load_prepared(const Settings& s) {
  PreparedData d;
  d.split = load_dataset(s);
  d.train = prepare_split(s, d.split.train);
  d.test = prepare_split(s, d.split.test);
  return d;
}

struct RunOutcome {
  TrainResult result;
  MetricsReport test;
};

RunOutcome train_run(const Settings& s, const PreparedData& data, const fs::path& dir,
                     std::ostream& log) {
  fs::create_directories(dir);
  write_text(dir / "config.json", s.effective.dump(2) + "\n");
  std::ofstream history(dir / "history.jsonl", std::ios::binary);
  if (!history) throw DataError("cannot write " + (dir / "history.jsonl").string());
  TrainResult result = train(data.train, s.model, s.train, s.loss, [&](const EpochRecord& r) {
    history << history_record(r).dump() << '\n';
    history.flush();
    log << "epoch " << r.epoch << " loss " << fmt(r.loss_total) << " ce " << fmt(r.loss_ce)
        << " triplet " << fmt(r.loss_triplet) << " val_acc " << fmt_opt(r.val_acc) << '\n';
  });
  json meta{{"config_hash", s.hash},
            {"best_epoch", result.best_epoch},
            {"best_val_acc", result.best_val_acc ? json(*result.best_val_acc) : json(nullptr)},
            {"switches", s.model.switches.label()}};
  save_checkpoint(result.model.params(), dir / "checkpoint.ckpt", meta.dump());
  MetricsReport test = evaluate(result.model, data.test, s.train.batch);
  json m = to_json(test);
  m["config_hash"] = s.hash;
  m["switches"] = s.model.switches.label();
  write_text(dir / "metrics.json", m.dump(2) + "\n");
  write_confusion_csv(test, dir / "confusion.csv");
  log << "test accuracy " << fmt(test.accuracy) << " (" << dir.string() << ")\n";
  return {std::move(result), std::move(test)};
}

Model load_model(const Settings& s, const fs::path& dir) {
  fs::path ckpt = dir / "checkpoint.ckpt";
  if (!fs::exists(ckpt)) throw DataError("no checkpoint at " + ckpt.string() + "; run train first");
  return Model(s.model, load_checkpoint(ckpt));
}

void cmd_gen_data(const Settings& s, const fs::path& out, std::ostream& log) {
  if (s.data.source != "synthetic") throw ConfigError("gen-data needs data.source=synthetic");
  auto classes = default_benchmark_classes(s.data.noise_floor, s.data.supply_harmonics,
                                             s.data.noise_drift);
  if (classes.size() != s.model.classes) {
    throw ConfigError("the synthetic benchmark has " + std::to_string(classes.size()) +
                      " classes but model.classes is " + std::to_string(s.model.classes));
  }
  fs::path dir = out / "data";
  fs::create_directories(dir);
  std::vector<ManifestEntry> entries;
  double duration = static_cast<double>(s.data.per_class * s.data.segment_length) / s.data.sample_rate_hz;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    classes[c].base_freq_hz = s.data.base_freq_hz;
    RawSignal raw = synthesize(classes[c], duration, s.data.sample_rate_hz,
                               s.seed * 1000003ULL + c + 1, static_cast<int>(c));
    std::string name = "class" + std::to_string(c) + ".csv";
    export_csv(raw, dir / name);
    CsvSchema schema;
    schema.label = static_cast<int>(c);
    schema.sample_rate_hz = raw.sample_rate_hz;
    schema.channel = raw.channel;
    entries.push_back({dir / name, schema});
  }
  write_manifest(entries, dir / "manifest.json");
  write_text(out / "config.json", s.effective.dump(2) + "\n");
  log << "wrote " << entries.size() << " signals and " << (dir / "manifest.json").string() << '\n';
}

void cmd_train(const Settings& s, const fs::path& out, std::ostream& log) {
  train_run(s, load_prepared(s), out, log);
}

void cmd_eval(const Settings& s, const fs::path& out, std::ostream& log) {
  Model model = load_model(s, out);
  PreparedData data = load_prepared(s);
  MetricsReport m = evaluate(model, data.test, s.train.batch);
  json j = to_json(m);
  j["config_hash"] = s.hash;
  write_text(out / "eval" / "metrics.json", j.dump(2) + "\n");
  write_confusion_csv(m, out / "eval" / "confusion.csv");
  log << "accuracy " << fmt(m.accuracy) << " macro_f1 " << fmt(m.macro_f1) << " auc "
      << fmt_opt(m.auc) << '\n';
}

void cmd_ablate(const Settings& s, const fs::path& out, std::ostream& log) {
  auto rows = run_ablation(s, out, log);
  write_ablation_csv(rows, out / "ablation.csv");
  log << "wrote " << (out / "ablation.csv").string() << '\n';
}

void cmd_perturb_eval(const Settings& s, const fs::path& out, std::ostream& log) {
  Model model = load_model(s, out);
  DatasetSplit split = load_dataset(s);
  auto rows = run_robustness(s, model, split.test);
  write_robustness_csv(rows, out / "robustness.csv");
  for (const auto& r : rows) {
    log << std::left << std::setw(10) << r.kind << " accuracy " << fmt(r.metrics.accuracy)
        << " delta " << fmt(r.delta) << '\n';
  }
}

void cmd_report(const fs::path& out, std::ostream& log) {
  write_text(out / "report.md", render_report(out));
  log << "wrote " << (out / "report.md").string() << '\n';
}

std::string aligned_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream ss;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ss << '|';
    for (std::size_t c = 0; c < width.size(); ++c) {
      std::string cell = c < rows[i].size() ? rows[i][c] : "";
      ss << ' ' << std::setw(static_cast<int>(width[c])) << cell << " |";
    }
    ss << '\n';
    if (i == 0) {
      ss << '|';
      for (auto w : width) ss << std::string(w + 2, '-') << '|';
      ss << '\n';
    }
  }
  return ss.str();
}

std::string csv_as_table(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return aligned_table(rows);
}

}  // namespace

std::vector<std::string> command_names() {
  return {"gen-data", "train", "eval", "ablate", "perturb-eval", "report"};
}

DatasetSplit load_dataset(const Settings& s) {
  if (s.data.source == "synthetic") {
    auto classes = default_benchmark_classes(s.data.noise_floor, s.data.supply_harmonics,
                                             s.data.noise_drift);
    for (auto& c : classes) c.base_freq_hz = s.data.base_freq_hz;
    if (classes.size() != s.model.classes) {
      throw ConfigError("the synthetic benchmark has " + std::to_string(classes.size()) +
                        " classes but model.classes is " + std::to_string(s.model.classes));
    }
    return make_dataset(classes, s.data.per_class, s.data.split, s.data.segment_length,
                        s.data.sample_rate_hz, s.seed);
  }
  std::vector<SignalSegment> all;
  for (const auto& e : read_manifest(s.data.manifest)) {
    if (e.schema.sample_rate_hz != s.data.sample_rate_hz) {
      throw ConfigError("manifest entry " + e.path.string() + " is sampled at " +
                        fmt(e.schema.sample_rate_hz, 1) + " Hz, config expects " +
                        fmt(s.data.sample_rate_hz, 1) + " Hz");
    }
    if (e.schema.label < 0 || static_cast<std::size_t>(e.schema.label) >= s.model.classes) {
      throw DataError("manifest label " + std::to_string(e.schema.label) + " outside model.classes");
    }
    auto segs = segment(ingest_csv(e.path, e.schema), s.data.segment_length);
    for (auto& seg : segs) all.push_back(std::move(seg));
  }
  return split_segments(std::move(all), s.data.split, s.seed);
}

PreparedSet prepare_split(const Settings& s, const std::vector<SignalSegment>& segments) {
  return prepare(segments, s.window, s.data.sample_rate_hz, s.model.encoder.image_rows,
                 s.model.encoder.image_cols);
}

std::vector<BlockSwitches> ablation_rows() {
  return {
      {true, false, false, false, false},  {false, true, false, false, false},
      {false, false, true, false, false},  {true, true, false, false, false},
      {true, true, false, true, false},    {true, true, true, false, false},
      {true, true, true, true, false},     {true, true, true, true, true},
  };
}

Settings settings_with_switches(const Settings& base, const BlockSwitches& sw) {
  json doc = base.effective;
  doc["model"]["switches"] = json{{"w_t", sw.w_t}, {"w_s", sw.w_s}, {"w_cr", sw.w_cr},
                                  {"w_cl", sw.w_cl}, {"w_att", sw.w_att}};
  return settings_from_json(doc);
}

std::vector<AblationRow> run_ablation(const Settings& base, const fs::path& out,
                                      std::ostream& log, const std::vector<BlockSwitches>& rows) {
  PreparedData data = load_prepared(base);
  std::vector<AblationRow> table;
  for (const auto& sw : rows) {
    Settings s = settings_with_switches(base, sw);
    log << "ablation row " << sw.label() << '\n';
    RunOutcome r = train_run(s, data, out / "ablate" / sw.label(), log);
    table.push_back({sw, s.hash, r.test});
  }
  return table;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const fs::path& path) {
  std::ostringstream ss;
  ss << "w_t,w_s,w_cr,w_cl,w_att,config_hash,acc,pre,rec,f1,auc\n";
  for (const auto& r : rows) {
    const auto& w = r.switches;
    const auto& m = r.metrics;
    ss << w.w_t << ',' << w.w_s << ',' << w.w_cr << ',' << w.w_cl << ',' << w.w_att << ','
       << r.config_hash << ',' << fmt(m.accuracy, 6) << ',' << fmt(m.macro_precision, 6) << ','
       << fmt(m.macro_recall, 6) << ',' << fmt(m.macro_f1, 6) << ','
       << (m.auc ? fmt(*m.auc, 6) : "") << '\n';
  }
  write_text(path, ss.str());
}

std::vector<RobustnessRow> run_robustness(const Settings& s, const Model& model,
                                          const std::vector<SignalSegment>& test) {
  std::vector<RobustnessRow> rows;
  MetricsReport clean = evaluate(model, prepare_split(s, test), s.train.batch);
  rows.push_back({"clean", clean, 0.0, std::nullopt});
  const std::vector<Perturbation> kinds{s.gaussian, s.harmonics, s.spikes};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    std::vector<SignalSegment> noisy;
    noisy.reserve(test.size());
    double snr_sum = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto& seg = test[i];
      auto values = perturb(seg.values, kinds[k], segment_seed(s.seed, k, i));
      if (k == 0) snr_sum += snr_db(seg.values, values);
      noisy.push_back(normalize(values, seg.label, seg.channel));
    }
    MetricsReport m = evaluate(model, prepare_split(s, noisy), s.train.batch);
    RobustnessRow row{kind_name(kinds[k]), m, m.accuracy - clean.accuracy, std::nullopt};
    if (k == 0 && !test.empty()) row.realized_snr_db = snr_sum / static_cast<double>(test.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_robustness_csv(const std::vector<RobustnessRow>& rows, const fs::path& path) {
  std::ostringstream ss;
  ss << "kind,acc,delta,f1,realized_snr_db\n";
  for (const auto& r : rows) {
    ss << r.kind << ',' << fmt(r.metrics.accuracy, 6) << ',' << fmt(r.delta, 6) << ','
       << fmt(r.metrics.macro_f1, 6) << ',' << (r.realized_snr_db ? fmt(*r.realized_snr_db, 4) : "")
       << '\n';
  }
  write_text(path, ss.str());
}

std::string render_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("report: " + dir.string() + " is not a directory");
  struct Run {
    fs::file_time_type time;
    fs::path metrics;
  };
  std::vector<Run> runs;
  std::vector<fs::path> ablations, robustness;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto name = e.path().filename();
    if (name == "metrics.json") runs.push_back({e.last_write_time(), e.path()});
    if (name == "ablation.csv") ablations.push_back(e.path());
    if (name == "robustness.csv") robustness.push_back(e.path());
  }
  if (runs.empty()) throw DataError("report: no runs (metrics.json) found under " + dir.string());
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
    return a.time != b.time ? a.time < b.time : a.metrics < b.metrics;
  });
  std::sort(ablations.begin(), ablations.end());
  std::sort(robustness.begin(), robustness.end());

  std::ostringstream md;
  md << "# Run report\n\n";
  md << aligned_table([&] {
    std::vector<std::vector<std::string>> t{{"run", "config", "acc", "pre", "rec", "f1", "auc"}};
    for (const auto& r : runs) {
      json j = json::parse(read_text(r.metrics));
      MetricsReport m = metrics_from_json(j);
      std::string rel = fs::relative(r.metrics.parent_path(), dir).generic_string();
      t.push_back({rel, j.value("config_hash", ""), fmt(m.accuracy), fmt(m.macro_precision),
                   fmt(m.macro_recall), fmt(m.macro_f1), fmt_opt(m.auc)});
    }
    return t;
  }());

  for (const auto& r : runs) {
    json j = json::parse(read_text(r.metrics));
    MetricsReport m = metrics_from_json(j);
    std::string rel = fs::relative(r.metrics.parent_path(), dir).generic_string();
    md << "\n## " << rel << "\n\n";
    if (j.contains("switches")) md << "Switches: " << j["switches"].get<std::string>() << "\n\n";
    md << "Samples: " << m.total << ", accuracy " << fmt(m.accuracy) << "\n\n";
    std::vector<std::vector<std::string>> per{{"class", "count", "precision", "recall", "f1", "auc"}};
    for (std::size_t c = 0; c < m.classes; ++c) {
      per.push_back({std::to_string(c), std::to_string(m.class_counts[c]), fmt(m.precision[c]),
                     fmt(m.recall[c]), fmt(m.f1[c]),
                     c < m.class_auc.size() ? fmt_opt(m.class_auc[c]) : "n/a"});
    }
    md << aligned_table(per) << "\nConfusion matrix (rows: true class, columns: predicted):\n\n";
    std::vector<std::vector<std::string>> cm{{"true\\pred"}};
    for (std::size_t c = 0; c < m.classes; ++c) cm[0].push_back(std::to_string(c));
    cm[0].push_back("total");
    for (std::size_t r = 0; r < m.classes; ++r) {
      std::vector<std::string> row{std::to_string(r)};
      std::size_t sum = 0;
      for (std::size_t c = 0; c < m.classes; ++c) {
        row.push_back(std::to_string(m.cell(r, c)));
        sum += m.cell(r, c);
      }
      row.push_back(std::to_string(sum));
      cm.push_back(row);
    }
    md << "```\n" << aligned_table(cm) << "```\n";
  }
  for (const auto& p : ablations) {
    md << "\n## Ablation (" << fs::relative(p, dir).generic_string() << ")\n\n" << csv_as_table(p);
  }
  for (const auto& p : robustness) {
    md << "\n## Robustness (" << fs::relative(p, dir).generic_string() << ")\n\n" << csv_as_table(p);
  }
  return md.str();
}

void run_command(const CommandOptions& opts, std::ostream& log) {
  const auto names = command_names();
  if (std::find(names.begin(), names.end(), opts.command) == names.end()) {
    throw ConfigError("unknown command '" + opts.command + "'");
  }
  if (opts.command == "report") {
    cmd_report(opts.out, log);
    return;
  }
  Settings s = load_settings(opts.config, opts.overrides, opts.seed);
  fs::create_directories(opts.out);
  if (opts.command == "gen-data") cmd_gen_data(s, opts.out, log);
  else if (opts.command == "train") cmd_train(s, opts.out, log);
  else if (opts.command == "eval") cmd_eval(s, opts.out, log);
  else if (opts.command == "ablate") cmd_ablate(s, opts.out, log);
  else if (opts.command == "perturb-eval") cmd_perturb_eval(s, opts.out, log);
}

MMHCAN_NAMESPACE_END
