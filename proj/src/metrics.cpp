#include "mmhcan/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <numeric>

#include "mmhcan/errors.hpp"

MMHCAN_NAMESPACE_BEGIN

std::optional<double> rank_auc(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw DimensionError("rank_auc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j + 1);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        pos_rank_sum += avg;
        ++n_pos;
      }
    }
    i = j;
  }
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  double p = static_cast<double>(n_pos);
  return (pos_rank_sum - p * (p + 1) / 2) / (p * static_cast<double>(n_neg));
}

MetricsReport compute_metrics(std::span<const double> probs, std::span<const int> labels,
                              std::size_t classes) {
  const std::size_t n = labels.size();
  if (n == 0) throw ContractError("compute_metrics: empty test set");
  if (classes < 2) throw ContractError("compute_metrics: need >= 2 classes");
  if (probs.size() != n * classes) throw DimensionError("compute_metrics: probs size mismatch");

  MetricsReport m;
  m.classes = classes;
  m.total = n;
  m.confusion.assign(classes * classes, 0);
  m.class_counts.assign(classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DomainError("compute_metrics: label out of range");
    }
    const double* row = probs.data() + i * classes;
    std::size_t pred = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
    ++m.confusion[static_cast<std::size_t>(labels[i]) * classes + pred];
    ++m.class_counts[static_cast<std::size_t>(labels[i])];
  }

  std::size_t trace = 0;
  for (std::size_t c = 0; c < classes; ++c) trace += m.cell(c, c);
  m.accuracy = static_cast<double>(trace) / static_cast<double>(n);

  m.precision.assign(classes, 0);
  m.recall.assign(classes, 0);
  m.f1.assign(classes, 0);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t tp = m.cell(c, c), predicted = 0;
    for (std::size_t r = 0; r < classes; ++r) predicted += m.cell(r, c);
    double p = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    double r = m.class_counts[c]
                   ? static_cast<double>(tp) / static_cast<double>(m.class_counts[c])
                   : 0.0;
    m.precision[c] = p;
    m.recall[c] = r;
    m.f1[c] = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  auto avg = [&](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(classes);
  };
  m.macro_precision = avg(m.precision);
  m.macro_recall = avg(m.recall);
  m.macro_f1 = avg(m.f1);

  std::vector<double> scores(n);
  std::unique_ptr<bool[]> positive(new bool[n]);
  double auc_sum = 0;
  std::size_t auc_count = 0;
  m.class_auc.assign(classes, std::nullopt);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = probs[i * classes + c];
      positive[i] = static_cast<std::size_t>(labels[i]) == c;
    }
    m.class_auc[c] = rank_auc(scores, std::span<const bool>(positive.get(), n));
    if (m.class_auc[c]) {
      auc_sum += *m.class_auc[c];
      ++auc_count;
    }
  }
  if (auc_count > 0) m.auc = auc_sum / static_cast<double>(auc_count);
  return m;
}

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["classes"] = m.classes;
  j["total"] = m.total;
  j["accuracy"] = m.accuracy;
  j["macro_precision"] = m.macro_precision;
  j["macro_recall"] = m.macro_recall;
  j["macro_f1"] = m.macro_f1;
  j["auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["class_counts"] = m.class_counts;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.classes; ++r) {
    rows.push_back(std::vector<std::size_t>(m.confusion.begin() + r * m.classes,
                                            m.confusion.begin() + (r + 1) * m.classes));
  }
  j["confusion"] = rows;
  nlohmann::json aucs = nlohmann::json::array();
  for (const auto& a : m.class_auc) aucs.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  j["class_auc"] = aucs;
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    MetricsReport m;
    m.classes = j.at("classes").get<std::size_t>();
    m.total = j.at("total").get<std::size_t>();
    m.accuracy = j.at("accuracy").get<double>();
    m.macro_precision = j.at("macro_precision").get<double>();
    m.macro_recall = j.at("macro_recall").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    if (!j.at("auc").is_null()) m.auc = j.at("auc").get<double>();
    m.precision = j.at("precision").get<std::vector<double>>();
    m.recall = j.at("recall").get<std::vector<double>>();
    m.f1 = j.at("f1").get<std::vector<double>>();
    m.class_counts = j.at("class_counts").get<std::vector<std::size_t>>();
    for (const auto& row : j.at("confusion")) {
      auto r = row.get<std::vector<std::size_t>>();
      if (r.size() != m.classes) throw DataError("metrics: ragged confusion matrix");
      m.confusion.insert(m.confusion.end(), r.begin(), r.end());
    }
    if (m.confusion.size() != m.classes * m.classes) throw DataError("metrics: bad confusion matrix");
    for (const auto& a : j.at("class_auc")) {
      m.class_auc.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics json: ") + e.what());
  }
}

void write_confusion_csv(const MetricsReport& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "true\\pred";
  for (std::size_t c = 0; c < m.classes; ++c) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < m.classes; ++r) {
    out << r;
    for (std::size_t c = 0; c < m.classes; ++c) out << ',' << m.cell(r, c);
    out << '\n';
  }
}

MMHCAN_NAMESPACE_END
