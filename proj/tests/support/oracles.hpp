#pragma once

// Brute-force reference implementations written directly from the defining
// formulas, for comparison against the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double norm(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (norm(a) * norm(b));
}

// Edge i: node i plus its k most similar non-zero profiles at or above the threshold.
inline std::vector<std::vector<std::size_t>> knn_members(const Matrix& profiles, std::size_t k,
                                                         double threshold) {
  std::size_t n = profiles.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].push_back(i);
    if (norm(profiles[i]) == 0) continue;
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || norm(profiles[j]) == 0) continue;
      double s = std::clamp(cosine(profiles[i], profiles[j]), -1.0, 1.0);
      if (s >= threshold) cand.push_back({-s, j});
    }
    std::sort(cand.begin(), cand.end());
    for (std::size_t c = 0; c < std::min(k, cand.size()); ++c) out[i].push_back(cand[c].second);
  }
  return out;
}

// L = I - Dv^-1/2 H De^-1 H^T Dv^-1/2 by dense products; zero-degree nodes use 0 for Dv^-1/2.
inline Matrix laplacian(const std::vector<std::vector<int>>& h) {
  std::size_t n = h.size(), e = h.empty() ? 0 : h[0].size();
  std::vector<double> dv(n, 0), de(e, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < e; ++j) {
      dv[i] += h[i][j];
      de[j] += h[i][j];
    }
  Matrix l(n, std::vector<double>(n, 0));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0;
      for (std::size_t j = 0; j < e; ++j) acc += h[u][j] * h[v][j] / de[j];
      double su = dv[u] > 0 ? 1 / std::sqrt(dv[u]) : 0, sv = dv[v] > 0 ? 1 / std::sqrt(dv[v]) : 0;
      l[u][v] = (u == v ? 1.0 : 0.0) - su * acc * sv;
    }
  return l;
}

struct Triplet {
  std::size_t a, p, n;
};

inline std::vector<Triplet> batch_hard(const Matrix& emb, const std::vector<int>& labels) {
  std::vector<Triplet> out;
  for (std::size_t a = 0; a < emb.size(); ++a) {
    std::optional<std::size_t> p, q;
    for (std::size_t j = 0; j < emb.size(); ++j) {
      if (j == a) continue;
      double d = euclid(emb[a], emb[j]);
      if (labels[j] == labels[a]) {
        if (!p || d > euclid(emb[a], emb[*p])) p = j;
      } else if (!q || d < euclid(emb[a], emb[*q])) {
        q = j;
      }
    }
    if (p && q) out.push_back({a, *p, *q});
  }
  return out;
}

inline double triplet_loss(const Matrix& emb, const std::vector<Triplet>& ts, double margin) {
  if (ts.empty()) return 0;
  double s = 0;
  for (const auto& t : ts) {
    s += std::max(0.0, euclid(emb[t.a], emb[t.p]) - euclid(emb[t.a], emb[t.n]) + margin);
  }
  return s / static_cast<double>(ts.size());
}

struct Metrics {
  std::vector<std::vector<std::size_t>> confusion;
  double accuracy = 0;
  std::vector<double> precision, recall, f1;
  std::vector<std::optional<double>> auc;
  std::optional<double> macro_auc;
};

// Pairwise AUC: P(score_pos > score_neg) + 0.5 P(tie).
inline std::optional<double> pairwise_auc(const std::vector<double>& s, const std::vector<bool>& pos) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!pos[i] || pos[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  if (pairs == 0) return std::nullopt;
  return wins / pairs;
}

inline Metrics metrics(const Matrix& probs, const std::vector<int>& labels, std::size_t classes) {
  Metrics m;
  m.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t pred = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (probs[i][c] > probs[i][pred]) pred = c;
    ++m.confusion[labels[i]][pred];
    if (pred == static_cast<std::size_t>(labels[i])) ++correct;
  }
  m.accuracy = double(correct) / double(labels.size());
  double auc_sum = 0;
  int auc_n = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    double tp = m.confusion[c][c], col = 0, row = 0;
    for (std::size_t r = 0; r < classes; ++r) {
      col += m.confusion[r][c];
      row += m.confusion[c][r];
    }
    double p = col > 0 ? tp / col : 0, r = row > 0 ? tp / row : 0;
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f1.push_back(p + r > 0 ? 2 * p * r / (p + r) : 0);
    std::vector<double> s;
    std::vector<bool> pos;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s.push_back(probs[i][c]);
      pos.push_back(labels[i] == static_cast<int>(c));
    }
    m.auc.push_back(pairwise_auc(s, pos));
    if (m.auc.back()) {
      auc_sum += *m.auc.back();
      ++auc_n;
    }
  }
  if (auc_n) m.macro_auc = auc_sum / auc_n;
  return m;
}

inline std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
  std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t t = 0; t < n; ++t)
      out[k] += x[t] * std::polar(1.0, -2 * std::numbers::pi * double(k * t % n) / double(n));
  return out;
}

}  // namespace oracle
