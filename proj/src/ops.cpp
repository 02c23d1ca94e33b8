#include "mmhcan/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gemm.hpp"

MMHCAN_NAMESPACE_BEGIN

namespace {

using NodePtr = std::shared_ptr<detail::Node>;
using Grad = std::span<const Scalar>;

void record_op(const char* op, std::initializer_list<const Tensor*> inputs,
               const Tensor& out, std::function<void(Grad)> rule) {
  if (!out.requires_grad()) return;
  std::vector<std::size_t> ids;
  ids.reserve(inputs.size());
  for (const auto* t : inputs) ids.push_back(t->id());
  NodePtr node = out.node();
  Tape::current().record(op, std::move(ids), out.id(),
                         [node, rule = std::move(rule)] {
                           if (node->grad.empty()) return;
                           rule(node->grad);
                         });
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + " expects rank " +
                         std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
  }
}

// ---- elementwise helpers ----

template <class Fwd, class Deriv>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  auto in = x.data();
  std::vector<Scalar> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  bool rec = any_requires_grad({&x});
  Tensor y = make_result(op, x.shape(), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    NodePtr yn = y.node();
    record_op(op, {&x}, y, [xn, yn, deriv](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += g[i] * deriv(xn->value[i], yn->value[i]);
      }
    });
  }
  return y;
}

enum class Bcast { kEqual, kLeftScalar, kRightScalar };

Bcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::kEqual;
  if (a.numel() == 1) return Bcast::kLeftScalar;
  if (b.numel() == 1) return Bcast::kRightScalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

// da/db are partial derivatives of f wrt each operand at (x, y).
template <class Fwd, class Da, class Db>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, Da da,
              Db db) {
  Bcast kind = broadcast_kind(a, b, op);
  const Shape& shape = kind == Bcast::kLeftScalar ? b.shape() : a.shape();
  std::size_t n = numel_of(shape);
  auto av = a.data();
  auto bv = b.data();
  auto ai = [&](std::size_t i) { return kind == Bcast::kLeftScalar ? 0 : i; };
  auto bi = [&](std::size_t i) { return kind == Bcast::kRightScalar ? 0 : i; };
  std::vector<Scalar> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[ai(i)], bv[bi(i)]);
  bool rec = any_requires_grad({&a, &b});
  Tensor y = make_result(op, shape, std::move(out), rec);
  if (rec) {
    NodePtr an = a.node();
    NodePtr bn = b.node();
    record_op(op, {&a, &b}, y, [an, bn, kind, n, da, db](Grad g) {
      auto ia = [&](std::size_t i) { return kind == Bcast::kLeftScalar ? 0 : i; };
      auto ib = [&](std::size_t i) { return kind == Bcast::kRightScalar ? 0 : i; };
      if (an->requires_grad) {
        auto ga = an->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
          ga[ia(i)] += g[i] * da(an->value[ia(i)], bn->value[ib(i)]);
        }
      }
      if (bn->requires_grad) {
        auto gb = bn->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) {
          gb[ib(i)] += g[i] * db(an->value[ia(i)], bn->value[ib(i)]);
        }
      }
    });
  }
  return y;
}

}  // namespace

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) +
                         " by " + shape_str(b.shape()));
  }
  std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<Scalar> out(m * n, Scalar(0));
  gemm::nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  bool rec = any_requires_grad({&a, &b});
  Tensor y = make_result("matmul", {m, n}, std::move(out), rec);
  if (rec) {
    NodePtr an = a.node();
    NodePtr bn = b.node();
    record_op("matmul", {&a, &b}, y, [an, bn, m, k, n](Grad g) {
      if (an->requires_grad) {
        // dA += dC . B^T
        gemm::nt(g.data(), bn->value.data(), an->grad_buffer().data(), m, n, k);
      }
      if (bn->requires_grad) {
        // dB += A^T . dC
        gemm::tn(an->value.data(), g.data(), bn->grad_buffer().data(), k, m, n);
      }
    });
  }
  return y;
}

Tensor transpose(const Tensor& x) {
  require_rank(x, 2, "transpose");
  std::size_t r = x.dim(0), c = x.dim(1);
  auto in = x.data();
  std::vector<Scalar> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("transpose", {c, r}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("transpose", {&x}, y, [xn, r, c](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " +
                         shape_str(shape));
  }
  auto in = x.data();
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("reshape", std::move(shape),
                         std::vector<Scalar>(in.begin(), in.end()), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("reshape", {&x}, y, [xn](Grad g) { xn->accumulate(g); });
  }
  return y;
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](Scalar x, Scalar y) { return x + y; },
      [](Scalar, Scalar) { return Scalar(1); },
      [](Scalar, Scalar) { return Scalar(1); });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](Scalar x, Scalar y) { return x - y; },
      [](Scalar, Scalar) { return Scalar(1); },
      [](Scalar, Scalar) { return Scalar(-1); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](Scalar x, Scalar y) { return x * y; },
      [](Scalar, Scalar y) { return y; }, [](Scalar x, Scalar) { return x; });
}

Tensor scale(const Tensor& x, Scalar factor) {
  return unary(
      "scale", x, [factor](Scalar v) { return v * factor; },
      [factor](Scalar, Scalar) { return factor; });
}

Tensor add_scalar(const Tensor& x, Scalar offset) {
  return unary(
      "add_scalar", x, [offset](Scalar v) { return v + offset; },
      [](Scalar, Scalar) { return Scalar(1); });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](Scalar v) { return v > 0 ? v : Scalar(0); },
      [](Scalar v, Scalar) { return v > 0 ? Scalar(1) : Scalar(0); });
}

Tensor log1p(const Tensor& x) {
  for (Scalar v : x.data()) {
    if (v <= Scalar(-1)) throw DomainError("log1p of value <= -1");
  }
  return unary(
      "log1p", x, [](Scalar v) { return std::log1p(v); },
      [](Scalar v, Scalar) { return Scalar(1) / (Scalar(1) + v); });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](Scalar v) { return std::exp(v); },
      [](Scalar, Scalar y) { return y; });
}

Tensor sqrt_recip(const Tensor& x) {
  for (Scalar v : x.data()) {
    if (!(v > 0)) throw DomainError("sqrt_recip of non-positive entry");
  }
  return unary(
      "sqrt_recip", x, [](Scalar v) { return Scalar(1) / std::sqrt(v); },
      [](Scalar v, Scalar y) { return Scalar(-0.5) * y / v; });
}

Tensor sqrt(const Tensor& x) {
  for (Scalar v : x.data()) {
    if (v < 0) throw DomainError("sqrt of negative entry");
  }
  return unary(
      "sqrt", x, [](Scalar v) { return std::sqrt(v); },
      [](Scalar, Scalar y) { return y > 0 ? Scalar(0.5) / y : Scalar(0); });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](Scalar v) {
        if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
        Scalar e = std::exp(v);
        return e / (Scalar(1) + e);
      },
      [](Scalar, Scalar y) { return y * (Scalar(1) - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](Scalar v) { return std::tanh(v); },
      [](Scalar, Scalar y) { return Scalar(1) - y * y; });
}

// ---- row/column structured ----

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  std::size_t r = x.dim(0), c = x.dim(1);
  if (bias.numel() != c) {
    throw DimensionError("add_row_bias: bias " + shape_str(bias.shape()) +
                         " does not match " + shape_str(x.shape()));
  }
  auto xv = x.data();
  auto bv = bias.data();
  std::vector<Scalar> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] + bv[j];
  bool rec = any_requires_grad({&x, &bias});
  Tensor y = make_result("add_row_bias", x.shape(), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    NodePtr bn = bias.node();
    record_op("add_row_bias", {&x, &bias}, y, [xn, bn, r, c](Grad g) {
      if (xn->requires_grad) xn->accumulate(g);
      if (bn->requires_grad) {
        auto gb = bn->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
      }
    });
  }
  return y;
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require_rank(x, 2, "scale_rows");
  std::size_t r = x.dim(0), c = x.dim(1);
  if (s.numel() != r) {
    throw DimensionError("scale_rows: factors " + shape_str(s.shape()) +
                         " do not match " + shape_str(x.shape()));
  }
  auto xv = x.data();
  auto sv = s.data();
  std::vector<Scalar> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * sv[i];
  bool rec = any_requires_grad({&x, &s});
  Tensor y = make_result("scale_rows", x.shape(), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    NodePtr sn = s.node();
    record_op("scale_rows", {&x, &s}, y, [xn, sn, r, c](Grad g) {
      if (xn->requires_grad) {
        auto gx = xn->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            gx[i * c + j] += g[i * c + j] * sn->value[i];
      }
      if (sn->requires_grad) {
        auto gs = sn->grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
          Scalar acc = 0;
          for (std::size_t j = 0; j < c; ++j)
            acc += g[i * c + j] * xn->value[i * c + j];
          gs[i] += acc;
        }
      }
    });
  }
  return y;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  std::size_t r = parts[0].dim(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != r) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()));
    }
    total += p.dim(1);
  }
  std::vector<Scalar> out(r * total);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    std::size_t c = p.dim(1);
    auto v = p.data();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(v.begin() + i * c, c, out.begin() + i * total + off);
    off += c;
  }
  bool rec = false;
  for (const auto& p : parts) rec = rec || any_requires_grad({&p});
  Tensor y = make_result("concat_cols", {r, total}, std::move(out), rec);
  if (rec) {
    std::vector<NodePtr> nodes;
    std::vector<std::size_t> ids;
    for (const auto& p : parts) {
      nodes.push_back(p.node());
      ids.push_back(p.id());
    }
    NodePtr yn = y.node();
    Tape::current().record(
        "concat_cols", std::move(ids), y.id(),
        [nodes, offsets, yn, r, total] {
          if (yn->grad.empty()) return;
          for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (!nodes[k]->requires_grad) continue;
            std::size_t c = nodes[k]->shape[1];
            auto gx = nodes[k]->grad_buffer();
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j)
                gx[i * c + j] += yn->grad[i * total + offsets[k] + j];
          }
        });
  }
  return y;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  std::size_t r = x.dim(0), c = x.dim(1);
  if (count == 0 || begin + count > c) {
    throw DimensionError("slice_cols out of range for " + shape_str(x.shape()));
  }
  auto v = x.data();
  std::vector<Scalar> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(v.begin() + i * c + begin, count, out.begin() + i * count);
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("slice_cols", {r, count}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("slice_cols", {&x}, y, [xn, r, c, begin, count](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j)
          gx[i * c + begin + j] += g[i * count + j];
    });
  }
  return y;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "slice_rows");
  std::size_t r = x.dim(0), c = x.dim(1);
  if (count == 0 || begin + count > r) {
    throw DimensionError("slice_rows out of range for " + shape_str(x.shape()));
  }
  auto v = x.data();
  std::vector<Scalar> out(v.begin() + begin * c,
                          v.begin() + (begin + count) * c);
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("slice_rows", {count, c}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("slice_rows", {&x}, y, [xn, c, begin](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[begin * c + i] += g[i];
    });
  }
  return y;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank(x, 2, "gather_rows");
  std::size_t r = x.dim(0), c = x.dim(1);
  if (rows.empty()) throw ContractError("gather_rows with no indices");
  auto v = x.data();
  std::vector<Scalar> out(rows.size() * c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= r) throw DimensionError("gather_rows index out of range");
    std::copy_n(v.begin() + rows[i] * c, c, out.begin() + i * c);
  }
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("gather_rows", {rows.size(), c}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    record_op("gather_rows", {&x}, y, [xn, idx, c](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) gx[idx[i] * c + j] += g[i * c + j];
    });
  }
  return y;
}

Tensor sum_cols(const Tensor& x) {
  require_rank(x, 2, "sum_cols");
  std::size_t r = x.dim(0), c = x.dim(1);
  auto v = x.data();
  std::vector<Scalar> out(r, Scalar(0));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += v[i * c + j];
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("sum_cols", {r, 1}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("sum_cols", {&x}, y, [xn, r, c](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i];
    });
  }
  return y;
}

// ---- reductions ----

Tensor sum(const Tensor& x) {
  Scalar acc = 0;
  for (Scalar v : x.data()) acc += v;
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("sum", {1}, {acc}, rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("sum", {&x}, y, [xn](Grad g) {
      for (auto& v : xn->grad_buffer()) v += g[0];
    });
  }
  return y;
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(x.numel()));
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (x.rank() > 2 || axis >= x.rank()) {
    throw DimensionError("softmax: bad axis " + std::to_string(axis) +
                         " for " + shape_str(x.shape()));
  }
  std::size_t len = x.dim(axis);
  std::size_t outer = 1, inner = 1;
  if (x.rank() == 2) {
    if (axis == 0) {
      inner = x.dim(1);
    } else {
      outer = x.dim(0);
    }
  }
  auto in = x.data();
  std::vector<Scalar> out(in.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t q = 0; q < inner; ++q) {
      auto idx = [&](std::size_t i) { return (o * len + i) * inner + q; };
      Scalar peak = -std::numeric_limits<Scalar>::infinity();
      for (std::size_t i = 0; i < len; ++i) peak = std::max(peak, in[idx(i)]);
      Scalar total = 0;
      for (std::size_t i = 0; i < len; ++i) {
        out[idx(i)] = std::exp(in[idx(i)] - peak);
        total += out[idx(i)];
      }
      for (std::size_t i = 0; i < len; ++i) out[idx(i)] /= total;
    }
  }
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("softmax", x.shape(), std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    NodePtr yn = y.node();
    record_op("softmax", {&x}, y, [xn, yn, outer, inner, len](Grad g) {
      auto gx = xn->grad_buffer();
      const auto& yv = yn->value;
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t q = 0; q < inner; ++q) {
          auto idx = [&](std::size_t i) { return (o * len + i) * inner + q; };
          Scalar dot = 0;
          for (std::size_t i = 0; i < len; ++i) dot += g[idx(i)] * yv[idx(i)];
          for (std::size_t i = 0; i < len; ++i)
            gx[idx(i)] += yv[idx(i)] * (g[idx(i)] - dot);
        }
      }
    });
  }
  return y;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  std::size_t r = logits.dim(0), c = logits.dim(1);
  if (labels.size() != r) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + shape_str(logits.shape()));
  }
  auto in = logits.data();
  std::vector<Scalar> probs(r * c);
  Scalar loss = 0;
  for (std::size_t i = 0; i < r; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw ContractError("cross_entropy: label out of range");
    }
    Scalar peak = *std::max_element(in.begin() + i * c, in.begin() + (i + 1) * c);
    Scalar total = 0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(in[i * c + j] - peak);
      total += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= total;
    loss -= in[i * c + labels[i]] - peak - std::log(total);
  }
  loss /= static_cast<Scalar>(r);
  bool rec = any_requires_grad({&logits});
  Tensor y = make_result("cross_entropy", {1}, {loss}, rec);
  if (rec) {
    NodePtr xn = logits.node();
    std::vector<int> lab(labels.begin(), labels.end());
    record_op("cross_entropy", {&logits}, y,
              [xn, probs = std::move(probs), lab, r, c](Grad g) {
                auto gx = xn->grad_buffer();
                Scalar s = g[0] / static_cast<Scalar>(r);
                for (std::size_t i = 0; i < r; ++i) {
                  for (std::size_t j = 0; j < c; ++j) {
                    Scalar target = static_cast<int>(j) == lab[i] ? 1 : 0;
                    gx[i * c + j] += s * (probs[i * c + j] - target);
                  }
                }
              });
  }
  return y;
}

// ---- convolution / pooling ----

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride) {
  require_rank(x, 3, "conv1d");
  require_rank(w, 3, "conv1d weight");
  std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  std::size_t cout = w.dim(0), kernel = w.dim(2);
  if (w.dim(1) != cin || b.numel() != cout) {
    throw DimensionError("conv1d: weight " + shape_str(w.shape()) + "/bias " +
                         shape_str(b.shape()) + " incompatible with input " +
                         shape_str(x.shape()));
  }
  if (stride == 0) throw ContractError("conv1d: stride must be positive");
  if (kernel > len) {
    throw DimensionError("conv1d: kernel " + std::to_string(kernel) +
                         " longer than input length " + std::to_string(len));
  }
  std::size_t lout = (len - kernel) / stride + 1;
  std::size_t rows = cin * kernel, cols = batch * lout;

  // cols[(c*K + k), n*lout + t] = x[n, c, t*stride + k]
  std::vector<Scalar> patches(rows * cols);
  auto xv = x.data();
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t k = 0; k < kernel; ++k) {
      Scalar* dst = patches.data() + (c * kernel + k) * cols;
      for (std::size_t n = 0; n < batch; ++n) {
        const Scalar* src = xv.data() + (n * cin + c) * len + k;
        for (std::size_t t = 0; t < lout; ++t) dst[n * lout + t] = src[t * stride];
      }
    }
  std::vector<Scalar> ym(cout * cols, Scalar(0));
  gemm::nn(w.data().data(), patches.data(), ym.data(), cout, rows, cols);

  std::vector<Scalar> out(batch * cout * lout);
  auto bv = b.data();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t t = 0; t < lout; ++t)
        out[(n * cout + o) * lout + t] = ym[o * cols + n * lout + t] + bv[o];

  bool rec = any_requires_grad({&x, &w, &b});
  Tensor y = make_result("conv1d", {batch, cout, lout}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), wn = w.node(), bn = b.node();
    record_op("conv1d", {&x, &w, &b}, y,
              [xn, wn, bn, patches = std::move(patches), batch, cin, len, cout,
               kernel, stride, lout, rows, cols](Grad g) {
                std::vector<Scalar> gm(cout * cols);
                for (std::size_t n = 0; n < batch; ++n)
                  for (std::size_t o = 0; o < cout; ++o)
                    for (std::size_t t = 0; t < lout; ++t)
                      gm[o * cols + n * lout + t] = g[(n * cout + o) * lout + t];
                if (bn->requires_grad) {
                  auto gb = bn->grad_buffer();
                  for (std::size_t o = 0; o < cout; ++o)
                    for (std::size_t j = 0; j < cols; ++j) gb[o] += gm[o * cols + j];
                }
                if (wn->requires_grad) {
                  gemm::nt(gm.data(), patches.data(), wn->grad_buffer().data(),
                           cout, cols, rows);
                }
                if (xn->requires_grad) {
                  std::vector<Scalar> gp(rows * cols, Scalar(0));
                  gemm::tn(wn->value.data(), gm.data(), gp.data(), rows, cout,
                           cols);
                  auto gx = xn->grad_buffer();
                  for (std::size_t c = 0; c < cin; ++c)
                    for (std::size_t k = 0; k < kernel; ++k) {
                      const Scalar* src = gp.data() + (c * kernel + k) * cols;
                      for (std::size_t n = 0; n < batch; ++n) {
                        Scalar* dst = gx.data() + (n * cin + c) * len + k;
                        for (std::size_t t = 0; t < lout; ++t)
                          dst[t * stride] += src[n * lout + t];
                      }
                    }
                }
              });
  }
  return y;
}

Tensor maxpool1d(const Tensor& x, std::size_t size, std::size_t stride) {
  require_rank(x, 3, "maxpool1d");
  std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (size == 0 || stride == 0 || size > len) {
    throw DimensionError("maxpool1d: window " + std::to_string(size) +
                         " invalid for length " + std::to_string(len));
  }
  std::size_t lout = (len - size) / stride + 1;
  auto xv = x.data();
  std::vector<Scalar> out(batch * ch * lout);
  std::vector<std::size_t> arg(out.size());
  for (std::size_t row = 0; row < batch * ch; ++row) {
    for (std::size_t t = 0; t < lout; ++t) {
      std::size_t best = row * len + t * stride;
      for (std::size_t k = 1; k < size; ++k) {
        std::size_t cand = row * len + t * stride + k;
        if (xv[cand] > xv[best]) best = cand;
      }
      out[row * lout + t] = xv[best];
      arg[row * lout + t] = best;
    }
  }
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("maxpool1d", {batch, ch, lout}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("maxpool1d", {&x}, y, [xn, arg = std::move(arg)](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += g[i];
    });
  }
  return y;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d weight");
  std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin || b.numel() != cout) {
    throw DimensionError("conv2d: weight " + shape_str(w.shape()) + "/bias " +
                         shape_str(b.shape()) + " incompatible with input " +
                         shape_str(x.shape()));
  }
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  if (kh > h + 2 * pad || kw > wd + 2 * pad) {
    throw DimensionError("conv2d: kernel larger than padded input " +
                         shape_str(x.shape()));
  }
  std::size_t ho = (h + 2 * pad - kh) / stride + 1;
  std::size_t wo = (wd + 2 * pad - kw) / stride + 1;
  std::size_t rows = cin * kh * kw, plane = ho * wo, cols = batch * plane;

  // Patch matrix with zero padding; -1 marks a padded tap.
  std::vector<Scalar> patches(rows * cols, Scalar(0));
  auto xv = x.data();
  auto tap = [&](std::size_t oy, std::size_t ky) -> long {
    long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
    return iy;
  };
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t ky = 0; ky < kh; ++ky)
      for (std::size_t kx = 0; kx < kw; ++kx) {
        Scalar* dst = patches.data() + ((c * kh + ky) * kw + kx) * cols;
        for (std::size_t n = 0; n < batch; ++n) {
          const Scalar* src = xv.data() + (n * cin + c) * h * wd;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            long iy = tap(oy, ky);
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (std::size_t ox = 0; ox < wo; ++ox) {
              long ix = tap(ox, kx);
              if (ix < 0 || ix >= static_cast<long>(wd)) continue;
              dst[n * plane + oy * wo + ox] = src[iy * wd + ix];
            }
          }
        }
      }
  std::vector<Scalar> ym(cout * cols, Scalar(0));
  gemm::nn(w.data().data(), patches.data(), ym.data(), cout, rows, cols);
  std::vector<Scalar> out(batch * cout * plane);
  auto bv = b.data();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < cout; ++o) {
      const Scalar* src = ym.data() + o * cols + n * plane;
      Scalar* dst = out.data() + (n * cout + o) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] + bv[o];
    }

  bool rec = any_requires_grad({&x, &w, &b});
  Tensor y = make_result("conv2d", {batch, cout, ho, wo}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node(), wn = w.node(), bn = b.node();
    record_op(
        "conv2d", {&x, &w, &b}, y,
        [xn, wn, bn, patches = std::move(patches), batch, cin, h, wd, cout, kh,
         kw, stride, pad, ho, wo, rows, plane, cols](Grad g) {
          std::vector<Scalar> gm(cout * cols);
          for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t o = 0; o < cout; ++o)
              std::copy_n(g.data() + (n * cout + o) * plane, plane,
                          gm.data() + o * cols + n * plane);
          if (bn->requires_grad) {
            auto gb = bn->grad_buffer();
            for (std::size_t o = 0; o < cout; ++o)
              for (std::size_t j = 0; j < cols; ++j) gb[o] += gm[o * cols + j];
          }
          if (wn->requires_grad) {
            gemm::nt(gm.data(), patches.data(), wn->grad_buffer().data(), cout,
                     cols, rows);
          }
          if (xn->requires_grad) {
            std::vector<Scalar> gp(rows * cols, Scalar(0));
            gemm::tn(wn->value.data(), gm.data(), gp.data(), rows, cout, cols);
            auto gx = xn->grad_buffer();
            for (std::size_t c = 0; c < cin; ++c)
              for (std::size_t ky = 0; ky < kh; ++ky)
                for (std::size_t kx = 0; kx < kw; ++kx) {
                  const Scalar* src =
                      gp.data() + ((c * kh + ky) * kw + kx) * cols;
                  for (std::size_t n = 0; n < batch; ++n) {
                    Scalar* dst = gx.data() + (n * cin + c) * h * wd;
                    for (std::size_t oy = 0; oy < ho; ++oy) {
                      long iy = static_cast<long>(oy * stride + ky) -
                                static_cast<long>(pad);
                      if (iy < 0 || iy >= static_cast<long>(h)) continue;
                      for (std::size_t ox = 0; ox < wo; ++ox) {
                        long ix = static_cast<long>(ox * stride + kx) -
                                  static_cast<long>(pad);
                        if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                        dst[iy * wd + ix] += src[n * plane + oy * wo + ox];
                      }
                    }
                  }
                }
          }
        });
  }
  return y;
}

Tensor global_avg_pool2d(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool2d");
  std::size_t batch = x.dim(0), ch = x.dim(1), plane = x.dim(2) * x.dim(3);
  auto xv = x.data();
  std::vector<Scalar> out(batch * ch, Scalar(0));
  for (std::size_t i = 0; i < batch * ch; ++i) {
    Scalar acc = 0;
    for (std::size_t p = 0; p < plane; ++p) acc += xv[i * plane + p];
    out[i] = acc / static_cast<Scalar>(plane);
  }
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("global_avg_pool2d", {batch, ch}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("global_avg_pool2d", {&x}, y, [xn, plane](Grad g) {
      auto gx = xn->grad_buffer();
      Scalar inv = Scalar(1) / static_cast<Scalar>(plane);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t p = 0; p < plane; ++p) gx[i * plane + p] += g[i] * inv;
    });
  }
  return y;
}

Tensor time_major(const Tensor& x) {
  require_rank(x, 3, "time_major");
  std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  auto xv = x.data();
  std::vector<Scalar> out(xv.size());
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t t = 0; t < len; ++t)
        out[(t * batch + n) * ch + c] = xv[(n * ch + c) * len + t];
  bool rec = any_requires_grad({&x});
  Tensor y = make_result("time_major", {len * batch, ch}, std::move(out), rec);
  if (rec) {
    NodePtr xn = x.node();
    record_op("time_major", {&x}, y, [xn, batch, ch, len](Grad g) {
      auto gx = xn->grad_buffer();
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t c = 0; c < ch; ++c)
          for (std::size_t t = 0; t < len; ++t)
            gx[(n * ch + c) * len + t] += g[(t * batch + n) * ch + c];
    });
  }
  return y;
}

MMHCAN_NAMESPACE_END
