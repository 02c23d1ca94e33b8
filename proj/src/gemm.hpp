#pragma once

#include <Eigen/Core>
#include <cstddef>

#include "mmhcan/precision.hpp"

MMHCAN_NAMESPACE_BEGIN

// Accumulating row-major products, C += op(A) . op(B). Dimensions are those
// of the product: op(A) is m x k, op(B) is k x n.
namespace gemm {

using RowMat =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

inline auto as_long(std::size_t v) { return static_cast<Eigen::Index>(v); }

// A (m x k), B (k x n)
inline void nn(const Scalar* a, const Scalar* b, Scalar* c, std::size_t m,
               std::size_t k, std::size_t n) {
  MutMap(c, as_long(m), as_long(n)).noalias() +=
      ConstMap(a, as_long(m), as_long(k)) * ConstMap(b, as_long(k), as_long(n));
}

// A (m x k), B stored (n x k)
inline void nt(const Scalar* a, const Scalar* b, Scalar* c, std::size_t m,
               std::size_t k, std::size_t n) {
  MutMap(c, as_long(m), as_long(n)).noalias() +=
      ConstMap(a, as_long(m), as_long(k)) *
      ConstMap(b, as_long(n), as_long(k)).transpose();
}

// A stored (k x m), B (k x n)
inline void tn(const Scalar* a, const Scalar* b, Scalar* c, std::size_t m,
               std::size_t k, std::size_t n) {
  MutMap(c, as_long(m), as_long(n)).noalias() +=
      ConstMap(a, as_long(k), as_long(m)).transpose() *
      ConstMap(b, as_long(k), as_long(n));
}

}  // namespace gemm

MMHCAN_NAMESPACE_END
