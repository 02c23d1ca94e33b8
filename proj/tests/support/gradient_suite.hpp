#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmhcan/precision.hpp"

namespace mmhcan {

struct OpGradResult {
  std::string op;
  std::size_t cases = 0;
  double max_rel_error = 0;
  double mean_rel_error = 0;
};

// |a - n|_2 / max(|a|_2, |n|_2)
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace mmhcan

MMHCAN_NAMESPACE_BEGIN

// Randomized cases for conv1d, the recurrent cell, hgnn_layer, attention
// fusion, triplet loss, cross entropy and a small full model. A case is fully
// determined by (op, seed) and all random data is rounded to float, so the 32-
// and 64-bit builds construct the same problem.
std::vector<std::string> gradient_ops();

// Flattened leaf values, analytic gradient, the case's discrete choices
// (hypergraph incidences, mined triplets), and the loss / central-difference
// gradient at given values with those choices replayed.
std::vector<double> case_values(std::size_t op, std::uint64_t seed);
std::vector<double> case_gradient(std::size_t op, std::uint64_t seed);
std::vector<long long> case_structure(std::size_t op, std::uint64_t seed);
double case_loss(std::size_t op, std::uint64_t seed, std::span<const double> values,
                 const std::vector<long long>& structure);
std::vector<double> numeric_gradient(std::size_t op, std::uint64_t seed,
                                     std::span<const double> values,
                                     const std::vector<long long>& structure, double eps);

MMHCAN_NAMESPACE_END

namespace mmhcan {

// 64-bit: analytic vs 64-bit central differences.
// 32-bit: analytic vs 64-bit central differences evaluated at the 32-bit
// case's own (float) values, which keeps cancellation noise out of the oracle.
std::vector<OpGradResult> run_gradient_suite_f64(std::size_t cases, std::uint64_t seed);
std::vector<OpGradResult> run_gradient_suite_f32(std::size_t cases, std::uint64_t seed);

}  // namespace mmhcan
