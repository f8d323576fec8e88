#pragma once

#include <cstddef>

namespace wifisense::nn::detail {

// C(m x n) = op(A) * op(B)  (+ C when accumulate).
// A is stored row-major as (m x k), or (k x m) when trans_a; likewise B.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate);

}  // namespace wifisense::nn::detail
