#include "linalg.hpp"

#include <Eigen/Core>

namespace wifisense::nn::detail {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

template <typename L, typename R>
void assign(Map& out, const L& lhs, const R& rhs, bool accumulate) {
  if (accumulate) {
    out.noalias() += lhs * rhs;
  } else {
    out.noalias() = lhs * rhs;
  }
}
}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c, bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  Map out(c, M, N);
  if (k == 0) {
    if (!accumulate) out.setZero();
    return;
  }
  if (!trans_a && !trans_b) {
    assign(out, ConstMap(a, M, K), ConstMap(b, K, N), accumulate);
  } else if (!trans_a && trans_b) {
    assign(out, ConstMap(a, M, K), ConstMap(b, N, K).transpose(), accumulate);
  } else if (trans_a && !trans_b) {
    assign(out, ConstMap(a, K, M).transpose(), ConstMap(b, K, N), accumulate);
  } else {
    assign(out, ConstMap(a, K, M).transpose(), ConstMap(b, N, K).transpose(), accumulate);
  }
}

}  // namespace wifisense::nn::detail
