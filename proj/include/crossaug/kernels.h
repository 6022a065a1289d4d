#ifndef CROSSAUG_KERNELS_H_
#define CROSSAUG_KERNELS_H_

#include <cstddef>

// Dense matrix kernels used by the autodiff primitives.
//
// Every kernel exists twice: a plain serial loop nest kept as the reference,
// and an OpenMP version that splits the output rows across threads. Both
// accumulate each output element over the inner dimension in the same order,
// so their results are bitwise identical and training stays deterministic
// regardless of the thread count.
//
// All matrices are row-major. Every kernel accumulates into C.
namespace crossaug::kernels {

namespace serial {

// C(m x n) += A(m x k) * B(k x n)
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
// C(m x n) += A(m x k) * B(n x k)^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
// C(k x n) += A(m x k)^T * B(m x n)
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);

}  // namespace serial

namespace parallel {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);

}  // namespace parallel

// Multiply-add count above which the dispatching kernels go parallel.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 18;

int max_threads();

// Dispatchers: parallel when there is more than one thread and the product
// is large enough to amortize the fork, serial otherwise.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c);

}  // namespace crossaug::kernels

#endif  // CROSSAUG_KERNELS_H_
