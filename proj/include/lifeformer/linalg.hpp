#pragma once

namespace lifeformer::la {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
// Backed by the system BLAS; shapes are (m x k) * (k x n) -> (m x n) after
// the requested transposes.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
          const float* a, int lda, const float* b, int ldb, float beta,
          float* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc);

// Pins the BLAS thread pool to one thread. Called once at startup; sample
// level determinism relies on it.
void use_single_threaded_blas();

}  // namespace lifeformer::la
