#pragma once

namespace cenic {

// C[M x N] (+)= A[M x K] * B[K x N], all row-major with explicit leading
// dimensions. Every output accumulates its K products in ascending k order,
// so results are bitwise reproducible for a given build.
template <typename T>
void gemm(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
          bool accumulate);

// out[cols x rows] = in[rows x cols]^T
template <typename T>
void transpose(int rows, int cols, const T* in, T* out);

}  // namespace cenic
