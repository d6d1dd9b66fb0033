#include "cenic/gemm.hpp"

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <vector>

namespace cenic {

namespace {

// 4 x (3 vectors) register tile: twelve accumulators fit in the 16 vector
// registers of AVX2. 256-bit vectors measured fastest on the reference host;
// GCC lowers them to SSE pairs when AVX is unavailable.
constexpr int kVecBytes = 32;
constexpr int kRowBlock = 4;
constexpr int kVecsPerRow = 3;

template <typename T>
struct Vec {
  typedef T type __attribute__((vector_size(kVecBytes), aligned(alignof(T))));
};

template <typename T>
constexpr int panel_width() {
  return kVecsPerRow * kVecBytes / static_cast<int>(sizeof(T));
}

template <typename T>
void tile_full(int k, const T* a, int lda, const T* panel, T* c, int ldc, bool accumulate) {
  using V = typename Vec<T>::type;
  constexpr int lanes = kVecBytes / sizeof(T);
  constexpr int nb = panel_width<T>();
  V acc[kRowBlock][kVecsPerRow];
  for (int r = 0; r < kRowBlock; ++r)
    for (int v = 0; v < kVecsPerRow; ++v)
      acc[r][v] = accumulate ? *reinterpret_cast<const V*>(c + r * ldc + v * lanes) : V{};
  for (int p = 0; p < k; ++p) {
    const V* bv = reinterpret_cast<const V*>(panel + static_cast<std::ptrdiff_t>(p) * nb);
    for (int r = 0; r < kRowBlock; ++r) {
      const T av = a[r * lda + p];
      for (int v = 0; v < kVecsPerRow; ++v) acc[r][v] += av * bv[v];
    }
  }
  for (int r = 0; r < kRowBlock; ++r)
    for (int v = 0; v < kVecsPerRow; ++v) *reinterpret_cast<V*>(c + r * ldc + v * lanes) = acc[r][v];
}

template <typename T>
void tile_edge(int mb, int nbw, int k, const T* a, int lda, const T* panel, T* c, int ldc,
               bool accumulate) {
  constexpr int nb = panel_width<T>();
  alignas(64) T acc[kRowBlock][nb];
  for (int r = 0; r < mb; ++r)
    for (int j = 0; j < nbw; ++j) acc[r][j] = accumulate ? c[r * ldc + j] : T(0);
  for (int p = 0; p < k; ++p) {
    const T* brow = panel + static_cast<std::ptrdiff_t>(p) * nb;
    for (int r = 0; r < mb; ++r) {
      const T av = a[r * lda + p];
      for (int j = 0; j < nbw; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (int r = 0; r < mb; ++r)
    for (int j = 0; j < nbw; ++j) c[r * ldc + j] = acc[r][j];
}

}  // namespace

template <typename T>
void gemm(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
          bool accumulate) {
  if (m <= 0 || n <= 0) return;
  constexpr int nb = panel_width<T>();
  // Column block sized so the packed B block stays L2 resident.
  constexpr std::size_t kPackBytes = 512 * 1024;
  const int kk = std::max(k, 1);
  int nc = static_cast<int>(kPackBytes / (sizeof(T) * kk)) / nb * nb;
  nc = std::clamp(nc, nb, ((n + nb - 1) / nb) * nb);
  std::vector<T> packed(static_cast<std::size_t>(kk) * nc, T(0));

  for (int n0 = 0; n0 < n; n0 += nc) {
    const int ncw = std::min(nc, n - n0);
    const int panels = (ncw + nb - 1) / nb;
    for (int q = 0; q < panels; ++q) {
      const int cols = std::min(nb, ncw - q * nb);
      T* dst = packed.data() + static_cast<std::size_t>(q) * kk * nb;
      for (int p = 0; p < k; ++p)
        std::memcpy(dst + static_cast<std::size_t>(p) * nb,
                    b + static_cast<std::ptrdiff_t>(p) * ldb + n0 + q * nb, cols * sizeof(T));
    }
    for (int m0 = 0; m0 < m; m0 += kRowBlock) {
      const int mb = std::min(kRowBlock, m - m0);
      const T* ablk = a + static_cast<std::ptrdiff_t>(m0) * lda;
      for (int q = 0; q < panels; ++q) {
        const int cols = std::min(nb, ncw - q * nb);
        const T* panel = packed.data() + static_cast<std::size_t>(q) * kk * nb;
        T* cblk = c + static_cast<std::ptrdiff_t>(m0) * ldc + n0 + q * nb;
        if (mb == kRowBlock && cols == nb)
          tile_full(k, ablk, lda, panel, cblk, ldc, accumulate);
        else
          tile_edge(mb, cols, k, ablk, lda, panel, cblk, ldc, accumulate);
      }
    }
  }
}

template <typename T>
void transpose(int rows, int cols, const T* in, T* out) {
  constexpr int tile = 32;
  for (int r0 = 0; r0 < rows; r0 += tile)
    for (int c0 = 0; c0 < cols; c0 += tile) {
      const int r1 = std::min(rows, r0 + tile);
      const int c1 = std::min(cols, c0 + tile);
      for (int r = r0; r < r1; ++r)
        for (int cc = c0; cc < c1; ++cc)
          out[static_cast<std::ptrdiff_t>(cc) * rows + r] =
              in[static_cast<std::ptrdiff_t>(r) * cols + cc];
    }
}

template void gemm<float>(int, int, int, const float*, int, const float*, int, float*, int, bool);
template void gemm<double>(int, int, int, const double*, int, const double*, int, double*, int,
                           bool);
template void transpose<float>(int, int, const float*, float*);
template void transpose<double>(int, int, const double*, double*);

}  // namespace cenic
