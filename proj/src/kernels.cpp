#include "deepsn/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace deepsn::kernels {
namespace {

// One block row: y_v = diag_v x_v + sum_i block_{v,i} x_{cols[i]}.
inline void apply_row(int v, int d, int f,
                      const int* offsets, const int* cols,
                      const double* blocks, const double* diag,
                      const double* x, double* y) {
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    double* yv = y + static_cast<std::size_t>(v) * d * f;
    const double* dv = diag + static_cast<std::size_t>(v) * dd;
    const double* xv = x + static_cast<std::size_t>(v) * d * f;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < f; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += dv[r * d + k] * xv[k * f + c];
            yv[r * f + c] = acc;
        }
    for (int i = offsets[v]; i < offsets[v + 1]; ++i) {
        const double* b = blocks + static_cast<std::size_t>(i) * dd;
        const double* xu = x + static_cast<std::size_t>(cols[i]) * d * f;
        for (int r = 0; r < d; ++r)
            for (int k = 0; k < d; ++k) {
                const double brk = b[r * d + k];
                if (brk == 0.0) continue;
                const double* xrow = xu + static_cast<std::size_t>(k) * f;
                double* yrow = yv + static_cast<std::size_t>(r) * f;
                for (int c = 0; c < f; ++c) yrow[c] += brk * xrow[c];
            }
    }
}

inline void diag_row(int v, int d, int f, const double* s,
                     const double* x, double* y) {
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    const double* sv = s + static_cast<std::size_t>(v) * dd;
    const double* xv = x + static_cast<std::size_t>(v) * d * f;
    double* yv = y + static_cast<std::size_t>(v) * d * f;
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < f; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += sv[r * d + k] * xv[k * f + c];
            yv[r * f + c] = acc;
        }
}

} // namespace

void block_csr_apply_serial(int n, int d, int f,
                            const int* offsets, const int* cols,
                            const double* blocks, const double* diag,
                            const double* x, double* y) {
    for (int v = 0; v < n; ++v)
        apply_row(v, d, f, offsets, cols, blocks, diag, x, y);
}

void block_csr_apply_parallel(int n, int d, int f,
                              const int* offsets, const int* cols,
                              const double* blocks, const double* diag,
                              const double* x, double* y) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int v = 0; v < n; ++v)
        apply_row(v, d, f, offsets, cols, blocks, diag, x, y);
}

void block_csr_apply(int n, int d, int f,
                     const int* offsets, const int* cols,
                     const double* blocks, const double* diag,
                     const double* x, double* y) {
#ifdef _OPENMP
    block_csr_apply_parallel(n, d, f, offsets, cols, blocks, diag, x, y);
#else
    block_csr_apply_serial(n, d, f, offsets, cols, blocks, diag, x, y);
#endif
}

void block_diag_apply_serial(int n, int d, int f, const double* s,
                             const double* x, double* y) {
    for (int v = 0; v < n; ++v) diag_row(v, d, f, s, x, y);
}

void block_diag_apply_parallel(int n, int d, int f, const double* s,
                               const double* x, double* y) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int v = 0; v < n; ++v) diag_row(v, d, f, s, x, y);
}

void block_diag_apply(int n, int d, int f, const double* s,
                      const double* x, double* y) {
#ifdef _OPENMP
    block_diag_apply_parallel(n, d, f, s, x, y);
#else
    block_diag_apply_serial(n, d, f, s, x, y);
#endif
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace deepsn::kernels
