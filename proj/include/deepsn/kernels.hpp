#pragma once
#include <cstddef>

// Low-level compute kernels. Each has a serial reference implementation and
// an OpenMP variant; the unsuffixed entry point dispatches to the parallel
// one when OpenMP is compiled in. The pair must agree bitwise: rows are
// independent, so the parallel split cannot reorder any floating point sum.
namespace deepsn::kernels {

// y = D*x + B*x for a block-CSR operator with n block rows of d x d blocks
// and f feature columns. x and y are (n*d) x f row-major; y is overwritten.
void block_csr_apply_serial(int n, int d, int f,
                            const int* offsets, const int* cols,
                            const double* blocks, const double* diag,
                            const double* x, double* y);
void block_csr_apply_parallel(int n, int d, int f,
                              const int* offsets, const int* cols,
                              const double* blocks, const double* diag,
                              const double* x, double* y);
void block_csr_apply(int n, int d, int f,
                     const int* offsets, const int* cols,
                     const double* blocks, const double* diag,
                     const double* x, double* y);

// Per-vertex block scaling y_v = S_v * x_v with S stored as n d x d blocks.
void block_diag_apply_serial(int n, int d, int f, const double* s,
                             const double* x, double* y);
void block_diag_apply_parallel(int n, int d, int f, const double* s,
                               const double* x, double* y);
void block_diag_apply(int n, int d, int f, const double* s,
                      const double* x, double* y);

int thread_count();

} // namespace deepsn::kernels
