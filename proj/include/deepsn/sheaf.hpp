#pragma once
#include <vector>

#include "deepsn/graph.hpp"
#include "deepsn/matrix.hpp"

namespace deepsn {

// Cellular sheaf on a graph: one d x d restriction map per incident
// (vertex, edge) pair plus a per-edge coefficient in [0,1]. For the canonical
// edge (u,v) with u < v, map_lo is the map of the lower endpoint u and
// map_hi the map of the higher endpoint v. Maps are stored row-major.
struct Sheaf {
    const Graph* graph = nullptr;
    int stalk_dim = 1;
    std::vector<double> maps_lo; // m * d*d
    std::vector<double> maps_hi; // m * d*d
    std::vector<double> coeff;   // m, each in [0,1]

    Sheaf() = default;
    Sheaf(const Graph& g, int d);

    const double* map_lo(int e) const { return maps_lo.data() + static_cast<std::size_t>(e) * stalk_dim * stalk_dim; }
    const double* map_hi(int e) const { return maps_hi.data() + static_cast<std::size_t>(e) * stalk_dim * stalk_dim; }
    double* map_lo(int e) { return maps_lo.data() + static_cast<std::size_t>(e) * stalk_dim * stalk_dim; }
    double* map_hi(int e) { return maps_hi.data() + static_cast<std::size_t>(e) * stalk_dim * stalk_dim; }

    // Identity maps, psi = 1 everywhere.
    static Sheaf identity(const Graph& g, int d);

    void validate() const; // throws DataError on violated invariants
};

// Sparse block operator in block-CSR form. Depending on how it was produced
// it represents L_F, the shifted L_F + eps*I, or the normalized
// D^{-1/2} (L_F + eps*I) D^{-1/2}.
struct SheafOperator {
    const Graph* graph = nullptr;
    int d = 1;
    double epsilon = 0.0;
    bool normalized = false;

    std::vector<int> offsets;      // n+1, prefix of degrees
    std::vector<int> cols;         // 2m neighbor ids, grouped by row vertex
    std::vector<double> blocks;    // 2m * d*d off-diagonal blocks
    std::vector<double> diag;      // n * d*d diagonal blocks of the applied operator

    // Kept by normalize() for downstream reuse (gradients, tests):
    std::vector<double> inv_sqrt_diag; // n * d*d, N_v = D_v^{-1/2}

    int n() const { return graph->num_vertices(); }
    int nd() const { return graph->num_vertices() * d; }

    Matrix to_dense() const;
};

// Coboundary: for each edge e=(u,v) (canonical u<v), rows [e*d, e*d+d) of the
// result hold F_{u<|e} x_u - F_{v<|e} x_v for every feature channel.
Matrix coboundary_apply(const Sheaf& s, const Matrix& x);

// Vertex-wise assembly: diagonal block of v accumulates
// psi_e * F_{v<|e}^T F_{v<|e} over incident edges, off-diagonal block (v,u)
// is -psi_e * F_{v<|e}^T F_{u<|e}. Result has epsilon = 0.
SheafOperator assemble_laplacian(const Sheaf& s);

// In-place diagonal shift by eps (records accumulated epsilon).
void shift(SheafOperator& op, double eps);

// D^{-1/2} (L + eps I) D^{-1/2} with D the block diagonal of the shifted
// operator; per-block inverse symmetric square root (closed form for d<=2).
// Throws NumericalError if a diagonal block is not positive definite.
SheafOperator normalize(const SheafOperator& op);

// Sparse product op * X, parallel over block rows. Never densifies.
Matrix apply_delta(const SheafOperator& op, const Matrix& X);

// Dense symmetric positive-definiteness via Cholesky. Throws NumericalError
// if the input is not symmetric (tolerance 1e-10 relative to max entry).
bool is_positive_definite(const Matrix& m);

// Eigenvalues of a dense symmetric matrix, ascending (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(const Matrix& m);

// Largest eigenvalue of a sparse operator by power iteration.
double estimate_lambda_max(const SheafOperator& op, int iters = 200);

// Per-block symmetric inverse square root, d in {1,2}; m and out are d*d
// row-major. Throws NumericalError when an eigenvalue is below min_eig.
void block_inv_sqrt(int d, const double* m, double* out, double min_eig = 1e-12);

// Eigendecomposition of a symmetric 2x2 [[a,b],[b,c]]: eigenvalues lam[0] <=
// lam[1] and the orthonormal eigenvector matrix q (columns).
void sym2_eig(const double* m, double lam[2], double q[4]);

// Same contract for a d x d symmetric block (closed form for d <= 2, cyclic
// Jacobi above that). lam ascending, q columns are matching eigenvectors.
void sym_eig_small(int d, const double* m, double* lam, double* q);

} // namespace deepsn
