#include "deepsn/sheaf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "deepsn/errors.hpp"
#include "deepsn/kernels.hpp"
#include "deepsn/rng.hpp"

namespace deepsn {
namespace {

// out += scale * A^T B for d x d row-major blocks.
inline void acc_at_b(int d, double scale, const double* a, const double* b, double* out) {
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += a[k * d + r] * b[k * d + c];
            out[r * d + c] += scale * acc;
        }
}

// out = A * B for d x d row-major blocks.
inline void mul_blocks(int d, const double* a, const double* b, double* out) {
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += a[r * d + k] * b[k * d + c];
            out[r * d + c] = acc;
        }
}

} // namespace

Sheaf::Sheaf(const Graph& g, int d)
    : graph(&g),
      stalk_dim(d),
      maps_lo(static_cast<std::size_t>(g.num_edges()) * d * d, 0.0),
      maps_hi(static_cast<std::size_t>(g.num_edges()) * d * d, 0.0),
      coeff(g.num_edges(), 1.0) {
    if (d < 1) throw DataError("stalk dimension must be positive");
}

Sheaf Sheaf::identity(const Graph& g, int d) {
    Sheaf s(g, d);
    for (int e = 0; e < g.num_edges(); ++e)
        for (int k = 0; k < d; ++k) {
            s.map_lo(e)[k * d + k] = 1.0;
            s.map_hi(e)[k * d + k] = 1.0;
        }
    return s;
}

void Sheaf::validate() const {
    if (!graph) throw DataError("sheaf has no graph");
    const std::size_t m = static_cast<std::size_t>(graph->num_edges());
    const std::size_t dd = static_cast<std::size_t>(stalk_dim) * stalk_dim;
    if (maps_lo.size() != m * dd || maps_hi.size() != m * dd)
        throw DataError("restriction map storage does not match edge count");
    if (coeff.size() != m) throw DataError("coefficient count does not match edge count");
    for (std::size_t e = 0; e < m; ++e) {
        if (!std::isfinite(coeff[e]) || coeff[e] < 0.0 || coeff[e] > 1.0)
            throw DataError("edge coefficient outside [0,1] at edge " + std::to_string(e));
    }
    for (double v : maps_lo)
        if (!std::isfinite(v)) throw DataError("non-finite restriction map entry");
    for (double v : maps_hi)
        if (!std::isfinite(v)) throw DataError("non-finite restriction map entry");
}

Matrix coboundary_apply(const Sheaf& s, const Matrix& x) {
    const Graph& g = *s.graph;
    const int d = s.stalk_dim;
    const int f = x.cols();
    if (x.rows() != g.num_vertices() * d)
        throw DataError("feature matrix rows do not match n*d");
    Matrix out(g.num_edges() * d, f);
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto [u, v] = g.edge(e);
        const double* fu = s.map_lo(e);
        const double* fv = s.map_hi(e);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < f; ++c) {
                double acc = 0.0;
                for (int k = 0; k < d; ++k)
                    acc += fu[r * d + k] * x(u * d + k, c) - fv[r * d + k] * x(v * d + k, c);
                out(e * d + r, c) = acc;
            }
    }
    return out;
}

SheafOperator assemble_laplacian(const Sheaf& s) {
    const Graph& g = *s.graph;
    const int n = g.num_vertices();
    const int d = s.stalk_dim;
    const std::size_t dd = static_cast<std::size_t>(d) * d;

    SheafOperator op;
    op.graph = &g;
    op.d = d;
    op.offsets.assign(n + 1, 0);
    for (int v = 0; v < n; ++v) op.offsets[v + 1] = op.offsets[v] + g.degree(v);
    op.cols.resize(op.offsets[n]);
    op.blocks.assign(static_cast<std::size_t>(op.offsets[n]) * dd, 0.0);
    op.diag.assign(static_cast<std::size_t>(n) * dd, 0.0);

    for (int v = 0; v < n; ++v) {
        const auto& nbr = g.neighbors(v);
        const auto& inc = g.incident_edges(v);
        double* dv = op.diag.data() + static_cast<std::size_t>(v) * dd;
        for (std::size_t i = 0; i < nbr.size(); ++i) {
            const int u = nbr[i];
            const int e = inc[i];
            const double psi = s.coeff[e];
            const double* f_v = (v < u) ? s.map_lo(e) : s.map_hi(e);
            const double* f_u = (v < u) ? s.map_hi(e) : s.map_lo(e);
            op.cols[op.offsets[v] + static_cast<int>(i)] = u;
            double* b = op.blocks.data() + (static_cast<std::size_t>(op.offsets[v]) + i) * dd;
            acc_at_b(d, -psi, f_v, f_u, b);
            acc_at_b(d, psi, f_v, f_v, dv);
        }
    }
    return op;
}

void shift(SheafOperator& op, double eps) {
    const std::size_t dd = static_cast<std::size_t>(op.d) * op.d;
    for (int v = 0; v < op.n(); ++v)
        for (int k = 0; k < op.d; ++k)
            op.diag[static_cast<std::size_t>(v) * dd + static_cast<std::size_t>(k) * op.d + k] += eps;
    op.epsilon += eps;
}

SheafOperator normalize(const SheafOperator& op) {
    const int n = op.n();
    const int d = op.d;
    const std::size_t dd = static_cast<std::size_t>(d) * d;

    SheafOperator out = op;
    out.normalized = true;
    out.inv_sqrt_diag.assign(static_cast<std::size_t>(n) * dd, 0.0);
    for (int v = 0; v < n; ++v)
        block_inv_sqrt(d, op.diag.data() + static_cast<std::size_t>(v) * dd,
                       out.inv_sqrt_diag.data() + static_cast<std::size_t>(v) * dd);

    std::vector<double> tmp(dd);
    for (int v = 0; v < n; ++v) {
        const double* nv = out.inv_sqrt_diag.data() + static_cast<std::size_t>(v) * dd;
        double* dv = out.diag.data() + static_cast<std::size_t>(v) * dd;
        mul_blocks(d, nv, op.diag.data() + static_cast<std::size_t>(v) * dd, tmp.data());
        mul_blocks(d, tmp.data(), nv, dv);
        for (int i = op.offsets[v]; i < op.offsets[v + 1]; ++i) {
            const int u = op.cols[i];
            const double* nu = out.inv_sqrt_diag.data() + static_cast<std::size_t>(u) * dd;
            double* b = out.blocks.data() + static_cast<std::size_t>(i) * dd;
            mul_blocks(d, nv, op.blocks.data() + static_cast<std::size_t>(i) * dd, tmp.data());
            mul_blocks(d, tmp.data(), nu, b);
        }
    }
    return out;
}

Matrix apply_delta(const SheafOperator& op, const Matrix& x) {
    if (x.rows() != op.nd()) throw DataError("feature matrix rows do not match n*d");
    Matrix y(x.rows(), x.cols());
    kernels::block_csr_apply(op.n(), op.d, x.cols(), op.offsets.data(), op.cols.data(),
                             op.blocks.data(), op.diag.data(), x.data(), y.data());
    return y;
}

Matrix SheafOperator::to_dense() const {
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    Matrix m(nd(), nd());
    for (int v = 0; v < n(); ++v) {
        const double* dv = diag.data() + static_cast<std::size_t>(v) * dd;
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) m(v * d + r, v * d + c) = dv[r * d + c];
        for (int i = offsets[v]; i < offsets[v + 1]; ++i) {
            const int u = cols[i];
            const double* b = blocks.data() + static_cast<std::size_t>(i) * dd;
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) m(v * d + r, u * d + c) = b[r * d + c];
        }
    }
    return m;
}

bool is_positive_definite(const Matrix& m) {
    if (m.rows() != m.cols()) throw NumericalError("definiteness check needs a square matrix");
    const int n = m.rows();
    double scale = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(i, j)));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10 * scale)
                throw NumericalError("definiteness check needs a symmetric matrix");

    // Standard left-looking Cholesky; a non-positive or non-finite pivot
    // certifies an eigenvalue <= 0.
    Matrix l(n, n);
    for (int j = 0; j < n; ++j) {
        double pivot = m(j, j);
        for (int k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double acc = m(i, j);
            for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / ljj;
        }
    }
    return true;
}

void sym2_eig(const double* m, double lam[2], double q[4]) {
    const double a = m[0], c = m[3];
    const double b = 0.5 * (m[1] + m[2]);
    const double mid = 0.5 * (a + c);
    const double delta = 0.5 * (a - c);
    const double disc = std::hypot(delta, b);
    lam[0] = mid - disc;
    lam[1] = mid + disc;
    if (disc <= 0.0) {
        q[0] = 1.0; q[1] = 0.0; q[2] = 0.0; q[3] = 1.0;
        return;
    }
    const double theta = 0.5 * std::atan2(b, delta);
    const double ct = std::cos(theta), st = std::sin(theta);
    // Columns: eigenvector of lam[0], then of lam[1].
    q[0] = -st; q[1] = ct;
    q[2] = ct;  q[3] = st;
}

namespace {

// Cyclic Jacobi on a small dense symmetric matrix; lam ascending, q columns
// are the matching eigenvectors.
void sym_eig_jacobi(int d, const double* m, double* lam, double* q) {
    std::vector<double> a(m, m + static_cast<std::size_t>(d) * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) q[r * d + c] = (r == c) ? 1.0 : 0.0;
    double total = 0.0;
    for (double v : a) total += v * v;
    const double stop = std::max(total, 1e-300) * 1e-28;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int r = 0; r < d; ++r)
            for (int c = r + 1; c < d; ++c) off += a[r * d + c] * a[r * d + c];
        if (off < stop) break;
        for (int p = 0; p < d; ++p)
            for (int r = p + 1; r < d; ++r) {
                const double apr = a[p * d + r];
                if (apr == 0.0) continue;
                const double tau = (a[r * d + r] - a[p * d + p]) / (2.0 * apr);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cth = 1.0 / std::sqrt(1.0 + t * t);
                const double sth = t * cth;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[k * d + p], akr = a[k * d + r];
                    a[k * d + p] = cth * akp - sth * akr;
                    a[k * d + r] = sth * akp + cth * akr;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[p * d + k], ark = a[r * d + k];
                    a[p * d + k] = cth * apk - sth * ark;
                    a[r * d + k] = sth * apk + cth * ark;
                }
                for (int k = 0; k < d; ++k) {
                    const double qkp = q[k * d + p], qkr = q[k * d + r];
                    q[k * d + p] = cth * qkp - sth * qkr;
                    q[k * d + r] = sth * qkp + cth * qkr;
                }
            }
    }
    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return a[x * d + x] < a[y * d + y]; });
    std::vector<double> qs(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
        lam[i] = a[order[i] * d + order[i]];
        for (int k = 0; k < d; ++k) qs[k * d + i] = q[k * d + order[i]];
    }
    std::memcpy(q, qs.data(), qs.size() * sizeof(double));
}

} // namespace

void sym_eig_small(int d, const double* m, double* lam, double* q) {
    if (d == 1) {
        lam[0] = m[0];
        q[0] = 1.0;
    } else if (d == 2) {
        sym2_eig(m, lam, q);
    } else {
        sym_eig_jacobi(d, m, lam, q);
    }
}

void block_inv_sqrt(int d, const double* m, double* out, double min_eig) {
    if (d == 1) {
        if (!(m[0] >= min_eig))
            throw NumericalError("diagonal block is singular or not positive definite");
        out[0] = 1.0 / std::sqrt(m[0]);
        return;
    }
    std::vector<double> lam(d), q(static_cast<std::size_t>(d) * d);
    if (d == 2) sym2_eig(m, lam.data(), q.data());
    else sym_eig_jacobi(d, m, lam.data(), q.data());
    if (!(lam[0] >= min_eig))
        throw NumericalError("diagonal block is singular or not positive definite");
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                acc += q[r * d + k] * q[c * d + k] / std::sqrt(lam[k]);
            out[r * d + c] = acc;
        }
}

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
    if (m.rows() != m.cols()) throw NumericalError("eigensolve needs a square matrix");
    const int n = m.rows();
    std::vector<double> lam(n), q(static_cast<std::size_t>(n) * n);
    sym_eig_jacobi(n, m.data(), lam.data(), q.data());
    return lam;
}

double estimate_lambda_max(const SheafOperator& op, int iters) {
    const int nd = op.nd();
    Matrix x(nd, 1);
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (int i = 0; i < nd; ++i)
        x(i, 0) = 0.5 + static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    double lam = 0.0;
    for (int it = 0; it < iters; ++it) {
        Matrix y = apply_delta(op, x);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < nd; ++i) {
            num += x(i, 0) * y(i, 0);
            den += x(i, 0) * x(i, 0);
        }
        lam = num / den;
        const double norm = frobenius_norm(y);
        if (norm == 0.0) return 0.0;
        for (int i = 0; i < nd; ++i) x(i, 0) = y(i, 0) / norm;
    }
    return lam;
}

} // namespace deepsn
