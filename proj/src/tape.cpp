#include "deepsn/tape.hpp"

#include <cmath>

#include "deepsn/errors.hpp"
#include "deepsn/kernels.hpp"
#include "deepsn/sheaf.hpp"

namespace deepsn {
namespace {

double stable_logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

// adjoint of N = D^{-1/2} for one symmetric d x d block (Daleckii-Krein).
void inv_sqrt_adjoint(int d, const double* dblock, const double* nbar, double* dbar) {
    if (d == 1) {
        dbar[0] += -0.5 * std::pow(dblock[0], -1.5) * nbar[0];
        return;
    }
    std::vector<double> lam(d), q(static_cast<std::size_t>(d) * d);
    sym_eig_small(d, dblock, lam.data(), q.data());
    // M = Q^T nbar Q
    std::vector<double> tmp(static_cast<std::size_t>(d) * d, 0.0),
        m(static_cast<std::size_t>(d) * d, 0.0);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += q[k * d + r] * nbar[k * d + c];
            tmp[r * d + c] = acc;
        }
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += tmp[r * d + k] * q[k * d + c];
            m[r * d + c] = acc;
        }
    const double lam_scale = std::max(std::abs(lam[0]), std::abs(lam[d - 1]));
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            const double li = lam[r], lj = lam[c];
            double gamma;
            if (std::abs(li - lj) <= 1e-12 * std::max(lam_scale, 1e-300)) {
                const double mid = 0.5 * (li + lj);
                gamma = -0.5 * std::pow(mid, -1.5);
            } else {
                gamma = (1.0 / std::sqrt(li) - 1.0 / std::sqrt(lj)) / (li - lj);
            }
            m[r * d + c] *= gamma;
        }
    // dbar += Q M Q^T
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += q[r * d + k] * m[k * d + c];
            tmp[r * d + c] = acc;
        }
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += tmp[r * d + k] * q[c * d + k];
            dbar[r * d + c] += acc;
        }
}

} // namespace

struct Tape::Extra {
    const Graph* g = nullptr;
    int d = 0;
    double eps = 0.0;
    bool normalized = false;
    SheafOperator lap;              // shifted, unnormalized
    std::vector<double> nblocks;    // N_v = D_v^{-1/2}
    std::vector<double> dblocks;    // block diagonal of lap
    Matrix y, z;                    // diffuse intermediates (normalized mode)
    std::vector<int> rows;          // gather
    std::vector<int> community;     // soft top-k
    std::vector<double> budget;
    double tau = 1.0;
};

Tape::Tape() = default;
Tape::~Tape() = default;

void Tape::check(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw NumericalError("tape node id out of range");
}

int Tape::push(Op op, Matrix value, std::initializer_list<int> inputs, double c) {
    Node n;
    n.op = op;
    n.c = c;
    int i = 0;
    for (int in : inputs) {
        check(in);
        n.in[i++] = in;
    }
    nodes_.push_back(std::move(n));
    values_.push_back(std::move(value));
    extra_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(Matrix v) { return push(Op::Const, std::move(v), {}); }

int Tape::param(std::string name, Matrix v) {
    const int id = push(Op::Param, std::move(v), {});
    nodes_[id].name = std::move(name);
    return id;
}

int Tape::add(int a, int b) {
    check(a);
    check(b);
    if (!values_[a].same_shape(values_[b])) throw NumericalError("add: shape mismatch");
    Matrix out = values_[a];
    out += values_[b];
    return push(Op::Add, std::move(out), {a, b});
}

int Tape::sub(int a, int b) {
    check(a);
    check(b);
    if (!values_[a].same_shape(values_[b])) throw NumericalError("sub: shape mismatch");
    Matrix out = values_[a];
    out -= values_[b];
    return push(Op::Sub, std::move(out), {a, b});
}

int Tape::scale(int a, double c) {
    check(a);
    Matrix out = values_[a];
    out *= c;
    return push(Op::Scale, std::move(out), {a}, c);
}

int Tape::shift(int a, double c) {
    check(a);
    Matrix out = values_[a];
    for (double& v : out.vec()) v += c;
    return push(Op::Shift, std::move(out), {a}, c);
}

int Tape::hadamard(int a, int b) {
    check(a);
    check(b);
    if (!values_[a].same_shape(values_[b])) throw NumericalError("hadamard: shape mismatch");
    Matrix out = values_[a];
    for (std::size_t i = 0; i < out.vec().size(); ++i) out.vec()[i] *= values_[b].vec()[i];
    return push(Op::Hadamard, std::move(out), {a, b});
}

int Tape::matmul(int a, int b) {
    check(a);
    check(b);
    return push(Op::MatMul, deepsn::matmul(values_[a], values_[b]), {a, b});
}

int Tape::affine(int x, int w, int b) {
    check(x);
    check(w);
    check(b);
    const Matrix& bv = values_[b];
    if (bv.rows() != 1 || bv.cols() != values_[w].cols())
        throw NumericalError("affine: bias must be 1 x output-width");
    Matrix out = deepsn::matmul(values_[x], values_[w]);
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
    return push(Op::Affine, std::move(out), {x, w, b});
}

int Tape::block_left_mul(int w, int x) {
    check(w);
    check(x);
    const Matrix& wv = values_[w];
    const Matrix& xv = values_[x];
    const int d = wv.rows();
    if (wv.cols() != d || xv.rows() % d != 0)
        throw NumericalError("block_left_mul: W must be d x d with x rows divisible by d");
    const int n = xv.rows() / d;
    Matrix out(xv.rows(), xv.cols());
    for (int v = 0; v < n; ++v)
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < xv.cols(); ++c) {
                double acc = 0.0;
                for (int k = 0; k < d; ++k) acc += wv(r, k) * xv(v * d + k, c);
                out(v * d + r, c) = acc;
            }
    return push(Op::BlockLeftMul, std::move(out), {w, x});
}

int Tape::logistic(int x) {
    check(x);
    Matrix out = values_[x];
    for (double& v : out.vec()) v = stable_logistic(v);
    return push(Op::Logistic, std::move(out), {x});
}

int Tape::softplus(int x) {
    check(x);
    Matrix out = values_[x];
    for (double& v : out.vec()) v = stable_softplus(v);
    return push(Op::Softplus, std::move(out), {x});
}

int Tape::saturate(int x, int kappa) {
    check(x);
    check(kappa);
    if (!values_[x].same_shape(values_[kappa])) throw NumericalError("saturate: shape mismatch");
    Matrix out = values_[x];
    for (std::size_t i = 0; i < out.vec().size(); ++i) {
        const double xi = out.vec()[i];
        out.vec()[i] = xi / (values_[kappa].vec()[i] + std::abs(xi));
    }
    return push(Op::Saturate, std::move(out), {x, kappa});
}

int Tape::sum(int x) {
    check(x);
    Matrix out(1, 1);
    for (double v : values_[x].vec()) out(0, 0) += v;
    return push(Op::Sum, std::move(out), {x});
}

int Tape::sum_sq(int x) {
    check(x);
    Matrix out(1, 1);
    for (double v : values_[x].vec()) out(0, 0) += v * v;
    return push(Op::SumSq, std::move(out), {x});
}

int Tape::gather_rows(int x, std::vector<int> rows) {
    check(x);
    const Matrix& xv = values_[x];
    Matrix out(static_cast<int>(rows.size()), xv.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= xv.rows()) throw NumericalError("gather_rows: out of range");
        for (int c = 0; c < xv.cols(); ++c) out(static_cast<int>(i), c) = xv(rows[i], c);
    }
    const int id = push(Op::GatherRows, std::move(out), {x});
    extra_[id] = std::make_unique<Extra>();
    extra_[id]->rows = std::move(rows);
    return id;
}

int Tape::hconcat(int a, int b) {
    check(a);
    check(b);
    const Matrix& av = values_[a];
    const Matrix& bv = values_[b];
    if (av.rows() != bv.rows()) throw NumericalError("hconcat: row mismatch");
    Matrix out(av.rows(), av.cols() + bv.cols());
    for (int r = 0; r < av.rows(); ++r) {
        for (int c = 0; c < av.cols(); ++c) out(r, c) = av(r, c);
        for (int c = 0; c < bv.cols(); ++c) out(r, av.cols() + c) = bv(r, c);
    }
    return push(Op::HConcat, std::move(out), {a, b});
}

int Tape::reshape(int x, int rows, int cols) {
    check(x);
    const Matrix& xv = values_[x];
    if (static_cast<std::size_t>(rows) * cols != xv.vec().size())
        throw NumericalError("reshape: element count mismatch");
    Matrix out(rows, cols);
    out.vec() = xv.vec();
    return push(Op::Reshape, std::move(out), {x});
}

int Tape::neighbor_signed_sum(int x, int s, const Graph* g, int d) {
    check(x);
    check(s);
    const Matrix& xv = values_[x];
    const Matrix& sv = values_[s];
    const int n = g->num_vertices();
    if (xv.rows() != n * d) throw NumericalError("neighbor_signed_sum: feature rows != n*d");
    if (sv.rows() != n || sv.cols() != 1)
        throw NumericalError("neighbor_signed_sum: activation must be n x 1");
    Matrix out(xv.rows(), xv.cols());
    for (int v = 0; v < n; ++v)
        for (int u : g->neighbors(v)) {
            const double w = 2.0 * sv(u, 0) - 1.0;
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < xv.cols(); ++c) out(v * d + r, c) += w * xv(u * d + r, c);
        }
    const int id = push(Op::NeighborSignedSum, std::move(out), {x, s});
    extra_[id] = std::make_unique<Extra>();
    extra_[id]->g = g;
    extra_[id]->d = d;
    return id;
}

int Tape::sheaf_diffuse(int x, int f_lo, int f_hi, int psi, const Graph* g, int d, double eps,
                        bool normalized) {
    check(x);
    check(f_lo);
    check(f_hi);
    check(psi);
    const Matrix& xv = values_[x];
    const int n = g->num_vertices();
    const int m = g->num_edges();
    const int f = xv.cols();
    if (xv.rows() != n * d) throw NumericalError("sheaf_diffuse: feature rows != n*d");
    if (values_[f_lo].rows() != m * d || values_[f_lo].cols() != d ||
        values_[f_hi].rows() != m * d || values_[f_hi].cols() != d)
        throw NumericalError("sheaf_diffuse: map stacks must be (m*d) x d");
    if (values_[psi].rows() != m || values_[psi].cols() != 1)
        throw NumericalError("sheaf_diffuse: psi must be m x 1");

    auto ex = std::make_unique<Extra>();
    ex->g = g;
    ex->d = d;
    ex->eps = eps;
    ex->normalized = normalized;

    Sheaf s(*g, d);
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    for (int e = 0; e < m; ++e) {
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                s.map_lo(e)[r * d + c] = values_[f_lo](e * d + r, c);
                s.map_hi(e)[r * d + c] = values_[f_hi](e * d + r, c);
            }
        s.coeff[e] = values_[psi](e, 0);
    }
    ex->lap = assemble_laplacian(s);
    deepsn::shift(ex->lap, eps);

    Matrix out(n * d, f);
    if (normalized) {
        ex->dblocks = ex->lap.diag;
        ex->nblocks.assign(static_cast<std::size_t>(n) * dd, 0.0);
        for (int v = 0; v < n; ++v)
            block_inv_sqrt(d, ex->dblocks.data() + static_cast<std::size_t>(v) * dd,
                           ex->nblocks.data() + static_cast<std::size_t>(v) * dd);
        ex->y = Matrix(n * d, f);
        kernels::block_diag_apply(n, d, f, ex->nblocks.data(), xv.data(), ex->y.data());
        ex->z = apply_delta(ex->lap, ex->y);
        kernels::block_diag_apply(n, d, f, ex->nblocks.data(), ex->z.data(), out.data());
    } else {
        out = apply_delta(ex->lap, xv);
    }
    const int id = push(Op::SheafDiffuse, std::move(out), {x, f_lo, f_hi, psi});
    extra_[id] = std::move(ex);
    return id;
}

int Tape::soft_topk(int z, std::vector<int> community, std::vector<double> budget, double tau) {
    check(z);
    const Matrix& zv = values_[z];
    const int n = zv.rows();
    if (zv.cols() != 1) throw NumericalError("soft_topk: logits must be n x 1");
    if (static_cast<int>(community.size()) != n) throw NumericalError("soft_topk: community size");
    if (!(tau > 0.0)) throw NumericalError("soft_topk: tau must be positive");
    const int r = static_cast<int>(budget.size());
    std::vector<std::vector<int>> members(r);
    for (int v = 0; v < n; ++v) {
        if (community[v] < 0 || community[v] >= r)
            throw NumericalError("soft_topk: community id out of range");
        members[community[v]].push_back(v);
    }
    Matrix out(n, 1);
    for (int i = 0; i < r; ++i) {
        const auto& vs = members[i];
        if (vs.empty()) continue;
        const double size = static_cast<double>(vs.size());
        const double b = budget[i];
        if (b <= 0.0) continue; // all zero
        if (b >= size) {
            for (int v : vs) out(v, 0) = 1.0;
            continue;
        }
        double lo = zv(vs[0], 0), hi = zv(vs[0], 0);
        for (int v : vs) {
            lo = std::min(lo, zv(v, 0));
            hi = std::max(hi, zv(v, 0));
        }
        lo -= 40.0 * tau + 1.0;
        hi += 40.0 * tau + 1.0;
        for (int it = 0; it < 200; ++it) {
            const double nu = 0.5 * (lo + hi);
            double total = 0.0;
            for (int v : vs) total += stable_logistic((zv(v, 0) - nu) / tau);
            if (total > b) lo = nu;
            else hi = nu;
        }
        const double nu = 0.5 * (lo + hi);
        for (int v : vs) out(v, 0) = stable_logistic((zv(v, 0) - nu) / tau);
    }
    const int id = push(Op::SoftTopK, std::move(out), {z});
    extra_[id] = std::make_unique<Extra>();
    extra_[id]->community = std::move(community);
    extra_[id]->budget = std::move(budget);
    extra_[id]->tau = tau;
    return id;
}

Matrix& Tape::grad_slot(int id) {
    if (grads_[id].vec().empty())
        grads_[id] = Matrix(values_[id].rows(), values_[id].cols());
    return grads_[id];
}

Matrix Tape::gradient(int id) const {
    check(id);
    if (grads_.size() == values_.size() && !grads_[id].vec().empty()) return grads_[id];
    return Matrix(values_[id].rows(), values_[id].cols());
}

void Tape::for_each_param(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].op == Op::Param) fn(nodes_[i].name, gradient(static_cast<int>(i)));
}

void Tape::backward(int loss) {
    check(loss);
    if (values_[loss].rows() != 1 || values_[loss].cols() != 1)
        throw NumericalError("backward: loss must be a scalar node");
    grads_.assign(values_.size(), Matrix());
    grad_slot(loss)(0, 0) = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        if (grads_[id].vec().empty()) continue; // nothing flowed here
        const Node& nd = nodes_[id];
        const Matrix& g = grads_[id];
        switch (nd.op) {
            case Op::Const:
            case Op::Param:
                break;
            case Op::Add: {
                grad_slot(nd.in[0]) += g;
                grad_slot(nd.in[1]) += g;
                break;
            }
            case Op::Sub: {
                grad_slot(nd.in[0]) += g;
                Matrix& gb = grad_slot(nd.in[1]);
                for (std::size_t i = 0; i < gb.vec().size(); ++i) gb.vec()[i] -= g.vec()[i];
                break;
            }
            case Op::Scale: {
                Matrix& ga = grad_slot(nd.in[0]);
                for (std::size_t i = 0; i < ga.vec().size(); ++i)
                    ga.vec()[i] += nd.c * g.vec()[i];
                break;
            }
            case Op::Shift: {
                grad_slot(nd.in[0]) += g;
                break;
            }
            case Op::Hadamard: {
                Matrix& ga = grad_slot(nd.in[0]);
                Matrix& gb = grad_slot(nd.in[1]);
                const Matrix& av = values_[nd.in[0]];
                const Matrix& bv = values_[nd.in[1]];
                for (std::size_t i = 0; i < ga.vec().size(); ++i) {
                    ga.vec()[i] += g.vec()[i] * bv.vec()[i];
                    gb.vec()[i] += g.vec()[i] * av.vec()[i];
                }
                break;
            }
            case Op::MatMul: {
                grad_slot(nd.in[0]) += matmul_a_bt(g, values_[nd.in[1]]);
                grad_slot(nd.in[1]) += matmul_at_b(values_[nd.in[0]], g);
                break;
            }
            case Op::Affine: {
                grad_slot(nd.in[0]) += matmul_a_bt(g, values_[nd.in[1]]);
                grad_slot(nd.in[1]) += matmul_at_b(values_[nd.in[0]], g);
                Matrix& gb = grad_slot(nd.in[2]);
                for (int r = 0; r < g.rows(); ++r)
                    for (int c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                break;
            }
            case Op::BlockLeftMul: {
                const Matrix& wv = values_[nd.in[0]];
                const Matrix& xv = values_[nd.in[1]];
                Matrix& gw = grad_slot(nd.in[0]);
                Matrix& gx = grad_slot(nd.in[1]);
                const int d = wv.rows();
                const int n = xv.rows() / d;
                const int f = xv.cols();
                for (int v = 0; v < n; ++v)
                    for (int r = 0; r < d; ++r)
                        for (int c = 0; c < f; ++c) {
                            const double gv = g(v * d + r, c);
                            if (gv == 0.0) continue;
                            for (int k = 0; k < d; ++k) {
                                gw(r, k) += gv * xv(v * d + k, c);
                                gx(v * d + k, c) += wv(r, k) * gv;
                            }
                        }
                break;
            }
            case Op::Logistic: {
                Matrix& gx = grad_slot(nd.in[0]);
                const Matrix& sv = values_[id];
                for (std::size_t i = 0; i < gx.vec().size(); ++i) {
                    const double s = sv.vec()[i];
                    gx.vec()[i] += g.vec()[i] * s * (1.0 - s);
                }
                break;
            }
            case Op::Softplus: {
                Matrix& gx = grad_slot(nd.in[0]);
                const Matrix& xv = values_[nd.in[0]];
                for (std::size_t i = 0; i < gx.vec().size(); ++i)
                    gx.vec()[i] += g.vec()[i] * stable_logistic(xv.vec()[i]);
                break;
            }
            case Op::Saturate: {
                Matrix& gx = grad_slot(nd.in[0]);
                Matrix& gk = grad_slot(nd.in[1]);
                const Matrix& xv = values_[nd.in[0]];
                const Matrix& kv = values_[nd.in[1]];
                for (std::size_t i = 0; i < gx.vec().size(); ++i) {
                    const double xi = xv.vec()[i];
                    const double den = kv.vec()[i] + std::abs(xi);
                    const double den2 = den * den;
                    gx.vec()[i] += g.vec()[i] * kv.vec()[i] / den2;
                    gk.vec()[i] += -g.vec()[i] * xi / den2;
                }
                break;
            }
            case Op::Sum: {
                Matrix& gx = grad_slot(nd.in[0]);
                for (double& v : gx.vec()) v += g(0, 0);
                break;
            }
            case Op::SumSq: {
                Matrix& gx = grad_slot(nd.in[0]);
                const Matrix& xv = values_[nd.in[0]];
                for (std::size_t i = 0; i < gx.vec().size(); ++i)
                    gx.vec()[i] += 2.0 * g(0, 0) * xv.vec()[i];
                break;
            }
            case Op::GatherRows: {
                Matrix& gx = grad_slot(nd.in[0]);
                const auto& rows = extra_[id]->rows;
                for (std::size_t i = 0; i < rows.size(); ++i)
                    for (int c = 0; c < g.cols(); ++c)
                        gx(rows[i], c) += g(static_cast<int>(i), c);
                break;
            }
            case Op::HConcat: {
                Matrix& ga = grad_slot(nd.in[0]);
                Matrix& gb = grad_slot(nd.in[1]);
                for (int r = 0; r < g.rows(); ++r) {
                    for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(r, c);
                    for (int c = 0; c < gb.cols(); ++c) gb(r, c) += g(r, ga.cols() + c);
                }
                break;
            }
            case Op::Reshape: {
                Matrix& gx = grad_slot(nd.in[0]);
                for (std::size_t i = 0; i < gx.vec().size(); ++i) gx.vec()[i] += g.vec()[i];
                break;
            }
            case Op::NeighborSignedSum: {
                const Extra& ex = *extra_[id];
                const Graph& gr = *ex.g;
                const int d = ex.d;
                const int n = gr.num_vertices();
                const int f = g.cols();
                Matrix& gx = grad_slot(nd.in[0]);
                Matrix& gs = grad_slot(nd.in[1]);
                const Matrix& xv = values_[nd.in[0]];
                const Matrix& sv = values_[nd.in[1]];
                for (int u = 0; u < n; ++u) {
                    // gsum_u = sum of output grads over vertices adjacent to u
                    for (int r = 0; r < d; ++r)
                        for (int c = 0; c < f; ++c) {
                            double acc = 0.0;
                            for (int v : gr.neighbors(u)) acc += g(v * d + r, c);
                            gx(u * d + r, c) += (2.0 * sv(u, 0) - 1.0) * acc;
                            gs(u, 0) += 2.0 * xv(u * d + r, c) * acc;
                        }
                }
                break;
            }
            case Op::SheafDiffuse: {
                const Extra& ex = *extra_[id];
                const Graph& gr = *ex.g;
                const int d = ex.d;
                const int n = gr.num_vertices();
                const int m = gr.num_edges();
                const int f = g.cols();
                const std::size_t dd = static_cast<std::size_t>(d) * d;
                Matrix& gx = grad_slot(nd.in[0]);
                Matrix& glo = grad_slot(nd.in[1]);
                Matrix& ghi = grad_slot(nd.in[2]);
                Matrix& gpsi = grad_slot(nd.in[3]);
                const Matrix& f_lo = values_[nd.in[1]];
                const Matrix& f_hi = values_[nd.in[2]];
                const Matrix& psi = values_[nd.in[3]];

                const Matrix* ybase;     // input of the L-hat application
                Matrix zbar(n * d, f);   // adjoint at the L-hat output
                std::vector<double> nbar;
                if (ex.normalized) {
                    kernels::block_diag_apply(n, d, f, ex.nblocks.data(), g.data(), zbar.data());
                    nbar.assign(static_cast<std::size_t>(n) * dd, 0.0);
                    for (int v = 0; v < n; ++v)
                        for (int r = 0; r < d; ++r)
                            for (int c = 0; c < d; ++c) {
                                double acc = 0.0;
                                for (int k = 0; k < f; ++k)
                                    acc += g(v * d + r, k) * ex.z(v * d + c, k);
                                nbar[v * dd + r * d + c] += acc;
                            }
                    ybase = &ex.y;
                } else {
                    zbar = g;
                    ybase = &values_[nd.in[0]];
                }
                const Matrix& y = *ybase;

                // x-bar and (normalized) remaining N-bar term via ybar.
                Matrix ybar = apply_delta(ex.lap, zbar);
                if (ex.normalized) {
                    const Matrix& xv = values_[nd.in[0]];
                    Matrix tmp(n * d, f);
                    kernels::block_diag_apply(n, d, f, ex.nblocks.data(), ybar.data(), tmp.data());
                    gx += tmp;
                    for (int v = 0; v < n; ++v)
                        for (int r = 0; r < d; ++r)
                            for (int c = 0; c < d; ++c) {
                                double acc = 0.0;
                                for (int k = 0; k < f; ++k)
                                    acc += ybar(v * d + r, k) * xv(v * d + c, k);
                                nbar[v * dd + r * d + c] += acc;
                            }
                } else {
                    gx += ybar;
                }

                // Per-edge L-hat gradients from the (y, zbar) pair.
                std::vector<double> cbuf(static_cast<std::size_t>(d) * f);
                std::vector<double> wbuf(static_cast<std::size_t>(d) * f);
                for (int e = 0; e < m; ++e) {
                    const auto [lo, hi] = gr.edge(e);
                    const double pe = psi(e, 0);
                    for (int r = 0; r < d; ++r)
                        for (int c = 0; c < f; ++c) {
                            double accC = 0.0, accW = 0.0;
                            for (int k = 0; k < d; ++k) {
                                accC += f_lo(e * d + r, k) * y(lo * d + k, c) -
                                        f_hi(e * d + r, k) * y(hi * d + k, c);
                                accW += f_lo(e * d + r, k) * zbar(lo * d + k, c) -
                                        f_hi(e * d + r, k) * zbar(hi * d + k, c);
                            }
                            cbuf[r * f + c] = accC;
                            wbuf[r * f + c] = accW;
                        }
                    double psidot = 0.0;
                    for (std::size_t i = 0; i < cbuf.size(); ++i) psidot += wbuf[i] * cbuf[i];
                    gpsi(e, 0) += psidot;
                    for (int r = 0; r < d; ++r)
                        for (int k = 0; k < d; ++k) {
                            double alo = 0.0, ahi = 0.0;
                            for (int c = 0; c < f; ++c) {
                                alo += cbuf[r * f + c] * zbar(lo * d + k, c) +
                                       wbuf[r * f + c] * y(lo * d + k, c);
                                ahi += cbuf[r * f + c] * zbar(hi * d + k, c) +
                                       wbuf[r * f + c] * y(hi * d + k, c);
                            }
                            glo(e * d + r, k) += pe * alo;
                            ghi(e * d + r, k) -= pe * ahi;
                        }
                }

                if (ex.normalized) {
                    // N-bar -> D-bar, then into psi and the map stacks.
                    std::vector<double> dbar(static_cast<std::size_t>(n) * dd, 0.0);
                    for (int v = 0; v < n; ++v)
                        inv_sqrt_adjoint(d, ex.dblocks.data() + v * dd, nbar.data() + v * dd,
                                         dbar.data() + v * dd);
                    for (int e = 0; e < m; ++e) {
                        const auto [lo, hi] = gr.edge(e);
                        const double pe = psi(e, 0);
                        double pd = 0.0;
                        for (int r = 0; r < d; ++r)
                            for (int c = 0; c < d; ++c) {
                                // <Dbar_v, F^T F> terms
                                double flo_rc = 0.0, fhi_rc = 0.0;
                                for (int k = 0; k < d; ++k) {
                                    flo_rc += f_lo(e * d + k, r) * f_lo(e * d + k, c);
                                    fhi_rc += f_hi(e * d + k, r) * f_hi(e * d + k, c);
                                }
                                pd += dbar[lo * dd + r * d + c] * flo_rc +
                                      dbar[hi * dd + r * d + c] * fhi_rc;
                            }
                        gpsi(e, 0) += pd;
                        for (int r = 0; r < d; ++r)
                            for (int k = 0; k < d; ++k) {
                                double alo = 0.0, ahi = 0.0;
                                for (int c = 0; c < d; ++c) {
                                    alo += f_lo(e * d + r, c) *
                                           (dbar[lo * dd + c * d + k] + dbar[lo * dd + k * d + c]);
                                    ahi += f_hi(e * d + r, c) *
                                           (dbar[hi * dd + c * d + k] + dbar[hi * dd + k * d + c]);
                                }
                                glo(e * d + r, k) += pe * alo;
                                ghi(e * d + r, k) += pe * ahi;
                            }
                    }
                }
                break;
            }
            case Op::SoftTopK: {
                const Extra& ex = *extra_[id];
                const Matrix& sv = values_[id];
                Matrix& gz = grad_slot(nd.in[0]);
                const int r = static_cast<int>(ex.budget.size());
                std::vector<std::vector<int>> members(r);
                for (std::size_t v = 0; v < ex.community.size(); ++v)
                    members[ex.community[v]].push_back(static_cast<int>(v));
                for (int i = 0; i < r; ++i) {
                    const auto& vs = members[i];
                    if (vs.empty()) continue;
                    const double b = ex.budget[i];
                    if (b <= 0.0 || b >= static_cast<double>(vs.size())) continue; // saturated
                    double wsum = 0.0, gdot = 0.0;
                    for (int v : vs) {
                        const double w = sv(v, 0) * (1.0 - sv(v, 0));
                        wsum += w;
                        gdot += g(v, 0) * w;
                    }
                    if (wsum <= 0.0) continue;
                    const double mean = gdot / wsum;
                    for (int v : vs) {
                        const double w = sv(v, 0) * (1.0 - sv(v, 0));
                        gz(v, 0) += (w / ex.tau) * (g(v, 0) - mean);
                    }
                }
                break;
            }
        }
    }
}

} // namespace deepsn
