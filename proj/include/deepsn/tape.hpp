#pragma once
#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "deepsn/graph.hpp"
#include "deepsn/matrix.hpp"

namespace deepsn {

// Reverse-mode tape over matrix-valued nodes. The computation graph is
// rebuilt per forward pass; every primitive carries its own adjoint. Nodes
// are referenced by creation index, so reverse iteration is a valid
// topological order.
class Tape {
public:
    Tape();
    ~Tape(); // out of line: node payloads are incomplete here

    int constant(Matrix v);
    // Named trainable leaf; gradients are collected per name after backward.
    int param(std::string name, Matrix v);

    int add(int a, int b);
    int sub(int a, int b);
    int scale(int a, double c);      // c * a
    int shift(int a, double c);      // a + c
    int hadamard(int a, int b);
    int matmul(int a, int b);        // (r x c) * (c x k)
    int affine(int x, int w, int b); // x*w + row-broadcast bias (1 x k)
    // Per-vertex block product: block v of out is W * block v of x, with x
    // holding n stacked d x f blocks and W a d x d matrix.
    int block_left_mul(int w, int x);
    int logistic(int x);
    int softplus(int x);
    // x / (kappa + |x|), elementwise; |x| uses subgradient 0 at the kink.
    int saturate(int x, int kappa);
    int sum(int x);    // 1x1 total
    int sum_sq(int x); // 1x1 sum of squares

    // Row gather/concat (edge endpoint features and friends).
    int gather_rows(int x, std::vector<int> rows);
    int hconcat(int a, int b);
    int reshape(int x, int rows, int cols);

    // Signed neighbor aggregate of (n*d) x f features by activation s (n x 1):
    // block v of out = sum_{u in N(v)} (2 s_u - 1) * block u of x.
    int neighbor_signed_sum(int x, int s, const Graph* g, int d);

    // Shifted (and optionally block-normalized) sheaf Laplacian applied to x,
    // differentiable in x, both restriction-map stacks and psi. f_lo/f_hi are
    // (m*d) x d stacks of per-edge maps for the canonical lower/higher
    // endpoint; psi is m x 1.
    int sheaf_diffuse(int x, int f_lo, int f_hi, int psi, const Graph* g, int d, double eps,
                      bool normalized);

    // Differentiable per-community top-k relaxation: within community i the
    // outputs are sigma((z_v - nu_i)/tau) with nu_i solved by bisection so
    // the community sum equals budget[i] (clamped to [0, |V_i|]). Gradients
    // follow the implicit dependence of nu_i on z.
    int soft_topk(int z, std::vector<int> community, std::vector<double> budget, double tau);

    const Matrix& value(int id) const { return values_[id]; }
    int rows(int id) const { return values_[id].rows(); }
    int cols(int id) const { return values_[id].cols(); }
    std::size_t size() const { return values_.size(); }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
    // 1x1. Gradients of earlier backward calls are cleared.
    void backward(int loss);

    // Zero matrix if the node never received a gradient.
    Matrix gradient(int id) const;

    void for_each_param(const std::function<void(const std::string&, const Matrix&)>& fn) const;

private:
    enum class Op {
        Const,
        Param,
        Add,
        Sub,
        Scale,
        Shift,
        Hadamard,
        MatMul,
        Affine,
        BlockLeftMul,
        Logistic,
        Softplus,
        Saturate,
        Sum,
        SumSq,
        GatherRows,
        HConcat,
        Reshape,
        NeighborSignedSum,
        SheafDiffuse,
        SoftTopK,
    };

    struct Extra; // op-specific payload (graph refs, cached intermediates)

    struct Node {
        Op op;
        std::array<int, 4> in{-1, -1, -1, -1};
        double c = 0.0;
        std::string name; // Param only
    };

    int push(Op op, Matrix value, std::initializer_list<int> inputs, double c = 0.0);
    Matrix& grad_slot(int id);
    void check(int id) const;

    std::vector<Node> nodes_;
    std::vector<Matrix> values_;
    std::vector<Matrix> grads_;
    std::vector<std::unique_ptr<Extra>> extra_;
};

} // namespace deepsn
