#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "deepsn/matrix.hpp"
#include "deepsn/sheaf.hpp"

namespace deepsn {

// Per-vertex reaction parameters. Phi/kappa arrays are (n*d) x f like the
// feature matrix itself; kappa must stay strictly positive elementwise so the
// saturating denominators never vanish.
struct ReactionParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    Matrix phi1, kappa1;
    Matrix phi2, kappa2;

    void validate() const; // throws DataError on nonpositive kappa etc.
};

// Activation probabilities S^t, one per vertex, each in [0,1].
struct ActivationVector {
    std::vector<double> probs;
    int step = 0;

    void validate() const;
};

// A(X) = Phi1 (*) X / (kappa1 + |X|), elementwise.
Matrix pointwise_reaction(const Matrix& x, const Matrix& phi1, const Matrix& kappa1);

// Signed neighbor aggregate: row block v collects sum_{u in N(v)} (2 S_u - 1) X_u.
Matrix signed_neighbor_sum(const Graph& g, int d, const Matrix& x, const std::vector<double>& s);

// R(X) = Phi2 (*) Xd / (kappa2 + |Xd|) with Xd the signed neighbor aggregate.
Matrix coupled_reaction(const Graph& g, int d, const Matrix& x, const ActivationVector& s,
                        const Matrix& phi2, const Matrix& kappa2);

// One explicit Euler step:
//   X(t+1) = X(t) - alpha * op X(t) + beta * A(X(t)) + gamma * R(X(t), S).
// Step size is folded into the three coefficients. Throws NumericalError if
// the result is non-finite or exceeds the 1e8 stability guard.
Matrix diffusion_step(const Matrix& x, const SheafOperator& op, const ReactionParams& p,
                      const ActivationVector& s);

struct FixedPointResult {
    Matrix x;
    int steps = 0;
    bool converged = false;
    double last_update = 0.0; // inf-norm of the final step
};

// Iterates diffusion_step until the inf-norm update drops to tol or
// max_steps is hit. Divergence (guard trip) throws with the step index.
FixedPointResult iterate_to_fixed_point(const Matrix& x0, const SheafOperator& op,
                                        const ReactionParams& p, const ActivationVector& s,
                                        double tol = 1e-8, int max_steps = 10000);

// Saturation bound sweep: random X (magnitudes up to 1e12) and S; checks
// ||A(X_v)|| < ||Phi1_v|| and ||R_v|| < ||Phi2_v|| blockwise (Euclidean norm
// over each d x f block), skipping zero-Phi blocks. Throws VerificationError
// naming the violating trial otherwise.
struct BoundReport {
    double max_ratio = 0.0;
    long long checked = 0;
    long long skipped = 0;
};
BoundReport check_saturation_bounds(const Graph& g, int d, int f, const ReactionParams& p, int trials,
                         std::uint64_t seed);

// Fixed-point residual bound: at a converged X* the diffusion term cannot
// exceed what the bounded reactions supply,
//   ||alpha * op X*||_2 <= |beta| ||Phi1||_2 + |gamma| ||Phi2||_2 + 10*tol*sqrt(ndf).
struct ResidualReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};
ResidualReport check_residual_bound(const Matrix& x_star, const SheafOperator& op,
                            const ReactionParams& p, double tol);

// Runs plain diffusion and reaction diffusion from the same random start on
// a connected bipartite graph with a random symmetric invertible d=1 sheaf.
// Plain diffusion must converge (throws otherwise); the reaction branch
// records its convergence flag. Gaps are max per-edge ||F x_v - F x_u||.
struct SeparabilityReport {
    double gap_standard = 0.0;
    double gap_reaction = 0.0;
    int steps_standard = 0;
    int steps_reaction = 0;
    bool reaction_converged = false;
    std::uint64_t seed = 0;
    std::string json() const;
};
SeparabilityReport separability_experiment(const Graph& g, std::uint64_t seed);

// Max per-edge Euclidean norm of the coboundary rows of x.
double max_edge_gap(const Sheaf& s, const Matrix& x);

} // namespace deepsn
