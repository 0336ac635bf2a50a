#pragma once
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "deepsn/graph.hpp"
#include "deepsn/params.hpp"
#include "deepsn/tape.hpp"

namespace deepsn {

// Estimator architecture knobs. The grids mirror the tuning ranges the
// experiments sweep; defaults are the desk-scale configuration.
struct GnnConfig {
    int layers = 2;    // {2, 5, 10}
    int stalk_dim = 2; // d, {1, 2}
    int channels = 4;  // f
    int hidden = 32;   // {32, 64, 128}
    double dropout = 0.1; // {0.1, 0.2, 0.5, 0.9}
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 0.5;
    double epsilon = 0.5; // diagonal shift before block normalization, > 0

    void validate() const; // throws DataError
};

// Influence estimator: encoder -> learned sheaf -> stacked reaction-diffusion
// layers with a per-layer activation readout. One instance is bound to one
// graph; parameters live in a ParameterStore so the trainer and the seed
// scorer can share them.
class SheafGnnModel {
public:
    SheafGnnModel(const Graph& g, GnnConfig cfg);

    const GnnConfig& config() const { return cfg_; }
    const Graph& graph() const { return *g_; }

    // Fresh parameter tensors (deterministic in seed). Layer mixers start at
    // the identity so early training behaves like plain diffusion.
    void init_params(ParameterStore& store, std::uint64_t seed) const;

    // Records the forward pass on the tape and returns the node id of the
    // final activation vector (n x 1, entries in (0,1)). seed_probs may be
    // fractional. trainable=false freezes every parameter into a constant
    // (used when training the scorer against a fixed estimator).
    // dropout_rng == nullptr turns dropout off (evaluation mode). layer_trace,
    // when given, receives the readout node of every layer.
    int build_forward(Tape& tape, const ParameterStore& store,
                      const std::vector<double>& seed_probs, bool trainable,
                      std::mt19937_64* dropout_rng, std::vector<int>* layer_trace = nullptr) const;

    // Same forward when the seed probabilities already sit on the tape as an
    // n x 1 node (the scorer's differentiable relaxation feeds this).
    // psi_node/embedding_node, when given, receive the learned edge
    // coefficients (m x 1) and the final-layer flattened features (n x d*f).
    int build_forward_from_node(Tape& tape, const ParameterStore& store, int seed_node,
                                bool trainable, std::mt19937_64* dropout_rng,
                                std::vector<int>* layer_trace = nullptr, int* psi_node = nullptr,
                                int* embedding_node = nullptr) const;

    // Learned per-edge coefficients for the zero-seed forward (no dropout).
    std::vector<double> edge_coefficients(const ParameterStore& store) const;

    // Final-layer flattened features (n x d*f) of the zero-seed forward.
    Matrix zero_seed_embedding(const ParameterStore& store) const;

    // sum of squared differences against ground truth
    int build_estimation_loss(Tape& tape, int s_hat, const std::vector<double>& y) const;

    // Convenience evaluation: forward without dropout, returns Ŝ values.
    std::vector<double> predict(const ParameterStore& store,
                                const std::vector<double>& seed_probs) const;

private:
    const Graph* g_;
    GnnConfig cfg_;

    int param_or_const(Tape& t, const ParameterStore& store, const std::string& name,
                       bool trainable) const;
};

// Checkpoints: JSON document carrying the config, every named array with its
// shape, and a format-version field.
void save_checkpoint(const std::string& path, const GnnConfig& cfg, const ParameterStore& store);
GnnConfig load_checkpoint(const std::string& path, ParameterStore& store_out);

} // namespace deepsn
