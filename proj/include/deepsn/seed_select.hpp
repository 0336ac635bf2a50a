#pragma once
#include <cstdint>
#include <vector>

#include "deepsn/cascade.hpp"
#include "deepsn/graph.hpp"
#include "deepsn/model.hpp"
#include "deepsn/params.hpp"
#include "deepsn/partition.hpp"

namespace deepsn {

// Edge weights from learned coefficients. Plain mode keeps weight_e = psi_e.
// Sparsified mode thresholds at 0.5: kept edges get weight 1, the rest get
// weight 0 (a zero weight contributes nothing downstream, so the edge is
// effectively dropped while per-edge arrays stay aligned with g).
WeightedGraph build_gw(const Graph& g, const std::vector<double>& psi, bool sparsify);

struct BudgetAllocation {
    int k = 0;                      // requested total
    std::vector<int> per_community; // k_i, one per community
    int total() const;
};

// Proportional split of k over communities: integer floors of (k/n)*|V_i|,
// then the remainder one unit at a time by descending fractional part (ties
// to the lower community id), never exceeding ceil((k/n)*|V_i|). Throws
// DataError when k > n or k < 0.
BudgetAllocation allocate_budget(const PartitionResult& partition, int k);

// Per-vertex scorer inputs, one row per vertex: the estimator's final-layer
// embedding of the zero-seed forward (d*f columns), degree / max degree, and
// the size fraction of the vertex's community.
Matrix scorer_features(const SheafGnnModel& model, const ParameterStore& estimator,
                       const PartitionResult& partition);

struct ScorerConfig {
    int hidden = 16;
    double tau = 0.25; // soft-top-k temperature
    double lr = 0.01;
    int epochs = 60;
    // The relaxed objective is non-convex and an unlucky init can stall in a
    // weak optimum; selection trains this many scorers from distinct streams
    // and keeps the one whose hard seed set the estimator scores highest.
    int restarts = 3;
};

// Two-layer MLP (features -> hidden -> logit) under names "scorer.*".
void init_scorer(ParameterStore& scorer, int feature_dim, int hidden, std::uint64_t seed);

struct ScorerTrainResult {
    std::vector<double> loss_history; // n - sum(S_hat) per epoch
    double best_loss = 0.0;
    int best_epoch = 0;
};

// Trains the scorer against the frozen estimator: community logits pass
// through the per-community soft-top-k relaxation, the relaxed seed vector
// feeds the estimator forward, and the loss n - sum(S_hat) is minimized with
// Adam on the scorer parameters only. The scorer store is left at the
// best-loss epoch. Throws DataError when the estimator store is missing
// entries for this model or budgets do not match the partition.
ScorerTrainResult train_scorer(const SheafGnnModel& model, const ParameterStore& estimator,
                               ParameterStore& scorer, const PartitionResult& partition,
                               const BudgetAllocation& budget, const ScorerConfig& cfg,
                               std::uint64_t seed);

// Logits of the trained scorer on precomputed features.
std::vector<double> scorer_logits(const ParameterStore& scorer, const Matrix& features);

// Hard selection: per community i, the k_i highest-logit vertices, ties to
// the lower vertex id. Returned ids are sorted ascending.
std::vector<int> select_seeds(const std::vector<double>& logits,
                              const PartitionResult& partition, const BudgetAllocation& budget);

struct SpreadReport {
    double percent = 0.0;   // 100 * mean spread / n
    double se_percent = 0.0;
    SpreadEstimate raw;
};

// Monte Carlo spread of a fixed seed set, reported as a percentage of n.
SpreadReport evaluate_seed_set(const Graph& g, const DiffusionModelSpec& spec,
                               const std::vector<int>& seeds, int runs = 100,
                               std::uint64_t master_seed = 1);

// Reference selectors used as baselines.
std::vector<int> top_degree_seeds(const Graph& g, int k);
std::vector<int> random_seeds(const Graph& g, int k, std::uint64_t seed);

} // namespace deepsn
