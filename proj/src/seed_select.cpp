#include "deepsn/seed_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "deepsn/errors.hpp"
#include "deepsn/rng.hpp"
#include "deepsn/tape.hpp"

namespace deepsn {

WeightedGraph build_gw(const Graph& g, const std::vector<double>& psi, bool sparsify) {
    if (static_cast<int>(psi.size()) != g.num_edges())
        throw DataError("coefficient vector length does not match edge count");
    std::vector<double> w(psi.size());
    for (std::size_t e = 0; e < psi.size(); ++e) {
        if (!(psi[e] >= 0.0 && psi[e] <= 1.0))
            throw DataError("edge coefficient outside [0,1]");
        w[e] = sparsify ? (psi[e] > 0.5 ? 1.0 : 0.0) : psi[e];
    }
    return build_weighted(g, std::move(w));
}

int BudgetAllocation::total() const {
    return std::accumulate(per_community.begin(), per_community.end(), 0);
}

BudgetAllocation allocate_budget(const PartitionResult& partition, int k) {
    const long long n = static_cast<long long>(partition.assignment.size());
    if (n == 0) throw DataError("empty partition");
    if (k < 0) throw DataError("budget must be non-negative");
    if (k > n) throw DataError("budget exceeds vertex count");

    const int r = partition.num_communities;
    std::vector<long long> size(r, 0);
    for (int c : partition.assignment) ++size[c];

    BudgetAllocation out;
    out.k = k;
    out.per_community.assign(r, 0);

    // exact integer arithmetic: quota_i = k*size_i / n with remainder rem_i
    std::vector<long long> rem(r, 0);
    long long assigned = 0;
    for (int i = 0; i < r; ++i) {
        const long long q = static_cast<long long>(k) * size[i];
        out.per_community[i] = static_cast<int>(q / n);
        rem[i] = q % n;
        assigned += out.per_community[i];
    }

    std::vector<int> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rem[a] > rem[b]; });

    long long leftover = k - assigned;
    for (int i : order) {
        if (leftover <= 0) break;
        if (rem[i] > 0) { // cap = floor + 1 exactly when the quota is fractional
            ++out.per_community[i];
            --leftover;
        }
    }
    return out;
}

Matrix scorer_features(const SheafGnnModel& model, const ParameterStore& estimator,
                       const PartitionResult& partition) {
    const Graph& g = model.graph();
    const int n = g.num_vertices();
    if (static_cast<int>(partition.assignment.size()) != n)
        throw DataError("partition does not cover the model graph");

    const Matrix emb = model.zero_seed_embedding(estimator); // n x d*f
    const int df = emb.cols();

    std::vector<double> comm_frac(partition.num_communities, 0.0);
    for (int c : partition.assignment) comm_frac[c] += 1.0 / n;
    const double max_deg = std::max(1, g.max_degree());

    Matrix feat(n, df + 2);
    for (int v = 0; v < n; ++v) {
        for (int j = 0; j < df; ++j) feat(v, j) = emb(v, j);
        feat(v, df) = g.degree(v) / max_deg;
        feat(v, df + 1) = comm_frac[partition.assignment[v]];
    }
    return feat;
}

void init_scorer(ParameterStore& scorer, int feature_dim, int hidden, std::uint64_t seed) {
    if (feature_dim < 1 || hidden < 1) throw DataError("scorer dimensions must be positive");
    std::mt19937_64 rng = make_rng(seed, 0x5c0);
    auto xavier = [&](int r, int c) {
        std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / (r + c)));
        Matrix m(r, c);
        for (double& v : m.vec()) v = nd(rng);
        return m;
    };
    scorer.add("scorer.w1", xavier(feature_dim, hidden));
    scorer.add("scorer.b1", Matrix(1, hidden));
    scorer.add("scorer.w2", xavier(hidden, 1));
    scorer.add("scorer.b2", Matrix(1, 1));
}

namespace {

int build_logits(Tape& tape, const ParameterStore& scorer, int features) {
    const int w1 = tape.param("scorer.w1", scorer.value("scorer.w1"));
    const int b1 = tape.param("scorer.b1", scorer.value("scorer.b1"));
    const int w2 = tape.param("scorer.w2", scorer.value("scorer.w2"));
    const int b2 = tape.param("scorer.b2", scorer.value("scorer.b2"));
    return tape.affine(tape.softplus(tape.affine(features, w1, b1)), w2, b2);
}

std::vector<double> budgets_as_double(const PartitionResult& partition,
                                      const BudgetAllocation& budget) {
    if (static_cast<int>(budget.per_community.size()) != partition.num_communities)
        throw DataError("budget does not match partition");
    return std::vector<double>(budget.per_community.begin(), budget.per_community.end());
}

} // namespace

ScorerTrainResult train_scorer(const SheafGnnModel& model, const ParameterStore& estimator,
                               ParameterStore& scorer, const PartitionResult& partition,
                               const BudgetAllocation& budget, const ScorerConfig& cfg,
                               std::uint64_t seed) {
    const int n = model.graph().num_vertices();
    const Matrix features = scorer_features(model, estimator, partition);
    if (!scorer.has("scorer.w1"))
        init_scorer(scorer, features.cols(), cfg.hidden, seed);
    const std::vector<double> budgets = budgets_as_double(partition, budget);

    ScorerTrainResult result;
    result.best_loss = std::numeric_limits<double>::infinity();
    std::map<std::string, Matrix> best;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape tape;
        const int feat = tape.constant(features);
        const int z = build_logits(tape, scorer, feat);
        const int relaxed = tape.soft_topk(z, partition.assignment, budgets, cfg.tau);
        const int s_hat = model.build_forward_from_node(tape, estimator, relaxed,
                                                        /*trainable=*/false,
                                                        /*dropout_rng=*/nullptr);
        const int loss = tape.shift(tape.scale(tape.sum(s_hat), -1.0), static_cast<double>(n));
        const double loss_value = tape.value(loss)(0, 0);
        result.loss_history.push_back(loss_value);
        if (loss_value < result.best_loss) {
            result.best_loss = loss_value;
            result.best_epoch = epoch;
            best.clear();
            for (const auto& name : scorer.names()) best.emplace(name, scorer.value(name));
        }

        tape.backward(loss);
        scorer.zero_grads();
        tape.for_each_param(
            [&](const std::string& name, const Matrix& g) { scorer.accumulate(name, g); });
        scorer.adam_step(cfg.lr);
    }

    for (auto& [name, value] : best) scorer.value(name) = value;
    return result;
}

std::vector<double> scorer_logits(const ParameterStore& scorer, const Matrix& features) {
    Tape tape;
    const int z = build_logits(tape, scorer, tape.constant(features));
    return tape.value(z).vec();
}

std::vector<int> select_seeds(const std::vector<double>& logits,
                              const PartitionResult& partition, const BudgetAllocation& budget) {
    const int n = static_cast<int>(partition.assignment.size());
    if (static_cast<int>(logits.size()) != n) throw DataError("logit vector length mismatch");
    if (static_cast<int>(budget.per_community.size()) != partition.num_communities)
        throw DataError("budget does not match partition");

    std::vector<std::vector<int>> members(partition.num_communities);
    for (int v = 0; v < n; ++v) members[partition.assignment[v]].push_back(v);

    std::vector<int> seeds;
    for (int c = 0; c < partition.num_communities; ++c) {
        auto& vs = members[c]; // already ascending by id
        const int k_c = budget.per_community[c];
        if (k_c > static_cast<int>(vs.size()))
            throw DataError("community budget exceeds community size");
        std::stable_sort(vs.begin(), vs.end(),
                         [&](int a, int b) { return logits[a] > logits[b]; });
        seeds.insert(seeds.end(), vs.begin(), vs.begin() + k_c);
    }
    std::sort(seeds.begin(), seeds.end());
    return seeds;
}

SpreadReport evaluate_seed_set(const Graph& g, const DiffusionModelSpec& spec,
                               const std::vector<int>& seeds, int runs,
                               std::uint64_t master_seed) {
    SpreadReport report;
    report.raw = estimate_sigma(g, spec, seeds, runs, master_seed);
    const double n = g.num_vertices();
    report.percent = 100.0 * report.raw.mean / n;
    report.se_percent = 100.0 * report.raw.std_error / n;
    return report;
}

std::vector<int> top_degree_seeds(const Graph& g, int k) {
    if (k < 0 || k > g.num_vertices()) throw DataError("invalid budget");
    std::vector<int> order(g.num_vertices());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return g.degree(a) > g.degree(b); });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<int> random_seeds(const Graph& g, int k, std::uint64_t seed) {
    if (k < 0 || k > g.num_vertices()) throw DataError("invalid budget");
    std::vector<int> order(g.num_vertices());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng = make_rng(seed, 0x5a);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

} // namespace deepsn
