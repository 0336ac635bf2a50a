// Acceptance gate. Each criterion below is a shipped guarantee checked
// against a route independent of the library's own code path: dense Eigen
// eigensolves, exhaustive enumeration, central finite differences, or raw
// re-derivation of the claimed bound. Run with no arguments for the full
// gate, or pass criterion numbers (1..10) for a subset. Output is one
// PASS/FAIL line per criterion; the exit code is the number of failures.
//
// Tolerances are pinned here, not configurable: loosening them is a code
// change that has to survive review.
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deepsn/cascade.hpp"
#include "deepsn/dynamics.hpp"
#include "deepsn/errors.hpp"
#include "deepsn/experiment.hpp"
#include "deepsn/gen.hpp"
#include "deepsn/graph.hpp"
#include "deepsn/model.hpp"
#include "deepsn/partition.hpp"
#include "deepsn/rng.hpp"
#include "deepsn/seed_select.hpp"
#include "deepsn/sheaf.hpp"
#include "deepsn/training.hpp"
#include "testutil.hpp"

using namespace deepsn;
namespace fs = std::filesystem;

namespace {

struct CriterionFail : std::runtime_error {
    explicit CriterionFail(const std::string& what) : std::runtime_error(what) {}
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw CriterionFail(msg);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_dir(const std::string& sub) {
    const fs::path p = fs::temp_directory_path() / "deepsn_acceptance" / sub;
    fs::create_directories(p);
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

std::string fmt_fixed(double v, int decimals) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

// --- 1: definiteness of the shifted operator vs a dense eigensolve ---------
//
// 200 random sheaves (n in 4..16, d in {1,2}). The oracle computes lambda_min
// of the dense L_F with Eigen; the implementation answers through its own
// assembly + Cholesky. They must agree on "L_F + eps I positive definite"
// exactly when eps > -lambda_min, for eps swept through both sides of the
// boundary plus {0, 1}. Budget: zero disagreements, under 10 s.
std::string criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    int checks = 0, disagreements = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4 + trial % 13;
        const int d = 1 + trial % 2;
        const Graph g = random_connected_graph(n, n / 2 + 1, 0xA100 + trial);
        const Sheaf sh = random_sheaf(g, d, 0xA200 + trial);
        const double lam_min = testutil::min_eigenvalue(assemble_laplacian(sh).to_dense());
        for (const double eps : {-lam_min - 0.1, -lam_min + 0.1, 0.0, 1.0}) {
            SheafOperator op = assemble_laplacian(sh);
            shift(op, eps);
            const bool pd = is_positive_definite(op.to_dense());
            const bool predicted = eps > -lam_min;
            ++checks;
            if (pd != predicted)
                ++disagreements;
        }
    }
    const double dt = seconds_since(t0);
    require(disagreements == 0,
            std::to_string(disagreements) + " of " + std::to_string(checks) +
                " shift checks disagree with the dense eigensolve");
    require(dt < 10.0, "runtime " + fmt(dt) + " s exceeds the 10 s budget");
    return std::to_string(checks) + " shift checks vs dense eigensolve, 0 disagreements, " +
           fmt_fixed(dt, 2) + " s";
}

// --- 2: strict saturation of both reaction operators -----------------------
//
// 1e4 random (X, S, Phi, kappa) trials with |X| up to 1e12. The block-norm
// ratios ||A_v||/||Phi1_v|| and ||R_v||/||Phi2_v|| are recomputed here from
// the returned matrices and must stay strictly below 1. Budget: under 5 s.
std::string criterion2() {
    const auto t0 = std::chrono::steady_clock::now();
    double max_ratio = 0.0;
    long long checked = 0;

    auto block_ratio = [](const Matrix& num, const Matrix& den, int v, int d) {
        double a = 0.0, b = 0.0;
        for (int r = v * d; r < (v + 1) * d; ++r)
            for (int c = 0; c < num.cols(); ++c) {
                a += num(r, c) * num(r, c);
                b += den(r, c) * den(r, c);
            }
        return b == 0.0 ? -1.0 : std::sqrt(a / b);
    };

    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 6 + trial % 4;
        const int d = 1 + trial % 2, f = 2;
        const Graph g = random_connected_graph(n, 3, 0xB000 + trial % 16);
        const int nd = n * d;

        std::mt19937_64 rng = make_rng(0xB100, trial);
        std::uniform_real_distribution<double> mag_exp(-3.0, 12.0), sign(0.0, 1.0);
        std::uniform_real_distribution<double> uphi(0.05, 2.0), ukap(0.3, 2.0), u01(0.0, 1.0);

        Matrix x(nd, f), phi1(nd, f), phi2(nd, f), kap1(nd, f), kap2(nd, f);
        for (double& v : x.vec())
            v = (sign(rng) < 0.5 ? -1.0 : 1.0) * std::pow(10.0, mag_exp(rng));
        for (double& v : phi1.vec()) v = uphi(rng);
        for (double& v : phi2.vec()) v = uphi(rng);
        for (double& v : kap1.vec()) v = ukap(rng);
        for (double& v : kap2.vec()) v = ukap(rng);

        ActivationVector s;
        s.probs.resize(n);
        for (double& v : s.probs) v = u01(rng);

        const Matrix a = pointwise_reaction(x, phi1, kap1);
        const Matrix r = coupled_reaction(g, d, x, s, phi2, kap2);
        for (int v = 0; v < n; ++v) {
            for (const double ratio : {block_ratio(a, phi1, v, d), block_ratio(r, phi2, v, d)}) {
                if (ratio < 0.0) continue; // zero-Phi block, bound is vacuous
                ++checked;
                max_ratio = std::max(max_ratio, ratio);
                require(ratio < 1.0, "block ratio " + fmt(ratio, 17) + " >= 1 in trial " +
                                         std::to_string(trial));
            }
        }
    }
    const double dt = seconds_since(t0);
    require(dt < 5.0, "runtime " + fmt(dt) + " s exceeds the 5 s budget");
    return std::to_string(checked) + " block ratios, max " + fmt(max_ratio, 12) + " < 1, " +
           fmt_fixed(dt, 2) + " s";
}

// --- 3: the residual bound at converged fixed points ------------------------
//
// 100 fixed points converged to tol 1e-8. The diffusion side of the balance
// is recomputed densely with Eigen; it may not exceed what the bounded
// reactions can supply: |b|*||Phi1|| + |g|*||Phi2|| + 10*tol*sqrt(ndf).
// Zero violations allowed.
std::string criterion3() {
    const double tol = 1e-8;
    int converged = 0;
    double worst_margin = 1e300;
    for (std::uint64_t attempt = 0; converged < 100 && attempt < 200; ++attempt) {
        const int n = 8 + static_cast<int>(attempt % 9);
        const int d = 1 + static_cast<int>(attempt % 2), f = 2;
        const Graph g = random_connected_graph(n, n / 2, 0xC100 + attempt);
        const Sheaf sh = random_sheaf(g, d, 0xC200 + attempt);
        SheafOperator op = assemble_laplacian(sh);
        shift(op, 0.25 * estimate_lambda_max(op));
        const double lam = estimate_lambda_max(op);
        const int nd = op.nd();

        ReactionParams p;
        p.alpha = 0.8 / lam;
        p.beta = 0.4;
        p.gamma = 0.3;
        std::mt19937_64 rng = make_rng(0xC300, attempt);
        std::uniform_real_distribution<double> uphi(0.75, 1.25), u01(0.0, 1.0);
        p.phi1 = Matrix(nd, f);
        p.phi2 = Matrix(nd, f);
        for (double& v : p.phi1.vec()) v = uphi(rng);
        for (double& v : p.phi2.vec()) v = uphi(rng);
        p.kappa1 = Matrix(nd, f, 1.0);
        p.kappa2 = Matrix(nd, f);
        for (int v = 0; v < n; ++v)
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < f; ++c) p.kappa2(v * d + r, c) = 1.0 + g.degree(v);

        ActivationVector s;
        s.probs.resize(n);
        for (double& v : s.probs) v = u01(rng);
        Matrix x0(nd, f);
        for (double& v : x0.vec()) v = 2.0 * u01(rng) - 1.0;

        for (const double dt : {1.0, 0.5, 0.25, 0.125}) {
            ReactionParams scaled = p;
            scaled.alpha *= dt;
            scaled.beta *= dt;
            scaled.gamma *= dt;
            FixedPointResult fp;
            try {
                fp = iterate_to_fixed_point(x0, op, scaled, s, tol, 20000);
            } catch (const NumericalError&) {
                continue;
            }
            if (!fp.converged) continue;
            ++converged;

            // independent route: dense operator product through Eigen
            const Eigen::MatrixXd dense = testutil::to_eigen(op.to_dense());
            const double lhs = (scaled.alpha * (dense * testutil::to_eigen(fp.x))).norm();
            double nphi1 = 0.0, nphi2 = 0.0;
            for (const double v : scaled.phi1.vec()) nphi1 += v * v;
            for (const double v : scaled.phi2.vec()) nphi2 += v * v;
            const double rhs = std::abs(scaled.beta) * std::sqrt(nphi1) +
                               std::abs(scaled.gamma) * std::sqrt(nphi2) +
                               10.0 * tol * std::sqrt(static_cast<double>(nd) * f);
            worst_margin = std::min(worst_margin, rhs - lhs);
            require(lhs <= rhs, "fixed point " + std::to_string(converged) + " violates the bound: " +
                                    fmt(lhs, 12) + " > " + fmt(rhs, 12));
            // the library's own checker must agree with the raw arithmetic
            require(check_residual_bound(fp.x, op, scaled, tol).holds,
                    "library residual checker disagrees with the dense route");
            break;
        }
    }
    require(converged == 100, "only " + std::to_string(converged) + " of 100 runs converged");
    return "100 converged fixed points (tol 1e-8), 0 violations, min margin " + fmt(worst_margin, 3);
}

// --- 4: diffusion-only collapse vs reaction-driven separation --------------
//
// 20 random connected bipartite graphs (n <= 20) with symmetric invertible
// scalar sheaves. Plain diffusion must land on an edge-wise agreement state
// (max gap <= 1e-6); adding the bounded reactions must hold the gap at
// >= 1e-3 on at least 19 of the 20 runs.
std::string criterion4() {
    int reaction_separated = 0;
    double worst_standard = 0.0, best_reaction = 1e300;
    for (int i = 0; i < 20; ++i) {
        const int n = 8 + i % 13; // 8..20
        const Graph g = random_connected_bipartite(n, n / 3, 0xD100 + i);
        const SeparabilityReport rep = separability_experiment(g, 0xD200 + i);
        worst_standard = std::max(worst_standard, rep.gap_standard);
        require(rep.gap_standard <= 1e-6, "run " + std::to_string(i) +
                                              ": standard-diffusion gap " +
                                              fmt(rep.gap_standard, 6) + " > 1e-6");
        if (rep.gap_reaction >= 1e-3) {
            ++reaction_separated;
            best_reaction = std::min(best_reaction, rep.gap_reaction);
        }
    }
    require(reaction_separated >= 19, "reaction branch kept a >= 1e-3 gap on only " +
                                          std::to_string(reaction_separated) + "/20 runs");
    return "standard gap <= " + fmt(worst_standard, 3) + " on 20/20, reaction gap >= 1e-3 on " +
           std::to_string(reaction_separated) + "/20";
}

// --- 5: reverse-mode gradients vs central finite differences ---------------
//
// Full forward + squared-error loss on a 12-vertex graph. 50 random probes
// per parameter group, h = 1e-5, max relative error <= 1e-4. Probes where
// halving h moves the difference quotient by more than 0.1% are sitting on a
// |x| kink and are excluded (and counted; at most 10% may be excluded).
std::string criterion5() {
    const Graph g = random_connected_graph(12, 8, 0xE100);
    GnnConfig cfg;
    cfg.layers = 2;
    cfg.stalk_dim = 2;
    cfg.channels = 2;
    cfg.hidden = 16;
    cfg.dropout = 0.0;
    const SheafGnnModel model(g, cfg);
    ParameterStore store;
    model.init_params(store, 0xE200);

    std::mt19937_64 rng = make_rng(0xE300, 0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> seed_probs(12), y(12);
    for (double& v : seed_probs) v = u01(rng);
    for (double& v : y) v = u01(rng);

    testutil::ParamMap params;
    for (const auto& name : store.names()) params.emplace(name, store.value(name));
    const testutil::LossBuilder build = [&](Tape& t, const testutil::ParamMap& pm) {
        ParameterStore s;
        for (const auto& [k, v] : pm) s.add(k, v);
        const int s_hat = model.build_forward(t, s, seed_probs, true, nullptr);
        return model.build_estimation_loss(t, s_hat, y);
    };
    const testutil::ParamMap analytic = testutil::reverse_gradients(params, build);

    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& [name, value] : params) groups[name.substr(0, name.find('.'))].push_back(name);

    const double h = 1e-5;
    int probes = 0, excluded = 0;
    double max_rel = 0.0;
    for (const auto& [group, names] : groups) {
        for (int probe = 0; probe < 50; ++probe) {
            const std::string& name = names[rng() % names.size()];
            testutil::ParamMap work = params;
            auto& vec = work.at(name).vec();
            const std::size_t idx = rng() % vec.size();
            const double save = vec[idx];
            auto fd_at = [&](double step) {
                vec[idx] = save + step;
                const double up = testutil::eval_loss(work, build);
                vec[idx] = save - step;
                const double dn = testutil::eval_loss(work, build);
                vec[idx] = save;
                return (up - dn) / (2.0 * step);
            };
            const double fd = fd_at(h), fd_half = fd_at(h / 2.0);
            ++probes;
            if (std::abs(fd - fd_half) > 1e-3 * std::max({std::abs(fd), std::abs(fd_half), 1e-6})) {
                ++excluded; // difference quotient unstable under h -> h/2: kink
                continue;
            }
            const double a = analytic.at(name).vec()[idx];
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
            max_rel = std::max(max_rel, rel);
            require(rel <= 1e-4, group + " probe " + std::to_string(probe) + " (" + name + "[" +
                                     std::to_string(idx) + "]): rel err " + fmt(rel, 6));
        }
    }
    require(excluded * 10 <= probes,
            std::to_string(excluded) + " of " + std::to_string(probes) + " probes excluded (>10%)");
    return std::to_string(probes) + " probes over " + std::to_string(groups.size()) +
           " groups, max rel err " + fmt(max_rel, 3) + ", " + std::to_string(excluded) + " excluded";
}

// --- 6: Monte Carlo simulator vs exact enumeration + monotonicity ----------
//
// 50 random instances with m <= 12: estimate_sigma at 1e5 runs must fall
// within 3 standard errors of the live-edge exact value for each of
// p in {0.1, 0.5, 0.9}. Seed monotonicity is then checked exhaustively over
// every seed set of a 6-vertex graph for IC and LT.
std::string criterion6() {
    int comparisons = 0;
    double worst_z = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const int n = 4 + inst % 5; // 4..8
        const int extra = std::min(3, 12 - (n - 1));
        const Graph g = random_connected_graph(n, extra, 0xF100 + inst);
        std::vector<int> seeds = {inst % n};
        if (inst % 2 == 1) {
            seeds.push_back((inst / 2 + 1) % n);
            std::sort(seeds.begin(), seeds.end());
            seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
        }
        for (const double p : {0.1, 0.5, 0.9}) {
            DiffusionModelSpec spec;
            spec.kind = CascadeModel::IC;
            spec.ic_prob = p;
            const double exact = exact_sigma_ic(g, spec, seeds);
            const SpreadEstimate mc = estimate_sigma(g, spec, seeds, 100000, 0xF200 + inst);
            ++comparisons;
            if (mc.std_error == 0.0) {
                require(mc.mean == exact, "zero-variance estimate differs from exact value");
                continue;
            }
            const double z = std::abs(mc.mean - exact) / mc.std_error;
            worst_z = std::max(worst_z, z);
            require(z <= 3.0, "instance " + std::to_string(inst) + " p=" + fmt(p, 2) +
                                  ": |z| = " + fmt(z, 4));
        }
    }

    // exhaustive monotonicity on n = 6 (all 63 seed sets, single-vertex
    // additions chain to the full subset order)
    const Graph g6 = random_connected_graph(6, 5, 0xF300); // m = 10
    for (int m = 0; m < 2; ++m) {
        DiffusionModelSpec spec;
        spec.kind = m == 0 ? CascadeModel::IC : CascadeModel::LT;
        spec.ic_prob = 0.3;
        std::vector<double> sigma(64, 0.0);
        for (int mask = 1; mask < 64; ++mask) {
            std::vector<int> seeds;
            for (int v = 0; v < 6; ++v)
                if (mask & (1 << v)) seeds.push_back(v);
            sigma[mask] = estimate_sigma(g6, spec, seeds, 20000, 0xF400 + m).mean;
        }
        for (int mask = 1; mask < 64; ++mask)
            for (int v = 0; v < 6; ++v) {
                if (mask & (1 << v)) continue;
                require(sigma[mask | (1 << v)] + 1e-9 >= sigma[mask],
                        std::string(m == 0 ? "IC" : "LT") + " monotonicity fails at mask " +
                            std::to_string(mask) + " + vertex " + std::to_string(v));
            }
    }
    return std::to_string(comparisons) + " exact comparisons (worst |z| " + fmt(worst_z, 3) +
           "), exhaustive n=6 monotonicity holds for IC and LT";
}

// recorded desk-scale configuration shared by criteria 7 and 8
ExperimentConfig recorded_config(const std::string& dataset, const std::string& model,
                                 const fs::path& out) {
    ExperimentConfig cfg;
    cfg.dataset = dataset;
    cfg.data_dir = work_dir("data").string();
    cfg.out_dir = out.string();
    cfg.model = model;
    cfg.samples = 160;
    cfg.gt_runs = 100;
    cfg.gt_seed = 7;
    cfg.gnn.layers = 2;
    cfg.gnn.stalk_dim = 2;
    cfg.gnn.channels = 4;
    cfg.gnn.hidden = 32;
    cfg.gnn.dropout = 0.1;
    cfg.train.lr = 0.002;
    cfg.train.batch = 8;
    cfg.train.max_epochs = 60;
    cfg.train.patience = 15;
    cfg.budget_pct = 10.0;
    return cfg;
}

// --- 7: desk-scale influence estimation quality -----------------------------
//
// Train on the jazz benchmark under linear threshold with the recorded
// configuration; the held-out test MAE must be <= 0.15 and the whole run
// must finish inside 15 minutes.
std::string criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = recorded_config("jazz", "lt", work_dir("c7"));
    std::ostringstream log;
    cmd_gen_data(cfg, log);
    const TrainOutcome out = cmd_train(cfg, log);
    const double dt = seconds_since(t0);
    require(out.test_mae <= 0.15,
            "test MAE " + fmt(out.test_mae, 4) + " exceeds the 0.15 bound");
    require(dt < 900.0, "runtime " + fmt_fixed(dt, 1) + " s exceeds the 15 min budget");
    return "jazz/lt test MAE " + fmt(out.test_mae, 3) + " (bound 0.15) in " + fmt_fixed(dt, 1) + " s";
}

// --- 8: end-to-end seed quality against baselines ---------------------------
//
// On jazz and netscience under independent cascade, 10% budgets, 10 training
// seeds: the mean Monte Carlo spread of the selected seeds must beat the
// uniform-random baseline by >= 3 pooled standard errors and reach >= 90% of
// the top-degree heuristic. Statistical by design; reference spread values
// from the literature are printed next to results for context only.
std::string criterion8() {
    std::ostringstream detail;
    for (const std::string dataset : {"jazz", "netscience"}) {
        ExperimentConfig cfg = recorded_config(dataset, "ic", work_dir("c8_" + dataset));
        // recorded cascade probabilities sit near the percolation threshold,
        // where seed choice actually moves the spread
        cfg.ic_prob = 0.02;
        if (dataset == "netscience") { // larger graph: lean estimator
            cfg.ic_prob = 0.03;
            cfg.gnn.stalk_dim = 1;
            cfg.gnn.channels = 2;
            cfg.samples = 96;
            cfg.gt_runs = 60;
            cfg.train.max_epochs = 30;
            cfg.train.patience = 10;
        }
        std::ostringstream log;
        cmd_gen_data(cfg, log);

        const Graph g = load_edge_list(ensure_dataset(dataset, cfg.data_dir)).graph;
        const DiffusionModelSpec spec = cfg.diffusion(g);

        std::vector<double> ours, rnd;
        int k = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            cfg.seed = seed;
            cmd_train(cfg, log);
            const SelectOutcome sel = cmd_select(cfg, log);
            ours.push_back(sel.mc_spread_pct);
            k = sel.k;
            const std::vector<int> baseline = random_seeds(g, k, derive_seed(seed, 0xba5e));
            rnd.push_back(
                evaluate_seed_set(g, spec, baseline, 100, derive_seed(seed, 0xe7a1)).percent);
        }
        const auto stats = [](const std::vector<double>& xs) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= xs.size();
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= (xs.size() - 1);
            return std::pair<double, double>(mean, std::sqrt(var / xs.size()));
        };
        const auto [mean_ours, se_ours] = stats(ours);
        const auto [mean_rnd, se_rnd] = stats(rnd);
        const double pooled = std::sqrt(se_ours * se_ours + se_rnd * se_rnd);
        const double top =
            evaluate_seed_set(g, spec, top_degree_seeds(g, k), 100, 0xd067).percent;

        const double margin = (mean_ours - mean_rnd) / std::max(pooled, 1e-12);
        require(margin >= 3.0, dataset + ": selected spread " + fmt(mean_ours, 4) +
                                   "% beats random " + fmt(mean_rnd, 4) + "% by only " +
                                   fmt(margin, 3) + " pooled SE (need >= 3)");
        require(mean_ours >= 0.9 * top, dataset + ": selected spread " + fmt(mean_ours, 4) +
                                            "% is below 90% of top-degree " + fmt(top, 4) + "%");
        const double ref = reference_spread_pct(dataset, "ic", cfg.budget_pct);
        detail << dataset << " " << fmt(mean_ours, 3) << "% (random " << fmt(mean_rnd, 3)
               << "%, +" << fmt(margin, 3) << " SE; top-degree " << fmt(top, 3)
               << "%; published reference " << fmt(ref, 3) << "%)  ";
    }
    return detail.str();
}

// --- 9: byte-identical selection artifacts ----------------------------------
//
// Two cmd_select runs with the same config and master seed must write
// byte-identical seed-set JSON.
std::string criterion9() {
    const fs::path dir = work_dir("c9");
    const Graph g = synthetic_benchmark_graph(60, 150, 0x9A9A);
    const std::string edges = (dir / "toy.edges").string();
    save_edge_list(g, edges);

    ExperimentConfig cfg;
    cfg.dataset = edges;
    cfg.data_dir = dir.string();
    cfg.out_dir = (dir / "out").string();
    cfg.model = "ic";
    cfg.ic_prob = 0.1;
    cfg.samples = 16;
    cfg.gt_runs = 12;
    cfg.gnn.stalk_dim = 1;
    cfg.gnn.channels = 2;
    cfg.gnn.hidden = 8;
    cfg.train.max_epochs = 5;
    cfg.scorer.epochs = 10;
    cfg.eval_runs = 20;

    std::ostringstream log;
    cmd_gen_data(cfg, log);
    cmd_train(cfg, log);
    const SelectOutcome a = cmd_select(cfg, log);
    const std::string bytes_a = slurp(seed_set_file(cfg));
    const SelectOutcome b = cmd_select(cfg, log);
    const std::string bytes_b = slurp(seed_set_file(cfg));
    require(!bytes_a.empty(), "first run produced an empty artifact");
    require(a.seeds == b.seeds, "rerun selected a different seed set");
    require(bytes_a == bytes_b, "seed-set artifacts differ between identical runs");
    return "seed-set JSON byte-identical across reruns (" + std::to_string(a.seeds.size()) +
           " seeds)";
}

// --- 10: sparse-path performance sanity --------------------------------------
//
// One estimator layer forward on the power-grid graph (n = 4941, d = 2,
// f = 4) must finish in under 1 s, and doubling m on synthetic graphs may
// grow per-layer time by at most 2.5x. Per-layer time is isolated as the
// difference between 5-layer and 1-layer forwards.
std::string criterion10() {
    const std::string path = ensure_dataset("power_grid", work_dir("data").string());
    const Graph pg = load_edge_list(path).graph;

    GnnConfig cfg;
    cfg.layers = 1;
    cfg.stalk_dim = 2;
    cfg.channels = 4;
    cfg.hidden = 32;
    cfg.dropout = 0.0;

    auto forward_seconds = [](const Graph& g, const GnnConfig& c) {
        const SheafGnnModel model(g, c);
        ParameterStore store;
        model.init_params(store, 0xAA10);
        const std::vector<double> s0(g.num_vertices(), 0.0);
        model.predict(store, s0); // warm up allocators
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            model.predict(store, s0);
            best = std::min(best, seconds_since(t0));
        }
        return best;
    };

    const double t_layer = forward_seconds(pg, cfg);
    require(t_layer < 1.0,
            "single-layer forward on power grid took " + fmt(t_layer, 3) + " s (>= 1 s)");

    double per_layer[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i) {
        const int m = i == 0 ? 40000 : 80000;
        const Graph g = synthetic_benchmark_graph(20000, m, 0xAA20);
        GnnConfig deep = cfg;
        deep.layers = 5;
        const double t1 = forward_seconds(g, cfg);
        const double t5 = forward_seconds(g, deep);
        per_layer[i] = std::max((t5 - t1) / 4.0, 1e-9);
    }
    const double ratio = per_layer[1] / per_layer[0];
    require(ratio <= 2.5, "doubling m scaled per-layer time by " + fmt(ratio, 3) + "x (> 2.5x)");
    return "power-grid layer " + fmt(t_layer * 1e3, 3) + " ms; m-doubling ratio " +
           fmt(ratio, 3) + "x (per-layer " + fmt(per_layer[0] * 1e3, 3) + " -> " +
           fmt(per_layer[1] * 1e3, 3) + " ms)";
}

} // namespace

int main(int argc, char** argv) {
    const std::function<std::string()> criteria[] = {
        criterion1, criterion2, criterion3, criterion4, criterion5,
        criterion6, criterion7, criterion8, criterion9, criterion10,
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int c = std::atoi(argv[i]);
        if (c < 1 || c > 10) {
            std::cerr << "usage: " << argv[0] << " [criterion 1..10]...\n";
            return 1;
        }
        selected.push_back(c);
    }
    if (selected.empty())
        for (int c = 1; c <= 10; ++c) selected.push_back(c);

    int failures = 0;
    for (const int c : selected) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = criteria[c - 1]();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        std::cout << "criterion " << std::setw(2) << c << "  " << (ok ? "PASS" : "FAIL") << "  ["
                  << fmt_fixed(seconds_since(t0), 2) << " s]  " << detail << "\n"
                  << std::flush;
        if (!ok) ++failures;
    }
    return failures;
}
