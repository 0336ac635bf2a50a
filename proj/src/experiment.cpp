#include "deepsn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "deepsn/dynamics.hpp"
#include "deepsn/errors.hpp"
#include "deepsn/gen.hpp"
#include "deepsn/partition.hpp"
#include "deepsn/rng.hpp"
#include "deepsn/tape.hpp"

namespace deepsn {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<DatasetInfo>& dataset_registry() {
    static const std::vector<DatasetInfo> registry = {
        {"jazz", 198, 2742, true},           {"netscience", 1565, 13532, true},
        {"cora_ml", 2810, 7981, true},       {"power_grid", 4941, 6594, true},
        {"random", 50000, 250000, false},    {"digg", 279613, 1170689, false},
    };
    return registry;
}

std::string ensure_dataset(const std::string& name_or_path, const std::string& data_dir) {
    if (name_or_path.empty()) throw DataError("empty dataset name");
    if (name_or_path.find('/') != std::string::npos ||
        name_or_path.find('.') != std::string::npos)
        return name_or_path; // explicit file path, caller's responsibility
    for (const auto& info : dataset_registry()) {
        if (info.name != name_or_path) continue;
        fs::create_directories(data_dir);
        const std::string path = data_dir + "/" + info.name + ".edges";
        if (!fs::exists(path)) {
            // FNV-1a of the name so every machine regenerates the same file
            std::uint64_t h = 1469598103934665603ULL;
            for (char c : info.name)
                h = (h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c))) *
                    1099511628211ULL;
            const Graph g = synthetic_benchmark_graph(info.vertices, info.edges, h);
            save_edge_list(g, path);
        }
        return path;
    }
    throw DataError("unknown dataset '" + name_or_path + "'; pass a path to use a custom file");
}

void ExperimentConfig::validate() const {
    if (!(budget_pct > 0.0 && budget_pct <= 100.0))
        throw UsageError("budget_pct must lie in (0, 100]");
    if (variant != "deepsn" && variant != "sp" && variant != "wc" && variant != "wsa")
        throw UsageError("variant must be one of deepsn|sp|wc|wsa");
    if (samples < 0) throw UsageError("samples must be >= 0");
    if (gt_runs < 1) throw UsageError("gt_runs must be >= 1");
    if (eval_runs < 1) throw UsageError("eval_runs must be >= 1");
    if (gt_size_lo < 1) throw UsageError("gt_size_lo must be >= 1");
    if (gt_size_hi != 0 && gt_size_hi < gt_size_lo)
        throw UsageError("gt_size_hi must be 0 (auto) or >= gt_size_lo");
    if (!(resolution > 0.0)) throw UsageError("resolution must be positive");
    if (scorer.restarts < 1) throw UsageError("scorer.restarts must be >= 1");
    parse_cascade_model(model);
    try {
        gnn.validate(); // reached through user config, so report as usage
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

namespace {

DiffusionModelSpec spec_from(const ExperimentConfig& cfg) {
    DiffusionModelSpec spec;
    spec.kind = parse_cascade_model(cfg.model);
    spec.ic_prob = cfg.ic_prob;
    spec.sis_infect = cfg.sis_infect;
    spec.sis_recover = cfg.sis_recover;
    spec.horizon = cfg.horizon;
    return spec;
}

std::string dataset_stem(const ExperimentConfig& cfg) {
    std::string stem = fs::path(cfg.dataset).stem().string();
    if (stem.empty()) stem = "dataset";
    for (char& c : stem)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return stem;
}

std::string format_pct(double pct) {
    std::ostringstream os;
    os << pct; // shortest form, "10" or "2.5"
    std::string s = os.str();
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::string artifact_base(const ExperimentConfig& cfg) {
    return cfg.out_dir + "/" + dataset_stem(cfg) + "_" + spec_from(cfg).hash();
}

Graph load_graph(const ExperimentConfig& cfg, std::ostream& log) {
    const std::string path = ensure_dataset(cfg.dataset, cfg.data_dir);
    EdgeListLoadResult loaded = load_edge_list(path);
    log << "dataset " << cfg.dataset << ": n=" << loaded.graph.num_vertices()
        << " m=" << loaded.graph.num_edges();
    if (loaded.dropped_self_loops || loaded.duplicate_edges)
        log << " (dropped " << loaded.dropped_self_loops << " self-loops, "
            << loaded.duplicate_edges << " duplicates)";
    log << "\n";
    return std::move(loaded.graph);
}

} // namespace

DiffusionModelSpec ExperimentConfig::diffusion(const Graph& g) const {
    DiffusionModelSpec spec = spec_from(*this);
    spec.validate(g);
    return spec;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw UsageError("config root must be a JSON object");

    ExperimentConfig cfg;
    try {
        for (const auto& [key, val] : doc.items()) {
            if (key == "dataset") cfg.dataset = val.get<std::string>();
            else if (key == "data_dir") cfg.data_dir = val.get<std::string>();
            else if (key == "out_dir") cfg.out_dir = val.get<std::string>();
            else if (key == "model") cfg.model = val.get<std::string>();
            else if (key == "ic_prob") cfg.ic_prob = val.get<double>();
            else if (key == "sis_infect") cfg.sis_infect = val.get<double>();
            else if (key == "sis_recover") cfg.sis_recover = val.get<double>();
            else if (key == "horizon") cfg.horizon = val.get<int>();
            else if (key == "budget_pct") cfg.budget_pct = val.get<double>();
            else if (key == "variant") cfg.variant = val.get<std::string>();
            else if (key == "resolution") cfg.resolution = val.get<double>();
            else if (key == "samples") cfg.samples = val.get<int>();
            else if (key == "gt_runs") cfg.gt_runs = val.get<int>();
            else if (key == "gt_size_lo") cfg.gt_size_lo = val.get<int>();
            else if (key == "gt_size_hi") cfg.gt_size_hi = val.get<int>();
            else if (key == "gt_seed") cfg.gt_seed = val.get<std::uint64_t>();
            else if (key == "eval_runs") cfg.eval_runs = val.get<int>();
            else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
            else if (key == "gnn") {
                for (const auto& [k2, v2] : val.items()) {
                    if (k2 == "layers") cfg.gnn.layers = v2.get<int>();
                    else if (k2 == "stalk_dim") cfg.gnn.stalk_dim = v2.get<int>();
                    else if (k2 == "channels") cfg.gnn.channels = v2.get<int>();
                    else if (k2 == "hidden") cfg.gnn.hidden = v2.get<int>();
                    else if (k2 == "dropout") cfg.gnn.dropout = v2.get<double>();
                    else if (k2 == "alpha") cfg.gnn.alpha = v2.get<double>();
                    else if (k2 == "beta") cfg.gnn.beta = v2.get<double>();
                    else if (k2 == "gamma") cfg.gnn.gamma = v2.get<double>();
                    else if (k2 == "epsilon") cfg.gnn.epsilon = v2.get<double>();
                    else throw UsageError("unknown config key: gnn." + k2);
                }
            } else if (key == "train") {
                for (const auto& [k2, v2] : val.items()) {
                    if (k2 == "lr") cfg.train.lr = v2.get<double>();
                    else if (k2 == "batch") cfg.train.batch = v2.get<int>();
                    else if (k2 == "max_epochs") cfg.train.max_epochs = v2.get<int>();
                    else if (k2 == "patience") cfg.train.patience = v2.get<int>();
                    else if (k2 == "max_backoffs") cfg.train.max_backoffs = v2.get<int>();
                    else throw UsageError("unknown config key: train." + k2);
                }
            } else if (key == "scorer") {
                for (const auto& [k2, v2] : val.items()) {
                    if (k2 == "hidden") cfg.scorer.hidden = v2.get<int>();
                    else if (k2 == "tau") cfg.scorer.tau = v2.get<double>();
                    else if (k2 == "lr") cfg.scorer.lr = v2.get<double>();
                    else if (k2 == "epochs") cfg.scorer.epochs = v2.get<int>();
                    else if (k2 == "restarts") cfg.scorer.restarts = v2.get<int>();
                    else throw UsageError("unknown config key: scorer." + k2);
                }
            } else {
                throw UsageError("unknown config key: " + key);
            }
        }
    } catch (const json::exception& e) {
        throw UsageError("bad config value type: " + std::string(e.what()));
    }
    cfg.validate();
    return cfg;
}

std::string ground_truth_file(const ExperimentConfig& cfg) {
    return artifact_base(cfg) + "_g" + std::to_string(cfg.gt_seed) + "_" +
           std::to_string(cfg.samples) + "x" + std::to_string(cfg.gt_runs) + ".gt.jsonl";
}

std::string checkpoint_file(const ExperimentConfig& cfg) {
    return artifact_base(cfg) + "_s" + std::to_string(cfg.seed) + ".model.json";
}

std::string history_file(const ExperimentConfig& cfg) {
    return artifact_base(cfg) + "_s" + std::to_string(cfg.seed) + ".history.csv";
}

std::string seed_set_file(const ExperimentConfig& cfg) {
    return artifact_base(cfg) + "_" + cfg.variant + "_k" + format_pct(cfg.budget_pct) + "_s" +
           std::to_string(cfg.seed) + ".seeds.json";
}

std::string results_file(const ExperimentConfig& cfg) { return cfg.out_dir + "/results.csv"; }

void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const Graph g = load_graph(cfg, log);
    const DiffusionModelSpec spec = cfg.diffusion(g);
    const int hi = cfg.gt_size_hi > 0 ? cfg.gt_size_hi : std::max(1, g.num_vertices() / 10);
    const int lo = std::min(cfg.gt_size_lo, hi);
    const auto samples =
        make_ground_truth(g, spec, cfg.samples, lo, hi, cfg.gt_runs, cfg.gt_seed);
    fs::create_directories(cfg.out_dir);
    const std::string out = ground_truth_file(cfg);
    save_ground_truth(out, samples, spec);
    log << "wrote " << samples.size() << " ground-truth samples (seed sizes " << lo << ".." << hi
        << ", " << cfg.gt_runs << " runs each) to " << out << "\n";
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const Graph g = load_graph(cfg, log);
    const DiffusionModelSpec spec = cfg.diffusion(g);

    std::string hash_seen;
    auto samples = load_ground_truth(ground_truth_file(cfg), &hash_seen);
    if (!hash_seen.empty() && hash_seen != spec.hash())
        throw DataError("ground-truth file was generated under a different diffusion spec");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (static_cast<int>(samples[i].y.size()) != g.num_vertices())
            throw DataError("ground-truth record " + std::to_string(i) +
                            " does not match the graph size");
        for (int s : samples[i].seeds)
            if (s < 0 || s >= g.num_vertices())
                throw DataError("ground-truth record " + std::to_string(i) +
                                " has an out-of-range seed");
    }

    const DataSplit split = split_dataset(std::move(samples), cfg.seed);
    SheafGnnModel model(g, cfg.gnn);
    ParameterStore store;
    model.init_params(store, derive_seed(cfg.seed, 0x171));
    const TrainResult tr = train_estimator(model, store, split, cfg.train, cfg.seed);

    fs::create_directories(cfg.out_dir);
    save_checkpoint(checkpoint_file(cfg), cfg.gnn, store);
    save_history_csv(history_file(cfg), tr.history);

    TrainOutcome out;
    out.test_mae = eval_mae(model, store, split.test);
    out.best_val_mae = tr.best_val_mae;
    out.epochs_run = static_cast<int>(tr.history.size());
    log << "trained " << out.epochs_run << " epochs (best val MAE "
        << tr.best_val_mae << " at epoch " << tr.best_epoch << ", " << tr.backoffs_used
        << " lr backoffs); test MAE " << out.test_mae << "\n"
        << "checkpoint: " << checkpoint_file(cfg) << "\n";
    return out;
}

SelectOutcome cmd_select(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto wall0 = std::chrono::steady_clock::now();
    const Graph g = load_graph(cfg, log);
    const int n = g.num_vertices();
    const DiffusionModelSpec spec = cfg.diffusion(g);

    ParameterStore store;
    const GnnConfig saved = load_checkpoint(checkpoint_file(cfg), store);
    SheafGnnModel model(g, saved);
    if (store.value("react.phi1").rows() != n * saved.stalk_dim)
        throw DataError("checkpoint was trained on a different graph");

    const std::vector<double> psi = model.edge_coefficients(store);
    WeightedGraph gw;
    PartitionResult part;
    if (cfg.variant == "wc") {
        // whole graph as one community: no partitioning step
        gw = build_gw(g, psi, false);
        part.assignment.assign(n, 0);
        part.num_communities = 1;
        part.modularity = weighted_modularity(gw, part.assignment, cfg.resolution);
    } else if (cfg.variant == "wsa") {
        // partition the plain adjacency instead of the learned weights
        gw = build_weighted(g, std::vector<double>(g.num_edges(), 1.0));
        part = louvain(gw, cfg.resolution);
    } else {
        gw = build_gw(g, psi, cfg.variant == "sp");
        part = louvain(gw, cfg.resolution);
    }

    const int k = std::min(n, std::max<int>(1, std::lround(cfg.budget_pct / 100.0 * n)));
    const BudgetAllocation budget = allocate_budget(part, k);
    log << "variant " << cfg.variant << ": " << part.num_communities
        << " communities (modularity " << part.modularity << "), budget k=" << k << "\n";

    const Matrix features = scorer_features(model, store, part);
    std::vector<int> seeds;
    double est_total = -1.0;
    int chosen = 0;
    ScorerTrainResult chosen_train;
    for (int r = 0; r < cfg.scorer.restarts; ++r) {
        ParameterStore scorer;
        const ScorerTrainResult st = train_scorer(model, store, scorer, part, budget, cfg.scorer,
                                                  derive_seed(cfg.seed, 0x5c0 + r));
        const std::vector<int> cand = select_seeds(scorer_logits(scorer, features), part, budget);
        std::vector<double> indicator(n, 0.0);
        for (int v : cand) indicator[v] = 1.0;
        const std::vector<double> s_hat = model.predict(store, indicator);
        const double total = std::accumulate(s_hat.begin(), s_hat.end(), 0.0);
        if (total > est_total) {
            est_total = total;
            seeds = cand;
            chosen = r;
            chosen_train = st;
        }
    }
    log << "scorer: best relaxed loss " << chosen_train.best_loss << " at epoch "
        << chosen_train.best_epoch << "/" << cfg.scorer.epochs << " (restart " << chosen + 1
        << " of " << cfg.scorer.restarts << ")\n";

    const SpreadReport rep =
        evaluate_seed_set(g, spec, seeds, cfg.eval_runs, derive_seed(cfg.seed, 0xe7a1));

    SelectOutcome out;
    out.seeds = seeds;
    out.k = k;
    out.communities = part.num_communities;
    out.est_spread_pct = 100.0 * est_total / n;
    out.mc_spread_pct = rep.percent;
    out.mc_se_pct = rep.se_percent;
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

    // seed-set record: no timing fields, so identical runs match byte for byte
    nlohmann::ordered_json doc;
    doc["dataset"] = cfg.dataset;
    doc["spec"] = spec.hash();
    doc["model"] = cfg.model;
    doc["variant"] = cfg.variant;
    doc["k"] = k;
    doc["seeds"] = seeds;
    doc["est_spread"] = out.est_spread_pct;
    doc["mc_spread"] = out.mc_spread_pct;
    doc["se"] = out.mc_se_pct;
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream js(seed_set_file(cfg), std::ios::binary);
        if (!js) throw DataError("cannot write " + seed_set_file(cfg));
        js << doc.dump(2) << "\n";
    }

    const std::string results = results_file(cfg);
    const bool fresh = !fs::exists(results);
    std::ofstream csv(results, std::ios::app);
    if (!csv) throw DataError("cannot write " + results);
    if (fresh) csv << "dataset,model,variant,k_pct,spread_pct,se_pct,wall_s\n";
    csv << dataset_stem(cfg) << "," << cfg.model << "," << cfg.variant << "," << cfg.budget_pct
        << "," << std::setprecision(12) << out.mc_spread_pct << "," << out.mc_se_pct << ","
        << std::setprecision(4) << out.wall_seconds << "\n";

    log << "selected " << seeds.size() << " seeds; estimator expects " << out.est_spread_pct
        << "%, MC spread " << out.mc_spread_pct << "% +- " << out.mc_se_pct << " ("
        << cfg.eval_runs << " runs)";
    const double ref = reference_spread_pct(dataset_stem(cfg), cfg.model, cfg.budget_pct);
    if (ref >= 0.0) log << "; published reference " << ref << "%";
    log << "\n" << "seed set: " << seed_set_file(cfg) << "\n";
    return out;
}

double reference_spread_pct(const std::string& dataset, const std::string& model,
                            double budget_pct) {
    struct Ref {
        const char* dataset;
        const char* model;
        double pct, value;
    };
    // Reported spread percentages for the four benchmark graphs (context only;
    // synthetic stand-in edge lists will not reproduce them).
    static constexpr Ref refs[] = {
        {"jazz", "ic", 1, 8.5},         {"jazz", "ic", 5, 26.9},
        {"jazz", "ic", 10, 41.6},       {"jazz", "ic", 20, 53.8},
        {"jazz", "lt", 1, 2.0},         {"jazz", "lt", 5, 6.7},
        {"jazz", "lt", 10, 14.9},       {"jazz", "lt", 20, 96.9},
        {"cora_ml", "ic", 1, 11.5},     {"cora_ml", "ic", 5, 25.6},
        {"cora_ml", "ic", 10, 40.9},    {"cora_ml", "ic", 20, 52.8},
        {"cora_ml", "lt", 1, 7.4},      {"cora_ml", "lt", 5, 40.7},
        {"cora_ml", "lt", 10, 68.2},    {"cora_ml", "lt", 20, 95.3},
        {"netscience", "ic", 1, 6.2},   {"netscience", "ic", 5, 22.0},
        {"netscience", "ic", 10, 32.0}, {"netscience", "ic", 20, 52.4},
        {"netscience", "lt", 1, 2.9},   {"netscience", "lt", 5, 14.4},
        {"netscience", "lt", 10, 25.3}, {"netscience", "lt", 20, 52.0},
        {"power_grid", "ic", 1, 6.4},   {"power_grid", "ic", 5, 24.0},
        {"power_grid", "ic", 10, 36.9}, {"power_grid", "ic", 20, 61.0},
        {"power_grid", "lt", 1, 6.3},   {"power_grid", "lt", 5, 24.6},
        {"power_grid", "lt", 10, 47.2}, {"power_grid", "lt", 20, 73.2},
    };
    for (const Ref& r : refs)
        if (dataset == r.dataset && model == r.model && std::abs(budget_pct - r.pct) < 1e-9)
            return r.value;
    return -1.0;
}

void cmd_report(const ExperimentConfig& cfg, std::ostream& log) {
    std::ifstream in(results_file(cfg));
    if (!in) throw DataError("no results file at " + results_file(cfg) + "; run select first");
    std::string line;
    std::getline(in, line); // header
    log << std::left << std::setw(14) << "dataset" << std::setw(7) << "model" << std::setw(9)
        << "variant" << std::right << std::setw(7) << "k%" << std::setw(12) << "spread%"
        << std::setw(9) << "se" << std::setw(10) << "ref%" << "\n";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string dataset, model, variant, kpct, spread, se, wall;
        std::getline(row, dataset, ',');
        std::getline(row, model, ',');
        std::getline(row, variant, ',');
        std::getline(row, kpct, ',');
        std::getline(row, spread, ',');
        std::getline(row, se, ',');
        std::getline(row, wall, ',');
        double ref = -1.0;
        try {
            ref = reference_spread_pct(dataset, model, std::stod(kpct));
        } catch (...) {
            throw DataError("malformed results row: " + line);
        }
        std::ostringstream spread_fmt, se_fmt;
        spread_fmt << std::fixed << std::setprecision(1) << std::stod(spread);
        se_fmt << std::fixed << std::setprecision(2) << std::stod(se);
        log << std::left << std::setw(14) << dataset << std::setw(7) << model << std::setw(9)
            << variant << std::right << std::setw(7) << kpct << std::setw(12) << spread_fmt.str()
            << std::setw(9) << se_fmt.str() << std::setw(10)
            << (ref >= 0.0 ? (std::ostringstream() << std::fixed << std::setprecision(1) << ref)
                                 .str()
                           : std::string("-"))
            << "\n";
    }
}

// ---------------------------------------------------------------------------
// verify: property suites with library-internal oracles
// ---------------------------------------------------------------------------

namespace {

struct SuiteResult {
    std::string name;
    bool ok = false;
    std::string detail;
};

SuiteResult suite_operator_definiteness() {
    SuiteResult r{"operator-definiteness", true, ""};
    int checked = 0, disagreements = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4 + trial % 13; // 4..16
        const int d = 1 + trial % 2;
        const Graph g = random_connected_graph(n, n / 2 + 1, 0x11 + trial);
        const Sheaf sh = random_sheaf(g, d, 0x22 + trial);
        const SheafOperator base = assemble_laplacian(sh);
        const std::vector<double> eig = symmetric_eigenvalues(base.to_dense());
        const double lam_min = eig.front();
        for (double eps : {-lam_min - 0.1, -lam_min + 0.1, 0.0, 1.0}) {
            SheafOperator shifted = assemble_laplacian(sh);
            shift(shifted, eps);
            const bool chol = is_positive_definite(shifted.to_dense());
            const bool predicted = eps > -lam_min;
            ++checked;
            if (chol != predicted) ++disagreements;
        }
    }
    std::ostringstream os;
    os << checked << " shift checks, " << disagreements << " disagreements";
    r.detail = os.str();
    r.ok = disagreements == 0;
    return r;
}

SuiteResult suite_reaction_saturation() {
    SuiteResult r{"reaction-saturation", true, ""};
    const Graph g = random_connected_graph(12, 8, 0x77);
    double max_ratio = 0.0;
    long long checked = 0;
    try {
        for (int draw = 0; draw < 50; ++draw) {
            const int d = 1 + draw % 2, f = 2;
            const int nd = g.num_vertices() * d;
            std::mt19937_64 rng = make_rng(0x2b0b, draw);
            std::uniform_real_distribution<double> up(0.0, 2.0), uk(0.5, 2.0);
            ReactionParams p;
            p.alpha = 0.1;
            p.beta = 0.5;
            p.gamma = 0.5;
            p.phi1 = Matrix(nd, f);
            p.phi2 = Matrix(nd, f);
            p.kappa1 = Matrix(nd, f);
            p.kappa2 = Matrix(nd, f);
            for (double& v : p.phi1.vec()) v = up(rng);
            for (double& v : p.phi2.vec()) v = up(rng);
            for (double& v : p.kappa1.vec()) v = uk(rng);
            for (double& v : p.kappa2.vec()) v = uk(rng);
            const BoundReport rep = check_saturation_bounds(g, d, f, p, 100, 0x99 + draw);
            max_ratio = std::max(max_ratio, rep.max_ratio);
            checked += rep.checked;
        }
    } catch (const VerificationError& e) {
        r.ok = false;
        r.detail = e.what();
        return r;
    }
    std::ostringstream os;
    os << checked << " block ratios, max " << std::setprecision(12) << max_ratio;
    r.detail = os.str();
    r.ok = max_ratio < 1.0 && checked >= 10000;
    return r;
}

SuiteResult suite_fixed_point_residual() {
    SuiteResult r{"fixed-point-residual", true, ""};
    const double tol = 1e-8;
    int converged = 0, holds = 0, attempts = 0;
    double worst_margin = 1e300;
    for (std::uint64_t seed = 0; converged < 100 && attempts < 160; ++seed, ++attempts) {
        const int n = 8 + static_cast<int>(seed % 9);
        const int d = 1 + static_cast<int>(seed % 2), f = 2;
        const Graph g = random_connected_graph(n, n / 2, 0x500 + seed);
        const Sheaf sh = random_sheaf(g, d, 0x600 + seed);
        SheafOperator op = assemble_laplacian(sh);
        shift(op, 0.25 * estimate_lambda_max(op));
        const double lam = estimate_lambda_max(op);
        const int nd = op.nd();

        ReactionParams p;
        p.alpha = 0.8 / lam;
        p.beta = 0.4;
        p.gamma = 0.3;
        std::mt19937_64 rng = make_rng(0x700, seed);
        std::uniform_real_distribution<double> uphi(0.75, 1.25);
        p.phi1 = Matrix(nd, f);
        p.phi2 = Matrix(nd, f);
        for (double& v : p.phi1.vec()) v = uphi(rng);
        for (double& v : p.phi2.vec()) v = uphi(rng);
        p.kappa1 = Matrix(nd, f, 1.0);
        p.kappa2 = Matrix(nd, f);
        for (int v = 0; v < n; ++v)
            for (int rr = 0; rr < d; ++rr)
                for (int c = 0; c < f; ++c) p.kappa2(v * d + rr, c) = 1.0 + g.degree(v);

        ActivationVector s;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int v = 0; v < n; ++v) s.probs.push_back(u01(rng));

        Matrix x0(nd, f);
        for (double& v : x0.vec()) v = 2.0 * u01(rng) - 1.0;

        for (double dt : {1.0, 0.5, 0.25, 0.125}) {
            ReactionParams scaled = p;
            scaled.alpha *= dt;
            scaled.beta *= dt;
            scaled.gamma *= dt;
            const FixedPointResult fp = iterate_to_fixed_point(x0, op, scaled, s, tol, 20000);
            if (!fp.converged) continue;
            ++converged;
            const ResidualReport rr = check_residual_bound(fp.x, op, scaled, tol);
            if (rr.holds) ++holds;
            worst_margin = std::min(worst_margin, rr.rhs - rr.lhs);
            break;
        }
    }
    std::ostringstream os;
    os << converged << " fixed points, " << holds << " satisfy the residual bound, min margin "
       << worst_margin;
    r.detail = os.str();
    r.ok = converged >= 100 && holds == converged;
    return r;
}

SuiteResult suite_separability() {
    SuiteResult r{"separability", true, ""};
    int flat = 0, separated = 0;
    const int total = 20;
    try {
        for (std::uint64_t seed = 0; seed < total; ++seed) {
            const int n = 12 + static_cast<int>(seed % 9);
            const Graph g = random_connected_bipartite(n, n / 3, 0x900 + seed);
            const SeparabilityReport rep = separability_experiment(g, seed);
            if (rep.gap_standard <= 1e-6) ++flat;
            if (rep.gap_reaction >= 1e-3) ++separated;
        }
    } catch (const std::exception& e) {
        r.ok = false;
        r.detail = e.what();
        return r;
    }
    std::ostringstream os;
    os << flat << "/" << total << " plain runs flatten, " << separated << "/" << total
       << " reaction runs keep a gap";
    r.detail = os.str();
    r.ok = flat == total && separated * 100 >= 95 * total;
    return r;
}

SuiteResult suite_gradient_check() {
    SuiteResult r{"gradient-check", true, ""};
    const Graph g = random_connected_graph(8, 6, 0xa0);
    GnnConfig cfg;
    cfg.layers = 2;
    cfg.stalk_dim = 2;
    cfg.channels = 2;
    cfg.hidden = 8;
    cfg.dropout = 0.0;
    const SheafGnnModel model(g, cfg);
    ParameterStore store;
    model.init_params(store, 0xa1);

    std::mt19937_64 rng = make_rng(0xa2, 0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> probs(g.num_vertices()), y(g.num_vertices());
    for (double& v : probs) v = u01(rng);
    for (double& v : y) v = u01(rng);

    const auto loss_at = [&]() {
        Tape t;
        const int s = model.build_forward(t, store, probs, true, nullptr);
        return t.value(model.build_estimation_loss(t, s, y))(0, 0);
    };

    Tape tape;
    const int s_hat = model.build_forward(tape, store, probs, true, nullptr);
    tape.backward(model.build_estimation_loss(tape, s_hat, y));
    std::map<std::string, Matrix> analytic;
    tape.for_each_param([&](const std::string& name, const Matrix& grad) {
        auto [it, fresh] = analytic.emplace(name, grad);
        if (!fresh) it->second += grad;
    });

    const double h = 1e-5;
    double max_rel = 0.0;
    int probes = 0;
    for (const std::string& name : store.names()) {
        Matrix& value = store.value(name);
        const Matrix& grad = analytic.at(name);
        const int count = static_cast<int>(value.size());
        for (int pick = 0; pick < std::min(3, count); ++pick) {
            const int idx = (pick * 2654435761u) % count;
            const double saved = value.vec()[idx];
            value.vec()[idx] = saved + h;
            const double up = loss_at();
            value.vec()[idx] = saved - h;
            const double down = loss_at();
            value.vec()[idx] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = grad.vec()[idx];
            const double rel = std::abs(fd - an) / std::max(1e-6, std::abs(fd));
            max_rel = std::max(max_rel, rel);
            ++probes;
        }
    }
    std::ostringstream os;
    os << probes << " probes, max relative error " << max_rel;
    r.detail = os.str();
    r.ok = max_rel <= 1e-4;
    return r;
}

SuiteResult suite_simulator() {
    SuiteResult r{"simulator-vs-exact", true, ""};
    int outside = 0, checks = 0;
    double worst_z = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        const int n = 4 + inst % 3;
        const Graph g = random_connected_graph(n, std::min(3, 12 - (n - 1)), 0xb0 + inst);
        std::vector<int> seeds = {inst % n};
        for (double p : {0.1, 0.5, 0.9}) {
            DiffusionModelSpec spec;
            spec.kind = CascadeModel::IC;
            spec.ic_prob = p;
            const double exact = exact_sigma_ic(g, spec, seeds);
            const SpreadEstimate mc = estimate_sigma(g, spec, seeds, 20000, 0xc0 + inst);
            const double se = std::max(mc.std_error, 1e-9);
            const double z = std::abs(mc.mean - exact) / se;
            worst_z = std::max(worst_z, z);
            ++checks;
            if (z > 3.0) ++outside;
        }
    }

    // seed monotonicity, exhaustive over all masks on a 5-vertex graph
    const Graph g5 = random_connected_graph(5, 3, 0xd1);
    bool monotone = true;
    for (int model = 0; model < 2 && monotone; ++model) {
        DiffusionModelSpec spec;
        spec.kind = model == 0 ? CascadeModel::IC : CascadeModel::LT;
        spec.ic_prob = 0.3;
        for (int mask = 1; mask < 32 && monotone; ++mask) {
            std::vector<int> seeds;
            for (int v = 0; v < 5; ++v)
                if (mask & (1 << v)) seeds.push_back(v);
            const double base = estimate_sigma(g5, spec, seeds, 3000, 0xd2).mean;
            for (int v = 0; v < 5; ++v) {
                if (mask & (1 << v)) continue;
                std::vector<int> more = seeds;
                more.push_back(v);
                std::sort(more.begin(), more.end());
                const double grown = estimate_sigma(g5, spec, more, 3000, 0xd2).mean;
                if (grown + 1e-9 < base) monotone = false;
            }
        }
    }

    std::ostringstream os;
    os << checks << " exact comparisons, worst |z| " << worst_z << ", monotonicity "
       << (monotone ? "holds" : "violated");
    r.detail = os.str();
    r.ok = outside == 0 && monotone;
    return r;
}

} // namespace

void cmd_verify(std::ostream& log) {
    const SuiteResult suites[] = {
        suite_operator_definiteness(), suite_reaction_saturation(), suite_fixed_point_residual(),
        suite_separability(),          suite_gradient_check(),      suite_simulator(),
    };
    std::string failures;
    for (const SuiteResult& s : suites) {
        log << (s.ok ? "pass" : "FAIL") << "  " << std::left << std::setw(24) << s.name << " "
            << s.detail << "\n";
        if (!s.ok) failures += (failures.empty() ? "" : ", ") + s.name;
    }
    if (!failures.empty()) throw VerificationError("failed suites: " + failures);
    log << "all property suites passed\n";
}

} // namespace deepsn
