#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "deepsn/cascade.hpp"
#include "deepsn/graph.hpp"
#include "deepsn/model.hpp"
#include "deepsn/seed_select.hpp"
#include "deepsn/training.hpp"

namespace deepsn {

struct DatasetInfo {
    std::string name;
    int vertices = 0;
    int edges = 0;
    bool in_ci = true; // the two largest graphs are loadable but not exercised in CI
};

// Built-in benchmark graphs. Edge lists are materialized on demand as
// deterministic synthetic stand-ins with the published vertex/edge counts;
// drop a real edge list at data_dir/<name>.edges (or pass a path) to use it.
const std::vector<DatasetInfo>& dataset_registry();

// Registry name -> path of a materialized edge list under data_dir
// (generated when absent). Strings containing '/' or ending in a file
// extension pass through untouched. Throws DataError for unknown names.
std::string ensure_dataset(const std::string& name_or_path, const std::string& data_dir);

struct ExperimentConfig {
    std::string dataset = "jazz"; // registry name or edge-list path
    std::string data_dir = "data";
    std::string out_dir = "out";

    // diffusion model
    std::string model = "ic"; // ic | lt | sis
    double ic_prob = -1.0;    // < 0: weighted cascade p(u->v) = 1/deg(v)
    double sis_infect = 0.1;
    double sis_recover = 0.3;
    int horizon = 100;

    GnnConfig gnn;
    TrainConfig train;
    ScorerConfig scorer;

    // selection
    double budget_pct = 10.0;       // k as a percentage of n, in (0, 100]
    std::string variant = "deepsn"; // deepsn | sp | wc | wsa
    double resolution = 1.0;        // community detection resolution

    // ground-truth corpus
    int samples = 160;
    int gt_runs = 100;
    int gt_size_lo = 1; // random training seed-set sizes; hi = 0 picks n/10
    int gt_size_hi = 0;
    std::uint64_t gt_seed = 7; // corpus stream, separate so one corpus serves many runs

    int eval_runs = 100;
    std::uint64_t seed = 1; // master seed for training + selection

    void validate() const;                           // throws UsageError
    DiffusionModelSpec diffusion(const Graph& g) const; // builds + validates
};

// JSON object with keys matching the field names above ("gnn", "train" and
// "scorer" are nested objects). Unknown keys throw UsageError.
ExperimentConfig load_config(const std::string& path);

// Artifact paths inside cfg.out_dir, deterministic in the config.
std::string ground_truth_file(const ExperimentConfig& cfg);
std::string checkpoint_file(const ExperimentConfig& cfg);
std::string history_file(const ExperimentConfig& cfg);
std::string seed_set_file(const ExperimentConfig& cfg);
std::string results_file(const ExperimentConfig& cfg);

// Commands throw typed errors; the CLI maps them to exit codes
// (1 usage, 2 data, 3 numerical, 4 verification).
void cmd_gen_data(const ExperimentConfig& cfg, std::ostream& log);

struct TrainOutcome {
    double test_mae = 0.0;
    double best_val_mae = 0.0;
    int epochs_run = 0;
};
TrainOutcome cmd_train(const ExperimentConfig& cfg, std::ostream& log);

struct SelectOutcome {
    std::vector<int> seeds;
    int k = 0;
    int communities = 0;
    double est_spread_pct = 0.0; // estimator's expected activation percentage
    double mc_spread_pct = 0.0;  // Monte Carlo percentage of n
    double mc_se_pct = 0.0;
    double wall_seconds = 0.0;
};
SelectOutcome cmd_select(const ExperimentConfig& cfg, std::ostream& log);

// Re-runs the property suites (operator definiteness, reaction saturation,
// fixed-point residuals, separability, gradient checks, simulator-vs-exact)
// with library-internal oracles. Prints one line per suite and throws
// VerificationError naming every failed suite.
void cmd_verify(std::ostream& log);

// Pretty-prints accumulated results.csv rows next to published reference
// spread percentages where one exists for (dataset, model, budget).
void cmd_report(const ExperimentConfig& cfg, std::ostream& log);

// Published reference spread percentage, or a negative value when the
// combination has none recorded.
double reference_spread_pct(const std::string& dataset, const std::string& model,
                            double budget_pct);

} // namespace deepsn
