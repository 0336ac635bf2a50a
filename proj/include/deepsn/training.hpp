#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "deepsn/cascade.hpp"
#include "deepsn/model.hpp"
#include "deepsn/params.hpp"

namespace deepsn {

struct DataSplit {
    std::vector<GroundTruthSample> train;
    std::vector<GroundTruthSample> validation;
    std::vector<GroundTruthSample> test;
};

// Deterministic shuffled 60/20/20 split (proportions within one sample).
// Throws DataError below 5 samples.
DataSplit split_dataset(std::vector<GroundTruthSample> samples, std::uint64_t seed);

struct TrainConfig {
    double lr = 0.001; // {0.001, 0.002, 0.004}
    int batch = 8;     // {2, 8, 16, 32}
    int max_epochs = 500;
    int patience = 20;   // epochs without validation improvement
    int max_backoffs = 3; // lr halvings on divergence before giving up
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mae = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double best_val_mae = 0.0;
    int best_epoch = 0;
    int backoffs_used = 0;
};

// Minimizes the squared estimation loss over the train split with Adam.
// Per-sample tapes run in parallel; gradients merge in sample order, so a
// fixed seed reproduces the loss history bit for bit. The store is left at
// the best-validation checkpoint. Throws NumericalError when divergence
// survives all lr backoffs.
TrainResult train_estimator(const SheafGnnModel& model, ParameterStore& store,
                            const DataSplit& split, const TrainConfig& cfg, std::uint64_t seed);

// Mean absolute error of the estimator over all samples and vertices,
// evaluated without dropout.
double eval_mae(const SheafGnnModel& model, const ParameterStore& store,
                const std::vector<GroundTruthSample>& samples);

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history);

} // namespace deepsn
