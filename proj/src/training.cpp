#include "deepsn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "deepsn/errors.hpp"
#include "deepsn/rng.hpp"

namespace deepsn {
namespace {

std::vector<double> seed_indicator(int n, const std::vector<int>& seeds) {
    std::vector<double> s(n, 0.0);
    for (int v : seeds) {
        if (v < 0 || v >= n) throw DataError("seed vertex out of range in sample");
        s[v] = 1.0;
    }
    return s;
}

using Snapshot = std::map<std::string, Matrix>;

Snapshot take_snapshot(const ParameterStore& store) {
    Snapshot snap;
    for (const std::string& name : store.names()) snap.emplace(name, store.value(name));
    return snap;
}

void restore_snapshot(ParameterStore& store, const Snapshot& snap) {
    for (const auto& [name, value] : snap) store.value(name) = value;
}

} // namespace

DataSplit split_dataset(std::vector<GroundTruthSample> samples, std::uint64_t seed) {
    const int total = static_cast<int>(samples.size());
    if (total < 5) throw DataError("need at least 5 samples to split");
    std::mt19937_64 rng = make_rng(seed, 0x5b17);
    std::shuffle(samples.begin(), samples.end(), rng);

    // 60/20/20 with the train share rounded to nearest, remainder split
    // evenly and the odd sample going to validation
    int n_train = static_cast<int>(std::lround(total * 0.6));
    n_train = std::clamp(n_train, 1, total - 2);
    const int rest = total - n_train;
    const int n_val = (rest + 1) / 2;

    DataSplit split;
    split.train.assign(samples.begin(), samples.begin() + n_train);
    split.validation.assign(samples.begin() + n_train, samples.begin() + n_train + n_val);
    split.test.assign(samples.begin() + n_train + n_val, samples.end());
    return split;
}

double eval_mae(const SheafGnnModel& model, const ParameterStore& store,
                const std::vector<GroundTruthSample>& samples) {
    if (samples.empty()) throw DataError("cannot evaluate on an empty sample list");
    const int n = model.graph().num_vertices();
    const int count = static_cast<int>(samples.size());
    std::vector<double> per_sample(count, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
        const GroundTruthSample& smp = samples[i];
        if (static_cast<int>(smp.y.size()) != n)
            throw DataError("ground-truth vector length mismatch");
        const std::vector<double> pred =
            model.predict(store, seed_indicator(n, smp.seeds));
        double acc = 0.0;
        for (int v = 0; v < n; ++v) acc += std::abs(pred[v] - smp.y[v]);
        per_sample[i] = acc;
    }
    double total = 0.0;
    for (double v : per_sample) total += v; // fixed order: deterministic
    return total / (static_cast<double>(count) * n);
}

TrainResult train_estimator(const SheafGnnModel& model, ParameterStore& store,
                            const DataSplit& split, const TrainConfig& cfg, std::uint64_t seed) {
    if (split.train.empty() || split.validation.empty())
        throw DataError("train and validation splits must be nonempty");
    if (cfg.batch < 1 || cfg.max_epochs < 1 || cfg.patience < 1 || !(cfg.lr > 0.0))
        throw DataError("bad training configuration");

    const int n = model.graph().num_vertices();
    const int n_train = static_cast<int>(split.train.size());

    TrainResult result;
    double lr = cfg.lr;
    Snapshot best = take_snapshot(store); // falls back to the initial weights
    double best_mae = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<int> order(n_train);
    for (int i = 0; i < n_train; ++i) order[i] = i;

    struct SampleGrads {
        double loss = 0.0;
        std::map<std::string, Matrix> grads;
    };

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::mt19937_64 shuffle_rng = make_rng(derive_seed(seed, 0xe70000u + epoch), 0);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        bool diverged = false;

        for (int start = 0; start < n_train && !diverged; start += cfg.batch) {
            const int stop = std::min(start + cfg.batch, n_train);
            const int bsz = stop - start;
            std::vector<SampleGrads> slots(bsz);

#pragma omp parallel for schedule(dynamic)
            for (int b = 0; b < bsz; ++b) {
                const GroundTruthSample& smp = split.train[order[start + b]];
                Tape tape;
                std::mt19937_64 drop_rng =
                    make_rng(derive_seed(seed, 0xd0000u + epoch), order[start + b]);
                const int s_hat = model.build_forward(
                    tape, store, seed_indicator(n, smp.seeds), true, &drop_rng);
                const int loss = model.build_estimation_loss(tape, s_hat, smp.y);
                slots[b].loss = tape.value(loss)(0, 0);
                if (std::isfinite(slots[b].loss)) {
                    tape.backward(loss);
                    tape.for_each_param([&](const std::string& name, const Matrix& g) {
                        slots[b].grads.emplace(name, g);
                    });
                }
            }

            store.zero_grads();
            for (int b = 0; b < bsz; ++b) { // fixed order merge
                if (!std::isfinite(slots[b].loss)) {
                    diverged = true;
                    break;
                }
                epoch_loss += slots[b].loss;
                for (const auto& [name, g] : slots[b].grads) store.accumulate(name, g);
            }
            if (diverged) break;
            store.scale_grads(1.0 / bsz);
            try {
                store.adam_step(lr);
            } catch (const NumericalError&) {
                diverged = true;
            }
        }

        if (diverged) {
            ++result.backoffs_used;
            if (result.backoffs_used > cfg.max_backoffs)
                throw NumericalError("training diverged after all lr backoffs");
            lr *= 0.5;
            restore_snapshot(store, best);
            store.reset_optimizer();
            continue;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = epoch_loss / (static_cast<double>(n_train) * n);
        stats.val_mae = eval_mae(model, store, split.validation);
        result.history.push_back(stats);

        if (stats.val_mae < best_mae - 1e-12) {
            best_mae = stats.val_mae;
            result.best_epoch = epoch;
            best = take_snapshot(store);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    restore_snapshot(store, best);
    result.best_val_mae = best_mae;
    return result;
}

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "epoch,train_mse,val_mae\n";
    out.precision(12);
    for (const EpochStats& row : history)
        out << row.epoch << "," << row.train_mse << "," << row.val_mae << "\n";
    if (!out) throw DataError("write failed: " + path);
}

} // namespace deepsn
