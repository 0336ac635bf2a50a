#pragma once
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "deepsn/graph.hpp"

namespace deepsn {

enum class CascadeModel { IC, LT, SIS };

CascadeModel parse_cascade_model(const std::string& name); // "ic" | "lt" | "sis"
std::string cascade_model_name(CascadeModel m);

// Diffusion model parameters. ic_prob < 0 selects the weighted-cascade rule
// p(u->v) = 1/deg(v); lt_weights empty selects w(u->v) = 1/deg(v). Explicit
// LT weights are per directed edge: slot 2e is lo->hi for canonical edge e,
// slot 2e+1 is hi->lo.
struct DiffusionModelSpec {
    CascadeModel kind = CascadeModel::IC;
    double ic_prob = -1.0;
    std::vector<double> lt_weights;
    double sis_infect = 0.1;
    double sis_recover = 0.3;
    int horizon = 100;

    void validate(const Graph& g) const; // probability ranges, LT row sums <= 1
    std::string hash() const;            // short content hash for serialized records
};

struct CascadeResult {
    std::vector<std::uint8_t> ever_active;
    int spread = 0;
    int steps_run = 0;
};

struct GroundTruthSample {
    std::vector<int> seeds;
    std::vector<double> y; // empirical per-vertex activation probability
    int runs = 0;
};

CascadeResult simulate_once(const Graph& g, const DiffusionModelSpec& spec,
                            const std::vector<int>& seeds, std::mt19937_64& rng);

// Monte Carlo over `runs` independent per-run rng streams derived from
// (master_seed, run). Integer spread statistics are reduced exactly, so the
// result is identical at any thread count.
struct SpreadEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int runs = 0;
};
SpreadEstimate estimate_sigma(const Graph& g, const DiffusionModelSpec& spec,
                              const std::vector<int>& seeds, int runs, std::uint64_t master_seed);

// Exact expected spread for uniform-probability IC by live-edge enumeration
// over all 2^m edge subsets. Requires m <= 20 and an explicit ic_prob.
double exact_sigma_ic(const Graph& g, const DiffusionModelSpec& spec,
                      const std::vector<int>& seeds);

// Random seed sets of size uniform in [size_lo, size_hi]; Y averaged over
// `runs` simulations per sample.
std::vector<GroundTruthSample> make_ground_truth(const Graph& g, const DiffusionModelSpec& spec,
                                                 int n_samples, int size_lo, int size_hi,
                                                 int runs, std::uint64_t master_seed);

// JSON-lines serialization: {"seeds":[...],"Y":[...],"runs":r,"spec":"hash"}.
void save_ground_truth(const std::string& path, const std::vector<GroundTruthSample>& samples,
                       const DiffusionModelSpec& spec);
std::vector<GroundTruthSample> load_ground_truth(const std::string& path,
                                                 std::string* spec_hash_out = nullptr);

} // namespace deepsn
