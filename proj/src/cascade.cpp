#include "deepsn/cascade.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deepsn/errors.hpp"
#include "deepsn/rng.hpp"

namespace deepsn {
namespace {

void check_seeds(const Graph& g, const std::vector<int>& seeds) {
    if (seeds.empty()) throw DataError("seed set is empty");
    for (int s : seeds)
        if (s < 0 || s >= g.num_vertices())
            throw DataError("seed vertex out of range: " + std::to_string(s));
}

// Influence weight of u on v along canonical edge e.
double lt_weight(const Graph& g, const DiffusionModelSpec& spec, int e, int v) {
    if (spec.lt_weights.empty()) return 1.0 / g.degree(v);
    const auto [lo, hi] = g.edge(e);
    (void)lo;
    return (v == hi) ? spec.lt_weights[2 * e] : spec.lt_weights[2 * e + 1];
}

double ic_prob_of(const Graph& g, const DiffusionModelSpec& spec, int v) {
    return spec.ic_prob >= 0.0 ? spec.ic_prob : 1.0 / g.degree(v);
}

CascadeResult run_ic(const Graph& g, const DiffusionModelSpec& spec, const std::vector<int>& seeds,
                     std::mt19937_64& rng) {
    const int n = g.num_vertices();
    CascadeResult res;
    res.ever_active.assign(n, 0);
    std::vector<int> frontier;
    for (int s : seeds)
        if (!res.ever_active[s]) {
            res.ever_active[s] = 1;
            frontier.push_back(s);
        }
    std::sort(frontier.begin(), frontier.end());
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    while (!frontier.empty() && res.steps_run < spec.horizon) {
        ++res.steps_run;
        std::vector<int> next;
        for (int u : frontier)
            for (int v : g.neighbors(u)) {
                if (res.ever_active[v]) continue;
                if (coin(rng) < ic_prob_of(g, spec, v)) {
                    res.ever_active[v] = 1;
                    next.push_back(v);
                }
            }
        std::sort(next.begin(), next.end());
        frontier = std::move(next);
    }
    for (std::uint8_t a : res.ever_active) res.spread += a;
    return res;
}

CascadeResult run_lt(const Graph& g, const DiffusionModelSpec& spec, const std::vector<int>& seeds,
                     std::mt19937_64& rng) {
    const int n = g.num_vertices();
    CascadeResult res;
    res.ever_active.assign(n, 0);
    // Thresholds in (0,1]: a neighbor-weight sum of 0 never fires.
    std::vector<double> theta(n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int v = 0; v < n; ++v) theta[v] = 1.0 - unit(rng);
    std::vector<double> acc(n, 0.0);
    std::vector<int> frontier;
    for (int s : seeds)
        if (!res.ever_active[s]) {
            res.ever_active[s] = 1;
            frontier.push_back(s);
        }
    std::sort(frontier.begin(), frontier.end());
    while (!frontier.empty() && res.steps_run < spec.horizon) {
        ++res.steps_run;
        std::vector<int> touched;
        for (int u : frontier) {
            const auto& nbr = g.neighbors(u);
            const auto& inc = g.incident_edges(u);
            for (std::size_t i = 0; i < nbr.size(); ++i) {
                const int v = nbr[i];
                if (res.ever_active[v]) continue;
                acc[v] += lt_weight(g, spec, inc[i], v);
                touched.push_back(v);
            }
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        std::vector<int> next;
        for (int v : touched)
            if (acc[v] >= theta[v]) {
                res.ever_active[v] = 1;
                next.push_back(v);
            }
        frontier = std::move(next);
    }
    for (std::uint8_t a : res.ever_active) res.spread += a;
    return res;
}

CascadeResult run_sis(const Graph& g, const DiffusionModelSpec& spec, const std::vector<int>& seeds,
                      std::mt19937_64& rng) {
    const int n = g.num_vertices();
    CascadeResult res;
    res.ever_active.assign(n, 0);
    std::vector<std::uint8_t> infected(n, 0);
    for (int s : seeds) {
        res.ever_active[s] = 1;
        infected[s] = 1;
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::uint8_t> newly(n, 0);
    for (int step = 0; step < spec.horizon; ++step) {
        std::fill(newly.begin(), newly.end(), 0);
        // Synchronous contacts against the step-start infected set; a vertex
        // draws one coin per infected neighbor whether or not already marked.
        for (int u = 0; u < n; ++u) {
            if (!infected[u]) continue;
            for (int v : g.neighbors(u)) {
                if (infected[v]) continue;
                if (coin(rng) < spec.sis_infect) newly[v] = 1;
            }
        }
        for (int u = 0; u < n; ++u) {
            if (!infected[u]) continue;
            if (coin(rng) < spec.sis_recover) infected[u] = 0;
        }
        bool any = false;
        for (int v = 0; v < n; ++v) {
            if (newly[v]) {
                infected[v] = 1;
                res.ever_active[v] = 1;
            }
            any = any || infected[v];
        }
        ++res.steps_run;
        if (!any) break;
    }
    for (std::uint8_t a : res.ever_active) res.spread += a;
    return res;
}

} // namespace

CascadeModel parse_cascade_model(const std::string& name) {
    if (name == "ic" || name == "IC") return CascadeModel::IC;
    if (name == "lt" || name == "LT") return CascadeModel::LT;
    if (name == "sis" || name == "SIS") return CascadeModel::SIS;
    throw UsageError("unknown diffusion model: " + name);
}

std::string cascade_model_name(CascadeModel m) {
    switch (m) {
        case CascadeModel::IC: return "ic";
        case CascadeModel::LT: return "lt";
        case CascadeModel::SIS: return "sis";
    }
    return "?";
}

void DiffusionModelSpec::validate(const Graph& g) const {
    if (ic_prob >= 0.0 && ic_prob > 1.0) throw DataError("activation probability above 1");
    if (!(sis_infect >= 0.0 && sis_infect <= 1.0)) throw DataError("sis_infect outside [0,1]");
    if (!(sis_recover >= 0.0 && sis_recover <= 1.0)) throw DataError("sis_recover outside [0,1]");
    if (horizon < 1) throw DataError("horizon must be >= 1");
    if (!lt_weights.empty()) {
        if (lt_weights.size() != static_cast<std::size_t>(2 * g.num_edges()))
            throw DataError("LT weight count must be 2*m");
        for (double w : lt_weights)
            if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("LT weight must be finite, >= 0");
        std::vector<double> in_sum(g.num_vertices(), 0.0);
        for (int e = 0; e < g.num_edges(); ++e) {
            const auto [u, v] = g.edge(e);
            in_sum[v] += lt_weights[2 * e];
            in_sum[u] += lt_weights[2 * e + 1];
        }
        for (int v = 0; v < g.num_vertices(); ++v)
            if (in_sum[v] > 1.0 + 1e-12)
                throw DataError("LT incoming weights exceed 1 at vertex " + std::to_string(v));
    }
}

std::string DiffusionModelSpec::hash() const {
    std::ostringstream os;
    os.precision(17);
    os << cascade_model_name(kind) << ';' << ic_prob << ';' << sis_infect << ';' << sis_recover
       << ';' << horizon << ';';
    for (double w : lt_weights) os << w << ',';
    std::uint64_t h = 1469598103934665603ull;
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

CascadeResult simulate_once(const Graph& g, const DiffusionModelSpec& spec,
                            const std::vector<int>& seeds, std::mt19937_64& rng) {
    check_seeds(g, seeds);
    switch (spec.kind) {
        case CascadeModel::IC: return run_ic(g, spec, seeds, rng);
        case CascadeModel::LT: return run_lt(g, spec, seeds, rng);
        case CascadeModel::SIS: return run_sis(g, spec, seeds, rng);
    }
    throw DataError("unknown diffusion model");
}

SpreadEstimate estimate_sigma(const Graph& g, const DiffusionModelSpec& spec,
                              const std::vector<int>& seeds, int runs,
                              std::uint64_t master_seed) {
    if (runs < 1) throw DataError("runs must be >= 1");
    check_seeds(g, seeds);
    spec.validate(g);
    long long sum = 0, sum_sq = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : sum, sum_sq)
#endif
    for (int run = 0; run < runs; ++run) {
        std::mt19937_64 rng = make_rng(master_seed, static_cast<std::uint64_t>(run));
        const CascadeResult r = simulate_once(g, spec, seeds, rng);
        sum += r.spread;
        sum_sq += static_cast<long long>(r.spread) * r.spread;
    }
    SpreadEstimate est;
    est.runs = runs;
    est.mean = static_cast<double>(sum) / runs;
    if (runs > 1) {
        const double var =
            (static_cast<double>(sum_sq) - static_cast<double>(sum) * est.mean) / (runs - 1);
        est.std_error = std::sqrt(std::max(var, 0.0) / runs);
    }
    return est;
}

double exact_sigma_ic(const Graph& g, const DiffusionModelSpec& spec,
                      const std::vector<int>& seeds) {
    check_seeds(g, seeds);
    if (spec.kind != CascadeModel::IC)
        throw DataError("exact enumeration supports the independent-cascade model only");
    if (spec.ic_prob < 0.0)
        throw DataError("exact enumeration requires an explicit uniform edge probability");
    const int m = g.num_edges();
    if (m > 20) throw DataError("instance too large for live-edge enumeration (m > 20)");
    const int n = g.num_vertices();
    const double p = spec.ic_prob;

    std::vector<double> pow_p(m + 1, 1.0), pow_q(m + 1, 1.0);
    for (int i = 1; i <= m; ++i) {
        pow_p[i] = pow_p[i - 1] * p;
        pow_q[i] = pow_q[i - 1] * (1.0 - p);
    }

    std::vector<std::uint8_t> seen(n);
    std::vector<int> stack;
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        const int live = std::popcount(mask);
        const double prob = pow_p[live] * pow_q[m - live];
        if (prob == 0.0) continue;
        std::fill(seen.begin(), seen.end(), 0);
        stack.clear();
        for (int s : seeds)
            if (!seen[s]) {
                seen[s] = 1;
                stack.push_back(s);
            }
        int reach = static_cast<int>(stack.size());
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            const auto& nbr = g.neighbors(v);
            const auto& inc = g.incident_edges(v);
            for (std::size_t i = 0; i < nbr.size(); ++i) {
                if (!(mask & (1u << inc[i]))) continue;
                const int u = nbr[i];
                if (!seen[u]) {
                    seen[u] = 1;
                    ++reach;
                    stack.push_back(u);
                }
            }
        }
        total += prob * reach;
    }
    return total;
}

std::vector<GroundTruthSample> make_ground_truth(const Graph& g, const DiffusionModelSpec& spec,
                                                 int n_samples, int size_lo, int size_hi,
                                                 int runs, std::uint64_t master_seed) {
    if (n_samples < 1) throw DataError("need at least one sample");
    if (runs < 1) throw DataError("runs must be >= 1");
    const int n = g.num_vertices();
    if (size_lo < 1 || size_hi > n || size_lo > size_hi)
        throw DataError("seed size range outside [1, n]");
    spec.validate(g);

    std::vector<GroundTruthSample> out(n_samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < n_samples; ++i) {
        const std::uint64_t sample_seed = derive_seed(master_seed, 0x5a00 + i);
        std::mt19937_64 pick = make_rng(sample_seed, 0);
        std::uniform_int_distribution<int> size_dist(size_lo, size_hi);
        const int k = size_dist(pick);
        std::vector<int> ids(n);
        for (int v = 0; v < n; ++v) ids[v] = v;
        for (int j = 0; j < k; ++j) {
            std::uniform_int_distribution<int> slot(j, n - 1);
            std::swap(ids[j], ids[slot(pick)]);
        }
        GroundTruthSample& s = out[i];
        s.seeds.assign(ids.begin(), ids.begin() + k);
        std::sort(s.seeds.begin(), s.seeds.end());
        s.runs = runs;

        std::vector<int> count(n, 0);
        for (int run = 0; run < runs; ++run) {
            std::mt19937_64 rng = make_rng(sample_seed, 1 + static_cast<std::uint64_t>(run));
            const CascadeResult r = simulate_once(g, spec, s.seeds, rng);
            for (int v = 0; v < n; ++v) count[v] += r.ever_active[v];
        }
        s.y.resize(n);
        for (int v = 0; v < n; ++v) s.y[v] = static_cast<double>(count[v]) / runs;
    }
    return out;
}

void save_ground_truth(const std::string& path, const std::vector<GroundTruthSample>& samples,
                       const DiffusionModelSpec& spec) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    const std::string h = spec.hash();
    for (const auto& s : samples) {
        nlohmann::json j;
        j["seeds"] = s.seeds;
        j["Y"] = s.y;
        j["runs"] = s.runs;
        j["spec"] = h;
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::vector<GroundTruthSample> load_ground_truth(const std::string& path,
                                                 std::string* spec_hash_out) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::vector<GroundTruthSample> samples;
    std::string line, hash;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        GroundTruthSample s;
        std::string h;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            s.seeds = j.at("seeds").get<std::vector<int>>();
            s.y = j.at("Y").get<std::vector<double>>();
            s.runs = j.at("runs").get<int>();
            h = j.at("spec").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad ground-truth record at line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        if (hash.empty()) hash = h;
        else if (hash != h)
            throw DataError("mixed diffusion specs in ground-truth file at line " +
                            std::to_string(line_no));
        if (s.runs < 1) throw DataError("ground-truth record with runs < 1");
        for (double y : s.y)
            if (!(y >= 0.0 && y <= 1.0))
                throw DataError("ground-truth probability outside [0,1] at line " +
                                std::to_string(line_no));
        samples.push_back(std::move(s));
    }
    if (spec_hash_out) *spec_hash_out = hash;
    return samples;
}

} // namespace deepsn
