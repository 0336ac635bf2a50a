#include "deepsn/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "deepsn/errors.hpp"
#include "deepsn/rng.hpp"

namespace deepsn {
namespace {

using nlohmann::json;

Matrix normal_matrix(int r, int c, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, stddev);
    Matrix m(r, c);
    for (double& v : m.vec()) v = nd(rng);
    return m;
}

Matrix identity_plus_noise(int d, double stddev, std::mt19937_64& rng) {
    Matrix m = normal_matrix(d, d, stddev, rng);
    for (int i = 0; i < d; ++i) m(i, i) += 1.0;
    return m;
}

// softplus(0.5413...) = 1, so kappa starts at 1 everywhere
constexpr double kKappaRawUnit = 0.54132485461292;

} // namespace

void GnnConfig::validate() const {
    if (layers < 1) throw DataError("layers must be >= 1");
    if (stalk_dim != 1 && stalk_dim != 2) throw DataError("stalk_dim must be 1 or 2");
    if (channels < 1) throw DataError("channels must be >= 1");
    if (hidden < 1) throw DataError("hidden must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("dropout must lie in [0,1)");
    if (!(epsilon > 0.0)) throw DataError("epsilon must be > 0 for block normalization");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
        throw DataError("alpha/beta/gamma must be finite");
}

SheafGnnModel::SheafGnnModel(const Graph& g, GnnConfig cfg) : g_(&g), cfg_(cfg) {
    cfg_.validate();
    if (g.num_vertices() < 1) throw DataError("empty graph");
}

void SheafGnnModel::init_params(ParameterStore& store, std::uint64_t seed) const {
    const int d = cfg_.stalk_dim, f = cfg_.channels, h = cfg_.hidden;
    const int df = d * f, n = g_->num_vertices();
    std::mt19937_64 rng = make_rng(seed, 0x6d6f64);

    auto xavier = [&](int r, int c) {
        return normal_matrix(r, c, std::sqrt(2.0 / (r + c)), rng);
    };

    store.add("enc.w1", xavier(3, h));
    store.add("enc.b1", Matrix(1, h));
    store.add("enc.w2", xavier(h, df));
    store.add("enc.b2", Matrix(1, df));

    store.add("maps.w", normal_matrix(2 * df, d * d, 0.1 / std::sqrt(2.0 * df), rng));
    Matrix map_bias(1, d * d); // identity block: diffusion starts graph-like
    for (int i = 0; i < d; ++i) map_bias(0, i * d + i) = 1.0;
    store.add("maps.b", map_bias);

    store.add("psi.w", normal_matrix(2 * df, 1, 0.1, rng));
    store.add("psi.b", Matrix(1, 1));

    store.add("react.phi1", normal_matrix(n * d, f, 0.1, rng));
    store.add("react.phi2", normal_matrix(n * d, f, 0.1, rng));
    Matrix kraw(n * d, f);
    for (double& v : kraw.vec()) v = kKappaRawUnit;
    store.add("react.kappa1_raw", kraw);
    store.add("react.kappa2_raw", kraw);

    for (int t = 0; t < cfg_.layers; ++t) {
        const std::string prefix = "layer" + std::to_string(t);
        store.add(prefix + ".w1", identity_plus_noise(d, 0.05, rng));
        store.add(prefix + ".w2", identity_plus_noise(f, 0.05, rng));
    }

    store.add("readout.w1", xavier(df, h));
    store.add("readout.b1", Matrix(1, h));
    store.add("readout.w2", xavier(h, 1));
    store.add("readout.b2", Matrix(1, 1));
}

int SheafGnnModel::param_or_const(Tape& t, const ParameterStore& store, const std::string& name,
                                  bool trainable) const {
    return trainable ? t.param(name, store.value(name)) : t.constant(store.value(name));
}

int SheafGnnModel::build_forward(Tape& tape, const ParameterStore& store,
                                 const std::vector<double>& seed_probs, bool trainable,
                                 std::mt19937_64* dropout_rng,
                                 std::vector<int>* layer_trace) const {
    const int n = g_->num_vertices();
    if (static_cast<int>(seed_probs.size()) != n)
        throw DataError("seed probability vector length mismatch");
    Matrix s0(n, 1);
    for (int v = 0; v < n; ++v) {
        if (!(seed_probs[v] >= 0.0 && seed_probs[v] <= 1.0))
            throw DataError("seed probability outside [0,1]");
        s0(v, 0) = seed_probs[v];
    }
    return build_forward_from_node(tape, store, tape.constant(std::move(s0)), trainable,
                                   dropout_rng, layer_trace);
}

int SheafGnnModel::build_forward_from_node(Tape& tape, const ParameterStore& store, int seed_node,
                                           bool trainable, std::mt19937_64* dropout_rng,
                                           std::vector<int>* layer_trace, int* psi_node,
                                           int* embedding_node) const {
    const Graph& g = *g_;
    const int n = g.num_vertices(), m = g.num_edges();
    const int d = cfg_.stalk_dim, f = cfg_.channels, df = d * f;
    if (tape.rows(seed_node) != n || tape.cols(seed_node) != 1)
        throw DataError("seed node must be n x 1");

    auto P = [&](const std::string& name) { return param_or_const(tape, store, name, trainable); };

    auto dropout = [&](int node) {
        if (dropout_rng == nullptr || cfg_.dropout == 0.0) return node;
        std::bernoulli_distribution keep(1.0 - cfg_.dropout);
        Matrix mask(tape.rows(node), tape.cols(node));
        const double kept = 1.0 / (1.0 - cfg_.dropout);
        for (double& v : mask.vec()) v = keep(*dropout_rng) ? kept : 0.0;
        return tape.hadamard(node, tape.constant(std::move(mask)));
    };

    // raw features: [seed prob, degree / max degree, 1]
    Matrix structural(n, 2);
    const double max_deg = std::max(g.max_degree(), 1);
    for (int v = 0; v < n; ++v) {
        structural(v, 0) = g.degree(v) / max_deg;
        structural(v, 1) = 1.0;
    }
    const int raw = tape.hconcat(seed_node, tape.constant(std::move(structural)));

    const int hid = dropout(tape.softplus(tape.affine(raw, P("enc.w1"), P("enc.b1"))));
    const int h = tape.affine(hid, P("enc.w2"), P("enc.b2")); // n x df
    int x = tape.reshape(h, n * d, f);

    // learned sheaf, shared by every layer: restriction maps from endpoint
    // feature pairs, psi symmetrized over endpoint order
    std::vector<int> lo_rows(m), hi_rows(m);
    for (int e = 0; e < m; ++e) {
        lo_rows[e] = g.edge(e).first;
        hi_rows[e] = g.edge(e).second;
    }
    const int h_lo = tape.gather_rows(h, lo_rows);
    const int h_hi = tape.gather_rows(h, hi_rows);
    const int cat_lo = tape.hconcat(h_lo, h_hi); // m x 2df
    const int cat_hi = tape.hconcat(h_hi, h_lo);

    const int maps_w = P("maps.w"), maps_b = P("maps.b");
    const int f_lo = tape.reshape(tape.affine(cat_lo, maps_w, maps_b), m * d, d);
    const int f_hi = tape.reshape(tape.affine(cat_hi, maps_w, maps_b), m * d, d);

    const int psi_w = P("psi.w"), psi_b = P("psi.b");
    const int psi = tape.scale(
        tape.add(tape.logistic(tape.affine(cat_lo, psi_w, psi_b)),
                 tape.logistic(tape.affine(cat_hi, psi_w, psi_b))),
        0.5);
    if (psi_node) *psi_node = psi;

    const int phi1 = P("react.phi1");
    const int phi2 = P("react.phi2");
    const int kappa1 = tape.shift(tape.softplus(P("react.kappa1_raw")), 1e-6);
    const int kappa2 = tape.shift(tape.softplus(P("react.kappa2_raw")), 1e-6);

    const int ro_w1 = P("readout.w1"), ro_b1 = P("readout.b1");
    const int ro_w2 = P("readout.w2"), ro_b2 = P("readout.b2");

    int s_prev = seed_node;
    for (int t = 0; t < cfg_.layers; ++t) {
        const std::string prefix = "layer" + std::to_string(t);
        const int w1 = P(prefix + ".w1");
        const int w2 = P(prefix + ".w2");

        const int mixed = tape.block_left_mul(w1, x);
        const int diffused = tape.matmul(
            tape.sheaf_diffuse(mixed, f_lo, f_hi, psi, &g, d, cfg_.epsilon, true), w2);
        const int a = tape.hadamard(phi1, tape.saturate(x, kappa1));
        const int r = tape.hadamard(
            phi2, tape.saturate(tape.neighbor_signed_sum(x, s_prev, &g, d), kappa2));

        x = tape.add(tape.sub(x, tape.scale(diffused, cfg_.alpha)),
                     tape.add(tape.scale(a, cfg_.beta), tape.scale(r, cfg_.gamma)));

        const int flat = tape.reshape(x, n, df);
        const int ro_hid = dropout(tape.softplus(tape.affine(flat, ro_w1, ro_b1)));
        s_prev = tape.logistic(tape.affine(ro_hid, ro_w2, ro_b2));
        if (layer_trace) layer_trace->push_back(s_prev);
        if (embedding_node && t == cfg_.layers - 1) *embedding_node = flat;
    }
    return s_prev;
}

std::vector<double> SheafGnnModel::edge_coefficients(const ParameterStore& store) const {
    Tape tape;
    int psi = -1;
    Matrix s0(g_->num_vertices(), 1);
    build_forward_from_node(tape, store, tape.constant(std::move(s0)), false, nullptr, nullptr,
                            &psi, nullptr);
    const Matrix& v = tape.value(psi);
    std::vector<double> out(v.rows());
    for (int e = 0; e < v.rows(); ++e) out[e] = v(e, 0);
    return out;
}

Matrix SheafGnnModel::zero_seed_embedding(const ParameterStore& store) const {
    Tape tape;
    int emb = -1;
    Matrix s0(g_->num_vertices(), 1);
    build_forward_from_node(tape, store, tape.constant(std::move(s0)), false, nullptr, nullptr,
                            nullptr, &emb);
    return tape.value(emb);
}

int SheafGnnModel::build_estimation_loss(Tape& tape, int s_hat,
                                         const std::vector<double>& y) const {
    const int n = g_->num_vertices();
    if (static_cast<int>(y.size()) != n || tape.rows(s_hat) != n || tape.cols(s_hat) != 1)
        throw DataError("estimation loss length mismatch");
    Matrix ym(n, 1);
    for (int v = 0; v < n; ++v) ym(v, 0) = y[v];
    return tape.sum_sq(tape.sub(s_hat, tape.constant(std::move(ym))));
}

std::vector<double> SheafGnnModel::predict(const ParameterStore& store,
                                           const std::vector<double>& seed_probs) const {
    Tape tape;
    const int out = build_forward(tape, store, seed_probs, false, nullptr);
    const Matrix& v = tape.value(out);
    std::vector<double> result(v.rows());
    for (int i = 0; i < v.rows(); ++i) result[i] = v(i, 0);
    return result;
}

void save_checkpoint(const std::string& path, const GnnConfig& cfg, const ParameterStore& store) {
    json doc;
    doc["format_version"] = 1;
    doc["config"] = {{"layers", cfg.layers},   {"stalk_dim", cfg.stalk_dim},
                     {"channels", cfg.channels}, {"hidden", cfg.hidden},
                     {"dropout", cfg.dropout}, {"alpha", cfg.alpha},
                     {"beta", cfg.beta},       {"gamma", cfg.gamma},
                     {"epsilon", cfg.epsilon}};
    json params = json::object();
    for (const std::string& name : store.names()) {
        const Matrix& m = store.value(name);
        params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.vec()}};
    }
    doc["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << doc.dump() << "\n";
    if (!out) throw DataError("write failed: " + path);
}

GnnConfig load_checkpoint(const std::string& path, ParameterStore& store_out) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("bad checkpoint " + path + ": " + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1)
            throw DataError("unsupported checkpoint format version in " + path);
        const json& c = doc.at("config");
        GnnConfig cfg;
        cfg.layers = c.at("layers").get<int>();
        cfg.stalk_dim = c.at("stalk_dim").get<int>();
        cfg.channels = c.at("channels").get<int>();
        cfg.hidden = c.at("hidden").get<int>();
        cfg.dropout = c.at("dropout").get<double>();
        cfg.alpha = c.at("alpha").get<double>();
        cfg.beta = c.at("beta").get<double>();
        cfg.gamma = c.at("gamma").get<double>();
        cfg.epsilon = c.at("epsilon").get<double>();
        cfg.validate();
        for (const auto& [name, entry] : doc.at("params").items()) {
            const int rows = entry.at("rows").get<int>();
            const int cols = entry.at("cols").get<int>();
            const auto data = entry.at("data").get<std::vector<double>>();
            if (rows < 1 || cols < 1 || data.size() != static_cast<std::size_t>(rows) * cols)
                throw DataError("checkpoint array shape mismatch for " + name);
            Matrix m(rows, cols);
            m.vec() = data;
            store_out.add(name, std::move(m));
        }
        return cfg;
    } catch (const json::exception& e) {
        throw DataError("bad checkpoint " + path + ": " + e.what());
    }
}

} // namespace deepsn
