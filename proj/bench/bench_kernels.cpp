// Serial vs OpenMP kernel comparison plus a layer-forward scaling probe.
// Prints one line per case: size, serial ms, parallel ms, speedup, and
// whether the two outputs agree bitwise (they must: identical row order).
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "deepsn/gen.hpp"
#include "deepsn/kernels.hpp"
#include "deepsn/model.hpp"
#include "deepsn/rng.hpp"
#include "deepsn/sheaf.hpp"
#include "deepsn/tape.hpp"

using namespace deepsn;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

void bench_block_csr(int n, int m, int d, int f, int reps) {
    const Graph g = synthetic_benchmark_graph(n, m, 0xbe);
    const Sheaf sh = random_sheaf(g, d, 0xef);
    SheafOperator op = assemble_laplacian(sh);
    shift(op, 0.5);

    std::mt19937_64 rng = make_rng(0xca, 0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(n) * d * f);
    for (double& v : x) v = u(rng);
    std::vector<double> y_serial(x.size()), y_parallel(x.size());

    auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r)
        kernels::block_csr_apply_serial(n, d, f, op.offsets.data(), op.cols.data(),
                                        op.blocks.data(), op.diag.data(), x.data(),
                                        y_serial.data());
    const double serial_ms = ms_since(t0) / reps;

    t0 = clock_type::now();
    for (int r = 0; r < reps; ++r)
        kernels::block_csr_apply_parallel(n, d, f, op.offsets.data(), op.cols.data(),
                                          op.blocks.data(), op.diag.data(), x.data(),
                                          y_parallel.data());
    const double parallel_ms = ms_since(t0) / reps;

    const bool bitwise =
        std::memcmp(y_serial.data(), y_parallel.data(), x.size() * sizeof(double)) == 0;
    std::printf("block_csr_apply  n=%-6d m=%-7d d=%d f=%-2d  serial %8.3f ms  parallel %8.3f ms"
                "  speedup %5.2fx  bitwise %s\n",
                n, m, d, f, serial_ms, parallel_ms, serial_ms / parallel_ms,
                bitwise ? "yes" : "NO");
}

double layer_forward_ms(int n, int m, int reps) {
    const Graph g = synthetic_benchmark_graph(n, m, 0x1a);
    GnnConfig cfg;
    cfg.layers = 1;
    cfg.stalk_dim = 2;
    cfg.channels = 4;
    cfg.hidden = 32;
    cfg.dropout = 0.0;
    const SheafGnnModel model(g, cfg);
    ParameterStore store;
    model.init_params(store, 0x1b);
    std::vector<double> probs(n, 0.0);
    for (int v = 0; v < n; v += 10) probs[v] = 1.0;

    // one warm pass, then timed passes
    { Tape t; model.build_forward(t, store, probs, false, nullptr); }
    const auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) {
        Tape t;
        model.build_forward(t, store, probs, false, nullptr);
    }
    return ms_since(t0) / reps;
}

} // namespace

int main() {
    std::printf("threads: %d\n", kernels::thread_count());

    bench_block_csr(2000, 8000, 1, 4, 50);
    bench_block_csr(2000, 8000, 2, 4, 50);
    bench_block_csr(20000, 80000, 2, 4, 10);
    bench_block_csr(100000, 400000, 2, 4, 5);

    // layer cost should grow roughly linearly in m (sparse path)
    const double t1 = layer_forward_ms(4941, 6594, 5);
    const double t2 = layer_forward_ms(4941, 13188, 5);
    const double t4 = layer_forward_ms(4941, 26376, 5);
    std::printf("layer forward   m=6594 %8.2f ms | m=13188 %8.2f ms (%.2fx) | m=26376 %8.2f ms"
                " (%.2fx)\n",
                t1, t2, t2 / t1, t4, t4 / t2);
    return 0;
}
