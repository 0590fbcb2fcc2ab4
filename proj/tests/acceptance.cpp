// Acceptance checks; prints one PASS/FAIL line per criterion and exits non-zero
// if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "redas/redas.hpp"

using namespace redas;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Hand-written cycle formula, kept separate from the library's evaluate().
std::int64_t eq_cycles(Dataflow df, std::int64_t rl, std::int64_t cl, std::int64_t m, std::int64_t k, std::int64_t n,
                       std::int64_t rp, bool chained) {
    const std::int64_t extra = chained ? 4 * std::min(rl, cl) : 0;
    auto up = [](std::int64_t a, std::int64_t b) { return (a + b - 1) / b; };
    switch (df) {
        case Dataflow::WS: return (rp + rl + cl + m - 2 + extra) * up(k, rl) * up(n, cl);
        case Dataflow::OS: return (rl + cl + k - 2 + extra + rp) * up(m, rl) * up(n, cl);
        case Dataflow::IS: return (rp + rl + cl + n - 2 + extra) * up(k, rl) * up(m, cl);
    }
    return -1;
}

Outcome shapes_rule() {
    Outcome o;
    const auto big = enumerate_shapes(PhysicalArray(128)).size();
    std::set<std::pair<int, int>> got;
    for (const auto& s : enumerate_shapes(PhysicalArray(6))) got.insert({s.rows, s.cols});
    const std::set<std::pair<int, int>> want = {{1, 20}, {20, 1}, {2, 16}, {16, 2}, {3, 12}, {12, 3}, {6, 6}};
    o.pass = big == 129 && got == want && enumerate_shapes(PhysicalArray(6)).size() == 7;
    o.detail = "R=128 -> " + std::to_string(big) + " shapes; R=6 set " + (got == want ? "matches" : "differs");
    return o;
}

Outcome cost_formula() {
    Outcome o;
    const PhysicalArray six(6);
    const auto anchor = estimate_ws(make_gemm(10, 6, 24), six, LogicalShape::chain(six, 3, false)).t_total;
    int mismatches = 0;
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 20; ++i) {
        const int r = 2 * std::uniform_int_distribution<int>(1, 64)(rng);
        const PhysicalArray array(r);
        const auto shapes = enumerate_shapes(array);
        const auto shape = shapes[std::uniform_int_distribution<std::size_t>(0, shapes.size() - 1)(rng)];
        std::uniform_int_distribution<std::int64_t> dim(1, 2048);
        const auto g = make_gemm(dim(rng), dim(rng), dim(rng));
        mismatches += estimate_ws(g, array, shape).t_total != eq_cycles(Dataflow::WS, shape.rows, shape.cols, g.m, g.k, g.n, r, shape.chained);
    }
    o.pass = anchor == 164 && mismatches == 0;
    o.detail = "anchor " + std::to_string(anchor) + " (want 164); " + std::to_string(mismatches) + "/20 random mismatches";
    return o;
}

Outcome functional() {
    Outcome o;
    int runs = 0;
    int failures = 0;
    std::mt19937_64 rng(7);
    for (int r : {4, 6, 8}) {
        const PhysicalArray array(r);
        std::uniform_int_distribution<std::int64_t> dim(1, 3 * r);
        for (const auto& shape : enumerate_shapes(array)) {
            for (Dataflow df : kDataflows) {
                for (int t = 0; t < 10; ++t) {
                    const auto g = make_gemm(dim(rng), dim(rng), dim(rng));
                    const auto a = random_matrix(g.m, g.k, -32768, 32767, rng);
                    const auto b = random_matrix(g.k, g.n, -32768, 32767, rng);
                    ++runs;
                    try {
                        failures += !verify(simulate(Config{shape, df}, g, a, b, SimOptions{false}), a, b);
                    } catch (const Error&) {
                        ++failures;
                    }
                }
            }
        }
    }
    o.pass = failures == 0 && runs >= 630;
    o.detail = std::to_string(failures) + " failures over " + std::to_string(runs) + " runs";
    return o;
}

Outcome anchor() {
    Outcome o;
    int native_bad = 0;
    int chained_bad = 0;
    int chained_runs = 0;
    std::mt19937_64 rng(11);
    for (int r : {4, 6, 8}) {
        const PhysicalArray array(r);
        std::uniform_int_distribution<std::int64_t> small(1, r);
        std::uniform_int_distribution<std::int64_t> any(1, 3 * r);
        for (int t = 0; t < 20; ++t) {
            const auto g = make_gemm(any(rng), small(rng), small(rng));
            const auto a = random_matrix(g.m, g.k, -9, 9, rng);
            const auto b = random_matrix(g.k, g.n, -9, 9, rng);
            const auto res = simulate(Config{LogicalShape::native(array), Dataflow::WS}, g, a, b, SimOptions{false});
            native_bad += res.cycles != r + (r + r + g.m - 2);
        }
        for (const auto& shape : enumerate_shapes(array)) {
            if (!shape.chained) continue;
            for (Dataflow df : kDataflows) {
                const auto g = make_gemm(any(rng), any(rng), any(rng));
                const auto a = random_matrix(g.m, g.k, -9, 9, rng);
                const auto b = random_matrix(g.k, g.n, -9, 9, rng);
                const Config cfg{shape, df};
                const auto res = simulate(cfg, g, a, b, SimOptions{false});
                const auto est = estimate(cfg, g, array);
                const auto tiles = est.tiles_a * est.tiles_b;
                ++chained_runs;
                chained_bad += std::abs(res.cycles - est.t_total) > (4 * shape.short_side() + r) * tiles;
            }
        }
    }
    o.pass = native_bad == 0 && chained_bad == 0;
    o.detail = "native WS " + std::to_string(native_bad) + "/60 off; chained " + std::to_string(chained_bad) + "/" +
               std::to_string(chained_runs) + " outside bound";
    return o;
}

Outcome op62() {
    Outcome o;
    const PhysicalArray array(128);
    const auto g = make_gemm(49, 28800, 1152);
    const auto c = choose(g, array);
    const auto gem = estimate_baseline(BaselineKind::gemmini(), g, array);
    const double gain = c.cost.utilization / gem.utilization;
    o.pass = c.config.shape.label() == "49x316" && c.config.dataflow == Dataflow::OS && gain >= 1.9 && gain <= 2.5;
    char buf[160];
    std::snprintf(buf, sizeof buf, "chose %s/%s, utilization %.4f vs %.4f, gain %.3f", c.config.shape.label().c_str(),
                  to_string(c.config.dataflow), c.cost.utilization, gem.utilization, gain);
    o.detail = buf;
    return o;
}

Outcome dominance() {
    Outcome o;
    const PhysicalArray array(128);
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<double> logdim(0.0, std::log(4096.0));
    auto draw = [&] { return std::min<std::int64_t>(4096, static_cast<std::int64_t>(std::floor(std::exp(logdim(rng))))); };
    int over_gemmini = 0;
    int over_planaria = 0;
    int under_ideal = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto g = make_gemm(draw(), draw(), draw());
        const auto t = choose(g, array).cost.t_total;
        over_gemmini += t > estimate_baseline(BaselineKind::gemmini(), g, array).t_total;
        over_planaria += t > estimate_baseline(BaselineKind::planaria(), g, array).t_total;
        under_ideal += t < estimate_baseline(BaselineKind::ideal(1 << 14), g, array).t_total;
    }
    o.pass = over_gemmini == 0 && over_planaria == 0 && under_ideal == 0;
    o.detail = "ops slower than gemmini: " + std::to_string(over_gemmini) + ", slower than planaria: " +
               std::to_string(over_planaria) + ", faster than ideal: " + std::to_string(under_ideal) + " (of 1000)";
    return o;
}

Outcome peak_gain() {
    Outcome o;
    const PhysicalArray array(6);
    const auto g = make_gemm(1, 1, 20);
    std::mt19937_64 rng(5);
    const auto a = random_matrix(1, 1, -9, 9, rng);
    const auto b = random_matrix(1, 20, -9, 9, rng);
    const auto chained = simulate(Config{LogicalShape::chain(array, 1, false), Dataflow::OS}, g, a, b);
    const auto native = simulate(Config{LogicalShape::native(array), Dataflow::OS}, g, a, b);
    const double ratio = static_cast<double>(chained.peak_busy()) / native.peak_busy();
    o.pass = ratio >= 3.0 && verify(chained, a, b) && verify(native, a, b);
    char buf[120];
    std::snprintf(buf, sizeof buf, "peak busy 1x20 %d vs 6x6 %d, ratio %.2f", chained.peak_busy(), native.peak_busy(), ratio);
    o.detail = buf;
    return o;
}

Outcome gemv_trend() {
    Outcome o;
    std::ifstream in(std::string(REDAS_SAMPLES_DIR) + "/gemv_heavy.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    SweepSpec spec;
    spec.topology_text = ss.str();
    spec.array_sizes = {128};
    spec.modes = {Mode::ReDas, Mode::GemminiFixed};
    const auto rep = run_sweep(spec);
    bool all_gemv = !rep.layers.empty();
    for (const auto& row : rep.layers) all_gemv = all_gemv && row.m == 1;
    const double speedup = rep.aggregates.at(1).speedup;
    o.pass = all_gemv && speedup >= 1.5;
    char buf[120];
    std::snprintf(buf, sizeof buf, "speedup over gemmini %.3f on %zu M=1 ops", speedup, rep.layers.size());
    o.detail = buf;
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"1 shape enumeration", shapes_rule},     {"2 cost formula", cost_formula},
        {"3 functional correctness", functional}, {"4 sim-vs-model anchor", anchor},
        {"5 op62 case study", op62},              {"6 scheduler dominance", dominance},
        {"7 peak utilization gain", peak_gain},   {"8 GEMV-heavy trend", gemv_trend},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %-26s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        failed += !o.pass;
    }
    std::printf("%d/8 criteria passed\n", 8 - failed);
    return failed == 0 ? 0 : 1;
}
