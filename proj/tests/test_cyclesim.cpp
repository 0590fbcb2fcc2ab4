#include <gtest/gtest.h>

#include <random>

#include "redas/costmodel.hpp"
#include "redas/cyclesim.hpp"

using namespace redas;

namespace {

// Reference product computed independently of naive_multiply.
Matrix reference(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::int64_t k = 0; k < a.cols(); ++k)
        for (std::int64_t i = 0; i < a.rows(); ++i)
            for (std::int64_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    return c;
}

struct Run {
    Matrix a, b;
    SimResult result;
};

Run run(const Config& cfg, std::int64_t m, std::int64_t k, std::int64_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Run r{random_matrix(m, k, -100, 100, rng), random_matrix(k, n, -100, 100, rng), {}};
    r.result = simulate(cfg, make_gemm(m, k, n), r.a, r.b);
    return r;
}

}  // namespace

TEST(Simulate, ExactOnAllConfigs) {
    std::mt19937_64 rng(42);
    for (int size : {4, 6, 8}) {
        const PhysicalArray array(size);
        std::uniform_int_distribution<std::int64_t> dim(1, 3 * size);
        for (const auto& shape : enumerate_shapes(array)) {
            for (Dataflow df : kDataflows) {
                for (int t = 0; t < 4; ++t) {
                    const Config cfg{shape, df};
                    const auto r = run(cfg, dim(rng), dim(rng), dim(rng), rng());
                    EXPECT_EQ(r.result.output, reference(r.a, r.b)) << size << " " << shape.label() << " " << to_string(df);
                    EXPECT_TRUE(verify(r.result, r.a, r.b));
                }
            }
        }
    }
}

TEST(Simulate, NativeWsSingleTileAnchor) {
    std::mt19937_64 rng(1);
    for (int size : {4, 6, 8}) {
        const PhysicalArray array(size);
        const Config cfg{LogicalShape::native(array), Dataflow::WS};
        std::uniform_int_distribution<std::int64_t> small(1, size);
        std::uniform_int_distribution<std::int64_t> any(1, 40);
        for (int t = 0; t < 10; ++t) {
            const auto m = any(rng);
            const auto r = run(cfg, m, small(rng), small(rng), rng());
            EXPECT_EQ(r.result.cycles, size + (size + size + m - 2));
            EXPECT_EQ(r.result.tiles, 1);
        }
    }
}

TEST(Simulate, CyclesWithinModelBound) {
    std::mt19937_64 rng(9);
    for (int size : {4, 6}) {
        const PhysicalArray array(size);
        std::uniform_int_distribution<std::int64_t> dim(1, 3 * size);
        for (const auto& shape : enumerate_shapes(array)) {
            for (Dataflow df : kDataflows) {
                const Config cfg{shape, df};
                const auto g = make_gemm(dim(rng), dim(rng), dim(rng));
                const auto r = run(cfg, g.m, g.k, g.n, rng());
                const auto e = estimate(cfg, g, array);
                const std::int64_t slack = shape.chained ? (4 * shape.short_side() + size) * e.tiles_a * e.tiles_b : 0;
                EXPECT_LE(std::abs(r.result.cycles - e.t_total), slack);
                EXPECT_EQ(r.result.tiles, e.tiles_a * e.tiles_b);
            }
        }
    }
}

TEST(Simulate, BusyNeverExceedsShape) {
    const PhysicalArray array(6);
    for (const auto& shape : enumerate_shapes(array)) {
        for (Dataflow df : kDataflows) {
            const auto r = run(Config{shape, df}, 7, 9, 11, 5);
            ASSERT_EQ(r.result.busy_trace.size(), static_cast<std::size_t>(r.result.cycles));
            for (int busy : r.result.busy_trace) EXPECT_LE(busy, shape.pe_used());
            EXPECT_LE(r.result.measured_utilization, 1.0);
            EXPECT_EQ(r.result.mac_total, 7 * 9 * 11);
        }
    }
}

TEST(Simulate, ChainedPeakBeatsNative) {
    const PhysicalArray array(6);
    const auto chained = run(Config{LogicalShape::chain(array, 1, false), Dataflow::OS}, 1, 1, 20, 3);
    const auto native = run(Config{LogicalShape::native(array), Dataflow::OS}, 1, 1, 20, 3);
    EXPECT_EQ(chained.result.peak_busy(), 20);
    EXPECT_GE(chained.result.peak_busy(), 3 * native.result.peak_busy());
}

TEST(Simulate, Deterministic) {
    const PhysicalArray array(6);
    const Config cfg{LogicalShape::chain(array, 2, true), Dataflow::IS};
    const auto a = run(cfg, 9, 5, 13, 77);
    const auto b = run(cfg, 9, 5, 13, 77);
    EXPECT_EQ(a.result.cycles, b.result.cycles);
    EXPECT_EQ(a.result.output, b.result.output);
    EXPECT_EQ(a.result.busy_trace, b.result.busy_trace);
}

TEST(Simulate, DimensionMismatch) {
    const PhysicalArray array(4);
    EXPECT_THROW(simulate(Config{LogicalShape::native(array), Dataflow::OS}, make_gemm(2, 3, 4), Matrix(2, 2), Matrix(3, 4)),
                 DomainError);
}

TEST(Verify, DetectsCorruption) {
    const PhysicalArray array(4);
    auto r = run(Config{LogicalShape::native(array), Dataflow::WS}, 3, 3, 3, 1);
    ASSERT_TRUE(verify(r.result, r.a, r.b));
    r.result.output(1, 2) += 1;
    EXPECT_FALSE(verify(r.result, r.a, r.b));
}

TEST(Faults, PassRegisterOnPlainPe) {
    const PhysicalArray array(6);
    const auto shape = LogicalShape::chain(array, 2, false);
    auto plan = route(array, shape);
    const auto cell = plan.junctions[0].lanes[0][0].cell;
    plan.roles[static_cast<std::size_t>(cell.row * 6 + cell.col)] = PeRole::Compute;
    Matrix a(2, 3, 1), b(3, 4, 1);
    EXPECT_THROW(simulate(Config{shape, Dataflow::OS}, plan, make_gemm(2, 3, 4), a, b), SimulationFault);
}

TEST(Faults, MissingJunction) {
    const PhysicalArray array(6);
    const auto shape = LogicalShape::chain(array, 1, false);
    auto plan = route(array, shape);
    plan.junctions.pop_back();
    Matrix a(1, 2, 1), b(2, 3, 1);
    EXPECT_THROW(simulate(Config{shape, Dataflow::WS}, plan, make_gemm(1, 2, 3), a, b), ConfigurationError);
}

TEST(Faults, ComputeOnIdleCell) {
    const PhysicalArray array(6);
    const auto shape = LogicalShape::chain(array, 3, true);
    auto plan = route(array, shape);
    plan.roles[0] = PeRole::Idle;
    Matrix a(1, 2, 1), b(2, 3, 1);
    EXPECT_THROW(simulate(Config{shape, Dataflow::OS}, plan, make_gemm(1, 2, 3), a, b), ConfigurationError);
}

TEST(Faults, PlanForOtherShape) {
    const PhysicalArray array(6);
    const auto plan = route(array, LogicalShape::chain(array, 1, false));
    Matrix a(1, 2, 1), b(2, 3, 1);
    EXPECT_THROW(simulate(Config{LogicalShape::chain(array, 2, false), Dataflow::OS}, plan, make_gemm(1, 2, 3), a, b),
                 ConfigurationError);
}

TEST(Banks, NativeOs) {
    const PhysicalArray array(6);
    const auto shape = LogicalShape::native(array);
    const auto banks = assign_bank_roles(Config{shape, Dataflow::OS}, route(array, shape));
    EXPECT_EQ(banks.count(Side::West, BankRole::InputIssuer), 6);
    EXPECT_EQ(banks.count(Side::North, BankRole::WeightIssuer), 6);
    EXPECT_EQ(banks.count(BankRole::OutputReceiver), 0);
}

TEST(Banks, NativeWs) {
    const PhysicalArray array(6);
    const auto shape = LogicalShape::native(array);
    const auto banks = assign_bank_roles(Config{shape, Dataflow::WS}, route(array, shape));
    EXPECT_EQ(banks.count(Side::West, BankRole::InputIssuer), 6);
    EXPECT_EQ(banks.count(Side::South, BankRole::OutputReceiver), 6);
}

TEST(Banks, ChainedOsUsesAllSides) {
    const PhysicalArray array(6);
    const auto shape = LogicalShape::chain(array, 2, false);
    const auto banks = assign_bank_roles(Config{shape, Dataflow::OS}, route(array, shape));
    for (Side side : {Side::North, Side::East, Side::South, Side::West}) {
        EXPECT_GT(banks.count(side, BankRole::WeightIssuer) + banks.count(side, BankRole::InputIssuer), 0) << to_string(side);
    }
    EXPECT_EQ(banks.count(BankRole::InputIssuer), 2);
    EXPECT_EQ(banks.count(BankRole::WeightIssuer), 16);
}

TEST(Banks, ChainedWsReceiversOnOuterEdges) {
    const PhysicalArray array(8);
    const auto shape = LogicalShape::chain(array, 3, false);
    const auto banks = assign_bank_roles(Config{shape, Dataflow::WS}, route(array, shape));
    EXPECT_EQ(banks.count(BankRole::OutputReceiver), shape.cols);
    for (Side side : {Side::North, Side::East, Side::South, Side::West}) {
        EXPECT_EQ(banks.count(side, BankRole::OutputReceiver), 5);
    }
}

TEST(Trace, PhasesInOrderPerTile) {
    const PhysicalArray array(4);
    const auto r = run(Config{LogicalShape::native(array), Dataflow::WS}, 3, 2, 2, 1);
    ASSERT_EQ(r.result.phase_trace.size(), static_cast<std::size_t>(r.result.cycles));
    for (int c = 0; c < 4; ++c) EXPECT_EQ(r.result.phase_trace[static_cast<std::size_t>(c)], Phase::Preload);
    EXPECT_EQ(r.result.phase_trace.back(), Phase::Process);
    EXPECT_EQ(r.result.peak_busy(), 4);
}
