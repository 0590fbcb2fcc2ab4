#pragma once

// Greedy per-GEMM configuration choice: evaluate every (shape, dataflow) pair
// under the analytical model and keep the fastest. Ties go to the earlier
// shape in enumeration order, then WS < OS < IS.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "redas/costmodel.hpp"
#include "redas/error.hpp"
#include "redas/geometry.hpp"
#include "redas/workload.hpp"

namespace redas {

struct Choice {
    Config config;
    CostEstimate cost;
};

inline Choice choose(const GemmOp& gemm, const PhysicalArray& array, const std::vector<LogicalShape>& shapes) {
    if (gemm.m < 1 || gemm.k < 1 || gemm.n < 1) throw ValidationError("GEMM dimensions must be positive");
    std::optional<Choice> best;
    for (const auto& shape : shapes) {
        for (Dataflow df : kDataflows) {
            auto cost = estimate(Config{shape, df}, gemm, array);
            if (!best || cost.t_total < best->cost.t_total) best = Choice{Config{shape, df}, cost};
        }
    }
    if (!best) throw DomainError("no shapes to choose from");
    return *best;
}

inline Choice choose(const GemmOp& gemm, const PhysicalArray& array) {
    return choose(gemm, array, enumerate_shapes(array));
}

struct ScheduleEntry {
    GemmOp gemm;
    Config chosen;
    CostEstimate cost;
    std::vector<std::pair<BaselineKind, CostEstimate>> baseline_costs;

    const CostEstimate* baseline(const BaselineKind& kind) const {
        for (const auto& [k, c] : baseline_costs) {
            if (k == kind) return &c;
        }
        return nullptr;
    }
};

struct ScheduleResult {
    std::vector<ScheduleEntry> entries;
    std::int64_t total_cycles = 0;
    std::int64_t reconfig_cycles = 0;  // switch penalties, zero by default
    double mean_utilization = 0.0;     // MAC-weighted

    std::int64_t baseline_total(const BaselineKind& kind) const {
        std::int64_t total = 0;
        for (const auto& e : entries) {
            if (const auto* c = e.baseline(kind)) total += c->t_total;
        }
        return total;
    }
};

struct ScheduleOptions {
    // Cycles charged whenever consecutive GEMMs run on different configs.
    std::int64_t switch_penalty = 0;
};

inline ScheduleResult schedule_model(const std::vector<GemmOp>& gemms, const PhysicalArray& array,
                                     const std::vector<BaselineKind>& baselines, const ScheduleOptions& options = {}) {
    if (gemms.empty()) throw DomainError("cannot schedule an empty model");
    const auto shapes = enumerate_shapes(array);

    ScheduleResult result;
    result.entries.reserve(gemms.size());
    double weighted = 0.0;
    double macs = 0.0;
    for (const auto& gemm : gemms) {
        auto [config, cost] = choose(gemm, array, shapes);
        ScheduleEntry entry{gemm, config, cost, {}};
        for (const auto& kind : baselines) entry.baseline_costs.emplace_back(kind, estimate_baseline(kind, gemm, array));

        if (!result.entries.empty() && result.entries.back().chosen != config) {
            result.reconfig_cycles += options.switch_penalty;
        }
        result.total_cycles += cost.t_total;
        weighted += cost.utilization * static_cast<double>(cost.mac_count);
        macs += static_cast<double>(cost.mac_count);
        result.entries.push_back(std::move(entry));
    }
    result.total_cycles += result.reconfig_cycles;
    result.mean_utilization = weighted / macs;
    return result;
}

}  // namespace redas
