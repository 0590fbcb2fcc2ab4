#pragma once

// Analytical runtime model.
//
// Weight stationary, per tile of ceil(K/R_l) x ceil(N/C_l):
//   preload  = R_p
//   process  = (R_l + C_l + M - 2) + roundabout
//   total    = (preload + process) * tiles
// where roundabout = 4 min(R_l, C_l) on chained shapes and 0 on the native
// shape. Output stationary streams K instead of M, tiles M x N and drains
// R_p cycles per tile; input stationary is weight stationary with M and N
// exchanged.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "redas/error.hpp"
#include "redas/geometry.hpp"
#include "redas/workload.hpp"

namespace redas {

enum class Dataflow { WS, OS, IS };

inline constexpr std::array<Dataflow, 3> kDataflows = {Dataflow::WS, Dataflow::OS, Dataflow::IS};

inline const char* to_string(Dataflow df) {
    switch (df) {
        case Dataflow::OS: return "os";
        case Dataflow::WS: return "ws";
        case Dataflow::IS: return "is";
    }
    return "?";
}

inline Dataflow parse_dataflow(std::string text) {
    text = detail::lower_ascii(text);
    if (text == "os") return Dataflow::OS;
    if (text == "ws") return Dataflow::WS;
    if (text == "is") return Dataflow::IS;
    throw DomainError("unknown dataflow '" + text + "' (expected os, ws or is)");
}

struct Config {
    LogicalShape shape;
    Dataflow dataflow = Dataflow::WS;
    bool operator==(const Config&) const = default;
};

struct CostEstimate {
    std::int64_t t_preload = 0;
    std::int64_t t_process = 0;
    std::int64_t t_offload = 0;
    std::int64_t tiles_a = 1;
    std::int64_t tiles_b = 1;
    std::int64_t t_total = 0;
    std::int64_t mac_count = 0;
    double utilization = 0.0;
    // Configuration the estimate was evaluated on.
    int rows = 0;
    int cols = 0;
    Dataflow dataflow = Dataflow::WS;
    std::int64_t pe_count = 0;  // utilization denominator per cycle

    bool operator==(const CostEstimate&) const = default;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

namespace detail {

struct TileTiming {
    std::int64_t preload = 0;
    std::int64_t offload = 0;
    std::int64_t roundabout = 0;
};

inline CostEstimate evaluate(Dataflow df, std::int64_t rows, std::int64_t cols, const GemmOp& g,
                             const TileTiming& timing, std::int64_t pe_count) {
    CostEstimate e;
    e.rows = static_cast<int>(rows);
    e.cols = static_cast<int>(cols);
    e.dataflow = df;
    e.pe_count = pe_count;
    e.mac_count = g.m * g.k * g.n;
    switch (df) {
        case Dataflow::WS:
            e.t_preload = timing.preload;
            e.t_process = rows + cols + g.m - 2 + timing.roundabout;
            e.tiles_a = ceil_div(g.k, rows);
            e.tiles_b = ceil_div(g.n, cols);
            break;
        case Dataflow::IS:
            e.t_preload = timing.preload;
            e.t_process = rows + cols + g.n - 2 + timing.roundabout;
            e.tiles_a = ceil_div(g.k, rows);
            e.tiles_b = ceil_div(g.m, cols);
            break;
        case Dataflow::OS:
            e.t_process = rows + cols + g.k - 2 + timing.roundabout;
            e.t_offload = timing.offload;
            e.tiles_a = ceil_div(g.m, rows);
            e.tiles_b = ceil_div(g.n, cols);
            break;
    }
    e.t_total = (e.t_preload + e.t_process + e.t_offload) * e.tiles_a * e.tiles_b;
    e.utilization = static_cast<double>(e.mac_count) / (static_cast<double>(pe_count) * static_cast<double>(e.t_total));
    return e;
}

inline std::int64_t roundabout_term(const LogicalShape& shape) { return shape.chained ? 4 * shape.short_side() : 0; }

inline void require_shape(const PhysicalArray& array, const LogicalShape& shape) {
    if (shape.chained ? LogicalShape::chain(array, shape.sub_rows, shape.transposed) != shape
                      : LogicalShape::native(array) != shape) {
        throw DomainError("shape " + shape.label() + " is not available on a " + std::to_string(array.size()) +
                          "-wide array");
    }
}

inline CostEstimate estimate_on(Dataflow df, const GemmOp& g, const PhysicalArray& array, const LogicalShape& shape) {
    require_shape(array, shape);
    const TileTiming timing{array.size(), array.size(), roundabout_term(shape)};
    return evaluate(df, shape.rows, shape.cols, g, timing, array.pe_count());
}

}  // namespace detail

inline CostEstimate estimate_ws(const GemmOp& g, const PhysicalArray& array, const LogicalShape& shape) {
    return detail::estimate_on(Dataflow::WS, g, array, shape);
}

inline CostEstimate estimate_os(const GemmOp& g, const PhysicalArray& array, const LogicalShape& shape) {
    return detail::estimate_on(Dataflow::OS, g, array, shape);
}

inline CostEstimate estimate_is(const GemmOp& g, const PhysicalArray& array, const LogicalShape& shape) {
    return detail::estimate_on(Dataflow::IS, g, array, shape);
}

inline CostEstimate estimate(const Config& config, const GemmOp& g, const PhysicalArray& array) {
    return detail::estimate_on(config.dataflow, g, array, config.shape);
}

struct BaselineKind {
    enum class Kind { GemminiFixed, PlanariaCoarse, IdealBudget };
    Kind kind = Kind::GemminiFixed;
    std::int64_t pe_budget = 0;  // IdealBudget only

    static BaselineKind gemmini() { return {Kind::GemminiFixed, 0}; }
    static BaselineKind planaria() { return {Kind::PlanariaCoarse, 0}; }
    static BaselineKind ideal(std::int64_t budget) {
        if (budget < 1) throw DomainError("ideal PE budget must be >= 1");
        return {Kind::IdealBudget, budget};
    }

    std::string name() const {
        switch (kind) {
            case Kind::GemminiFixed: return "gemmini";
            case Kind::PlanariaCoarse: return "planaria";
            case Kind::IdealBudget: return "ideal:" + std::to_string(pe_budget);
        }
        return "?";
    }

    bool operator==(const BaselineKind&) const = default;
};

// Accepts "gemmini", "planaria" and "ideal:B".
inline BaselineKind parse_baseline(const std::string& text) {
    const auto key = detail::lower_ascii(text);
    if (key == "gemmini") return BaselineKind::gemmini();
    if (key == "planaria") return BaselineKind::planaria();
    if (key.rfind("ideal:", 0) == 0) {
        try {
            std::size_t used = 0;
            const auto budget = std::stoll(key.substr(6), &used);
            if (used == key.size() - 6) return BaselineKind::ideal(budget);
        } catch (const std::logic_error&) {
        }
    }
    throw DomainError("unknown baseline '" + text + "' (expected gemmini, planaria or ideal:B)");
}

namespace detail {

// Ascending sizes that are the smallest achieving each tile count
// ceil(extent / size); any other size is no better under the model.
inline std::vector<std::int64_t> tile_sizes(std::int64_t extent, std::int64_t cap) {
    std::vector<std::int64_t> sizes;
    for (std::int64_t tiles = 1;;) {
        const std::int64_t size = ceil_div(extent, tiles);
        if (size <= cap) sizes.push_back(size);
        if (size == 1) break;
        tiles = ceil_div(extent, size - 1);
    }
    std::reverse(sizes.begin(), sizes.end());
    return sizes;
}

inline bool better(const CostEstimate& a, const std::optional<CostEstimate>& best) {
    return !best || a.t_total < best->t_total;
}

// Best r x c rectangle with r * c <= budget over all three dataflows. Stationary
// data enters along the shorter edge, so preload/offload cost min(r, c).
inline CostEstimate ideal_search(const GemmOp& g, std::int64_t budget) {
    std::optional<CostEstimate> best;
    for (Dataflow df : kDataflows) {
        const std::int64_t row_extent = df == Dataflow::OS ? g.m : g.k;
        const std::int64_t col_extent = df == Dataflow::IS ? g.m : g.n;
        for (std::int64_t r : tile_sizes(row_extent, budget)) {
            for (std::int64_t c : tile_sizes(col_extent, budget / r)) {
                const std::int64_t edge = std::min(r, c);
                auto e = evaluate(df, r, c, g, TileTiming{edge, edge, 0}, r * c);
                if (better(e, best)) best = e;
            }
        }
    }
    return *best;
}

}  // namespace detail

inline CostEstimate estimate_baseline(const BaselineKind& kind, const GemmOp& g, const PhysicalArray& array) {
    const std::int64_t r = array.size();
    std::optional<CostEstimate> best;
    switch (kind.kind) {
        case BaselineKind::Kind::GemminiFixed:
            for (Dataflow df : {Dataflow::WS, Dataflow::OS}) {
                auto e = detail::evaluate(df, r, r, g, {r, r, 0}, array.pe_count());
                if (detail::better(e, best)) best = e;
            }
            return *best;
        case BaselineKind::Kind::PlanariaCoarse: {
            if (r % 4 != 0) throw DomainError("Planaria baseline needs an array size divisible by 4");
            const std::int64_t shapes[5][2] = {{r, r}, {r / 2, 2 * r}, {2 * r, r / 2}, {r / 4, 4 * r}, {4 * r, r / 4}};
            for (const auto& s : shapes) {
                auto e = detail::evaluate(Dataflow::WS, s[0], s[1], g, {s[0], 0, 0}, array.pe_count());
                if (detail::better(e, best)) best = e;
            }
            return *best;
        }
        case BaselineKind::Kind::IdealBudget:
            if (kind.pe_budget < 1) throw DomainError("ideal PE budget must be >= 1");
            return detail::ideal_search(g, kind.pe_budget);
    }
    throw DomainError("unknown baseline kind");
}

}  // namespace redas
