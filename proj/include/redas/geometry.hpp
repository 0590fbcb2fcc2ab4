#pragma once

// Logical shapes of the reshapeable array and their physical realisation.
//
// A chained shape splits the R x R grid into four R_s x (R - R_s) sub-arrays
// A..D laid out as a pinwheel around an unused centre, and links them end to
// end so the long dimension is 4 (R - R_s) PEs. Sub-array q is sub-array A
// rotated q quarter turns clockwise; A sits in the top rows and flows east.
//
// Each of the four junctions (A->B, B->C, C->D and the drain D->perimeter)
// carries every long-dimension lane through R_s pass-through registers hosted
// by the first R_s x R_s block of the sub-array being entered (sub-array A for
// the drain). Lane i turns at the block diagonal, so a PE hosts at most two
// pass-through registers: one before the turn and one after.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "redas/error.hpp"

namespace redas {

class PhysicalArray {
public:
    explicit PhysicalArray(int size) : size_(size) {
        if (size < 2 || size % 2 != 0) {
            throw DomainError("physical array size must be an even integer >= 2, got " + std::to_string(size));
        }
    }

    int size() const { return size_; }
    std::int64_t pe_count() const { return std::int64_t{size_} * size_; }

    bool operator==(const PhysicalArray&) const = default;

private:
    int size_;
};

struct LogicalShape {
    int rows = 0;
    int cols = 0;
    bool chained = false;
    int sub_rows = 0;  // R_s; 0 for the native shape
    bool transposed = false;

    static LogicalShape native(const PhysicalArray& array) {
        return LogicalShape{array.size(), array.size(), false, 0, false};
    }

    static LogicalShape chain(const PhysicalArray& array, int sub_rows, bool transposed) {
        if (sub_rows < 1 || sub_rows > array.size() / 2) {
            throw DomainError("sub-array height " + std::to_string(sub_rows) + " outside [1, " +
                              std::to_string(array.size() / 2) + "]");
        }
        const int long_side = 4 * (array.size() - sub_rows);
        return transposed ? LogicalShape{long_side, sub_rows, true, sub_rows, true}
                          : LogicalShape{sub_rows, long_side, true, sub_rows, false};
    }

    std::int64_t pe_used() const { return std::int64_t{rows} * cols; }
    // Side of the physical array this shape was derived from.
    int array_size() const { return chained ? long_side() / 4 + sub_rows : rows; }
    int short_side() const { return rows < cols ? rows : cols; }
    int long_side() const { return rows < cols ? cols : rows; }

    std::string label() const { return std::to_string(rows) + "x" + std::to_string(cols); }
    std::string kind_name() const { return chained ? "chained" : "native"; }

    bool operator==(const LogicalShape&) const = default;
};

// Native last; chained shapes by ascending R_s, untransposed first.
inline std::vector<LogicalShape> enumerate_shapes(const PhysicalArray& array) {
    std::vector<LogicalShape> shapes;
    shapes.reserve(static_cast<std::size_t>(array.size()) + 1);
    for (int rs = 1; rs <= array.size() / 2; ++rs) {
        shapes.push_back(LogicalShape::chain(array, rs, false));
        shapes.push_back(LogicalShape::chain(array, rs, true));
    }
    shapes.push_back(LogicalShape::native(array));
    return shapes;
}

// Looks up an enumerated shape by its rows x cols footprint.
inline LogicalShape find_shape(const PhysicalArray& array, int rows, int cols) {
    for (const auto& shape : enumerate_shapes(array)) {
        if (shape.rows == rows && shape.cols == cols) return shape;
    }
    throw DomainError("shape " + std::to_string(rows) + "x" + std::to_string(cols) + " is not supported by a " +
                      std::to_string(array.size()) + "x" + std::to_string(array.size()) + " array");
}

// Parses "RLxCL" (also accepts 'X' and '*').
inline LogicalShape parse_shape(const PhysicalArray& array, const std::string& text) {
    const auto sep = text.find_first_of("xX*");
    if (sep == std::string::npos) throw DomainError("shape must look like RLxCL, got '" + text + "'");
    try {
        std::size_t used_r = 0;
        std::size_t used_c = 0;
        const int rows = std::stoi(text.substr(0, sep), &used_r);
        const int cols = std::stoi(text.substr(sep + 1), &used_c);
        if (used_r != sep || used_c != text.size() - sep - 1) throw std::invalid_argument("trailing");
        return find_shape(array, rows, cols);
    } catch (const std::logic_error&) {
        throw DomainError("shape must look like RLxCL, got '" + text + "'");
    }
}

struct Coord {
    int row = 0;
    int col = 0;
    bool operator==(const Coord&) const = default;
};

enum class Side { North, East, South, West };

inline const char* to_string(Side side) {
    switch (side) {
        case Side::North: return "north";
        case Side::East: return "east";
        case Side::South: return "south";
        case Side::West: return "west";
    }
    return "?";
}

// Half-open row/col ranges.
struct Rect {
    int row_begin = 0;
    int row_end = 0;
    int col_begin = 0;
    int col_end = 0;

    int height() const { return row_end - row_begin; }
    int width() const { return col_end - col_begin; }
    std::int64_t area() const { return std::int64_t{height()} * width(); }
    bool empty() const { return height() <= 0 || width() <= 0; }
    bool contains(Coord c) const {
        return c.row >= row_begin && c.row < row_end && c.col >= col_begin && c.col < col_end;
    }
    bool operator==(const Rect&) const = default;
};

struct SubArray {
    Rect rect;
    Side flow;  // direction the long dimension advances in
};

struct SubArrayPlacement {
    int array_size = 0;
    int sub_rows = 0;  // R_s
    std::array<SubArray, 4> subarrays{};
    Rect hole;

    int sub_cols() const { return array_size - sub_rows; }
    std::int64_t cells_used() const { return 4 * std::int64_t{sub_rows} * sub_cols(); }
};

// Quarter-turn clockwise rotation of a grid cell.
inline Coord rotate_cw(Coord c, int array_size, int turns) {
    for (int t = 0; t < ((turns % 4) + 4) % 4; ++t) c = Coord{c.col, array_size - 1 - c.row};
    return c;
}

inline Side rotate_cw(Side side, int turns) {
    return static_cast<Side>((static_cast<int>(side) + turns) % 4);
}

inline SubArrayPlacement place_subarrays(const PhysicalArray& array, int sub_rows) {
    const int r = array.size();
    if (sub_rows < 1 || sub_rows > r / 2) {
        throw DomainError("sub-array height " + std::to_string(sub_rows) + " outside [1, " + std::to_string(r / 2) +
                          "]");
    }
    const int cs = r - sub_rows;
    SubArrayPlacement p;
    p.array_size = r;
    p.sub_rows = sub_rows;
    p.subarrays[0] = {Rect{0, sub_rows, 0, cs}, Side::East};
    p.subarrays[1] = {Rect{0, cs, cs, r}, Side::South};
    p.subarrays[2] = {Rect{cs, r, sub_rows, r}, Side::West};
    p.subarrays[3] = {Rect{sub_rows, r, 0, sub_rows}, Side::North};
    p.hole = Rect{sub_rows, cs, sub_rows, cs};
    return p;
}

// Physical cell of a chained PE: `long_index` in [0, 4 C_s) runs along the
// chain, `short_index` in [0, R_s) counts inward from the sub-array's outer
// edge.
inline Coord chained_cell(const SubArrayPlacement& p, int long_index, int short_index) {
    const int q = long_index / p.sub_cols();
    const int offset = long_index % p.sub_cols();
    return rotate_cw(Coord{short_index, offset}, p.array_size, q);
}

// Perimeter side that the outer edge of sub-array q faces.
inline Side outer_side(int subarray) { return rotate_cw(Side::North, subarray); }

enum class PeRole { Idle, Compute, ComputePassThrough };

inline const char* to_string(PeRole role) {
    switch (role) {
        case PeRole::Idle: return "idle";
        case PeRole::Compute: return "compute";
        case PeRole::ComputePassThrough: return "compute+pass";
    }
    return "?";
}

struct PassHop {
    Coord cell;
    int slot = 0;  // which of the PE's two pass-through registers
    bool operator==(const PassHop&) const = default;
};

struct Junction {
    int entering = 0;  // sub-array index being entered; 0 is the drain to the perimeter
    std::vector<std::vector<PassHop>> lanes;  // per physical short index, in traversal order
};

struct RoutePlan {
    int array_size = 0;
    LogicalShape shape;
    std::vector<PeRole> roles;  // row-major
    int junction_delay = 0;
    int num_junctions = 0;
    std::vector<Junction> junctions;  // A->B, B->C, C->D, drain

    PeRole role(Coord c) const { return roles[static_cast<std::size_t>(c.row) * array_size + c.col]; }
    std::int64_t active_cells() const {
        std::int64_t n = 0;
        for (auto r : roles) n += r != PeRole::Idle;
        return n;
    }
};

namespace detail {

// Pass-through path of lane `lane` for the drain junction (frame of
// sub-array A): north along column `lane` up to the diagonal, then west along
// row `lane` to the perimeter.
inline std::vector<PassHop> drain_path(int sub_rows, int lane) {
    std::vector<PassHop> hops;
    for (int row = sub_rows - 1; row >= lane; --row) hops.push_back({Coord{row, lane}, 0});
    for (int col = lane - 1; col >= 0; --col) hops.push_back({Coord{lane, col}, 1});
    return hops;
}

}  // namespace detail

inline RoutePlan route(const SubArrayPlacement& placement, const LogicalShape& shape) {
    if (!shape.chained || shape.sub_rows != placement.sub_rows ||
        shape.long_side() != 4 * placement.sub_cols()) {
        throw DomainError("shape " + shape.label() + " was not derived from this placement (R=" +
                          std::to_string(placement.array_size) + ", R_s=" + std::to_string(placement.sub_rows) + ")");
    }
    const int r = placement.array_size;
    RoutePlan plan;
    plan.array_size = r;
    plan.shape = shape;
    plan.roles.assign(static_cast<std::size_t>(r) * r, PeRole::Idle);
    for (const auto& sub : placement.subarrays) {
        for (int row = sub.rect.row_begin; row < sub.rect.row_end; ++row) {
            for (int col = sub.rect.col_begin; col < sub.rect.col_end; ++col) {
                plan.roles[static_cast<std::size_t>(row) * r + col] = PeRole::Compute;
            }
        }
    }
    plan.junction_delay = shape.short_side();
    plan.num_junctions = 4;
    for (int entering : {1, 2, 3, 0}) {
        Junction j;
        j.entering = entering;
        for (int lane = 0; lane < placement.sub_rows; ++lane) {
            auto hops = detail::drain_path(placement.sub_rows, lane);
            for (auto& hop : hops) {
                hop.cell = rotate_cw(hop.cell, r, entering);
                plan.roles[static_cast<std::size_t>(hop.cell.row) * r + hop.cell.col] = PeRole::ComputePassThrough;
            }
            j.lanes.push_back(std::move(hops));
        }
        plan.junctions.push_back(std::move(j));
    }
    return plan;
}

// Native shapes need no placement.
inline RoutePlan route(const PhysicalArray& array, const LogicalShape& shape) {
    if (shape.chained) return route(place_subarrays(array, shape.sub_rows), shape);
    if (shape != LogicalShape::native(array)) {
        throw DomainError("shape " + shape.label() + " is not native to a " + std::to_string(array.size()) +
                          "-wide array");
    }
    RoutePlan plan;
    plan.array_size = array.size();
    plan.shape = shape;
    plan.roles.assign(static_cast<std::size_t>(array.pe_count()), PeRole::Compute);
    return plan;
}

}  // namespace redas
