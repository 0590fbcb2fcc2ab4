#pragma once

// Cycle-level functional model of the reshapeable array.
//
// Every logical row and column of the configured shape is a lane: an ordered
// chain of physical registers. PE stages use the PE's row or column operand
// register; junction stages use one of the two pass-through registers of the
// hosting PE. Each cycle all registers are computed from the previous
// cycle's contents and then committed together.
//
// Values carry index tags (k for streamed operands, (m, n) for partial sums
// and accumulators) so that a mis-timed meeting of two operands is raised as
// a SimulationFault instead of silently producing a wrong product.
//
// Tile phases:
//   preload  (WS/IS) R_p cycles, stationary tile shifted down every column
//   process  stream length + structural pipeline depth of the lanes
//   offload  (OS)    R_p cycles, accumulators shifted up into the buffer

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "redas/costmodel.hpp"
#include "redas/error.hpp"
#include "redas/geometry.hpp"
#include "redas/workload.hpp"

namespace redas {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::int64_t rows, std::int64_t cols, std::int64_t fill = 0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {}

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::int64_t& operator()(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    std::int64_t operator()(std::int64_t i, std::int64_t j) const {
        return data_[static_cast<std::size_t>(i * cols_ + j)];
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::int64_t i = 0; i < rows_; ++i)
            for (std::int64_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<std::int64_t> data_;
};

inline Matrix naive_multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DomainError("inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t j = 0; j < b.cols(); ++j) {
            std::int64_t sum = 0;
            for (std::int64_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
            c(i, j) = sum;
        }
    return c;
}

template <typename Rng>
Matrix random_matrix(std::int64_t rows, std::int64_t cols, std::int64_t lo, std::int64_t hi, Rng& rng) {
    std::uniform_int_distribution<std::int64_t> dist(lo, hi);
    Matrix m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

// ---------------------------------------------------------------------------
// Perimeter buffer banks

enum class BankRole { Idle, WeightIssuer, InputIssuer, OutputReceiver };

inline const char* to_string(BankRole role) {
    switch (role) {
        case BankRole::Idle: return "idle";
        case BankRole::WeightIssuer: return "weight-issuer";
        case BankRole::InputIssuer: return "input-issuer";
        case BankRole::OutputReceiver: return "output-receiver";
    }
    return "?";
}

struct BankRef {
    Side side = Side::North;
    int index = 0;
    bool operator==(const BankRef&) const = default;
    auto operator<=>(const BankRef&) const = default;
};

// One bank per perimeter position on each side.
struct BankAssignment {
    int array_size = 0;
    std::map<BankRef, BankRole> roles;

    BankRole role(Side side, int index) const {
        const auto it = roles.find(BankRef{side, index});
        return it == roles.end() ? BankRole::Idle : it->second;
    }
    int count(Side side, BankRole role) const {
        int n = 0;
        for (const auto& [ref, r] : roles) n += ref.side == side && r == role;
        return n;
    }
    int count(BankRole role) const {
        int n = 0;
        for (const auto& [ref, r] : roles) n += r == role;
        return n;
    }
};

// ---------------------------------------------------------------------------
// Lane layout

enum class Port { Row = 0, Col = 1, Pass0 = 2, Pass1 = 3 };

struct Stage {
    int pe = 0;  // physical index row * R + col
    Port port = Port::Row;
    int row = -1;  // logical coordinates, -1 on pass-through stages
    int col = -1;
    bool is_pe() const { return row >= 0; }
};

struct Lane {
    std::vector<Stage> stages;
    std::optional<BankRef> head;  // perimeter bank facing the first stage
    std::optional<BankRef> tail;  // perimeter bank facing the last stage
};

struct ArrayLayout {
    int array_size = 0;
    Config config;
    std::vector<Coord> cells;  // logical row-major -> physical
    std::vector<Lane> row_lanes;
    std::vector<Lane> col_lanes;
    std::vector<int> row_offset;  // stage index of logical column j along any row lane
    std::vector<int> col_offset;  // stage index of logical row i along any column lane

    int rows() const { return config.shape.rows; }
    int cols() const { return config.shape.cols; }
    Coord cell(int i, int j) const { return cells[static_cast<std::size_t>(i) * cols() + j]; }
    int pe(int i, int j) const { return cell(i, j).row * array_size + cell(i, j).col; }
};

namespace sim_detail {

inline std::optional<BankRef> bank_facing(Coord c, Side side, int r) {
    switch (side) {
        case Side::North: return c.row == 0 ? std::optional<BankRef>({side, c.col}) : std::nullopt;
        case Side::South: return c.row == r - 1 ? std::optional<BankRef>({side, c.col}) : std::nullopt;
        case Side::East: return c.col == r - 1 ? std::optional<BankRef>({side, c.row}) : std::nullopt;
        case Side::West: return c.col == 0 ? std::optional<BankRef>({side, c.row}) : std::nullopt;
    }
    return std::nullopt;
}

inline const Junction& junction_entering(const RoutePlan& plan, int entering) {
    for (const auto& j : plan.junctions) {
        if (j.entering == entering) return j;
    }
    throw ConfigurationError("route plan has no junction into sub-array " + std::to_string(entering));
}

inline void index_offsets(ArrayLayout& layout) {
    auto offsets = [](const std::vector<Lane>& lanes, int count, bool along_row) {
        std::vector<int> off(static_cast<std::size_t>(count), -1);
        for (const auto& lane : lanes) {
            for (std::size_t s = 0; s < lane.stages.size(); ++s) {
                const auto& st = lane.stages[s];
                if (!st.is_pe()) continue;
                auto& slot = off[static_cast<std::size_t>(along_row ? st.col : st.row)];
                if (slot >= 0 && slot != static_cast<int>(s)) {
                    throw ConfigurationError("lanes of one direction are not aligned");
                }
                slot = static_cast<int>(s);
            }
        }
        return off;
    };
    layout.row_offset = offsets(layout.row_lanes, layout.cols(), true);
    layout.col_offset = offsets(layout.col_lanes, layout.rows(), false);
}

}  // namespace sim_detail

// Maps the configured logical array onto physical registers. On chained
// shapes whose short-dimension lanes carry partial sums (WS/IS, untransposed)
// the short index is mirrored so those sums leave through the outer edge.
inline ArrayLayout build_layout(const Config& config, const RoutePlan& plan) {
    const auto& shape = config.shape;
    if (plan.shape != shape) throw ConfigurationError("route plan was built for shape " + plan.shape.label());
    const int r = plan.array_size;
    ArrayLayout layout;
    layout.array_size = r;
    layout.config = config;
    layout.cells.resize(static_cast<std::size_t>(shape.pe_used()));
    auto index_of = [r](Coord c) { return c.row * r + c.col; };

    if (!shape.chained) {
        for (int i = 0; i < shape.rows; ++i)
            for (int j = 0; j < shape.cols; ++j) layout.cells[static_cast<std::size_t>(i) * shape.cols + j] = {i, j};
        for (int i = 0; i < shape.rows; ++i) {
            Lane lane;
            for (int j = 0; j < shape.cols; ++j) lane.stages.push_back({index_of({i, j}), Port::Row, i, j});
            lane.head = BankRef{Side::West, i};
            lane.tail = BankRef{Side::East, i};
            layout.row_lanes.push_back(std::move(lane));
        }
        for (int j = 0; j < shape.cols; ++j) {
            Lane lane;
            for (int i = 0; i < shape.rows; ++i) lane.stages.push_back({index_of({i, j}), Port::Col, i, j});
            lane.head = BankRef{Side::North, j};
            lane.tail = BankRef{Side::South, j};
            layout.col_lanes.push_back(std::move(lane));
        }
        sim_detail::index_offsets(layout);
        return layout;
    }

    const auto placement = place_subarrays(PhysicalArray(r), shape.sub_rows);
    const int rs = shape.sub_rows;
    const int cs = placement.sub_cols();
    const int long_len = shape.long_side();
    const bool mirror = !shape.transposed && config.dataflow != Dataflow::OS;
    auto phys_short = [&](int s) { return mirror ? rs - 1 - s : s; };
    auto cell = [&](int i, int j) {
        return shape.transposed ? chained_cell(placement, i, phys_short(j)) : chained_cell(placement, j, phys_short(i));
    };
    for (int i = 0; i < shape.rows; ++i)
        for (int j = 0; j < shape.cols; ++j) layout.cells[static_cast<std::size_t>(i) * shape.cols + j] = cell(i, j);

    // Long lanes thread all four sub-arrays and every junction.
    auto long_lane = [&](int short_log, Port port) {
        Lane lane;
        const int sl = phys_short(short_log);
        for (int idx = 0; idx < long_len; ++idx) {
            const int i = shape.transposed ? idx : short_log;
            const int j = shape.transposed ? short_log : idx;
            lane.stages.push_back({index_of(cell(i, j)), port, i, j});
            if ((idx + 1) % cs == 0) {
                const auto& junction = sim_detail::junction_entering(plan, ((idx + 1) / cs) % 4);
                for (const auto& hop : junction.lanes.at(static_cast<std::size_t>(sl))) {
                    lane.stages.push_back({index_of(hop.cell), hop.slot == 0 ? Port::Pass0 : Port::Pass1, -1, -1});
                }
            }
        }
        lane.head = sim_detail::bank_facing(chained_cell(placement, 0, sl), Side::West, r);
        const auto& last = sim_detail::junction_entering(plan, 0).lanes.at(static_cast<std::size_t>(sl)).back().cell;
        lane.tail = sim_detail::bank_facing(last, Side::West, r);
        return lane;
    };
    // Short lanes stay inside one sub-array; only the outer end faces a bank.
    auto short_lane = [&](int long_idx, Port port) {
        Lane lane;
        const Side outer = outer_side(long_idx / cs);
        for (int s = 0; s < rs; ++s) {
            const int i = shape.transposed ? long_idx : s;
            const int j = shape.transposed ? s : long_idx;
            lane.stages.push_back({index_of(cell(i, j)), port, i, j});
        }
        const auto& first = layout.cells[static_cast<std::size_t>(lane.stages.front().row) * shape.cols +
                                         lane.stages.front().col];
        const auto& last = layout.cells[static_cast<std::size_t>(lane.stages.back().row) * shape.cols +
                                        lane.stages.back().col];
        if (phys_short(0) == 0) lane.head = sim_detail::bank_facing(first, outer, r);
        if (phys_short(rs - 1) == 0) lane.tail = sim_detail::bank_facing(last, outer, r);
        return lane;
    };

    if (shape.transposed) {
        for (int i = 0; i < shape.rows; ++i) layout.row_lanes.push_back(short_lane(i, Port::Row));
        for (int j = 0; j < shape.cols; ++j) layout.col_lanes.push_back(long_lane(j, Port::Col));
    } else {
        for (int i = 0; i < shape.rows; ++i) layout.row_lanes.push_back(long_lane(i, Port::Row));
        for (int j = 0; j < shape.cols; ++j) layout.col_lanes.push_back(short_lane(j, Port::Col));
    }
    sim_detail::index_offsets(layout);
    return layout;
}

namespace sim_detail {

enum class LaneUse { Unused, Issue, Receive };

struct LaneRoles {
    LaneUse row = LaneUse::Issue;
    LaneUse col = LaneUse::Issue;
    BankRole row_role = BankRole::InputIssuer;
    BankRole col_role = BankRole::WeightIssuer;
};

inline LaneRoles lane_roles(Dataflow df) {
    switch (df) {
        case Dataflow::OS: return {LaneUse::Issue, LaneUse::Issue, BankRole::InputIssuer, BankRole::WeightIssuer};
        case Dataflow::WS: return {LaneUse::Issue, LaneUse::Receive, BankRole::InputIssuer, BankRole::OutputReceiver};
        case Dataflow::IS: return {LaneUse::Issue, LaneUse::Receive, BankRole::WeightIssuer, BankRole::OutputReceiver};
    }
    return {};
}

inline BankAssignment assign(const ArrayLayout& layout) {
    BankAssignment banks;
    banks.array_size = layout.array_size;
    const auto roles = lane_roles(layout.config.dataflow);
    auto bind = [&](const Lane& lane, LaneUse use, BankRole role, const char* what, std::size_t index) {
        if (use == LaneUse::Unused) return;
        const auto& end = use == LaneUse::Issue ? lane.head : lane.tail;
        if (!end) {
            throw ConfigurationError(std::string(what) + " lane " + std::to_string(index) +
                                     " has no reachable perimeter bank");
        }
        const auto [it, inserted] = banks.roles.emplace(*end, role);
        if (!inserted) {
            throw ConfigurationError(std::string(what) + " lane " + std::to_string(index) + " collides on the " +
                                     to_string(end->side) + " bank " + std::to_string(end->index));
        }
    };
    for (std::size_t i = 0; i < layout.row_lanes.size(); ++i) bind(layout.row_lanes[i], roles.row, roles.row_role, "row", i);
    for (std::size_t j = 0; j < layout.col_lanes.size(); ++j) bind(layout.col_lanes[j], roles.col, roles.col_role, "column", j);
    return banks;
}

}  // namespace sim_detail

// Binds every lane end that issues or receives data to a perimeter bank.
// Stationary data moves through the separate stationary buffer on the north
// edge and does not occupy a bank.
inline BankAssignment assign_bank_roles(const Config& config, const RoutePlan& plan) {
    return sim_detail::assign(build_layout(config, plan));
}

// ---------------------------------------------------------------------------
// Simulation

enum class Phase { Preload, Process, Offload };

inline const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::Preload: return "preload";
        case Phase::Process: return "process";
        case Phase::Offload: return "offload";
    }
    return "?";
}

struct PEState {
    struct Word {
        std::int64_t value = 0;
        std::int32_t tag0 = -1;
        std::int32_t tag1 = -1;
        bool valid = false;
    };
    Word stationary;
    Word accum;  // OS partial sum, tagged (m, n)
    std::array<Word, 4> ports{};  // Row, Col, Pass0, Pass1
    PeRole role = PeRole::Idle;
};

using Word = PEState::Word;

struct BufferBank {
    BankRef id;
    BankRole role = BankRole::Idle;
    std::vector<Word> queue;  // issued one per cycle from `start`
    std::int64_t start = 0;
    std::size_t issued = 0;
    // accumulators for WS/IS, indexed by stream position
    std::vector<std::int64_t> sums;
    std::vector<char> touched;
    std::int32_t column_tag = -1;
};

struct SimResult {
    std::int64_t cycles = 0;
    Matrix output;
    std::vector<int> busy_trace;
    std::vector<Phase> phase_trace;
    double measured_utilization = 0.0;
    std::int64_t mac_total = 0;
    std::int64_t tiles = 0;
    int peak_busy() const { return busy_trace.empty() ? 0 : *std::max_element(busy_trace.begin(), busy_trace.end()); }
};

struct SimOptions {
    bool record_trace = true;
};

namespace sim_detail {

class Engine {
public:
    Engine(const Config& config, const RoutePlan& plan, const SimOptions& options)
        : layout_(build_layout(config, plan)),
          banks_(assign(layout_)),
          r_(plan.array_size),
          options_(options) {
        pes_.resize(static_cast<std::size_t>(r_) * r_);
        for (std::size_t p = 0; p < pes_.size(); ++p) pes_[p].role = plan.roles[p];
        for (const auto& lanes : {&layout_.row_lanes, &layout_.col_lanes}) {
            for (const auto& lane : *lanes) {
                for (const auto& st : lane.stages) {
                    if (st.is_pe() && pes_[static_cast<std::size_t>(st.pe)].role == PeRole::Idle) {
                        throw ConfigurationError("logical PE mapped onto an idle cell");
                    }
                }
            }
        }
        for (const auto& [ref, role] : banks_.roles) bank_state_[ref] = BufferBank{ref, role, {}, 0, 0, {}, {}, -1};
    }

    SimResult run(const Matrix& a, const Matrix& b) {
        const auto df = layout_.config.dataflow;
        if (df == Dataflow::OS) {
            result_.output = Matrix(a.rows(), b.cols());
            run_output_stationary(a, b);
        } else if (df == Dataflow::WS) {
            result_.output = stationary_engine(b, a);
        } else {
            result_.output = stationary_engine(a.transposed(), b.transposed()).transposed();
        }
        result_.measured_utilization =
            result_.cycles == 0 ? 0.0
                                : static_cast<double>(result_.mac_total) /
                                      (static_cast<double>(r_) * r_ * static_cast<double>(result_.cycles));
        return std::move(result_);
    }

private:
    Word& reg(std::vector<PEState>& pes, const Stage& st) {
        return pes[static_cast<std::size_t>(st.pe)].ports[static_cast<std::size_t>(st.port)];
    }

    void write(std::vector<PEState>& next, const Stage& st, const Word& w) {
        auto& dst = reg(next, st);
        if (dst.valid) {
            throw SimulationFault("double write to PE " + std::to_string(st.pe) + " port " +
                                  std::to_string(static_cast<int>(st.port)) + " in cycle " +
                                  std::to_string(result_.cycles));
        }
        if ((st.port == Port::Pass0 || st.port == Port::Pass1) &&
            pes_[static_cast<std::size_t>(st.pe)].role != PeRole::ComputePassThrough) {
            throw SimulationFault("pass-through register used on PE " + std::to_string(st.pe) +
                                  " which has no pass-through role");
        }
        dst = w;
    }

    void record(Phase phase, int busy) {
        if (options_.record_trace) {
            result_.busy_trace.push_back(busy);
            result_.phase_trace.push_back(phase);
        }
        ++result_.cycles;
    }

    int count_valid(bool stationary) const {
        int n = 0;
        for (const auto& pe : pes_) {
            if (pe.role != PeRole::Idle && (stationary ? pe.stationary.valid : pe.accum.valid)) ++n;
        }
        return n;
    }

    BufferBank& bank(const std::optional<BankRef>& ref) { return bank_state_.at(*ref); }

    Word issue(const Lane& lane, std::int64_t cycle) {
        if (!lane.head) return {};
        auto& b = bank(lane.head);
        if (b.issued >= b.queue.size() || cycle < b.start + static_cast<std::int64_t>(b.issued)) return {};
        return b.queue[b.issued++];
    }

    std::int64_t process_window(std::int64_t stream_len) const {
        std::int64_t depth = 0;
        for (std::size_t i = 0; i < layout_.row_lanes.size(); ++i) {
            depth = std::max<std::int64_t>(depth, layout_.col_offset[i] +
                                                      static_cast<std::int64_t>(layout_.row_lanes[i].stages.size()));
        }
        for (std::size_t j = 0; j < layout_.col_lanes.size(); ++j) {
            depth = std::max<std::int64_t>(depth, layout_.row_offset[j] +
                                                      static_cast<std::int64_t>(layout_.col_lanes[j].stages.size()));
        }
        return stream_len + depth - 1;
    }

    void check_drained(const char* phase) const {
        for (const auto& lanes : {&layout_.row_lanes, &layout_.col_lanes}) {
            for (const auto& lane : *lanes) {
                for (std::size_t s = 0; s + 1 < lane.stages.size(); ++s) {
                    const auto& st = lane.stages[s];
                    if (pes_[static_cast<std::size_t>(st.pe)].ports[static_cast<std::size_t>(st.port)].valid) {
                        throw SimulationFault(std::string("data still in flight at the end of the ") + phase +
                                              " phase");
                    }
                }
                if (lane.head) {
                    const auto it = bank_state_.find(*lane.head);
                    if (it != bank_state_.end() && it->second.issued != it->second.queue.size()) {
                        throw SimulationFault("issuer bank not drained after process");
                    }
                }
            }
        }
    }

    void clear_ports() {
        for (auto& pe : pes_) pe.ports = {};
    }

    // Shift the stationary tile down every physical column, bottom row first.
    void preload(const std::vector<std::vector<Word>>& column_feed) {
        for (int u = 0; u < r_; ++u) {
            for (int c = 0; c < r_; ++c) {
                for (int row = r_ - 1; row > 0; --row) {
                    pes_[static_cast<std::size_t>(row * r_ + c)].stationary =
                        pes_[static_cast<std::size_t>((row - 1) * r_ + c)].stationary;
                }
                pes_[static_cast<std::size_t>(c)].stationary = column_feed[static_cast<std::size_t>(c)][static_cast<std::size_t>(u)];
            }
            record(Phase::Preload, count_valid(true));
        }
    }

    // Y = X * S with S held stationary. Row lanes carry X, column lanes carry
    // partial sums out to the receiver banks.
    Matrix stationary_engine(const Matrix& stationary, const Matrix& stream) {
        const std::int64_t depth = stationary.rows();
        const std::int64_t width = stationary.cols();
        const std::int64_t len = stream.rows();
        const int rl = layout_.rows();
        const int cl = layout_.cols();
        Matrix y(len, width);

        for (std::int64_t c0 = 0; c0 < width; c0 += cl) {
            for (auto& lane : layout_.col_lanes) {
                auto& b = bank(lane.tail);
                b.sums.assign(static_cast<std::size_t>(len), 0);
                b.touched.assign(static_cast<std::size_t>(len), 0);
                b.column_tag = -1;
            }
            for (std::int64_t r0 = 0; r0 < depth; r0 += rl) {
                ++result_.tiles;
                // Stationary buffer feed: bottom row of each column first.
                std::vector<std::vector<Word>> feed(static_cast<std::size_t>(r_),
                                                    std::vector<Word>(static_cast<std::size_t>(r_)));
                for (int i = 0; i < rl && r0 + i < depth; ++i) {
                    for (int j = 0; j < cl && c0 + j < width; ++j) {
                        const Coord cell = layout_.cell(i, j);
                        feed[static_cast<std::size_t>(cell.col)][static_cast<std::size_t>(r_ - 1 - cell.row)] =
                            Word{stationary(r0 + i, c0 + j), static_cast<std::int32_t>(r0 + i),
                                 static_cast<std::int32_t>(c0 + j), true};
                    }
                }
                preload(feed);

                for (int i = 0; i < rl; ++i) {
                    auto& b = bank(layout_.row_lanes[static_cast<std::size_t>(i)].head);
                    b.queue.clear();
                    b.issued = 0;
                    b.start = layout_.col_offset[static_cast<std::size_t>(i)];
                    if (r0 + i >= depth) continue;
                    for (std::int64_t s = 0; s < len; ++s) {
                        b.queue.push_back(Word{stream(s, r0 + i), static_cast<std::int32_t>(s),
                                               static_cast<std::int32_t>(r0 + i), true});
                    }
                }

                const int loaded = count_valid(true);
                const std::int64_t window = process_window(len);
                for (std::int64_t t = 0; t < window; ++t) {
                    auto next = pes_;
                    for (auto& pe : next) pe.ports = {};
                    for (const auto& lane : layout_.row_lanes) {
                        for (std::size_t s = 0; s < lane.stages.size(); ++s) {
                            const Word in = s == 0 ? issue(lane, t) : reg(pes_, lane.stages[s - 1]);
                            if (in.valid) write(next, lane.stages[s], in);
                        }
                    }
                    for (const auto& lane : layout_.col_lanes) {
                        for (std::size_t s = 0; s < lane.stages.size(); ++s) {
                            const auto& st = lane.stages[s];
                            Word sum = s == 0 ? Word{} : reg(pes_, lane.stages[s - 1]);
                            if (st.is_pe()) sum = mac_partial(next, st, sum);
                            if (sum.valid) write(next, st, sum);
                        }
                        const Word& out = reg(next, lane.stages.back());
                        if (out.valid) receive(bank(lane.tail), out);
                    }
                    pes_ = std::move(next);
                    record(Phase::Process, loaded);
                }
                check_drained("process");
                clear_ports();
                for (auto& pe : pes_) pe.stationary = {};
            }
            for (auto& lane : layout_.col_lanes) {
                auto& b = bank(lane.tail);
                if (b.column_tag < 0) continue;
                for (std::int64_t s = 0; s < len; ++s) {
                    if (b.touched[static_cast<std::size_t>(s)]) y(s, b.column_tag) = b.sums[static_cast<std::size_t>(s)];
                }
            }
        }
        return y;
    }

    Word mac_partial(std::vector<PEState>& next, const Stage& st, Word sum) {
        const auto& pe = pes_[static_cast<std::size_t>(st.pe)];
        const Word& x = next[static_cast<std::size_t>(st.pe)].ports[static_cast<std::size_t>(Port::Row)];
        if (!pe.stationary.valid || !x.valid) return sum;
        if (pe.role == PeRole::Idle) throw SimulationFault("idle PE attempted a MAC");
        if (x.tag1 != pe.stationary.tag0) throw SimulationFault("streamed operand met the wrong stationary row");
        if (sum.valid && (sum.tag0 != x.tag0 || sum.tag1 != pe.stationary.tag1)) {
            throw SimulationFault("partial sum arrived out of step with its operand");
        }
        ++result_.mac_total;
        return Word{(sum.valid ? sum.value : 0) + x.value * pe.stationary.value, x.tag0, pe.stationary.tag1, true};
    }

    void receive(BufferBank& b, const Word& w) {
        if (b.role != BankRole::OutputReceiver) throw SimulationFault("partial sum delivered to a non-receiver bank");
        if (b.column_tag >= 0 && b.column_tag != w.tag1) throw SimulationFault("receiver bank saw two columns");
        b.column_tag = w.tag1;
        b.sums.at(static_cast<std::size_t>(w.tag0)) += w.value;
        b.touched.at(static_cast<std::size_t>(w.tag0)) = 1;
    }

    void run_output_stationary(const Matrix& a, const Matrix& b) {
        const std::int64_t m = a.rows();
        const std::int64_t n = b.cols();
        const std::int64_t k = a.cols();
        const int rl = layout_.rows();
        const int cl = layout_.cols();
        std::vector<char> written(static_cast<std::size_t>(m * n), 0);

        for (std::int64_t m0 = 0; m0 < m; m0 += rl) {
            for (std::int64_t n0 = 0; n0 < n; n0 += cl) {
                ++result_.tiles;
                for (int i = 0; i < rl; ++i) {
                    auto& bk = bank(layout_.row_lanes[static_cast<std::size_t>(i)].head);
                    bk.queue.clear();
                    bk.issued = 0;
                    bk.start = layout_.col_offset[static_cast<std::size_t>(i)];
                    if (m0 + i >= m) continue;
                    for (std::int64_t s = 0; s < k; ++s) {
                        bk.queue.push_back(Word{a(m0 + i, s), static_cast<std::int32_t>(s),
                                                static_cast<std::int32_t>(m0 + i), true});
                    }
                }
                for (int j = 0; j < cl; ++j) {
                    auto& bk = bank(layout_.col_lanes[static_cast<std::size_t>(j)].head);
                    bk.queue.clear();
                    bk.issued = 0;
                    bk.start = layout_.row_offset[static_cast<std::size_t>(j)];
                    if (n0 + j >= n) continue;
                    for (std::int64_t s = 0; s < k; ++s) {
                        bk.queue.push_back(Word{b(s, n0 + j), static_cast<std::int32_t>(s),
                                                static_cast<std::int32_t>(n0 + j), true});
                    }
                }

                const std::int64_t window = process_window(k);
                for (std::int64_t t = 0; t < window; ++t) {
                    auto next = pes_;
                    for (auto& pe : next) pe.ports = {};
                    for (const auto& lanes : {&layout_.row_lanes, &layout_.col_lanes}) {
                        for (const auto& lane : *lanes) {
                            for (std::size_t s = 0; s < lane.stages.size(); ++s) {
                                const Word in = s == 0 ? issue(lane, t) : reg(pes_, lane.stages[s - 1]);
                                if (in.valid) write(next, lane.stages[s], in);
                            }
                        }
                    }
                    for (int i = 0; i < rl; ++i) {
                        for (int j = 0; j < cl; ++j) {
                            auto& pe = next[static_cast<std::size_t>(layout_.pe(i, j))];
                            const Word& x = pe.ports[static_cast<std::size_t>(Port::Row)];
                            const Word& w = pe.ports[static_cast<std::size_t>(Port::Col)];
                            if (!x.valid || !w.valid) continue;
                            if (pe.role == PeRole::Idle) throw SimulationFault("idle PE attempted a MAC");
                            if (x.tag0 != w.tag0) throw SimulationFault("input and weight met out of step");
                            if (pe.accum.valid && (pe.accum.tag0 != x.tag1 || pe.accum.tag1 != w.tag1)) {
                                throw SimulationFault("accumulator reused for a different output");
                            }
                            pe.accum = Word{(pe.accum.valid ? pe.accum.value : 0) + x.value * w.value, x.tag1,
                                            w.tag1, true};
                            ++result_.mac_total;
                        }
                    }
                    pes_ = std::move(next);
                    record(Phase::Process, count_valid(false));
                }
                check_drained("process");
                clear_ports();

                // Offload: accumulators shift north into the stationary buffer.
                for (int u = 0; u < r_; ++u) {
                    record(Phase::Offload, count_valid(false));
                    for (int c = 0; c < r_; ++c) {
                        const Word top = pes_[static_cast<std::size_t>(c)].accum;
                        if (top.valid) {
                            auto& seen = written[static_cast<std::size_t>(top.tag0 * n + top.tag1)];
                            if (seen) throw SimulationFault("output element offloaded twice");
                            seen = 1;
                            result_.output(top.tag0, top.tag1) = top.value;
                        }
                        for (int row = 0; row + 1 < r_; ++row) {
                            pes_[static_cast<std::size_t>(row * r_ + c)].accum =
                                pes_[static_cast<std::size_t>((row + 1) * r_ + c)].accum;
                        }
                        pes_[static_cast<std::size_t>((r_ - 1) * r_ + c)].accum = {};
                    }
                }
            }
        }
    }

    ArrayLayout layout_;
    BankAssignment banks_;
    int r_;
    SimOptions options_;
    std::vector<PEState> pes_;
    std::map<BankRef, BufferBank> bank_state_;
    SimResult result_;
};

}  // namespace sim_detail

// Runs the GEMM a (M x K) * b (K x N) on an explicit route plan.
inline SimResult simulate(const Config& config, const RoutePlan& plan, const GemmOp& gemm, const Matrix& a,
                          const Matrix& b, const SimOptions& options = {}) {
    if (a.rows() != gemm.m || a.cols() != gemm.k || b.rows() != gemm.k || b.cols() != gemm.n) {
        throw DomainError("operand matrices do not match GEMM [M=" + std::to_string(gemm.m) +
                          ", K=" + std::to_string(gemm.k) + ", N=" + std::to_string(gemm.n) + "]");
    }
    sim_detail::Engine engine(config, plan, options);
    return engine.run(a, b);
}

inline SimResult simulate(const Config& config, const GemmOp& gemm, const Matrix& a, const Matrix& b,
                          const SimOptions& options = {}) {
    const PhysicalArray array(config.shape.array_size());
    return simulate(config, route(array, config.shape), gemm, a, b, options);
}

inline bool verify(const SimResult& result, const Matrix& a, const Matrix& b) {
    return result.output == naive_multiply(a, b);
}

}  // namespace redas
