#pragma once

// Experiment sweeps over topologies, array sizes and comparison modes, and
// their JSON / CSV / SVG renderings.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "redas/costmodel.hpp"
#include "redas/cyclesim.hpp"
#include "redas/error.hpp"
#include "redas/scheduler.hpp"
#include "redas/workload.hpp"

namespace redas {

enum class Mode { ReDas, GemminiFixed, PlanariaCoarse, IdealBudget };

inline const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::ReDas: return "redas";
        case Mode::GemminiFixed: return "gemmini";
        case Mode::PlanariaCoarse: return "planaria";
        case Mode::IdealBudget: return "ideal";
    }
    return "?";
}

inline Mode parse_mode(const std::string& text) {
    const auto key = detail::lower_ascii(text);
    if (key == "redas") return Mode::ReDas;
    if (key == "gemmini") return Mode::GemminiFixed;
    if (key == "planaria") return Mode::PlanariaCoarse;
    if (key == "ideal") return Mode::IdealBudget;
    throw UsageError("unknown mode '" + text + "' (expected redas, gemmini, planaria or ideal)");
}

struct SweepSpec {
    std::string topology_path;
    std::string topology_text;  // used instead of the file when non-empty
    std::vector<int> array_sizes;
    std::vector<Mode> modes;
    std::int64_t pe_budget = 1 << 14;
    bool cross_check = false;
    std::uint64_t seed = 1;
};

struct ModeCell {
    std::string mode;
    std::int64_t cycles = 0;
    double utilization = 0.0;
    std::string config;  // e.g. "49x316/os"
    bool operator==(const ModeCell&) const = default;
};

struct LayerRow {
    int array = 0;
    std::string layer;
    std::int64_t m = 0;
    std::int64_t k = 0;
    std::int64_t n = 0;
    std::string shape;
    std::string dataflow;
    std::int64_t model_cycles = 0;
    std::optional<std::int64_t> sim_cycles;
    std::optional<bool> verified;
    std::vector<ModeCell> modes;
    bool operator==(const LayerRow&) const = default;
};

struct AggregateRow {
    int array = 0;
    std::string mode;
    std::int64_t total_cycles = 0;
    double speedup = 1.0;  // total cycles of this mode / total cycles of ReDas
    double mean_utilization = 0.0;
    bool operator==(const AggregateRow&) const = default;
};

struct Report {
    std::vector<std::string> modes;
    std::vector<LayerRow> layers;
    std::vector<AggregateRow> aggregates;
    bool operator==(const Report&) const = default;
};

namespace report_detail {

inline std::string config_label(int rows, int cols, Dataflow df) {
    return std::to_string(rows) + "x" + std::to_string(cols) + "/" + to_string(df);
}

inline void validate(const SweepSpec& spec) {
    if (spec.modes.empty()) throw ValidationError("sweep needs at least one mode");
    if (spec.array_sizes.empty()) throw ValidationError("sweep needs at least one array size");
    std::int64_t largest = 0;
    for (int r : spec.array_sizes) {
        if (r < 2 || r > 256 || r % 2 != 0) {
            throw ValidationError("array size " + std::to_string(r) + " must be even and within [2, 256]");
        }
        largest = std::max<std::int64_t>(largest, r);
    }
    const bool wants_ideal = std::find(spec.modes.begin(), spec.modes.end(), Mode::IdealBudget) != spec.modes.end();
    if (wants_ideal && spec.pe_budget < largest * largest) {
        throw ValidationError("ideal PE budget " + std::to_string(spec.pe_budget) + " is below the largest array (" +
                              std::to_string(largest * largest) + " PEs)");
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace report_detail

inline Report build_report(const std::vector<GemmOp>& gemms, const PhysicalArray& array, const std::vector<Mode>& modes,
                           std::int64_t pe_budget) {
    std::vector<BaselineKind> baselines;
    for (Mode mode : modes) {
        if (mode == Mode::GemminiFixed) baselines.push_back(BaselineKind::gemmini());
        if (mode == Mode::PlanariaCoarse) baselines.push_back(BaselineKind::planaria());
        if (mode == Mode::IdealBudget) baselines.push_back(BaselineKind::ideal(pe_budget));
    }
    const auto schedule = schedule_model(gemms, array, baselines);

    Report report;
    for (Mode mode : modes) report.modes.emplace_back(to_string(mode));

    auto cell_for = [&](Mode mode, const ScheduleEntry& entry) {
        const CostEstimate* cost = &entry.cost;
        if (mode == Mode::GemminiFixed) cost = entry.baseline(BaselineKind::gemmini());
        if (mode == Mode::PlanariaCoarse) cost = entry.baseline(BaselineKind::planaria());
        if (mode == Mode::IdealBudget) cost = entry.baseline(BaselineKind::ideal(pe_budget));
        return ModeCell{to_string(mode), cost->t_total, cost->utilization,
                        report_detail::config_label(cost->rows, cost->cols, cost->dataflow)};
    };

    for (const auto& entry : schedule.entries) {
        LayerRow row;
        row.array = array.size();
        row.layer = entry.gemm.source_layer;
        row.m = entry.gemm.m;
        row.k = entry.gemm.k;
        row.n = entry.gemm.n;
        row.shape = entry.chosen.shape.label();
        row.dataflow = to_string(entry.chosen.dataflow);
        row.model_cycles = entry.cost.t_total;
        for (Mode mode : modes) row.modes.push_back(cell_for(mode, entry));
        report.layers.push_back(std::move(row));
    }

    const double redas_total = static_cast<double>(schedule.total_cycles);
    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        AggregateRow agg;
        agg.array = array.size();
        agg.mode = to_string(modes[mi]);
        double weighted = 0.0;
        double macs = 0.0;
        for (std::size_t li = 0; li < schedule.entries.size(); ++li) {
            const auto& c = report.layers[li].modes[mi];
            const double mac = static_cast<double>(schedule.entries[li].gemm.macs());
            agg.total_cycles += c.cycles;
            weighted += c.utilization * mac;
            macs += mac;
        }
        agg.mean_utilization = weighted / macs;
        agg.speedup = static_cast<double>(agg.total_cycles) / redas_total;
        report.aggregates.push_back(agg);
    }
    return report;
}

// Runs the chosen configuration of every layer through the cycle simulator.
// Throws VerificationFailure on the first mismatching product.
inline void cross_check(Report& report, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& row : report.layers) {
        const PhysicalArray array(row.array);
        const auto shape = parse_shape(array, row.shape);
        const Config config{shape, parse_dataflow(row.dataflow)};
        const auto gemm = make_gemm(row.m, row.k, row.n, row.layer);
        const auto a = random_matrix(gemm.m, gemm.k, -8, 8, rng);
        const auto b = random_matrix(gemm.k, gemm.n, -8, 8, rng);
        const auto result = simulate(config, gemm, a, b, SimOptions{false});
        row.sim_cycles = result.cycles;
        row.verified = verify(result, a, b);
        if (!*row.verified) {
            throw VerificationFailure("layer '" + row.layer + "' on " + row.shape + "/" + row.dataflow +
                                      " produced a wrong product");
        }
    }
}

inline Report run_sweep(const SweepSpec& spec) {
    report_detail::validate(spec);
    const auto text = spec.topology_text.empty() ? report_detail::read_file(spec.topology_path) : spec.topology_text;
    const auto gemms = lower_all(parse_topology(text));
    if (gemms.empty()) throw ValidationError("topology has no layers");

    Report report;
    for (Mode mode : spec.modes) report.modes.emplace_back(to_string(mode));
    for (int size : spec.array_sizes) {
        auto part = build_report(gemms, PhysicalArray(size), spec.modes, spec.pe_budget);
        if (spec.cross_check) cross_check(part, spec.seed);
        report.layers.insert(report.layers.end(), part.layers.begin(), part.layers.end());
        report.aggregates.insert(report.aggregates.end(), part.aggregates.begin(), part.aggregates.end());
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering

enum class Format { Json, Csv, Svg };

inline Format parse_format(const std::string& text) {
    const auto key = detail::lower_ascii(text);
    if (key == "json") return Format::Json;
    if (key == "csv") return Format::Csv;
    if (key == "svg") return Format::Svg;
    throw UsageError("unknown format '" + text + "' (expected json, csv or svg)");
}

inline nlohmann::json to_json(const Report& report) {
    using nlohmann::json;
    json out;
    out["modes"] = report.modes;
    out["layers"] = json::array();
    for (const auto& row : report.layers) {
        json j{{"array", row.array},   {"layer", row.layer},       {"M", row.m},
               {"K", row.k},           {"N", row.n},               {"shape", row.shape},
               {"dataflow", row.dataflow}, {"model_cycles", row.model_cycles}};
        j["sim_cycles"] = row.sim_cycles ? json(*row.sim_cycles) : json(nullptr);
        j["verified"] = row.verified ? json(*row.verified) : json(nullptr);
        j["modes"] = json::array();
        for (const auto& c : row.modes) {
            j["modes"].push_back({{"mode", c.mode}, {"cycles", c.cycles}, {"utilization", c.utilization}, {"config", c.config}});
        }
        out["layers"].push_back(std::move(j));
    }
    out["aggregates"] = json::array();
    for (const auto& a : report.aggregates) {
        out["aggregates"].push_back({{"array", a.array},
                                     {"mode", a.mode},
                                     {"total_cycles", a.total_cycles},
                                     {"speedup", a.speedup},
                                     {"mean_utilization", a.mean_utilization}});
    }
    return out;
}

inline Report report_from_json(const nlohmann::json& j) {
    try {
        Report report;
        report.modes = j.at("modes").get<std::vector<std::string>>();
        for (const auto& lj : j.at("layers")) {
            LayerRow row;
            row.array = lj.at("array").get<int>();
            row.layer = lj.at("layer").get<std::string>();
            row.m = lj.at("M").get<std::int64_t>();
            row.k = lj.at("K").get<std::int64_t>();
            row.n = lj.at("N").get<std::int64_t>();
            row.shape = lj.at("shape").get<std::string>();
            row.dataflow = lj.at("dataflow").get<std::string>();
            row.model_cycles = lj.at("model_cycles").get<std::int64_t>();
            if (lj.contains("sim_cycles") && !lj["sim_cycles"].is_null()) row.sim_cycles = lj["sim_cycles"].get<std::int64_t>();
            if (lj.contains("verified") && !lj["verified"].is_null()) row.verified = lj["verified"].get<bool>();
            for (const auto& cj : lj.at("modes")) {
                row.modes.push_back(ModeCell{cj.at("mode").get<std::string>(), cj.at("cycles").get<std::int64_t>(),
                                             cj.at("utilization").get<double>(), cj.at("config").get<std::string>()});
            }
            report.layers.push_back(std::move(row));
        }
        for (const auto& aj : j.at("aggregates")) {
            report.aggregates.push_back(AggregateRow{aj.at("array").get<int>(), aj.at("mode").get<std::string>(),
                                                     aj.at("total_cycles").get<std::int64_t>(),
                                                     aj.at("speedup").get<double>(),
                                                     aj.at("mean_utilization").get<double>()});
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed report JSON: ") + e.what());
    }
}

namespace report_detail {

inline std::string fmt_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

inline std::vector<std::string> csv_header(const std::vector<std::string>& modes) {
    std::vector<std::string> cols = {"row",  "array",        "layer",      "M",       "K",       "N",
                                     "shape", "dataflow", "model_cycles", "sim_cycles", "verified"};
    for (const auto& m : modes) {
        for (const char* suffix : {"_cycles", "_utilization", "_speedup", "_config"}) cols.push_back(m + suffix);
    }
    return cols;
}

inline std::string join(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += fields[i];
    }
    return line + "\n";
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace report_detail

// One header row, one row per layer (row = "layer") and one row per array
// size with the per-mode totals (row = "total").
inline std::string render_csv(const Report& report) {
    using report_detail::fmt_double;
    std::string out = report_detail::join(report_detail::csv_header(report.modes));
    for (const auto& row : report.layers) {
        std::vector<std::string> f = {"layer",
                                      std::to_string(row.array),
                                      row.layer,
                                      std::to_string(row.m),
                                      std::to_string(row.k),
                                      std::to_string(row.n),
                                      row.shape,
                                      row.dataflow,
                                      std::to_string(row.model_cycles),
                                      row.sim_cycles ? std::to_string(*row.sim_cycles) : "",
                                      row.verified ? (*row.verified ? "true" : "false") : ""};
        for (const auto& c : row.modes) {
            f.push_back(std::to_string(c.cycles));
            f.push_back(fmt_double(c.utilization));
            f.push_back(fmt_double(static_cast<double>(c.cycles) / static_cast<double>(row.model_cycles)));
            f.push_back(c.config);
        }
        out += report_detail::join(f);
    }
    std::vector<int> arrays;
    for (const auto& a : report.aggregates) {
        if (std::find(arrays.begin(), arrays.end(), a.array) == arrays.end()) arrays.push_back(a.array);
    }
    for (int array : arrays) {
        std::vector<std::string> f = {"total", std::to_string(array), "", "", "", "", "", "", "", "", ""};
        for (const auto& mode : report.modes) {
            const auto it = std::find_if(report.aggregates.begin(), report.aggregates.end(),
                                         [&](const AggregateRow& a) { return a.array == array && a.mode == mode; });
            if (it == report.aggregates.end()) {
                f.insert(f.end(), {"", "", "", ""});
                continue;
            }
            f.push_back(std::to_string(it->total_cycles));
            f.push_back(fmt_double(it->mean_utilization));
            f.push_back(fmt_double(it->speedup));
            f.push_back("");
        }
        out += report_detail::join(f);
    }
    return out;
}

inline Report report_from_csv(std::string_view text) {
    const auto lines = detail::nonblank_lines(text);
    if (lines.empty()) throw ParseError("report CSV is empty");
    const auto header = detail::split_csv_line(lines.front().second);
    const std::size_t fixed = 11;
    if (header.size() < fixed || (header.size() - fixed) % 4 != 0) throw ParseError("report CSV header is malformed");
    Report report;
    for (std::size_t i = fixed; i < header.size(); i += 4) {
        report.modes.push_back(header[i].substr(0, header[i].size() - std::string("_cycles").size()));
    }
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& [no, line] = lines[li];
        // Keep empty trailing fields; split_csv_line drops one.
        auto f = detail::split_csv_line(line + ",x");
        f.pop_back();
        if (f.size() != header.size()) throw ParseError("row " + std::to_string(no) + ": wrong field count");
        auto integer = [&](std::size_t i) { return detail::parse_int(f[i], no, header[i]); };
        auto real = [&](std::size_t i) {
            try {
                return std::stod(f[i]);
            } catch (const std::logic_error&) {
                throw ParseError("row " + std::to_string(no) + ": column '" + header[i] + "' is not a number");
            }
        };
        if (f[0] == "layer") {
            LayerRow row;
            row.array = static_cast<int>(integer(1));
            row.layer = f[2];
            row.m = integer(3);
            row.k = integer(4);
            row.n = integer(5);
            row.shape = f[6];
            row.dataflow = f[7];
            row.model_cycles = integer(8);
            if (!f[9].empty()) row.sim_cycles = integer(9);
            if (!f[10].empty()) row.verified = f[10] == "true";
            for (std::size_t mi = 0; mi < report.modes.size(); ++mi) {
                const std::size_t base = fixed + 4 * mi;
                row.modes.push_back(ModeCell{report.modes[mi], integer(base), real(base + 1), f[base + 3]});
            }
            report.layers.push_back(std::move(row));
        } else if (f[0] == "total") {
            for (std::size_t mi = 0; mi < report.modes.size(); ++mi) {
                const std::size_t base = fixed + 4 * mi;
                if (f[base].empty()) continue;
                report.aggregates.push_back(AggregateRow{static_cast<int>(integer(1)), report.modes[mi],
                                                         integer(base), real(base + 2), real(base + 1)});
            }
        } else {
            throw ParseError("row " + std::to_string(no) + ": unknown row type '" + f[0] + "'");
        }
    }
    return report;
}

// Two panels of grouped bars (total cycles, mean utilization); one group per
// mode with one bar per array size.
inline std::string render_svg(const Report& report) {
    using report_detail::xml_escape;
    std::vector<int> arrays;
    for (const auto& a : report.aggregates) {
        if (std::find(arrays.begin(), arrays.end(), a.array) == arrays.end()) arrays.push_back(a.array);
    }
    const int bar_w = 18;
    const int group_gap = 24;
    const int group_w = static_cast<int>(arrays.size()) * bar_w + group_gap;
    const int panel_w = 60 + static_cast<int>(report.modes.size()) * group_w;
    const int panel_h = 220;
    const int width = 2 * panel_w + 40;
    const int height = panel_h + 90;
    static const char* const palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"};

    std::int64_t max_cycles = 1;
    for (const auto& a : report.aggregates) max_cycles = std::max(max_cycles, a.total_cycles);

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    auto panel = [&](int x0, const char* title, auto value_of, double max_value) {
        svg << "  <g class=\"panel\" transform=\"translate(" << x0 << ",30)\">\n";
        svg << "    <text x=\"0\" y=\"-10\" font-family=\"sans-serif\" font-size=\"13\">" << title << "</text>\n";
        svg << "    <line x1=\"40\" y1=\"" << panel_h << "\" x2=\"" << panel_w << "\" y2=\"" << panel_h
            << "\" stroke=\"black\"/>\n";
        for (std::size_t mi = 0; mi < report.modes.size(); ++mi) {
            const auto& mode = report.modes[mi];
            const int gx = 50 + static_cast<int>(mi) * group_w;
            svg << "    <g class=\"mode\" data-mode=\"" << xml_escape(mode) << "\">\n";
            for (std::size_t ai = 0; ai < arrays.size(); ++ai) {
                const auto it = std::find_if(report.aggregates.begin(), report.aggregates.end(), [&](const AggregateRow& a) {
                    return a.array == arrays[ai] && a.mode == mode;
                });
                if (it == report.aggregates.end()) continue;
                const double v = value_of(*it);
                const int h = max_value > 0 ? static_cast<int>(v / max_value * (panel_h - 10)) : 0;
                svg << "      <rect x=\"" << gx + static_cast<int>(ai) * bar_w << "\" y=\"" << panel_h - h
                    << "\" width=\"" << bar_w - 2 << "\" height=\"" << h << "\" fill=\"" << palette[ai % 6]
                    << "\"><title>" << xml_escape(mode) << " R=" << arrays[ai] << ": "
                    << report_detail::fmt_double(v) << "</title></rect>\n";
            }
            svg << "      <text x=\"" << gx << "\" y=\"" << panel_h + 16
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(mode) << "</text>\n";
            svg << "    </g>\n";
        }
        svg << "  </g>\n";
    };
    panel(10, "Total cycles", [](const AggregateRow& a) { return static_cast<double>(a.total_cycles); },
          static_cast<double>(max_cycles));
    panel(20 + panel_w, "Mean PE utilization", [](const AggregateRow& a) { return a.mean_utilization; }, 1.0);

    svg << "  <g class=\"legend\">\n";
    for (std::size_t ai = 0; ai < arrays.size(); ++ai) {
        const int x = 10 + static_cast<int>(ai) * 90;
        svg << "    <rect x=\"" << x << "\" y=\"" << height - 22 << "\" width=\"12\" height=\"12\" fill=\""
            << palette[ai % 6] << "\"/>\n";
        svg << "    <text x=\"" << x + 16 << "\" y=\"" << height - 12 << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << arrays[ai] << "x" << arrays[ai] << "</text>\n";
    }
    svg << "  </g>\n</svg>\n";
    return svg.str();
}

inline std::string render(const Report& report, Format format) {
    switch (format) {
        case Format::Json: return to_json(report).dump(2) + "\n";
        case Format::Csv: return render_csv(report);
        case Format::Svg: return render_svg(report);
    }
    throw UsageError("unknown format");
}

inline std::string render(const Report& report, const std::string& format) { return render(report, parse_format(format)); }

}  // namespace redas
