// Command-line front end: shapes, lower, estimate, schedule, simulate, sweep, report.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "redas/redas.hpp"

namespace {

using nlohmann::json;
using namespace redas;

struct Globals {
    std::string out;
    std::string format;
    std::uint64_t seed = 1;
};

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + g.out + "'");
    f << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GemmOp parse_gemm_arg(const std::string& text) {
    std::vector<std::int64_t> dims;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) dims.push_back(detail::parse_int(detail::trim(part), 0, "gemm"));
    if (dims.size() != 3) throw UsageError("--gemm expects M,K,N");
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw ValidationError("GEMM dimensions must be positive");
    return make_gemm(dims[0], dims[1], dims[2], "cli");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = detail::trim(part);
        if (!part.empty()) items.push_back(part);
    }
    return items;
}

json cost_json(const CostEstimate& c) {
    return {{"rows", c.rows},
            {"cols", c.cols},
            {"dataflow", to_string(c.dataflow)},
            {"t_preload", c.t_preload},
            {"t_process", c.t_process},
            {"t_offload", c.t_offload},
            {"tiles_a", c.tiles_a},
            {"tiles_b", c.tiles_b},
            {"t_total", c.t_total},
            {"mac_count", c.mac_count},
            {"pe_count", c.pe_count},
            {"utilization", c.utilization}};
}

std::string cmd_shapes(const Globals& g, int array_size) {
    const PhysicalArray array(array_size);
    const auto shapes = enumerate_shapes(array);
    if (g.format == "json") {
        json out = json::array();
        for (const auto& s : shapes) {
            out.push_back({{"r_l", s.rows}, {"c_l", s.cols}, {"kind", s.kind_name()}, {"r_s", s.sub_rows},
                           {"pe_used", s.pe_used()}});
        }
        return out.dump(2) + "\n";
    }
    std::string text;
    for (const auto& s : shapes) {
        text += std::to_string(s.rows) + "," + std::to_string(s.cols) + "," + s.kind_name() + "," +
                std::to_string(s.sub_rows) + "," + std::to_string(s.pe_used()) + "\n";
    }
    return text;
}

std::string cmd_lower(const Globals& g, const std::string& topology) {
    const auto gemms = lower_all(parse_topology(read_text(topology)));
    if (g.format == "json") {
        json out = json::array();
        for (const auto& op : gemms) out.push_back({{"name", op.source_layer}, {"M", op.m}, {"K", op.k}, {"N", op.n}});
        return out.dump(2) + "\n";
    }
    std::string text = "name,M,K,N\n";
    for (const auto& op : gemms) {
        text += op.source_layer + "," + std::to_string(op.m) + "," + std::to_string(op.k) + "," +
                std::to_string(op.n) + "\n";
    }
    return text;
}

std::string cmd_schedule(const std::string& topology, int array_size, const std::string& baselines) {
    std::vector<BaselineKind> kinds;
    for (const auto& b : split_list(baselines)) kinds.push_back(parse_baseline(b));
    const auto gemms = lower_all(parse_topology(read_text(topology)));
    const auto result = schedule_model(gemms, PhysicalArray(array_size), kinds);
    json out;
    out["array"] = array_size;
    out["total_cycles"] = result.total_cycles;
    out["mean_utilization"] = result.mean_utilization;
    out["entries"] = json::array();
    for (const auto& e : result.entries) {
        json j{{"layer", e.gemm.source_layer},
               {"M", e.gemm.m},
               {"K", e.gemm.k},
               {"N", e.gemm.n},
               {"shape", e.chosen.shape.label()},
               {"dataflow", to_string(e.chosen.dataflow)},
               {"cost", cost_json(e.cost)}};
        for (const auto& [kind, cost] : e.baseline_costs) j["baselines"][kind.name()] = cost_json(cost);
        out["entries"].push_back(std::move(j));
    }
    for (const auto& kind : kinds) {
        const auto total = result.baseline_total(kind);
        out["baselines"][kind.name()] = {{"total_cycles", total},
                                         {"speedup", static_cast<double>(total) / static_cast<double>(result.total_cycles)}};
    }
    return out.dump(2) + "\n";
}

int cmd_simulate(const Globals& g, const std::string& gemm_text, int array_size, const std::string& shape_text,
                 const std::string& dataflow, bool check, const std::string& trace_path) {
    const PhysicalArray array(array_size);
    const auto gemm = parse_gemm_arg(gemm_text);
    const Config config{parse_shape(array, shape_text), parse_dataflow(dataflow)};
    std::mt19937_64 rng(g.seed);
    const auto a = random_matrix(gemm.m, gemm.k, -8, 8, rng);
    const auto b = random_matrix(gemm.k, gemm.n, -8, 8, rng);
    const auto result = simulate(config, gemm, a, b, SimOptions{!trace_path.empty()});
    const auto model = estimate(config, gemm, array);

    if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        if (!trace) throw UsageError("cannot write '" + trace_path + "'");
        trace << "cycle,busy_pes,phase\n";
        for (std::size_t c = 0; c < result.busy_trace.size(); ++c) {
            trace << c << "," << result.busy_trace[c] << "," << to_string(result.phase_trace[c]) << "\n";
        }
    }
    json out{{"shape", config.shape.label()},
             {"dataflow", to_string(config.dataflow)},
             {"M", gemm.m},
             {"K", gemm.k},
             {"N", gemm.n},
             {"cycles", result.cycles},
             {"model_cycles", model.t_total},
             {"tiles", result.tiles},
             {"mac_total", result.mac_total},
             {"peak_busy", result.peak_busy()},
             {"measured_utilization", result.measured_utilization}};
    bool ok = true;
    if (check) {
        ok = verify(result, a, b);
        out["verified"] = ok;
    }
    emit(g, out.dump(2) + "\n");
    return ok ? 0 : 2;
}

int run(int argc, char** argv) {
    CLI::App app{"Reshapeable systolic array mapping and simulation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--out", g.out, "Write output to this file instead of stdout");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv", "svg"}));
    app.add_option("--seed", g.seed, "Random seed");

    int array_size = 0;
    std::string topology;
    std::string gemm_text;
    std::string shape_text;
    std::string dataflow;

    auto* shapes = app.add_subcommand("shapes", "List the logical shapes of an array");
    shapes->add_option("--array", array_size, "Physical array size")->required();

    auto* lower = app.add_subcommand("lower", "Lower a topology file to GEMMs");
    lower->add_option("--topology", topology, "Topology CSV")->required();

    auto* est = app.add_subcommand("estimate", "Analytical cost of one configuration");
    est->add_option("--gemm", gemm_text, "M,K,N")->required();
    est->add_option("--array", array_size)->required();
    est->add_option("--shape", shape_text, "RLxCL")->required();
    est->add_option("--dataflow", dataflow, "os|ws|is")->required();

    std::string baselines = "gemmini,planaria";
    auto* sched = app.add_subcommand("schedule", "Choose a configuration per layer");
    sched->add_option("--topology", topology)->required();
    sched->add_option("--array", array_size)->required();
    sched->add_option("--baselines", baselines, "Comma list of gemmini, planaria, ideal:B");

    bool check = false;
    std::string trace_path;
    auto* sim = app.add_subcommand("simulate", "Cycle-level simulation of one GEMM");
    sim->add_option("--gemm", gemm_text, "M,K,N")->required();
    sim->add_option("--array", array_size)->required();
    sim->add_option("--shape", shape_text, "RLxCL")->required();
    sim->add_option("--dataflow", dataflow, "os|ws|is")->required();
    sim->add_flag("--check", check, "Compare against the reference product");
    sim->add_option("--trace", trace_path, "Write the per-cycle busy trace as CSV");

    std::string arrays = "128";
    std::string modes = "redas,gemmini,planaria,ideal";
    std::int64_t budget = 1 << 14;
    bool cross = false;
    auto* sweep = app.add_subcommand("sweep", "Schedule a topology under several modes and array sizes");
    sweep->add_option("--topology", topology)->required();
    sweep->add_option("--arrays", arrays, "Comma list of array sizes");
    sweep->add_option("--modes", modes, "Comma list of redas, gemmini, planaria, ideal");
    sweep->add_option("--budget", budget, "PE budget of the ideal mode");
    sweep->add_flag("--cross-check", cross, "Verify every chosen config in the simulator");

    std::string in_path;
    auto* rep = app.add_subcommand("report", "Re-render a saved JSON or CSV report");
    rep->add_option("--in", in_path, "Report file (.json or .csv)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*shapes) {
            emit(g, cmd_shapes(g, array_size));
        } else if (*lower) {
            emit(g, cmd_lower(g, topology));
        } else if (*est) {
            const PhysicalArray array(array_size);
            const Config config{parse_shape(array, shape_text), parse_dataflow(dataflow)};
            emit(g, cost_json(estimate(config, parse_gemm_arg(gemm_text), array)).dump(2) + "\n");
        } else if (*sched) {
            emit(g, cmd_schedule(topology, array_size, baselines));
        } else if (*sim) {
            return cmd_simulate(g, gemm_text, array_size, shape_text, dataflow, check, trace_path);
        } else if (*sweep) {
            SweepSpec spec;
            spec.topology_path = topology;
            for (const auto& a : split_list(arrays)) spec.array_sizes.push_back(static_cast<int>(detail::parse_int(a, 0, "arrays")));
            for (const auto& m : split_list(modes)) spec.modes.push_back(parse_mode(m));
            spec.pe_budget = budget;
            spec.cross_check = cross;
            spec.seed = g.seed;
            emit(g, render(run_sweep(spec), g.format.empty() ? "json" : g.format));
        } else if (*rep) {
            const auto text = read_text(in_path);
            const bool is_json = in_path.size() >= 5 && in_path.substr(in_path.size() - 5) == ".json";
            Report report;
            if (is_json) {
                try {
                    report = report_from_json(json::parse(text));
                } catch (const json::parse_error& e) {
                    throw ParseError(std::string("malformed report JSON: ") + e.what());
                }
            } else {
                report = report_from_csv(text);
            }
            emit(g, render(report, g.format.empty() ? "svg" : g.format));
        }
    } catch (const VerificationFailure& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
