#include <gtest/gtest.h>

#include <regex>
#include <stack>

#include "redas/report.hpp"

using namespace redas;

namespace {

SweepSpec spec_for(std::string text, std::vector<int> arrays, std::vector<Mode> modes) {
    SweepSpec s;
    s.topology_text = std::move(text);
    s.array_sizes = std::move(arrays);
    s.modes = std::move(modes);
    return s;
}

const std::vector<Mode> kAllModes = {Mode::ReDas, Mode::GemminiFixed, Mode::PlanariaCoarse, Mode::IdealBudget};

// Minimal well-formedness check: every opened tag closes in order.
bool balanced_xml(const std::string& text, int& mode_groups) {
    std::stack<std::string> open;
    mode_groups = 0;
    const std::regex tag(R"(<(/?)([A-Za-z][\w:-]*)([^>]*?)(/?)>)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), tag); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        if (m[0].str().rfind("<?", 0) == 0) continue;
        const bool closing = !m[1].str().empty();
        const bool self = !m[4].str().empty();
        const std::string name = m[2];
        if (closing) {
            if (open.empty() || open.top() != name) return false;
            open.pop();
        } else if (!self) {
            open.push(name);
            if (name == "g" && m[3].str().find("class=\"mode\"") != std::string::npos) ++mode_groups;
        }
    }
    return open.empty();
}

}  // namespace

TEST(Sweep, Op62) {
    const auto rep = run_sweep(spec_for("name,M,K,N\nop62,49,28800,1152\n", {128}, kAllModes));
    ASSERT_EQ(rep.layers.size(), 1u);
    EXPECT_EQ(rep.layers[0].shape, "49x316");
    EXPECT_EQ(rep.layers[0].dataflow, "os");
    ASSERT_EQ(rep.aggregates.size(), 4u);
    EXPECT_NEAR(rep.aggregates[1].speedup, 262638.0 / 117948.0, 1e-12);
    EXPECT_NEAR(rep.aggregates[1].speedup, 2.23, 0.01);
    EXPECT_NEAR(rep.aggregates[2].speedup, 7.4, 0.01);
    EXPECT_DOUBLE_EQ(rep.aggregates[0].speedup, 1.0);
}

TEST(Sweep, EmptyModesRejected) {
    EXPECT_THROW(run_sweep(spec_for("name,M,K,N\na,1,1,1\n", {8}, {})), ValidationError);
}

TEST(Sweep, SpecValidation) {
    EXPECT_THROW(run_sweep(spec_for("name,M,K,N\na,1,1,1\n", {7}, {Mode::ReDas})), ValidationError);
    EXPECT_THROW(run_sweep(spec_for("name,M,K,N\na,1,1,1\n", {258}, {Mode::ReDas})), ValidationError);
    auto s = spec_for("name,M,K,N\na,1,1,1\n", {128}, {Mode::IdealBudget});
    s.pe_budget = 1000;
    EXPECT_THROW(run_sweep(s), ValidationError);
}

TEST(Sweep, ParseErrorsPropagate) {
    EXPECT_THROW(run_sweep(spec_for("name,M,K,N\na,1,x,1\n", {8}, {Mode::ReDas})), ParseError);
    EXPECT_THROW(run_sweep(spec_for("name,M,K,N\na,1,0,1\n", {8}, {Mode::ReDas})), ValidationError);
}

TEST(Sweep, CrossCheckVerifiesEveryRow) {
    auto s = spec_for("name,M,K,N\na,5,7,9\nb,1,12,18\nc,2,2,20\nd,8,16,1\ne,13,4,3\n", {6}, {Mode::ReDas, Mode::GemminiFixed});
    s.cross_check = true;
    const auto rep = run_sweep(s);
    for (const auto& row : rep.layers) {
        ASSERT_TRUE(row.verified.has_value());
        EXPECT_TRUE(*row.verified);
        ASSERT_TRUE(row.sim_cycles.has_value());
        EXPECT_EQ(*row.sim_cycles, row.model_cycles);
    }
}

TEST(Sweep, TotalsAreSumsOfRows) {
    const auto rep = run_sweep(spec_for("name,M,K,N\na,100,200,300\nb,1,4096,1000\nc,3000,27,64\n", {16, 32}, kAllModes));
    for (const auto& agg : rep.aggregates) {
        std::int64_t sum = 0;
        for (const auto& row : rep.layers) {
            if (row.array != agg.array) continue;
            for (const auto& c : row.modes)
                if (c.mode == agg.mode) sum += c.cycles;
        }
        EXPECT_EQ(agg.total_cycles, sum);
    }
    EXPECT_EQ(run_sweep(spec_for("name,M,K,N\na,100,200,300\n", {16}, kAllModes)),
              run_sweep(spec_for("name,M,K,N\na,100,200,300\n", {16}, kAllModes)));
}

TEST(Render, JsonCsvRoundTrip) {
    auto s = spec_for("name,M,K,N\na,5,7,9\nb,100,3,2000\n", {6, 8}, {Mode::ReDas, Mode::GemminiFixed, Mode::IdealBudget});
    s.cross_check = true;
    const auto rep = run_sweep(s);
    const auto from_json = report_from_json(nlohmann::json::parse(render(rep, Format::Json)));
    EXPECT_EQ(from_json, rep);
    const auto from_csv = report_from_csv(render(from_json, Format::Csv));
    EXPECT_EQ(from_csv, rep);
    EXPECT_EQ(report_from_json(nlohmann::json::parse(render(from_csv, Format::Json))), rep);
}

TEST(Render, CsvRowCount) {
    const auto rep = run_sweep(spec_for("name,M,K,N\na,1,2,3\nb,4,5,6\nc,7,8,9\n", {8, 16}, kAllModes));
    const auto csv = render(rep, "csv");
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    EXPECT_EQ(lines, 1 + 3 * 2 + 2);
}

TEST(Render, SvgWellFormed) {
    const auto rep = run_sweep(spec_for("name,M,K,N\na,1,2,3\nb,40,50,60\n", {8, 16}, kAllModes));
    const auto svg = render(rep, Format::Svg);
    int groups = 0;
    EXPECT_TRUE(balanced_xml(svg, groups));
    EXPECT_EQ(groups, 2 * 4);  // one group per mode in each panel
    EXPECT_NE(svg.find("<svg"), std::string::npos);
}

TEST(Render, UnknownFormat) {
    Report rep;
    EXPECT_THROW(render(rep, "pdf"), UsageError);
}

TEST(Render, MalformedInputs) {
    EXPECT_THROW(report_from_json(nlohmann::json::parse(R"({"modes": []})")), ParseError);
    EXPECT_THROW(report_from_csv("row,array\n"), ParseError);
}

TEST(Modes, Parse) {
    EXPECT_EQ(parse_mode("ReDas"), Mode::ReDas);
    EXPECT_EQ(parse_mode("ideal"), Mode::IdealBudget);
    EXPECT_THROW(parse_mode("tpu"), UsageError);
}
