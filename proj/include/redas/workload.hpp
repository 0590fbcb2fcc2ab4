#pragma once

// DNN layer descriptions and their lowering to GEMM operations.
//
// Topology files follow the SCALE-sim layout:
//   Layer name, IFMAP Height, IFMAP Width, Filter Height, Filter Width,
//   Channels, Num Filter, Strides,
// with optional Kind, Hidden and Batch columns. A file whose header carries
// M, K and N columns instead is read as a list of explicit GEMMs.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "redas/error.hpp"

namespace redas {

enum class LayerKind { Conv2D, FullyConnected, LstmCell, Gemm };

inline std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::FullyConnected: return "FullyConnected";
        case LayerKind::LstmCell: return "LstmCell";
        case LayerKind::Gemm: return "Gemm";
    }
    return "?";
}

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::Conv2D;
    std::int64_t ifmap_h = 1;
    std::int64_t ifmap_w = 1;
    std::int64_t filter_h = 1;
    std::int64_t filter_w = 1;
    std::int64_t channels = 1;
    std::int64_t num_filters = 1;
    std::int64_t stride = 1;
    std::int64_t batch = 1;
    std::int64_t hidden = 1;  // LstmCell only
    std::int64_t m = 1;       // Gemm only
    std::int64_t k = 1;
    std::int64_t n = 1;

    bool operator==(const LayerSpec&) const = default;
};

struct GemmOp {
    std::int64_t m = 1;
    std::int64_t k = 1;
    std::int64_t n = 1;
    std::string source_layer;

    std::int64_t macs() const { return m * k * n; }
    bool operator==(const GemmOp&) const = default;
};

inline GemmOp make_gemm(std::int64_t m, std::int64_t k, std::int64_t n, std::string source = {}) {
    if (m < 1 || k < 1 || n < 1) {
        throw ValidationError("GEMM dimensions must be positive, got M=" + std::to_string(m) +
                              " K=" + std::to_string(k) + " N=" + std::to_string(n));
    }
    return GemmOp{m, k, n, std::move(source)};
}

// Throws ValidationError naming the layer and the offending field.
inline void validate(const LayerSpec& layer) {
    auto positive = [&](std::int64_t value, const char* field) {
        if (value < 1) {
            throw ValidationError("layer '" + layer.name + "': " + field + " must be positive, got " +
                                  std::to_string(value));
        }
    };
    positive(layer.ifmap_h, "ifmap_h");
    positive(layer.ifmap_w, "ifmap_w");
    positive(layer.filter_h, "filter_h");
    positive(layer.filter_w, "filter_w");
    positive(layer.channels, "channels");
    positive(layer.num_filters, "num_filters");
    positive(layer.stride, "stride");
    positive(layer.batch, "batch");
    positive(layer.hidden, "hidden");
    positive(layer.m, "m");
    positive(layer.k, "k");
    positive(layer.n, "n");
    if (layer.kind == LayerKind::Conv2D &&
        (layer.ifmap_h < layer.filter_h || layer.ifmap_w < layer.filter_w)) {
        throw ValidationError("layer '" + layer.name + "': filter larger than ifmap");
    }
}

// Conv2D uses im2col with valid padding; LSTM cells become one fused
// four-gate GEMM.
inline std::vector<GemmOp> lower(const LayerSpec& layer) {
    validate(layer);
    switch (layer.kind) {
        case LayerKind::Conv2D: {
            const std::int64_t h_out = (layer.ifmap_h - layer.filter_h) / layer.stride + 1;
            const std::int64_t w_out = (layer.ifmap_w - layer.filter_w) / layer.stride + 1;
            return {GemmOp{h_out * w_out * layer.batch, layer.filter_h * layer.filter_w * layer.channels,
                           layer.num_filters, layer.name}};
        }
        case LayerKind::FullyConnected:
            return {GemmOp{layer.batch, layer.channels, layer.num_filters, layer.name}};
        case LayerKind::LstmCell:
            return {GemmOp{layer.batch, layer.channels + layer.hidden, 4 * layer.hidden, layer.name}};
        case LayerKind::Gemm:
            return {GemmOp{layer.m, layer.k, layer.n, layer.name}};
    }
    return {};
}

inline std::vector<GemmOp> lower_all(const std::vector<LayerSpec>& layers) {
    std::vector<GemmOp> out;
    for (const auto& layer : layers) {
        auto ops = lower(layer);
        out.insert(out.end(), ops.begin(), ops.end());
    }
    return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

inline std::string lower_ascii(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    // A trailing comma leaves one empty field behind.
    if (fields.size() > 1 && fields.back().empty()) fields.pop_back();
    return fields;
}

inline std::vector<std::pair<int, std::string>> nonblank_lines(std::string_view text) {
    std::vector<std::pair<int, std::string>> lines;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        lines.emplace_back(number, line);
    }
    return lines;
}

inline std::int64_t parse_int(const std::string& field, int line, const std::string& column) {
    std::int64_t value = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError("row " + std::to_string(line) + ": column '" + column +
                         "' is not an integer: '" + field + "'");
    }
    return value;
}

inline LayerKind parse_kind(const std::string& text, int line) {
    const auto key = lower_ascii(text);
    if (key.empty() || key == "conv2d" || key == "conv") return LayerKind::Conv2D;
    if (key == "fullyconnected" || key == "fc" || key == "linear") return LayerKind::FullyConnected;
    if (key == "lstmcell" || key == "lstm") return LayerKind::LstmCell;
    if (key == "gemm") return LayerKind::Gemm;
    throw ParseError("row " + std::to_string(line) + ": unknown layer kind '" + text + "'");
}

}  // namespace detail

// Reads a SCALE-sim topology or a `name,M,K,N` GEMM list (detected from the
// header). Row numbers in errors are 1-based file lines.
inline std::vector<LayerSpec> parse_topology(std::string_view csv_text) {
    const auto lines = detail::nonblank_lines(csv_text);
    if (lines.empty()) throw ParseError("topology has no header row");

    const auto header = detail::split_csv_line(lines.front().second);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[detail::lower_ascii(header[i])] = i;

    const bool gemm_list = !column.contains("layer name") && column.contains("m") && column.contains("k") &&
                           column.contains("n");
    static const char* const scale_sim_columns[] = {"layer name",    "ifmap height", "ifmap width",
                                                    "filter height", "filter width", "channels",
                                                    "num filter",    "strides"};
    if (!gemm_list) {
        for (const char* name : scale_sim_columns) {
            if (!column.contains(name)) {
                throw ParseError("row " + std::to_string(lines.front().first) + ": header lacks column '" +
                                 name + "'");
            }
        }
    }

    std::vector<LayerSpec> layers;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& [line_no, text] = lines[li];
        const auto fields = detail::split_csv_line(text);
        auto field = [&](const std::string& name) -> std::optional<std::string> {
            const auto it = column.find(name);
            if (it == column.end()) return std::nullopt;
            if (it->second >= fields.size()) {
                throw ParseError("row " + std::to_string(line_no) + ": expected at least " +
                                 std::to_string(it->second + 1) + " fields, found " +
                                 std::to_string(fields.size()));
            }
            return fields[it->second];
        };
        auto integer = [&](const std::string& name) { return detail::parse_int(*field(name), line_no, name); };
        // Optional trailing columns may be left off a row entirely.
        auto optional_field = [&](const std::string& name) -> std::optional<std::string> {
            const auto it = column.find(name);
            if (it == column.end() || it->second >= fields.size()) return std::nullopt;
            return fields[it->second];
        };
        auto optional_integer = [&](const std::string& name, std::int64_t fallback) {
            const auto value = optional_field(name);
            return (value && !value->empty()) ? detail::parse_int(*value, line_no, name) : fallback;
        };

        LayerSpec layer;
        if (gemm_list) {
            const auto name_col = column.contains("name") ? "name" : header.front();
            layer.name = *field(detail::lower_ascii(name_col));
            layer.kind = LayerKind::Gemm;
            layer.m = integer("m");
            layer.k = integer("k");
            layer.n = integer("n");
        } else {
            layer.name = *field("layer name");
            layer.ifmap_h = integer("ifmap height");
            layer.ifmap_w = integer("ifmap width");
            layer.filter_h = integer("filter height");
            layer.filter_w = integer("filter width");
            layer.channels = integer("channels");
            layer.num_filters = integer("num filter");
            layer.stride = integer("strides");
            const auto kind = optional_field("kind");
            layer.kind = (kind && !kind->empty()) ? detail::parse_kind(*kind, line_no) : LayerKind::Conv2D;
            layer.hidden = optional_integer("hidden", 1);
            layer.batch = optional_integer("batch", 1);
            if (layer.kind == LayerKind::Gemm) {
                layer.m = optional_integer("m", 0);
                layer.k = optional_integer("k", 0);
                layer.n = optional_integer("n", 0);
            }
        }
        try {
            validate(layer);
        } catch (const ValidationError& e) {
            throw ValidationError("row " + std::to_string(line_no) + ": " + e.what());
        }
        layers.push_back(std::move(layer));
    }
    return layers;
}

}  // namespace redas
