#pragma once

// Convolution layers, their GEMM lowering, and the CSV network descriptor.
//
// CSV schema, one convolution per row:
//   name,ifmap_h,ifmap_w,filt_h,filt_w,channels,num_filters,stride,padding[,groups]
// Lines starting with '#' and blank lines are ignored. `groups` is optional
// and defaults to 1; a depthwise convolution has groups == channels.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flexpipe/analytic.hpp"
#include "flexpipe/error.hpp"
#include "flexpipe/kv_file.hpp"

namespace flexpipe {

struct ConvLayer {
    std::string name;
    std::uint64_t ifmap_h = 1;
    std::uint64_t ifmap_w = 1;
    std::uint64_t filt_h = 1;
    std::uint64_t filt_w = 1;
    std::uint64_t channels = 1;
    std::uint64_t num_filters = 1;
    std::uint64_t stride = 1;
    std::uint64_t padding = 0;
    std::uint64_t groups = 1;

    /// Output height; zero when the filter does not fit.
    std::uint64_t out_h() const noexcept { return out_dim(ifmap_h, filt_h); }
    std::uint64_t out_w() const noexcept { return out_dim(ifmap_w, filt_w); }

    void validate() const {
        const auto bad = [&](const std::string& what) { throw ShapeError("layer '" + name + "': " + what); };
        if (!ifmap_h || !ifmap_w || !filt_h || !filt_w || !channels || !num_filters || !stride || !groups)
            bad("all dimensions except padding must be positive");
        if (channels % groups || num_filters % groups) bad("groups must divide channels and num_filters");
        if (out_h() < 1 || out_w() < 1) bad("output dimension is not positive");
    }

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;

private:
    std::uint64_t out_dim(std::uint64_t in, std::uint64_t f) const noexcept {
        const std::uint64_t padded = in + 2 * padding;
        return padded < f ? 0 : (padded - f) / stride + 1;
    }
};

/// im2col view of one convolution group: M = filters, N = filter volume,
/// T = output pixels.
inline GemmShape lower_conv_to_gemm(const ConvLayer& l) {
    l.validate();
    return GemmShape::make(l.num_filters / l.groups, l.filt_h * l.filt_w * (l.channels / l.groups),
                           l.out_h() * l.out_w());
}

enum class GroupedLowering {
    /// Several groups share one tile as a block-diagonal weight matrix.
    packed,
    /// One single-group GEMM per group, repeated.
    per_channel,
};

inline std::string_view to_string(GroupedLowering g) noexcept {
    return g == GroupedLowering::packed ? "packed" : "per-channel";
}

/// GEMMs executed for one layer on an R x C array. Ungrouped layers give a
/// single GEMM; grouped layers give one GEMM shape with a repetition count,
/// plus a remainder shape when packing leaves a partial tile.
inline std::vector<LayerGemm> lower_layer(const ConvLayer& l, const ArrayConfig& cfg,
                                          GroupedLowering policy = GroupedLowering::packed) {
    const GemmShape g = lower_conv_to_gemm(l);
    if (l.groups == 1) return {{l.name, g, 1}};
    if (policy == GroupedLowering::per_channel) return {{l.name, g, l.groups}};

    std::uint64_t pack = std::min(cfg.rows / g.n, cfg.cols / g.m);
    pack = std::clamp<std::uint64_t>(pack, 1, l.groups);
    std::vector<LayerGemm> out;
    out.push_back({l.name, GemmShape::make(g.m * pack, g.n * pack, g.t), l.groups / pack});
    if (const auto rem = l.groups % pack)
        out.push_back({l.name + "+rem", GemmShape::make(g.m * rem, g.n * rem, g.t), 1});
    return out;
}

inline std::vector<LayerGemm> lower_network(const std::vector<ConvLayer>& layers, const ArrayConfig& cfg,
                                            GroupedLowering policy = GroupedLowering::packed) {
    std::vector<LayerGemm> out;
    for (const auto& l : layers)
        for (auto& g : lower_layer(l, cfg, policy)) out.push_back(std::move(g));
    return out;
}

inline constexpr std::string_view kNetworkHeader =
    "name,ifmap_h,ifmap_w,filt_h,filt_w,channels,num_filters,stride,padding";

namespace detail {
inline std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}
}  // namespace detail

inline std::vector<ConvLayer> parse_network(std::istream& in, const std::string& source) {
    static const char* kFields[] = {"name",     "ifmap_h",     "ifmap_w", "filt_h",  "filt_w",
                                    "channels", "num_filters", "stride",  "padding", "groups"};
    std::vector<ConvLayer> layers;
    std::string raw;
    std::size_t line_no = 0;
    bool header_seen = false;
    bool has_groups = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = detail::split_csv(line);
        if (!header_seen) {
            const auto expected = detail::split_csv(kNetworkHeader);
            has_groups = fields.size() == expected.size() + 1;
            if (fields.size() != expected.size() && !has_groups)
                throw ParseError(source, line_no, 1, "header must be '" + std::string(kNetworkHeader) + "[,groups]'");
            for (std::size_t i = 0; i < fields.size(); ++i)
                if (fields[i] != kFields[i])
                    throw ParseError(source, line_no, i + 1, "expected header column '" + std::string(kFields[i]) +
                                                                 "', found '" + fields[i] + "'");
            header_seen = true;
            continue;
        }
        const std::size_t want = has_groups ? 10 : 9;
        if (fields.size() != want)
            throw ParseError(source, line_no, std::min(fields.size(), want) + 1,
                             "expected " + std::to_string(want) + " columns, found " + std::to_string(fields.size()));
        ConvLayer l;
        l.name = fields[0];
        if (l.name.empty()) throw ParseError(source, line_no, 1, "empty layer name");
        std::uint64_t* slots[] = {&l.ifmap_h,     &l.ifmap_w, &l.filt_h,  &l.filt_w, &l.channels,
                                  &l.num_filters, &l.stride,  &l.padding, &l.groups};
        for (std::size_t i = 1; i < want; ++i) {
            if (!parse_number(fields[i], *slots[i - 1]))
                throw ParseError(source, line_no, i + 1,
                                 std::string(kFields[i]) + ": not a non-negative integer '" + fields[i] + "'");
            if (*slots[i - 1] == 0 && i != 8)
                throw ParseError(source, line_no, i + 1, std::string(kFields[i]) + " must be positive");
        }
        try {
            l.validate();
        } catch (const ShapeError& e) {
            throw ParseError(source, line_no, 1, e.what());
        }
        layers.push_back(std::move(l));
    }
    if (!header_seen) throw ParseError(source, line_no, 1, "missing header");
    if (layers.empty()) throw ParseError(source, line_no, 1, "network has no layers");
    return layers;
}

inline std::vector<ConvLayer> load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse_network(in, path);
}

inline void write_network(std::ostream& os, const std::vector<ConvLayer>& layers) {
    bool grouped = false;
    for (const auto& l : layers) grouped |= l.groups != 1;
    os << kNetworkHeader << (grouped ? ",groups" : "") << '\n';
    for (const auto& l : layers) {
        os << l.name << ',' << l.ifmap_h << ',' << l.ifmap_w << ',' << l.filt_h << ',' << l.filt_w << ','
           << l.channels << ',' << l.num_filters << ',' << l.stride << ',' << l.padding;
        if (grouped) os << ',' << l.groups;
        os << '\n';
    }
}

}  // namespace flexpipe
