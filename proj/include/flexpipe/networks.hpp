#pragma once

// Bundled layer tables for single-image 224x224 inference. They follow the
// public architecture definitions and are approximations of any particular
// trained model's deployment.

#include <string>
#include <string_view>
#include <vector>

#include "flexpipe/error.hpp"
#include "flexpipe/workloads.hpp"

namespace flexpipe {

namespace detail {
inline ConvLayer conv(std::string name, std::uint64_t hw, std::uint64_t f, std::uint64_t in_c, std::uint64_t out_c,
                      std::uint64_t stride, std::uint64_t pad, std::uint64_t groups = 1) {
    return {std::move(name), hw, hw, f, f, in_c, out_c, stride, pad, groups};
}
}  // namespace detail

/// ResNet-34. The 3x3 convolutions (and the stem) are numbered layer1..layer33;
/// projection shortcuts are named after the block they belong to.
inline std::vector<ConvLayer> resnet34() {
    using detail::conv;
    std::vector<ConvLayer> net{conv("layer1", 224, 7, 3, 64, 2, 3)};
    int n = 2;
    for (int i = 0; i < 6; ++i) net.push_back(conv("layer" + std::to_string(n++), 56, 3, 64, 64, 1, 1));
    struct Stage {
        std::uint64_t in_hw, in_c, out_c;
        int convs;
    };
    for (const Stage st : {Stage{56, 64, 128, 8}, Stage{28, 128, 256, 12}, Stage{14, 256, 512, 6}}) {
        const std::string first = "layer" + std::to_string(n++);
        net.push_back(conv(first, st.in_hw, 3, st.in_c, st.out_c, 2, 1));
        net.push_back(conv(first + "_proj", st.in_hw, 1, st.in_c, st.out_c, 2, 0));
        for (int i = 1; i < st.convs; ++i)
            net.push_back(conv("layer" + std::to_string(n++), st.in_hw / 2, 3, st.out_c, st.out_c, 1, 1));
    }
    net.push_back(conv("fc", 1, 1, 512, 1000, 1, 0));
    return net;
}

/// MobileNetV2 (width 1.0): inverted residual blocks with depthwise 3x3.
inline std::vector<ConvLayer> mobilenet_v2() {
    using detail::conv;
    std::vector<ConvLayer> net{conv("conv1", 224, 3, 3, 32, 2, 1)};
    struct Cfg {
        std::uint64_t expand, out_c;
        int repeats;
        std::uint64_t stride;
    };
    std::uint64_t hw = 112, in_c = 32;
    int b = 1;
    for (const Cfg c : {Cfg{1, 16, 1, 1}, Cfg{6, 24, 2, 2}, Cfg{6, 32, 3, 2}, Cfg{6, 64, 4, 2}, Cfg{6, 96, 3, 1},
                        Cfg{6, 160, 3, 2}, Cfg{6, 320, 1, 1}}) {
        for (int i = 0; i < c.repeats; ++i, ++b) {
            const std::uint64_t stride = i == 0 ? c.stride : 1;
            const std::uint64_t hidden = in_c * c.expand;
            const std::string p = "block" + std::to_string(b);
            if (c.expand != 1) net.push_back(conv(p + "_expand", hw, 1, in_c, hidden, 1, 0));
            net.push_back(conv(p + "_dw", hw, 3, hidden, hidden, stride, 1, hidden));
            hw = (hw + 2 - 3) / stride + 1;
            net.push_back(conv(p + "_project", hw, 1, hidden, c.out_c, 1, 0));
            in_c = c.out_c;
        }
    }
    net.push_back(conv("conv_last", 7, 1, 320, 1280, 1, 0));
    net.push_back(conv("fc", 1, 1, 1280, 1000, 1, 0));
    return net;
}

/// ConvNeXt-T: 4x4/4 stem plus 18 blocks of (7x7 depthwise, 1x1 expand x4,
/// 1x1 project), 55 entries. The 2x2 downsampling convolutions between stages
/// are not part of the table.
inline std::vector<ConvLayer> convnext_tiny() {
    using detail::conv;
    std::vector<ConvLayer> net{conv("stem", 224, 4, 3, 96, 4, 0)};
    const std::uint64_t dims[] = {96, 192, 384, 768};
    const int depths[] = {3, 3, 9, 3};
    std::uint64_t hw = 56;
    for (int s = 0; s < 4; ++s, hw /= 2) {
        const auto d = dims[s];
        for (int b = 0; b < depths[s]; ++b) {
            const std::string p = "stage" + std::to_string(s + 1) + "_block" + std::to_string(b + 1);
            net.push_back(conv(p + "_dw", hw, 7, d, d, 1, 3, d));
            net.push_back(conv(p + "_pw1", hw, 1, d, 4 * d, 1, 0));
            net.push_back(conv(p + "_pw2", hw, 1, 4 * d, d, 1, 0));
        }
    }
    return net;
}

inline std::vector<std::string> builtin_network_names() { return {"resnet34", "mobilenet", "convnext"}; }

inline std::vector<ConvLayer> builtin_network(std::string_view name) {
    if (name == "resnet34") return resnet34();
    if (name == "mobilenet") return mobilenet_v2();
    if (name == "convnext") return convnext_tiny();
    throw ConfigError("unknown builtin network '" + std::string(name) + "' (known: resnet34, mobilenet, convnext)");
}

}  // namespace flexpipe
