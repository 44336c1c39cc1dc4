// Deconvolution head geometry: output-shape arithmetic for the stride-2
// transposed-convolution stack on top of a stride-32 backbone, plus a naive
// scatter-accumulate forward pass for shape and linearity checks.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// Geometry of the upsampling head. Input resolution must be divisible by
/// the backbone stride; each deconv layer doubles the spatial dimensions.
struct HeadConfig {
    int input_h = 256;
    int input_w = 192;
    int backbone_stride = 32;
    int n_deconv_layers = 3;
    int deconv_kernel = 4;
    int deconv_stride = 2;
    int n_filters = 256;
    int n_joints = 17;
};

/// Padding / output-padding pair that realizes exact x2 upsampling for the
/// supported kernel sizes (4 -> p1/op0, 3 -> p1/op1, 2 -> p0/op0).
struct DeconvPadding {
    int padding = 0;
    int output_padding = 0;
};

inline DeconvPadding doubling_padding(int kernel) {
    switch (kernel) {
        case 4: return {1, 0};
        case 3: return {1, 1};
        case 2: return {0, 0};
        default:
            throw InvalidConfig("unsupported deconv kernel " +
                                std::to_string(kernel));
    }
}

/// Final heatmap shape (height, width) produced by the head.
inline std::pair<int, int> output_shape(const HeadConfig& cfg) {
    if (cfg.backbone_stride <= 0 || cfg.n_deconv_layers < 0)
        throw InvalidConfig("invalid stride or layer count");
    if (cfg.deconv_stride != 2)
        throw InvalidConfig("deconv stride must be 2");
    doubling_padding(cfg.deconv_kernel);  // validates the kernel size
    if (cfg.input_h % cfg.backbone_stride != 0 ||
        cfg.input_w % cfg.backbone_stride != 0)
        throw InvalidConfig("input size must be divisible by backbone stride");
    int h = cfg.input_h / cfg.backbone_stride;
    int w = cfg.input_w / cfg.backbone_stride;
    for (int i = 0; i < cfg.n_deconv_layers; ++i) {
        h *= 2;
        w *= 2;
    }
    return {h, w};
}

/// Dense multi-channel activation grid, indexed [channel][y][x].
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

/// Transposed-convolution weights, indexed [in_channel][out_channel][ky][kx].
struct DeconvWeights {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    std::vector<double> values;

    DeconvWeights() = default;
    DeconvWeights(int in_c, int out_c, int k)
        : in_channels(in_c), out_channels(out_c), kernel(k),
          values(static_cast<std::size_t>(in_c) * out_c * k * k, 0.0) {}

    double& at(int ic, int oc, int ky, int kx) {
        return values[((static_cast<std::size_t>(ic) * out_channels + oc) * kernel + ky) *
                          kernel + kx];
    }
    double at(int ic, int oc, int ky, int kx) const {
        return values[((static_cast<std::size_t>(ic) * out_channels + oc) * kernel + ky) *
                          kernel + kx];
    }
};

/// Deterministic random weights in [-0.5, 0.5] for geometry experiments.
inline DeconvWeights random_deconv_weights(int in_channels, int out_channels,
                                           int kernel, std::uint64_t seed) {
    DeconvWeights w(in_channels, out_channels, kernel);
    std::mt19937_64 rng(seed);
    for (double& v : w.values)
        v = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    return w;
}

/// Reference transposed convolution by scatter-accumulate. The output size is
/// stride*(in-1) + kernel - 2*padding + output_padding per spatial dimension;
/// accumulation order is fixed (input-major) so results are deterministic.
inline FeatureMap deconv_forward(const FeatureMap& input,
                                 const DeconvWeights& weights, int stride,
                                 int padding, int output_padding) {
    if (input.channels != weights.in_channels)
        throw ShapeMismatch("input channels " + std::to_string(input.channels) +
                            " do not match weights " +
                            std::to_string(weights.in_channels));
    if (stride < 1 || padding < 0 || output_padding < 0 ||
        output_padding >= stride)
        throw InvalidConfig("invalid deconv stride/padding");
    const int k = weights.kernel;
    const int out_h = stride * (input.height - 1) + k - 2 * padding + output_padding;
    const int out_w = stride * (input.width - 1) + k - 2 * padding + output_padding;
    if (out_h <= 0 || out_w <= 0)
        throw ShapeMismatch("padding exceeds the scattered extent");
    FeatureMap out(weights.out_channels, out_h, out_w);
    for (int ic = 0; ic < input.channels; ++ic) {
        for (int iy = 0; iy < input.height; ++iy) {
            for (int ix = 0; ix < input.width; ++ix) {
                const double x = input.at(ic, iy, ix);
                if (x == 0.0) continue;
                for (int oc = 0; oc < weights.out_channels; ++oc) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int oy = stride * iy + ky - padding;
                        if (oy < 0 || oy >= out_h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ox = stride * ix + kx - padding;
                            if (ox < 0 || ox >= out_w) continue;
                            out.at(oc, oy, ox) += x * weights.at(ic, oc, ky, kx);
                        }
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace flowtrack
