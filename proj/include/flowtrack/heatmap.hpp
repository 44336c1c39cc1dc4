// Heatmap target generation, MSE loss, sub-pixel peak decoding, and
// flip-averaged test-time fusion.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// A per-joint 2D response grid, row-major.
struct Heatmap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    Heatmap() = default;
    Heatmap(int w, int h, double fill = 0.0)
        : width(w), height(h),
          values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    bool same_shape(const Heatmap& other) const {
        return width == other.width && height == other.height;
    }
};

/// One heatmap per schema joint; all maps share dimensions.
using HeatmapStack = std::vector<Heatmap>;

/// Default target width of the gaussian blob, scaled with grid resolution.
inline double default_sigma(int heatmap_height) {
    return 2.0 * static_cast<double>(heatmap_height) / 64.0;
}

/// Unnormalized 2D gaussian target centered at (cx, cy) in grid coordinates.
/// Peaks at 1.0 when the center lies on a grid point; off-grid centers simply
/// sample the tail.
inline Heatmap gaussian_target(double cx, double cy, double sigma, int width,
                               int height) {
    if (!(sigma > 0.0)) throw InvalidConfig("sigma must be positive");
    Heatmap h(width, height);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            h.at(x, y) = std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
    return h;
}

/// Mean squared error over all joints and pixels.
inline double mse_loss(const HeatmapStack& predicted, const HeatmapStack& target) {
    if (predicted.size() != target.size())
        throw ShapeMismatch("stack joint counts differ: " +
                            std::to_string(predicted.size()) + " vs " +
                            std::to_string(target.size()));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        if (!predicted[k].same_shape(target[k]))
            throw ShapeMismatch("heatmap dimensions differ at joint " +
                                std::to_string(k));
        for (std::size_t i = 0; i < predicted[k].values.size(); ++i) {
            const double d = predicted[k].values[i] - target[k].values[i];
            sum += d * d;
        }
        count += predicted[k].values.size();
    }
    if (count == 0) throw ShapeMismatch("empty heatmap stack");
    return sum / static_cast<double>(count);
}

namespace detail {
inline int sign(double a, double b) { return (a > b) - (a < b); }
}  // namespace detail

/// Decodes a heatmap to a joint location: argmax (ties to the lowest
/// row-major index) plus a quarter-pixel shift per axis toward the higher of
/// the two neighboring responses. Axes whose neighbors fall outside the grid
/// get no shift, so a peak at a border or corner decodes without offset on
/// the clipped axes. Confidence is the peak value clamped to [0, 1].
inline Joint decode_joint(const Heatmap& h) {
    if (h.width < 2 || h.height < 2)
        throw ShapeMismatch("decoding needs at least a 2x2 heatmap");
    int px = 0, py = 0;
    double peak = h.at(0, 0);
    for (int y = 0; y < h.height; ++y) {
        for (int x = 0; x < h.width; ++x) {
            if (h.at(x, y) > peak) {
                peak = h.at(x, y);
                px = x;
                py = y;
            }
        }
    }
    Joint j;
    j.x = px;
    j.y = py;
    if (px > 0 && px < h.width - 1)
        j.x += 0.25 * detail::sign(h.at(px + 1, py), h.at(px - 1, py));
    if (py > 0 && py < h.height - 1)
        j.y += 0.25 * detail::sign(h.at(px, py + 1), h.at(px, py - 1));
    j.confidence = std::min(1.0, std::max(0.0, peak));
    j.visible = true;
    return j;
}

/// Averages a stack with its horizontally flipped counterpart: the flipped
/// stack is mirrored back, left/right channels are swapped per the schema,
/// and the result is the element-wise mean with the original.
inline HeatmapStack flip_average(const HeatmapStack& original,
                                 const HeatmapStack& flipped,
                                 const JointSchema& schema) {
    if (original.size() != flipped.size() ||
        static_cast<int>(original.size()) != schema.n_joints())
        throw ShapeMismatch("stack joint count does not match schema");
    HeatmapStack out(original.size());
    for (int k = 0; k < schema.n_joints(); ++k) {
        const Heatmap& orig = original[static_cast<std::size_t>(k)];
        const Heatmap& mirror =
            flipped[static_cast<std::size_t>(schema.flip_partner(k))];
        if (!orig.same_shape(mirror))
            throw ShapeMismatch("heatmap dimensions differ at joint " +
                                std::to_string(k));
        Heatmap avg(orig.width, orig.height);
        for (int y = 0; y < orig.height; ++y)
            for (int x = 0; x < orig.width; ++x)
                avg.at(x, y) =
                    0.5 * (orig.at(x, y) + mirror.at(orig.width - 1 - x, y));
        out[static_cast<std::size_t>(k)] = std::move(avg);
    }
    return out;
}

}  // namespace flowtrack
