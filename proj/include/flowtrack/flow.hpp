// Dense displacement fields: bilinear sampling, joint propagation,
// multi-frame composition, and flow-box generation from tracked instances.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// Per-pixel displacement field for one frame gap. Values are kept in double
/// precision; the on-disk .flo representation is float32 (see flo_io.hpp).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;  // horizontal displacement, row-major
    std::vector<double> v;  // vertical displacement, row-major

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          u(static_cast<std::size_t>(w) * h, 0.0),
          v(static_cast<std::size_t>(w) * h, 0.0) {}

    static FlowField constant(int w, int h, double du, double dv) {
        FlowField f(w, h);
        std::fill(f.u.begin(), f.u.end(), du);
        std::fill(f.v.begin(), f.v.end(), dv);
        return f;
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    double& u_at(int x, int y) { return u[index(x, y)]; }
    double& v_at(int x, int y) { return v[index(x, y)]; }
    double u_at(int x, int y) const { return u[index(x, y)]; }
    double v_at(int x, int y) const { return v[index(x, y)]; }
    bool same_shape(const FlowField& o) const {
        return width == o.width && height == o.height;
    }
};

struct FlowVector {
    double dx = 0.0;
    double dy = 0.0;
};

/// Bilinear displacement lookup. Coordinates outside the grid clamp to the
/// border pixel; integer coordinates return the stored values exactly.
inline FlowVector sample_flow(const FlowField& f, double x, double y) {
    if (f.width < 1 || f.height < 1) throw ShapeMismatch("empty flow field");
    x = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
    const int x0 = std::min(static_cast<int>(x), f.width - 2 >= 0 ? f.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), f.height - 2 >= 0 ? f.height - 2 : 0);
    const int x1 = std::min(x0 + 1, f.width - 1);
    const int y1 = std::min(y0 + 1, f.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;
    FlowVector d;
    d.dx = w00 * f.u_at(x0, y0) + w10 * f.u_at(x1, y0) + w01 * f.u_at(x0, y1) +
           w11 * f.u_at(x1, y1);
    d.dy = w00 * f.v_at(x0, y0) + w10 * f.v_at(x1, y0) + w01 * f.v_at(x0, y1) +
           w11 * f.v_at(x1, y1);
    return d;
}

/// Moves every joint by the flow sampled at its location. Confidences are
/// preserved; joints that land outside the field extent (plus `margin`
/// pixels) are marked invisible but keep their propagated coordinates.
inline Pose propagate_pose(const Pose& pose, const FlowField& f,
                           double margin = 0.0) {
    Pose out = pose;
    for (Joint& j : out.joints) {
        const FlowVector d = sample_flow(f, j.x, j.y);
        j.x += d.dx;
        j.y += d.dy;
        if (j.x < -margin || j.y < -margin ||
            j.x > static_cast<double>(f.width - 1) + margin ||
            j.y > static_cast<double>(f.height - 1) + margin)
            j.visible = false;
    }
    return out;
}

/// Chains two displacement fields: result(p) = f_ab(p) + f_bc(p + f_ab(p)).
inline FlowField compose_flow(const FlowField& f_ab, const FlowField& f_bc) {
    if (!f_ab.same_shape(f_bc))
        throw ShapeMismatch("flow fields " + std::to_string(f_ab.width) + "x" +
                            std::to_string(f_ab.height) + " vs " +
                            std::to_string(f_bc.width) + "x" +
                            std::to_string(f_bc.height));
    FlowField out(f_ab.width, f_ab.height);
    for (int y = 0; y < f_ab.height; ++y) {
        for (int x = 0; x < f_ab.width; ++x) {
            const double dx = f_ab.u_at(x, y);
            const double dy = f_ab.v_at(x, y);
            const FlowVector second = sample_flow(f_bc, x + dx, y + dy);
            out.u_at(x, y) = dx + second.dx;
            out.v_at(x, y) = dy + second.dy;
        }
    }
    return out;
}

/// Propagates each instance's pose across the field and emits the expanded
/// bounding box of the visible propagated joints as a detection candidate.
/// Instances whose propagated pose keeps no visible joint produce no box.
inline std::vector<BBox> flow_box_gen(const std::vector<Instance>& instances,
                                      const FlowField& f,
                                      double expand_fraction = 0.15,
                                      double score_decay = 1.0) {
    std::vector<BBox> boxes;
    boxes.reserve(instances.size());
    for (const Instance& inst : instances) {
        const Pose propagated = propagate_pose(inst.pose, f);
        bool any_visible = false;
        for (const Joint& j : propagated.joints) any_visible |= j.visible;
        if (!any_visible) continue;
        BBox box = expand_box(bbox_from_pose(propagated, /*visible_only=*/true),
                              expand_fraction);
        box.score = std::clamp(inst.score * score_decay, 0.0, 1.0);
        box.source = BoxSource::flow;
        boxes.push_back(box);
    }
    return boxes;
}

}  // namespace flowtrack
