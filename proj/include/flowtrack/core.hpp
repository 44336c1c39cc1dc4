// Core data model shared by every other header: joints, poses, instances,
// boxes, keypoint schemas, and the small box-geometry operations the
// tracking pipeline is built from.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flowtrack {

// ---------------------------------------------------------------------------
// Errors. Every library error derives from Error; the what() string starts
// with the error's tag so CLI diagnostics name the failure class.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    Error(std::string_view tag, std::string_view msg)
        : std::runtime_error(std::string(tag) + ": " + std::string(msg)) {}
};

#define FLOWTRACK_ERROR_TYPE(Name)                                        \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(std::string_view msg) : Error(#Name, msg) {}        \
    }

FLOWTRACK_ERROR_TYPE(NoJoints);
FLOWTRACK_ERROR_TYPE(DegenerateBox);
FLOWTRACK_ERROR_TYPE(ShapeMismatch);
FLOWTRACK_ERROR_TYPE(InvalidConfig);
FLOWTRACK_ERROR_TYPE(NoVisibleJoints);
FLOWTRACK_ERROR_TYPE(MissingFlow);
FLOWTRACK_ERROR_TYPE(OutOfOrderFrame);
FLOWTRACK_ERROR_TYPE(SchemaMismatch);
FLOWTRACK_ERROR_TYPE(InvalidScenario);
FLOWTRACK_ERROR_TYPE(EmptyGroundTruth);

// Parse errors carry file position so callers can point at the bad byte.
class ParseError : public Error {
public:
    explicit ParseError(std::string_view msg) : Error("ParseError", msg) {}
    ParseError(const std::string& path, std::size_t line, std::string_view msg)
        : Error("ParseError",
                path + ":" + std::to_string(line) + ": " + std::string(msg)) {}
};

#undef FLOWTRACK_ERROR_TYPE

// ---------------------------------------------------------------------------
// Keypoint schema
// ---------------------------------------------------------------------------

/// Describes a keypoint layout: joint names in fixed order, per-joint OKS
/// falloff constants, and left/right counterpart indices used when averaging
/// horizontally flipped heatmaps.
struct JointSchema {
    std::string name;
    std::vector<std::string> joint_names;
    std::vector<double> kappa;
    std::vector<std::pair<int, int>> flip_pairs;

    int n_joints() const { return static_cast<int>(joint_names.size()); }

    void validate() const {
        if (joint_names.empty())
            throw InvalidConfig("schema '" + name + "' has no joints");
        if (kappa.size() != joint_names.size())
            throw InvalidConfig("schema '" + name + "' kappa count mismatch");
        for (double k : kappa)
            if (!(k > 0.0))
                throw InvalidConfig("schema '" + name + "' kappa must be positive");
        std::vector<int> seen(joint_names.size(), 0);
        for (auto [a, b] : flip_pairs) {
            if (a < 0 || b < 0 || a >= n_joints() || b >= n_joints() || a == b)
                throw InvalidConfig("schema '" + name + "' invalid flip pair");
            if (seen[static_cast<std::size_t>(a)]++ || seen[static_cast<std::size_t>(b)]++)
                throw InvalidConfig("schema '" + name + "' repeated flip index");
        }
    }

    /// Index of the horizontal-mirror counterpart (identity for unpaired joints).
    int flip_partner(int index) const {
        for (auto [a, b] : flip_pairs) {
            if (a == index) return b;
            if (b == index) return a;
        }
        return index;
    }
};

/// 15-joint PoseTrack layout. The per-joint falloff is uniform.
inline const JointSchema& posetrack15_schema() {
    static const JointSchema schema = [] {
        JointSchema s;
        s.name = "posetrack15";
        s.joint_names = {
            "right_ankle", "right_knee",  "right_hip",      "left_hip",
            "left_knee",   "left_ankle",  "right_wrist",    "right_elbow",
            "right_shoulder", "left_shoulder", "left_elbow", "left_wrist",
            "head_bottom", "nose",        "head_top",
        };
        s.kappa.assign(15, 0.1);
        s.flip_pairs = {{0, 5}, {1, 4}, {2, 3}, {6, 11}, {7, 10}, {8, 9}};
        s.validate();
        return s;
    }();
    return schema;
}

/// 17-joint COCO layout with the published per-joint falloff constants.
inline const JointSchema& coco17_schema() {
    static const JointSchema schema = [] {
        JointSchema s;
        s.name = "coco17";
        s.joint_names = {
            "nose",        "left_eye",   "right_eye", "left_ear",   "right_ear",
            "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
            "left_wrist",  "right_wrist", "left_hip",  "right_hip",
            "left_knee",   "right_knee",  "left_ankle", "right_ankle",
        };
        s.kappa = {0.052, 0.050, 0.050, 0.070, 0.070, 0.158, 0.158, 0.144,
                   0.144, 0.124, 0.124, 0.214, 0.214, 0.174, 0.174, 0.178,
                   0.178};
        s.flip_pairs = {{1, 2},  {3, 4},   {5, 6},   {7, 8},
                        {9, 10}, {11, 12}, {13, 14}, {15, 16}};
        s.validate();
        return s;
    }();
    return schema;
}

/// Looks a schema up by name; returns nullptr when unknown.
inline const JointSchema* find_schema(std::string_view name) {
    if (name == "posetrack15") return &posetrack15_schema();
    if (name == "coco17") return &coco17_schema();
    return nullptr;
}

// ---------------------------------------------------------------------------
// Poses and instances
// ---------------------------------------------------------------------------

struct Joint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 1.0;
    bool visible = true;
};

/// An ordered joint set; `schema` names the layout the indices follow.
struct Pose {
    std::vector<Joint> joints;
    std::string schema = "posetrack15";
};

/// A pose plus tracking identity. `id` is empty until assigned.
struct Instance {
    Pose pose;
    std::optional<std::int64_t> id;
    double score = 0.0;
};

/// Mean joint confidence; the default instance score when none is supplied.
inline double mean_confidence(const Pose& pose) {
    if (pose.joints.empty()) return 0.0;
    double sum = 0.0;
    for (const Joint& j : pose.joints) sum += j.confidence;
    return sum / static_cast<double>(pose.joints.size());
}

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

enum class BoxSource { detector, flow };

/// Axis-aligned box in continuous pixel coordinates (corner convention).
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    double score = 0.0;
    BoxSource source = BoxSource::detector;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }
};

/// Tightest box containing the pose's joints (optionally visible joints only).
/// Score is the mean confidence of the selected joints.
inline BBox bbox_from_pose(const Pose& pose, bool visible_only = false) {
    BBox box;
    box.x_min = box.y_min = std::numeric_limits<double>::infinity();
    box.x_max = box.y_max = -std::numeric_limits<double>::infinity();
    double conf_sum = 0.0;
    int selected = 0;
    for (const Joint& j : pose.joints) {
        if (visible_only && !j.visible) continue;
        box.x_min = std::min(box.x_min, j.x);
        box.y_min = std::min(box.y_min, j.y);
        box.x_max = std::max(box.x_max, j.x);
        box.y_max = std::max(box.y_max, j.y);
        conf_sum += j.confidence;
        ++selected;
    }
    if (selected == 0)
        throw NoJoints(visible_only ? "pose has no visible joints"
                                    : "pose has no joints");
    box.score = conf_sum / static_cast<double>(selected);
    return box;
}

/// Grows width and height by `fraction` (half per side); center preserved.
inline BBox expand_box(const BBox& box, double fraction) {
    if (fraction < 0.0) throw InvalidConfig("expand fraction must be >= 0");
    BBox out = box;
    const double dx = 0.5 * fraction * box.width();
    const double dy = 0.5 * fraction * box.height();
    out.x_min -= dx;
    out.x_max += dx;
    out.y_min -= dy;
    out.y_max += dy;
    return out;
}

/// Extends one dimension symmetrically so height/width == target_ratio.
/// Never shrinks either dimension.
inline BBox fix_aspect_ratio(const BBox& box, double target_ratio) {
    if (!(target_ratio > 0.0))
        throw InvalidConfig("aspect ratio must be positive");
    const double w = box.width();
    const double h = box.height();
    if (w <= 0.0 && h <= 0.0)
        throw DegenerateBox("cannot fix aspect ratio of a point box");
    BBox out = box;
    if (h < w * target_ratio) {
        const double grow = 0.5 * (w * target_ratio - h);
        out.y_min -= grow;
        out.y_max += grow;
    } else if (h > w * target_ratio) {
        const double grow = 0.5 * (h / target_ratio - w);
        out.x_min -= grow;
        out.x_max += grow;
    }
    return out;
}

}  // namespace flowtrack
