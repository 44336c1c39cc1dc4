// Synthetic scenario simulator: ground-truth tracks with rigid skeleton
// motion, flow fields exactly consistent with that motion, and noisy
// detector / pose providers that stand in for the real networks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/flow.hpp"
#include "flowtrack/metrics.hpp"
#include "flowtrack/similarity.hpp"
#include "flowtrack/tracker.hpp"

namespace flowtrack {

// ---------------------------------------------------------------------------
// Deterministic RNG. All randomness is derived from (seed, frame, item)
// through splitmix64 so providers answer identically regardless of query
// order, platform, or thread count.
// ---------------------------------------------------------------------------

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

/// Small counter-based generator; every draw is a fresh splitmix64 output.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64(state_++ * 0x2545f4914f6cdd1dULL); }

    double uniform() {  // [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {  // Box-Muller, deterministic across platforms
        const double u1 = std::max(uniform(), 1e-300);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    int poisson(double mean) {  // Knuth's product method
        if (mean <= 0.0) return 0;
        const double threshold = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > threshold);
        return k - 1;
    }

private:
    std::uint64_t state_;
};

}  // namespace rng

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

enum class MotionType { constant_velocity, sinusoidal, teleport };

inline const char* to_string(MotionType m) {
    switch (m) {
        case MotionType::constant_velocity: return "constant_velocity";
        case MotionType::sinusoidal: return "sinusoidal";
        case MotionType::teleport: return "teleport";
    }
    return "?";
}

inline MotionType parse_motion(std::string_view s) {
    if (s == "constant_velocity") return MotionType::constant_velocity;
    if (s == "sinusoidal") return MotionType::sinusoidal;
    if (s == "teleport") return MotionType::teleport;
    throw InvalidScenario("unknown motion type '" + std::string(s) + "'");
}

/// Rigid translation of the whole skeleton over time. `teleport` adds a
/// single discontinuous jump at `jump_frame` on top of the base velocity.
struct MotionModel {
    MotionType type = MotionType::constant_velocity;
    double vx = 0.0;
    double vy = 0.0;
    double amplitude_x = 0.0;  // sinusoidal only
    double amplitude_y = 0.0;
    double period = 16.0;
    int jump_frame = -1;  // teleport only
    double jump_dx = 0.0;
    double jump_dy = 0.0;

    void position(int t, double& x, double& y) const {
        x = vx * t;
        y = vy * t;
        if (type == MotionType::sinusoidal) {
            const double phase = 2.0 * std::numbers::pi * t / period;
            x += amplitude_x * std::sin(phase);
            y += amplitude_y * std::sin(phase);
        } else if (type == MotionType::teleport && jump_frame >= 0 &&
                   t >= jump_frame) {
            x += jump_dx;
            y += jump_dy;
        }
    }
};

struct ActorSpec {
    std::int64_t track_id = 0;
    double start_x = 0.0;
    double start_y = 0.0;
    double scale = 1.0;  // pixels per template unit
    MotionModel motion;
    std::vector<int> absent_frames;  // occlusion schedule

    bool absent_at(int frame) const {
        return std::find(absent_frames.begin(), absent_frames.end(), frame) !=
               absent_frames.end();
    }
};

struct Scenario {
    int n_frames = 0;
    int width = 0;
    int height = 0;
    std::uint64_t seed = 0;
    std::string schema = "posetrack15";
    std::vector<ActorSpec> actors;
};

struct NoiseModel {
    double detector_miss_rate = 0.0;
    double false_positive_rate = 0.0;  // expected count per frame
    double box_jitter = 0.0;           // pixels
    double joint_noise_sigma = 0.0;    // pixels
    double score_noise_sigma = 0.0;

    void validate() const {
        if (detector_miss_rate < 0.0 || detector_miss_rate > 1.0)
            throw InvalidConfig("detector_miss_rate must lie in [0, 1]");
        if (false_positive_rate < 0.0 || box_jitter < 0.0 ||
            joint_noise_sigma < 0.0 || score_noise_sigma < 0.0)
            throw InvalidConfig("noise rates and sigmas must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Skeleton template (15-joint stick figure, posetrack15 order)
// ---------------------------------------------------------------------------

namespace detail {

struct TemplatePoint {
    double x, y;
};

// Offsets from the actor anchor, in template units; y grows downward.
inline const std::vector<TemplatePoint>& skeleton_template() {
    static const std::vector<TemplatePoint> pts = {
        {-8.0, 55.0},  // right_ankle
        {-7.0, 30.0},  // right_knee
        {-6.0, 5.0},   // right_hip
        {6.0, 5.0},    // left_hip
        {7.0, 30.0},   // left_knee
        {8.0, 55.0},   // left_ankle
        {-22.0, -5.0},  // right_wrist
        {-16.0, -15.0}, // right_elbow
        {-10.0, -28.0}, // right_shoulder
        {10.0, -28.0},  // left_shoulder
        {16.0, -15.0},  // left_elbow
        {22.0, -5.0},   // left_wrist
        {0.0, -32.0},   // head_bottom
        {0.0, -40.0},   // nose
        {0.0, -48.0},   // head_top
    };
    return pts;
}

inline double template_head_length() {
    const auto& t = skeleton_template();
    return std::hypot(t[14].x - t[12].x, t[14].y - t[12].y);
}

}  // namespace detail

/// Ground-truth pose of an actor at a frame (all joints visible, confidence 1).
inline Pose actor_pose(const ActorSpec& actor, int frame,
                       const std::string& schema = "posetrack15") {
    double mx = 0.0, my = 0.0;
    actor.motion.position(frame, mx, my);
    Pose pose;
    pose.schema = schema;
    for (const detail::TemplatePoint& p : detail::skeleton_template()) {
        Joint j;
        j.x = actor.start_x + mx + p.x * actor.scale;
        j.y = actor.start_y + my + p.y * actor.scale;
        j.confidence = 1.0;
        j.visible = true;
        pose.joints.push_back(j);
    }
    return pose;
}

inline double actor_head_size(const ActorSpec& actor) {
    return detail::template_head_length() * actor.scale;
}

struct GeneratedScene {
    GroundTruth gt;
    std::vector<FlowField> flows;  // flows[i] maps frame i to frame i+1
    int width = 0;
    int height = 0;
};

/// Generates ground truth and per-gap flow fields. The flow equals each
/// actor's frame-to-frame displacement inside a margin around the actor's
/// joints, fades to zero over a 4-pixel cosine band, and is zero elsewhere.
/// Motion continues through occluded frames so composed flow stays
/// consistent with the track across gaps.
inline GeneratedScene generate(const Scenario& scn) {
    if (scn.n_frames < 1) throw InvalidScenario("scenario needs >= 1 frame");
    if (scn.width < 8 || scn.height < 8)
        throw InvalidScenario("frame dimensions too small");
    if (scn.schema != "posetrack15")
        throw InvalidScenario("skeleton template requires the posetrack15 schema");
    for (const ActorSpec& a : scn.actors)
        if (!(a.scale > 0.0)) throw InvalidScenario("actor scale must be positive");

    GeneratedScene scene;
    scene.width = scn.width;
    scene.height = scn.height;
    scene.gt.schema = scn.schema;
    scene.gt.frames.resize(static_cast<std::size_t>(scn.n_frames));

    for (int t = 0; t < scn.n_frames; ++t) {
        for (const ActorSpec& actor : scn.actors) {
            if (actor.absent_at(t)) continue;
            Pose pose = actor_pose(actor, t, scn.schema);
            for (const Joint& j : pose.joints) {
                if (j.x < 0.0 || j.y < 0.0 || j.x > scn.width - 1 ||
                    j.y > scn.height - 1)
                    throw InvalidScenario(
                        "actor " + std::to_string(actor.track_id) +
                        " leaves the frame at t=" + std::to_string(t) +
                        " while visible");
            }
            scene.gt.frames[static_cast<std::size_t>(t)].push_back(
                {actor.track_id, std::move(pose), actor_head_size(actor)});
        }
    }

    constexpr double kRegionMargin = 6.0;
    constexpr double kBlendBand = 4.0;
    for (int t = 0; t + 1 < scn.n_frames; ++t) {
        FlowField field(scn.width, scn.height);
        for (const ActorSpec& actor : scn.actors) {
            const Pose now = actor_pose(actor, t, scn.schema);
            double x0, y0, x1, y1;
            actor.motion.position(t, x0, y0);
            actor.motion.position(t + 1, x1, y1);
            const double dx = x1 - x0;
            const double dy = y1 - y0;
            if (dx == 0.0 && dy == 0.0) continue;
            const BBox region = expand_box(bbox_from_pose(now), 0.0);
            const int px0 = std::max(0, static_cast<int>(std::floor(
                                            region.x_min - kRegionMargin - kBlendBand)));
            const int py0 = std::max(0, static_cast<int>(std::floor(
                                            region.y_min - kRegionMargin - kBlendBand)));
            const int px1 = std::min(scn.width - 1,
                                     static_cast<int>(std::ceil(
                                         region.x_max + kRegionMargin + kBlendBand)));
            const int py1 = std::min(scn.height - 1,
                                     static_cast<int>(std::ceil(
                                         region.y_max + kRegionMargin + kBlendBand)));
            for (int py = py0; py <= py1; ++py) {
                for (int px = px0; px <= px1; ++px) {
                    const double gap_x =
                        std::max({region.x_min - kRegionMargin - px,
                                  px - region.x_max - kRegionMargin, 0.0});
                    const double gap_y =
                        std::max({region.y_min - kRegionMargin - py,
                                  py - region.y_max - kRegionMargin, 0.0});
                    const double gap = std::hypot(gap_x, gap_y);
                    if (gap >= kBlendBand) continue;
                    double w = 1.0;
                    if (gap > 0.0)
                        w = 0.5 * (1.0 + std::cos(std::numbers::pi * gap / kBlendBand));
                    field.u_at(px, py) = w * dx + (1.0 - w) * field.u_at(px, py);
                    field.v_at(px, py) = w * dy + (1.0 - w) * field.v_at(px, py);
                }
            }
        }
        scene.flows.push_back(std::move(field));
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

/// Detector over ground truth: emits each instance's 15%-expanded box with
/// probability (1 - miss_rate), jittered, plus uniformly placed false
/// positives. Deterministic per (seed, frame, instance).
class SyntheticDetector : public DetectionProvider {
public:
    SyntheticDetector(const GroundTruth& gt, NoiseModel noise, std::uint64_t seed,
                      int frame_width, int frame_height,
                      double expand_fraction = 0.15)
        : gt_(&gt), noise_(noise), seed_(seed), width_(frame_width),
          height_(frame_height), expand_fraction_(expand_fraction) {
        noise_.validate();
    }

    std::vector<BBox> detect(int frame_index) const override {
        std::vector<BBox> boxes;
        if (frame_index < 0 ||
            static_cast<std::size_t>(frame_index) >= gt_->frames.size())
            return boxes;
        const auto& instances = gt_->frames[static_cast<std::size_t>(frame_index)];
        for (std::size_t i = 0; i < instances.size(); ++i) {
            rng::Stream stream(rng::mix(rng::mix(seed_, 0xab1eULL + frame_index),
                                        static_cast<std::uint64_t>(i)));
            if (stream.uniform() < noise_.detector_miss_rate) continue;
            BBox box = expand_box(bbox_from_pose(instances[i].pose), expand_fraction_);
            if (noise_.box_jitter > 0.0) {
                box.x_min += stream.uniform(-noise_.box_jitter, noise_.box_jitter);
                box.y_min += stream.uniform(-noise_.box_jitter, noise_.box_jitter);
                box.x_max += stream.uniform(-noise_.box_jitter, noise_.box_jitter);
                box.y_max += stream.uniform(-noise_.box_jitter, noise_.box_jitter);
                if (box.x_max < box.x_min) std::swap(box.x_min, box.x_max);
                if (box.y_max < box.y_min) std::swap(box.y_min, box.y_max);
            }
            box.score = std::clamp(
                1.0 - std::abs(stream.gaussian()) * noise_.score_noise_sigma, 0.0,
                1.0);
            box.source = BoxSource::detector;
            boxes.push_back(box);
        }
        rng::Stream fp_stream(rng::mix(rng::mix(seed_, 0xfa15eULL + frame_index), 1));
        const int n_fp = fp_stream.poisson(noise_.false_positive_rate);
        for (int i = 0; i < n_fp; ++i) {
            BBox box;
            const double w = fp_stream.uniform(20.0, 80.0);
            const double h = fp_stream.uniform(40.0, 160.0);
            box.x_min = fp_stream.uniform(0.0, std::max(1.0, width_ - w));
            box.y_min = fp_stream.uniform(0.0, std::max(1.0, height_ - h));
            box.x_max = box.x_min + w;
            box.y_max = box.y_min + h;
            box.score = fp_stream.uniform(0.0, 1.0);
            box.source = BoxSource::detector;
            boxes.push_back(box);
        }
        return boxes;
    }

private:
    const GroundTruth* gt_;
    NoiseModel noise_;
    std::uint64_t seed_;
    int width_;
    int height_;
    double expand_fraction_;
};

/// Pose oracle: answers each requested box with the ground-truth pose of the
/// actor whose tight box overlaps it most (plus joint noise). A box touching
/// no actor gets a low-confidence junk pose at the box center.
class SyntheticPoseEstimator : public PoseProvider {
public:
    SyntheticPoseEstimator(const GroundTruth& gt, NoiseModel noise,
                           std::uint64_t seed)
        : gt_(&gt), noise_(noise), seed_(seed) {
        noise_.validate();
        schema_ = find_schema(gt.schema);
        if (!schema_) throw SchemaMismatch("unknown schema '" + gt.schema + "'");
    }

    std::vector<Instance> estimate(int frame_index,
                                   const std::vector<BBox>& boxes) const override {
        std::vector<Instance> out;
        out.reserve(boxes.size());
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            rng::Stream stream(rng::mix(rng::mix(seed_, 0x905eULL + frame_index),
                                        static_cast<std::uint64_t>(b)));
            const GTInstance* best = nullptr;
            double best_iou = 0.0;
            if (frame_index >= 0 &&
                static_cast<std::size_t>(frame_index) < gt_->frames.size()) {
                for (const GTInstance& inst :
                     gt_->frames[static_cast<std::size_t>(frame_index)]) {
                    const double overlap = iou(boxes[b], bbox_from_pose(inst.pose));
                    if (overlap > best_iou) {
                        best_iou = overlap;
                        best = &inst;
                    }
                }
            }
            Instance result;
            if (best == nullptr) {
                result.pose = junk_pose(boxes[b]);
                result.score = 0.05;
            } else {
                result.pose = best->pose;
                for (Joint& j : result.pose.joints) {
                    if (noise_.joint_noise_sigma > 0.0) {
                        j.x += stream.gaussian() * noise_.joint_noise_sigma;
                        j.y += stream.gaussian() * noise_.joint_noise_sigma;
                    }
                    j.confidence = std::clamp(
                        1.0 - std::abs(stream.gaussian()) * noise_.score_noise_sigma,
                        0.0, 1.0);
                }
                result.score = std::clamp(
                    1.0 - std::abs(stream.gaussian()) * noise_.score_noise_sigma,
                    0.0, 1.0);
            }
            out.push_back(std::move(result));
        }
        return out;
    }

private:
    Pose junk_pose(const BBox& box) const {
        Pose pose;
        pose.schema = schema_->name;
        for (int i = 0; i < schema_->n_joints(); ++i) {
            Joint j;
            j.x = box.center_x();
            j.y = box.center_y();
            j.confidence = 0.05;
            j.visible = true;
            pose.joints.push_back(j);
        }
        return pose;
    }

    const GroundTruth* gt_;
    NoiseModel noise_;
    std::uint64_t seed_;
    const JointSchema* schema_ = nullptr;
};

}  // namespace flowtrack
