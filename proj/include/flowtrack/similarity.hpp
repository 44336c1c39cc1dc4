// Similarity metrics for data association: box IoU, object keypoint
// similarity, flow-propagated OKS, box NMS unification, and similarity-matrix
// construction over the tracked-instance history.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/flow.hpp"

namespace flowtrack {

/// Intersection over union of two corner boxes. Degenerate (zero-area) boxes
/// yield 0 by convention.
inline double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

/// Person scale for OKS normalization: sqrt of the area of the pose's tight
/// bounding box (pre-expansion), floored to keep the metric defined for
/// near-degenerate poses.
inline double oks_scale(const Pose& reference, bool visible_only = true) {
    BBox box;
    try {
        box = bbox_from_pose(reference, visible_only);
    } catch (const NoJoints&) {
        return 1e-6;
    }
    return std::max(std::sqrt(std::max(box.area(), 0.0)), 1e-6);
}

/// Object keypoint similarity: mean over reference-visible joints i of
/// exp(-d_i^2 / (2 s^2 kappa_i^2)). Candidate joints that are themselves
/// invisible contribute zero while staying in the denominator.
inline double oks(const Pose& candidate, const Pose& reference,
                  const JointSchema& schema, double scale) {
    if (static_cast<int>(candidate.joints.size()) != schema.n_joints() ||
        static_cast<int>(reference.joints.size()) != schema.n_joints())
        throw ShapeMismatch("pose joint count does not match schema '" +
                            schema.name + "'");
    double sum = 0.0;
    int visible = 0;
    for (int i = 0; i < schema.n_joints(); ++i) {
        const Joint& ref = reference.joints[static_cast<std::size_t>(i)];
        if (!ref.visible) continue;
        ++visible;
        const Joint& cand = candidate.joints[static_cast<std::size_t>(i)];
        if (!cand.visible) continue;
        const double dx = cand.x - ref.x;
        const double dy = cand.y - ref.y;
        const double k = schema.kappa[static_cast<std::size_t>(i)];
        sum += std::exp(-(dx * dx + dy * dy) / (2.0 * scale * scale * k * k));
    }
    if (visible == 0) throw NoVisibleJoints("reference pose has no visible joints");
    return sum / static_cast<double>(visible);
}

/// Flow-based pose similarity: propagate the earlier pose into the later
/// frame, then score it against the later pose with OKS.
inline double s_flow(const Pose& pose_k, const Pose& pose_l,
                     const FlowField& flow_k_to_l, const JointSchema& schema,
                     double scale) {
    return oks(propagate_pose(pose_k, flow_k_to_l), pose_l, schema, scale);
}

namespace detail {
// Deterministic NMS ordering: score desc, detector before flow, then box
// coordinates, so the surviving set does not depend on input order.
inline bool nms_before(const BBox& a, const BBox& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source != b.source) return a.source == BoxSource::detector;
    if (a.x_min != b.x_min) return a.x_min < b.x_min;
    if (a.y_min != b.y_min) return a.y_min < b.y_min;
    if (a.x_max != b.x_max) return a.x_max < b.x_max;
    return a.y_max < b.y_max;
}
}  // namespace detail

/// Greedy NMS over the concatenated detector and flow boxes. Survivors are
/// returned in selection order and are pairwise below the IoU threshold.
inline std::vector<BBox> nms_unify(const std::vector<BBox>& det_boxes,
                                   const std::vector<BBox>& flow_boxes,
                                   double iou_threshold) {
    std::vector<BBox> all;
    all.reserve(det_boxes.size() + flow_boxes.size());
    all.insert(all.end(), det_boxes.begin(), det_boxes.end());
    all.insert(all.end(), flow_boxes.begin(), flow_boxes.end());
    std::stable_sort(all.begin(), all.end(), detail::nms_before);

    std::vector<BBox> kept;
    std::vector<char> suppressed(all.size(), 0);
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (suppressed[i]) continue;
        kept.push_back(all[i]);
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            if (!suppressed[j] && iou(all[i], all[j]) >= iou_threshold)
                suppressed[j] = 1;
        }
    }
    return kept;
}

enum class SimilarityMetric { bbox, pose, flow, multi_flow };

inline const char* to_string(SimilarityMetric m) {
    switch (m) {
        case SimilarityMetric::bbox: return "bbox";
        case SimilarityMetric::pose: return "pose";
        case SimilarityMetric::flow: return "flow";
        case SimilarityMetric::multi_flow: return "multi_flow";
    }
    return "?";
}

inline SimilarityMetric parse_metric(std::string_view s) {
    if (s == "bbox") return SimilarityMetric::bbox;
    if (s == "pose") return SimilarityMetric::pose;
    if (s == "flow") return SimilarityMetric::flow;
    if (s == "multi_flow") return SimilarityMetric::multi_flow;
    throw InvalidConfig("unknown similarity metric '" + std::string(s) + "'");
}

/// One frame's tracked instances plus the frame index they belong to.
struct FramedInstances {
    int frame_index = 0;
    std::vector<Instance> instances;
};

/// How the multi-frame flow metric treats an id occurring in several history
/// frames: propagate only its most recent instance, or propagate every
/// occurrence and keep the best similarity.
enum class MultiFlowAggregation { most_recent, max_over_frames };

inline const char* to_string(MultiFlowAggregation a) {
    switch (a) {
        case MultiFlowAggregation::most_recent: return "most_recent";
        case MultiFlowAggregation::max_over_frames: return "max_over_frames";
    }
    return "?";
}

inline MultiFlowAggregation parse_aggregation(std::string_view s) {
    if (s == "most_recent") return MultiFlowAggregation::most_recent;
    if (s == "max_over_frames") return MultiFlowAggregation::max_over_frames;
    throw InvalidConfig("unknown multi-flow aggregation '" + std::string(s) + "'");
}

/// Track-to-candidate similarity matrix. Row r describes the candidate track
/// row_ids[r], taken from its most recent appearance in frame
/// row_src_frame[r]; columns follow the untracked instance list.
struct SimilarityMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    std::vector<std::int64_t> row_ids;
    std::vector<int> row_src_frame;

    double at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
    double& at(int r, int c) {
        return values[static_cast<std::size_t>(r) * cols + c];
    }
};

namespace detail {

inline double tight_box_iou(const Pose& a, const Pose& b) {
    try {
        return iou(bbox_from_pose(a, true), bbox_from_pose(b, true));
    } catch (const NoJoints&) {
        return 0.0;
    }
}

inline double safe_oks(const Pose& candidate, const Pose& reference,
                       const JointSchema& schema) {
    try {
        return oks(candidate, reference, schema, oks_scale(reference));
    } catch (const NoVisibleJoints&) {
        return 0.0;
    }
}

}  // namespace detail

/// Builds the similarity matrix between the tracked history `q` (newest
/// frame first) and the current untracked instances. `flows` holds the
/// consecutive-gap fields, newest first: flows[0] maps q[0]'s frame to the
/// current frame, flows[1] maps q[1]'s frame to q[0]'s frame, and so on.
///
/// One row is produced per unique id, from its most recent instance in q;
/// for the single-frame flow metric only ids present in q[0] yield rows.
/// Flow metrics propagate the row pose across the composed gap fields; under
/// MultiFlowAggregation::max_over_frames the multi-frame metric instead
/// propagates every occurrence of the id and keeps the best similarity.
/// Rows may be computed on `threads` worker threads; each row writes its own
/// slot, so the result is identical for any thread count.
inline SimilarityMatrix build_sim_matrix(
    const std::deque<FramedInstances>& q, const std::vector<Instance>& current,
    std::span<const FlowField> flows, SimilarityMetric metric,
    const JointSchema& schema, int threads = 1,
    MultiFlowAggregation aggregation = MultiFlowAggregation::most_recent) {
    const bool uses_flow = metric == SimilarityMetric::flow ||
                           metric == SimilarityMetric::multi_flow;
    const bool all_occurrences =
        metric == SimilarityMetric::multi_flow &&
        aggregation == MultiFlowAggregation::max_over_frames;

    // Occurrences per id, newest frame first; front() is the most recent.
    struct Occurrence {
        int depth;  // index into q
        const Instance* instance;
    };
    struct Row {
        std::int64_t id;
        std::vector<Occurrence> occurrences;
    };
    std::vector<Row> rows;
    const std::size_t scan_depth =
        metric == SimilarityMetric::flow ? std::min<std::size_t>(1, q.size())
                                         : q.size();
    for (std::size_t depth = 0; depth < scan_depth; ++depth) {
        for (const Instance& inst : q[depth].instances) {
            if (!inst.id) continue;
            auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const Row& r) { return r.id == *inst.id; });
            if (it == rows.end()) {
                rows.push_back({*inst.id, {{static_cast<int>(depth), &inst}}});
            } else if (all_occurrences) {
                it->occurrences.push_back({static_cast<int>(depth), &inst});
            }
        }
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.id < b.id; });

    SimilarityMatrix m;
    m.rows = static_cast<int>(rows.size());
    m.cols = static_cast<int>(current.size());
    m.values.assign(static_cast<std::size_t>(m.rows) * m.cols, 0.0);
    for (const Row& r : rows) {
        m.row_ids.push_back(r.id);
        m.row_src_frame.push_back(
            q[static_cast<std::size_t>(r.occurrences.front().depth)].frame_index);
    }
    if (m.rows == 0 || m.cols == 0) return m;

    // Composed flow per history depth: composed[d] maps q[d]'s frame to the
    // current frame. Built once, shared read-only by all row workers.
    std::vector<FlowField> composed;
    if (uses_flow) {
        int max_depth = 0;
        for (const Row& r : rows)
            for (const Occurrence& o : r.occurrences)
                max_depth = std::max(max_depth, o.depth);
        if (static_cast<std::size_t>(max_depth) >= flows.size())
            throw MissingFlow("need " + std::to_string(max_depth + 1) +
                              " consecutive flow fields, have " +
                              std::to_string(flows.size()));
        composed.reserve(static_cast<std::size_t>(max_depth) + 1);
        composed.push_back(flows[0]);
        for (int d = 1; d <= max_depth; ++d)
            composed.push_back(
                compose_flow(flows[static_cast<std::size_t>(d)], composed.back()));
    }

    auto fill_row = [&](int r) {
        const Row& row = rows[static_cast<std::size_t>(r)];
        for (const Occurrence& occurrence : row.occurrences) {
            Pose track_pose = occurrence.instance->pose;
            if (uses_flow)
                track_pose = propagate_pose(
                    track_pose, composed[static_cast<std::size_t>(occurrence.depth)]);
            for (int c = 0; c < m.cols; ++c) {
                const Pose& cand = current[static_cast<std::size_t>(c)].pose;
                double sim = 0.0;
                if (metric == SimilarityMetric::bbox)
                    sim = detail::tight_box_iou(track_pose, cand);
                else
                    sim = detail::safe_oks(track_pose, cand, schema);
                m.at(r, c) = std::max(m.at(r, c), std::clamp(sim, 0.0, 1.0));
            }
        }
    };

    if (threads <= 1 || m.rows == 1) {
        for (int r = 0; r < m.rows; ++r) fill_row(r);
    } else {
        const int n_workers = std::min(threads, m.rows);
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&, w] {
                for (int r = w; r < m.rows; r += n_workers) fill_row(r);
            });
        }
        for (std::thread& t : workers) t.join();
    }
    return m;
}

}  // namespace flowtrack
