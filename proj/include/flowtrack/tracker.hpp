// The per-frame tracking state machine: box unification, pose acquisition,
// similarity computation, greedy id assignment, and the bounded history
// deque of tracked instance sets.
#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/flow.hpp"
#include "flowtrack/similarity.hpp"

namespace flowtrack {

struct TrackerConfig {
    int l_q = 3;
    double box_drop_threshold = 0.5;
    double joint_drop_threshold = 0.4;
    double nms_iou_threshold = 0.5;
    SimilarityMetric similarity_metric = SimilarityMetric::flow;
    MultiFlowAggregation multi_flow_aggregation = MultiFlowAggregation::most_recent;
    double min_match_similarity = 0.0;  // exclusive floor
    double expand_fraction = 0.15;
    bool use_flow_boxes = true;
    double flow_score_decay = 1.0;
    int threads = 1;

    void validate() const {
        if (l_q < 1) throw InvalidConfig("l_q must be >= 1");
        auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in_unit(box_drop_threshold) || !in_unit(joint_drop_threshold) ||
            !in_unit(nms_iou_threshold) || !in_unit(min_match_similarity))
            throw InvalidConfig("thresholds must lie in [0, 1]");
        if (expand_fraction < 0.0)
            throw InvalidConfig("expand_fraction must be >= 0");
        if (flow_score_decay < 0.0 || flow_score_decay > 1.0)
            throw InvalidConfig("flow_score_decay must lie in [0, 1]");
        if (threads < 1) throw InvalidConfig("threads must be >= 1");
    }
};

/// Supplies scored person boxes for a frame index.
class DetectionProvider {
public:
    virtual ~DetectionProvider() = default;
    virtual std::vector<BBox> detect(int frame_index) const = 0;
};

/// Estimates one pose instance (id unset) per requested box.
class PoseProvider {
public:
    virtual ~PoseProvider() = default;
    virtual std::vector<Instance> estimate(int frame_index,
                                           const std::vector<BBox>& boxes) const = 0;
};

/// Result of greedy maximum-similarity assignment.
struct GreedyAssignment {
    struct Pair {
        int row = 0;
        std::int64_t row_id = 0;
        int col = 0;
        double similarity = 0.0;
    };
    std::vector<Pair> pairs;          // in selection order
    std::vector<int> unmatched_cols;  // ascending
};

/// Detection-score gate applied before NMS; keeps boxes at or above the
/// threshold, preserving order.
inline std::vector<BBox> drop_low_score_boxes(const std::vector<BBox>& boxes,
                                              double threshold) {
    std::vector<BBox> kept;
    kept.reserve(boxes.size());
    for (const BBox& b : boxes)
        if (b.score >= threshold) kept.push_back(b);
    return kept;
}

/// Repeatedly selects the largest matrix entry strictly above `min_sim`,
/// binds that row's id to the column, and removes both from consideration.
/// Ties break toward the lower row index, then the lower column index.
inline GreedyAssignment greedy_assign(const SimilarityMatrix& m, double min_sim) {
    struct Entry {
        double sim;
        int row;
        int col;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(m.rows) * m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (m.at(r, c) > min_sim) entries.push_back({m.at(r, c), r, c});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });

    GreedyAssignment out;
    std::vector<char> row_used(static_cast<std::size_t>(m.rows), 0);
    std::vector<char> col_used(static_cast<std::size_t>(m.cols), 0);
    for (const Entry& e : entries) {
        if (row_used[static_cast<std::size_t>(e.row)] ||
            col_used[static_cast<std::size_t>(e.col)])
            continue;
        row_used[static_cast<std::size_t>(e.row)] = 1;
        col_used[static_cast<std::size_t>(e.col)] = 1;
        out.pairs.push_back(
            {e.row, m.row_ids[static_cast<std::size_t>(e.row)], e.col, e.sim});
    }
    for (int c = 0; c < m.cols; ++c)
        if (!col_used[static_cast<std::size_t>(c)]) out.unmatched_cols.push_back(c);
    return out;
}

/// Sequential single-owner tracker. Frames must be processed in order; the
/// first frame initializes ids, later frames are matched against the history
/// deque. The flow field maps the previous frame onto the current one and is
/// required whenever flow boxes or a flow similarity metric are in use.
class Tracker {
public:
    Tracker(TrackerConfig cfg, const JointSchema& schema)
        : cfg_(cfg), schema_(schema) {
        cfg_.validate();
        schema_.validate();
    }

    std::vector<Instance> process_frame(int frame_index,
                                        const DetectionProvider& det,
                                        const PoseProvider& pose,
                                        const FlowField* flow_prev_to_cur) {
        if (frame_index != next_frame_)
            throw OutOfOrderFrame("expected frame " + std::to_string(next_frame_) +
                                  ", got " + std::to_string(frame_index));
        const bool first_frame = q_.empty();
        const bool needs_flow =
            cfg_.use_flow_boxes ||
            cfg_.similarity_metric == SimilarityMetric::flow ||
            cfg_.similarity_metric == SimilarityMetric::multi_flow;
        if (!first_frame && needs_flow && flow_prev_to_cur == nullptr)
            throw MissingFlow("frame " + std::to_string(frame_index) +
                              " requires the flow field from frame " +
                              std::to_string(frame_index - 1));
        if (!first_frame && flow_prev_to_cur != nullptr) {
            flow_history_.insert(flow_history_.begin(), *flow_prev_to_cur);
            if (static_cast<int>(flow_history_.size()) > cfg_.l_q)
                flow_history_.resize(static_cast<std::size_t>(cfg_.l_q));
        }

        // Detector boxes, dropped below the box threshold before NMS.
        std::vector<BBox> det_boxes =
            drop_low_score_boxes(det.detect(frame_index), cfg_.box_drop_threshold);
        for (BBox& b : det_boxes) b.source = BoxSource::detector;

        std::vector<BBox> unified;
        if (first_frame) {
            unified = std::move(det_boxes);
        } else {
            std::vector<BBox> flow_boxes;
            if (cfg_.use_flow_boxes)
                flow_boxes = flow_box_gen(q_.front().instances, *flow_prev_to_cur,
                                          cfg_.expand_fraction,
                                          cfg_.flow_score_decay);
            unified = nms_unify(det_boxes, flow_boxes, cfg_.nms_iou_threshold);
        }

        std::vector<Instance> instances = pose.estimate(frame_index, unified);
        if (instances.size() != unified.size())
            throw ShapeMismatch("pose provider returned " +
                                std::to_string(instances.size()) + " instances for " +
                                std::to_string(unified.size()) + " boxes");
        for (Instance& inst : instances) {
            inst.id.reset();
            for (Joint& j : inst.pose.joints)
                if (j.confidence < cfg_.joint_drop_threshold) j.visible = false;
        }

        if (first_frame) {
            // Initialization: fresh ids in provider order.
            for (Instance& inst : instances) inst.id = next_id_++;
        } else {
            const SimilarityMatrix m = build_sim_matrix(
                q_, instances, flow_history_, cfg_.similarity_metric, schema_,
                cfg_.threads, cfg_.multi_flow_aggregation);
            const GreedyAssignment assignment =
                greedy_assign(m, cfg_.min_match_similarity);
            for (const GreedyAssignment::Pair& p : assignment.pairs)
                instances[static_cast<std::size_t>(p.col)].id = p.row_id;
            // Fresh ids for unmatched instances, highest score first.
            std::vector<int> fresh = assignment.unmatched_cols;
            std::stable_sort(fresh.begin(), fresh.end(), [&](int a, int b) {
                return instances[static_cast<std::size_t>(a)].score >
                       instances[static_cast<std::size_t>(b)].score;
            });
            for (int c : fresh) instances[static_cast<std::size_t>(c)].id = next_id_++;
        }

        q_.push_front({frame_index, instances});
        if (static_cast<int>(q_.size()) > cfg_.l_q) q_.pop_back();
        ++next_frame_;
        return instances;
    }

    const std::deque<FramedInstances>& history() const { return q_; }
    std::int64_t next_id() const { return next_id_; }
    int frames_processed() const { return next_frame_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    TrackerConfig cfg_;
    JointSchema schema_;
    std::deque<FramedInstances> q_;
    std::vector<FlowField> flow_history_;  // newest first
    std::int64_t next_id_ = 0;
    int next_frame_ = 0;
};

/// Runs the tracker over a frame range. flows[i] maps frame i to frame i+1;
/// the span may be empty when neither flow boxes nor flow metrics are used.
inline std::vector<std::vector<Instance>> run_sequence(
    int n_frames, const DetectionProvider& det, const PoseProvider& pose,
    std::span<const FlowField> flows, const TrackerConfig& cfg,
    const JointSchema& schema) {
    Tracker tracker(cfg, schema);
    std::vector<std::vector<Instance>> out;
    out.reserve(static_cast<std::size_t>(std::max(n_frames, 0)));
    for (int k = 0; k < n_frames; ++k) {
        const FlowField* flow = nullptr;
        if (k >= 1 && static_cast<std::size_t>(k - 1) < flows.size())
            flow = &flows[static_cast<std::size_t>(k - 1)];
        out.push_back(tracker.process_frame(k, det, pose, flow));
    }
    return out;
}

}  // namespace flowtrack
