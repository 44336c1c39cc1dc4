// Evaluation against ground-truth tracks: PCKh-style joint matching,
// per-joint average precision, and CLEAR-MOT tracking metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// One annotated person in one frame.
struct GTInstance {
    std::int64_t track_id = 0;
    Pose pose;
    double head_size = 0.0;
};

struct GroundTruth {
    std::string schema = "posetrack15";
    std::vector<std::vector<GTInstance>> frames;
};

/// A ground-truth joint offered to the matcher.
struct GTJoint {
    std::int64_t track_id = 0;
    Joint joint;
    double head_size = 0.0;
};

struct JointMatch {
    int pred = 0;
    int gt = 0;
    double distance = 0.0;
};

/// One-to-one greedy matching by ascending distance. A pair is admissible iff
/// its distance is at most threshold_fraction times the gt head size; each
/// prediction and each gt joint is used at most once. Distance ties break
/// toward the lower gt index, then the lower prediction index.
inline std::vector<JointMatch> match_joints(const std::vector<Joint>& pred,
                                            const std::vector<GTJoint>& gt,
                                            double threshold_fraction = 0.5) {
    if (!(threshold_fraction > 0.0))
        throw InvalidConfig("threshold fraction must be positive");
    struct Candidate {
        double distance;
        int gt;
        int pred;
    };
    std::vector<Candidate> candidates;
    for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
        const GTJoint& t = gt[static_cast<std::size_t>(g)];
        const double limit = threshold_fraction * t.head_size;
        for (int p = 0; p < static_cast<int>(pred.size()); ++p) {
            const double dx = pred[static_cast<std::size_t>(p)].x - t.joint.x;
            const double dy = pred[static_cast<std::size_t>(p)].y - t.joint.y;
            const double d = std::hypot(dx, dy);
            if (d <= limit) candidates.push_back({d, g, p});
        }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.distance != b.distance) return a.distance < b.distance;
                  if (a.gt != b.gt) return a.gt < b.gt;
                  return a.pred < b.pred;
              });
    std::vector<char> pred_used(pred.size(), 0);
    std::vector<char> gt_used(gt.size(), 0);
    std::vector<JointMatch> matches;
    for (const Candidate& c : candidates) {
        if (pred_used[static_cast<std::size_t>(c.pred)] ||
            gt_used[static_cast<std::size_t>(c.gt)])
            continue;
        pred_used[static_cast<std::size_t>(c.pred)] = 1;
        gt_used[static_cast<std::size_t>(c.gt)] = 1;
        matches.push_back({c.pred, c.gt, c.distance});
    }
    return matches;
}

/// Per-joint-class counts accumulated by the MOT evaluation.
struct MotCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t idsw = 0;
    std::int64_t gt = 0;
    double matched_distance = 0.0;  // sum of threshold-normalized distances
};

struct EvalReport {
    std::vector<std::string> joint_names;
    std::vector<double> ap;         // filled by compute_map
    std::vector<double> mota;
    std::vector<double> motp;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<MotCounts> counts;
    double map_total = 0.0;
    double mota_total = 0.0;
    double motp_total = 0.0;
    double precision_total = 0.0;
    double recall_total = 0.0;
};

namespace detail {

inline const JointSchema& schema_for(const GroundTruth& gt) {
    const JointSchema* schema = find_schema(gt.schema);
    if (!schema) throw SchemaMismatch("unknown schema '" + gt.schema + "'");
    return *schema;
}

inline void check_pose_schema(const Pose& pose, const JointSchema& schema) {
    if (pose.schema != schema.name)
        throw SchemaMismatch("pose schema '" + pose.schema +
                             "' does not match ground truth '" + schema.name + "'");
    if (static_cast<int>(pose.joints.size()) != schema.n_joints())
        throw SchemaMismatch("expected " + std::to_string(schema.n_joints()) +
                             " joints, got " + std::to_string(pose.joints.size()));
}

}  // namespace detail

/// Per-joint average precision and total mAP. Predictions are the visible
/// joints of the per-frame instances, scored by joint confidence, matched
/// greedily in descending score order within the PCKh distance gate. AP is
/// the area under the all-point interpolated precision/recall curve.
inline EvalReport compute_map(const std::vector<std::vector<Instance>>& predictions,
                              const GroundTruth& gt,
                              double threshold_fraction = 0.5) {
    const JointSchema& schema = detail::schema_for(gt);
    const int n_classes = schema.n_joints();
    const std::size_t n_frames = gt.frames.size();

    EvalReport report;
    report.joint_names = schema.joint_names;
    report.ap.assign(static_cast<std::size_t>(n_classes), 0.0);

    struct ScoredJoint {
        double score;
        std::size_t frame;
        double x, y;
    };
    double ap_sum = 0.0;
    for (int cls = 0; cls < n_classes; ++cls) {
        std::vector<ScoredJoint> preds;
        std::vector<std::vector<GTJoint>> targets(n_frames);
        std::int64_t total_gt = 0;
        for (std::size_t f = 0; f < n_frames; ++f) {
            for (const GTInstance& inst : gt.frames[f]) {
                detail::check_pose_schema(inst.pose, schema);
                const Joint& j = inst.pose.joints[static_cast<std::size_t>(cls)];
                if (!j.visible) continue;
                targets[f].push_back({inst.track_id, j, inst.head_size});
                ++total_gt;
            }
            if (f < predictions.size()) {
                for (const Instance& inst : predictions[f]) {
                    detail::check_pose_schema(inst.pose, schema);
                    const Joint& j = inst.pose.joints[static_cast<std::size_t>(cls)];
                    if (!j.visible) continue;
                    preds.push_back({j.confidence, f, j.x, j.y});
                }
            }
        }
        // Descending score; ties resolved by frame then insertion order so the
        // curve is invariant under order-preserving score transforms.
        std::stable_sort(preds.begin(), preds.end(),
                         [](const ScoredJoint& a, const ScoredJoint& b) {
                             return a.score > b.score;
                         });

        std::vector<std::vector<char>> used(n_frames);
        for (std::size_t f = 0; f < n_frames; ++f)
            used[f].assign(targets[f].size(), 0);

        double ap = 0.0;
        if (total_gt > 0) {
            std::int64_t tp = 0, fp = 0;
            std::vector<double> precision_curve, recall_curve;
            precision_curve.reserve(preds.size());
            recall_curve.reserve(preds.size());
            for (const ScoredJoint& p : preds) {
                int best = -1;
                double best_dist = std::numeric_limits<double>::infinity();
                const auto& frame_targets = targets[p.frame];
                for (int g = 0; g < static_cast<int>(frame_targets.size()); ++g) {
                    if (used[p.frame][static_cast<std::size_t>(g)]) continue;
                    const GTJoint& t = frame_targets[static_cast<std::size_t>(g)];
                    const double d = std::hypot(p.x - t.joint.x, p.y - t.joint.y);
                    if (d <= threshold_fraction * t.head_size && d < best_dist) {
                        best_dist = d;
                        best = g;
                    }
                }
                if (best >= 0) {
                    used[p.frame][static_cast<std::size_t>(best)] = 1;
                    ++tp;
                } else {
                    ++fp;
                }
                precision_curve.push_back(static_cast<double>(tp) /
                                          static_cast<double>(tp + fp));
                recall_curve.push_back(static_cast<double>(tp) /
                                       static_cast<double>(total_gt));
            }
            // All-point interpolation: precision envelope from the right.
            for (std::size_t i = precision_curve.size(); i-- > 1;)
                precision_curve[i - 1] =
                    std::max(precision_curve[i - 1], precision_curve[i]);
            double prev_recall = 0.0;
            for (std::size_t i = 0; i < precision_curve.size(); ++i) {
                ap += (recall_curve[i] - prev_recall) * precision_curve[i];
                prev_recall = recall_curve[i];
            }
        }
        report.ap[static_cast<std::size_t>(cls)] = ap;
        ap_sum += ap;
    }
    report.map_total = n_classes > 0 ? ap_sum / n_classes : 0.0;
    return report;
}

/// CLEAR-MOT evaluation of tracked instances against ground truth. Joints are
/// matched per class per frame; an id switch is a matched gt joint whose
/// predicted id differs from the id of that track's previous match (the
/// previous id persists across unmatched gaps). MOTP is the mean matched
/// distance normalized by the match threshold.
inline EvalReport compute_mot(const std::vector<std::vector<Instance>>& tracked,
                              const GroundTruth& gt,
                              double threshold_fraction = 0.5) {
    const JointSchema& schema = detail::schema_for(gt);
    const int n_classes = schema.n_joints();
    if (gt.frames.empty()) throw EmptyGroundTruth("ground truth has no frames");
    if (tracked.size() != gt.frames.size())
        throw ShapeMismatch("tracked frames " + std::to_string(tracked.size()) +
                            " vs ground truth " + std::to_string(gt.frames.size()));

    EvalReport report;
    report.joint_names = schema.joint_names;
    report.counts.assign(static_cast<std::size_t>(n_classes), MotCounts{});

    // last matched predicted id per (gt track, joint class)
    std::map<std::pair<std::int64_t, int>, std::int64_t> last_id;

    for (std::size_t f = 0; f < gt.frames.size(); ++f) {
        for (int cls = 0; cls < n_classes; ++cls) {
            MotCounts& counts = report.counts[static_cast<std::size_t>(cls)];
            std::vector<GTJoint> targets;
            for (const GTInstance& inst : gt.frames[f]) {
                detail::check_pose_schema(inst.pose, schema);
                const Joint& j = inst.pose.joints[static_cast<std::size_t>(cls)];
                if (j.visible) targets.push_back({inst.track_id, j, inst.head_size});
            }
            std::vector<Joint> preds;
            std::vector<std::int64_t> pred_ids;
            for (const Instance& inst : tracked[f]) {
                detail::check_pose_schema(inst.pose, schema);
                if (!inst.id) continue;
                const Joint& j = inst.pose.joints[static_cast<std::size_t>(cls)];
                if (!j.visible) continue;
                preds.push_back(j);
                pred_ids.push_back(*inst.id);
            }

            const std::vector<JointMatch> matches =
                match_joints(preds, targets, threshold_fraction);
            counts.gt += static_cast<std::int64_t>(targets.size());
            counts.tp += static_cast<std::int64_t>(matches.size());
            counts.fn += static_cast<std::int64_t>(targets.size() - matches.size());
            counts.fp += static_cast<std::int64_t>(preds.size() - matches.size());
            for (const JointMatch& m : matches) {
                const GTJoint& t = targets[static_cast<std::size_t>(m.gt)];
                const double limit = threshold_fraction * t.head_size;
                counts.matched_distance += limit > 0.0 ? m.distance / limit : 0.0;
                const std::int64_t pid = pred_ids[static_cast<std::size_t>(m.pred)];
                const auto key = std::make_pair(t.track_id, cls);
                auto it = last_id.find(key);
                if (it != last_id.end() && it->second != pid) ++counts.idsw;
                last_id[key] = pid;
            }
        }
    }

    MotCounts total;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int cls = 0; cls < n_classes; ++cls) {
        const MotCounts& c = report.counts[static_cast<std::size_t>(cls)];
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
        total.idsw += c.idsw;
        total.gt += c.gt;
        total.matched_distance += c.matched_distance;
        report.mota.push_back(
            c.gt > 0 ? 1.0 - static_cast<double>(c.fn + c.fp + c.idsw) /
                                 static_cast<double>(c.gt)
                     : nan);
        report.motp.push_back(c.tp > 0 ? c.matched_distance /
                                             static_cast<double>(c.tp)
                                       : 0.0);
        report.precision.push_back(
            c.tp + c.fp > 0
                ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)
                : 1.0);
        report.recall.push_back(
            c.gt > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.gt)
                     : 1.0);
    }
    if (total.gt == 0) throw EmptyGroundTruth("ground truth has no visible joints");
    report.mota_total = 1.0 - static_cast<double>(total.fn + total.fp + total.idsw) /
                                  static_cast<double>(total.gt);
    report.motp_total =
        total.tp > 0 ? total.matched_distance / static_cast<double>(total.tp) : 0.0;
    report.precision_total =
        total.tp + total.fp > 0
            ? static_cast<double>(total.tp) / static_cast<double>(total.tp + total.fp)
            : 1.0;
    report.recall_total =
        static_cast<double>(total.tp) / static_cast<double>(total.gt);
    return report;
}

/// Full evaluation: MOT metrics plus per-joint AP merged into one report.
inline EvalReport evaluate_all(const std::vector<std::vector<Instance>>& tracked,
                               const GroundTruth& gt,
                               double threshold_fraction = 0.5) {
    EvalReport report = compute_mot(tracked, gt, threshold_fraction);
    const EvalReport map_report = compute_map(tracked, gt, threshold_fraction);
    report.ap = map_report.ap;
    report.map_total = map_report.map_total;
    return report;
}

}  // namespace flowtrack
