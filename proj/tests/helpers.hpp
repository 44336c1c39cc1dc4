// Shared test utilities: deterministic random generators and the
// independent brute-force oracles the implementation is checked against.
// Everything here must stay structurally independent of the library code
// paths it verifies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/metrics.hpp"
#include "flowtrack/similarity.hpp"
#include "flowtrack/synth.hpp"
#include "flowtrack/tracker.hpp"

namespace testutil {

// Bit-level uniform draws so expected values do not depend on the standard
// library's distribution implementations.
class Rand {
public:
    explicit Rand(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    std::uint64_t bits() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

inline flowtrack::Pose random_pose(Rand& rand, const flowtrack::JointSchema& schema,
                                   double lo = 0.0, double hi = 100.0) {
    flowtrack::Pose pose;
    pose.schema = schema.name;
    for (int i = 0; i < schema.n_joints(); ++i) {
        flowtrack::Joint j;
        j.x = rand.uniform(lo, hi);
        j.y = rand.uniform(lo, hi);
        j.confidence = rand.uniform(0.5, 1.0);
        j.visible = true;
        pose.joints.push_back(j);
    }
    return pose;
}

inline flowtrack::BBox random_box(Rand& rand, double extent = 10.0) {
    flowtrack::BBox b;
    b.x_min = rand.uniform(0.0, extent);
    b.y_min = rand.uniform(0.0, extent);
    b.x_max = b.x_min + rand.uniform(0.5, extent);
    b.y_max = b.y_min + rand.uniform(0.5, extent);
    b.score = rand.uniform(0.0, 1.0);
    b.source = rand.uniform() < 0.5 ? flowtrack::BoxSource::detector
                                    : flowtrack::BoxSource::flow;
    return b;
}

// ---------------------------------------------------------------------------
// Brute-force NMS oracle: repeatedly scan the remaining boxes for the best
// one under the documented ordering, keep it, erase everything overlapping.
// ---------------------------------------------------------------------------

inline bool nms_precedes(const flowtrack::BBox& a, const flowtrack::BBox& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source != b.source) return a.source == flowtrack::BoxSource::detector;
    if (a.x_min != b.x_min) return a.x_min < b.x_min;
    if (a.y_min != b.y_min) return a.y_min < b.y_min;
    if (a.x_max != b.x_max) return a.x_max < b.x_max;
    return a.y_max < b.y_max;
}

inline std::vector<flowtrack::BBox> oracle_nms(std::vector<flowtrack::BBox> boxes,
                                               double threshold) {
    std::vector<flowtrack::BBox> kept;
    while (!boxes.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < boxes.size(); ++i)
            if (nms_precedes(boxes[i], boxes[best])) best = i;
        const flowtrack::BBox chosen = boxes[best];
        kept.push_back(chosen);
        std::vector<flowtrack::BBox> rest;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (i == best) continue;
            if (flowtrack::iou(chosen, boxes[i]) < threshold)
                rest.push_back(boxes[i]);
        }
        boxes = std::move(rest);
    }
    return kept;
}

inline bool same_box(const flowtrack::BBox& a, const flowtrack::BBox& b) {
    return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max &&
           a.y_max == b.y_max && a.score == b.score && a.source == b.source;
}

inline bool same_box_set(std::vector<flowtrack::BBox> a,
                         std::vector<flowtrack::BBox> b) {
    if (a.size() != b.size()) return false;
    auto key = [](const flowtrack::BBox& x) {
        return std::make_tuple(x.x_min, x.y_min, x.x_max, x.y_max, x.score,
                               x.source == flowtrack::BoxSource::detector);
    };
    auto less = [&](const flowtrack::BBox& l, const flowtrack::BBox& r) {
        return key(l) < key(r);
    };
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_box(a[i], b[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Greedy-assignment oracle: literal repeated full re-scan of the remaining
// submatrix for the global maximum.
// ---------------------------------------------------------------------------

struct OraclePair {
    int row;
    std::int64_t row_id;
    int col;
};

inline std::pair<std::vector<OraclePair>, std::vector<int>> oracle_greedy(
    const flowtrack::SimilarityMatrix& m, double min_sim) {
    std::vector<char> row_done(static_cast<std::size_t>(m.rows), 0);
    std::vector<char> col_done(static_cast<std::size_t>(m.cols), 0);
    std::vector<OraclePair> pairs;
    while (true) {
        int best_r = -1, best_c = -1;
        double best = min_sim;
        for (int r = 0; r < m.rows; ++r) {
            if (row_done[static_cast<std::size_t>(r)]) continue;
            for (int c = 0; c < m.cols; ++c) {
                if (col_done[static_cast<std::size_t>(c)]) continue;
                if (m.at(r, c) > best) {
                    best = m.at(r, c);
                    best_r = r;
                    best_c = c;
                }
            }
        }
        if (best_r < 0) break;
        row_done[static_cast<std::size_t>(best_r)] = 1;
        col_done[static_cast<std::size_t>(best_c)] = 1;
        pairs.push_back({best_r, m.row_ids[static_cast<std::size_t>(best_r)], best_c});
    }
    std::vector<int> unmatched;
    for (int c = 0; c < m.cols; ++c)
        if (!col_done[static_cast<std::size_t>(c)]) unmatched.push_back(c);
    return {pairs, unmatched};
}

inline flowtrack::SimilarityMatrix random_matrix(Rand& rand, int max_dim = 8) {
    flowtrack::SimilarityMatrix m;
    m.rows = rand.uniform_int(0, max_dim);
    m.cols = rand.uniform_int(0, max_dim);
    m.values.resize(static_cast<std::size_t>(m.rows) * m.cols);
    for (double& v : m.values) v = rand.uniform();
    // occasional exact ties to exercise the tie-break rules
    if (m.rows > 1 && m.cols > 1 && rand.uniform() < 0.3) {
        m.values[0] = m.values[m.values.size() - 1];
    }
    for (int r = 0; r < m.rows; ++r) {
        m.row_ids.push_back(100 + r * 3);
        m.row_src_frame.push_back(0);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Independent CLEAR-MOT recount: per frame, per class, quadratic matching by
// repeated minimum-distance scan, with straightforward bookkeeping.
// ---------------------------------------------------------------------------

struct MotTotals {
    long long tp = 0, fp = 0, fn = 0, idsw = 0, gt = 0;
};

inline MotTotals oracle_mot_recount(
    const std::vector<std::vector<flowtrack::Instance>>& tracked,
    const flowtrack::GroundTruth& gt, double threshold_fraction = 0.5) {
    const flowtrack::JointSchema& schema = *flowtrack::find_schema(gt.schema);
    MotTotals totals;
    std::map<std::pair<std::int64_t, int>, std::int64_t> last;
    for (std::size_t f = 0; f < gt.frames.size(); ++f) {
        for (int cls = 0; cls < schema.n_joints(); ++cls) {
            struct G {
                std::int64_t tid;
                double x, y, limit;
                bool used = false;
            };
            struct P {
                std::int64_t pid;
                double x, y;
                bool used = false;
            };
            std::vector<G> gts;
            std::vector<P> preds;
            for (const flowtrack::GTInstance& inst : gt.frames[f]) {
                const flowtrack::Joint& j = inst.pose.joints[static_cast<std::size_t>(cls)];
                if (j.visible)
                    gts.push_back({inst.track_id, j.x, j.y,
                                   threshold_fraction * inst.head_size});
            }
            if (f < tracked.size()) {
                for (const flowtrack::Instance& inst : tracked[f]) {
                    if (!inst.id) continue;
                    const flowtrack::Joint& j =
                        inst.pose.joints[static_cast<std::size_t>(cls)];
                    if (j.visible) preds.push_back({*inst.id, j.x, j.y});
                }
            }
            totals.gt += static_cast<long long>(gts.size());
            while (true) {
                double best = std::numeric_limits<double>::infinity();
                int bg = -1, bp = -1;
                for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
                    if (gts[static_cast<std::size_t>(g)].used) continue;
                    for (int p = 0; p < static_cast<int>(preds.size()); ++p) {
                        if (preds[static_cast<std::size_t>(p)].used) continue;
                        const double d =
                            std::hypot(gts[static_cast<std::size_t>(g)].x -
                                           preds[static_cast<std::size_t>(p)].x,
                                       gts[static_cast<std::size_t>(g)].y -
                                           preds[static_cast<std::size_t>(p)].y);
                        if (d <= gts[static_cast<std::size_t>(g)].limit && d < best) {
                            best = d;
                            bg = g;
                            bp = p;
                        }
                    }
                }
                if (bg < 0) break;
                gts[static_cast<std::size_t>(bg)].used = true;
                preds[static_cast<std::size_t>(bp)].used = true;
                ++totals.tp;
                const auto key =
                    std::make_pair(gts[static_cast<std::size_t>(bg)].tid, cls);
                auto it = last.find(key);
                if (it != last.end() &&
                    it->second != preds[static_cast<std::size_t>(bp)].pid)
                    ++totals.idsw;
                last[key] = preds[static_cast<std::size_t>(bp)].pid;
            }
            for (const G& g : gts)
                if (!g.used) ++totals.fn;
            for (const P& p : preds)
                if (!p.used) ++totals.fp;
        }
    }
    return totals;
}

// ---------------------------------------------------------------------------
// Canned scenarios shared between unit and acceptance tests.
// ---------------------------------------------------------------------------

inline flowtrack::Scenario separated_actors_scenario(int n_frames = 10,
                                                     std::uint64_t seed = 1) {
    flowtrack::Scenario scn;
    scn.n_frames = n_frames;
    scn.width = 640;
    scn.height = 480;
    scn.seed = seed;
    flowtrack::ActorSpec a0;
    a0.track_id = 0;
    a0.start_x = 80.0;
    a0.start_y = 100.0;
    a0.motion.vx = 6.0;
    a0.motion.vy = 2.0;
    flowtrack::ActorSpec a1;
    a1.track_id = 1;
    a1.start_x = 300.0;
    a1.start_y = 150.0;
    a1.motion.type = flowtrack::MotionType::sinusoidal;
    a1.motion.vx = -4.0;
    a1.motion.amplitude_y = 10.0;
    a1.motion.period = 8.0;
    flowtrack::ActorSpec a2;
    a2.track_id = 2;
    a2.start_x = 500.0;
    a2.start_y = 300.0;
    a2.motion.vx = -5.0;
    a2.motion.vy = -6.0;
    scn.actors = {a0, a1, a2};
    return scn;
}

inline flowtrack::Scenario fast_miss_scenario(std::uint64_t seed) {
    flowtrack::Scenario scn;
    scn.n_frames = 12;
    scn.width = 520;
    scn.height = 400;
    scn.seed = seed;
    flowtrack::ActorSpec a0;
    a0.track_id = 0;
    a0.start_x = 60.0;
    a0.start_y = 120.0;
    a0.motion.vx = 16.0;
    a0.motion.vy = 4.0;
    flowtrack::ActorSpec a1;
    a1.track_id = 1;
    a1.start_x = 250.0;
    a1.start_y = 160.0;
    a1.motion.vx = 14.0;
    a1.motion.vy = -6.0;
    flowtrack::ActorSpec a2;
    a2.track_id = 2;
    a2.start_x = 430.0;
    a2.start_y = 280.0;
    a2.motion.vx = -18.0;
    a2.motion.vy = 2.0;
    scn.actors = {a0, a1, a2};
    return scn;
}

inline flowtrack::Scenario occlusion_scenario() {
    flowtrack::Scenario scn;
    scn.n_frames = 10;
    scn.width = 480;
    scn.height = 360;
    scn.seed = 3;
    flowtrack::ActorSpec a;
    a.track_id = 0;
    a.start_x = 100.0;
    a.start_y = 120.0;
    a.motion.vx = 8.0;
    a.absent_frames = {4, 5};
    flowtrack::ActorSpec b;
    b.track_id = 1;
    b.start_x = 330.0;
    b.start_y = 220.0;
    b.motion.vx = -6.0;
    b.motion.vy = 4.0;
    scn.actors = {a, b};
    return scn;
}

inline flowtrack::Scenario fast_translation_scenario() {
    flowtrack::Scenario scn;
    scn.n_frames = 6;
    scn.width = 640;
    scn.height = 360;
    scn.seed = 5;
    flowtrack::ActorSpec a;
    a.track_id = 0;
    a.start_x = 80.0;
    a.start_y = 150.0;
    a.motion.vx = 90.0;
    scn.actors = {a};
    return scn;
}

/// Zero-noise end-to-end run over a generated scene; returns the tracks.
inline std::vector<std::vector<flowtrack::Instance>> run_perfect_pipeline(
    const flowtrack::Scenario& scn, const flowtrack::GeneratedScene& scene,
    flowtrack::TrackerConfig cfg) {
    const flowtrack::NoiseModel zero;
    const flowtrack::SyntheticDetector det(scene.gt, zero, scn.seed, scn.width,
                                           scn.height);
    const flowtrack::SyntheticPoseEstimator pose(scene.gt, zero, scn.seed);
    return flowtrack::run_sequence(scn.n_frames, det, pose, scene.flows, cfg,
                                   flowtrack::posetrack15_schema());
}

}  // namespace testutil
