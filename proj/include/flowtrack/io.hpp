// File formats and sequence plumbing: line-delimited pose/detection/ground
// truth files, scenario configs, sequence bundles, file-backed providers,
// report serialization, and atomic writes.
//
// Pose-bearing files are JSON lines: a header record naming the schema, then
// one record per frame: {"frame":k,"instances":[{"id":3,"score":0.9,
// "joints":[[x,y,confidence,visible],...]},...]}. Ground-truth instances
// additionally carry "head" (head size in pixels) and a mandatory id.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowtrack/core.hpp"
#include "flowtrack/flo_io.hpp"
#include "flowtrack/flow.hpp"
#include "flowtrack/heatmap.hpp"
#include "flowtrack/metrics.hpp"
#include "flowtrack/synth.hpp"
#include "flowtrack/tracker.hpp"

namespace flowtrack {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Logging (level from FLOWTRACK_LOG = error | info | debug; default info)
// ---------------------------------------------------------------------------

enum class LogLevel { error = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("FLOWTRACK_LOG");
        if (!env) return LogLevel::info;
        const std::string value(env);
        if (value == "error") return LogLevel::error;
        if (value == "debug") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

inline void log_line(LogLevel level, const std::string& msg) {
    static const char* names[] = {"error", "info", "debug"};
    if (static_cast<int>(level) <= static_cast<int>(log_level()))
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

inline void log_error(const std::string& msg) { log_line(LogLevel::error, msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::debug, msg); }

// ---------------------------------------------------------------------------
// Atomic writes: content lands under a temporary name, then rename() swings
// it into place so interrupted runs never leave truncated files.
// ---------------------------------------------------------------------------

inline void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ParseError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void atomic_write_flo(const fs::path& path, const FlowField& field) {
    const fs::path tmp = path.string() + ".tmp";
    write_flo(tmp, field);
    fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// JSON-lines helpers
// ---------------------------------------------------------------------------

namespace detail {

inline json parse_record(const std::string& line, const fs::path& path,
                         std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(path.string(), line_no, e.what());
    }
}

template <typename Fn>
void for_each_record(const fs::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        fn(parse_record(line, path, line_no), line_no);
    }
}

inline json joint_to_json(const Joint& j) {
    return json::array({j.x, j.y, j.confidence, j.visible ? 1 : 0});
}

inline Joint joint_from_json(const json& r, const fs::path& path,
                             std::size_t line_no) {
    if (!r.is_array() || r.size() != 4)
        throw ParseError(path.string(), line_no,
                         "joint must be [x, y, confidence, visible]");
    Joint j;
    j.x = r[0].get<double>();
    j.y = r[1].get<double>();
    j.confidence = r[2].get<double>();
    j.visible = r[3].get<double>() != 0.0;
    return j;
}

inline const JointSchema& read_schema_header(const json& record,
                                             const fs::path& path,
                                             std::size_t line_no) {
    if (!record.contains("schema"))
        throw ParseError(path.string(), line_no,
                         "first record must carry the schema name");
    const std::string name = record["schema"].get<std::string>();
    const JointSchema* schema = find_schema(name);
    if (!schema) throw SchemaMismatch("unknown schema '" + name + "'");
    return *schema;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pose files (tracker output and pose pools)
// ---------------------------------------------------------------------------

struct PoseFile {
    std::string schema = "posetrack15";
    std::vector<std::vector<Instance>> frames;
};

inline std::string format_poses(const std::vector<std::vector<Instance>>& frames,
                                const std::string& schema) {
    std::ostringstream out;
    out << json{{"schema", schema}}.dump() << "\n";
    for (std::size_t f = 0; f < frames.size(); ++f) {
        json instances = json::array();
        for (const Instance& inst : frames[f]) {
            json record;
            if (inst.id) record["id"] = *inst.id;
            record["score"] = inst.score;
            json joints = json::array();
            for (const Joint& j : inst.pose.joints)
                joints.push_back(detail::joint_to_json(j));
            record["joints"] = std::move(joints);
            instances.push_back(std::move(record));
        }
        out << json{{"frame", f}, {"instances", std::move(instances)}}.dump()
            << "\n";
    }
    return out.str();
}

inline void write_poses(const fs::path& path,
                        const std::vector<std::vector<Instance>>& frames,
                        const std::string& schema) {
    atomic_write(path, format_poses(frames, schema));
}

inline PoseFile read_poses(const fs::path& path) {
    PoseFile file;
    const JointSchema* schema = nullptr;
    detail::for_each_record(path, [&](const json& record, std::size_t line_no) {
        if (!schema) {
            schema = &detail::read_schema_header(record, path, line_no);
            file.schema = schema->name;
            return;
        }
        if (!record.contains("frame"))
            throw ParseError(path.string(), line_no, "missing frame index");
        const std::size_t frame = record["frame"].get<std::size_t>();
        if (file.frames.size() <= frame) file.frames.resize(frame + 1);
        std::vector<Instance>& slot = file.frames[frame];
        if (!slot.empty())
            throw ParseError(path.string(), line_no,
                             "duplicate record for frame " + std::to_string(frame));
        for (const json& rec : record.value("instances", json::array())) {
            Instance inst;
            inst.pose.schema = schema->name;
            if (rec.contains("id")) inst.id = rec["id"].get<std::int64_t>();
            for (const json& j : rec.value("joints", json::array()))
                inst.pose.joints.push_back(detail::joint_from_json(j, path, line_no));
            if (static_cast<int>(inst.pose.joints.size()) != schema->n_joints())
                throw SchemaMismatch(
                    "expected " + std::to_string(schema->n_joints()) +
                    " joints, got " + std::to_string(inst.pose.joints.size()) +
                    " (" + path.string() + ":" + std::to_string(line_no) + ")");
            inst.score = rec.contains("score") ? rec["score"].get<double>()
                                               : mean_confidence(inst.pose);
            slot.push_back(std::move(inst));
        }
    });
    if (!schema) throw ParseError(path.string() + ": empty pose file");
    return file;
}

// ---------------------------------------------------------------------------
// Ground-truth files (pose format + mandatory id and head size)
// ---------------------------------------------------------------------------

inline std::string format_ground_truth(const GroundTruth& gt) {
    std::ostringstream out;
    out << json{{"schema", gt.schema}}.dump() << "\n";
    for (std::size_t f = 0; f < gt.frames.size(); ++f) {
        json instances = json::array();
        for (const GTInstance& inst : gt.frames[f]) {
            json joints = json::array();
            for (const Joint& j : inst.pose.joints)
                joints.push_back(detail::joint_to_json(j));
            instances.push_back(json{{"id", inst.track_id},
                                     {"head", inst.head_size},
                                     {"joints", std::move(joints)}});
        }
        out << json{{"frame", f}, {"instances", std::move(instances)}}.dump()
            << "\n";
    }
    return out.str();
}

inline void write_ground_truth(const fs::path& path, const GroundTruth& gt) {
    atomic_write(path, format_ground_truth(gt));
}

inline GroundTruth read_ground_truth(const fs::path& path) {
    GroundTruth gt;
    const JointSchema* schema = nullptr;
    detail::for_each_record(path, [&](const json& record, std::size_t line_no) {
        if (!schema) {
            schema = &detail::read_schema_header(record, path, line_no);
            gt.schema = schema->name;
            return;
        }
        if (!record.contains("frame"))
            throw ParseError(path.string(), line_no, "missing frame index");
        const std::size_t frame = record["frame"].get<std::size_t>();
        if (gt.frames.size() <= frame) gt.frames.resize(frame + 1);
        for (const json& rec : record.value("instances", json::array())) {
            if (!rec.contains("id") || !rec.contains("head"))
                throw ParseError(path.string(), line_no,
                                 "ground-truth instances need id and head");
            GTInstance inst;
            inst.track_id = rec["id"].get<std::int64_t>();
            inst.head_size = rec["head"].get<double>();
            inst.pose.schema = schema->name;
            for (const json& j : rec.value("joints", json::array()))
                inst.pose.joints.push_back(detail::joint_from_json(j, path, line_no));
            if (static_cast<int>(inst.pose.joints.size()) != schema->n_joints())
                throw SchemaMismatch(
                    "expected " + std::to_string(schema->n_joints()) +
                    " joints, got " + std::to_string(inst.pose.joints.size()) +
                    " (" + path.string() + ":" + std::to_string(line_no) + ")");
            gt.frames[frame].push_back(std::move(inst));
        }
    });
    if (!schema) throw ParseError(path.string() + ": empty ground-truth file");
    return gt;
}

// ---------------------------------------------------------------------------
// Detection files: {"frame":k,"boxes":[[x0,y0,x1,y1,score],...]}
// ---------------------------------------------------------------------------

inline std::string format_detections(
    const std::vector<std::vector<BBox>>& frames) {
    std::ostringstream out;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        json boxes = json::array();
        for (const BBox& b : frames[f])
            boxes.push_back(json::array({b.x_min, b.y_min, b.x_max, b.y_max, b.score}));
        out << json{{"frame", f}, {"boxes", std::move(boxes)}}.dump() << "\n";
    }
    return out.str();
}

inline void write_detections(const fs::path& path,
                             const std::vector<std::vector<BBox>>& frames) {
    atomic_write(path, format_detections(frames));
}

inline std::vector<std::vector<BBox>> read_detections(const fs::path& path) {
    std::vector<std::vector<BBox>> frames;
    detail::for_each_record(path, [&](const json& record, std::size_t line_no) {
        if (!record.contains("frame"))
            throw ParseError(path.string(), line_no, "missing frame index");
        const std::size_t frame = record["frame"].get<std::size_t>();
        if (frames.size() <= frame) frames.resize(frame + 1);
        for (const json& b : record.value("boxes", json::array())) {
            if (!b.is_array() || b.size() != 5)
                throw ParseError(path.string(), line_no,
                                 "box must be [x0, y0, x1, y1, score]");
            BBox box;
            box.x_min = b[0].get<double>();
            box.y_min = b[1].get<double>();
            box.x_max = b[2].get<double>();
            box.y_max = b[3].get<double>();
            box.score = b[4].get<double>();
            box.source = BoxSource::detector;
            frames[frame].push_back(box);
        }
    });
    return frames;
}

// ---------------------------------------------------------------------------
// Heatmap stack fixtures (row-major values per joint)
// ---------------------------------------------------------------------------

inline void write_heatmap_stack(const fs::path& path, const HeatmapStack& stack) {
    json maps = json::array();
    for (const Heatmap& h : stack)
        maps.push_back(
            json{{"width", h.width}, {"height", h.height}, {"values", h.values}});
    atomic_write(path, json{{"heatmaps", std::move(maps)}}.dump() + "\n");
}

inline HeatmapStack read_heatmap_stack(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const json doc = detail::parse_record(buffer.str(), path, 1);
    HeatmapStack stack;
    for (const json& m : doc.value("heatmaps", json::array())) {
        Heatmap h;
        h.width = m["width"].get<int>();
        h.height = m["height"].get<int>();
        h.values = m["values"].get<std::vector<double>>();
        if (h.values.size() != static_cast<std::size_t>(h.width) * h.height)
            throw ParseError(path.string() + ": heatmap value count mismatch");
        stack.push_back(std::move(h));
    }
    return stack;
}

// ---------------------------------------------------------------------------
// Scenario configs (single JSON document)
// ---------------------------------------------------------------------------

inline Scenario read_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const json doc = detail::parse_record(buffer.str(), path, 1);

    Scenario scn;
    try {
        scn.n_frames = doc.at("n_frames").get<int>();
        scn.width = doc.at("width").get<int>();
        scn.height = doc.at("height").get<int>();
        scn.seed = doc.value("seed", 0ULL);
        scn.schema = doc.value("schema", std::string("posetrack15"));
        for (const json& a : doc.value("actors", json::array())) {
            ActorSpec actor;
            actor.track_id = a.at("id").get<std::int64_t>();
            actor.start_x = a.at("start").at(0).get<double>();
            actor.start_y = a.at("start").at(1).get<double>();
            actor.scale = a.value("scale", 1.0);
            if (a.contains("motion")) {
                const json& m = a["motion"];
                actor.motion.type =
                    parse_motion(m.value("type", std::string("constant_velocity")));
                actor.motion.vx = m.value("vx", 0.0);
                actor.motion.vy = m.value("vy", 0.0);
                actor.motion.amplitude_x = m.value("amplitude_x", 0.0);
                actor.motion.amplitude_y = m.value("amplitude_y", 0.0);
                actor.motion.period = m.value("period", 16.0);
                actor.motion.jump_frame = m.value("jump_frame", -1);
                actor.motion.jump_dx = m.value("jump_dx", 0.0);
                actor.motion.jump_dy = m.value("jump_dy", 0.0);
            }
            actor.absent_frames =
                a.value("absent_frames", std::vector<int>{});
            scn.actors.push_back(std::move(actor));
        }
    } catch (const json::exception& e) {
        throw InvalidScenario(path.string() + ": " + e.what());
    }
    return scn;
}

// ---------------------------------------------------------------------------
// Sequence bundles
// ---------------------------------------------------------------------------

/// A directory holding one sequence: manifest.json plus detections, a pose
/// pool, per-gap .flo files, and optional ground truth.
struct SequenceBundle {
    fs::path root;
    int frames = 0;
    int width = 0;
    int height = 0;
    std::string schema = "posetrack15";
    fs::path detections_path;
    fs::path poses_path;       // empty when absent
    fs::path flow_dir;         // empty when absent
    fs::path ground_truth_path;  // empty when absent
};

inline fs::path flow_file_name(int gap_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.flo", gap_index);
    return buf;
}

inline SequenceBundle load_bundle(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw ParseError("cannot open " + manifest_path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const json doc = detail::parse_record(buffer.str(), manifest_path, 1);

    SequenceBundle bundle;
    bundle.root = dir;
    try {
        bundle.frames = doc.at("frames").get<int>();
        bundle.width = doc.at("width").get<int>();
        bundle.height = doc.at("height").get<int>();
        bundle.schema = doc.value("schema", std::string("posetrack15"));
        bundle.detections_path = dir / doc.at("detections").get<std::string>();
        if (doc.contains("poses"))
            bundle.poses_path = dir / doc["poses"].get<std::string>();
        if (doc.contains("flows"))
            bundle.flow_dir = dir / doc["flows"].get<std::string>();
        if (doc.contains("ground_truth"))
            bundle.ground_truth_path = dir / doc["ground_truth"].get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(manifest_path.string() + ": " + e.what());
    }
    if (bundle.frames < 1) throw ParseError(manifest_path.string() + ": no frames");
    if (!find_schema(bundle.schema))
        throw SchemaMismatch("unknown schema '" + bundle.schema + "'");
    if (!fs::exists(bundle.detections_path))
        throw ParseError("missing detections file " +
                         bundle.detections_path.string());
    if (!bundle.poses_path.empty() && !fs::exists(bundle.poses_path))
        throw ParseError("missing poses file " + bundle.poses_path.string());
    if (!bundle.ground_truth_path.empty() && !fs::exists(bundle.ground_truth_path))
        throw ParseError("missing ground-truth file " +
                         bundle.ground_truth_path.string());
    return bundle;
}

/// Loads the bundle's consecutive-gap flow fields, checking dimensions
/// against the manifest. Returns an empty vector when the bundle has none.
inline std::vector<FlowField> load_bundle_flows(const SequenceBundle& bundle) {
    std::vector<FlowField> flows;
    if (bundle.flow_dir.empty() || !fs::exists(bundle.flow_dir)) return flows;
    for (int gap = 0; gap + 1 < bundle.frames; ++gap) {
        const fs::path path = bundle.flow_dir / flow_file_name(gap);
        if (!fs::exists(path))
            throw MissingFlow("bundle lacks flow file " + path.string());
        FlowField field = read_flo(path);
        if (field.width != bundle.width || field.height != bundle.height)
            throw ShapeMismatch("flow file " + path.string() +
                                " does not match manifest dimensions");
        flows.push_back(std::move(field));
    }
    return flows;
}

// ---------------------------------------------------------------------------
// File-backed providers
// ---------------------------------------------------------------------------

class FileDetectionProvider : public DetectionProvider {
public:
    explicit FileDetectionProvider(std::vector<std::vector<BBox>> frames)
        : frames_(std::move(frames)) {}

    std::vector<BBox> detect(int frame_index) const override {
        if (frame_index < 0 || static_cast<std::size_t>(frame_index) >= frames_.size())
            return {};
        return frames_[static_cast<std::size_t>(frame_index)];
    }

private:
    std::vector<std::vector<BBox>> frames_;
};

/// Answers box queries from a per-frame pose pool the same way the synthetic
/// oracle does: best-overlap pose wins, junk pose when nothing overlaps.
class FilePoseProvider : public PoseProvider {
public:
    FilePoseProvider(PoseFile pool, const JointSchema& schema)
        : pool_(std::move(pool)), schema_(&schema) {}

    std::vector<Instance> estimate(int frame_index,
                                   const std::vector<BBox>& boxes) const override {
        std::vector<Instance> out;
        out.reserve(boxes.size());
        const std::vector<Instance>* frame = nullptr;
        if (frame_index >= 0 &&
            static_cast<std::size_t>(frame_index) < pool_.frames.size())
            frame = &pool_.frames[static_cast<std::size_t>(frame_index)];
        for (const BBox& box : boxes) {
            const Instance* best = nullptr;
            double best_iou = 0.0;
            if (frame) {
                for (const Instance& inst : *frame) {
                    double overlap = 0.0;
                    try {
                        overlap = iou(box, bbox_from_pose(inst.pose, true));
                    } catch (const NoJoints&) {
                        continue;
                    }
                    if (overlap > best_iou) {
                        best_iou = overlap;
                        best = &inst;
                    }
                }
            }
            Instance result;
            if (best == nullptr) {
                result.pose.schema = schema_->name;
                for (int i = 0; i < schema_->n_joints(); ++i)
                    result.pose.joints.push_back(
                        {box.center_x(), box.center_y(), 0.05, true});
                result.score = 0.05;
            } else {
                result = *best;
                result.id.reset();
            }
            out.push_back(std::move(result));
        }
        return out;
    }

private:
    PoseFile pool_;
    const JointSchema* schema_;
};

// ---------------------------------------------------------------------------
// Bundle materialization (the simulate pipeline)
// ---------------------------------------------------------------------------

/// Generates a scenario and writes it out as a complete bundle: ground truth,
/// noisy detections, a noisy pose pool, and per-gap .flo files.
inline SequenceBundle materialize_bundle(const Scenario& scn,
                                         const NoiseModel& noise,
                                         const fs::path& out_dir) {
    const GeneratedScene scene = generate(scn);
    fs::create_directories(out_dir / "flow");

    std::vector<std::vector<BBox>> detections;
    const SyntheticDetector detector(scene.gt, noise, scn.seed, scn.width,
                                     scn.height);
    for (int f = 0; f < scn.n_frames; ++f) detections.push_back(detector.detect(f));
    write_detections(out_dir / "detections.jsonl", detections);

    // Pose pool: the oracle's answer for each actor's own box, ids stripped.
    NoiseModel pose_noise = noise;
    pose_noise.detector_miss_rate = 0.0;
    pose_noise.false_positive_rate = 0.0;
    const SyntheticPoseEstimator oracle(scene.gt, pose_noise, scn.seed);
    std::vector<std::vector<Instance>> pool(static_cast<std::size_t>(scn.n_frames));
    for (int f = 0; f < scn.n_frames; ++f) {
        std::vector<BBox> gt_boxes;
        for (const GTInstance& inst : scene.gt.frames[static_cast<std::size_t>(f)])
            gt_boxes.push_back(bbox_from_pose(inst.pose));
        std::vector<Instance> answers = oracle.estimate(f, gt_boxes);
        for (Instance& inst : answers) inst.id.reset();
        pool[static_cast<std::size_t>(f)] = std::move(answers);
    }
    write_poses(out_dir / "poses.jsonl", pool, scn.schema);

    write_ground_truth(out_dir / "gt.jsonl", scene.gt);
    for (std::size_t gap = 0; gap < scene.flows.size(); ++gap)
        atomic_write_flo(out_dir / "flow" / flow_file_name(static_cast<int>(gap)),
                         scene.flows[gap]);

    const json manifest{{"frames", scn.n_frames}, {"width", scn.width},
                        {"height", scn.height},   {"schema", scn.schema},
                        {"detections", "detections.jsonl"},
                        {"poses", "poses.jsonl"}, {"flows", "flow"},
                        {"ground_truth", "gt.jsonl"}};
    atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return load_bundle(out_dir);
}

// ---------------------------------------------------------------------------
// Evaluation reports
// ---------------------------------------------------------------------------

inline std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << std::left;
    auto cell = [&](double v) {
        char buf[32];
        if (std::isnan(v))
            std::snprintf(buf, sizeof(buf), "%8s", "n/a");
        else
            std::snprintf(buf, sizeof(buf), "%8.4f", v);
        return std::string(buf);
    };
    out << "joint              AP     MOTA     MOTP     Prec      Rec\n";
    for (std::size_t i = 0; i < report.joint_names.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%-15s", report.joint_names[i].c_str());
        out << name << cell(i < report.ap.size() ? report.ap[i] : 0.0)
            << cell(report.mota[i]) << cell(report.motp[i])
            << cell(report.precision[i]) << cell(report.recall[i]) << "\n";
    }
    out << "---------------------------------------------------------------\n";
    char total[32];
    std::snprintf(total, sizeof(total), "%-15s", "TOTAL");
    out << total << cell(report.map_total) << cell(report.mota_total)
        << cell(report.motp_total) << cell(report.precision_total)
        << cell(report.recall_total) << "\n";
    char summary[160];
    std::snprintf(summary, sizeof(summary),
                  "mAP Total %.4f  MOTA Total %.4f  MOTP Total %.4f  "
                  "Prec Total %.4f  Rec Total %.4f\n",
                  report.map_total, report.mota_total, report.motp_total,
                  report.precision_total, report.recall_total);
    out << summary;
    return out.str();
}

/// Machine-readable key=value report, one key per line, sorted.
inline std::string format_report_kv(const EvalReport& report) {
    std::map<std::string, std::string> kv;
    auto put = [&](const std::string& key, double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        kv[key] = buf;
    };
    put("map_total", report.map_total);
    put("mota_total", report.mota_total);
    put("motp_total", report.motp_total);
    put("precision_total", report.precision_total);
    put("recall_total", report.recall_total);
    std::int64_t tp = 0, fp = 0, fn = 0, idsw = 0, gt = 0;
    for (std::size_t i = 0; i < report.joint_names.size(); ++i) {
        const std::string& name = report.joint_names[i];
        if (i < report.ap.size()) put("ap_" + name, report.ap[i]);
        put("mota_" + name, report.mota[i]);
        put("motp_" + name, report.motp[i]);
        put("precision_" + name, report.precision[i]);
        put("recall_" + name, report.recall[i]);
        const MotCounts& c = report.counts[i];
        kv["tp_" + name] = std::to_string(c.tp);
        kv["fp_" + name] = std::to_string(c.fp);
        kv["fn_" + name] = std::to_string(c.fn);
        kv["idsw_" + name] = std::to_string(c.idsw);
        kv["gt_" + name] = std::to_string(c.gt);
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
        idsw += c.idsw;
        gt += c.gt;
    }
    kv["tp_total"] = std::to_string(tp);
    kv["fp_total"] = std::to_string(fp);
    kv["fn_total"] = std::to_string(fn);
    kv["idsw_total"] = std::to_string(idsw);
    kv["gt_total"] = std::to_string(gt);
    std::ostringstream out;
    for (const auto& [key, value] : kv) out << key << "=" << value << "\n";
    return out.str();
}

inline void write_report(const fs::path& path, const EvalReport& report) {
    atomic_write(path, format_report_kv(report));
}

}  // namespace flowtrack
