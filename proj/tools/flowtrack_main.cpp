// flowtrack command line: track / evaluate / simulate / inspect.
//
// Exit codes: 0 success, 2 unusable input (files, flags, formats),
// 3 internal invariant violation.

#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowtrack/flowtrack.hpp"

namespace {

using namespace flowtrack;

struct TrackOptions {
    std::string bundle;
    std::string metric = "flow";
    std::string multi_flow_agg = "most_recent";
    int l_q = 3;
    double box_thresh = 0.5;
    double joint_thresh = 0.4;
    double nms_iou = 0.5;
    double min_sim = 0.0;
    double expand = 0.15;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 1;
    bool no_flow_boxes = false;
};

int run_track(const TrackOptions& opt) {
    const SequenceBundle bundle = load_bundle(opt.bundle);
    if (bundle.poses_path.empty())
        throw ParseError("bundle " + opt.bundle + " has no poses file");
    const JointSchema& schema = *find_schema(bundle.schema);

    TrackerConfig cfg;
    cfg.l_q = opt.l_q;
    cfg.box_drop_threshold = opt.box_thresh;
    cfg.joint_drop_threshold = opt.joint_thresh;
    cfg.nms_iou_threshold = opt.nms_iou;
    cfg.similarity_metric = parse_metric(opt.metric);
    cfg.multi_flow_aggregation = parse_aggregation(opt.multi_flow_agg);
    cfg.min_match_similarity = opt.min_sim;
    cfg.expand_fraction = opt.expand;
    cfg.use_flow_boxes = !opt.no_flow_boxes;
    cfg.threads = opt.threads;
    cfg.validate();

    std::vector<FlowField> flows = load_bundle_flows(bundle);
    const bool metric_needs_flow =
        cfg.similarity_metric == SimilarityMetric::flow ||
        cfg.similarity_metric == SimilarityMetric::multi_flow;
    if (flows.empty() && bundle.frames > 1) {
        if (metric_needs_flow)
            throw MissingFlow("bundle " + opt.bundle +
                              " has no flow files but metric '" + opt.metric +
                              "' requires them");
        if (cfg.use_flow_boxes) {
            log_info("bundle has no flow files; disabling flow-box generation");
            cfg.use_flow_boxes = false;
        }
    }

    std::ostringstream resolved;
    resolved << "track bundle=" << opt.bundle << " metric=" << opt.metric
             << " multi-flow-agg=" << to_string(cfg.multi_flow_aggregation)
             << " lq=" << cfg.l_q << " box-thresh=" << cfg.box_drop_threshold
             << " joint-thresh=" << cfg.joint_drop_threshold
             << " nms-iou=" << cfg.nms_iou_threshold
             << " min-sim=" << cfg.min_match_similarity
             << " expand=" << cfg.expand_fraction
             << " flow-boxes=" << (cfg.use_flow_boxes ? 1 : 0)
             << " threads=" << cfg.threads << " seed=" << opt.seed
             << " out=" << opt.out;
    log_info(resolved.str());

    std::vector<std::vector<BBox>> det_frames = read_detections(bundle.detections_path);
    if (static_cast<int>(det_frames.size()) > bundle.frames)
        throw ParseError("detections file covers " +
                         std::to_string(det_frames.size()) +
                         " frames but the manifest declares " +
                         std::to_string(bundle.frames));
    PoseFile pose_pool = read_poses(bundle.poses_path);
    if (static_cast<int>(pose_pool.frames.size()) > bundle.frames)
        throw ParseError("poses file covers " +
                         std::to_string(pose_pool.frames.size()) +
                         " frames but the manifest declares " +
                         std::to_string(bundle.frames));
    if (pose_pool.schema != bundle.schema)
        throw SchemaMismatch("poses file uses schema '" + pose_pool.schema +
                             "' but the manifest declares '" + bundle.schema + "'");
    const FileDetectionProvider detections(std::move(det_frames));
    const FilePoseProvider poses(std::move(pose_pool), schema);
    const auto tracks =
        run_sequence(bundle.frames, detections, poses, flows, cfg, schema);

    std::size_t n_instances = 0;
    for (const auto& frame : tracks) n_instances += frame.size();
    log_info("tracked " + std::to_string(n_instances) + " instances over " +
             std::to_string(tracks.size()) + " frames");
    write_poses(opt.out, tracks, bundle.schema);
    return 0;
}

int run_evaluate(const std::string& tracks_path, const std::string& gt_path,
                 const std::string& report_path) {
    log_info("evaluate tracks=" + tracks_path + " gt=" + gt_path +
             (report_path.empty() ? "" : " report=" + report_path));
    const PoseFile tracks = read_poses(tracks_path);
    const GroundTruth gt = read_ground_truth(gt_path);
    if (tracks.schema != gt.schema)
        throw SchemaMismatch("tracks use schema '" + tracks.schema +
                             "' but ground truth uses '" + gt.schema + "'");
    std::vector<std::vector<Instance>> frames = tracks.frames;
    if (frames.size() > gt.frames.size())
        throw ParseError("tracks cover " + std::to_string(frames.size()) +
                         " frames but ground truth only " +
                         std::to_string(gt.frames.size()));
    frames.resize(gt.frames.size());

    const EvalReport report = evaluate_all(frames, gt);
    std::cout << format_report_table(report);
    if (!report_path.empty()) write_report(report_path, report);
    return 0;
}

struct SimulateOptions {
    std::string scenario;
    std::string out_bundle;
    double miss_rate = 0.0;
    double fp_rate = 0.0;
    double box_jitter = 0.0;
    double joint_noise = 0.0;
    double score_noise = 0.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_simulate(const SimulateOptions& opt) {
    Scenario scn = read_scenario(opt.scenario);
    if (opt.seed_set) scn.seed = opt.seed;
    NoiseModel noise;
    noise.detector_miss_rate = opt.miss_rate;
    noise.false_positive_rate = opt.fp_rate;
    noise.box_jitter = opt.box_jitter;
    noise.joint_noise_sigma = opt.joint_noise;
    noise.score_noise_sigma = opt.score_noise;
    noise.validate();

    std::ostringstream resolved;
    resolved << "simulate scenario=" << opt.scenario << " out=" << opt.out_bundle
             << " miss-rate=" << noise.detector_miss_rate
             << " fp-rate=" << noise.false_positive_rate
             << " box-jitter=" << noise.box_jitter
             << " joint-noise=" << noise.joint_noise_sigma
             << " score-noise=" << noise.score_noise_sigma << " seed=" << scn.seed;
    log_info(resolved.str());

    const SequenceBundle bundle = materialize_bundle(scn, noise, opt.out_bundle);
    log_info("bundle written to " + bundle.root.string() + " (" +
             std::to_string(bundle.frames) + " frames, " +
             std::to_string(bundle.width) + "x" + std::to_string(bundle.height) +
             ")");
    return 0;
}

int run_inspect(const std::string& bundle_path, const std::string& poses_path,
                const std::string& gt_path, const std::string& flo_path) {
    log_info("inspect bundle=" + (bundle_path.empty() ? "-" : bundle_path) +
             " poses=" + (poses_path.empty() ? "-" : poses_path) +
             " gt=" + (gt_path.empty() ? "-" : gt_path) +
             " flo=" + (flo_path.empty() ? "-" : flo_path));
    if (!bundle_path.empty()) {
        const SequenceBundle bundle = load_bundle(bundle_path);
        std::cout << "bundle: " << bundle.root.string() << "\n"
                  << "frames: " << bundle.frames << "\n"
                  << "size: " << bundle.width << "x" << bundle.height << "\n"
                  << "schema: " << bundle.schema << "\n"
                  << "detections: " << bundle.detections_path.string() << "\n"
                  << "poses: "
                  << (bundle.poses_path.empty() ? "-" : bundle.poses_path.string())
                  << "\n"
                  << "flows: "
                  << (bundle.flow_dir.empty() ? "-" : bundle.flow_dir.string())
                  << "\n"
                  << "ground_truth: "
                  << (bundle.ground_truth_path.empty()
                          ? "-"
                          : bundle.ground_truth_path.string())
                  << "\n";
        return 0;
    }
    if (!poses_path.empty()) {
        const PoseFile file = read_poses(poses_path);
        std::size_t n = 0;
        for (const auto& f : file.frames) n += f.size();
        std::cout << "poses: " << poses_path << "\n"
                  << "schema: " << file.schema << "\n"
                  << "frames: " << file.frames.size() << "\n"
                  << "instances: " << n << "\n";
        return 0;
    }
    if (!gt_path.empty()) {
        const GroundTruth gt = read_ground_truth(gt_path);
        std::size_t n = 0;
        for (const auto& f : gt.frames) n += f.size();
        std::cout << "ground truth: " << gt_path << "\n"
                  << "schema: " << gt.schema << "\n"
                  << "frames: " << gt.frames.size() << "\n"
                  << "instances: " << n << "\n";
        return 0;
    }
    if (!flo_path.empty()) {
        const FlowField f = read_flo(flo_path);
        double max_mag = 0.0;
        for (std::size_t i = 0; i < f.u.size(); ++i)
            max_mag = std::max(max_mag, std::hypot(f.u[i], f.v[i]));
        std::cout << "flow: " << flo_path << "\n"
                  << "size: " << f.width << "x" << f.height << "\n"
                  << "max displacement: " << max_mag << "\n";
        return 0;
    }
    throw ParseError("inspect needs --bundle, --poses, --gt, or --flo");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-based multi-person pose tracking"};
    app.require_subcommand(1);

    TrackOptions track;
    CLI::App* track_cmd = app.add_subcommand("track", "run the tracker on a bundle");
    track_cmd->add_option("--bundle", track.bundle, "sequence bundle directory")
        ->required();
    track_cmd->add_option("--metric", track.metric,
                          "similarity metric: bbox|pose|flow|multi_flow");
    track_cmd->add_option("--multi-flow-agg", track.multi_flow_agg,
                          "multi_flow aggregation: most_recent|max_over_frames");
    track_cmd->add_option("--lq", track.l_q, "history deque capacity");
    track_cmd->add_option("--box-thresh", track.box_thresh,
                          "detection score drop threshold");
    track_cmd->add_option("--joint-thresh", track.joint_thresh,
                          "joint confidence drop threshold");
    track_cmd->add_option("--nms-iou", track.nms_iou, "NMS IoU threshold");
    track_cmd->add_option("--min-sim", track.min_sim,
                          "exclusive similarity floor for id links");
    track_cmd->add_option("--expand", track.expand, "flow box expansion fraction");
    track_cmd->add_option("--out", track.out, "output tracks file")->required();
    track_cmd->add_option("--seed", track.seed,
                          "seed (reserved; file-backed runs are deterministic)");
    track_cmd->add_option("--threads", track.threads,
                          "worker threads for similarity rows");
    track_cmd->add_flag("--no-flow-boxes", track.no_flow_boxes,
                        "disable flow-propagated candidate boxes");

    std::string eval_tracks, eval_gt, eval_report;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "score tracks against ground truth");
    eval_cmd->add_option("--tracks", eval_tracks, "tracks file")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth file")->required();
    eval_cmd->add_option("--report", eval_report, "machine-readable report path");

    SimulateOptions sim;
    CLI::App* sim_cmd =
        app.add_subcommand("simulate", "materialize a bundle from a scenario");
    sim_cmd->add_option("--scenario", sim.scenario, "scenario config")->required();
    sim_cmd->add_option("--out-bundle", sim.out_bundle, "output bundle directory")
        ->required();
    sim_cmd->add_option("--miss-rate", sim.miss_rate, "detector miss rate");
    sim_cmd->add_option("--fp-rate", sim.fp_rate,
                        "expected false positives per frame");
    sim_cmd->add_option("--box-jitter", sim.box_jitter, "box jitter in pixels");
    sim_cmd->add_option("--joint-noise", sim.joint_noise,
                        "joint noise sigma in pixels");
    sim_cmd->add_option("--score-noise", sim.score_noise, "score noise sigma");
    sim_cmd->add_option("--seed", sim.seed, "override the scenario seed")
        ->trigger_on_parse()
        ->each([&sim](const std::string&) { sim.seed_set = true; });

    std::string ins_bundle, ins_poses, ins_gt, ins_flo;
    CLI::App* ins_cmd = app.add_subcommand("inspect", "summarize files");
    ins_cmd->add_option("--bundle", ins_bundle, "bundle directory");
    ins_cmd->add_option("--poses", ins_poses, "pose file");
    ins_cmd->add_option("--gt", ins_gt, "ground-truth file");
    ins_cmd->add_option("--flo", ins_flo, "flow file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (track_cmd->parsed()) return run_track(track);
        if (eval_cmd->parsed()) return run_evaluate(eval_tracks, eval_gt, eval_report);
        if (sim_cmd->parsed()) return run_simulate(sim);
        if (ins_cmd->parsed())
            return run_inspect(ins_bundle, ins_poses, ins_gt, ins_flo);
    } catch (const ParseError& e) {
        log_error(e.what());
        return 2;
    } catch (const SchemaMismatch& e) {
        log_error(e.what());
        return 2;
    } catch (const MissingFlow& e) {
        log_error(e.what());
        return 2;
    } catch (const InvalidScenario& e) {
        log_error(e.what());
        return 2;
    } catch (const InvalidConfig& e) {
        log_error(e.what());
        return 2;
    } catch (const EmptyGroundTruth& e) {
        log_error(e.what());
        return 2;
    } catch (const ShapeMismatch& e) {
        log_error(e.what());
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        log_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log_error(std::string("internal error: ") + e.what());
        return 3;
    }
    return 0;
}
