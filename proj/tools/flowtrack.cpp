#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowtrack/eval.hpp"
#include "flowtrack/imaging.hpp"
#include "flowtrack/io.hpp"
#include "flowtrack/matching.hpp"
#include "flowtrack/simulate.hpp"
#include "flowtrack/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 I/O or parse failure, 2 invalid arguments or
// domain error, 3 adequacy-check failure.
constexpr int kOk = 0;
constexpr int kIoOrParseFailure = 1;
constexpr int kInvalidArguments = 2;
constexpr int kInadequate = 3;

struct ManifestSink {
    std::string subcommand;
    json parameters = json::object();
    json inputs = json::object();
    json outputs = json::object();
    json counts = json::object();
    std::optional<std::string> path;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void emit() const {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json manifest{{"tool", "flowtrack"},
                      {"version", flowtrack::kVersion},
                      {"subcommand", subcommand},
                      {"parameters", parameters},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"counts", counts},
                      {"wall_time_seconds", elapsed}};
        if (path) {
            std::ofstream out(*path);
            if (!out) throw flowtrack::IoError("cannot open " + *path + " for writing");
            out << manifest.dump(2) << '\n';
        } else {
            std::cerr << manifest.dump() << '\n';
        }
    }
};

flowtrack::AmbiguityPolicy parse_ambiguity(const std::string& name) {
    return name == "flag-only" ? flowtrack::AmbiguityPolicy::FlagOnly
                               : flowtrack::AmbiguityPolicy::NearestNeighborResolve;
}

// ---------------------------------------------------------------------------
// Frame patterns: printf-style with a single frame-number placeholder
// ("frames/f_%04d.pgm"); numbering may start at 0 or 1 and runs until the
// first gap. A pattern without a placeholder names one literal file.
// ---------------------------------------------------------------------------

bool valid_frame_pattern(const std::string& pattern) {
    int placeholders = 0;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] != '%') continue;
        std::size_t j = i + 1;
        while (j < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[j]))) ++j;
        if (j >= pattern.size() || pattern[j] != 'd') return false;
        ++placeholders;
        i = j;
    }
    return placeholders <= 1;
}

std::string expand_pattern(const std::string& pattern, int n) {
    if (pattern.find('%') == std::string::npos) return pattern;
    char buf[4096];
    std::snprintf(buf, sizeof buf, pattern.c_str(), n);
    return buf;
}

std::vector<fs::path> resolve_frames(const std::string& pattern) {
    if (!valid_frame_pattern(pattern))
        throw std::invalid_argument("--frames pattern must contain at most one %d placeholder");
    if (pattern.find('%') == std::string::npos) {
        if (fs::exists(pattern)) return {fs::path(pattern)};
        return {};
    }
    int start = -1;
    for (int candidate : {0, 1}) {
        if (fs::exists(expand_pattern(pattern, candidate))) {
            start = candidate;
            break;
        }
    }
    std::vector<fs::path> frames;
    if (start < 0) return frames;
    for (int n = start; fs::exists(expand_pattern(pattern, n)); ++n)
        frames.emplace_back(expand_pattern(pattern, n));
    return frames;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string frames;
    std::string background;
    int threshold = 40;
    int connectivity = 8;
    int min_area = 4;
    std::string out;
};

int run_detect(const DetectArgs& args, ManifestSink& manifest) {
    const std::vector<fs::path> frame_paths = resolve_frames(args.frames);
    if (frame_paths.empty()) {
        std::cerr << "error: no frames matched pattern '" << args.frames << "'\n";
        return kInvalidArguments;
    }

    std::vector<flowtrack::GrayImage> frames;
    frames.reserve(frame_paths.size());
    for (const fs::path& p : frame_paths) frames.push_back(flowtrack::read_pgm(p));

    flowtrack::GrayImage background;
    if (!args.background.empty())
        background = flowtrack::read_pgm(args.background);
    else
        background = flowtrack::median_background(frames);

    const auto connectivity = args.connectivity == 4 ? flowtrack::Connectivity::Four
                                                     : flowtrack::Connectivity::Eight;
    const std::vector<flowtrack::DetectionSlice> slices = flowtrack::detect_stack(
        frames, background, args.threshold, connectivity, args.min_area);
    flowtrack::write_detections(slices, args.out);

    std::size_t total_points = 0;
    for (const auto& s : slices) total_points += s.points.size();
    manifest.parameters = {{"frames", args.frames},
                           {"background", args.background.empty() ? json(nullptr)
                                                                  : json(args.background)},
                           {"threshold", args.threshold},
                           {"connectivity", args.connectivity},
                           {"min_area", args.min_area}};
    manifest.inputs = {{"frame_files", frame_paths.size()}};
    manifest.outputs = {{"detections", args.out}};
    manifest.counts = {{"slices", slices.size()}, {"points", total_points}};
    return kOk;
}

struct TrackArgs {
    std::string detections;
    double max_distance = 0.0;
    std::optional<double> fps;
    std::string ambiguity = "nn-resolve";
    std::string out;
    std::string events;
};

int run_track(const TrackArgs& args, ManifestSink& manifest) {
    if (!(args.max_distance > 0.0))
        throw std::invalid_argument("--max-distance must be positive");
    if (args.fps && !(*args.fps > 0.0)) throw std::invalid_argument("--fps must be positive");

    const std::vector<flowtrack::DetectionSlice> slices =
        flowtrack::read_detections(args.detections);

    flowtrack::TrackerConfig config;
    config.max_distance = args.max_distance;
    config.fps = args.fps;
    config.ambiguity = parse_ambiguity(args.ambiguity);
    const flowtrack::TrackResult result = flowtrack::track(slices, config);

    flowtrack::write_trajectories(result.trajectories, args.out);
    if (!args.events.empty()) flowtrack::write_events_jsonl(result.events, args.events);

    std::size_t total_points = 0;
    for (const auto& s : slices) total_points += s.points.size();
    manifest.parameters = {{"max_distance", args.max_distance},
                           {"fps", args.fps ? json(*args.fps) : json(nullptr)},
                           {"ambiguity", args.ambiguity}};
    manifest.inputs = {{"detections", args.detections}};
    manifest.outputs = {{"trajectories", args.out},
                        {"events", args.events.empty() ? json(nullptr) : json(args.events)}};
    manifest.counts = {{"slices", slices.size()},
                       {"points", total_points},
                       {"trajectories", result.trajectories.size()},
                       {"occlusion_events", result.events.size()}};
    return kOk;
}

struct SimulateArgs {
    std::string config;
    std::string out;
    std::string truth;
};

int run_simulate(const SimulateArgs& args, ManifestSink& manifest) {
    const flowtrack::ScenarioConfig config = flowtrack::ScenarioConfig::from_json_file(args.config);
    const flowtrack::Scenario scenario = flowtrack::generate(config);
    flowtrack::write_detections(scenario.detections, args.out);
    flowtrack::write_ground_truth(scenario.truth, args.truth);

    std::size_t total_points = 0;
    std::int64_t max_id = 0;
    for (const auto& s : scenario.truth.slices) {
        total_points += s.size();
        for (const auto& tp : s) max_id = std::max(max_id, tp.id.value);
    }
    manifest.parameters = {{"config", args.config},
                           {"rng_seed", config.rng_seed},
                           {"n_slices", config.n_slices},
                           {"arrival_rate", config.arrival_rate},
                           {"noise_sigma", config.noise_sigma}};
    manifest.inputs = {{"config", args.config}};
    manifest.outputs = {{"detections", args.out}, {"truth", args.truth}};
    manifest.counts = {{"slices", scenario.detections.size()},
                       {"points", total_points},
                       {"objects", max_id}};
    return kOk;
}

struct EvalArgs {
    std::string trajectories;
    std::string truth;
    double radius = 0.0;
    std::string out;
};

int run_eval(const EvalArgs& args, ManifestSink& manifest) {
    if (!(args.radius > 0.0)) throw std::invalid_argument("--radius must be positive");
    const std::vector<flowtrack::Trajectory> trajectories =
        flowtrack::read_trajectories(args.trajectories);
    const flowtrack::GroundTruth truth = flowtrack::read_ground_truth(args.truth);
    const flowtrack::EvalReport report = flowtrack::evaluate(trajectories, truth, args.radius);

    if (args.out.empty())
        std::cout << flowtrack::report_to_json(report) << '\n';
    else
        flowtrack::write_report(report, args.out);

    manifest.parameters = {{"match_radius", args.radius}};
    manifest.inputs = {{"trajectories", args.trajectories}, {"truth", args.truth}};
    manifest.outputs = {{"report", args.out.empty() ? json(nullptr) : json(args.out)}};
    manifest.counts = {{"trajectories", trajectories.size()},
                       {"truth_slices", truth.slices.size()},
                       {"total_links", report.total_links},
                       {"correct_links", report.correct_links}};
    return kOk;
}

struct FpsCheckArgs {
    double free_flow_speed = 0.0;
    double gradient_b = 0.0;
    double fps = 0.0;
};

int run_fps_check(const FpsCheckArgs& args, ManifestSink& manifest) {
    const double minimum = flowtrack::min_frames_per_second(
        {args.free_flow_speed, args.gradient_b});
    const bool adequate = args.fps > minimum;
    std::cout << "min_frames_per_second: " << minimum << '\n'
              << "fps: " << args.fps << '\n'
              << "verdict: " << (adequate ? "adequate" : "inadequate") << '\n';

    manifest.parameters = {{"free_flow_speed", args.free_flow_speed},
                           {"gradient_b", args.gradient_b},
                           {"fps", args.fps}};
    manifest.counts = {{"min_frames_per_second", minimum}};
    return adequate ? kOk : kInadequate;
}

struct PipelineArgs {
    std::string config;
    double max_distance = 0.0;
    std::optional<double> fps;
    std::string ambiguity = "nn-resolve";
    std::optional<double> radius;
    std::string outdir;
};

int run_pipeline(const PipelineArgs& args, ManifestSink& manifest) {
    if (!(args.max_distance > 0.0))
        throw std::invalid_argument("--max-distance must be positive");
    const double radius = args.radius.value_or(args.max_distance / 2.0);
    if (!(radius > 0.0)) throw std::invalid_argument("--radius must be positive");

    fs::create_directories(args.outdir);
    const fs::path dir(args.outdir);
    const fs::path detections_path = dir / "detections.csv";
    const fs::path truth_path = dir / "truth.csv";
    const fs::path trajectories_path = dir / "trajectories.csv";
    const fs::path events_path = dir / "events.jsonl";
    const fs::path report_path = dir / "report.json";

    // Each stage goes through its file format, same as chaining the
    // subcommands by hand.
    const flowtrack::ScenarioConfig config = flowtrack::ScenarioConfig::from_json_file(args.config);
    const flowtrack::Scenario scenario = flowtrack::generate(config);
    flowtrack::write_detections(scenario.detections, detections_path);
    flowtrack::write_ground_truth(scenario.truth, truth_path);

    const std::vector<flowtrack::DetectionSlice> slices =
        flowtrack::read_detections(detections_path);
    flowtrack::TrackerConfig tracker_config;
    tracker_config.max_distance = args.max_distance;
    tracker_config.fps = args.fps;
    tracker_config.ambiguity = parse_ambiguity(args.ambiguity);
    const flowtrack::TrackResult result = flowtrack::track(slices, tracker_config);
    flowtrack::write_trajectories(result.trajectories, trajectories_path);
    flowtrack::write_events_jsonl(result.events, events_path);

    const std::vector<flowtrack::Trajectory> trajectories =
        flowtrack::read_trajectories(trajectories_path);
    const flowtrack::GroundTruth truth = flowtrack::read_ground_truth(truth_path);
    const flowtrack::EvalReport report = flowtrack::evaluate(trajectories, truth, radius);
    flowtrack::write_report(report, report_path);
    std::cout << flowtrack::report_to_json(report) << '\n';

    std::size_t total_points = 0;
    for (const auto& s : scenario.detections) total_points += s.points.size();
    manifest.parameters = {{"config", args.config},
                           {"max_distance", args.max_distance},
                           {"fps", args.fps ? json(*args.fps) : json(nullptr)},
                           {"ambiguity", args.ambiguity},
                           {"match_radius", radius}};
    manifest.inputs = {{"config", args.config}};
    manifest.outputs = {{"detections", detections_path.string()},
                        {"truth", truth_path.string()},
                        {"trajectories", trajectories_path.string()},
                        {"events", events_path.string()},
                        {"report", report_path.string()}};
    manifest.counts = {{"slices", slices.size()},
                       {"points", total_points},
                       {"trajectories", result.trajectories.size()},
                       {"occlusion_events", result.events.size()},
                       {"total_links", report.total_links},
                       {"correct_links", report.correct_links}};
    return kOk;
}

template <typename F>
int run_guarded(ManifestSink& manifest, F&& body) {
    try {
        const int code = body();
        manifest.emit();
        return code;
    } catch (const flowtrack::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoOrParseFailure;
    } catch (const flowtrack::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoOrParseFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalidArguments;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalidArguments;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoOrParseFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-object point tracking toolkit"};
    app.set_version_flag("--version", std::string("flowtrack ") + flowtrack::kVersion);
    app.require_subcommand(1);

    std::string manifest_path;
    app.add_option("--manifest", manifest_path,
                   "Write the run manifest to this path instead of stderr");

    DetectArgs detect_args;
    CLI::App* detect = app.add_subcommand(
        "detect", "Extract per-slice centroids from a PGM frame stack");
    detect->add_option("--frames", detect_args.frames,
                       "Frame path pattern with a %d placeholder, or one literal file")
        ->required();
    detect->add_option("--background", detect_args.background,
                       "Background PGM; per-pixel median of the stack when omitted")
        ->check(CLI::ExistingFile);
    detect->add_option("--threshold", detect_args.threshold, "Binarization threshold")
        ->capture_default_str()
        ->check(CLI::Range(0, 255));
    detect->add_option("--connectivity", detect_args.connectivity, "Pixel connectivity")
        ->capture_default_str()
        ->check(CLI::IsMember({4, 8}));
    detect->add_option("--min-area", detect_args.min_area, "Smallest blob kept, in pixels")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    detect->add_option("--out", detect_args.out, "Detections CSV to write")->required();

    TrackArgs track_args;
    CLI::App* track = app.add_subcommand("track", "Link detections into trajectories");
    track->add_option("--detections", track_args.detections, "Detections CSV")
        ->required()
        ->check(CLI::ExistingFile);
    track->add_option("--max-distance", track_args.max_distance,
                      "Largest per-slice displacement that still matches (pixels)")
        ->required();
    double track_fps = 0.0;
    CLI::Option* track_fps_opt =
        track->add_option("--fps", track_fps, "Frame rate; speeds become pixels/second");
    track->add_option("--ambiguity", track_args.ambiguity, "Ambiguity policy")
        ->capture_default_str()
        ->check(CLI::IsMember({"flag-only", "nn-resolve"}));
    track->add_option("--out", track_args.out, "Trajectories CSV to write")->required();
    track->add_option("--events", track_args.events, "Occlusion events JSONL to write");

    SimulateArgs simulate_args;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Generate a synthetic scene with ground truth");
    simulate->add_option("--config", simulate_args.config, "Scenario config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--out", simulate_args.out, "Detections CSV to write")->required();
    simulate->add_option("--truth", simulate_args.truth, "Ground-truth CSV to write")->required();

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Score trajectories against ground truth");
    eval->add_option("--trajectories", eval_args.trajectories, "Trajectories CSV")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--truth", eval_args.truth, "Ground-truth CSV")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--radius", eval_args.radius, "Point match radius (pixels)")->required();
    eval->add_option("--out", eval_args.out, "Report JSON path; stdout when omitted");

    FpsCheckArgs fps_args;
    CLI::App* fps_check = app.add_subcommand(
        "fps-check", "Check a frame rate against the speed-density bound");
    fps_check->add_option("--free-flow-speed", fps_args.free_flow_speed, "Free flow speed")
        ->required();
    fps_check->add_option("--gradient-b", fps_args.gradient_b, "Speed-density gradient")
        ->required();
    fps_check->add_option("--fps", fps_args.fps, "Recording frame rate")->required();

    PipelineArgs pipeline_args;
    CLI::App* pipeline = app.add_subcommand(
        "pipeline", "simulate, track, and eval in one run");
    pipeline->add_option("--config", pipeline_args.config, "Scenario config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    pipeline->add_option("--max-distance", pipeline_args.max_distance,
                         "Matching threshold (pixels)")
        ->required();
    double pipeline_fps = 0.0;
    CLI::Option* pipeline_fps_opt =
        pipeline->add_option("--fps", pipeline_fps, "Frame rate; speeds become pixels/second");
    pipeline->add_option("--ambiguity", pipeline_args.ambiguity, "Ambiguity policy")
        ->capture_default_str()
        ->check(CLI::IsMember({"flag-only", "nn-resolve"}));
    double pipeline_radius = 0.0;
    CLI::Option* pipeline_radius_opt = pipeline->add_option(
        "--radius", pipeline_radius, "Eval match radius; half of --max-distance when omitted");
    pipeline->add_option("--outdir", pipeline_args.outdir, "Directory for all outputs")
        ->required();

    // lets --manifest appear after the subcommand name as well as before it
    for (CLI::App* sub : {detect, track, simulate, eval, fps_check, pipeline})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidArguments;
    }

    if (track_fps_opt->count() > 0) track_args.fps = track_fps;
    if (pipeline_fps_opt->count() > 0) pipeline_args.fps = pipeline_fps;
    if (pipeline_radius_opt->count() > 0) pipeline_args.radius = pipeline_radius;

    ManifestSink manifest;
    if (!manifest_path.empty()) manifest.path = manifest_path;

    if (detect->parsed()) {
        manifest.subcommand = "detect";
        return run_guarded(manifest, [&] { return run_detect(detect_args, manifest); });
    }
    if (track->parsed()) {
        manifest.subcommand = "track";
        return run_guarded(manifest, [&] { return run_track(track_args, manifest); });
    }
    if (simulate->parsed()) {
        manifest.subcommand = "simulate";
        return run_guarded(manifest, [&] { return run_simulate(simulate_args, manifest); });
    }
    if (eval->parsed()) {
        manifest.subcommand = "eval";
        return run_guarded(manifest, [&] { return run_eval(eval_args, manifest); });
    }
    if (fps_check->parsed()) {
        manifest.subcommand = "fps-check";
        return run_guarded(manifest, [&] { return run_fps_check(fps_args, manifest); });
    }
    manifest.subcommand = "pipeline";
    return run_guarded(manifest, [&] { return run_pipeline(pipeline_args, manifest); });
}
