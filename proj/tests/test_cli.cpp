#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "flowtrack/imaging.hpp"
#include "flowtrack/io.hpp"
#include "support/test_oracles.hpp"

using namespace flowtrack;
using testsupport::TempDir;
using testsupport::read_text_file;
using testsupport::run_command;

namespace {

const std::string kBin = FLOWTRACK_BIN_PATH;

std::string q(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

void write_scenario_config(const std::filesystem::path& path, std::uint64_t seed,
                           double arrival_rate) {
    nlohmann::json j{{"screen_width", 200},  {"screen_height", 150}, {"n_slices", 40},
                     {"arrival_rate", arrival_rate}, {"speed_min", 1.0},    {"speed_max", 2.5},
                     {"heading_jitter", 0.3}, {"min_separation", 12.0}, {"rng_seed", seed}};
    write_file(path, j.dump());
}

// frames with one bright square per object, saved as f_0000.pgm ...
void write_square_frames(const TempDir& dir, int n_frames) {
    const GrayImage background = GrayImage::filled(96, 64, 20);
    write_pgm(background, dir.file("bg.pgm"));
    for (int n = 0; n < n_frames; ++n) {
        GrayImage f = background;
        for (int dy = 0; dy < 4; ++dy)
            for (int dx = 0; dx < 4; ++dx) {
                f.at(10 + 2 * n + dx, 12 + dy) = 220;
                f.at(70 + dx, 40 - 2 * n + dy) = 200;
            }
        char name[32];
        std::snprintf(name, sizeof name, "f_%04d.pgm", n);
        write_pgm(f, dir.file(name));
    }
}

}  // namespace

TEST_CASE("detect subcommand") {
    TempDir dir;
    write_square_frames(dir, 3);
    const std::string pattern = (dir.path() / "f_%04d.pgm").string();

    SUBCASE("frame stack becomes a slice-per-frame csv") {
        const auto res = run_command(kBin + " detect --frames '" + pattern + "' --background " +
                                     q(dir.file("bg.pgm")) + " --out " + q(dir.file("det.csv")));
        REQUIRE(res.exit_code == 0);
        const auto slices = read_detections(dir.file("det.csv"));
        REQUIRE(slices.size() == 3);
        for (const auto& slice : slices) CHECK(slice.points.size() == 2);
    }
    SUBCASE("median background fallback works without --background") {
        const auto res = run_command(kBin + " detect --frames '" + pattern + "' --out " +
                                     q(dir.file("det2.csv")));
        CHECK(res.exit_code == 0);
        CHECK(read_detections(dir.file("det2.csv")).size() == 3);
    }
    SUBCASE("background-only frames give empty slices but counted in the manifest") {
        const GrayImage background = GrayImage::filled(32, 32, 20);
        write_pgm(background, dir.file("flat_0000.pgm"));
        write_pgm(background, dir.file("flat_0001.pgm"));
        const std::string flat = (dir.path() / "flat_%04d.pgm").string();
        const auto res = run_command(kBin + " detect --frames '" + flat + "' --out " +
                                     q(dir.file("det3.csv")) + " --manifest " +
                                     q(dir.file("manifest.json")));
        REQUIRE(res.exit_code == 0);
        CHECK(read_text_file(dir.file("det3.csv")) == "slice,x,y\n");
        const auto manifest = nlohmann::json::parse(read_text_file(dir.file("manifest.json")));
        CHECK(manifest["counts"]["slices"] == 2);
        CHECK(manifest["counts"]["points"] == 0);
    }
    SUBCASE("missing background file exits 2") {
        const auto res = run_command(kBin + " detect --frames '" + pattern + "' --background " +
                                     q(dir.file("missing.pgm")) + " --out " +
                                     q(dir.file("x.csv")));
        CHECK(res.exit_code == 2);
    }
    SUBCASE("pattern matching no files exits 2") {
        const auto res = run_command(kBin + " detect --frames '" +
                                     (dir.path() / "nope_%03d.pgm").string() + "' --out " +
                                     q(dir.file("x.csv")));
        CHECK(res.exit_code == 2);
    }
    SUBCASE("numbering may start at one") {
        const GrayImage background = GrayImage::filled(32, 32, 20);
        write_pgm(background, dir.file("bg32.pgm"));
        GrayImage f = background;
        f.at(5, 5) = 200;
        f.at(5, 6) = 200;
        f.at(6, 5) = 200;
        f.at(6, 6) = 200;
        write_pgm(f, dir.file("one_0001.pgm"));
        const auto res = run_command(kBin + " detect --frames '" +
                                     (dir.path() / "one_%04d.pgm").string() + "' --background " +
                                     q(dir.file("bg32.pgm")) + " --out " + q(dir.file("o.csv")));
        REQUIRE(res.exit_code == 0);
        CHECK(read_detections(dir.file("o.csv")).size() == 1);
    }
    SUBCASE("two placeholders are rejected") {
        const auto res = run_command(kBin + " detect --frames '" +
                                     (dir.path() / "f_%02d_%02d.pgm").string() + "' --out " +
                                     q(dir.file("x.csv")));
        CHECK(res.exit_code == 2);
    }
}

TEST_CASE("track subcommand") {
    TempDir dir;

    SUBCASE("three slices of one object give one trajectory") {
        write_file(dir.file("det.csv"), "slice,x,y\n0,0,0\n1,1,0\n2,2,0\n");
        const auto res = run_command(kBin + " track --detections " + q(dir.file("det.csv")) +
                                     " --max-distance 2 --out " + q(dir.file("traj.csv")));
        REQUIRE(res.exit_code == 0);
        const auto trajectories = read_trajectories(dir.file("traj.csv"));
        REQUIRE(trajectories.size() == 1);
        CHECK(trajectories[0].samples.size() == 3);
    }
    SUBCASE("well-separated crossing pair keeps two ids and no events") {
        std::string csv = "slice,x,y\n";
        for (int s = 0; s <= 20; ++s) {
            csv += std::to_string(s) + "," + std::to_string(2 * s) + ",10\n";
            csv += std::to_string(s) + "," + std::to_string(40 - 2 * s) + ",14\n";
        }
        write_file(dir.file("cross.csv"), csv);
        const auto res = run_command(kBin + " track --detections " + q(dir.file("cross.csv")) +
                                     " --max-distance 2.5 --out " + q(dir.file("traj.csv")) +
                                     " --events " + q(dir.file("events.jsonl")));
        REQUIRE(res.exit_code == 0);
        CHECK(read_trajectories(dir.file("traj.csv")).size() == 2);
        CHECK(read_text_file(dir.file("events.jsonl")).empty());
    }
    SUBCASE("merging pair reports an event and still exits 0") {
        // two objects approach head-on and coincide at slice 5
        std::string csv = "slice,x,y\n";
        for (int s = 0; s <= 10; ++s) {
            const double xa = 2.0 * s;
            const double xb = 20.0 - 2.0 * s;
            csv += std::to_string(s) + "," + std::to_string(xa) + ",8\n";
            if (s != 5) csv += std::to_string(s) + "," + std::to_string(xb) + ",8\n";
        }
        write_file(dir.file("merge.csv"), csv);
        const auto res = run_command(kBin + " track --detections " + q(dir.file("merge.csv")) +
                                     " --max-distance 4.5 --out " + q(dir.file("traj.csv")) +
                                     " --events " + q(dir.file("events.jsonl")));
        REQUIRE(res.exit_code == 0);
        const auto events = read_events_jsonl(dir.file("events.jsonl"));
        CHECK(!events.empty());
        bool has_merge = false;
        for (const auto& ev : events) has_merge |= ev.kind == OcclusionKind::Merge;
        CHECK(has_merge);
    }
    SUBCASE("bad inputs map to the documented exit codes") {
        CHECK(run_command(kBin + " track --detections " + q(dir.file("absent.csv")) +
                          " --max-distance 2 --out " + q(dir.file("t.csv")))
                  .exit_code == 2);
        write_file(dir.file("bad.csv"), "slice,x,y\n0,oops,1\n");
        CHECK(run_command(kBin + " track --detections " + q(dir.file("bad.csv")) +
                          " --max-distance 2 --out " + q(dir.file("t.csv")))
                  .exit_code == 1);
        write_file(dir.file("ok.csv"), "slice,x,y\n0,1,1\n");
        CHECK(run_command(kBin + " track --detections " + q(dir.file("ok.csv")) +
                          " --max-distance 0 --out " + q(dir.file("t.csv")))
                  .exit_code == 2);
        CHECK(run_command(kBin + " track --detections " + q(dir.file("ok.csv")) +
                          " --max-distance 2 --fps -5 --out " + q(dir.file("t.csv")))
                  .exit_code == 2);
    }
}

TEST_CASE("simulate subcommand") {
    TempDir dir;

    SUBCASE("zero arrival rate gives an empty detections file") {
        write_scenario_config(dir.file("cfg.json"), 1, 0.0);
        const auto res = run_command(kBin + " simulate --config " + q(dir.file("cfg.json")) +
                                     " --out " + q(dir.file("det.csv")) + " --truth " +
                                     q(dir.file("truth.csv")));
        REQUIRE(res.exit_code == 0);
        CHECK(read_text_file(dir.file("det.csv")) == "slice,x,y\n");
    }
    SUBCASE("fixed seed twice gives identical bytes") {
        write_scenario_config(dir.file("cfg.json"), 9, 0.5);
        REQUIRE(run_command(kBin + " simulate --config " + q(dir.file("cfg.json")) + " --out " +
                            q(dir.file("a.csv")) + " --truth " + q(dir.file("at.csv")))
                    .exit_code == 0);
        REQUIRE(run_command(kBin + " simulate --config " + q(dir.file("cfg.json")) + " --out " +
                            q(dir.file("b.csv")) + " --truth " + q(dir.file("bt.csv")))
                    .exit_code == 0);
        CHECK(read_text_file(dir.file("a.csv")) == read_text_file(dir.file("b.csv")));
        CHECK(read_text_file(dir.file("at.csv")) == read_text_file(dir.file("bt.csv")));
    }
    SUBCASE("malformed config exits 2") {
        write_file(dir.file("bad.json"), "{broken");
        CHECK(run_command(kBin + " simulate --config " + q(dir.file("bad.json")) + " --out " +
                          q(dir.file("d.csv")) + " --truth " + q(dir.file("t.csv")))
                  .exit_code == 2);
    }
}

TEST_CASE("eval subcommand") {
    TempDir dir;
    write_scenario_config(dir.file("cfg.json"), 42, 0.5);
    REQUIRE(run_command(kBin + " simulate --config " + q(dir.file("cfg.json")) + " --out " +
                        q(dir.file("det.csv")) + " --truth " + q(dir.file("truth.csv")))
                .exit_code == 0);
    REQUIRE(run_command(kBin + " track --detections " + q(dir.file("det.csv")) +
                        " --max-distance 6 --out " + q(dir.file("traj.csv")))
                .exit_code == 0);

    SUBCASE("report goes to stdout by default") {
        const auto res = run_command("(" + kBin + " eval --trajectories " + q(dir.file("traj.csv")) +
                                     " --truth " + q(dir.file("truth.csv")) +
                                     " --radius 3 2>/dev/null)");
        REQUIRE(res.exit_code == 0);
        const auto report = nlohmann::json::parse(res.output);
        CHECK(report["total_links"] == report["correct_links"]);
        CHECK(report["id_switches"] == 0);
    }
    SUBCASE("report can be written to a file instead") {
        const auto res = run_command(kBin + " eval --trajectories " + q(dir.file("traj.csv")) +
                                     " --truth " + q(dir.file("truth.csv")) + " --radius 3 --out " +
                                     q(dir.file("report.json")));
        REQUIRE(res.exit_code == 0);
        const auto report = nlohmann::json::parse(read_text_file(dir.file("report.json")));
        CHECK(report["correct_links"] == report["total_links"]);
    }
    SUBCASE("consistently renamed ids give the identical report") {
        auto trajectories = read_trajectories(dir.file("traj.csv"));
        for (auto& traj : trajectories) traj.id.value += 500;
        write_trajectories(trajectories, dir.file("renamed.csv"));
        const auto a = run_command("(" + kBin + " eval --trajectories " + q(dir.file("traj.csv")) +
                                   " --truth " + q(dir.file("truth.csv")) +
                                   " --radius 3 2>/dev/null)");
        const auto b = run_command("(" + kBin + " eval --trajectories " + q(dir.file("renamed.csv")) +
                                   " --truth " + q(dir.file("truth.csv")) +
                                   " --radius 3 2>/dev/null)");
        REQUIRE(a.exit_code == 0);
        REQUIRE(b.exit_code == 0);
        CHECK(a.output == b.output);
    }
    SUBCASE("an occluded run reports id switches") {
        std::string csv = "slice,x,y\n";
        for (int s = 0; s <= 10; ++s) {
            csv += std::to_string(s) + "," + std::to_string(2.0 * s) + ",8\n";
            if (s != 5) csv += std::to_string(s) + "," + std::to_string(20.0 - 2.0 * s) + ",8\n";
        }
        write_file(dir.file("mdet.csv"), csv);
        std::string truth_csv = "slice,x,y,true_id\n";
        for (int s = 0; s <= 10; ++s) {
            truth_csv += std::to_string(s) + "," + std::to_string(2.0 * s) + ",8,1\n";
            if (s != 5)
                truth_csv += std::to_string(s) + "," + std::to_string(20.0 - 2.0 * s) + ",8,2\n";
        }
        write_file(dir.file("mtruth.csv"), truth_csv);
        REQUIRE(run_command(kBin + " track --detections " + q(dir.file("mdet.csv")) +
                            " --max-distance 4.5 --out " + q(dir.file("mtraj.csv")))
                    .exit_code == 0);
        const auto res = run_command("(" + kBin + " eval --trajectories " + q(dir.file("mtraj.csv")) +
                                     " --truth " + q(dir.file("mtruth.csv")) +
                                     " --radius 2 2>/dev/null)");
        REQUIRE(res.exit_code == 0);
        const auto report = nlohmann::json::parse(res.output);
        CHECK(report["id_switches"].get<int>() > 0);
    }
    SUBCASE("zero radius exits 2") {
        CHECK(run_command(kBin + " eval --trajectories " + q(dir.file("traj.csv")) + " --truth " +
                          q(dir.file("truth.csv")) + " --radius 0")
                  .exit_code == 2);
    }
}

TEST_CASE("fps-check subcommand") {
    SUBCASE("adequate rate exits 0") {
        const auto res =
            run_command(kBin + " fps-check --free-flow-speed 2 --gradient-b 1 --fps 30");
        CHECK(res.exit_code == 0);
        CHECK(res.output.find("min_frames_per_second: 1") != std::string::npos);
        CHECK(res.output.find("verdict: adequate") != std::string::npos);
    }
    SUBCASE("the bound itself is inadequate") {
        const auto res =
            run_command(kBin + " fps-check --free-flow-speed 2 --gradient-b 1 --fps 1");
        CHECK(res.exit_code == 3);
        CHECK(res.output.find("verdict: inadequate") != std::string::npos);
    }
    SUBCASE("non-positive gradient exits 2") {
        CHECK(run_command(kBin + " fps-check --free-flow-speed 2 --gradient-b 0 --fps 30")
                  .exit_code == 2);
    }
}

TEST_CASE("pipeline subcommand writes the full artifact set") {
    TempDir dir;
    write_scenario_config(dir.file("cfg.json"), 77, 0.4);
    const auto res = run_command(kBin + " pipeline --config " + q(dir.file("cfg.json")) +
                                 " --max-distance 6 --outdir " + q(dir.path() / "run") +
                                 " --manifest " + q(dir.file("manifest.json")));
    REQUIRE(res.exit_code == 0);
    for (const char* name :
         {"detections.csv", "truth.csv", "trajectories.csv", "events.jsonl", "report.json"})
        CHECK(std::filesystem::exists(dir.path() / "run" / name));

    const auto report = nlohmann::json::parse(read_text_file(dir.path() / "run" / "report.json"));
    CHECK(report["total_links"] == report["correct_links"]);

    const auto manifest = nlohmann::json::parse(read_text_file(dir.file("manifest.json")));
    CHECK(manifest["tool"] == "flowtrack");
    CHECK(manifest["subcommand"] == "pipeline");
    CHECK(manifest["parameters"]["match_radius"] == 3.0);  // defaults to half of --max-distance
    CHECK(manifest["counts"].contains("trajectories"));
    CHECK(manifest["wall_time_seconds"].get<double>() >= 0.0);
}

TEST_CASE("run manifest lands on stderr by default") {
    TempDir dir;
    write_file(dir.file("ok.csv"), "slice,x,y\n0,1,1\n");
    // track writes nothing to stdout, so the captured output is the stderr manifest alone
    const auto res = run_command(kBin + " track --detections " + q(dir.file("ok.csv")) +
                                 " --max-distance 2 --out " + q(dir.file("t.csv")));
    REQUIRE(res.exit_code == 0);
    const auto manifest = nlohmann::json::parse(res.output);
    CHECK(manifest["subcommand"] == "track");
    CHECK(manifest["counts"]["trajectories"] == 1);
    CHECK(manifest["parameters"]["max_distance"] == 2.0);
}

TEST_CASE("version and usage") {
    CHECK(run_command(kBin + " --version").output.find("flowtrack 0.1.0") != std::string::npos);
    CHECK(run_command(kBin + " --help").exit_code == 0);
    CHECK(run_command(kBin + " frobnicate").exit_code == 2);
    CHECK(run_command(kBin).exit_code == 2);  // a subcommand is required
}
