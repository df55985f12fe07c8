#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// Synthetic scene parameters. Objects enter at screen edges per Poisson
/// arrivals, move in straight lines at constant speed, and despawn on exit.
/// Generation is a pure function of the config: same config, same output.
struct ScenarioConfig {
    int screen_width = 0;
    int screen_height = 0;
    int n_slices = 0;
    /// Expected new objects per slice.
    double arrival_rate = 0.0;
    /// Per-object speed, pixels/slice, drawn uniformly from [min, max].
    double speed_min = 0.0;
    double speed_max = 0.0;
    /// Headings point inward from the entry edge, jittered uniformly by up to
    /// this many radians either way.
    double heading_jitter = 0.0;
    /// Arrivals closer than this to any live object are not spawned.
    double min_separation = 0.0;
    std::uint64_t rng_seed = 0;
    /// Gaussian sigma added to detected positions; truth keeps exact
    /// positions. 0 disables noise.
    double noise_sigma = 0.0;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;

    /// Parses the JSON config format; all fields required except noise_sigma.
    /// Throws ParseError on malformed or incomplete JSON.
    static ScenarioConfig from_json_file(const std::filesystem::path& path);
};

struct Scenario {
    std::vector<DetectionSlice> detections;
    GroundTruth truth;
};

/// Generates detections plus ground truth. Within-slice point order is
/// shuffled by the seeded generator; detections equal ground-truth positions
/// unless noise_sigma is set.
Scenario generate(const ScenarioConfig& config);

/// True when, at every slice, all pairwise inter-object distances exceed
/// max_distance and every object's per-slice displacement is within it --
/// the regime in which matching is exact.
bool occlusion_free(const GroundTruth& truth, double max_distance);

}  // namespace flowtrack
