#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// Tracker-vs-truth comparison counters.
struct EvalReport {
    /// Consecutive-slice ground-truth correspondences.
    std::int64_t total_links = 0;
    /// Links reproduced by the tracker (same tracker id across the pair).
    std::int64_t correct_links = 0;
    /// Transitions where a ground-truth object's tracker id changes.
    std::int64_t id_switches = 0;
    /// Ground-truth objects covered by two or more tracker ids.
    std::int64_t fragmentations = 0;
    /// Tracker ids matching no ground-truth object.
    std::int64_t spurious_tracks = 0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Matches tracker points to truth points per slice by nearest neighbor
/// within match_radius and scores the correspondence.
EvalReport evaluate(std::span<const Trajectory> trajectories, const GroundTruth& truth,
                    double match_radius);

/// Result of the exhaustive matching oracle.
struct OracleMatch {
    /// (prev index, next index) pairs, ascending by prev index.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    /// True when any point has two or more feasible partners.
    bool ambiguous = false;
};

/// Brute-force matcher used as an independent check of the per-slice rules:
/// enumerates every partial matching whose matched distances are all within
/// max_distance and returns the one pairing exactly the mutually-unique
/// under-threshold pairs. Slices are limited to 8 points each.
OracleMatch oracle_match(const DetectionSlice& prev, const DetectionSlice& next,
                         double max_distance);

}  // namespace flowtrack
