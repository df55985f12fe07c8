#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowtrack/core.hpp"

namespace flowtrack {

/// Thresholded inter-slice distances between the q points of slice s (rows)
/// and the r points of slice s+1 (columns). entry(i, j) is 1 exactly when
/// the Euclidean distance between prev point i and next point j is within
/// the matching threshold. Raw distances are retained for nearest-neighbor
/// refinement and tie-breaking.
class BinaryDistanceMatrix {
public:
    BinaryDistanceMatrix() = default;
    BinaryDistanceMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, 0), distances_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool entry(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j] != 0; }
    void set_entry(std::size_t i, std::size_t j, bool v) { entries_[i * cols_ + j] = v ? 1 : 0; }

    double dist(std::size_t i, std::size_t j) const { return distances_[i * cols_ + j]; }
    void set_dist(std::size_t i, std::size_t j, double d) { distances_[i * cols_ + j] = d; }

    std::size_t row_sum(std::size_t i) const;
    std::size_t col_sum(std::size_t j) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> entries_;
    std::vector<double> distances_;
};

/// Builds the binary distance matrix between two consecutive slices.
/// Empty slices yield 0xr or qx0 matrices.
BinaryDistanceMatrix build_distance_matrix(const DetectionSlice& prev, const DetectionSlice& next,
                                           double max_distance);

/// For each row with two or more entries, keeps only the entry at the column
/// of minimal distance (ties broken by lowest column index). Rows with zero
/// or one entry, and the raw distances, are unchanged.
BinaryDistanceMatrix refine_nearest_neighbor(BinaryDistanceMatrix m);

enum class OcclusionKind {
    /// Two or more previous points map into one next point.
    Merge,
    /// One previous point maps into two or more next points.
    Split,
};

/// Ambiguity the per-slice matching rules cannot resolve: the points involved
/// are restarted as new objects and the event is reported.
struct OcclusionEvent {
    /// Index of the later slice of the transition: next_indices refer to
    /// points of this slice, prev_indices to points of slice - 1.
    std::int64_t slice = 0;
    OcclusionKind kind = OcclusionKind::Merge;
    std::vector<std::size_t> prev_indices;
    std::vector<std::size_t> next_indices;

    friend bool operator==(const OcclusionEvent&, const OcclusionEvent&) = default;
};

/// Matcher state between two slices: the id assigned to each point of the
/// slice most recently processed, and the highest id ever issued. The active
/// set (ids still on screen) is exactly the set of assigned ids.
struct TrackerState {
    std::vector<ObjectId> assignment;
    std::int64_t max_id_ever = 0;
    /// Slice index described by assignment; -1 before any slice was seen.
    std::int64_t slice = -1;

    static TrackerState initial() { return {}; }

    std::vector<ObjectId> active_ids() const;
};

struct StepResult {
    TrackerState state;
    std::vector<OcclusionEvent> events;
};

/// Advances the matcher by one slice transition. m must map the points of
/// state.assignment (rows) to the points of the next slice (columns).
///
/// A next point whose row and column both hold exactly one entry inherits the
/// matched previous point's id. Every other next point is issued a fresh id
/// (ascending column order). Rows or columns with two or more surviving
/// entries are reported as occlusion events and their ids retired.
StepResult step(const TrackerState& state, const BinaryDistanceMatrix& m,
                const TrackerConfig& config);

struct TrackResult {
    std::vector<Trajectory> trajectories;
    std::vector<OcclusionEvent> events;
};

/// Runs the matcher over a contiguous stack of slices and assembles per-object
/// trajectories with speed annotations. Slices must be indexed contiguously
/// from 0.
TrackResult track(std::span<const DetectionSlice> slices, const TrackerConfig& config);

/// Sets sample k's speed to the distance to sample k+1, scaled by fps when
/// provided. The final sample's speed is absent.
Trajectory annotate_speed(Trajectory traj, std::optional<double> fps);

/// Linear speed-density model parameters bounding the frame rate a recording
/// needs for reliable matching.
struct FrameRateParams {
    /// Speed of an object under zero density, distance-units per second.
    double free_flow_speed = 0.0;
    /// Gradient between speed and density, distance-units^2 per second per object.
    double speed_density_gradient = 0.0;
};

/// Least frame rate for reliable matching; the chosen fps must be strictly
/// greater than the returned value. Throws std::domain_error when the
/// gradient is not positive.
double min_frames_per_second(const FrameRateParams& params);

}  // namespace flowtrack
