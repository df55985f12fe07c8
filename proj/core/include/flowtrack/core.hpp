#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtrack {

/// A blob centroid in pixel coordinates. x = column, y = row, origin top-left.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

inline bool valid_coordinates(const Point& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0;
}

/// All centroids detected at one time slice. Point order within a slice is
/// stable: index i in slice s is meaningful to the matcher.
struct DetectionSlice {
    std::int64_t index = 0;
    std::vector<Point> points;

    friend bool operator==(const DetectionSlice&, const DetectionSlice&) = default;
};

/// Stable object-number. Ids are unique per tracking run and never reused
/// after an object leaves the screen.
struct ObjectId {
    std::int64_t value = 0;

    friend auto operator<=>(const ObjectId&, const ObjectId&) = default;
};

struct TrajectorySample {
    std::int64_t slice = 0;
    Point position;
    /// Distance to the next sample, in pixels/slice (or pixels/second when a
    /// frame rate is configured). Absent on the last sample.
    std::optional<double> speed;

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// One object's positions over the contiguous run of slices it was on screen.
struct Trajectory {
    ObjectId id;
    std::vector<TrajectorySample> samples;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class AmbiguityPolicy {
    /// Report occlusion events and restart the involved points as new objects.
    FlagOnly,
    /// Thin multi-entry rows to the nearest neighbor first, then proceed.
    NearestNeighborResolve,
};

struct TrackerConfig {
    /// Maximum distance (pixels) at which two points in consecutive slices
    /// may be the same object.
    double max_distance = 0.0;
    /// When set, speeds are reported in pixels/second instead of pixels/slice.
    std::optional<double> fps;
    AmbiguityPolicy ambiguity = AmbiguityPolicy::NearestNeighborResolve;
};

/// Ground-truth point: position plus the identity of the simulated object.
struct TruthPoint {
    Point position;
    ObjectId id;

    friend bool operator==(const TruthPoint&, const TruthPoint&) = default;
};

/// Per-slice ground truth emitted by the scenario generator. Slice s is at
/// index s; ids are unique per run and occupy contiguous slice intervals.
struct GroundTruth {
    std::vector<std::vector<TruthPoint>> slices;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Malformed input file. line is 1-based; 0 when no line applies.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : std::runtime_error(path + (line ? ":" + std::to_string(line) : "") + ": " + what),
          path_(std::move(path)),
          line_(line) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace flowtrack

template <>
struct std::hash<flowtrack::ObjectId> {
    std::size_t operator()(const flowtrack::ObjectId& id) const noexcept {
        return std::hash<std::int64_t>{}(id.value);
    }
};
