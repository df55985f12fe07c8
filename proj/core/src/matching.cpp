#include "flowtrack/matching.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace flowtrack {

std::size_t BinaryDistanceMatrix::row_sum(std::size_t i) const {
    std::size_t sum = 0;
    for (std::size_t j = 0; j < cols_; ++j) sum += entries_[i * cols_ + j];
    return sum;
}

std::size_t BinaryDistanceMatrix::col_sum(std::size_t j) const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < rows_; ++i) sum += entries_[i * cols_ + j];
    return sum;
}

BinaryDistanceMatrix build_distance_matrix(const DetectionSlice& prev, const DetectionSlice& next,
                                           double max_distance) {
    if (!(max_distance > 0.0))
        throw std::invalid_argument("build_distance_matrix: max_distance must be positive");

    const std::size_t q = prev.points.size();
    const std::size_t r = next.points.size();
    BinaryDistanceMatrix m(q, r);
    for (std::size_t i = 0; i < q; ++i) {
        const Point& a = prev.points[i];
        for (std::size_t j = 0; j < r; ++j) {
            const double d = distance(a, next.points[j]);
            m.set_dist(i, j, d);
            m.set_entry(i, j, d <= max_distance);
        }
    }
    return m;
}

BinaryDistanceMatrix refine_nearest_neighbor(BinaryDistanceMatrix m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (m.row_sum(i) < 2) continue;
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (m.entry(i, j) && m.dist(i, j) < best_dist) {
                best_dist = m.dist(i, j);
                best = j;
            }
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j != best) m.set_entry(i, j, false);
        }
    }
    return m;
}

std::vector<ObjectId> TrackerState::active_ids() const {
    std::vector<ObjectId> ids = assignment;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

StepResult step(const TrackerState& state, const BinaryDistanceMatrix& m,
                const TrackerConfig& config) {
    if (m.rows() != state.assignment.size())
        throw std::invalid_argument("step: matrix rows do not match tracked point count");
    for (const ObjectId id : state.assignment) {
        if (id.value > state.max_id_ever)
            throw std::invalid_argument("step: state.max_id_ever below an assigned id");
    }

    BinaryDistanceMatrix refined;
    const BinaryDistanceMatrix* use = &m;
    if (config.ambiguity == AmbiguityPolicy::NearestNeighborResolve) {
        refined = refine_nearest_neighbor(m);
        use = &refined;
    }

    const std::size_t q = use->rows();
    const std::size_t r = use->cols();
    std::vector<std::size_t> row_sum(q, 0);
    std::vector<std::size_t> col_sum(r, 0);
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            if (use->entry(i, j)) {
                ++row_sum[i];
                ++col_sum[j];
            }
        }
    }

    const std::int64_t next_slice = state.slice + 1;
    std::vector<OcclusionEvent> events;

    // Two or more previous points converging into one next point.
    for (std::size_t j = 0; j < r; ++j) {
        if (col_sum[j] < 2) continue;
        OcclusionEvent ev;
        ev.slice = next_slice;
        ev.kind = OcclusionKind::Merge;
        ev.next_indices = {j};
        for (std::size_t i = 0; i < q; ++i)
            if (use->entry(i, j)) ev.prev_indices.push_back(i);
        events.push_back(std::move(ev));
    }
    // One previous point fanning out into several next points.
    for (std::size_t i = 0; i < q; ++i) {
        if (row_sum[i] < 2) continue;
        OcclusionEvent ev;
        ev.slice = next_slice;
        ev.kind = OcclusionKind::Split;
        ev.prev_indices = {i};
        for (std::size_t j = 0; j < r; ++j)
            if (use->entry(i, j)) ev.next_indices.push_back(j);
        events.push_back(std::move(ev));
    }

    TrackerState out;
    out.max_id_ever = state.max_id_ever;
    out.slice = next_slice;
    out.assignment.reserve(r);
    for (std::size_t j = 0; j < r; ++j) {
        ObjectId inherited{0};
        bool found = false;
        if (col_sum[j] == 1) {
            for (std::size_t i = 0; i < q; ++i) {
                if (use->entry(i, j)) {
                    // Unique in both directions: the id propagates.
                    if (row_sum[i] == 1) {
                        inherited = state.assignment[i];
                        found = true;
                    }
                    break;
                }
            }
        }
        if (found) {
            out.assignment.push_back(inherited);
        } else {
            // Newcomer or ambiguity-involved point: fresh id, never reused.
            out.assignment.push_back(ObjectId{++out.max_id_ever});
        }
    }
    return {std::move(out), std::move(events)};
}

TrackResult track(std::span<const DetectionSlice> slices, const TrackerConfig& config) {
    if (!(config.max_distance > 0.0))
        throw std::invalid_argument("track: max_distance must be positive");
    if (config.fps && !(*config.fps > 0.0))
        throw std::invalid_argument("track: fps must be positive");
    for (std::size_t s = 0; s < slices.size(); ++s) {
        if (slices[s].index != static_cast<std::int64_t>(s))
            throw std::invalid_argument("track: slices must be indexed contiguously from 0");
    }

    TrackResult result;
    std::unordered_map<ObjectId, std::size_t> traj_index;
    TrackerState state = TrackerState::initial();
    const DetectionSlice empty;
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const DetectionSlice& prev = (s == 0) ? empty : slices[s - 1];
        BinaryDistanceMatrix m = build_distance_matrix(prev, slices[s], config.max_distance);
        StepResult stepped = step(state, m, config);
        for (std::size_t j = 0; j < stepped.state.assignment.size(); ++j) {
            const ObjectId id = stepped.state.assignment[j];
            auto [it, inserted] = traj_index.try_emplace(id, result.trajectories.size());
            if (inserted) result.trajectories.push_back(Trajectory{id, {}});
            result.trajectories[it->second].samples.push_back(
                {static_cast<std::int64_t>(s), slices[s].points[j], std::nullopt});
        }
        result.events.insert(result.events.end(),
                             std::make_move_iterator(stepped.events.begin()),
                             std::make_move_iterator(stepped.events.end()));
        state = std::move(stepped.state);
    }

    std::sort(result.trajectories.begin(), result.trajectories.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.id < b.id; });
    for (Trajectory& traj : result.trajectories) traj = annotate_speed(std::move(traj), config.fps);
    return result;
}

Trajectory annotate_speed(Trajectory traj, std::optional<double> fps) {
    const double scale = fps.value_or(1.0);
    for (std::size_t k = 0; k + 1 < traj.samples.size(); ++k) {
        traj.samples[k].speed =
            distance(traj.samples[k].position, traj.samples[k + 1].position) * scale;
    }
    if (!traj.samples.empty()) traj.samples.back().speed.reset();
    return traj;
}

double min_frames_per_second(const FrameRateParams& params) {
    if (!(params.speed_density_gradient > 0.0))
        throw std::domain_error("min_frames_per_second: speed-density gradient must be positive");
    return params.free_flow_speed * params.free_flow_speed / (4.0 * params.speed_density_gradient);
}

}  // namespace flowtrack
