#include "flowtrack/eval.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace flowtrack {

namespace {

struct SlicePoint {
    Point position;
    ObjectId tracker_id;
};

// Greedy nearest-first matching between one slice's tracker and truth points.
// Returns truth index -> tracker index (or npos).
std::vector<std::size_t> match_slice(const std::vector<SlicePoint>& tracker,
                                     const std::vector<TruthPoint>& truth, double radius) {
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    struct Candidate {
        double dist;
        std::size_t tracker_index;
        std::size_t truth_index;
    };
    std::vector<Candidate> candidates;
    for (std::size_t t = 0; t < tracker.size(); ++t) {
        for (std::size_t g = 0; g < truth.size(); ++g) {
            const double d = distance(tracker[t].position, truth[g].position);
            if (d <= radius) candidates.push_back({d, t, g});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist, a.tracker_index, a.truth_index) <
               std::tie(b.dist, b.tracker_index, b.truth_index);
    });

    std::vector<std::size_t> truth_to_tracker(truth.size(), npos);
    std::vector<bool> tracker_used(tracker.size(), false);
    for (const Candidate& c : candidates) {
        if (tracker_used[c.tracker_index] || truth_to_tracker[c.truth_index] != npos) continue;
        tracker_used[c.tracker_index] = true;
        truth_to_tracker[c.truth_index] = c.tracker_index;
    }
    return truth_to_tracker;
}

}  // namespace

EvalReport evaluate(std::span<const Trajectory> trajectories, const GroundTruth& truth,
                    double match_radius) {
    if (!(match_radius > 0.0)) throw std::invalid_argument("evaluate: match_radius must be positive");

    std::size_t n_slices = truth.slices.size();
    for (const Trajectory& traj : trajectories) {
        for (const TrajectorySample& s : traj.samples)
            n_slices = std::max(n_slices, static_cast<std::size_t>(s.slice) + 1);
    }

    std::vector<std::vector<SlicePoint>> tracker_slices(n_slices);
    for (const Trajectory& traj : trajectories) {
        for (const TrajectorySample& s : traj.samples)
            tracker_slices[static_cast<std::size_t>(s.slice)].push_back({s.position, traj.id});
    }

    // Per truth object, the matched tracker id per slice of its lifetime.
    std::map<ObjectId, std::vector<std::optional<ObjectId>>> matched;
    std::unordered_set<ObjectId> ever_matched_tracker_ids;
    constexpr std::size_t npos = static_cast<std::size_t>(-1);

    for (std::size_t s = 0; s < truth.slices.size(); ++s) {
        const auto& truth_slice = truth.slices[s];
        const auto assignment = match_slice(tracker_slices[s], truth_slice, match_radius);
        for (std::size_t g = 0; g < truth_slice.size(); ++g) {
            std::optional<ObjectId> tracker_id;
            if (assignment[g] != npos) {
                tracker_id = tracker_slices[s][assignment[g]].tracker_id;
                ever_matched_tracker_ids.insert(*tracker_id);
            }
            matched[truth_slice[g].id].push_back(tracker_id);
        }
    }

    EvalReport report;
    for (const auto& [truth_id, ids] : matched) {
        // Lifetime is contiguous, so consecutive entries are consecutive slices.
        report.total_links += static_cast<std::int64_t>(ids.size()) - 1;
        for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
            if (ids[k] && ids[k + 1] && *ids[k] == *ids[k + 1]) ++report.correct_links;
        }
        std::optional<ObjectId> last;
        std::set<ObjectId> distinct;
        for (const auto& id : ids) {
            if (!id) continue;
            if (last && *last != *id) ++report.id_switches;
            last = id;
            distinct.insert(*id);
        }
        if (distinct.size() >= 2) ++report.fragmentations;
    }
    for (const Trajectory& traj : trajectories) {
        if (!ever_matched_tracker_ids.contains(traj.id)) ++report.spurious_tracks;
    }
    return report;
}

namespace {

void enumerate_matchings(std::size_t i, std::size_t q,
                         const std::vector<std::vector<std::size_t>>& feasible,
                         std::vector<bool>& next_used,
                         std::vector<std::pair<std::size_t, std::size_t>>& current,
                         std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& all) {
    if (i == q) {
        all.push_back(current);
        return;
    }
    // prev point i left unmatched
    enumerate_matchings(i + 1, q, feasible, next_used, current, all);
    for (const std::size_t j : feasible[i]) {
        if (next_used[j]) continue;
        next_used[j] = true;
        current.emplace_back(i, j);
        enumerate_matchings(i + 1, q, feasible, next_used, current, all);
        current.pop_back();
        next_used[j] = false;
    }
}

}  // namespace

OracleMatch oracle_match(const DetectionSlice& prev, const DetectionSlice& next,
                         double max_distance) {
    const std::size_t q = prev.points.size();
    const std::size_t r = next.points.size();
    if (q > 8 || r > 8)
        throw std::invalid_argument("oracle_match: slices limited to 8 points each");

    std::vector<std::vector<std::size_t>> prev_partners(q);
    std::vector<std::vector<std::size_t>> next_partners(r);
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            if (distance(prev.points[i], next.points[j]) <= max_distance) {
                prev_partners[i].push_back(j);
                next_partners[j].push_back(i);
            }
        }
    }

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> all;
    std::vector<bool> next_used(r, false);
    std::vector<std::pair<std::size_t, std::size_t>> current;
    enumerate_matchings(0, q, prev_partners, next_used, current, all);

    OracleMatch result;
    for (std::size_t i = 0; i < q; ++i)
        if (prev_partners[i].size() >= 2) result.ambiguous = true;
    for (std::size_t j = 0; j < r; ++j)
        if (next_partners[j].size() >= 2) result.ambiguous = true;

    std::vector<std::pair<std::size_t, std::size_t>> target;
    for (std::size_t i = 0; i < q; ++i) {
        if (prev_partners[i].size() == 1 && next_partners[prev_partners[i][0]].size() == 1)
            target.emplace_back(i, prev_partners[i][0]);
    }
    // The target is itself a feasible partial matching, so it must have been
    // enumerated; the scan doubles as a consistency check.
    const auto found = std::find(all.begin(), all.end(), target);
    if (found == all.end())
        throw std::logic_error("oracle_match: enumeration missed the unique-pair matching");
    result.pairs = *found;
    return result;
}

}  // namespace flowtrack
