#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/eval.hpp"
#include "flowtrack/matching.hpp"

namespace flowtrack {

// Detections CSV: header `slice,x,y`, UTF-8, LF line endings. Reals are
// printed with shortest round-trip precision.

/// Reads detections grouped by slice, indices made contiguous from 0 by
/// inserting empty slices for gaps. Row order within a slice follows file
/// order. Throws ParseError naming the offending line.
std::vector<DetectionSlice> read_detections(const std::filesystem::path& path);

void write_detections(std::span<const DetectionSlice> slices, const std::filesystem::path& path);

// Trajectories CSV: header `object_id,slice,x,y,speed`; rows sorted by
// (object_id, slice); the last sample of each object has an empty speed field.

void write_trajectories(std::span<const Trajectory> trajectories,
                        const std::filesystem::path& path);

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

// Ground-truth CSV: header `slice,x,y,true_id` -- a detections file with one
// extra column, same ordering.

GroundTruth read_ground_truth(const std::filesystem::path& path);

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);

// Occlusion events as JSON lines:
// {"slice": s, "kind": "merge"|"split", "prev": [...], "next": [...]}

void write_events_jsonl(std::span<const OcclusionEvent> events,
                        const std::filesystem::path& path);

std::vector<OcclusionEvent> read_events_jsonl(const std::filesystem::path& path);

/// EvalReport as a single JSON object.
std::string report_to_json(const EvalReport& report);

void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace flowtrack
