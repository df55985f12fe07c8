#include "flowtrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace flowtrack {

namespace {

// Shortest representation that parses back to the same value.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double_field(std::string_view field, const std::filesystem::path& path,
                          std::size_t line, const char* name) {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError(path.string(), line,
                         std::string("bad ") + name + " value '" + std::string(field) + "'");
    return value;
}

std::int64_t parse_int_field(std::string_view field, const std::filesystem::path& path,
                             std::size_t line, const char* name) {
    std::int64_t value = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ParseError(path.string(), line,
                         std::string("bad ") + name + " value '" + std::string(field) + "'");
    return value;
}

Point parse_point_fields(std::string_view fx, std::string_view fy,
                         const std::filesystem::path& path, std::size_t line) {
    Point p{parse_double_field(fx, path, line, "x"), parse_double_field(fy, path, line, "y")};
    if (!valid_coordinates(p))
        throw ParseError(path.string(), line, "coordinates must be finite and non-negative");
    return p;
}

// Reads the next line, stripping a trailing \r; counts lines for messages.
bool read_line(std::istream& in, std::string& line, std::size_t& line_no) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

void expect_header(std::istream& in, const std::filesystem::path& path, std::string_view header,
                   std::size_t& line_no) {
    std::string line;
    if (!read_line(in, line, line_no))
        throw ParseError(path.string(), 0, "empty file, expected header '" + std::string(header) + "'");
    if (line != header)
        throw ParseError(path.string(), line_no,
                         "expected header '" + std::string(header) + "', got '" + line + "'");
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<DetectionSlice> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::size_t line_no = 0;
    expect_header(in, path, "slice,x,y", line_no);

    std::int64_t max_slice = -1;
    struct Row {
        std::int64_t slice;
        Point point;
    };
    std::vector<Row> rows;
    std::string line;
    while (read_line(in, line, line_no)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3)
            throw ParseError(path.string(), line_no, "expected 3 fields, got " +
                                                         std::to_string(fields.size()));
        const std::int64_t slice = parse_int_field(fields[0], path, line_no, "slice");
        if (slice < 0) throw ParseError(path.string(), line_no, "negative slice index");
        rows.push_back({slice, parse_point_fields(fields[1], fields[2], path, line_no)});
        max_slice = std::max(max_slice, slice);
    }

    // Missing indices become empty slices; an empty screen is legal.
    std::vector<DetectionSlice> slices(static_cast<std::size_t>(max_slice + 1));
    for (std::size_t s = 0; s < slices.size(); ++s) slices[s].index = static_cast<std::int64_t>(s);
    for (const Row& row : rows)
        slices[static_cast<std::size_t>(row.slice)].points.push_back(row.point);
    return slices;
}

void write_detections(std::span<const DetectionSlice> slices, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << "slice,x,y\n";
    for (const DetectionSlice& slice : slices) {
        for (const Point& p : slice.points)
            out << slice.index << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
    }
    finish_write(out, path);
}

void write_trajectories(std::span<const Trajectory> trajectories,
                        const std::filesystem::path& path) {
    std::vector<const Trajectory*> sorted;
    sorted.reserve(trajectories.size());
    for (const Trajectory& t : trajectories) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const Trajectory* a, const Trajectory* b) { return a->id < b->id; });

    std::ofstream out = open_for_write(path);
    out << "object_id,slice,x,y,speed\n";
    for (const Trajectory* traj : sorted) {
        for (std::size_t k = 0; k < traj->samples.size(); ++k) {
            const TrajectorySample& s = traj->samples[k];
            out << traj->id.value << ',' << s.slice << ',' << format_double(s.position.x) << ','
                << format_double(s.position.y) << ',';
            if (k + 1 < traj->samples.size() && s.speed) out << format_double(*s.speed);
            out << '\n';
        }
    }
    finish_write(out, path);
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::size_t line_no = 0;
    expect_header(in, path, "object_id,slice,x,y,speed", line_no);

    std::map<std::int64_t, Trajectory> by_id;
    std::string line;
    while (read_line(in, line, line_no)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 5)
            throw ParseError(path.string(), line_no, "expected 5 fields, got " +
                                                         std::to_string(fields.size()));
        const std::int64_t id = parse_int_field(fields[0], path, line_no, "object_id");
        if (id <= 0) throw ParseError(path.string(), line_no, "object_id must be positive");
        const std::int64_t slice = parse_int_field(fields[1], path, line_no, "slice");
        if (slice < 0) throw ParseError(path.string(), line_no, "negative slice index");

        TrajectorySample sample;
        sample.slice = slice;
        sample.position = parse_point_fields(fields[2], fields[3], path, line_no);
        if (!fields[4].empty())
            sample.speed = parse_double_field(fields[4], path, line_no, "speed");

        auto [it, inserted] = by_id.try_emplace(id);
        if (inserted) it->second.id = ObjectId{id};
        it->second.samples.push_back(sample);
    }

    std::vector<Trajectory> trajectories;
    trajectories.reserve(by_id.size());
    for (auto& [id, traj] : by_id) {
        std::sort(traj.samples.begin(), traj.samples.end(),
                  [](const TrajectorySample& a, const TrajectorySample& b) {
                      return a.slice < b.slice;
                  });
        for (std::size_t k = 0; k + 1 < traj.samples.size(); ++k) {
            if (traj.samples[k + 1].slice != traj.samples[k].slice + 1)
                throw ParseError(path.string(), 0,
                                 "object " + std::to_string(id) +
                                     " is not on a contiguous run of slices");
        }
        trajectories.push_back(std::move(traj));
    }
    return trajectories;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::size_t line_no = 0;
    expect_header(in, path, "slice,x,y,true_id", line_no);

    std::int64_t max_slice = -1;
    struct Row {
        std::int64_t slice;
        TruthPoint point;
    };
    std::vector<Row> rows;
    std::string line;
    while (read_line(in, line, line_no)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4)
            throw ParseError(path.string(), line_no, "expected 4 fields, got " +
                                                         std::to_string(fields.size()));
        const std::int64_t slice = parse_int_field(fields[0], path, line_no, "slice");
        if (slice < 0) throw ParseError(path.string(), line_no, "negative slice index");
        const std::int64_t id = parse_int_field(fields[3], path, line_no, "true_id");
        if (id <= 0) throw ParseError(path.string(), line_no, "true_id must be positive");
        rows.push_back({slice, {parse_point_fields(fields[1], fields[2], path, line_no),
                                ObjectId{id}}});
        max_slice = std::max(max_slice, slice);
    }

    GroundTruth truth;
    truth.slices.resize(static_cast<std::size_t>(max_slice + 1));
    for (const Row& row : rows)
        truth.slices[static_cast<std::size_t>(row.slice)].push_back(row.point);
    return truth;
}

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << "slice,x,y,true_id\n";
    for (std::size_t s = 0; s < truth.slices.size(); ++s) {
        for (const TruthPoint& tp : truth.slices[s]) {
            out << s << ',' << format_double(tp.position.x) << ',' << format_double(tp.position.y)
                << ',' << tp.id.value << '\n';
        }
    }
    finish_write(out, path);
}

namespace {

void append_index_array(std::string& out, const std::vector<std::size_t>& indices) {
    out += '[';
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (k) out += ", ";
        out += std::to_string(indices[k]);
    }
    out += ']';
}

}  // namespace

void write_events_jsonl(std::span<const OcclusionEvent> events,
                        const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    for (const OcclusionEvent& ev : events) {
        std::string line = "{\"slice\": " + std::to_string(ev.slice) + ", \"kind\": \"" +
                           (ev.kind == OcclusionKind::Merge ? "merge" : "split") +
                           "\", \"prev\": ";
        append_index_array(line, ev.prev_indices);
        line += ", \"next\": ";
        append_index_array(line, ev.next_indices);
        line += "}";
        out << line << '\n';
    }
    finish_write(out, path);
}

std::vector<OcclusionEvent> read_events_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<OcclusionEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (read_line(in, line, line_no)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            OcclusionEvent ev;
            ev.slice = j.at("slice").get<std::int64_t>();
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "merge")
                ev.kind = OcclusionKind::Merge;
            else if (kind == "split")
                ev.kind = OcclusionKind::Split;
            else
                throw ParseError(path.string(), line_no, "unknown event kind '" + kind + "'");
            ev.prev_indices = j.at("prev").get<std::vector<std::size_t>>();
            ev.next_indices = j.at("next").get<std::vector<std::size_t>>();
            events.push_back(std::move(ev));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return events;
}

std::string report_to_json(const EvalReport& report) {
    std::ostringstream out;
    out << "{\"total_links\": " << report.total_links
        << ", \"correct_links\": " << report.correct_links
        << ", \"id_switches\": " << report.id_switches
        << ", \"fragmentations\": " << report.fragmentations
        << ", \"spurious_tracks\": " << report.spurious_tracks << "}";
    return out.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_for_write(path);
    out << report_to_json(report) << '\n';
    finish_write(out, path);
}

}  // namespace flowtrack
