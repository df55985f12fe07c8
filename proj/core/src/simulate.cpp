#include "flowtrack/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace flowtrack {

void ScenarioConfig::validate() const {
    auto fail = [](const char* what) {
        throw std::invalid_argument(std::string("scenario config: ") + what);
    };
    if (screen_width <= 0 || screen_height <= 0) fail("screen dimensions must be positive");
    if (n_slices <= 0) fail("n_slices must be positive");
    if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate))
        fail("arrival_rate must be finite and non-negative");
    if (!(speed_min >= 0.0) || !(speed_min <= speed_max) || !std::isfinite(speed_max))
        fail("speed range must satisfy 0 <= min <= max");
    if (!(heading_jitter >= 0.0) || !std::isfinite(heading_jitter))
        fail("heading_jitter must be finite and non-negative");
    if (!(min_separation >= 0.0) || !std::isfinite(min_separation))
        fail("min_separation must be finite and non-negative");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        fail("noise_sigma must be finite and non-negative");
}

ScenarioConfig ScenarioConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("malformed scenario config " + path.string() + ": " + e.what());
    }

    ScenarioConfig config;
    try {
        config.screen_width = j.at("screen_width").get<int>();
        config.screen_height = j.at("screen_height").get<int>();
        config.n_slices = j.at("n_slices").get<int>();
        config.arrival_rate = j.at("arrival_rate").get<double>();
        config.speed_min = j.at("speed_min").get<double>();
        config.speed_max = j.at("speed_max").get<double>();
        config.heading_jitter = j.at("heading_jitter").get<double>();
        config.min_separation = j.at("min_separation").get<double>();
        config.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        config.noise_sigma = j.value("noise_sigma", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("invalid scenario config " + path.string() + ": " + e.what());
    }
    config.validate();
    return config;
}

namespace {

struct LiveObject {
    ObjectId id;
    Point pos;
    double vx = 0.0;
    double vy = 0.0;
};

bool on_screen(const Point& p, const ScenarioConfig& c) {
    return p.x >= 0.0 && p.x < c.screen_width && p.y >= 0.0 && p.y < c.screen_height;
}

}  // namespace

Scenario generate(const ScenarioConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.rng_seed);
    std::uniform_int_distribution<int> edge_dist(0, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Scenario out;
    out.detections.resize(static_cast<std::size_t>(config.n_slices));
    out.truth.slices.resize(static_cast<std::size_t>(config.n_slices));

    std::vector<LiveObject> live;
    std::int64_t next_id = 0;

    for (int s = 0; s < config.n_slices; ++s) {
        // Advance, then drop whoever left the screen.
        for (LiveObject& obj : live) {
            obj.pos.x += obj.vx;
            obj.pos.y += obj.vy;
        }
        std::erase_if(live, [&](const LiveObject& o) { return !on_screen(o.pos, config); });

        int arrivals = 0;
        if (config.arrival_rate > 0.0) {
            std::poisson_distribution<int> poisson(config.arrival_rate);
            arrivals = poisson(rng);
        }
        for (int a = 0; a < arrivals; ++a) {
            const int edge = edge_dist(rng);
            const double along = unit(rng);
            Point pos;
            double base_heading = 0.0;
            switch (edge) {
                case 0:  // left, heading +x
                    pos = {0.0, along * (config.screen_height - 1)};
                    base_heading = 0.0;
                    break;
                case 1:  // right, heading -x
                    pos = {static_cast<double>(config.screen_width - 1),
                           along * (config.screen_height - 1)};
                    base_heading = std::numbers::pi;
                    break;
                case 2:  // top, heading +y (down)
                    pos = {along * (config.screen_width - 1), 0.0};
                    base_heading = std::numbers::pi / 2.0;
                    break;
                default:  // bottom, heading -y (up)
                    pos = {along * (config.screen_width - 1),
                           static_cast<double>(config.screen_height - 1)};
                    base_heading = -std::numbers::pi / 2.0;
                    break;
            }
            const double heading =
                base_heading + (unit(rng) * 2.0 - 1.0) * config.heading_jitter;
            const double speed =
                config.speed_min + unit(rng) * (config.speed_max - config.speed_min);

            const bool blocked = std::any_of(live.begin(), live.end(), [&](const LiveObject& o) {
                return distance(o.pos, pos) < config.min_separation;
            });
            if (blocked) continue;

            live.push_back({ObjectId{++next_id}, pos, speed * std::cos(heading),
                            speed * std::sin(heading)});
        }

        // Record the slice in shuffled order; truth and detections share it.
        std::vector<std::size_t> order(live.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::shuffle(order.begin(), order.end(), rng);

        DetectionSlice& det = out.detections[static_cast<std::size_t>(s)];
        det.index = s;
        auto& truth_slice = out.truth.slices[static_cast<std::size_t>(s)];
        for (const std::size_t k : order) {
            const LiveObject& obj = live[k];
            truth_slice.push_back({obj.pos, obj.id});
            Point detected = obj.pos;
            if (config.noise_sigma > 0.0) {
                std::normal_distribution<double> noise(0.0, config.noise_sigma);
                detected.x = std::clamp(detected.x + noise(rng), 0.0,
                                        std::nexttoward(config.screen_width, 0.0));
                detected.y = std::clamp(detected.y + noise(rng), 0.0,
                                        std::nexttoward(config.screen_height, 0.0));
            }
            det.points.push_back(detected);
        }
    }
    return out;
}

bool occlusion_free(const GroundTruth& truth, double max_distance) {
    std::unordered_map<ObjectId, Point> previous;
    for (const auto& slice : truth.slices) {
        for (std::size_t a = 0; a < slice.size(); ++a) {
            for (std::size_t b = a + 1; b < slice.size(); ++b) {
                if (distance(slice[a].position, slice[b].position) <= max_distance) return false;
            }
        }
        std::unordered_map<ObjectId, Point> current;
        for (const TruthPoint& tp : slice) {
            const auto it = previous.find(tp.id);
            if (it != previous.end() && distance(it->second, tp.position) > max_distance)
                return false;
            current.emplace(tp.id, tp.position);
        }
        previous = std::move(current);
    }
    return true;
}

}  // namespace flowtrack
