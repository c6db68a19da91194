#include "lcpred/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "lcpred/csv.hpp"

namespace lcpred {

namespace {

constexpr double kPi = std::numbers::pi;

double ease(double tau) {
    if (tau <= 0.0) return 0.0;
    if (tau >= 1.0) return 1.0;
    return 0.5 * (1.0 - std::cos(kPi * tau));
}

// Inverse of ease on (0, 1).
double ease_inverse(double q) { return std::acos(1.0 - 2.0 * q) / kPi; }

// Antiderivative of |cos(pi tau)| on [0, 1].
double abs_cos_integral(double tau) {
    return tau <= 0.5 ? std::sin(kPi * tau) / kPi : (2.0 - std::sin(kPi * tau)) / kPi;
}

// Lanes of one carriageway ordered from the driver's right to left.
std::vector<LaneBand> lanes_of(const RoadGeometry& road, Carriageway c) {
    std::vector<LaneBand> out;
    for (const auto& [id, b] : road.bands()) {
        if (b.carriageway == c) out.push_back(b);
    }
    std::sort(out.begin(), out.end(), [](const LaneBand& a, const LaneBand& b) { return a.low < b.low; });
    return out;
}

const LaneBand* neighbor_lane(const RoadGeometry& road, const LaneBand& from, Side side) {
    for (const auto& [id, b] : road.bands()) {
        if (b.carriageway != from.carriageway) continue;
        if (side == Side::left && b.low == from.high) return &b;
        if (side == Side::right && b.high == from.low) return &b;
    }
    return nullptr;
}

struct PlannedChange {
    LaneChangeCommand cmd;
    const LaneBand* source = nullptr;
    const LaneBand* target = nullptr;
    double amplitude = 0.0;  // signed lateral displacement of the ease
    double y_start = 0.0;    // left edge before the change
};

struct Kinematics {
    double x, vx, ax, y, vy, ay;
};

Kinematics kinematics(const VehicleScript& v, const std::vector<PlannedChange>& plan, double y0, double t) {
    Kinematics k{};
    k.x = v.x0 + v.speed.distance(t);
    k.vx = v.speed.speed(t);
    k.ax = v.speed.accel(t);
    k.y = y0;
    for (const auto& c : plan) {
        const double tau = (t - c.cmd.start_time) / c.cmd.duration;
        const double w = kPi / c.cmd.duration;
        k.y += c.amplitude * ease(tau);
        if (tau > 0.0 && tau < 1.0) {
            k.vy += 0.5 * c.amplitude * w * std::sin(kPi * tau);
            k.ay += 0.5 * c.amplitude * w * w * std::cos(kPi * tau);
        }
    }
    return k;
}

int lane_at(const RoadGeometry& road, Carriageway c, double centre) {
    for (const auto& [id, b] : road.bands()) {
        if (b.carriageway == c && centre > b.low && centre <= b.high) return id;
    }
    return 0;
}

struct Placed {
    std::size_t vehicle;
    Carriageway carriageway;
    int lane;
    double x;
    double y;
    double length;
    double width;
};

ScriptedChange truth_for(const VehicleScript& v, const PlannedChange& c, double fps, int first, int last) {
    ScriptedChange s;
    s.vehicle_id = v.id;
    s.tag = v.tag;
    s.direction = c.cmd.direction;
    s.source_lane = c.source->lane_id;
    s.target_lane = c.target->lane_id;
    s.start_time = c.cmd.start_time;
    s.commanded_duration = c.cmd.duration;
    const double a = std::abs(c.amplitude);
    double q_lead = 0.0;
    double q_trail = 0.0;
    if (c.cmd.direction == Side::left) {
        s.marking = c.source->high;
        q_lead = (s.marking - c.y_start) / a;
        q_trail = (s.marking + v.width - c.y_start) / a;
    } else {
        s.marking = c.source->low;
        q_lead = (c.y_start - v.width - s.marking) / a;
        q_trail = (c.y_start - s.marking) / a;
    }
    if (!(q_lead > 0.0 && q_trail < 1.0)) {
        throw ConfigError("vehicle " + std::to_string(v.id) + ": lateral ease does not carry the body across the marking");
    }
    const double tau1 = ease_inverse(q_lead);
    const double tau2 = ease_inverse(q_trail);
    s.t_lead = c.cmd.start_time + c.cmd.duration * tau1;
    s.t_trail = c.cmd.start_time + c.cmd.duration * tau2;
    s.expected_t_s = static_cast<int>(std::floor(s.t_lead * fps));
    s.expected_t_e = static_cast<int>(std::floor(s.t_trail * fps)) + 1;
    s.observed = s.expected_t_s >= first && s.expected_t_e <= last;
    const double dur = s.t_trail - s.t_lead;
    s.style.duration = dur;
    s.style.lat_speed = v.width / dur;
    s.style.lat_accel = 0.5 * a * (kPi / c.cmd.duration) * (kPi / c.cmd.duration) *
                        (abs_cos_integral(tau2) - abs_cos_integral(tau1)) / (tau2 - tau1);
    return s;
}

}  // namespace

double SpeedProfile::speed(double t) const { return v0 + amplitude * std::sin(2.0 * kPi * t / period + phase); }

double SpeedProfile::accel(double t) const {
    return amplitude * (2.0 * kPi / period) * std::cos(2.0 * kPi * t / period + phase);
}

double SpeedProfile::distance(double t) const {
    return v0 * t - amplitude * period / (2.0 * kPi) * (std::cos(2.0 * kPi * t / period + phase) - std::cos(phase));
}

Recording SyntheticRecording::recording() const {
    Recording r;
    r.meta = meta;
    r.tracks = tracks;
    return r;
}

std::vector<double> default_upper_markings() { return {4.0, 7.75, 11.5, 15.25}; }
std::vector<double> default_lower_markings() { return {19.0, 22.75, 26.5, 30.25}; }

SyntheticRecording gen_recording(const ScenarioSpec& spec) {
    if (!(spec.frame_rate > 0.0) || !(spec.duration > 0.0)) throw ConfigError("scenario: bad frame rate or duration");
    SyntheticRecording out;
    out.meta.recording_id = spec.recording_id;
    out.meta.frame_rate = spec.frame_rate;
    out.meta.upper_markings = spec.upper_markings.empty() ? default_upper_markings() : spec.upper_markings;
    out.meta.lower_markings = spec.lower_markings.empty() ? default_lower_markings() : spec.lower_markings;
    out.meta.drive_direction_map = derive_lane_directions(out.meta.upper_markings, out.meta.lower_markings);
    const RoadGeometry road(out.meta);
    const double fps = spec.frame_rate;
    const int n_frames = static_cast<int>(std::floor(spec.duration * fps)) + 1;

    std::vector<std::vector<Placed>> by_frame(static_cast<std::size_t>(n_frames));
    std::vector<std::size_t> order(spec.vehicles.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return spec.vehicles[a].id < spec.vehicles[b].id;
    });

    out.tracks.resize(spec.vehicles.size());
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const auto& v = spec.vehicles[order[oi]];
        if (v.id <= 0) throw ConfigError("scenario: vehicle ids must be positive");
        if (oi > 0 && spec.vehicles[order[oi - 1]].id == v.id) {
            throw ConfigError("scenario: duplicate vehicle id " + std::to_string(v.id));
        }
        const auto* start = road.band(v.lane);
        if (!start || start->carriageway != v.carriageway) {
            throw ConfigError("vehicle " + std::to_string(v.id) + ": start lane not on its carriageway");
        }
        const int first = v.first_frame;
        const int last = v.last_frame < 0 ? n_frames - 1 : v.last_frame;
        if (first < 0 || last >= n_frames || last < first) {
            throw ConfigError("vehicle " + std::to_string(v.id) + ": frame range outside the recording");
        }

        const double y0 = start->center() + 0.5 * v.width;
        std::vector<PlannedChange> plan;
        const LaneBand* lane = start;
        double y = y0;
        double prev_end = -1e300;
        for (const auto& cmd : v.changes) {
            if (!(cmd.duration > 0.0) || cmd.start_time < 0.0 || cmd.start_time + cmd.duration > spec.duration) {
                throw ConfigError("vehicle " + std::to_string(v.id) + ": lane change not inside the recording");
            }
            if (cmd.start_time < prev_end) throw ConfigError("vehicle " + std::to_string(v.id) + ": overlapping changes");
            const auto* target = neighbor_lane(road, *lane, cmd.direction);
            if (!target) throw ConfigError("vehicle " + std::to_string(v.id) + ": lane change leaves the road");
            PlannedChange pc{cmd, lane, target, target->center() - lane->center(), y};
            plan.push_back(pc);
            y += pc.amplitude;
            lane = target;
            prev_end = cmd.start_time + cmd.duration;
        }
        for (const auto& pc : plan) out.truth.changes.push_back(truth_for(v, pc, fps, first, last));

        const auto cw_lanes = lanes_of(road, v.carriageway);
        const double road_low = cw_lanes.front().low;
        const double road_high = cw_lanes.back().high;
        Track& track = out.tracks[oi];
        track.track_id = v.id;
        for (int f = first; f <= last; ++f) {
            const double t = f / fps;
            const auto k = kinematics(v, plan, y0, t);
            const int lane_id = lane_at(road, v.carriageway, k.y - 0.5 * v.width);
            const auto* band = road.band(lane_id);
            if (!band || k.y > road_high + 1e-9 || k.y - v.width < road_low - 1e-9) {
                throw ConfigError("vehicle " + std::to_string(v.id) + " leaves the road at frame " + std::to_string(f));
            }
            TrackPoint p;
            p.frame = f;
            p.width = v.length;
            p.height = v.width;
            p.lane_id = lane_id;
            if (v.carriageway == Carriageway::lower) {
                p.x = k.x;
                p.y = -k.y;
                p.vx = k.vx;
                p.vy = -k.vy;
                p.ax = k.ax;
                p.ay = -k.ay;
            } else {
                p.x = -k.x - v.length;
                p.y = k.y - v.width;
                p.vx = -k.vx;
                p.vy = k.vy;
                p.ax = -k.ax;
                p.ay = k.ay;
            }
            track.points.push_back(p);
            by_frame[static_cast<std::size_t>(f)].push_back({oi, v.carriageway, lane_id, k.x, k.y, v.length, v.width});
        }
    }

    // Geometric neighbour assignment and collision check, frame by frame.
    for (int f = 0; f < n_frames; ++f) {
        const auto& present = by_frame[static_cast<std::size_t>(f)];
        for (const auto& me : present) {
            const auto* my_band = road.band(me.lane);
            const auto* left = neighbor_lane(road, *my_band, Side::left);
            const auto* right = neighbor_lane(road, *my_band, Side::right);
            double best[6] = {1e300, -1e300, 1e300, -1e300, 1e300, -1e300};
            int ids[8] = {0, 0, 0, 0, 0, 0, 0, 0};  // HighD neighbour column order
            for (const auto& other : present) {
                if (other.vehicle == me.vehicle || other.carriageway != me.carriageway) continue;
                const int oid = spec.vehicles[order[other.vehicle]].id;
                const bool overlap_x = other.x < me.x + me.length && me.x < other.x + other.length;
                const bool overlap_y = other.y - other.width < me.y && me.y - me.width < other.y;
                if (overlap_x && overlap_y) {
                    throw ConfigError("vehicles " + std::to_string(spec.vehicles[order[me.vehicle]].id) + " and " +
                                      std::to_string(oid) + " overlap at frame " + std::to_string(f));
                }
                int slot = -1;  // 0 own, 1 left, 2 right
                if (other.lane == me.lane) slot = 0;
                else if (left && other.lane == left->lane_id) slot = 1;
                else if (right && other.lane == right->lane_id) slot = 2;
                if (slot < 0) continue;
                const int base = slot == 0 ? 0 : (slot == 1 ? 2 : 5);
                if (slot > 0 && overlap_x) {
                    ids[base + 2] = ids[base + 2] == 0 ? oid : ids[base + 2];
                    continue;
                }
                if (other.x > me.x) {
                    if (other.x < best[2 * slot]) {
                        best[2 * slot] = other.x;
                        ids[base] = oid;
                    }
                } else if (other.x > best[2 * slot + 1]) {
                    best[2 * slot + 1] = other.x;
                    ids[base + 1] = oid;
                }
            }
            auto& p = out.tracks[me.vehicle].points[static_cast<std::size_t>(
                f - out.tracks[me.vehicle].points.front().frame)];
            p.neighbors = {ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6], ids[7]};
        }
    }
    return out;
}

void write_recording(const SyntheticRecording& rec, const std::string& dir) {
    const std::filesystem::path d(dir);
    std::filesystem::create_directories(d);
    write_file_atomic(d / (rec.meta.recording_id + "_recordingMeta.csv"), write_recording_meta_csv(rec.meta));
    write_file_atomic(d / (rec.meta.recording_id + "_tracks.csv"), write_tracks_csv(rec.tracks));
}

std::string_view to_string(Preset p) noexcept {
    switch (p) {
        case Preset::style_blobs: return "style_blobs";
        case Preset::lane_keeping: return "lane_keeping";
        case Preset::truncated: return "truncated";
        case Preset::double_change: return "double_change";
        case Preset::missing_neighbor: return "missing_neighbor";
    }
    return "style_blobs";
}

Preset parse_preset(std::string_view text) {
    for (auto p : {Preset::style_blobs, Preset::lane_keeping, Preset::truncated, Preset::double_change,
                   Preset::missing_neighbor}) {
        if (text == to_string(p)) return p;
    }
    throw ConfigError("unknown synth preset '" + std::string(text) + "'");
}

double style_blob_duration(DrivingStyle style) {
    switch (style) {
        case DrivingStyle::aggressive: return 3.0;
        case DrivingStyle::cautious: return 5.0;
        case DrivingStyle::general: return 7.5;
    }
    return 5.0;
}

std::vector<SyntheticRecording> corpus(const CorpusOptions& options) {
    if (options.presets.empty()) throw ConfigError("synth: no presets");
    if (options.recordings_per_preset < 1 || options.platoons_per_recording < 1) {
        throw ConfigError("synth: recordings_per_preset and platoons_per_recording must be positive");
    }
    std::vector<SyntheticRecording> out;
    int serial = 0;
    int platoon_serial = 0;
    for (const Preset preset : options.presets) {
        for (int r = 0; r < options.recordings_per_preset; ++r) {
            ++serial;
            std::mt19937_64 rng(derive_seed(derive_seed(options.seed, std::string("corpus/") + std::string(to_string(preset))),
                                            static_cast<std::uint64_t>(r)));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

            ScenarioSpec spec;
            char id[16];
            std::snprintf(id, sizeof(id), "%02d", serial);
            spec.recording_id = id;
            spec.duration = 16.0;
            spec.upper_markings = default_upper_markings();
            spec.lower_markings = default_lower_markings();
            RecordingMeta meta;
            meta.upper_markings = spec.upper_markings;
            meta.lower_markings = spec.lower_markings;
            const RoadGeometry road(meta);

            // Any vehicle behind in the target lane would stand in for the late TFV,
            // so this preset keeps one platoon per carriageway.
            const int platoons = preset == Preset::missing_neighbor ? std::min(2, options.platoons_per_recording)
                                                                    : options.platoons_per_recording;
            for (int p = 0; p < platoons; ++p) {
                const auto cw = p % 2 == 0 ? Carriageway::lower : Carriageway::upper;
                const auto lanes = lanes_of(road, cw);  // right, middle, left
                const double x_base = 40.0 + 200.0 * (p / 2);
                const double v_base = uni(25.0, 30.0);
                auto profile = [&]() {
                    return SpeedProfile{v_base + uni(-0.15, 0.15), uni(0.0, 0.6), uni(8.0, 12.0), uni(0.0, 2.0 * kPi)};
                };
                const int id0 = 4 * p + 1;
                const int g = platoon_serial++;
                const auto style = std::array{DrivingStyle::aggressive, DrivingStyle::cautious,
                                              DrivingStyle::general}[static_cast<std::size_t>(g % 3)];
                Side side = (g / 3 + r) % 2 == 0 ? Side::left : Side::right;
                int source = lanes[1].lane_id;
                std::string tag = std::string(to_string(style));
                double duration = style_blob_duration(style) * uni(0.95, 1.05);
                const double t0 = uni(5.0, 5.5);
                if (preset == Preset::double_change) {
                    side = Side::left;
                    source = lanes[0].lane_id;
                    duration = style_blob_duration(DrivingStyle::aggressive) * uni(0.95, 1.05);
                }
                const int target = side == Side::left ? (source == lanes[0].lane_id ? lanes[1].lane_id : lanes[2].lane_id)
                                                      : lanes[0].lane_id;

                VehicleScript sv;
                sv.id = id0;
                sv.carriageway = cw;
                sv.lane = source;
                sv.x0 = x_base;
                sv.speed = profile();
                sv.tag = tag;
                if (preset != Preset::lane_keeping) sv.changes.push_back({t0, duration, side});
                if (preset == Preset::double_change) {
                    sv.tag = "double";
                    sv.changes.push_back({t0 + duration + 0.5, duration, Side::left});
                }
                const double fps = spec.frame_rate;
                if (preset == Preset::truncated) {
                    if (p % 2 == 0) {
                        sv.first_frame = static_cast<int>(std::ceil((t0 + 0.42 * duration) * fps));
                        sv.tag = "truncated_start";
                    } else {
                        sv.last_frame = static_cast<int>(std::floor((t0 + 0.6 * duration) * fps));
                        sv.tag = "truncated_end";
                    }
                }

                VehicleScript clv;
                clv.id = id0 + 1;
                clv.carriageway = cw;
                clv.lane = source;
                clv.x0 = x_base + uni(30.0, 35.0);
                clv.speed = profile();

                VehicleScript tlv;
                tlv.id = id0 + 2;
                tlv.carriageway = cw;
                tlv.lane = target;
                tlv.x0 = x_base + uni(20.0, 26.0);
                tlv.speed = profile();

                VehicleScript tfv;
                tfv.id = id0 + 3;
                tfv.carriageway = cw;
                tfv.lane = target;
                tfv.x0 = x_base - uni(22.0, 28.0);
                tfv.speed = profile();
                if (preset == Preset::missing_neighbor) {
                    // Enter one second before the start of the manoeuvre's crossing: inside the prep window.
                    tfv.first_frame = static_cast<int>(std::lround((t0 + 0.3 * duration - 1.0) * fps));
                    sv.tag = "missing_neighbor";
                }
                if (preset == Preset::lane_keeping) {
                    sv.tag = "lane_keeping";
                    tlv.lane = lanes[2].lane_id;
                    tfv.lane = lanes[0].lane_id;
                }
                for (auto* v : {&sv, &clv, &tlv, &tfv}) spec.vehicles.push_back(*v);
            }
            spec.seed = options.seed;
            out.push_back(gen_recording(spec));
        }
    }
    return out;
}

SequenceSet trend_sequences(std::size_t n, std::uint64_t seed, std::size_t steps, double noise) {
    SequenceSet set;
    std::mt19937_64 rng(derive_seed(seed, "trend"));
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    const std::size_t lat = static_cast<std::size_t>(Feature::vlat_sv);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double slope = (label == 1 ? 1.0 : -1.0) * mag(rng);
        Sequence seq(steps, std::vector<double>(kFrameFeatureCount));
        for (std::size_t t = 0; t < steps; ++t) {
            for (std::size_t j = 0; j < kFrameFeatureCount; ++j) seq[t][j] = unit(rng);
            const double r = steps > 1 ? static_cast<double>(t) / static_cast<double>(steps - 1) - 0.5 : 0.0;
            seq[t][lat] = 2.0 * slope * r + noise * unit(rng);
        }
        set.inputs.push_back(std::move(seq));
        set.labels.push_back(label);
    }
    return set;
}

PlantedData planted_aggregate(std::size_t n, std::size_t d, std::size_t informative, std::uint64_t seed, double shift,
                              double spread) {
    if (informative >= d) throw ConfigError("planted data: informative column out of range");
    PlantedData out;
    out.x = FeatureMatrix(n, d);
    std::mt19937_64 rng(derive_seed(seed, "planted"));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        for (std::size_t j = 0; j < d; ++j) out.x(i, j) = unit(rng);
        out.x(i, informative) = (label == 1 ? shift : -shift) + spread * unit(rng);
        out.y.push_back(label);
    }
    return out;
}

}  // namespace lcpred
