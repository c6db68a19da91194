#include "lcpred/trajectory.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "lcpred/csv.hpp"

namespace lcpred {

std::string_view to_string(Carriageway c) noexcept { return c == Carriageway::upper ? "upper" : "lower"; }

namespace {

std::vector<double> parse_markings(const CsvTable& table, std::size_t row, std::size_t column) {
    const auto& text = table.cell(row, column);
    std::vector<double> out;
    for (const auto& part : split(text, ';')) {
        if (part.empty()) continue;
        double v = 0.0;
        if (!try_parse_double(part, v)) {
            throw ParseError(table.source(), table.line_of(row), table.header()[column],
                             "non-numeric lane marking '" + part + "'");
        }
        out.push_back(v);
    }
    if (out.size() < 2) {
        throw ParseError(table.source(), table.line_of(row), table.header()[column],
                         "need at least two lane markings per carriageway");
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (!(out[i] > out[i - 1])) {
            throw ParseError(table.source(), table.line_of(row), table.header()[column],
                             "lane markings must be strictly increasing");
        }
    }
    return out;
}

struct TrackColumns {
    std::size_t frame, id, x, y, width, height, vx, vy, ax, ay, lane;
    std::array<std::size_t, 8> neighbors;
};

constexpr std::array<const char*, 8> kNeighborColumns{
    "precedingId",     "followingId",      "leftPrecedingId",  "leftFollowingId",
    "leftAlongsideId", "rightPrecedingId", "rightFollowingId", "rightAlongsideId"};

TrackColumns resolve_columns(const CsvTable& t) {
    TrackColumns c{};
    c.frame = t.require_column("frame");
    c.id = t.require_column("id");
    c.x = t.require_column("x");
    c.y = t.require_column("y");
    c.width = t.require_column("width");
    c.height = t.require_column("height");
    c.vx = t.require_column("xVelocity");
    c.vy = t.require_column("yVelocity");
    c.ax = t.require_column("xAcceleration");
    c.ay = t.require_column("yAcceleration");
    c.lane = t.require_column("laneId");
    for (std::size_t i = 0; i < kNeighborColumns.size(); ++i) c.neighbors[i] = t.require_column(kNeighborColumns[i]);
    return c;
}

int& neighbor_slot(NeighborIds& n, std::size_t i) {
    switch (i) {
        case 0: return n.preceding;
        case 1: return n.following;
        case 2: return n.left_preceding;
        case 3: return n.left_following;
        case 4: return n.left_alongside;
        case 5: return n.right_preceding;
        case 6: return n.right_following;
        default: return n.right_alongside;
    }
}

int neighbor_value(const NeighborIds& n, std::size_t i) { return neighbor_slot(const_cast<NeighborIds&>(n), i); }

void flush_track(std::vector<TrackPoint>& points, std::vector<std::size_t>& lines, int id, GapPolicy gaps,
                 ParsedTracks& out) {
    if (points.empty()) return;
    std::vector<std::size_t> breaks;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].frame != points[i - 1].frame + 1) breaks.push_back(i);
    }
    if (breaks.empty()) {
        out.tracks.push_back(Track{id, 0, std::move(points), std::nullopt, false});
    } else if (gaps == GapPolicy::reject_track) {
        out.issues.push_back({id, lines[breaks.front()],
                              "frame gap after frame " + std::to_string(points[breaks.front() - 1].frame) +
                                  "; track rejected (" + std::to_string(points.size()) + " rows)"});
    } else {
        std::size_t begin = 0;
        int segment = 0;
        breaks.push_back(points.size());
        for (auto end : breaks) {
            Track t{id, segment++, {}, std::nullopt, false};
            t.points.assign(points.begin() + static_cast<std::ptrdiff_t>(begin),
                            points.begin() + static_cast<std::ptrdiff_t>(end));
            out.tracks.push_back(std::move(t));
            begin = end;
        }
    }
    points.clear();
    lines.clear();
}

}  // namespace

std::map<int, Carriageway> derive_lane_directions(const std::vector<double>& upper, const std::vector<double>& lower) {
    std::map<int, Carriageway> map;
    const int n_upper = static_cast<int>(upper.size());
    for (int j = 0; j + 1 < n_upper; ++j) map[j + 2] = Carriageway::upper;
    const int n_lower = static_cast<int>(lower.size());
    for (int j = 0; j + 1 < n_lower; ++j) map[n_upper + 2 + j] = Carriageway::lower;
    return map;
}

RecordingMeta parse_recording_meta_text(std::string_view text, const std::string& source) {
    const auto table = CsvTable::parse(text, source);
    if (table.row_count() == 0) throw ParseError(source, 0, "", "no data rows in recording metadata");
    RecordingMeta meta;
    meta.recording_id = table.cell(0, table.require_column("id"));
    if (meta.recording_id.empty()) throw ParseError(source, table.line_of(0), "id", "empty recording id");
    meta.frame_rate = table.number(0, table.require_column("frameRate"));
    if (!(meta.frame_rate > 0.0)) throw ParseError(source, table.line_of(0), "frameRate", "frame rate must be positive");
    meta.upper_markings = parse_markings(table, 0, table.require_column("upperLaneMarkings"));
    meta.lower_markings = parse_markings(table, 0, table.require_column("lowerLaneMarkings"));
    if (meta.lower_markings.front() <= meta.upper_markings.back()) {
        throw ParseError(source, table.line_of(0), "lowerLaneMarkings", "lower markings must lie below upper markings");
    }
    meta.drive_direction_map = derive_lane_directions(meta.upper_markings, meta.lower_markings);
    return meta;
}

RecordingMeta parse_recording_meta(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ParseError(path.string(), 0, "", "file does not exist");
    return parse_recording_meta_text(read_file(path), path.string());
}

ParsedTracks parse_tracks_text(std::string_view text, const RecordingMeta& meta, GapPolicy gaps,
                               const std::string& source) {
    (void)meta;
    const auto table = CsvTable::parse(text, source);
    const auto cols = resolve_columns(table);

    ParsedTracks out;
    std::set<int> finished;
    std::vector<TrackPoint> points;
    std::vector<std::size_t> lines;
    int current = 0;
    bool open = false;

    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const auto line = table.line_of(r);
        const int id = static_cast<int>(table.integer(r, cols.id));
        TrackPoint p;
        p.frame = static_cast<int>(table.integer(r, cols.frame));
        p.x = table.number(r, cols.x);
        p.y = table.number(r, cols.y);
        p.width = table.number(r, cols.width);
        p.height = table.number(r, cols.height);
        p.vx = table.number(r, cols.vx);
        p.vy = table.number(r, cols.vy);
        p.ax = table.number(r, cols.ax);
        p.ay = table.number(r, cols.ay);
        p.lane_id = static_cast<int>(table.integer(r, cols.lane));
        for (std::size_t i = 0; i < cols.neighbors.size(); ++i) {
            neighbor_slot(p.neighbors, i) = static_cast<int>(table.integer(r, cols.neighbors[i]));
        }
        if (p.frame < 0) throw ParseError(source, line, "frame", "negative frame index");
        if (!(p.width > 0.0)) throw ParseError(source, line, "width", "width must be positive");
        if (!(p.height > 0.0)) throw ParseError(source, line, "height", "height must be positive");

        if (!open || id != current) {
            if (open) {
                flush_track(points, lines, current, gaps, out);
                finished.insert(current);
            }
            if (finished.contains(id)) {
                throw ParseError(source, line, "id", "rows for track " + std::to_string(id) + " are not contiguous");
            }
            current = id;
            open = true;
        } else if (p.frame <= points.back().frame) {
            throw ParseError(source, line, "frame", "frames not increasing within track " + std::to_string(id));
        }
        points.push_back(p);
        lines.push_back(line);
    }
    if (open) flush_track(points, lines, current, gaps, out);
    return out;
}

ParsedTracks parse_tracks(const std::filesystem::path& path, const RecordingMeta& meta, GapPolicy gaps) {
    if (!std::filesystem::exists(path)) throw ParseError(path.string(), 0, "", "file does not exist");
    return parse_tracks_text(read_file(path), meta, gaps, path.string());
}

std::string write_tracks_csv(const std::vector<Track>& tracks) {
    CsvWriter w;
    w.row({"frame", "id", "x", "y", "width", "height", "xVelocity", "yVelocity", "xAcceleration", "yAcceleration",
           "laneId", "precedingId", "followingId", "leftPrecedingId", "leftFollowingId", "leftAlongsideId",
           "rightPrecedingId", "rightFollowingId", "rightAlongsideId"});
    for (const auto& t : tracks) {
        for (const auto& p : t.points) {
            w.cell(p.frame).cell(t.track_id).cell(p.x).cell(p.y).cell(p.width).cell(p.height);
            w.cell(p.vx).cell(p.vy).cell(p.ax).cell(p.ay).cell(p.lane_id);
            for (std::size_t i = 0; i < kNeighborColumns.size(); ++i) w.cell(neighbor_value(p.neighbors, i));
            w.end_row();
        }
    }
    return w.str();
}

std::string write_recording_meta_csv(const RecordingMeta& meta) {
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ';';
            s += format_double(v[i]);
        }
        return s;
    };
    CsvWriter w;
    w.row({"id", "frameRate", "upperLaneMarkings", "lowerLaneMarkings"});
    w.cell(meta.recording_id).cell(meta.frame_rate).cell(join(meta.upper_markings)).cell(join(meta.lower_markings));
    w.end_row();
    return w.str();
}

RoadGeometry::RoadGeometry(const RecordingMeta& meta) {
    const int n_upper = static_cast<int>(meta.upper_markings.size());
    for (int j = 0; j + 1 < n_upper; ++j) {
        // Upper carriageway: canonical y equals image y.
        LaneBand b{j + 2, Carriageway::upper, meta.upper_markings[static_cast<std::size_t>(j)],
                   meta.upper_markings[static_cast<std::size_t>(j + 1)]};
        bands_.emplace(b.lane_id, b);
    }
    const int n_lower = static_cast<int>(meta.lower_markings.size());
    for (int j = 0; j + 1 < n_lower; ++j) {
        // Lower carriageway: canonical y is negated image y.
        LaneBand b{n_upper + 2 + j, Carriageway::lower, -meta.lower_markings[static_cast<std::size_t>(j + 1)],
                   -meta.lower_markings[static_cast<std::size_t>(j)]};
        bands_.emplace(b.lane_id, b);
    }
}

const LaneBand* RoadGeometry::band(int lane_id) const {
    auto it = bands_.find(lane_id);
    return it == bands_.end() ? nullptr : &it->second;
}

std::optional<double> RoadGeometry::marking_between(int lane_a, int lane_b) const {
    const auto* a = band(lane_a);
    const auto* b = band(lane_b);
    if (!a || !b || a->carriageway != b->carriageway) return std::nullopt;
    if (a->high == b->low) return a->high;
    if (b->high == a->low) return b->high;
    return std::nullopt;
}

std::optional<Carriageway> RoadGeometry::carriageway_of(int lane_id) const {
    if (const auto* b = band(lane_id)) return b->carriageway;
    return std::nullopt;
}

RoadGeometry RoadGeometry::mirrored() const {
    RoadGeometry out;
    for (const auto& [id, b] : bands_) out.bands_.emplace(id, LaneBand{id, b.carriageway, -b.high, -b.low});
    return out;
}

std::optional<Carriageway> track_carriageway(const Track& track, const RecordingMeta& meta) {
    std::optional<Carriageway> found;
    for (const auto& p : track.points) {
        auto it = meta.drive_direction_map.find(p.lane_id);
        if (it == meta.drive_direction_map.end()) return std::nullopt;
        if (found && *found != it->second) return std::nullopt;
        found = it->second;
    }
    return found;
}

Track normalize_direction(const Track& track, const RecordingMeta& meta) {
    if (track.canonical) return track;
    const auto carriageway = track_carriageway(track, meta);
    if (!carriageway) {
        throw DataError("track " + std::to_string(track.track_id) +
                        " spans both carriageways or uses lane ids outside the recording layout");
    }
    Track out = track;
    out.canonical = true;
    out.carriageway = carriageway;
    for (auto& p : out.points) {
        if (*carriageway == Carriageway::lower) {
            // Moving +x: the image corner is already rear-left; flip y so left is positive.
            p.y = -p.y;
            p.vy = -p.vy;
            p.ay = -p.ay;
        } else {
            // Moving -x: the image corner is front-right. Rear is x + length, left edge y + width.
            p.x = -(p.x + p.width);
            p.y = p.y + p.height;
            p.vx = -p.vx;
            p.ax = -p.ax;
        }
    }
    return out;
}

Track mirror_lateral(const Track& track) {
    Track out = track;
    for (auto& p : out.points) {
        p.y = p.height - p.y;
        p.vy = -p.vy;
        p.ay = -p.ay;
        auto& n = p.neighbors;
        std::swap(n.left_preceding, n.right_preceding);
        std::swap(n.left_following, n.right_following);
        std::swap(n.left_alongside, n.right_alongside);
    }
    return out;
}

TrackIndex::TrackIndex(const std::vector<Track>& tracks) {
    for (const auto& t : tracks) by_id_[t.track_id].push_back(&t);
}

const Track* TrackIndex::track_at(int track_id, int frame) const {
    auto it = by_id_.find(track_id);
    if (it == by_id_.end()) return nullptr;
    for (const auto* t : it->second) {
        if (t->at(frame)) return t;
    }
    return nullptr;
}

const TrackPoint* TrackIndex::point_at(int track_id, int frame) const {
    const auto* t = track_at(track_id, frame);
    return t ? t->at(frame) : nullptr;
}

}  // namespace lcpred
