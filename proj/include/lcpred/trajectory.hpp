#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcpred/common.hpp"

namespace lcpred {

// HighD splits the road into two carriageways. In image coordinates the upper one
// travels towards -x and the lower one towards +x.
enum class Carriageway { upper, lower };

std::string_view to_string(Carriageway c) noexcept;

struct RecordingMeta {
    std::string recording_id;
    double frame_rate = 25.0;
    std::vector<double> upper_markings;  // image-y of lane markings, metres
    std::vector<double> lower_markings;
    std::map<int, Carriageway> drive_direction_map;  // lane id -> carriageway

    double frame_interval() const noexcept { return 1.0 / frame_rate; }
};

struct NeighborIds {
    int preceding = 0;
    int following = 0;
    int left_preceding = 0;
    int left_following = 0;
    int left_alongside = 0;
    int right_preceding = 0;
    int right_following = 0;
    int right_alongside = 0;

    friend bool operator==(const NeighborIds&, const NeighborIds&) = default;
};

// One row of a tracks file. Before normalization (x, y) is HighD's bounding-box
// corner in image coordinates; after normalization x is the rear bumper along the
// direction of travel and y the left body edge, with +y towards the driver's left.
struct TrackPoint {
    int frame = 0;
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;   // extent along travel (vehicle length)
    double height = 0.0;  // lateral extent (vehicle width)
    double vx = 0.0;
    double vy = 0.0;
    double ax = 0.0;
    double ay = 0.0;
    int lane_id = 0;
    NeighborIds neighbors;

    double front() const noexcept { return x + width; }
    double left_edge() const noexcept { return y; }
    double right_edge() const noexcept { return y - height; }

    friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct Track {
    int track_id = 0;
    int segment = 0;  // > 0 when a gapped track was split
    std::vector<TrackPoint> points;
    std::optional<Carriageway> carriageway;  // set once normalized
    bool canonical = false;

    int first_frame() const { return points.front().frame; }
    int last_frame() const { return points.back().frame; }
    bool covers(int begin, int end) const {
        return !points.empty() && begin >= first_frame() && end - 1 <= last_frame();
    }
    // Points are gapless, so lookup is O(1).
    const TrackPoint* at(int frame) const {
        if (points.empty() || frame < first_frame() || frame > last_frame()) return nullptr;
        return &points[static_cast<std::size_t>(frame - first_frame())];
    }
};

enum class GapPolicy { reject_track, split_track };

struct TrackIssue {
    int track_id = 0;
    std::size_t line = 0;
    std::string reason;
};

struct ParsedTracks {
    std::vector<Track> tracks;
    std::vector<TrackIssue> issues;  // rows not turned into tracks, with cause
};

RecordingMeta parse_recording_meta(const std::filesystem::path& path);
RecordingMeta parse_recording_meta_text(std::string_view text, const std::string& source = "<memory>");

ParsedTracks parse_tracks(const std::filesystem::path& path, const RecordingMeta& meta,
                          GapPolicy gaps = GapPolicy::reject_track);
ParsedTracks parse_tracks_text(std::string_view text, const RecordingMeta& meta,
                               GapPolicy gaps = GapPolicy::reject_track, const std::string& source = "<memory>");

// Serializes raw (un-normalized) tracks using the HighD column schema.
std::string write_tracks_csv(const std::vector<Track>& tracks);
std::string write_recording_meta_csv(const RecordingMeta& meta);

// Lane id numbering follows HighD: ids count the markings above a lane, over the
// upper list then the lower list, plus one. The band between upper markings 0 and 1
// is lane 2; the median is lane n_upper + 1.
std::map<int, Carriageway> derive_lane_directions(const std::vector<double>& upper, const std::vector<double>& lower);

// Lateral band of one lane in the canonical (driver-left positive) frame.
struct LaneBand {
    int lane_id = 0;
    Carriageway carriageway = Carriageway::lower;
    double low = 0.0;   // right boundary
    double high = 0.0;  // left boundary
    double center() const noexcept { return 0.5 * (low + high); }
};

class RoadGeometry {
public:
    RoadGeometry() = default;
    explicit RoadGeometry(const RecordingMeta& meta);

    const LaneBand* band(int lane_id) const;
    // The marking separating two adjacent lanes, canonical lateral coordinate.
    std::optional<double> marking_between(int lane_a, int lane_b) const;
    std::optional<Carriageway> carriageway_of(int lane_id) const;
    // Laterally reflected copy (y -> -y); lane ids keep their bands under reflection.
    RoadGeometry mirrored() const;

    const std::map<int, LaneBand>& bands() const noexcept { return bands_; }

private:
    std::map<int, LaneBand> bands_;
};

// Carriageway a track drives on, or nullopt when its lanes are unknown or span both.
std::optional<Carriageway> track_carriageway(const Track& track, const RecordingMeta& meta);

// Maps a raw track into the canonical frame (travel along +x, +y to the driver's
// left, x = rear bumper, y = left body edge). Idempotent. Throws DataError if the
// track spans both carriageways or uses unknown lane ids.
Track normalize_direction(const Track& track, const RecordingMeta& meta);

// Reflects a canonical track laterally: velocities/accelerations flip sign, left
// and right neighbour columns swap. Applying it twice restores the track.
Track mirror_lateral(const Track& track);

// id -> track segments, for neighbour lookups across a recording.
class TrackIndex {
public:
    TrackIndex() = default;
    explicit TrackIndex(const std::vector<Track>& tracks);
    const TrackPoint* point_at(int track_id, int frame) const;
    const Track* track_at(int track_id, int frame) const;

private:
    std::unordered_map<int, std::vector<const Track*>> by_id_;
};

}  // namespace lcpred
