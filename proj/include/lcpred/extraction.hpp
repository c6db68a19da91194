#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lcpred/trajectory.hpp"

namespace lcpred {

enum class DropReason {
    unknown_lane,          // lane id absent from the recording layout
    non_adjacent_lanes,    // id switch skips a lane
    truncated_start,       // leading edge already past the marking at the first frame
    truncated_end,         // trailing edge never passes the marking before the track ends
    inconsistent_lane_id,  // lane id switched after the body had fully crossed
    insufficient_history,  // not enough frames before t_s for the windows
    lane_not_constant,     // another lane change inside a window
    missing_neighbor,      // CLV, TLV or TFV absent at some window frame
    mixed_carriageway,     // track lanes span both carriageways
    track_rejected,        // parse-level rejection (frame gap)
};

inline constexpr int kDropReasonCount = 10;

std::string_view to_string(DropReason reason) noexcept;
DropReason parse_drop_reason(std::string_view text);

template <class T>
using Outcome = std::variant<T, DropReason>;

template <class T>
bool ok(const Outcome<T>& o) noexcept {
    return std::holds_alternative<T>(o);
}

struct LaneTransition {
    int frame = 0;  // t_lc: last frame carrying the source lane id
    Side direction = Side::left;
    int source_lane = 0;
    int target_lane = 0;
};

struct LaneChangeEvent {
    int track_id = 0;
    int t_lc = 0;
    int t_s = 0;
    int t_e = 0;
    double duration = 0.0;  // T_LC, seconds
    Side direction = Side::left;
    int source_lane = 0;
    int target_lane = 0;
    double marking = 0.0;  // crossed marking, canonical lateral coordinate

    friend bool operator==(const LaneChangeEvent&, const LaneChangeEvent&) = default;
};

struct ObservationWindow {
    int track_id = 0;
    Label label = Label::lane_keep;
    int start_frame = 0;  // inclusive
    int end_frame = 0;    // exclusive
    Side direction = Side::left;  // side of the target lane
    std::optional<LaneChangeEvent> event;

    int length() const noexcept { return end_frame - start_frame; }
};

struct NeighborFrame {
    TrackPoint clv;
    TrackPoint tlv;
    TrackPoint tfv;
    int clv_id = 0;
    int tlv_id = 0;
    int tfv_id = 0;
};

struct NeighborGroup {
    std::vector<NeighborFrame> frames;  // one per window frame
};

struct ExtractionOptions {
    double window_seconds = 2.0;
};

int window_frames(double frame_rate, const ExtractionOptions& options = {});

// One entry per consecutive-frame lane id change, in frame order. Direction comes
// from the lateral order of the two lane bands.
std::vector<LaneTransition> detect_lane_transitions(const Track& track, const RoadGeometry& road);

// Boundary-crossing bounds of a lane change on a canonical track.
//   t_s = last frame at or before t_lc whose leading body edge has not passed the marking
//   t_e = first frame after t_lc whose trailing body edge has passed it
// With leading/trailing = left/right edge for a left change and mirrored for a right one.
Outcome<LaneChangeEvent> compute_lc_bounds(const Track& track, const LaneTransition& transition,
                                           const RoadGeometry& road, double frame_rate);

Outcome<ObservationWindow> extract_prep_window(const Track& track, const LaneChangeEvent& event,
                                               double frame_rate, const ExtractionOptions& options = {});
Outcome<ObservationWindow> extract_lk_window(const Track& track, const LaneChangeEvent& event, double frame_rate,
                                             const ExtractionOptions& options = {});

// CLV = preceding in own lane; TLV/TFV = preceding/following in the target-side lane.
Outcome<NeighborGroup> resolve_neighbors(const ObservationWindow& window, const Track& subject,
                                         const TrackIndex& tracks);

struct Recording {
    RecordingMeta meta;
    std::vector<Track> tracks;  // raw (as parsed)
    std::vector<TrackIssue> issues;
};

// Everything downstream needs from one window, detached from the recording.
struct LabeledWindow {
    ObservationWindow window;
    std::vector<TrackPoint> subject;  // SV points over the window
    NeighborGroup neighbors;
};

struct LcPair {
    std::size_t pair_id = 0;
    std::string recording_id;
    LaneChangeEvent event;
    std::vector<TrackPoint> execution;  // SV points over [t_s, t_e]
    LabeledWindow change;
    LabeledWindow keep;
};

struct DropStats {
    std::map<DropReason, std::size_t> counts;
    void add(DropReason r, std::size_t n = 1) { counts[r] += n; }
    std::size_t total() const;
};

struct LcDecisionDataset {
    double frame_rate = 25.0;
    std::vector<LcPair> pairs;
    DropStats drops;
    std::size_t events_detected = 0;
};

// Deterministic paired LC/LK collection ordered by (recording, track, t_s).
LcDecisionDataset build_lc_decision_dataset(const std::vector<Recording>& recordings,
                                            const ExtractionOptions& options = {});

// Events with valid bounds for every normalized track of a recording (no window
// or neighbour qualification).
std::vector<LaneChangeEvent> extract_events(const Recording& recording, DropStats* drops = nullptr);

}  // namespace lcpred
