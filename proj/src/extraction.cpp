#include "lcpred/extraction.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lcpred {

namespace {

constexpr std::array<std::string_view, kDropReasonCount> kDropNames{
    "unknown_lane",         "non_adjacent_lanes", "truncated_start",  "truncated_end",     "inconsistent_lane_id",
    "insufficient_history", "lane_not_constant",  "missing_neighbor", "mixed_carriageway", "track_rejected"};

bool leading_past(const TrackPoint& p, Side side, double marking) {
    return side == Side::left ? p.left_edge() > marking : p.right_edge() < marking;
}

bool trailing_past(const TrackPoint& p, Side side, double marking) {
    return side == Side::left ? p.right_edge() > marking : p.left_edge() < marking;
}

Outcome<ObservationWindow> cut_window(const Track& track, const LaneChangeEvent& event, int begin, int end,
                                      Label label) {
    if (!track.covers(begin, end)) return DropReason::insufficient_history;
    for (int f = begin; f < end; ++f) {
        if (track.at(f)->lane_id != event.source_lane) return DropReason::lane_not_constant;
    }
    return ObservationWindow{track.track_id, label, begin, end, event.direction, event};
}

std::vector<TrackPoint> copy_span(const Track& track, int begin, int end_inclusive) {
    std::vector<TrackPoint> out;
    out.reserve(static_cast<std::size_t>(end_inclusive - begin + 1));
    for (int f = begin; f <= end_inclusive; ++f) out.push_back(*track.at(f));
    return out;
}

}  // namespace

std::string_view to_string(DropReason reason) noexcept { return kDropNames[static_cast<std::size_t>(reason)]; }

DropReason parse_drop_reason(std::string_view text) {
    for (std::size_t i = 0; i < kDropNames.size(); ++i) {
        if (kDropNames[i] == text) return static_cast<DropReason>(i);
    }
    throw DataError("unknown drop reason '" + std::string(text) + "'");
}

std::size_t DropStats::total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : counts) n += c;
    return n;
}

int window_frames(double frame_rate, const ExtractionOptions& options) {
    return static_cast<int>(std::lround(options.window_seconds * frame_rate));
}

std::vector<LaneTransition> detect_lane_transitions(const Track& track, const RoadGeometry& road) {
    std::vector<LaneTransition> out;
    for (std::size_t i = 0; i + 1 < track.points.size(); ++i) {
        const auto& a = track.points[i];
        const auto& b = track.points[i + 1];
        if (a.lane_id == b.lane_id) continue;
        LaneTransition t{a.frame, Side::left, a.lane_id, b.lane_id};
        const auto* from = road.band(a.lane_id);
        const auto* to = road.band(b.lane_id);
        if (from && to) {
            t.direction = to->center() > from->center() ? Side::left : Side::right;
        } else {
            // Unknown layout: fall back to the sign of the lateral step.
            t.direction = b.y >= a.y ? Side::left : Side::right;
        }
        out.push_back(t);
    }
    return out;
}

Outcome<LaneChangeEvent> compute_lc_bounds(const Track& track, const LaneTransition& transition,
                                           const RoadGeometry& road, double frame_rate) {
    if (!road.band(transition.source_lane) || !road.band(transition.target_lane)) return DropReason::unknown_lane;
    const auto marking = road.marking_between(transition.source_lane, transition.target_lane);
    if (!marking) return DropReason::non_adjacent_lanes;

    const auto* at_lc = track.at(transition.frame);
    if (!at_lc || !track.at(transition.frame + 1)) return DropReason::truncated_end;
    const Side side = transition.direction;
    if (trailing_past(*at_lc, side, *marking)) return DropReason::inconsistent_lane_id;

    const auto first = static_cast<std::ptrdiff_t>(track.first_frame());
    std::ptrdiff_t idx = transition.frame - first;
    std::optional<int> t_s;
    for (std::ptrdiff_t i = idx; i >= 0; --i) {
        const auto& p = track.points[static_cast<std::size_t>(i)];
        if (!leading_past(p, side, *marking)) {
            t_s = p.frame;
            break;
        }
    }
    if (!t_s) return DropReason::truncated_start;

    std::optional<int> t_e;
    for (auto i = static_cast<std::size_t>(idx + 1); i < track.points.size(); ++i) {
        if (trailing_past(track.points[i], side, *marking)) {
            t_e = track.points[i].frame;
            break;
        }
    }
    if (!t_e) return DropReason::truncated_end;

    LaneChangeEvent e;
    e.track_id = track.track_id;
    e.t_lc = transition.frame;
    e.t_s = *t_s;
    e.t_e = *t_e;
    e.duration = static_cast<double>(*t_e - *t_s) / frame_rate;
    e.direction = side;
    e.source_lane = transition.source_lane;
    e.target_lane = transition.target_lane;
    e.marking = *marking;
    return e;
}

Outcome<ObservationWindow> extract_prep_window(const Track& track, const LaneChangeEvent& event, double frame_rate,
                                               const ExtractionOptions& options) {
    const int n = window_frames(frame_rate, options);
    return cut_window(track, event, event.t_s - n, event.t_s, Label::lane_change);
}

Outcome<ObservationWindow> extract_lk_window(const Track& track, const LaneChangeEvent& event, double frame_rate,
                                             const ExtractionOptions& options) {
    const int n = window_frames(frame_rate, options);
    return cut_window(track, event, event.t_s - 2 * n, event.t_s - n, Label::lane_keep);
}

Outcome<NeighborGroup> resolve_neighbors(const ObservationWindow& window, const Track& subject,
                                         const TrackIndex& tracks) {
    NeighborGroup group;
    group.frames.reserve(static_cast<std::size_t>(window.length()));
    for (int f = window.start_frame; f < window.end_frame; ++f) {
        const auto* sv = subject.at(f);
        if (!sv) return DropReason::insufficient_history;
        const auto& n = sv->neighbors;
        NeighborFrame nf;
        nf.clv_id = n.preceding;
        nf.tlv_id = window.direction == Side::left ? n.left_preceding : n.right_preceding;
        nf.tfv_id = window.direction == Side::left ? n.left_following : n.right_following;
        if (nf.clv_id == 0 || nf.tlv_id == 0 || nf.tfv_id == 0) return DropReason::missing_neighbor;
        const auto* clv = tracks.point_at(nf.clv_id, f);
        const auto* tlv = tracks.point_at(nf.tlv_id, f);
        const auto* tfv = tracks.point_at(nf.tfv_id, f);
        if (!clv || !tlv || !tfv) return DropReason::missing_neighbor;
        nf.clv = *clv;
        nf.tlv = *tlv;
        nf.tfv = *tfv;
        group.frames.push_back(nf);
    }
    return group;
}

namespace {

struct NormalizedRecording {
    std::vector<Track> tracks;
    RoadGeometry road;
};

NormalizedRecording normalize_recording(const Recording& rec, DropStats* drops) {
    NormalizedRecording out;
    out.road = RoadGeometry(rec.meta);
    if (drops) drops->add(DropReason::track_rejected, rec.issues.size());
    std::vector<const Track*> order;
    for (const auto& t : rec.tracks) order.push_back(&t);
    std::sort(order.begin(), order.end(), [](const Track* a, const Track* b) {
        return std::pair(a->track_id, a->segment) < std::pair(b->track_id, b->segment);
    });
    for (const auto* t : order) {
        if (t->points.empty()) continue;
        if (t->canonical) {
            out.tracks.push_back(*t);
            continue;
        }
        bool unknown = std::any_of(t->points.begin(), t->points.end(),
                                   [&](const TrackPoint& p) { return !rec.meta.drive_direction_map.contains(p.lane_id); });
        if (unknown) {
            if (drops) drops->add(DropReason::unknown_lane);
            continue;
        }
        if (!track_carriageway(*t, rec.meta)) {
            if (drops) drops->add(DropReason::mixed_carriageway);
            continue;
        }
        out.tracks.push_back(normalize_direction(*t, rec.meta));
    }
    return out;
}

}  // namespace

std::vector<LaneChangeEvent> extract_events(const Recording& recording, DropStats* drops) {
    const auto norm = normalize_recording(recording, drops);
    std::vector<LaneChangeEvent> events;
    for (const auto& track : norm.tracks) {
        for (const auto& tr : detect_lane_transitions(track, norm.road)) {
            auto outcome = compute_lc_bounds(track, tr, norm.road, recording.meta.frame_rate);
            if (ok(outcome)) {
                events.push_back(std::get<LaneChangeEvent>(outcome));
            } else if (drops) {
                drops->add(std::get<DropReason>(outcome));
            }
        }
    }
    return events;
}

LcDecisionDataset build_lc_decision_dataset(const std::vector<Recording>& recordings,
                                            const ExtractionOptions& options) {
    LcDecisionDataset ds;
    if (!recordings.empty()) ds.frame_rate = recordings.front().meta.frame_rate;

    std::vector<const Recording*> order;
    for (const auto& r : recordings) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(),
                     [](const Recording* a, const Recording* b) { return a->meta.recording_id < b->meta.recording_id; });

    for (const auto* rec : order) {
        if (rec->meta.frame_rate != ds.frame_rate) {
            throw DataError("recording " + rec->meta.recording_id + " has a different frame rate");
        }
        const auto norm = normalize_recording(*rec, &ds.drops);
        const TrackIndex index(norm.tracks);
        const double fps = rec->meta.frame_rate;

        for (const auto& track : norm.tracks) {
            for (const auto& tr : detect_lane_transitions(track, norm.road)) {
                ++ds.events_detected;
                auto bounds = compute_lc_bounds(track, tr, norm.road, fps);
                if (!ok(bounds)) {
                    ds.drops.add(std::get<DropReason>(bounds));
                    continue;
                }
                const auto& event = std::get<LaneChangeEvent>(bounds);
                auto prep = extract_prep_window(track, event, fps, options);
                if (!ok(prep)) {
                    ds.drops.add(std::get<DropReason>(prep));
                    continue;
                }
                auto keep = extract_lk_window(track, event, fps, options);
                if (!ok(keep)) {
                    ds.drops.add(std::get<DropReason>(keep));
                    continue;
                }
                const auto& prep_w = std::get<ObservationWindow>(prep);
                const auto& keep_w = std::get<ObservationWindow>(keep);
                auto prep_n = resolve_neighbors(prep_w, track, index);
                auto keep_n = ok(prep_n) ? resolve_neighbors(keep_w, track, index) : prep_n;
                if (!ok(prep_n) || !ok(keep_n)) {
                    ds.drops.add(ok(prep_n) ? std::get<DropReason>(keep_n) : std::get<DropReason>(prep_n));
                    continue;
                }
                LcPair pair;
                pair.recording_id = rec->meta.recording_id;
                pair.event = event;
                pair.execution = copy_span(track, event.t_s, event.t_e);
                pair.change = {prep_w, copy_span(track, prep_w.start_frame, prep_w.end_frame - 1),
                               std::get<NeighborGroup>(std::move(prep_n))};
                pair.keep = {keep_w, copy_span(track, keep_w.start_frame, keep_w.end_frame - 1),
                             std::get<NeighborGroup>(std::move(keep_n))};
                ds.pairs.push_back(std::move(pair));
            }
        }
    }
    // Tracks are visited in id order, transitions in frame order; sort keeps (recording, track, t_s).
    std::stable_sort(ds.pairs.begin(), ds.pairs.end(), [](const LcPair& a, const LcPair& b) {
        return std::tuple(a.recording_id, a.event.track_id, a.event.t_s) <
               std::tuple(b.recording_id, b.event.track_id, b.event.t_s);
    });
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) ds.pairs[i].pair_id = i;
    return ds;
}

}  // namespace lcpred
