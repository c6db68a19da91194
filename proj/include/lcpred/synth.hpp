#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcpred/clustering.hpp"
#include "lcpred/cnn_lstm.hpp"
#include "lcpred/extraction.hpp"
#include "lcpred/features.hpp"
#include "lcpred/matrix.hpp"

namespace lcpred {

// Scripted vehicles are described in the canonical frame of their carriageway:
// x is the rear bumper along travel, y the left body edge (+y to the driver's left).
struct LaneChangeCommand {
    double start_time = 0.0;  // s, start of the lateral manoeuvre
    double duration = 4.0;    // s, commanded length of the sinusoidal ease
    Side direction = Side::left;
};

struct SpeedProfile {
    double v0 = 30.0;         // m/s
    double amplitude = 0.0;   // m/s, sinusoidal modulation
    double period = 10.0;     // s
    double phase = 0.0;       // rad

    double speed(double t) const;
    double accel(double t) const;
    double distance(double t) const;  // travelled since t = 0
};

struct VehicleScript {
    int id = 0;
    Carriageway carriageway = Carriageway::lower;
    int lane = 0;          // lane id at t = 0 (vehicle centred in it)
    double x0 = 0.0;       // canonical rear-bumper position at t = 0
    double length = 4.5;
    double width = 2.0;
    SpeedProfile speed;
    std::vector<LaneChangeCommand> changes;  // in time order, non-overlapping
    int first_frame = 0;
    int last_frame = -1;  // inclusive; -1 = through the end of the recording
    std::string tag;      // free-form scenario label carried into the ground truth
};

struct ScenarioSpec {
    std::string recording_id = "1";
    double frame_rate = 25.0;
    double duration = 20.0;  // s
    std::vector<double> upper_markings;
    std::vector<double> lower_markings;
    std::vector<VehicleScript> vehicles;
    std::uint64_t seed = 0;
};

struct ScriptedChange {
    int vehicle_id = 0;
    std::string tag;
    Side direction = Side::left;
    int source_lane = 0;
    int target_lane = 0;
    double marking = 0.0;     // canonical lateral position of the crossed marking
    double start_time = 0.0;  // commanded
    double commanded_duration = 0.0;
    double t_lead = 0.0;   // leading body edge reaches the marking (s)
    double t_trail = 0.0;  // trailing body edge reaches the marking (s)
    int expected_t_s = 0;  // last frame with the leading edge not past the marking
    int expected_t_e = 0;  // first frame with the trailing edge past it
    StyleFeatures style;   // continuous-time truth over [t_lead, t_trail]
    bool observed = true;  // both crossings fall inside the vehicle's track
};

struct GroundTruth {
    std::vector<ScriptedChange> changes;
};

struct SyntheticRecording {
    RecordingMeta meta;
    std::vector<Track> tracks;  // HighD image coordinates, as a tracks file would hold
    GroundTruth truth;

    Recording recording() const;
};

// Standard layout: three lanes per carriageway, 3.75 m wide.
std::vector<double> default_upper_markings();
std::vector<double> default_lower_markings();

// Throws ConfigError for a spec that leaves the road, schedules a change outside
// the recording, or makes two vehicles overlap.
SyntheticRecording gen_recording(const ScenarioSpec& spec);

// Writes recording meta and tracks as <dir>/<id>_recordingMeta.csv and <id>_tracks.csv.
void write_recording(const SyntheticRecording& rec, const std::string& dir);

enum class Preset {
    style_blobs,   // clean platoon changes, three duration clusters, mixed sides
    lane_keeping,  // no changes
    truncated,     // tracks that start or end mid-change
    double_change, // two changes in quick succession
    missing_neighbor,  // target-lane follower enters during the windows; one platoon per carriageway
};

std::string_view to_string(Preset p) noexcept;
Preset parse_preset(std::string_view text);

struct CorpusOptions {
    std::vector<Preset> presets = {Preset::style_blobs};
    int recordings_per_preset = 4;
    int platoons_per_recording = 10;
    std::uint64_t seed = 0;
};

// Deterministic battery of recordings. Style-blob platoons rotate through the
// aggressive, cautious and general duration clusters; their tag names the style.
std::vector<SyntheticRecording> corpus(const CorpusOptions& options);

// Commanded ease durations of the three style clusters (s).
double style_blob_duration(DrivingStyle style);

// Sequences of `steps` x 16 features: the lateral-speed column follows a linear
// trend of random sign plus noise; every other column is unit noise. Label 1 for
// an upward trend. Balanced.
SequenceSet trend_sequences(std::size_t n, std::uint64_t seed, std::size_t steps = 50, double noise = 0.5);

// n rows of d unit-normal features; column `informative` is shifted by +/-shift
// according to the label. Balanced.
struct PlantedData {
    FeatureMatrix x;
    std::vector<int> y;
};
PlantedData planted_aggregate(std::size_t n, std::size_t d, std::size_t informative, std::uint64_t seed,
                              double shift = 1.5, double spread = 0.5);

}  // namespace lcpred
