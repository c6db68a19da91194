#pragma once

#include <cmath>
#include <numbers>

#include "lcpred/synth.hpp"

namespace fixtures {

using namespace lcpred;

// Lower carriageway lanes 6 (left), 7 (middle), 8 (right); markings in image y.
inline ScenarioSpec road(double duration = 20.0) {
    ScenarioSpec s;
    s.duration = duration;
    s.upper_markings = default_upper_markings();
    s.lower_markings = default_lower_markings();
    return s;
}

inline VehicleScript vehicle(int id, int lane, double x0, double v = 28.0) {
    VehicleScript v_;
    v_.id = id;
    v_.lane = lane;
    v_.x0 = x0;
    v_.speed.v0 = v;
    return v_;
}

// SV in lane 7 changing towards `side`, with CLV ahead and TLV/TFV in the target lane.
inline ScenarioSpec platoon(Side side, double start, double duration, double length = 20.0) {
    auto s = road(length);
    const int target = side == Side::left ? 6 : 8;
    auto sv = vehicle(1, 7, 100.0);
    sv.changes.push_back({start, duration, side});
    s.vehicles = {sv, vehicle(2, 7, 130.0), vehicle(3, target, 122.0), vehicle(4, target, 75.0)};
    return s;
}

// Time at which an edge starting `gap` metres short of a marking reaches it, for a
// sinusoidal ease over `width` metres: gap / width = (1 - cos(pi tau)) / 2.
inline double crossing_time(double start, double duration, double gap, double width) {
    const double q = gap / width;
    return start + duration * std::acos(1.0 - 2.0 * q) / std::numbers::pi;
}

}  // namespace fixtures
