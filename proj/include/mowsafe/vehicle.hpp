#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "mowsafe/errors.hpp"
#include "mowsafe/geometry.hpp"
#include "mowsafe/world.hpp"

namespace mowsafe {

// Numeric values match the mower's internal status codes.
enum class MowerStatus : int { Stopped = 0, Forward = 1, Reverse = 2 };

inline std::string_view to_string(MowerStatus s) {
    switch (s) {
        case MowerStatus::Stopped: return "stopped";
        case MowerStatus::Forward: return "forward";
        case MowerStatus::Reverse: return "reverse";
    }
    return "stopped";
}

struct PatrolLeg {
    std::uint32_t duration_ticks = 1;
    double turn_after_rad = 0.0;
    friend bool operator==(const PatrolLeg&, const PatrolLeg&) = default;
};

/// Timed legs driven in a loop; turns are instantaneous at leg boundaries.
struct PatrolProgram {
    std::vector<PatrolLeg> legs;
    double speed_m_per_tick = 0.1;

    std::uint64_t cycle_ticks() const {
        std::uint64_t n = 0;
        for (const auto& l : legs) n += l.duration_ticks;
        return n;
    }

    friend bool operator==(const PatrolProgram&, const PatrolProgram&) = default;
};

struct VehicleState {
    Pose pose;
    MowerStatus status = MowerStatus::Forward;
    std::size_t leg_index = 0;
    std::uint32_t leg_elapsed = 0;
    bool halted_manual = false;
    bool shutdown = false;
    bool blade_on = true;
    // Heading change applied at the start of the next Forward tick (set when
    // the patrol is replanned while stopped).
    double pending_turn_rad = 0.0;

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

enum class VehicleEvent {
    WarmDetected,
    WarmCleared,
    ClassifiedHedgehog,
    ClassifiedFamily,
    ClassifiedSnake,
    ClassifiedWounded,
    ClassifiedOther,
    ManualRestart
};

inline std::string_view to_string(VehicleEvent e) {
    switch (e) {
        case VehicleEvent::WarmDetected: return "WarmDetected";
        case VehicleEvent::WarmCleared: return "WarmCleared";
        case VehicleEvent::ClassifiedHedgehog: return "ClassifiedHedgehog";
        case VehicleEvent::ClassifiedFamily: return "ClassifiedFamily";
        case VehicleEvent::ClassifiedSnake: return "ClassifiedSnake";
        case VehicleEvent::ClassifiedWounded: return "ClassifiedWounded";
        case VehicleEvent::ClassifiedOther: return "ClassifiedOther";
        case VehicleEvent::ManualRestart: return "ManualRestart";
    }
    return "ClassifiedOther";
}

inline VehicleState initial_vehicle(const Pose& start) {
    VehicleState v;
    v.pose = start;
    return v;
}

inline PatrolProgram rectangle_program(std::uint32_t along_ticks, std::uint32_t across_ticks, double speed) {
    const double turn = std::numbers::pi / 2.0;
    return {{{along_ticks, turn}, {across_ticks, turn}, {along_ticks, turn}, {across_ticks, turn}}, speed};
}

inline std::vector<Vec2> program_corners(const PatrolProgram& program, const Pose& start) {
    std::vector<Vec2> corners{start.position()};
    Vec2 p = start.position();
    double h = start.heading;
    for (const auto& leg : program.legs) {
        p = p + (program.speed_m_per_tick * leg.duration_ticks) * Vec2{std::cos(h), std::sin(h)};
        corners.push_back(p);
        h = normalize_angle(h + leg.turn_after_rad);
    }
    return corners;
}

/// Rectangular loop of four legs with 90 degree left turns, starting along the
/// start heading. Legs along the heading last `leg_ticks`; the cross legs are
/// scaled by the lawn's aspect ratio. Throws ValidationError when the loop
/// does not fit inside the lawn.
inline PatrolProgram plan_patrol(const Rect& lawn, const Pose& start, double speed, std::uint32_t leg_ticks) {
    if (!(speed > 0.0)) throw ValidationError("mower.speed_m_per_tick", "must be > 0");
    if (leg_ticks == 0) throw ValidationError("mower.leg_ticks", "must be > 0");
    const Vec2 u{std::cos(start.heading), std::sin(start.heading)};
    const double along = std::abs(u.x) * lawn.width() + std::abs(u.y) * lawn.height();
    const double across = std::abs(u.y) * lawn.width() + std::abs(u.x) * lawn.height();
    const auto across_ticks =
        std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(leg_ticks * across / along + 1e-9)));
    PatrolProgram program = rectangle_program(leg_ticks, across_ticks, speed);
    constexpr double eps = 1e-9;
    for (const Vec2& c : program_corners(program, start)) {
        if (!lawn.inflated(eps).contains(c))
            throw ValidationError("mower.leg_ticks", "patrol leg of " + std::to_string(speed * leg_ticks) +
                                                         " m does not fit inside the lawn from the start pose");
    }
    return program;
}

inline VehicleState transition(VehicleState s, VehicleEvent e) {
    const bool latched = s.halted_manual || s.shutdown;
    switch (e) {
        case VehicleEvent::WarmDetected:
            if (s.status == MowerStatus::Forward) s.status = MowerStatus::Stopped;
            break;
        case VehicleEvent::WarmCleared:
            if (s.status == MowerStatus::Stopped && !latched) {
                s.status = MowerStatus::Forward;
                s.blade_on = true;
            }
            break;
        case VehicleEvent::ClassifiedHedgehog:
        case VehicleEvent::ClassifiedWounded:
            if (s.status == MowerStatus::Stopped) s.halted_manual = true;
            break;
        case VehicleEvent::ClassifiedSnake:
            if (s.status == MowerStatus::Stopped) {
                s.shutdown = true;
                s.blade_on = false;
            }
            break;
        case VehicleEvent::ClassifiedFamily:
        case VehicleEvent::ClassifiedOther:
            break;
        case VehicleEvent::ManualRestart:
            if (latched) {
                s.halted_manual = false;
                s.shutdown = false;
                s.status = MowerStatus::Stopped;
            }
            break;
    }
    return s;
}

inline VehicleState manual_restart(const VehicleState& s) { return transition(s, VehicleEvent::ManualRestart); }

inline VehicleState drive_tick(VehicleState s, const PatrolProgram& program) {
    if (s.status != MowerStatus::Forward || program.legs.empty()) return s;
    if (s.pending_turn_rad != 0.0) {
        s.pose.heading = normalize_angle(s.pose.heading + s.pending_turn_rad);
        s.pending_turn_rad = 0.0;
    }
    s.pose.x += program.speed_m_per_tick * std::cos(s.pose.heading);
    s.pose.y += program.speed_m_per_tick * std::sin(s.pose.heading);
    const auto& leg = program.legs[s.leg_index % program.legs.size()];
    if (++s.leg_elapsed >= leg.duration_ticks) {
        s.pose.heading = normalize_angle(s.pose.heading + leg.turn_after_rad);
        s.leg_index = (s.leg_index + 1) % program.legs.size();
        s.leg_elapsed = 0;
    }
    return s;
}

// Same as above, additionally marking the swept cells when the blade is on.
inline VehicleState drive_tick(const VehicleState& s, const PatrolProgram& program, CoverageGrid& coverage) {
    VehicleState next = drive_tick(s, program);
    if (next.blade_on && next.pose.position() != s.pose.position()) coverage.mark_segment(s.pose.position(), next.pose.position());
    return next;
}

}  // namespace mowsafe
