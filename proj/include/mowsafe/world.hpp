#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mowsafe/errors.hpp"
#include "mowsafe/frame.hpp"
#include "mowsafe/geometry.hpp"

namespace mowsafe {

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

enum class EntityKind { hedgehog, hedgehog_family, snake, wounded_animal, bonfire, garden_light, generic_warm };

inline constexpr std::array<EntityKind, 7> kAllEntityKinds = {
    EntityKind::hedgehog,     EntityKind::hedgehog_family, EntityKind::snake,       EntityKind::wounded_animal,
    EntityKind::bonfire,      EntityKind::garden_light,    EntityKind::generic_warm};

inline std::string_view to_string(EntityKind k) {
    switch (k) {
        case EntityKind::hedgehog: return "hedgehog";
        case EntityKind::hedgehog_family: return "hedgehog_family";
        case EntityKind::snake: return "snake";
        case EntityKind::wounded_animal: return "wounded_animal";
        case EntityKind::bonfire: return "bonfire";
        case EntityKind::garden_light: return "garden_light";
        case EntityKind::generic_warm: return "generic_warm";
    }
    return "generic_warm";
}

inline std::optional<EntityKind> entity_kind_from_string(std::string_view s) {
    for (auto k : kAllEntityKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

inline bool is_animal(EntityKind k) {
    return k == EntityKind::hedgehog || k == EntityKind::hedgehog_family || k == EntityKind::snake ||
           k == EntityKind::wounded_animal;
}

struct EntityDefaults {
    double radius_m;
    double height_m;
    double surface_temp_c;
    std::optional<double> winter_temp_c;
};

// Hedgehogs sit at 34 C in summer and autumn; 8 C is the hibernation figure
// used when a scenario runs in winter.
inline EntityDefaults entity_defaults(EntityKind k) {
    switch (k) {
        case EntityKind::hedgehog: return {0.10, 0.12, 34.0, 8.0};
        case EntityKind::hedgehog_family: return {0.30, 0.12, 34.0, 8.0};
        case EntityKind::snake: return {0.05, 0.03, 28.0, std::nullopt};
        case EntityKind::wounded_animal: return {0.12, 0.10, 33.0, std::nullopt};
        case EntityKind::bonfire: return {0.50, 1.00, 400.0, std::nullopt};
        case EntityKind::garden_light: return {0.05, 0.50, 45.0, std::nullopt};
        case EntityKind::generic_warm: return {0.15, 0.20, 37.0, std::nullopt};
    }
    return {0.1, 0.1, 30.0, std::nullopt};
}

struct Waypoint {
    Vec2 position;
    std::uint64_t arrival_tick = 0;
    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct Stationary {
    friend bool operator==(const Stationary&, const Stationary&) = default;
};

struct WaypointMotion {
    std::vector<Waypoint> waypoints;
    friend bool operator==(const WaypointMotion&, const WaypointMotion&) = default;
};

// Present at position_m while the time-of-day slot is within [start_slot, end_slot].
struct AppearanceWindow {
    std::string zone;
    int start_slot = 0;
    int end_slot = 0;
    bool daily = true;
    friend bool operator==(const AppearanceWindow&, const AppearanceWindow&) = default;
};

using Motion = std::variant<Stationary, WaypointMotion, AppearanceWindow>;

/// A warm body on the lawn, modelled as an upright cylinder of uniform surface temperature.
struct Entity {
    std::string id;
    EntityKind kind = EntityKind::generic_warm;
    Vec2 position_m;
    double radius_m = 0.1;
    double height_m = 0.1;
    double surface_temp_c = 30.0;
    std::optional<double> winter_temp_c;
    Motion motion = Stationary{};

    friend bool operator==(const Entity&, const Entity&) = default;
};

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Defaults follow the 55x35 degree variant of the 32x24 thermopile array.
struct CameraModel {
    double mount_height_m = 0.5;
    double pitch_rad = std::numbers::pi / 4.0;
    double hfov_rad = deg_to_rad(55.0);
    double vfov_rad = deg_to_rad(35.0);

    friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct DeadPixel {
    Pixel pixel;
    double value_c = 0.0;
    friend bool operator==(const DeadPixel&, const DeadPixel&) = default;
};

struct SensorModel {
    std::vector<DeadPixel> dead_pixels;
    double noise_sigma_c = 0.5;
    bool noise_enabled = false;
    friend bool operator==(const SensorModel&, const SensorModel&) = default;
};

struct Zone {
    std::string id;
    Rect area;
    friend bool operator==(const Zone&, const Zone&) = default;
};

// Maps simulation ticks onto time-of-day slots.
struct DayClock {
    int slots_per_day = 24;
    double slot_seconds = 3600.0;
    int start_slot = 0;
    std::vector<int> night_slots;
    friend bool operator==(const DayClock&, const DayClock&) = default;
};

enum class Season { summer, winter };

struct Scenario {
    double lawn_width_m = 10.0;
    double lawn_height_m = 10.0;
    double cell_size_m = 0.25;
    double ambient_c = 20.0;
    Season season = Season::summer;
    std::vector<Entity> entities;
    CameraModel camera;
    SensorModel sensor;
    Pose mower_start{1.0, 1.0, 0.0};
    double tick_seconds = 1.0;
    std::uint64_t seed = 0;
    DayClock clock;
    std::vector<Zone> zones;

    Rect lawn() const { return {{0.0, 0.0}, {lawn_width_m, lawn_height_m}}; }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline double effective_temperature(const Entity& e, Season season) {
    if (season == Season::winter && e.winter_temp_c) return *e.winter_temp_c;
    return e.surface_temp_c;
}

// ---------------------------------------------------------------------------
// Time of day
// ---------------------------------------------------------------------------

inline std::uint64_t elapsed_slots(const Scenario& s, std::uint64_t tick) {
    const double t = static_cast<double>(tick) * s.tick_seconds / s.clock.slot_seconds;
    return static_cast<std::uint64_t>(std::floor(t + 1e-9)) + static_cast<std::uint64_t>(s.clock.start_slot);
}

inline int slot_of_tick(const Scenario& s, std::uint64_t tick) {
    return static_cast<int>(elapsed_slots(s, tick) % static_cast<std::uint64_t>(s.clock.slots_per_day));
}

inline std::uint64_t day_of_tick(const Scenario& s, std::uint64_t tick) {
    return elapsed_slots(s, tick) / static_cast<std::uint64_t>(s.clock.slots_per_day);
}

inline bool is_night_slot(const Scenario& s, int slot) {
    for (int n : s.clock.night_slots) {
        if (n == slot) return true;
    }
    return false;
}

inline bool window_covers(const AppearanceWindow& w, int slot, std::uint64_t day) {
    if (!w.daily && day != 0) return false;
    return slot >= w.start_slot && slot <= w.end_slot;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline void validate_camera(const CameraModel& c, const std::string& path = "camera") {
    if (!(c.mount_height_m > 0.0)) throw ValidationError(path + ".mount_height_m", "must be > 0");
    if (!(c.pitch_rad >= 0.0 && c.pitch_rad < std::numbers::pi / 2.0))
        throw ValidationError(path + ".pitch_rad", "must be in [0, pi/2)");
    if (!(c.hfov_rad > 0.0 && c.hfov_rad < std::numbers::pi)) throw ValidationError(path + ".hfov_rad", "must be in (0, pi)");
    if (!(c.vfov_rad > 0.0 && c.vfov_rad < std::numbers::pi)) throw ValidationError(path + ".vfov_rad", "must be in (0, pi)");
}

inline void validate_scenario(const Scenario& s) {
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be a positive number, got " + std::to_string(v));
    };
    positive(s.lawn_width_m, "lawn.width_m");
    positive(s.lawn_height_m, "lawn.height_m");
    positive(s.cell_size_m, "lawn.cell_size_m");
    positive(s.tick_seconds, "tick_seconds");
    if (!std::isfinite(s.ambient_c)) throw ValidationError("ambient_c", "must be finite");
    for (double extent : {s.lawn_width_m, s.lawn_height_m}) {
        const double cells = extent / s.cell_size_m;
        if (std::abs(cells - std::round(cells)) > 1e-6 * std::max(1.0, cells))
            throw ValidationError("lawn.cell_size_m", "must divide the lawn extents");
    }
    validate_camera(s.camera);
    positive(s.clock.slot_seconds, "clock.slot_seconds");
    if (s.clock.slots_per_day < 1) throw ValidationError("clock.slots_per_day", "must be >= 1");
    if (s.clock.start_slot < 0 || s.clock.start_slot >= s.clock.slots_per_day)
        throw ValidationError("clock.start_slot", "must be within [0, slots_per_day)");
    if (!(s.sensor.noise_sigma_c >= 0.0)) throw ValidationError("sensor.noise_sigma_c", "must be >= 0");
    for (std::size_t i = 0; i < s.sensor.dead_pixels.size(); ++i) {
        if (!s.sensor.dead_pixels[i].pixel.in_bounds())
            throw ValidationError("sensor.dead_pixels[" + std::to_string(i) + "]", "pixel out of range");
    }

    const Rect lawn = s.lawn();
    if (!lawn.contains(s.mower_start.position())) throw ValidationError("mower.start", "outside the lawn");
    for (std::size_t i = 0; i < s.zones.size(); ++i) {
        const auto& z = s.zones[i];
        if (!(z.area.width() > 0.0 && z.area.height() > 0.0))
            throw ValidationError("zones[" + std::to_string(i) + "]", "zone must have positive extent");
    }
    for (std::size_t i = 0; i < s.entities.size(); ++i) {
        const auto& e = s.entities[i];
        const std::string path = "entities[" + std::to_string(i) + "]";
        if (!(e.radius_m > 0.0)) throw ValidationError(path + ".radius_m", "must be > 0");
        if (!(e.height_m > 0.0)) throw ValidationError(path + ".height_m", "must be > 0");
        if (!lawn.contains(e.position_m)) throw ValidationError(path + ".position_m", "outside the lawn");
        if (const auto* wp = std::get_if<WaypointMotion>(&e.motion)) {
            if (wp->waypoints.empty()) throw ValidationError(path + ".motion.waypoints", "must not be empty");
            for (std::size_t k = 0; k < wp->waypoints.size(); ++k) {
                if (!lawn.contains(wp->waypoints[k].position))
                    throw ValidationError(path + ".motion.waypoints[" + std::to_string(k) + "]", "outside the lawn");
                if (k > 0 && wp->waypoints[k].arrival_tick <= wp->waypoints[k - 1].arrival_tick)
                    throw ValidationError(path + ".motion.waypoints[" + std::to_string(k) + "]",
                                          "arrival ticks must be strictly increasing");
            }
        }
        if (const auto* w = std::get_if<AppearanceWindow>(&e.motion)) {
            if (!(w->start_slot < w->end_slot)) throw ValidationError(path + ".motion", "start_slot must be < end_slot");
            if (w->start_slot < 0 || w->end_slot >= s.clock.slots_per_day)
                throw ValidationError(path + ".motion", "window outside [0, slots_per_day)");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (s.entities[j].id == e.id) throw ValidationError(path + ".id", "duplicate entity id '" + e.id + "'");
        }
    }
}

// ---------------------------------------------------------------------------
// World state
// ---------------------------------------------------------------------------

/// Boolean grid over the lawn; a cell is set once the blade has passed over it.
class CoverageGrid {
public:
    CoverageGrid() = default;
    CoverageGrid(double width_m, double height_m, double cell_m)
        : cols_(static_cast<int>(std::lround(width_m / cell_m))),
          rows_(static_cast<int>(std::lround(height_m / cell_m))),
          cell_m_(cell_m),
          cells_(static_cast<std::size_t>(cols_) * rows_, 0) {}

    int cols() const { return cols_; }
    int rows() const { return rows_; }
    double cell_size() const { return cell_m_; }

    std::optional<std::size_t> cell_index(Vec2 p) const {
        const auto cx = static_cast<long>(std::floor(p.x / cell_m_));
        const auto cy = static_cast<long>(std::floor(p.y / cell_m_));
        if (cx < 0 || cy < 0 || cx >= cols_ || cy >= rows_) return std::nullopt;
        return static_cast<std::size_t>(cy) * cols_ + static_cast<std::size_t>(cx);
    }

    void mark(Vec2 p) {
        if (auto i = cell_index(p)) cells_[*i] = 1;
    }

    // Marks every cell the straight segment a->b passes through (sampled at a quarter cell).
    void mark_segment(Vec2 a, Vec2 b) {
        const double len = norm(b - a);
        const int steps = std::max(1, static_cast<int>(std::ceil(len / (cell_m_ * 0.25))));
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            mark(a + t * (b - a));
        }
    }

    bool is_mowed(int col, int row) const { return cells_[static_cast<std::size_t>(row) * cols_ + col] != 0; }

    std::size_t mowed_count() const {
        std::size_t n = 0;
        for (auto c : cells_) n += c;
        return n;
    }

    double fraction() const { return cells_.empty() ? 0.0 : static_cast<double>(mowed_count()) / cells_.size(); }

    friend bool operator==(const CoverageGrid&, const CoverageGrid&) = default;

private:
    int cols_ = 0;
    int rows_ = 0;
    double cell_m_ = 1.0;
    std::vector<std::uint8_t> cells_;
};

struct EntityState {
    Vec2 position;
    bool present = true;
    friend bool operator==(const EntityState&, const EntityState&) = default;
};

struct WorldState {
    std::uint64_t tick = 0;
    std::vector<EntityState> entities;
    CoverageGrid coverage;
    friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline EntityState entity_state_at(const Entity& e, const Scenario& s, std::uint64_t tick) {
    return std::visit(
        [&](const auto& m) -> EntityState {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Stationary>) {
                return {e.position_m, true};
            } else if constexpr (std::is_same_v<M, WaypointMotion>) {
                const auto& w = m.waypoints;
                if (tick <= w.front().arrival_tick) return {w.front().position, true};
                for (std::size_t k = 1; k < w.size(); ++k) {
                    if (tick <= w[k].arrival_tick) {
                        const double span = static_cast<double>(w[k].arrival_tick - w[k - 1].arrival_tick);
                        const double t = static_cast<double>(tick - w[k - 1].arrival_tick) / span;
                        return {w[k - 1].position + t * (w[k].position - w[k - 1].position), true};
                    }
                }
                return {w.back().position, true};
            } else {
                return {e.position_m, window_covers(m, slot_of_tick(s, tick), day_of_tick(s, tick))};
            }
        },
        e.motion);
}

/// Fresh world at tick 0. Throws ValidationError for an invalid scenario.
inline WorldState build_world(const Scenario& scenario) {
    validate_scenario(scenario);
    WorldState w;
    w.tick = 0;
    w.coverage = CoverageGrid(scenario.lawn_width_m, scenario.lawn_height_m, scenario.cell_size_m);
    w.entities.reserve(scenario.entities.size());
    for (const auto& e : scenario.entities) w.entities.push_back(entity_state_at(e, scenario, 0));
    return w;
}

inline WorldState step_entities(WorldState world, const Scenario& scenario) {
    ++world.tick;
    for (std::size_t i = 0; i < scenario.entities.size(); ++i)
        world.entities[i] = entity_state_at(scenario.entities[i], scenario, world.tick);
    return world;
}

// ---------------------------------------------------------------------------
// Camera geometry
// ---------------------------------------------------------------------------

// Angles of one viewing ray: depression below the horizontal (positive looks
// down) and azimuth relative to the mower heading (positive looks right).
struct RayAngles {
    double depression = 0.0;
    double azimuth = 0.0;
};

// Continuous pixel coordinates; integer values are pixel centres, so the
// optical axis sits at (11.5, 15.5).
struct PixelPoint {
    double row = 0.0;
    double col = 0.0;
};

inline constexpr PixelPoint kOpticalAxis{(kFrameRows - 1) / 2.0, (kFrameCols - 1) / 2.0};

inline RayAngles pixel_ray(const CameraModel& cam, PixelPoint p) {
    const double v = ((p.row + 0.5) / kFrameRows - 0.5) * cam.vfov_rad;
    const double h = ((p.col + 0.5) / kFrameCols - 0.5) * cam.hfov_rad;
    return {cam.pitch_rad + v, h};
}

inline RayAngles pixel_ray(const CameraModel& cam, Pixel p) {
    return pixel_ray(cam, PixelPoint{static_cast<double>(p.row), static_cast<double>(p.col)});
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length

    Vec3 at(double t) const { return {origin.x + t * dir.x, origin.y + t * dir.y, origin.z + t * dir.z}; }
};

inline Ray camera_ray(const CameraModel& cam, const Pose& pose, RayAngles a) {
    const double psi = pose.heading - a.azimuth;
    const double c = std::cos(a.depression);
    return {{pose.x, pose.y, cam.mount_height_m}, {c * std::cos(psi), c * std::sin(psi), -std::sin(a.depression)}};
}

inline std::optional<Vec2> project_ray_to_ground(const CameraModel& cam, RayAngles a, const Pose& pose) {
    if (!(a.depression > 0.0)) return std::nullopt;
    const Ray ray = camera_ray(cam, pose, a);
    const double t = cam.mount_height_m / std::sin(a.depression);
    const Vec3 hit = ray.at(t);
    return Vec2{hit.x, hit.y};
}

/// Where the ray through `pixel` meets the ground, or nothing if it points at
/// or above the horizon (the horizontal mount cannot range such rays).
inline std::optional<Vec2> project_pixel_to_ground(const CameraModel& cam, PixelPoint pixel, const Pose& pose) {
    return project_ray_to_ground(cam, pixel_ray(cam, pixel), pose);
}

inline std::optional<Vec2> project_pixel_to_ground(const CameraModel& cam, Pixel pixel, const Pose& pose) {
    if (!pixel.in_bounds()) throw ContractViolation("pixel outside the 32x24 frame");
    return project_ray_to_ground(cam, pixel_ray(cam, pixel), pose);
}

// Nearest positive ray parameter at which `ray` meets the closed upright
// cylinder (side wall plus top cap) standing on the ground at `centre`.
inline std::optional<double> intersect_cylinder(const Ray& ray, Vec2 centre, double radius, double height) {
    std::optional<double> best;
    auto consider = [&](double t) {
        if (t > 1e-12 && (!best || t < *best)) best = t;
    };

    const double ox = ray.origin.x - centre.x;
    const double oy = ray.origin.y - centre.y;
    const double a = ray.dir.x * ray.dir.x + ray.dir.y * ray.dir.y;
    if (a > 0.0) {
        const double b = 2.0 * (ox * ray.dir.x + oy * ray.dir.y);
        const double c = ox * ox + oy * oy - radius * radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                const double z = ray.origin.z + t * ray.dir.z;
                if (z >= 0.0 && z <= height) consider(t);
            }
        }
    }
    if (ray.dir.z != 0.0) {
        const double t = (height - ray.origin.z) / ray.dir.z;
        const double px = ox + t * ray.dir.x;
        const double py = oy + t * ray.dir.y;
        if (px * px + py * py <= radius * radius) consider(t);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Ground-truth render: what each pixel ray hits before any sensor defects.
struct RenderResult {
    ThermalFrame frame;
    std::array<int, kFramePixels> entity{};                 // index into scenario.entities, or -1
    std::array<std::optional<Vec2>, kFramePixels> ground{};  // xy of the hit point (entity or ground)
};

inline RenderResult render_scene(const WorldState& world, const Scenario& scenario, const Pose& pose) {
    RenderResult out;
    out.frame = ThermalFrame(scenario.ambient_c);
    out.entity.fill(-1);
    for (int r = 0; r < kFrameRows; ++r) {
        for (int c = 0; c < kFrameCols; ++c) {
            const Pixel px{r, c};
            const RayAngles angles = pixel_ray(scenario.camera, px);
            const Ray ray = camera_ray(scenario.camera, pose, angles);
            double nearest = std::numeric_limits<double>::infinity();
            int hit = -1;
            for (std::size_t i = 0; i < scenario.entities.size(); ++i) {
                if (!world.entities[i].present) continue;
                const auto& e = scenario.entities[i];
                if (auto t = intersect_cylinder(ray, world.entities[i].position, e.radius_m, e.height_m)) {
                    if (*t < nearest) {
                        nearest = *t;
                        hit = static_cast<int>(i);
                    }
                }
            }
            if (hit >= 0) {
                out.frame[px] = effective_temperature(scenario.entities[hit], scenario.season);
                out.entity[px.index()] = hit;
                const Vec3 p = ray.at(nearest);
                out.ground[px.index()] = Vec2{p.x, p.y};
            } else {
                out.ground[px.index()] = project_ray_to_ground(scenario.camera, angles, pose);
            }
        }
    }
    return out;
}

inline ThermalFrame apply_sensor(ThermalFrame frame, std::span<const DeadPixel> dead_pixels, const SensorModel& sensor,
                                 std::mt19937_64& rng) {
    for (const auto& d : dead_pixels) frame[d.pixel] = d.value_c;
    if (sensor.noise_enabled && sensor.noise_sigma_c > 0.0) {
        std::normal_distribution<double> noise(0.0, sensor.noise_sigma_c);
        for (double& v : frame.values()) v += noise(rng);
    }
    return frame;
}

/// Samples the 32x24 thermal image seen from `mower_pose`: nearest entity
/// temperature per pixel ray (ambient otherwise), then stuck pixels, then noise.
inline ThermalFrame sample_thermal(const WorldState& world, const Scenario& scenario, const Pose& mower_pose,
                                   std::span<const DeadPixel> dead_pixels, std::mt19937_64& rng) {
    if (!scenario.lawn().contains(mower_pose.position())) throw ContractViolation("mower pose outside the lawn");
    return apply_sensor(render_scene(world, scenario, mower_pose).frame, dead_pixels, scenario.sensor, rng);
}

// ---------------------------------------------------------------------------
// Extent estimation
// ---------------------------------------------------------------------------

struct Extent {
    Rect footprint;
    double nearest_distance_m = 0.0;
};

/// Ground footprint and range of a flagged pixel set. Absent when any flagged
/// ray fails to meet the ground, which is the horizontal-mount case.
inline std::optional<Extent> estimate_extent(std::span<const Pixel> flagged, const CameraModel& cam, const Pose& pose) {
    if (flagged.empty()) throw ContractViolation("estimate_extent needs a non-empty pixel set");
    std::optional<Extent> out;
    for (const Pixel& p : flagged) {
        const auto g = project_pixel_to_ground(cam, p, pose);
        if (!g) return std::nullopt;
        const double d = norm(*g - pose.position());
        if (!out) {
            out = Extent{{*g, *g}, d};
        } else {
            out->footprint.min = {std::min(out->footprint.min.x, g->x), std::min(out->footprint.min.y, g->y)};
            out->footprint.max = {std::max(out->footprint.max.x, g->x), std::max(out->footprint.max.y, g->y)};
            out->nearest_distance_m = std::min(out->nearest_distance_m, d);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Field of view bookkeeping
// ---------------------------------------------------------------------------

inline bool in_field_of_view(const CameraModel& cam, const Pose& pose, Vec3 p) {
    const double rx = p.x - pose.x;
    const double ry = p.y - pose.y;
    const double rho = std::hypot(rx, ry);
    if (rho == 0.0) return false;
    const double depression = std::atan2(cam.mount_height_m - p.z, rho);
    const double azimuth = normalize_angle(pose.heading - std::atan2(ry, rx));
    return std::abs(azimuth) <= cam.hfov_rad / 2.0 && std::abs(depression - cam.pitch_rad) <= cam.vfov_rad / 2.0;
}

// Fraction of nine probe points on the entity (top centre and eight rim points
// at half height) that lie inside the camera frustum.
inline double fraction_in_view(const CameraModel& cam, const Pose& pose, Vec2 centre, double radius, double height) {
    int inside = in_field_of_view(cam, pose, {centre.x, centre.y, height}) ? 1 : 0;
    for (int k = 0; k < 8; ++k) {
        const double a = k * std::numbers::pi / 4.0;
        inside += in_field_of_view(cam, pose, {centre.x + radius * std::cos(a), centre.y + radius * std::sin(a), height / 2.0});
    }
    return inside / 9.0;
}

}  // namespace mowsafe
