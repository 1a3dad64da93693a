#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mowsafe/classifier.hpp"
#include "mowsafe/errors.hpp"
#include "mowsafe/flag_file.hpp"
#include "mowsafe/thermal.hpp"
#include "mowsafe/vehicle.hpp"
#include "mowsafe/world.hpp"

namespace mowsafe {

// ---------------------------------------------------------------------------
// Configuration bundle
// ---------------------------------------------------------------------------

struct MowerConfig {
    double radius_m = 0.25;
    double speed_m_per_tick = 0.1;
    std::uint32_t leg_ticks = 40;
    double interaction_range_m = 2.0;  // a stop with no animal this close is a false stop

    friend bool operator==(const MowerConfig&, const MowerConfig&) = default;
};

struct PolicyConfig {
    std::optional<std::uint64_t> family_zone_expiry_ticks;  // unset: one day of ticks
    double zone_margin_m = 0.3;

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Everything a scenario file configures.
struct ScenarioBundle {
    Scenario scenario;
    DetectorConfig detector;
    ClassifierSpec classifier;
    MowerConfig mower;
    PolicyConfig policy;

    friend bool operator==(const ScenarioBundle&, const ScenarioBundle&) = default;
};

inline std::uint64_t family_zone_expiry(const ScenarioBundle& b) {
    if (b.policy.family_zone_expiry_ticks) return *b.policy.family_zone_expiry_ticks;
    return static_cast<std::uint64_t>(std::llround(86400.0 / b.scenario.tick_seconds));
}

inline void validate_bundle(const ScenarioBundle& b) {
    validate_scenario(b.scenario);
    validate_detector(b.detector);
    validate_classifier(b.classifier);
    if (!(b.mower.radius_m > 0.0)) throw ValidationError("mower.radius_m", "must be > 0");
    if (!(b.mower.interaction_range_m >= 0.0)) throw ValidationError("mower.interaction_range_m", "must be >= 0");
    if (!(b.policy.zone_margin_m >= 0.0)) throw ValidationError("policy.zone_margin_m", "must be >= 0");
    plan_patrol(b.scenario.lawn(), b.scenario.mower_start, b.mower.speed_m_per_tick, b.mower.leg_ticks);
}

// ---------------------------------------------------------------------------
// Protected zones and replanning
// ---------------------------------------------------------------------------

struct ProtectedZone {
    Rect area;
    std::uint64_t expires_at_tick = 0;
    friend bool operator==(const ProtectedZone&, const ProtectedZone&) = default;
};

class ProtectedZoneRegistry {
public:
    void add(Rect area, std::uint64_t expires_at_tick) { zones_.push_back({area, expires_at_tick}); }

    void prune(std::uint64_t tick) {
        std::erase_if(zones_, [tick](const ProtectedZone& z) { return z.expires_at_tick <= tick; });
    }

    bool contains(Vec2 p) const {
        return std::any_of(zones_.begin(), zones_.end(), [p](const ProtectedZone& z) { return z.area.contains(p); });
    }

    bool intersects(const Rect& r) const {
        return std::any_of(zones_.begin(), zones_.end(), [&r](const ProtectedZone& z) { return z.area.intersects(r); });
    }

    const std::vector<ProtectedZone>& zones() const { return zones_; }
    bool empty() const { return zones_.empty(); }

private:
    std::vector<ProtectedZone> zones_;
};

struct ReplannedPatrol {
    PatrolProgram program;
    double heading = 0.0;
};

// Area each leg sweeps, including the mower body.
inline std::vector<Rect> swept_rects(const PatrolProgram& program, const Pose& start, double body_radius) {
    const auto corners = program_corners(program, start);
    std::vector<Rect> out;
    for (std::size_t i = 0; i + 1 < corners.size(); ++i) out.push_back(bounding_rect(corners[i], corners[i + 1]).inflated(body_radius));
    return out;
}

/// Largest axis-aligned rectangular loop from `from` that stays on the lawn
/// and keeps the mower body clear of every protected zone.
inline std::optional<ReplannedPatrol> replan_patrol(const Rect& lawn, Vec2 from, double speed, double body_radius,
                                                    const ProtectedZoneRegistry& zones) {
    std::optional<ReplannedPatrol> best;
    double best_area = 0.0;
    const std::array<double, 4> headings{0.0, std::numbers::pi / 2.0, std::numbers::pi, -std::numbers::pi / 2.0};
    const std::array<double, 4> scales{1.0, 0.75, 0.5, 0.25};
    for (double h : headings) {
        const Vec2 d{std::round(std::cos(h)), std::round(std::sin(h))};
        const Vec2 left{-d.y, d.x};
        auto reach = [&](Vec2 dir) {
            double r = 0.0;
            if (dir.x > 0) r = lawn.max.x - from.x;
            if (dir.x < 0) r = from.x - lawn.min.x;
            if (dir.y > 0) r = lawn.max.y - from.y;
            if (dir.y < 0) r = from.y - lawn.min.y;
            return r - body_radius;
        };
        const double along_max = reach(d);
        const double across_max = reach(left);
        if (along_max <= 0.0 || across_max <= 0.0) continue;
        for (double sa : scales) {
            for (double sc : scales) {
                const auto along = static_cast<std::uint32_t>(std::floor(along_max * sa / speed));
                const auto across = static_cast<std::uint32_t>(std::floor(across_max * sc / speed));
                if (along == 0 || across == 0) continue;
                const double area = along * across * speed * speed;
                if (area <= best_area) continue;
                PatrolProgram program = rectangle_program(along, across, speed);
                const Pose start{from.x, from.y, h};
                bool clear = true;
                for (const Rect& r : swept_rects(program, start, body_radius)) {
                    if (zones.intersects(r)) {
                        clear = false;
                        break;
                    }
                }
                if (!clear) continue;
                best = ReplannedPatrol{std::move(program), h};
                best_area = area;
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Classification tasks
// ---------------------------------------------------------------------------

enum class TaskState { pending, completed, cancelled };

inline std::string_view to_string(TaskState s) {
    switch (s) {
        case TaskState::pending: return "pending";
        case TaskState::completed: return "completed";
        case TaskState::cancelled: return "cancelled";
    }
    return "pending";
}

struct TaskHandle {
    std::uint64_t task_id = 0;
    std::uint64_t started_tick = 0;
    std::uint64_t ready_tick = 0;
    Snapshot snapshot;
    Pose pose_at_spawn;
    std::vector<Pixel> flagged_at_spawn;
    TaskState state = TaskState::pending;
    std::optional<ClassificationResult> result;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Background classification results, drained by the simulation loop.
class CompletionQueue {
public:
    void push(std::uint64_t task_id, std::optional<ClassificationResult> result) {
        {
            std::lock_guard lock(mutex_);
            done_.push_back({task_id, result});
        }
        cv_.notify_all();
    }

    // Blocks until the result for `task_id` arrives; results of other tasks are dropped.
    std::optional<ClassificationResult> wait_for(std::uint64_t task_id) {
        std::unique_lock lock(mutex_);
        for (;;) {
            while (!done_.empty()) {
                auto [id, result] = done_.front();
                done_.pop_front();
                if (id == task_id) return result;
            }
            cv_.wait(lock, [this] { return !done_.empty(); });
        }
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::pair<std::uint64_t, std::optional<ClassificationResult>>> done_;
};

// ---------------------------------------------------------------------------
// Trace and report
// ---------------------------------------------------------------------------

struct Notification {
    std::uint64_t tick = 0;
    std::string kind;
    Vec2 position;
    friend bool operator==(const Notification&, const Notification&) = default;
};

struct TraceRecord {
    std::uint64_t tick = 0;
    Pose pose;
    MowerStatus status = MowerStatus::Stopped;
    int detection = 0;
    std::size_t flagged_count = 0;
    std::vector<VehicleEvent> events;
    std::optional<TaskState> task_state;
    std::vector<Notification> notifications;

    bool has_event(VehicleEvent e) const { return std::find(events.begin(), events.end(), e) != events.end(); }
};

inline nlohmann::json to_json(const TraceRecord& r) {
    nlohmann::json events = nlohmann::json::array();
    for (auto e : r.events) events.push_back(std::string(to_string(e)));
    nlohmann::json notes = nlohmann::json::array();
    for (const auto& n : r.notifications)
        notes.push_back({{"tick", n.tick}, {"kind", n.kind}, {"x", n.position.x}, {"y", n.position.y}});
    return {{"tick", r.tick},
            {"pose", {{"x", r.pose.x}, {"y", r.pose.y}, {"heading", r.pose.heading}}},
            {"status", static_cast<int>(r.status)},
            {"detection", r.detection},
            {"flagged_count", r.flagged_count},
            {"events", std::move(events)},
            {"task_state", r.task_state ? std::string(to_string(*r.task_state)) : std::string("none")},
            {"notifications", std::move(notes)}};
}

inline std::string trace_line(const TraceRecord& r) { return to_json(r).dump(); }

struct SimReport {
    std::uint64_t ticks_run = 0;
    std::uint64_t encounters = 0;
    std::uint64_t stops = 0;
    std::uint64_t false_stops = 0;
    double coverage_fraction = 0.0;
    MowerStatus final_status = MowerStatus::Forward;
    bool halted_manual = false;
    bool shutdown = false;
    std::uint64_t notifications = 0;
    std::uint64_t trace_hash = 0;  // FNV-1a over every trace line plus '\n'
};

inline nlohmann::json to_json(const SimReport& r) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.trace_hash));
    return {{"ticks_run", r.ticks_run},
            {"encounters", r.encounters},
            {"stops", r.stops},
            {"false_stops", r.false_stops},
            {"coverage_fraction", r.coverage_fraction},
            {"final_status", static_cast<int>(r.final_status)},
            {"halted_manual", r.halted_manual},
            {"shutdown", r.shutdown},
            {"notifications", r.notifications},
            {"trace_hash", std::string(hash)}};
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

enum class TaskMode { virtual_time, real_task };

struct SimOptions {
    std::uint64_t seed = 0;
    TaskMode mode = TaskMode::virtual_time;
    std::optional<std::filesystem::path> flag_file;  // unset: in-memory channel
    std::vector<std::uint64_t> restart_ticks;
    bool keep_trace = true;
    std::function<void(const std::string&)> trace_sink;
};

/// One mower on one lawn, advanced a tick at a time. Stage order per tick:
/// entities, thermal sample, detector, flag write, task lifecycle, vehicle
/// events, drive, trace.
class Simulation {
public:
    Simulation(ScenarioBundle bundle, SimOptions options)
        : bundle_(std::move(bundle)), options_(std::move(options)), queue_(std::make_shared<CompletionQueue>()) {
        validate_bundle(bundle_);
        world_ = build_world(bundle_.scenario);
        vehicle_ = initial_vehicle(bundle_.scenario.mower_start);
        program_ = plan_patrol(bundle_.scenario.lawn(), bundle_.scenario.mower_start, bundle_.mower.speed_m_per_tick,
                               bundle_.mower.leg_ticks);
        noise_rng_.seed(splitmix64(options_.seed));
        restarts_.insert(options_.restart_ticks.begin(), options_.restart_ticks.end());
        report_.trace_hash = kFnvOffset;
        report_.final_status = vehicle_.status;
        flag_bit_ = 0;
        if (options_.flag_file) write_flag_file(*options_.flag_file, 0);
    }

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    ~Simulation() {
        if (worker_.joinable()) {
            worker_.request_stop();
            worker_.join();
        }
    }

    const ScenarioBundle& bundle() const { return bundle_; }
    const WorldState& world() const { return world_; }
    const VehicleState& vehicle() const { return vehicle_; }
    const DetectorState& detector() const { return detector_; }
    const PatrolProgram& program() const { return program_; }
    const ProtectedZoneRegistry& zones() const { return zones_; }
    const std::optional<TaskHandle>& task() const { return task_; }
    const SimReport& report() const { return report_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }
    const ThermalFrame& last_frame() const { return frame_; }
    int flag_bit() const { return flag_bit_; }

    bool has_live_task() const { return task_ && task_->state == TaskState::pending; }

    /// Starts classifying `snapshot`; at most one task may be pending.
    const TaskHandle& spawn_classification(Snapshot snapshot, std::vector<Pixel> flagged = {}) {
        if (has_live_task()) throw ContractViolation("a classification task is already running");
        TaskHandle h;
        h.task_id = ++last_task_id_;
        h.started_tick = world_.tick;
        h.ready_tick = world_.tick + bundle_.classifier.init_latency_ticks;
        h.snapshot = std::move(snapshot);
        h.pose_at_spawn = vehicle_.pose;
        h.flagged_at_spawn = std::move(flagged);
        task_ = std::move(h);
        if (options_.mode == TaskMode::real_task) launch_worker(*task_);
        return *task_;
    }

    /// Cancels the pending task with `task_id`; any other state is a no-op.
    void cancel_classification(std::uint64_t task_id) {
        if (!task_ || task_->task_id != task_id || task_->state != TaskState::pending) return;
        task_->state = TaskState::cancelled;
        if (worker_.joinable()) worker_.request_stop();
    }

    /// Events and side effects for a finished classification.
    std::vector<VehicleEvent> apply_policy(const ClassificationResult& result) {
        switch (result.label) {
            case Label::hedgehog: return {VehicleEvent::ClassifiedHedgehog};
            case Label::snake: return {VehicleEvent::ClassifiedSnake};
            case Label::wounded_animal:
                pending_notes_.push_back({world_.tick, "wounded_animal", estimated_position()});
                return {VehicleEvent::ClassifiedWounded};
            case Label::hedgehog_with_cubs:
                protect_family();
                return {VehicleEvent::ClassifiedFamily};
            case Label::other_warm:
            case Label::none: return {VehicleEvent::ClassifiedOther};
        }
        return {VehicleEvent::ClassifiedOther};
    }

    void tick() {
        // (1) entities
        world_ = step_entities(std::move(world_), bundle_.scenario);
        const std::uint64_t now = world_.tick;
        zones_.prune(now);

        // (2) thermal sample; warm spots inside protected zones are already known and masked out
        const RenderResult scene = render_scene(world_, bundle_.scenario, vehicle_.pose);
        frame_ = apply_sensor(scene.frame, bundle_.scenario.sensor.dead_pixels, bundle_.scenario.sensor, noise_rng_);
        if (!zones_.empty()) {
            for (std::size_t i = 0; i < kFramePixels; ++i) {
                if (scene.ground[i] && zones_.contains(*scene.ground[i])) frame_.values()[i] = bundle_.scenario.ambient_c;
            }
        }

        // (3) detector
        const bool was_detected = detector_.detected;
        DetectorUpdate upd = update_detector(detector_, frame_, bundle_.detector);
        detector_ = upd.state;
        const bool rising = upd.detected && !was_detected;
        const bool falling = !upd.detected && was_detected;

        // (4) flag channel
        flag_bit_ = detection_bit(detector_);
        if (options_.flag_file) write_flag_file(*options_.flag_file, flag_bit_);

        // (5) task lifecycle
        std::vector<VehicleEvent> events;
        bool cleared = false;
        if (rising) {
            events.push_back(VehicleEvent::WarmDetected);
            if (!has_live_task()) spawn_classification(make_snapshot(scene), upd.flagged);
        }
        if (falling && has_live_task()) {
            cancel_classification(task_->task_id);
            events.push_back(VehicleEvent::WarmCleared);
            cleared = true;
        }
        if (has_live_task() && now >= task_->ready_tick) {
            complete_task();
            for (auto e : apply_policy(*task_->result)) events.push_back(e);
        }
        const bool latched = vehicle_.halted_manual || vehicle_.shutdown;
        if (!cleared && !upd.detected && !has_live_task() && vehicle_.status == MowerStatus::Stopped && !latched)
            events.push_back(VehicleEvent::WarmCleared);
        if (restarts_.contains(now)) events.push_back(VehicleEvent::ManualRestart);

        // (6) vehicle events
        for (auto e : events) {
            const bool was_forward = vehicle_.status == MowerStatus::Forward;
            vehicle_ = transition(vehicle_, e);
            if (was_forward && vehicle_.status == MowerStatus::Stopped) {
                ++report_.stops;
                if (!animal_within(bundle_.mower.interaction_range_m)) ++report_.false_stops;
            }
        }
        if (family_needs_halt_) {
            family_needs_halt_ = false;
            if (vehicle_.status == MowerStatus::Stopped) vehicle_.halted_manual = true;
        }

        // (7) drive
        vehicle_ = drive_tick(vehicle_, program_, world_.coverage);
        if (vehicle_.blade_on && animal_within_body()) ++report_.encounters;

        // (8) trace
        TraceRecord rec;
        rec.tick = now;
        rec.pose = vehicle_.pose;
        rec.status = vehicle_.status;
        rec.detection = flag_bit_;
        rec.flagged_count = upd.flagged.size();
        rec.events = std::move(events);
        if (task_) rec.task_state = task_->state;
        rec.notifications = std::move(pending_notes_);
        pending_notes_.clear();
        report_.notifications += rec.notifications.size();

        const std::string line = trace_line(rec);
        report_.trace_hash = fnv1a("\n", fnv1a(line, report_.trace_hash));
        if (options_.trace_sink) options_.trace_sink(line);
        if (options_.keep_trace) trace_.push_back(std::move(rec));

        ++report_.ticks_run;
        report_.coverage_fraction = world_.coverage.fraction();
        report_.final_status = vehicle_.status;
        report_.halted_manual = vehicle_.halted_manual;
        report_.shutdown = vehicle_.shutdown;
    }

private:
    Snapshot make_snapshot(const RenderResult& scene) const {
        Snapshot s;
        s.thermal = frame_;
        s.taken_at_tick = world_.tick;
        s.night = is_night_slot(bundle_.scenario, slot_of_tick(bundle_.scenario, world_.tick));
        std::vector<bool> seen(bundle_.scenario.entities.size(), false);
        for (int idx : scene.entity) {
            if (idx >= 0) seen[static_cast<std::size_t>(idx)] = true;
        }
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (!seen[i]) continue;
            const auto& e = bundle_.scenario.entities[i];
            s.visible_truth.push_back(
                {e.kind, fraction_in_view(bundle_.scenario.camera, vehicle_.pose, world_.entities[i].position, e.radius_m, e.height_m), i});
        }
        return s;
    }

    std::uint64_t task_seed(std::uint64_t task_id) const {
        return splitmix64(options_.seed ^ splitmix64(bundle_.classifier.confusion_seed) ^ splitmix64(task_id + 0x5151));
    }

    void launch_worker(const TaskHandle& h) {
        if (worker_.joinable()) {
            worker_.request_stop();
            worker_.join();
        }
        worker_ = std::jthread([queue = queue_, spec = bundle_.classifier, snapshot = h.snapshot, id = h.task_id,
                                seed = task_seed(h.task_id)](std::stop_token stop) {
            std::mt19937_64 rng(seed);
            queue->push(id, classify(spec, snapshot, rng, stop));
        });
    }

    void complete_task() {
        std::optional<ClassificationResult> r;
        if (options_.mode == TaskMode::real_task) {
            r = queue_->wait_for(task_->task_id);
        } else {
            std::mt19937_64 rng(task_seed(task_->task_id));
            r = classify(bundle_.classifier, task_->snapshot, rng);
        }
        if (!r) throw ContractViolation("classification task produced no result without being cancelled");
        task_->state = TaskState::completed;
        task_->result = r;
    }

    std::optional<Extent> task_extent() const {
        if (!task_ || task_->flagged_at_spawn.empty()) return std::nullopt;
        return estimate_extent(task_->flagged_at_spawn, bundle_.scenario.camera, task_->pose_at_spawn);
    }

    Vec2 estimated_position() const {
        if (auto ext = task_extent()) {
            return {(ext->footprint.min.x + ext->footprint.max.x) / 2.0, (ext->footprint.min.y + ext->footprint.max.y) / 2.0};
        }
        return vehicle_.pose.position();
    }

    void protect_family() {
        Rect area;
        if (auto ext = task_extent()) {
            area = ext->footprint.inflated(bundle_.policy.zone_margin_m);
        } else {
            // Horizontal mount: no range estimate, so fence off a square one metre ahead.
            const Pose& p = vehicle_.pose;
            const Vec2 ahead = p.position() + Vec2{std::cos(p.heading), std::sin(p.heading)};
            const double half = 0.5 + bundle_.policy.zone_margin_m;
            area = Rect{{ahead.x - half, ahead.y - half}, {ahead.x + half, ahead.y + half}};
        }
        zones_.add(area, world_.tick + family_zone_expiry(bundle_));
        auto plan = replan_patrol(bundle_.scenario.lawn(), vehicle_.pose.position(), bundle_.mower.speed_m_per_tick,
                                  bundle_.mower.radius_m, zones_);
        if (!plan) {
            pending_notes_.push_back({world_.tick, "no_safe_patrol", vehicle_.pose.position()});
            family_needs_halt_ = true;
            return;
        }
        program_ = std::move(plan->program);
        vehicle_.leg_index = 0;
        vehicle_.leg_elapsed = 0;
        vehicle_.pending_turn_rad = normalize_angle(plan->heading - vehicle_.pose.heading);
    }

    bool animal_within(double range) const {
        for (std::size_t i = 0; i < world_.entities.size(); ++i) {
            const auto& e = bundle_.scenario.entities[i];
            if (!world_.entities[i].present || !is_animal(e.kind)) continue;
            if (norm(world_.entities[i].position - vehicle_.pose.position()) - e.radius_m <= range) return true;
        }
        return false;
    }

    bool animal_within_body() const {
        for (std::size_t i = 0; i < world_.entities.size(); ++i) {
            const auto& e = bundle_.scenario.entities[i];
            if (!world_.entities[i].present || !is_animal(e.kind)) continue;
            if (norm(world_.entities[i].position - vehicle_.pose.position()) < e.radius_m + bundle_.mower.radius_m) return true;
        }
        return false;
    }

    ScenarioBundle bundle_;
    SimOptions options_;
    WorldState world_;
    VehicleState vehicle_;
    PatrolProgram program_;
    DetectorState detector_;
    ThermalFrame frame_;
    ProtectedZoneRegistry zones_;
    std::optional<TaskHandle> task_;
    std::uint64_t last_task_id_ = 0;
    std::set<std::uint64_t> restarts_;
    std::vector<Notification> pending_notes_;
    bool family_needs_halt_ = false;
    std::mt19937_64 noise_rng_;
    int flag_bit_ = 0;
    SimReport report_;
    std::vector<TraceRecord> trace_;
    std::shared_ptr<CompletionQueue> queue_;
    std::jthread worker_;
};

struct RunResult {
    SimReport report;
    std::vector<TraceRecord> trace;
};

/// Builds the world and runs exactly `ticks` ticks.
inline RunResult run(const ScenarioBundle& bundle, std::uint64_t ticks, std::uint64_t seed, SimOptions options = {}) {
    options.seed = seed;
    Simulation sim(bundle, std::move(options));
    for (std::uint64_t i = 0; i < ticks; ++i) sim.tick();
    return {sim.report(), sim.trace()};
}

}  // namespace mowsafe
