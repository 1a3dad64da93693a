#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mowsafe/errors.hpp"
#include "mowsafe/frame.hpp"
#include "mowsafe/pipeline.hpp"

namespace mowsafe {

namespace detail {

using nlohmann::json;

// Reads fields of one JSON object and rejects any key that was never asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field_path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    bool has(std::string_view key) {
        known_.insert(std::string(key));
        return j_.contains(key);
    }

    const json& raw(std::string_view key) {
        if (!has(key)) throw ValidationError(field_path(key), "required field is missing");
        return j_.at(key);
    }

    double number(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ValidationError(field_path(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ValidationError(field_path(key), "expected a finite number");
        return d;
    }

    double number(std::string_view key, double fallback) { return has(key) ? number(key) : fallback; }

    std::uint64_t unsigned_int(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ValidationError(field_path(key), "expected a non-negative integer, got " + v.dump());
        return v.get<std::uint64_t>();
    }

    std::uint64_t unsigned_int(std::string_view key, std::uint64_t fallback) { return has(key) ? unsigned_int(key) : fallback; }

    int integer(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ValidationError(field_path(key), "expected an integer, got " + v.dump());
        return v.get<int>();
    }

    int integer(std::string_view key, int fallback) { return has(key) ? integer(key) : fallback; }

    bool boolean(std::string_view key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ValidationError(field_path(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ValidationError(field_path(key), "expected a string");
        return v.get<std::string>();
    }

    std::string string(std::string_view key, std::string fallback) { return has(key) ? string(key) : fallback; }

    Vec2 vec2(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ValidationError(field_path(key), "expected [x, y]");
        return {v[0].get<double>(), v[1].get<double>()};
    }

    // Call once every field has been read.
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!known_.contains(key)) throw ValidationError(field_path(key), "unknown field");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

inline std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

inline BlobBand read_band(const json& j, const std::string& path, BlobBand b) {
    ObjectReader r(j, path);
    b.min_area = r.integer("min_area", b.min_area);
    b.max_area = r.integer("max_area", b.max_area);
    b.min_aspect = r.number("min_aspect", b.min_aspect);
    b.max_aspect = r.number("max_aspect", b.max_aspect);
    b.min_excess_c = r.number("min_excess_c", b.min_excess_c);
    b.max_excess_c = r.number("max_excess_c", b.max_excess_c);
    r.finish();
    return b;
}

inline json write_band(const BlobBand& b) {
    return {{"min_area", b.min_area},       {"max_area", b.max_area},         {"min_aspect", b.min_aspect},
            {"max_aspect", b.max_aspect},   {"min_excess_c", b.min_excess_c}, {"max_excess_c", b.max_excess_c}};
}

inline Entity read_entity(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    Entity e;
    e.id = r.string("id");
    const std::string kind = r.string("kind");
    const auto k = entity_kind_from_string(kind);
    if (!k) throw ValidationError(r.field_path("kind"), "unknown entity kind '" + kind + "'");
    e.kind = *k;
    const EntityDefaults d = entity_defaults(e.kind);
    e.radius_m = r.number("radius_m", d.radius_m);
    e.height_m = r.number("height_m", d.height_m);
    e.surface_temp_c = r.number("surface_temp_c", d.surface_temp_c);
    e.winter_temp_c = d.winter_temp_c;
    if (r.has("winter_temp_c")) e.winter_temp_c = r.number("winter_temp_c");

    std::string motion_type = "stationary";
    if (r.has("motion")) {
        const std::string mpath = r.field_path("motion");
        ObjectReader m(r.raw("motion"), mpath);
        motion_type = m.string("type");
        if (motion_type == "stationary") {
            e.motion = Stationary{};
        } else if (motion_type == "waypoints") {
            const json& list = m.raw("waypoints");
            if (!list.is_array() || list.empty()) throw ValidationError(m.field_path("waypoints"), "expected a non-empty array");
            WaypointMotion wm;
            for (std::size_t i = 0; i < list.size(); ++i) {
                ObjectReader w(list[i], index_path(m.field_path("waypoints"), i));
                wm.waypoints.push_back({w.vec2("position_m"), w.unsigned_int("tick")});
                w.finish();
            }
            e.motion = std::move(wm);
        } else if (motion_type == "appearance_window") {
            AppearanceWindow w;
            w.zone = m.string("zone");
            w.start_slot = m.integer("start_slot");
            w.end_slot = m.integer("end_slot");
            w.daily = m.boolean("daily", true);
            e.motion = std::move(w);
        } else {
            throw ValidationError(m.field_path("type"), "unknown motion type '" + motion_type + "'");
        }
        m.finish();
    }
    if (const auto* wm = std::get_if<WaypointMotion>(&e.motion); wm && !r.has("position_m")) {
        e.position_m = wm->waypoints.front().position;
    } else {
        e.position_m = r.vec2("position_m");
    }
    r.finish();
    return e;
}

inline json write_entity(const Entity& e) {
    json j{{"id", e.id},
           {"kind", std::string(to_string(e.kind))},
           {"position_m", {e.position_m.x, e.position_m.y}},
           {"radius_m", e.radius_m},
           {"height_m", e.height_m},
           {"surface_temp_c", e.surface_temp_c}};
    if (e.winter_temp_c) j["winter_temp_c"] = *e.winter_temp_c;
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Stationary>) {
                j["motion"] = {{"type", "stationary"}};
            } else if constexpr (std::is_same_v<M, WaypointMotion>) {
                json list = json::array();
                for (const auto& w : m.waypoints) list.push_back({{"position_m", {w.position.x, w.position.y}}, {"tick", w.arrival_tick}});
                j["motion"] = {{"type", "waypoints"}, {"waypoints", std::move(list)}};
            } else {
                j["motion"] = {{"type", "appearance_window"},
                               {"zone", m.zone},
                               {"start_slot", m.start_slot},
                               {"end_slot", m.end_slot},
                               {"daily", m.daily}};
            }
        },
        e.motion);
    return j;
}

}  // namespace detail

/// Parses and validates a scenario document. Missing optional fields take the
/// documented defaults; unknown fields are rejected with their path.
inline ScenarioBundle parse_scenario_json(const nlohmann::json& doc) {
    using detail::ObjectReader;
    ObjectReader root(doc, "");
    ScenarioBundle b;
    Scenario& s = b.scenario;

    {
        ObjectReader lawn(root.raw("lawn"), "lawn");
        s.lawn_width_m = lawn.number("width_m");
        s.lawn_height_m = lawn.number("height_m");
        s.cell_size_m = lawn.number("cell_size_m", s.cell_size_m);
        lawn.finish();
    }
    s.ambient_c = root.number("ambient_c", s.ambient_c);
    const std::string season = root.string("season", "summer");
    if (season == "summer") {
        s.season = Season::summer;
    } else if (season == "winter") {
        s.season = Season::winter;
    } else {
        throw ValidationError("season", "expected \"summer\" or \"winter\"");
    }
    s.tick_seconds = root.number("tick_seconds", s.tick_seconds);
    s.seed = root.unsigned_int("seed", s.seed);

    if (root.has("mower")) {
        ObjectReader m(root.raw("mower"), "mower");
        if (m.has("start")) {
            ObjectReader st(m.raw("start"), "mower.start");
            s.mower_start = {st.number("x"), st.number("y"), st.number("heading_rad", 0.0)};
            st.finish();
        }
        b.mower.radius_m = m.number("radius_m", b.mower.radius_m);
        b.mower.speed_m_per_tick = m.number("speed_m_per_tick", b.mower.speed_m_per_tick);
        const auto leg = m.unsigned_int("leg_ticks", b.mower.leg_ticks);
        if (leg > 0xFFFFFFFFULL) throw ValidationError("mower.leg_ticks", "too large");
        b.mower.leg_ticks = static_cast<std::uint32_t>(leg);
        b.mower.interaction_range_m = m.number("interaction_range_m", b.mower.interaction_range_m);
        m.finish();
    }

    if (root.has("camera")) {
        ObjectReader c(root.raw("camera"), "camera");
        s.camera.mount_height_m = c.number("mount_height_m", s.camera.mount_height_m);
        s.camera.pitch_rad = c.number("pitch_rad", s.camera.pitch_rad);
        s.camera.hfov_rad = c.number("hfov_rad", s.camera.hfov_rad);
        s.camera.vfov_rad = c.number("vfov_rad", s.camera.vfov_rad);
        c.finish();
    }

    if (root.has("sensor")) {
        ObjectReader sn(root.raw("sensor"), "sensor");
        s.sensor.noise_sigma_c = sn.number("noise_sigma_c", s.sensor.noise_sigma_c);
        s.sensor.noise_enabled = sn.boolean("noise_enabled", s.sensor.noise_enabled);
        if (sn.has("dead_pixels")) {
            const auto& list = sn.raw("dead_pixels");
            if (!list.is_array()) throw ValidationError("sensor.dead_pixels", "expected an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                ObjectReader d(list[i], detail::index_path("sensor.dead_pixels", i));
                s.sensor.dead_pixels.push_back({{d.integer("row"), d.integer("col")}, d.number("value_c")});
                d.finish();
            }
        }
        sn.finish();
    }

    if (root.has("detector")) {
        ObjectReader d(root.raw("detector"), "detector");
        b.detector.delta_c = d.number("delta_c", b.detector.delta_c);
        b.detector.min_hot_pixels = d.integer("min_hot_pixels", b.detector.min_hot_pixels);
        d.finish();
    }

    if (root.has("classifier")) {
        ObjectReader c(root.raw("classifier"), "classifier");
        const std::string kind = c.string("kind", "oracle");
        if (kind == "oracle") {
            b.classifier.kind = ClassifierKind::oracle;
        } else if (kind == "blob_feature") {
            b.classifier.kind = ClassifierKind::blob_feature;
        } else {
            throw ValidationError("classifier.kind", "expected \"oracle\" or \"blob_feature\"");
        }
        b.classifier.accuracy = c.number("accuracy", b.classifier.accuracy);
        b.classifier.night_accuracy = c.number("night_accuracy", b.classifier.night_accuracy);
        b.classifier.confusion_seed = c.unsigned_int("confusion_seed", b.classifier.confusion_seed);
        const auto latency = c.unsigned_int("init_latency_ticks", b.classifier.init_latency_ticks);
        if (latency > 0xFFFFFFFFULL) throw ValidationError("classifier.init_latency_ticks", "too large");
        b.classifier.init_latency_ticks = static_cast<std::uint32_t>(latency);
        if (c.has("blob")) {
            ObjectReader bl(c.raw("blob"), "classifier.blob");
            if (bl.has("hedgehog")) b.classifier.blob.hedgehog = detail::read_band(bl.raw("hedgehog"), "classifier.blob.hedgehog", b.classifier.blob.hedgehog);
            if (bl.has("family")) b.classifier.blob.family = detail::read_band(bl.raw("family"), "classifier.blob.family", b.classifier.blob.family);
            if (bl.has("snake")) b.classifier.blob.snake = detail::read_band(bl.raw("snake"), "classifier.blob.snake", b.classifier.blob.snake);
            bl.finish();
        }
        c.finish();
    }
    b.classifier.detector = b.detector;

    if (root.has("policy")) {
        ObjectReader p(root.raw("policy"), "policy");
        if (p.has("family_zone_expiry_ticks")) b.policy.family_zone_expiry_ticks = p.unsigned_int("family_zone_expiry_ticks");
        b.policy.zone_margin_m = p.number("zone_margin_m", b.policy.zone_margin_m);
        p.finish();
    }

    if (root.has("clock")) {
        ObjectReader c(root.raw("clock"), "clock");
        s.clock.slots_per_day = c.integer("slots_per_day", s.clock.slots_per_day);
        s.clock.slot_seconds = c.number("slot_seconds", s.clock.slot_seconds);
        s.clock.start_slot = c.integer("start_slot", s.clock.start_slot);
        if (c.has("night_slots")) {
            const auto& list = c.raw("night_slots");
            if (!list.is_array()) throw ValidationError("clock.night_slots", "expected an array of integers");
            for (const auto& v : list) {
                if (!v.is_number_integer()) throw ValidationError("clock.night_slots", "expected an array of integers");
                s.clock.night_slots.push_back(v.get<int>());
            }
        }
        c.finish();
    }

    if (root.has("zones")) {
        const auto& list = root.raw("zones");
        if (!list.is_array()) throw ValidationError("zones", "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            detail::ObjectReader z(list[i], detail::index_path("zones", i));
            s.zones.push_back({z.string("id"), {z.vec2("min"), z.vec2("max")}});
            z.finish();
        }
    }

    if (root.has("entities")) {
        const auto& list = root.raw("entities");
        if (!list.is_array()) throw ValidationError("entities", "expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) s.entities.push_back(detail::read_entity(list[i], detail::index_path("entities", i)));
    }
    root.finish();

    validate_bundle(b);
    return b;
}

inline ScenarioBundle parse_scenario(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return parse_scenario_json(doc);
}

/// Writes every field explicitly, so parsing the result reproduces `b` exactly.
inline nlohmann::json serialize_scenario(const ScenarioBundle& b) {
    using nlohmann::json;
    const Scenario& s = b.scenario;
    json dead = json::array();
    for (const auto& d : s.sensor.dead_pixels) dead.push_back({{"row", d.pixel.row}, {"col", d.pixel.col}, {"value_c", d.value_c}});
    json zones = json::array();
    for (const auto& z : s.zones) zones.push_back({{"id", z.id}, {"min", {z.area.min.x, z.area.min.y}}, {"max", {z.area.max.x, z.area.max.y}}});
    json entities = json::array();
    for (const auto& e : s.entities) entities.push_back(detail::write_entity(e));
    json policy{{"zone_margin_m", b.policy.zone_margin_m}};
    if (b.policy.family_zone_expiry_ticks) policy["family_zone_expiry_ticks"] = *b.policy.family_zone_expiry_ticks;

    return {
        {"lawn", {{"width_m", s.lawn_width_m}, {"height_m", s.lawn_height_m}, {"cell_size_m", s.cell_size_m}}},
        {"ambient_c", s.ambient_c},
        {"season", s.season == Season::winter ? "winter" : "summer"},
        {"tick_seconds", s.tick_seconds},
        {"seed", s.seed},
        {"mower",
         {{"start", {{"x", s.mower_start.x}, {"y", s.mower_start.y}, {"heading_rad", s.mower_start.heading}}},
          {"radius_m", b.mower.radius_m},
          {"speed_m_per_tick", b.mower.speed_m_per_tick},
          {"leg_ticks", b.mower.leg_ticks},
          {"interaction_range_m", b.mower.interaction_range_m}}},
        {"camera",
         {{"mount_height_m", s.camera.mount_height_m},
          {"pitch_rad", s.camera.pitch_rad},
          {"hfov_rad", s.camera.hfov_rad},
          {"vfov_rad", s.camera.vfov_rad}}},
        {"sensor", {{"noise_sigma_c", s.sensor.noise_sigma_c}, {"noise_enabled", s.sensor.noise_enabled}, {"dead_pixels", dead}}},
        {"detector", {{"delta_c", b.detector.delta_c}, {"min_hot_pixels", b.detector.min_hot_pixels}}},
        {"classifier",
         {{"kind", b.classifier.kind == ClassifierKind::oracle ? "oracle" : "blob_feature"},
          {"accuracy", b.classifier.accuracy},
          {"night_accuracy", b.classifier.night_accuracy},
          {"confusion_seed", b.classifier.confusion_seed},
          {"init_latency_ticks", b.classifier.init_latency_ticks},
          {"blob",
           {{"hedgehog", detail::write_band(b.classifier.blob.hedgehog)},
            {"family", detail::write_band(b.classifier.blob.family)},
            {"snake", detail::write_band(b.classifier.blob.snake)}}}}},
        {"policy", policy},
        {"clock",
         {{"slots_per_day", s.clock.slots_per_day},
          {"slot_seconds", s.clock.slot_seconds},
          {"start_slot", s.clock.start_slot},
          {"night_slots", s.clock.night_slots}}},
        {"zones", zones},
        {"entities", entities},
    };
}

// ---------------------------------------------------------------------------
// Frame streams: one JSON array of 768 numbers per line
// ---------------------------------------------------------------------------

inline ThermalFrame parse_frame_line(std::string_view line, std::size_t line_number) {
    const std::string where = "frame stream line " + std::to_string(line_number);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        throw ParseError(where + ": not valid JSON");
    }
    if (!j.is_array()) throw ParseError(where + ": expected an array of " + std::to_string(kFramePixels) + " numbers");
    std::vector<double> values;
    values.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(where + ": non-numeric value");
        values.push_back(v.get<double>());
    }
    try {
        return ThermalFrame::from_values(values);
    } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
    }
}

inline std::string frame_line(const ThermalFrame& f) {
    nlohmann::json j = nlohmann::json::array();
    for (double v : f.values()) j.push_back(v);
    return j.dump();
}

}  // namespace mowsafe
