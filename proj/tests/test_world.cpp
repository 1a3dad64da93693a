#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "mowsafe/world.hpp"
#include "oracles.hpp"

using namespace mowsafe;

namespace {

Entity hog_at(Vec2 p) {
    Entity e;
    e.id = "hog";
    e.kind = EntityKind::hedgehog;
    e.position_m = p;
    e.radius_m = 0.1;
    e.height_m = 0.12;
    e.surface_temp_c = 34.0;
    return e;
}

CameraModel cam(double height, double pitch_deg) {
    CameraModel c;
    c.mount_height_m = height;
    c.pitch_rad = deg_to_rad(pitch_deg);
    return c;
}

// Brute-force march along a pixel ray testing point membership in a cylinder.
bool march_hits(const CameraModel& c, const Pose& pose, Pixel px, Vec2 centre, double radius, double height) {
    const Ray ray = camera_ray(c, pose, pixel_ray(c, px));
    for (double t = 0.0; t < 5.0; t += 2e-4) {
        const Vec3 p = ray.at(t);
        if (p.z < 0.0) return false;
        if (p.z <= height && std::hypot(p.x - centre.x, p.y - centre.y) <= radius) return true;
    }
    return false;
}

}  // namespace

TEST(BuildWorld, EmptyLawn) {
    Scenario s;
    const WorldState w = build_world(s);
    EXPECT_EQ(w.tick, 0u);
    EXPECT_TRUE(w.entities.empty());
    EXPECT_EQ(w.coverage.cols(), 40);
    EXPECT_EQ(w.coverage.rows(), 40);
    EXPECT_EQ(w.coverage.mowed_count(), 0u);
}

TEST(BuildWorld, HedgehogPlaced) {
    Scenario s;
    s.entities.push_back(hog_at({5, 5}));
    const WorldState w = build_world(s);
    ASSERT_EQ(w.entities.size(), 1u);
    EXPECT_EQ(w.entities[0].position, (Vec2{5, 5}));
    EXPECT_TRUE(w.entities[0].present);
    EXPECT_EQ(effective_temperature(s.entities[0], Season::summer), 34.0);
}

TEST(BuildWorld, RejectsBadScenarios) {
    Scenario s;
    s.entities.push_back(hog_at({-1, 5}));
    try {
        build_world(s);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "entities[0].position_m");
    }
    Scenario t;
    t.lawn_width_m = 0.0;
    EXPECT_THROW(build_world(t), ValidationError);
    Scenario u;
    u.cell_size_m = 0.3;
    EXPECT_THROW(build_world(u), ValidationError);
    Scenario v;
    v.camera.pitch_rad = std::numbers::pi / 2;
    EXPECT_THROW(build_world(v), ValidationError);
    Scenario w;
    w.entities.push_back(hog_at({1, 1}));
    w.entities.back().radius_m = 0.0;
    EXPECT_THROW(build_world(w), ValidationError);
    Scenario x;
    Entity e = hog_at({1, 1});
    e.motion = AppearanceWindow{"A", 5, 5, true};
    x.entities.push_back(e);
    EXPECT_THROW(build_world(x), ValidationError);
}

TEST(StepEntities, StationaryNeverMoves) {
    Scenario s;
    s.entities.push_back(hog_at({3, 4}));
    WorldState w = build_world(s);
    for (int i = 0; i < 250; ++i) w = step_entities(std::move(w), s);
    EXPECT_EQ(w.tick, 250u);
    EXPECT_EQ(w.entities[0].position, (Vec2{3, 4}));
}

TEST(StepEntities, WaypointsInterpolate) {
    Scenario s;
    s.lawn_width_m = 12;
    Entity e = hog_at({0, 0});
    e.motion = WaypointMotion{{{{0, 0}, 0}, {{10, 0}, 10}}};
    s.entities.push_back(e);
    WorldState w = build_world(s);
    for (int i = 0; i < 5; ++i) w = step_entities(std::move(w), s);
    EXPECT_DOUBLE_EQ(w.entities[0].position.x, 5.0);
    for (int i = 0; i < 20; ++i) w = step_entities(std::move(w), s);
    EXPECT_DOUBLE_EQ(w.entities[0].position.x, 10.0);
}

TEST(StepEntities, AppearanceWindow) {
    Scenario s;
    s.tick_seconds = 3600;  // one slot per tick
    Entity e = hog_at({5, 5});
    e.motion = AppearanceWindow{"A", 18, 20, true};
    s.entities.push_back(e);
    EXPECT_FALSE(entity_state_at(e, s, 12).present);
    EXPECT_TRUE(entity_state_at(e, s, 19).present);
    EXPECT_TRUE(entity_state_at(e, s, 18).present);
    EXPECT_TRUE(entity_state_at(e, s, 20).present);
    EXPECT_FALSE(entity_state_at(e, s, 21).present);
    EXPECT_TRUE(entity_state_at(e, s, 24 + 19).present);
    e.motion = AppearanceWindow{"A", 18, 20, false};
    EXPECT_FALSE(entity_state_at(e, s, 24 + 19).present);
}

TEST(Clock, SlotsAndDays) {
    Scenario s;
    s.tick_seconds = 60;
    s.clock.start_slot = 22;
    EXPECT_EQ(slot_of_tick(s, 0), 22);
    EXPECT_EQ(slot_of_tick(s, 120), 0);
    EXPECT_EQ(day_of_tick(s, 120), 1u);
}

TEST(Projection, CentreRayRanges) {
    const Pose origin{0, 0, 0};
    const auto g = project_pixel_to_ground(cam(1.0, 45), kOpticalAxis, origin);
    ASSERT_TRUE(g);
    EXPECT_NEAR(g->x, 1.0, 1e-12);
    EXPECT_NEAR(g->y, 0.0, 1e-12);

    const auto g30 = project_pixel_to_ground(cam(1.0, 30), kOpticalAxis, origin);
    ASSERT_TRUE(g30);
    const auto marched = oracle::ray_march_range(1.0, deg_to_rad(30));
    ASSERT_TRUE(marched);
    EXPECT_NEAR(g30->x, *marched, 1e-6);
    EXPECT_NEAR(g30->x, 1.7320508, 1e-7);

    EXPECT_FALSE(project_pixel_to_ground(cam(1.0, 0), kOpticalAxis, origin));
}

TEST(Projection, AzimuthSignAndHeading) {
    const CameraModel c = cam(0.5, 45);
    const Pose p{2, 3, std::numbers::pi / 2};
    // Right half of the image lands to the right of a north-facing mower (smaller x).
    const auto right = project_pixel_to_ground(c, Pixel{12, 31}, p);
    const auto left = project_pixel_to_ground(c, Pixel{12, 0}, p);
    ASSERT_TRUE(right && left);
    EXPECT_GT(right->x, 2.0);
    EXPECT_LT(left->x, 2.0);
    // The bottom row looks further down, so closer.
    const auto near = project_pixel_to_ground(c, Pixel{23, 16}, p);
    const auto far = project_pixel_to_ground(c, Pixel{0, 16}, p);
    EXPECT_LT(near->y, far->y);
}

TEST(Projection, TotalAndInjectiveWhenLookingDown) {
    const CameraModel c = cam(0.5, 45);
    std::set<std::pair<long long, long long>> seen;
    for (int r = 0; r < kFrameRows; ++r) {
        for (int col = 0; col < kFrameCols; ++col) {
            const auto g = project_pixel_to_ground(c, Pixel{r, col}, {1, 1, 0.3});
            ASSERT_TRUE(g);
            EXPECT_TRUE(seen.insert({std::llround(g->x * 1e9), std::llround(g->y * 1e9)}).second);
        }
    }
    EXPECT_THROW(project_pixel_to_ground(c, Pixel{24, 0}, {}), ContractViolation);
}

TEST(Projection, EveryRayAgreesWithMarch) {
    const CameraModel c = cam(0.5, 45);
    for (int r = 0; r < kFrameRows; ++r) {
        const double phi = pixel_ray(c, Pixel{r, 16}).depression;
        const auto g = project_pixel_to_ground(c, Pixel{r, 16}, {0, 0, 0});
        const double az = pixel_ray(c, Pixel{r, 16}).azimuth;
        ASSERT_NEAR(norm(*g), *oracle::ray_march_range(0.5, phi), 1e-6);
        ASSERT_NEAR(std::atan2(-g->y, g->x), az, 1e-12);
    }
}

TEST(Render, EmptySceneIsAmbient) {
    Scenario s;
    const WorldState w = build_world(s);
    std::mt19937_64 rng(1);
    const ThermalFrame f = sample_thermal(w, s, s.mower_start, {}, rng);
    for (double v : f.values()) ASSERT_EQ(v, 20.0);
}

TEST(Render, HitPixelsMatchMarchedRays) {
    Scenario s;
    s.entities.push_back(hog_at({1.5, 1.05}));
    const WorldState w = build_world(s);
    const RenderResult r = render_scene(w, s, s.mower_start);
    int hits = 0;
    for (int row = 0; row < kFrameRows; ++row) {
        for (int col = 0; col < kFrameCols; ++col) {
            const bool expect = march_hits(s.camera, s.mower_start, {row, col}, {1.5, 1.05}, 0.1, 0.12);
            ASSERT_EQ(r.frame.at(row, col) == 34.0, expect) << row << "," << col;
            ASSERT_EQ((r.entity[Pixel{row, col}.index()] == 0), expect);
            hits += expect;
        }
    }
    EXPECT_GT(hits, 10);
}

TEST(Render, NearestEntityWins) {
    Scenario s;
    Entity a = hog_at({1.45, 1.0});
    a.id = "near";
    a.surface_temp_c = 30.0;
    Entity b = hog_at({1.6, 1.0});
    b.id = "far";
    b.height_m = 0.5;
    b.surface_temp_c = 40.0;
    s.entities = {b, a};
    const WorldState w = build_world(s);
    const RenderResult r = render_scene(w, s, s.mower_start);
    int both = 0;
    for (int row = 0; row < kFrameRows; ++row) {
        for (int col = 0; col < kFrameCols; ++col) {
            const Ray ray = camera_ray(s.camera, s.mower_start, pixel_ray(s.camera, Pixel{row, col}));
            const auto tf = intersect_cylinder(ray, b.position_m, b.radius_m, b.height_m);
            const auto tn = intersect_cylinder(ray, a.position_m, a.radius_m, a.height_m);
            const int idx = r.entity[Pixel{row, col}.index()];
            if (tf && tn) {
                ++both;
                ASSERT_EQ(idx, *tn < *tf ? 1 : 0);
            }
            if (idx == 1) { ASSERT_EQ(r.frame.at(row, col), 30.0); }
            if (idx == 0) { ASSERT_EQ(r.frame.at(row, col), 40.0); }
            if (idx < 0) { ASSERT_EQ(r.frame.at(row, col), 20.0); }
        }
    }
    EXPECT_GT(both, 0);
}

TEST(Render, PureAndTranslationInvariant) {
    Scenario s;
    s.lawn_width_m = 20;
    s.entities.push_back(hog_at({1.5, 1.05}));
    const Pose pose{1, 1, 0.2};
    const auto f1 = render_scene(build_world(s), s, pose).frame;
    EXPECT_EQ(f1, render_scene(build_world(s), s, pose).frame);

    Scenario t = s;
    t.entities[0].position_m = {9.5, 4.05};
    const Pose moved{9, 4, 0.2};
    const auto f2 = render_scene(build_world(t), t, moved).frame;
    for (std::size_t i = 0; i < kFramePixels; ++i) ASSERT_EQ(f1.values()[i], f2.values()[i]);
}

TEST(Render, HorizontalCameraSeesTallObjectFarAway) {
    Scenario s;
    s.lawn_width_m = 20;
    Entity fire = hog_at({12, 1});
    fire.kind = EntityKind::bonfire;
    fire.radius_m = 0.5;
    fire.height_m = 1.0;
    fire.surface_temp_c = 400;
    s.entities.push_back(fire);
    s.camera.pitch_rad = 0.0;
    const auto seen = render_scene(build_world(s), s, s.mower_start);
    int hot = 0;
    for (double v : seen.frame.values()) hot += v == 400.0;
    EXPECT_GT(hot, 4);
    s.camera.pitch_rad = deg_to_rad(45);
    const auto down = render_scene(build_world(s), s, s.mower_start);
    for (double v : down.frame.values()) ASSERT_EQ(v, 20.0);
}

TEST(Render, WinterTemperature) {
    Scenario s;
    s.season = Season::winter;
    Entity e = hog_at({1.5, 1.05});
    e.winter_temp_c = 8.0;
    s.entities.push_back(e);
    const auto r = render_scene(build_world(s), s, s.mower_start);
    int seen = 0;
    for (std::size_t i = 0; i < kFramePixels; ++i) {
        if (r.entity[i] == 0) {
            ++seen;
            EXPECT_EQ(r.frame.values()[i], 8.0);
        }
    }
    EXPECT_GT(seen, 0);
}

TEST(Sensor, DeadPixelAndNoise) {
    Scenario s;
    const WorldState w = build_world(s);
    std::mt19937_64 rng(2);
    const std::vector<DeadPixel> dead{{{4, 5}, 99.0}};
    const auto f = sample_thermal(w, s, s.mower_start, dead, rng);
    EXPECT_EQ(f.at(4, 5), 99.0);
    EXPECT_EQ(f.at(4, 6), 20.0);

    s.sensor.noise_enabled = true;
    s.sensor.noise_sigma_c = 0.5;
    const auto n = sample_thermal(w, s, s.mower_start, {}, rng);
    double mean = 0, var = 0;
    for (double v : n.values()) mean += v;
    mean /= kFramePixels;
    for (double v : n.values()) var += (v - mean) * (v - mean);
    var /= kFramePixels - 1;
    EXPECT_NEAR(mean, 20.0, 0.1);
    EXPECT_NEAR(std::sqrt(var), 0.5, 0.06);

    EXPECT_THROW(sample_thermal(w, s, {-1, 0, 0}, {}, rng), ContractViolation);
}

TEST(Extent, CentrePixelsAtFortyFive) {
    const CameraModel c = cam(1.0, 45);
    const std::vector<Pixel> centre{{11, 15}, {11, 16}, {12, 15}, {12, 16}};
    const auto ext = estimate_extent(centre, c, {0, 0, 0});
    ASSERT_TRUE(ext);
    double nearest = 1e9;
    for (const Pixel& p : centre) {
        nearest = std::min(nearest, *oracle::ray_march_range(1.0, pixel_ray(c, p).depression));
    }
    EXPECT_NEAR(ext->nearest_distance_m, nearest, 1e-6);
    EXPECT_NEAR(ext->nearest_distance_m, 1.0, 0.1);
    EXPECT_GT(ext->footprint.area(), 0.0);
    EXPECT_TRUE(ext->footprint.contains({1.0, 0.0}));
}

TEST(Extent, HorizontalIsIndeterminate) {
    EXPECT_FALSE(estimate_extent(std::vector<Pixel>{{11, 15}, {12, 15}}, cam(1.0, 0), {}));
    EXPECT_THROW(estimate_extent(std::vector<Pixel>{}, cam(1.0, 45), {}), ContractViolation);
}

TEST(Extent, DistanceShrinksAsEntityApproaches) {
    Scenario s;
    s.lawn_width_m = 20;
    double last = 1e9;
    for (double x = 1.9; x >= 1.3; x -= 0.05) {
        s.entities = {hog_at({x, 1.0})};
        const auto r = render_scene(build_world(s), s, s.mower_start);
        std::vector<Pixel> flagged;
        for (int i = 0; i < static_cast<int>(kFramePixels); ++i)
            if (r.entity[i] == 0) flagged.push_back({i / kFrameCols, i % kFrameCols});
        ASSERT_FALSE(flagged.empty()) << x;
        const auto ext = estimate_extent(flagged, s.camera, s.mower_start);
        ASSERT_TRUE(ext);
        EXPECT_LE(ext->nearest_distance_m, last + 1e-12) << x;
        last = ext->nearest_distance_m;
    }
}

TEST(Coverage, SegmentMarksCells) {
    CoverageGrid g(10, 10, 0.25);
    g.mark_segment({0.1, 0.1}, {2.1, 0.1});
    EXPECT_EQ(g.mowed_count(), 9u);
    EXPECT_TRUE(g.is_mowed(8, 0));
    EXPECT_FALSE(g.is_mowed(9, 0));
    EXPECT_GE(g.fraction(), 0.0);
    EXPECT_LE(g.fraction(), 1.0);
}

TEST(Visibility, FractionInView) {
    const CameraModel c = cam(0.5, 45);
    EXPECT_DOUBLE_EQ(fraction_in_view(c, {0, 0, 0}, {0.5, 0.0}, 0.05, 0.05), 1.0);
    EXPECT_DOUBLE_EQ(fraction_in_view(c, {0, 0, 0}, {-0.5, 0.0}, 0.05, 0.05), 0.0);
}
