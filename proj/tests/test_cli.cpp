#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "mowsafe/cli.hpp"
#include "scenarios.hpp"

using namespace mowsafe;
namespace fs = std::filesystem;
namespace scn = mowsafe::testing;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mowsafe_cli_" + std::to_string(::getpid()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& body) {
        const auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << body;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return cli::run(std::move(args), out_, err_);
    }
    std::string scenario(const ScenarioBundle& b, const std::string& name = "s.json") {
        return write(name, serialize_scenario(b).dump());
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_F(CliTest, SimulateEmptyScene) {
    const auto s = scenario(scn::base_bundle());
    ASSERT_EQ(run({"simulate", "--scenario", s, "--ticks", "100", "--trace", path("t.jsonl"), "--report", path("r.json")}), 0)
        << err_.str();
    EXPECT_EQ(lines_of(slurp(path("t.jsonl"))).size(), 100u);
    const auto report = nlohmann::json::parse(slurp(path("r.json")));
    EXPECT_EQ(report["ticks_run"], 100);
    EXPECT_EQ(report["stops"], 0);
}

TEST_F(CliTest, SimulateHedgehogWithRestart) {
    ScenarioBundle b = scn::hedgehog_bundle();
    b.scenario.entities[0].motion = WaypointMotion{{{{4.0, 1.0}, 0}, {{4.0, 1.0}, 300}, {{4.0, 9.0}, 301}}};
    const auto s = scenario(b);
    ASSERT_EQ(run({"simulate", "--scenario", s, "--ticks", "500", "--trace", path("t.jsonl"), "--report", path("r.json"),
                   "--restart-at-tick", "350"}),
              0);
    const auto lines = lines_of(slurp(path("t.jsonl")));
    ASSERT_EQ(lines.size(), 500u);
    const auto halted = nlohmann::json::parse(lines[340]);
    EXPECT_EQ(halted["status"], 0);
    const auto resumed = nlohmann::json::parse(lines[360]);
    EXPECT_EQ(resumed["status"], 1);
    EXPECT_EQ(nlohmann::json::parse(lines[349])["events"][0], "ManualRestart");

    ASSERT_EQ(run({"report", "--trace", path("t.jsonl")}), 0);
    const auto summary = nlohmann::json::parse(out_.str());
    EXPECT_EQ(summary["ticks"], 500);
    EXPECT_EQ(summary["events"]["ClassifiedHedgehog"], 1);
    EXPECT_EQ(summary["trace_hash"], nlohmann::json::parse(slurp(path("r.json")))["trace_hash"]);
}

TEST_F(CliTest, SimulateWritesFlagFile) {
    const auto s = scenario(scn::hedgehog_bundle());
    ASSERT_EQ(run({"simulate", "--scenario", s, "--ticks", "50", "--trace", path("t"), "--report", path("r"), "--flag-file",
                   path("flag")}),
              0);
    EXPECT_EQ(slurp(path("flag")), "1\n");
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run({}), cli::kExitUsage);
    EXPECT_EQ(run({"simulate"}), cli::kExitUsage);
    EXPECT_EQ(run({"simulate", "--scenario", path("missing.json")}), cli::kExitIo);
    EXPECT_EQ(run({"simulate", "--scenario", write("bad.json", R"({"lawn": {"width_m": -1, "height_m": 3}})")}),
              cli::kExitValidation);
    EXPECT_NE(err_.str().find("lawn.width_m"), std::string::npos);
    EXPECT_EQ(run({"simulate", "--scenario", write("broken.json", "{")}), cli::kExitValidation);
    EXPECT_EQ(run({"simulate", "--scenario", scenario(scn::base_bundle()), "--mode", "warp"}), cli::kExitUsage);
    EXPECT_EQ(run({"--help"}), cli::kExitOk);
}

TEST_F(CliTest, ScenarioDirectoryFromEnvironment) {
    scenario(scn::base_bundle(), "env.json");
    ::setenv("MOWSAFE_SCENARIO_DIR", dir_.c_str(), 1);
    EXPECT_EQ(run({"simulate", "--scenario", "env.json", "--ticks", "3", "--trace", path("t"), "--report", path("r")}), 0);
    ::unsetenv("MOWSAFE_SCENARIO_DIR");
}

TEST_F(CliTest, DetectReplaysFrames) {
    std::string stream;
    for (int i = 0; i < 3; ++i) stream += frame_line(ThermalFrame(20.0)) + "\n";
    // A warm 3x3 patch creeping in from the bottom edge.
    for (int k = 1; k <= 3; ++k) {
        ThermalFrame f(20.0);
        for (int r = 24 - k; r < 24; ++r)
            for (int c = 15; c < 18; ++c) f.at(r, c) = 34.0;
        stream += frame_line(f) + "\n";
    }
    ASSERT_EQ(run({"detect", "--frames", write("f.jsonl", stream)}), 0) << err_.str();
    const auto out = lines_of(out_.str());
    ASSERT_EQ(out.size(), 6u);
    std::vector<bool> detected;
    DetectorState state;
    std::istringstream in(stream);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) {
        const auto upd = update_detector(state, parse_frame_line(l, ++n), {});
        state = upd.state;
        const auto j = nlohmann::json::parse(out[n - 1]);
        EXPECT_EQ(j["detected"], upd.detected);
        EXPECT_EQ(j["flagged_count"], upd.flagged.size());
        detected.push_back(j["detected"]);
    }
    EXPECT_EQ(detected, (std::vector<bool>{false, false, false, false, true, true}));

    ASSERT_EQ(run({"detect", "--frames", path("f.jsonl"), "--min-hot-pixels", "100"}), 0);
    EXPECT_EQ(out_.str().find("\"detected\":true"), std::string::npos);
}

TEST_F(CliTest, DetectRejectsShortLine) {
    std::string line = "[";
    for (int i = 0; i < 767; ++i) line += i ? ",20" : "20";
    line += "]\n";
    EXPECT_EQ(run({"detect", "--frames", write("f.jsonl", frame_line(ThermalFrame(20.0)) + "\n" + line)}), cli::kExitValidation);
    EXPECT_NE(err_.str().find("line 2"), std::string::npos);
    EXPECT_EQ(run({"detect", "--frames", path("nothing.jsonl")}), cli::kExitIo);
    EXPECT_EQ(run({"detect", "--frames", path("f.jsonl"), "--delta-c", "0"}), cli::kExitValidation);
}

TEST_F(CliTest, TrainThenEvaluate) {
    ScenarioBundle b = scn::base_bundle();
    b.scenario.zones = {{"A", {{0, 0}, {5, 5}}}, {"B", {{5, 0}, {10, 5}}}, {"C", {{0, 5}, {5, 10}}}, {"D", {{5, 5}, {10, 10}}}};
    Entity hog = scn::make_entity("hog", EntityKind::hedgehog, {2, 2});
    hog.motion = AppearanceWindow{"A", 18, 20, true};
    b.scenario.entities = {hog};
    const auto s = scenario(b);
    ASSERT_EQ(run({"train", "--scenario", s, "--table", path("q.json"), "--seed", "4", "--epsilon-end", "0.01"}), 0) << err_.str();
    const std::string first = slurp(path("q.json"));
    ASSERT_EQ(run({"train", "--scenario", s, "--table", path("q2.json"), "--seed", "4", "--epsilon-end", "0.01"}), 0);
    EXPECT_EQ(first, slurp(path("q2.json")));

    ASSERT_EQ(run({"evaluate", "--scenario", s, "--table", path("q.json"), "--days", "20"}), 0);
    const auto greedy = nlohmann::json::parse(out_.str());
    EXPECT_EQ(greedy["encounter_rate"], 0.0);
    ASSERT_EQ(run({"evaluate", "--scenario", s, "--policy", "uniform", "--days", "2000", "--seed", "1"}), 0);
    const auto uniform = nlohmann::json::parse(out_.str());
    EXPECT_GT(uniform["encounter_rate"].get<double>(), 0.3);
    EXPECT_GE(greedy["coverage_rate"].get<double>(), uniform["coverage_rate"].get<double>());

    EXPECT_EQ(run({"evaluate", "--scenario", s, "--table", path("absent.json")}), cli::kExitIo);
    EXPECT_EQ(run({"evaluate", "--scenario", s}), cli::kExitIo);
    EXPECT_EQ(run({"train", "--scenario", s, "--table", path("q3.json"), "--alpha", "0"}), cli::kExitValidation);
}

TEST_F(CliTest, ZeroEpisodesZeroTable) {
    ScenarioBundle b = scn::base_bundle();
    b.scenario.zones = {{"A", {{0, 0}, {5, 10}}}};
    const auto s = scenario(b);
    ASSERT_EQ(run({"train", "--scenario", s, "--table", path("q.json"), "--episodes", "0"}), 0);
    const auto j = nlohmann::json::parse(slurp(path("q.json")));
    ASSERT_EQ(j.size(), 48u);
    for (const auto& e : j) EXPECT_EQ(e["value"], 0.0);
    // Zero table reads out as "mow the first zone" everywhere.
    ASSERT_EQ(run({"evaluate", "--scenario", s, "--table", path("q.json")}), 0);
    EXPECT_EQ(nlohmann::json::parse(out_.str())["coverage_rate"], 24.0);
}

TEST_F(CliTest, DeterministicTraces) {
    ScenarioBundle b = scn::wandering_bundle(5, 800);
    b.scenario.sensor.noise_enabled = true;
    const auto s = scenario(b);
    for (const char* name : {"a", "b"})
        ASSERT_EQ(run({"simulate", "--scenario", s, "--ticks", "800", "--seed", "9", "--trace", path(name), "--report", path(std::string(name) + ".r")}), 0);
    ASSERT_EQ(run({"simulate", "--scenario", s, "--ticks", "800", "--seed", "9", "--mode", "real", "--trace", path("c"), "--report", path("c.r")}), 0);
    EXPECT_EQ(slurp(path("a")), slurp(path("b")));
    EXPECT_EQ(slurp(path("a")), slurp(path("c")));
}

TEST_F(CliTest, ReportRejectsGarbage) {
    EXPECT_EQ(run({"report", "--trace", write("t", "{\"tick\":1}\n")}), cli::kExitValidation);
    EXPECT_EQ(run({"report", "--trace", path("none")}), cli::kExitIo);
}
