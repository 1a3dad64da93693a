#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mowsafe/errors.hpp"
#include "mowsafe/pipeline.hpp"
#include "mowsafe/scenario_io.hpp"
#include "mowsafe/scheduler.hpp"
#include "mowsafe/thermal.hpp"

namespace mowsafe::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

// Relative scenario paths that do not exist are also tried under $MOWSAFE_SCENARIO_DIR.
inline std::filesystem::path resolve_scenario_path(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative() && !std::filesystem::exists(p)) {
        if (const char* dir = std::getenv("MOWSAFE_SCENARIO_DIR")) {
            auto alt = std::filesystem::path(dir) / p;
            if (std::filesystem::exists(alt)) return alt;
        }
    }
    return p;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ScenarioBundle load_scenario(const std::string& path) { return parse_scenario(read_text_file(resolve_scenario_path(path))); }

class OutputFile {
public:
    // "-" writes to `fallback`.
    OutputFile(const std::string& path, std::ostream& fallback) {
        if (path == "-") {
            out_ = &fallback;
        } else {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw IoError("cannot write " + path);
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }
    void close(const std::string& path) {
        out_->flush();
        if (!*out_) throw IoError("write to " + path + " failed");
    }

private:
    std::ofstream file_;
    std::ostream* out_ = nullptr;
};

struct SimulateArgs {
    std::string scenario;
    std::uint64_t ticks = 1000;
    std::optional<std::uint64_t> seed;
    std::string trace = "-";
    std::string report = "-";
    std::string flag_file;
    std::vector<std::uint64_t> restarts;
    std::string mode = "virtual";
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const ScenarioBundle bundle = load_scenario(a.scenario);
    SimOptions opt;
    opt.seed = a.seed.value_or(bundle.scenario.seed);
    opt.mode = a.mode == "real" ? TaskMode::real_task : TaskMode::virtual_time;
    if (!a.flag_file.empty()) opt.flag_file = a.flag_file;
    opt.restart_ticks = a.restarts;
    opt.keep_trace = false;

    OutputFile trace(a.trace, out);
    opt.trace_sink = [&trace](const std::string& line) { trace.stream() << line << '\n'; };
    Simulation sim(bundle, std::move(opt));
    for (std::uint64_t i = 0; i < a.ticks; ++i) sim.tick();
    trace.close(a.trace);

    OutputFile report(a.report, out);
    report.stream() << to_json(sim.report()).dump() << '\n';
    report.close(a.report);
    return kExitOk;
}

inline int cmd_detect(const std::string& frames_path, const DetectorConfig& config, std::ostream& out) {
    validate_detector(config);
    std::ifstream in(frames_path);
    if (!in) throw IoError("cannot read " + frames_path);
    DetectorState state;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const ThermalFrame frame = parse_frame_line(line, line_no);
        const DetectorUpdate upd = update_detector(state, frame, config);
        state = upd.state;
        nlohmann::json anchor = nullptr;
        if (state.anchor) anchor = {state.anchor->row, state.anchor->col};
        out << nlohmann::json{{"flagged_count", upd.flagged.size()}, {"detected", upd.detected}, {"anchor", anchor}}.dump()
            << '\n';
    }
    return kExitOk;
}

struct TrainArgs {
    std::string scenario;
    Hyperparams hyper;
    std::uint64_t seed = 0;
    std::string table;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out) {
    const ScenarioBundle bundle = load_scenario(a.scenario);
    const ScheduleProblem problem = schedule_problem(bundle.scenario);
    const QTable q = train(problem, a.hyper, a.seed);
    OutputFile table(a.table, out);
    table.stream() << qtable_to_json(q, problem).dump(1) << '\n';
    table.close(a.table);
    return kExitOk;
}

struct EvaluateArgs {
    std::string scenario;
    std::string table;
    std::string policy = "greedy";
    std::uint64_t days = 1;
    std::uint64_t seed = 0;
};

inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const ScenarioBundle bundle = load_scenario(a.scenario);
    const ScheduleProblem problem = schedule_problem(bundle.scenario);
    PolicyRates rates;
    if (a.policy == "uniform") {
        rates = evaluate_uniform(problem, a.days, a.seed);
    } else {
        if (a.table.empty()) throw IoError("evaluate needs --table for the greedy policy");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(a.table));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(a.table + ": " + e.what());
        }
        rates = evaluate_policy(qtable_from_json(j, problem), problem, a.days, a.seed);
    }
    out << nlohmann::json{{"encounter_rate", rates.encounter_rate}, {"coverage_rate", rates.coverage_rate}}.dump() << '\n';
    return kExitOk;
}

// Summarises a trace file written by `simulate`.
inline int cmd_report(const std::string& trace_path, std::ostream& out) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw IoError("cannot read " + trace_path);
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t hash = kFnvOffset;
    std::uint64_t stops = 0, notifications = 0;
    std::map<std::string, std::uint64_t> events;
    int prev_status = 1;
    int status = 1;
    while (std::getline(in, line)) {
        ++line_no;
        hash = fnv1a("\n", fnv1a(line, hash));
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
            status = rec.at("status").get<int>();
            for (const auto& e : rec.at("events")) ++events[e.get<std::string>()];
            notifications += rec.at("notifications").size();
        } catch (const nlohmann::json::exception&) {
            throw ParseError("trace line " + std::to_string(line_no) + " is not a trace record");
        }
        if (prev_status == 1 && status == 0) ++stops;
        prev_status = status;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    out << nlohmann::json{{"ticks", line_no},     {"stops", stops},      {"events", events},
                          {"notifications", notifications}, {"final_status", status}, {"trace_hash", std::string(hex)}}
               .dump()
        << '\n';
    return kExitOk;
}

/// Entry point shared by the executable and the tests. `args` excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Animal-aware robotic mower simulator", "mowsafe"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run the tick-level simulation");
    simulate->add_option("--scenario", sim.scenario, "Scenario JSON file")->required();
    simulate->add_option("--ticks", sim.ticks, "Number of ticks to run");
    simulate->add_option("--seed", sim.seed, "Run seed (defaults to the scenario seed)");
    simulate->add_option("--trace", sim.trace, "Trace output (JSON lines, '-' for stdout)");
    simulate->add_option("--report", sim.report, "Report output ('-' for stdout)");
    simulate->add_option("--flag-file", sim.flag_file, "Mirror the detection bit into this file");
    simulate->add_option("--restart-at-tick", sim.restarts, "Inject a manual restart at this tick (repeatable)");
    simulate->add_option("--mode", sim.mode, "Classification task mode")->check(CLI::IsMember({"virtual", "real"}));

    std::string frames;
    DetectorConfig det;
    auto* detect = app.add_subcommand("detect", "Replay a frame stream through the warm-object detector");
    detect->add_option("--frames", frames, "JSON-lines frame stream")->required();
    detect->add_option("--delta-c", det.delta_c, "Neighbour temperature difference threshold");
    detect->add_option("--min-hot-pixels", det.min_hot_pixels, "Hot pixels needed for a detection");

    TrainArgs tr;
    std::optional<double> eps_end;
    auto* train_cmd = app.add_subcommand("train", "Train the mowing scheduler");
    train_cmd->add_option("--scenario", tr.scenario, "Scenario JSON file")->required();
    train_cmd->add_option("--table", tr.table, "Q-table output ('-' for stdout)")->required();
    train_cmd->add_option("--seed", tr.seed);
    train_cmd->add_option("--alpha", tr.hyper.alpha);
    train_cmd->add_option("--gamma", tr.hyper.gamma);
    train_cmd->add_option("--epsilon", tr.hyper.epsilon, "Initial exploration rate");
    train_cmd->add_option("--epsilon-end", eps_end, "Final exploration rate (geometric decay)");
    train_cmd->add_option("--episodes", tr.hyper.episodes);
    train_cmd->add_option("--r-danger", tr.hyper.r_danger);
    train_cmd->add_option("--r-cover", tr.hyper.r_cover);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained schedule");
    evaluate->add_option("--scenario", ev.scenario, "Scenario JSON file")->required();
    evaluate->add_option("--table", ev.table, "Q-table produced by train");
    evaluate->add_option("--policy", ev.policy)->check(CLI::IsMember({"greedy", "uniform"}));
    evaluate->add_option("--days", ev.days);
    evaluate->add_option("--seed", ev.seed);

    std::string trace_path;
    auto* report = app.add_subcommand("report", "Summarise a simulation trace");
    report->add_option("--trace", trace_path, "Trace file written by simulate")->required();

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim, out);
        if (*detect) return cmd_detect(frames, det, out);
        if (*train_cmd) {
            tr.hyper.epsilon_end = eps_end;
            return cmd_train(tr, out);
        }
        if (*evaluate) return cmd_evaluate(ev, out);
        if (*report) return cmd_report(trace_path, out);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace mowsafe::cli
