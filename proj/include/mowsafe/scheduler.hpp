#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mowsafe/errors.hpp"
#include "mowsafe/world.hpp"

namespace mowsafe {

// Tabular Q-learning over time-of-day slots. The state is the slot; the
// actions are mow(zone) for each configured zone followed by idle, so action
// index `zones` is idle and ties in argmax favour mowing the first zone.

struct DangerWindow {
    int zone = 0;
    int start_slot = 0;
    int end_slot = 0;  // inclusive
    bool daily = true;
};

struct ScheduleProblem {
    int slots_per_day = 24;
    std::vector<std::string> zone_ids;
    std::vector<DangerWindow> windows;

    int zones() const { return static_cast<int>(zone_ids.size()); }
    int actions() const { return zones() + 1; }
    int idle_action() const { return zones(); }

    bool dangerous(int zone, int slot, std::uint64_t day) const {
        for (const auto& w : windows) {
            if (w.zone != zone || (!w.daily && day != 0)) continue;
            if (slot >= w.start_slot && slot <= w.end_slot) return true;
        }
        return false;
    }
};

/// Zones and the animal appearance windows that fall in them.
inline ScheduleProblem schedule_problem(const Scenario& s) {
    ScheduleProblem p;
    p.slots_per_day = s.clock.slots_per_day;
    for (const auto& z : s.zones) p.zone_ids.push_back(z.id);
    if (p.zone_ids.empty()) throw ValidationError("zones", "the scheduler needs at least one zone");
    for (std::size_t i = 0; i < s.entities.size(); ++i) {
        const auto* w = std::get_if<AppearanceWindow>(&s.entities[i].motion);
        if (!w || !is_animal(s.entities[i].kind)) continue;
        const auto it = std::find(p.zone_ids.begin(), p.zone_ids.end(), w->zone);
        if (it == p.zone_ids.end())
            throw ValidationError("entities[" + std::to_string(i) + "].motion.zone", "unknown zone '" + w->zone + "'");
        p.windows.push_back({static_cast<int>(it - p.zone_ids.begin()), w->start_slot, w->end_slot, w->daily});
    }
    return p;
}

struct Hyperparams {
    double alpha = 0.5;
    double gamma = 0.9;
    double epsilon = 0.3;
    std::optional<double> epsilon_end;  // geometric decay from epsilon to this over the run
    std::uint64_t episodes = 5000;
    double r_danger = -10.0;
    double r_cover = 1.0;
};

inline void validate_hyperparams(const Hyperparams& h) {
    if (!(h.alpha > 0.0 && h.alpha <= 1.0)) throw ValidationError("alpha", "must be in (0, 1]");
    if (!(h.gamma >= 0.0 && h.gamma < 1.0)) throw ValidationError("gamma", "must be in [0, 1)");
    if (!(h.epsilon >= 0.0 && h.epsilon <= 1.0)) throw ValidationError("epsilon", "must be in [0, 1]");
    if (h.epsilon_end && !(*h.epsilon_end >= 0.0 && *h.epsilon_end <= 1.0))
        throw ValidationError("epsilon_end", "must be in [0, 1]");
    if (!(h.r_danger < 0.0)) throw ValidationError("r_danger", "must be negative");
    if (!(h.r_cover > 0.0)) throw ValidationError("r_cover", "must be positive");
}

inline double epsilon_at(const Hyperparams& h, std::uint64_t episode) {
    if (!h.epsilon_end || h.episodes <= 1) return h.epsilon;
    if (h.epsilon == 0.0 || *h.epsilon_end == 0.0) {
        const double t = static_cast<double>(episode) / static_cast<double>(h.episodes - 1);
        return h.epsilon + t * (*h.epsilon_end - h.epsilon);
    }
    const double t = static_cast<double>(episode) / static_cast<double>(h.episodes - 1);
    return h.epsilon * std::pow(*h.epsilon_end / h.epsilon, t);
}

class QTable {
public:
    QTable() = default;
    QTable(int states, int actions)
        : states_(states), actions_(actions), values_(static_cast<std::size_t>(states) * actions, 0.0) {}

    int states() const { return states_; }
    int actions() const { return actions_; }

    double& at(int s, int a) { return values_[index(s, a)]; }
    double at(int s, int a) const { return values_[index(s, a)]; }

    double max_value(int s) const {
        double m = at(s, 0);
        for (int a = 1; a < actions_; ++a) m = std::max(m, at(s, a));
        return m;
    }

    // Lowest index among the maxima.
    int argmax(int s) const {
        int best = 0;
        for (int a = 1; a < actions_; ++a) {
            if (at(s, a) > at(s, best)) best = a;
        }
        return best;
    }

    const std::vector<double>& values() const { return values_; }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    std::size_t index(int s, int a) const {
        if (s < 0 || s >= states_ || a < 0 || a >= actions_) throw ContractViolation("q-table index out of range");
        return static_cast<std::size_t>(s) * actions_ + a;
    }

    int states_ = 0;
    int actions_ = 0;
    std::vector<double> values_;
};

// Zone-slot pairs already mowed in the current day.
using CoveredSet = std::set<std::pair<int, int>>;

/// Penalty when mowing a zone an animal occupies at `slot`, coverage reward
/// for a first safe pass over a zone-slot, zero otherwise (idle or re-mow).
inline double reward(int action, int slot, std::uint64_t day, const ScheduleProblem& p, const Hyperparams& h,
                     const CoveredSet& covered) {
    if (action == p.idle_action()) return 0.0;
    if (p.dangerous(action, slot, day)) return h.r_danger;
    if (covered.contains({action, slot})) return 0.0;
    return h.r_cover;
}

inline void q_update_in_place(QTable& q, int s, int a, double r, int s_next, const Hyperparams& h) {
    double& v = q.at(s, a);
    v += h.alpha * (r + h.gamma * q.max_value(s_next) - v);
}

inline QTable q_update(QTable q, int s, int a, double r, int s_next, const Hyperparams& h) {
    q_update_in_place(q, s, a, r, s_next, h);
    return q;
}

/// Epsilon-greedy. Always consumes one uniform draw so that the random
/// stream does not depend on the table contents.
inline int select_action(const QTable& q, int s, double epsilon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) {
        std::uniform_int_distribution<int> pick(0, q.actions() - 1);
        return pick(rng);
    }
    return q.argmax(s);
}

/// One episode per simulated day; the slot after the last one wraps to the next day's first.
inline QTable train(const ScheduleProblem& p, const Hyperparams& h, std::uint64_t seed) {
    validate_hyperparams(h);
    QTable q(p.slots_per_day, p.actions());
    std::mt19937_64 rng(seed);
    for (std::uint64_t day = 0; day < h.episodes; ++day) {
        const double eps = epsilon_at(h, day);
        CoveredSet covered;
        for (int slot = 0; slot < p.slots_per_day; ++slot) {
            const int a = select_action(q, slot, eps, rng);
            const double r = reward(a, slot, day, p, h, covered);
            if (a != p.idle_action()) covered.insert({a, slot});
            q_update_in_place(q, slot, a, r, (slot + 1) % p.slots_per_day, h);
        }
    }
    return q;
}

struct PolicyRates {
    double encounter_rate = 0.0;  // dangerous zone-slot choices per day
    double coverage_rate = 0.0;   // distinct safe zone-slots mowed per day
};

/// Averages over `days` days, asking `choose(slot, day)` for each action.
template <typename Chooser>
PolicyRates evaluate_with(const ScheduleProblem& p, std::uint64_t days, Chooser&& choose) {
    if (days == 0) return {};
    double encounters = 0.0;
    double covered_total = 0.0;
    for (std::uint64_t day = 0; day < days; ++day) {
        CoveredSet covered;
        for (int slot = 0; slot < p.slots_per_day; ++slot) {
            const int a = choose(slot, day);
            if (a == p.idle_action()) continue;
            if (p.dangerous(a, slot, day)) {
                encounters += 1.0;
            } else {
                covered.insert({a, slot});
            }
        }
        covered_total += static_cast<double>(covered.size());
    }
    return {encounters / static_cast<double>(days), covered_total / static_cast<double>(days)};
}

/// Greedy read-out of `q`. The seed is unused by the greedy policy and kept
/// for interface symmetry with the baseline.
inline PolicyRates evaluate_policy(const QTable& q, const ScheduleProblem& p, std::uint64_t days, std::uint64_t /*seed*/ = 0) {
    return evaluate_with(p, days, [&](int slot, std::uint64_t) { return q.argmax(slot); });
}

inline PolicyRates evaluate_uniform(const ScheduleProblem& p, std::uint64_t days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, p.actions() - 1);
    return evaluate_with(p, days, [&](int, std::uint64_t) { return pick(rng); });
}

/// Closed-form expectation of evaluate_uniform over `days` days. Every day
/// after the first looks the same, since one-off windows only affect day 0.
inline PolicyRates expected_uniform_rates(const ScheduleProblem& p, std::uint64_t days) {
    if (days == 0) return {};
    auto one_day = [&](std::uint64_t day) {
        PolicyRates r;
        for (int slot = 0; slot < p.slots_per_day; ++slot) {
            for (int z = 0; z < p.zones(); ++z) (p.dangerous(z, slot, day) ? r.encounter_rate : r.coverage_rate) += 1.0 / p.actions();
        }
        return r;
    };
    const PolicyRates first = one_day(0);
    const PolicyRates rest = one_day(1);
    const double n = static_cast<double>(days);
    return {(first.encounter_rate + (n - 1.0) * rest.encounter_rate) / n,
            (first.coverage_rate + (n - 1.0) * rest.coverage_rate) / n};
}

// ---------------------------------------------------------------------------
// Persistence: JSON array of {state, action, value}
// ---------------------------------------------------------------------------

inline std::string action_name(const ScheduleProblem& p, int a) {
    return a == p.idle_action() ? std::string("idle") : "mow:" + p.zone_ids[static_cast<std::size_t>(a)];
}

inline nlohmann::json qtable_to_json(const QTable& q, const ScheduleProblem& p) {
    nlohmann::json out = nlohmann::json::array();
    for (int s = 0; s < q.states(); ++s) {
        for (int a = 0; a < q.actions(); ++a) out.push_back({{"state", s}, {"action", action_name(p, a)}, {"value", q.at(s, a)}});
    }
    return out;
}

inline QTable qtable_from_json(const nlohmann::json& j, const ScheduleProblem& p) {
    if (!j.is_array()) throw ParseError("q-table must be a JSON array");
    QTable q(p.slots_per_day, p.actions());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        const std::string where = "q-table entry " + std::to_string(i);
        if (!e.is_object() || !e.contains("state") || !e.contains("action") || !e.contains("value") || e.size() != 3)
            throw ParseError(where + ": expected {state, action, value}");
        if (!e["state"].is_number_integer() || !e["action"].is_string() || !e["value"].is_number())
            throw ParseError(where + ": wrong field types");
        const int s = e["state"].get<int>();
        const std::string name = e["action"].get<std::string>();
        int a = -1;
        for (int k = 0; k < p.actions(); ++k) {
            if (action_name(p, k) == name) a = k;
        }
        if (s < 0 || s >= p.slots_per_day || a < 0) throw ParseError(where + ": unknown state or action '" + name + "'");
        q.at(s, a) = e["value"].get<double>();
    }
    return q;
}

}  // namespace mowsafe
