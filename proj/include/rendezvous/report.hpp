#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "consensus.hpp"
#include "scenario_file.hpp"
#include "sim.hpp"
#include "switching.hpp"
#include "topology.hpp"
#include "trajectory.hpp"

namespace rendezvous {

inline constexpr std::string_view version = "1.0.0";

// ============================================================================
// Run summary
// ============================================================================

struct CostSummary {
    double total = 0.0;  // cumulative J at the last sample
    double state = 0.0;  // re-derived by quadrature
    double effort = 0.0; // re-derived by quadrature
    std::vector<double> per_robot;
    double control_energy = 0.0; // integral of |u|^2, exact under the hold
    double v0 = 0.0;

    [[nodiscard]] double effort_share() const noexcept {
        return state + effort > 0.0 ? effort / (state + effort) : 0.0;
    }
    /// J / V(0); undefined when V(0) = 0.
    [[nodiscard]] std::optional<double> j_over_v0() const noexcept {
        return v0 > 0.0 ? std::optional<double>(total / v0) : std::nullopt;
    }
};

inline CostSummary summarize_cost(const Scenario& s, const TrajectoryLog& log) {
    CostSummary c;
    if (log.samples.empty())
        return c;
    const auto acc = integrate_cost(s, log);
    c.total = log.samples.back().cost;
    c.state = acc.state;
    c.effort = acc.effort;
    c.per_robot = log.samples.back().robot_cost;
    c.v0 = log.samples.front().v_quadratic;
    for (std::size_t k = 0; k + 1 < log.samples.size(); ++k) {
        const double h = log.samples[k + 1].t - log.samples[k].t;
        for (double u : log.samples[k].u_applied)
            c.control_energy += h * u * u;
    }
    return c;
}

/// First sat -> interior transition per robot and axis, if any.
inline std::optional<double> empirical_exit_time(const std::vector<RegimeEvent>& events, std::size_t robot,
                                                 std::size_t axis) {
    for (const auto& e : events)
        if (e.robot == robot && e.axis == axis && e.from != Regime::linear_interior &&
            e.to == Regime::linear_interior)
            return e.time;
    return std::nullopt;
}

namespace detail {

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace detail

/**
 * Summary of a run as JSON. A pure function of the scenario and the log:
 * gains, predictions and regime events are recomputed here rather than taken
 * from the log, so a log read back from CSV yields the same report.
 */
inline json build_report(const Scenario& s, const TrajectoryLog& log, const json& overrides = json::object()) {
    if (log.samples.empty())
        throw std::invalid_argument("build_report: empty log");
    const std::size_t n = log.robots;
    const std::size_t m = log.state_dim;
    const ControlLaw law = synthesize(s.model, s.q, s.r, s.bounds);
    const auto& last = log.samples.back();

    json out = json::object();
    out["version"] = std::string(version);
    out["scenario"] = scenario_to_json(s);
    out["overrides"] = overrides;

    json warnings = json::array();
    if (!has_directed_spanning_tree(s.topology))
        warnings.push_back("communication graph has no directed spanning tree; consensus is not expected");
    out["warnings"] = std::move(warnings);

    const auto t_consensus = first_consensus_time(log, s.consensus_tol);
    const double spread = max_pairwise_distance(last.x, n, m);
    json agreement = nullptr;
    if (spread <= s.consensus_tol) {
        std::vector<double> mean(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < m; ++a)
                mean[a] += last.x[i * m + a] / static_cast<double>(n);
        agreement = m == 1 ? json(mean[0]) : json(mean);
    }
    out["consensus"] = {{"tolerance", s.consensus_tol},
                        {"time", detail::optional_number(t_consensus)},
                        {"final_max_pairwise_distance", spread},
                        {"agreement", agreement}};
    out["t_final"] = last.t;
    out["samples"] = log.samples.size();
    out["final_positions"] = per_robot_to_json(last.x, m);

    const auto cost = summarize_cost(s, log);
    out["cost"] = {{"J_total", cost.total},
                   {"J_state", cost.state},
                   {"J_effort", cost.effort},
                   {"effort_share", cost.effort_share()},
                   {"J_per_robot", cost.per_robot},
                   {"control_energy", cost.control_energy},
                   {"V0", cost.v0},
                   {"J_over_V0", detail::optional_number(cost.j_over_v0())}};

    const auto root = spanning_tree_root(s.topology);
    out["graph"] = {{"lambda_min_positive", detail::optional_number(smallest_positive_eigenvalue(s.topology.laplacian()))},
                    {"has_spanning_tree", root.has_value()},
                    {"spanning_tree_root", root ? json(*root) : json(nullptr)},
                    {"undirected", s.topology.is_undirected()}};

    out["gain"] = {{"P", matrix_to_json(law.p())},
                   {"K", matrix_to_json(law.k)},
                   {"care_iterations", law.care.iterations},
                   {"care_residual", law.care.residual_norm}};

    const auto events = detect_regimes(log, law.bounds);
    const auto predictions = predict_switches(law, disagreement(s.topology, s.x0, m));
    json preds = json::array();
    for (const auto& p : predictions)
        preds.push_back({{"robot", p.robot},
                         {"axis", p.axis},
                         {"side", std::string(to_string(p.side))},
                         {"t_s", p.t_s},
                         {"residual", p.residual},
                         {"exit_time_analytic", p.exit_time},
                         {"exit_time_empirical", detail::optional_number(empirical_exit_time(events, p.robot, p.axis))},
                         {"gain", p.gain},
                         {"x0", p.x0},
                         {"u_bound", p.u_bound}});
    json evs = json::array();
    for (const auto& e : events)
        evs.push_back({{"time", e.time},
                       {"robot", e.robot},
                       {"axis", e.axis},
                       {"from", std::string(to_string(e.from))},
                       {"to", std::string(to_string(e.to))}});
    out["switching"] = {{"predictions", std::move(preds)}, {"events", std::move(evs)}};
    return out;
}

/// UTC wall-clock time in ISO 8601; the only nondeterministic report field.
inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json with_timestamp(json report) {
    report["generated_at"] = utc_timestamp();
    return report;
}

} // namespace rendezvous
