// Command-line front end: gain synthesis, single runs, switching predictions,
// Q/R sweeps and report regeneration from an exported trajectory.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rendezvous/rendezvous.hpp"

namespace fs = std::filesystem;
using namespace rendezvous;

namespace {

enum ExitCode { ok = 0, unexpected = 1, invalid = 2, numeric = 3, io = 4 };

struct Options {
    std::string scenario;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> law;
    std::optional<double> t_end;
    std::optional<double> dt;
    std::vector<double> q_values{1.0, 3.0, 20.0};
    std::vector<double> r_values{1.0, 5.0};
    std::string csv;

    [[nodiscard]] ScenarioOverrides overrides() const { return {seed, law, t_end, dt}; }
};

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw io_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

json complex_list(const std::vector<std::complex<double>>& values) {
    json out = json::array();
    for (const auto& v : values)
        out.push_back({v.real(), v.imag()});
    return out;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ============================================================================
// Commands
// ============================================================================

int run_gain(const Options& o) {
    const Scenario s = load_scenario(o.scenario, o.overrides());
    const ControlLaw law = synthesize(s.model, s.q, s.r, s.bounds);
    const Matrix bk = s.model.b * law.k;
    const Matrix& l = s.topology.laplacian();
    const Matrix coupling = s.law == LawVariant::per_robot ? l : l * l;
    const Matrix team = kron(Matrix::identity(s.robots()), s.model.a) - kron(coupling, bk);
    print({{"P", matrix_to_json(law.p())},
           {"K", matrix_to_json(law.k)},
           {"care_iterations", law.care.iterations},
           {"care_residual", law.care.residual_norm},
           {"robot_closed_loop_eigenvalues", complex_list(eigenvalues(s.model.a - bk))},
           {"team_closed_loop_eigenvalues", complex_list(eigenvalues(team))},
           {"law_variant", std::string(to_string(s.law))}});
    return ok;
}

int run_simulate(const Options& o) {
    const Scenario s = load_scenario(o.scenario, o.overrides());
    const TrajectoryLog log = simulate(s);
    ensure_dir(o.out_dir);
    const std::string csv = join(o.out_dir, "trajectory.csv");
    const std::string report_path = join(o.out_dir, "report.json");
    export_csv(log, csv);
    const json report = build_report(s, log, o.overrides().to_json());
    write_text_file(report_path, with_timestamp(report).dump(2) + "\n");
    for (const auto& w : log.warnings)
        std::cerr << "warning: " << w << '\n';
    print({{"consensus_time", report["consensus"]["time"]},
           {"J_total", report["cost"]["J_total"]},
           {"trajectory", csv},
           {"report", report_path}});
    return ok;
}

int run_switching(const Options& o) {
    const Scenario s = load_scenario(o.scenario, o.overrides());
    const ControlLaw law = synthesize(s.model, s.q, s.r, s.bounds);
    const auto eps0 = disagreement(s.topology, s.x0, s.state_dim());
    const auto predictions = predict_switches(law, eps0);
    std::optional<MatchingSystem> sys;
    if (s.state_dim() == s.input_dim())
        sys = matching_system(s.topology, s.model, law);

    json list = json::array();
    for (const auto& p : predictions) {
        json item = {{"robot", p.robot},     {"axis", p.axis},     {"side", std::string(to_string(p.side))},
                     {"t_s", p.t_s},         {"residual", p.residual}, {"exit_time_analytic", p.exit_time},
                     {"gain", p.gain},       {"x0", p.x0},         {"u_bound", p.u_bound}};
        // Stacked equality at the scalar root, with both regimes started from eps(0). Defined only
        // when every bound on the chosen side is finite.
        json stacked = nullptr;
        if (sys) {
            try {
                stacked = matching_residual(p.t_s, p.side, eps0.epsilon, eps0.epsilon, *sys);
            } catch (const std::invalid_argument&) {
            }
        }
        item["stacked_residual"] = stacked;
        list.push_back(std::move(item));
    }
    print({{"predictions", std::move(list)}});
    return ok;
}

int run_sweep(const Options& o) {
    auto [base, doc] = load_scenario_document(o.scenario, o.overrides());
    (void)base;
    ensure_dir(o.out_dir);
    json cells = json::array();
    for (double q : o.q_values)
        for (double r : o.r_values) {
            json cell_doc = doc;
            cell_doc["q"] = q;
            cell_doc["r"] = r;
            const Scenario s = scenario_from_json(cell_doc);
            const TrajectoryLog log = simulate(s);
            json overrides = o.overrides().to_json();
            overrides["q"] = q;
            overrides["r"] = r;
            const json report = build_report(s, log, overrides);
            const std::string file = "report_q" + label(q) + "_r" + label(r) + ".json";
            write_text_file(join(o.out_dir, file), with_timestamp(report).dump(2) + "\n");
            cells.push_back({{"q", q},
                             {"r", r},
                             {"report", file},
                             {"consensus_time", report["consensus"]["time"]},
                             {"J_total", report["cost"]["J_total"]},
                             {"effort_share", report["cost"]["effort_share"]},
                             {"control_energy", report["cost"]["control_energy"]}});
        }
    json index = {{"version", std::string(version)}, {"scenario", o.scenario}, {"cells", cells}};
    write_text_file(join(o.out_dir, "index.json"), with_timestamp(index).dump(2) + "\n");
    print(index);
    return ok;
}

int run_report(const Options& o) {
    const Scenario s = load_scenario(o.scenario, o.overrides());
    const std::string csv = o.csv.empty() ? join(o.out_dir, "trajectory.csv") : o.csv;
    const TrajectoryLog log = import_csv(csv, s.robots(), s.state_dim(), s.input_dim());
    json overrides = o.overrides().to_json();
    const json report = with_timestamp(build_report(s, log, overrides));
    ensure_dir(o.out_dir);
    write_text_file(join(o.out_dir, "report_from_csv.json"), report.dump(2) + "\n");
    print(report);
    return ok;
}

// ============================================================================
// Error reporting
// ============================================================================

int fail(ExitCode code, std::string_view kind, const std::string& message, const std::vector<issue>& issues = {}) {
    json err = {{"kind", kind}, {"message", message}};
    if (!issues.empty()) {
        json list = json::array();
        for (const auto& i : issues)
            list.push_back({{"path", i.path}, {"message", i.message}});
        err["issues"] = std::move(list);
    }
    std::cerr << json{{"error", err}}.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal rendezvous of robot teams under input bounds"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("scenario", o.scenario, "Scenario JSON file")->required();
        cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
        cmd->add_option("--seed", o.seed, "Override the scenario seed");
        cmd->add_option("--law", o.law, "Override the control law")
            ->check(CLI::IsMember({"per_robot", "laplacian_weighted"}));
        cmd->add_option("--t-end", o.t_end, "Override the horizon (s)");
        cmd->add_option("--dt", o.dt, "Override the integration step (s)");
    };

    auto* gain = app.add_subcommand("gain", "Print P, K and closed-loop eigenvalues");
    auto* sim = app.add_subcommand("simulate", "Run a scenario; write trajectory.csv and report.json");
    auto* sw = app.add_subcommand("switching", "Predict switching instants of initially saturated robots");
    auto* sweep = app.add_subcommand("sweep", "Run a grid of scalar q and r weights");
    auto* rep = app.add_subcommand("report", "Rebuild the report from an exported trajectory");
    for (auto* cmd : {gain, sim, sw, sweep, rep})
        add_common(cmd);
    sweep->add_option("--q", o.q_values, "State weights")->delimiter(',')->capture_default_str();
    sweep->add_option("--r", o.r_values, "Effort weights")->delimiter(',')->capture_default_str();
    rep->add_option("--csv", o.csv, "Trajectory CSV (default <out>/trajectory.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(invalid, "usage", e.what());
    }

    try {
        if (*gain)
            return run_gain(o);
        if (*sim)
            return run_simulate(o);
        if (*sw)
            return run_switching(o);
        if (*sweep)
            return run_sweep(o);
        return run_report(o);
    } catch (const validation_error& e) {
        return fail(invalid, "validation", e.what(), e.issues());
    } catch (const numeric_error& e) {
        return fail(numeric, "numeric", e.what());
    } catch (const io_error& e) {
        return fail(io, "io", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(invalid, "validation", e.what());
    } catch (const std::exception& e) {
        return fail(unexpected, "internal", e.what());
    }
}
