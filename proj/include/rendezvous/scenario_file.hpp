#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "consensus.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "network.hpp"
#include "sim.hpp"
#include "topology.hpp"

namespace rendezvous {

using json = nlohmann::json;

// ============================================================================
// Scenario file schema
// ============================================================================
//
// {
//   "n": 4,
//   "model": {"a": [[0, 0], [0, 0]], "b": [[1, 0], [0, 1]]},   optional, default
//                                                             single integrator
//   "adjacency": [[...]] | "default" | "complete" | "path",   optional for n = 4
//   "x0": [[-0.2, 0], ...] or [-0.2, ...] when m = 1,
//   "q": 3 | [[...]],  "r": 1 | [[...]],                      scalar means s * I
//   "bounds": {"u_min": -0.5, "u_max": 0.5} | null,           per robot: number,
//                                                             null or r-array
//   "control_period": 0.1, "dt": 0.01, "t_end": 20, "consensus_tol": 1e-3,
//   "network": {"delay_periods": 0 | [[...]], "drop_probability": 0 | [[...]],
//               "sensor_noise_std": 0},
//   "seed": 0,
//   "law_variant": "per_robot" | "laplacian_weighted",
//   "name": "...", "description": "..."                       ignored
// }

inline std::string_view to_string(LawVariant v) noexcept {
    return v == LawVariant::per_robot ? "per_robot" : "laplacian_weighted";
}

inline std::optional<LawVariant> parse_law_variant(std::string_view s) noexcept {
    if (s == "per_robot")
        return LawVariant::per_robot;
    if (s == "laplacian_weighted")
        return LawVariant::laplacian_weighted;
    return std::nullopt;
}

/// Command-line overrides, applied to the document before validation.
struct ScenarioOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> law;
    std::optional<double> t_end;
    std::optional<double> dt;

    [[nodiscard]] bool empty() const noexcept { return !seed && !law && !t_end && !dt; }

    void apply(json& doc) const {
        if (!doc.is_object())
            return;
        if (seed)
            doc["seed"] = *seed;
        if (law)
            doc["law_variant"] = *law;
        if (t_end)
            doc["t_end"] = *t_end;
        if (dt)
            doc["dt"] = *dt;
    }

    [[nodiscard]] json to_json() const {
        json out = json::object();
        if (seed)
            out["seed"] = *seed;
        if (law)
            out["law_variant"] = *law;
        if (t_end)
            out["t_end"] = *t_end;
        if (dt)
            out["dt"] = *dt;
        return out;
    }
};

namespace detail {

class ScenarioReader {
public:
    std::vector<issue> issues;

    void fail(std::string path, std::string message) { issues.push_back({std::move(path), std::move(message)}); }

    std::optional<double> number(const json& j, const std::string& path) {
        if (!j.is_number()) {
            fail(path, "expected a number");
            return std::nullopt;
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            fail(path, "must be finite");
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> number_field(const json& doc, const char* key, double fallback) {
        if (!doc.contains(key))
            return fallback;
        return number(doc.at(key), std::string("/") + key);
    }

    std::optional<Matrix> matrix(const json& j, const std::string& path) {
        if (!j.is_array() || j.empty() || !j.front().is_array()) {
            fail(path, "expected a nonempty array of rows");
            return std::nullopt;
        }
        const std::size_t rows = j.size();
        const std::size_t cols = j.front().size();
        if (cols == 0) {
            fail(path, "rows must be nonempty");
            return std::nullopt;
        }
        std::vector<double> data;
        bool ok = true;
        for (std::size_t i = 0; i < rows; ++i) {
            const std::string row_path = path + "/" + std::to_string(i);
            if (!j[i].is_array() || j[i].size() != cols) {
                fail(row_path, "expected a row of " + std::to_string(cols) + " numbers");
                ok = false;
                continue;
            }
            for (std::size_t c = 0; c < cols; ++c) {
                auto v = number(j[i][c], row_path + "/" + std::to_string(c));
                ok = ok && v.has_value();
                data.push_back(v.value_or(0.0));
            }
        }
        if (!ok)
            return std::nullopt;
        return Matrix::from_row_major(rows, cols, data);
    }

    /// Scalar s means s * I_dim.
    std::optional<Matrix> weight(const json& doc, const char* key, std::size_t dim) {
        const std::string path = std::string("/") + key;
        if (!doc.contains(key)) {
            fail(path, "required field is missing");
            return std::nullopt;
        }
        const json& j = doc.at(key);
        if (j.is_number()) {
            auto v = number(j, path);
            if (!v)
                return std::nullopt;
            return Matrix::identity(dim) * *v;
        }
        return matrix(j, path);
    }

    /// n x n table given as one scalar for every link or as a full matrix.
    std::optional<std::vector<double>> link_table(const json& j, const std::string& path, std::size_t n) {
        if (j.is_number()) {
            auto v = number(j, path);
            if (!v)
                return std::nullopt;
            return std::vector<double>(n * n, *v);
        }
        auto m = matrix(j, path);
        if (!m)
            return std::nullopt;
        if (m->rows() != n || m->cols() != n) {
            fail(path, "expected a scalar or a " + std::to_string(n) + "x" + std::to_string(n) + " matrix, got " +
                           m->shape());
            return std::nullopt;
        }
        return std::vector<double>(m->entries().begin(), m->entries().end());
    }

    /// One side of the bounds: absent/null (unbounded), scalar, or per-robot entries.
    std::vector<double> bound_side(const json& bounds, const char* key, std::size_t n, std::size_t in,
                                   double unbounded) {
        std::vector<double> out(n * in, unbounded);
        if (!bounds.contains(key) || bounds.at(key).is_null())
            return out;
        const std::string path = std::string("/bounds/") + key;
        const json& j = bounds.at(key);
        if (j.is_number()) {
            if (auto v = number(j, path))
                out.assign(n * in, *v);
            return out;
        }
        if (!j.is_array() || j.size() != n) {
            fail(path, "expected a number, null or one entry per robot (" + std::to_string(n) + ")");
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::string p = path + "/" + std::to_string(i);
            const json& e = j[i];
            if (e.is_null())
                continue;
            if (e.is_number()) {
                if (auto v = number(e, p))
                    std::fill(out.begin() + i * in, out.begin() + (i + 1) * in, *v);
            } else if (e.is_array() && e.size() == in) {
                for (std::size_t a = 0; a < in; ++a) {
                    if (e[a].is_null())
                        continue;
                    if (auto v = number(e[a], p + "/" + std::to_string(a)))
                        out[i * in + a] = *v;
                }
            } else {
                fail(p, "expected a number, null or an array of " + std::to_string(in) + " entries");
            }
        }
        return out;
    }
};

inline std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

inline bool path_related(const std::string& a, const std::string& b) {
    auto prefix = [](const std::string& p, const std::string& s) {
        return s.compare(0, p.size(), p) == 0 && (s.size() == p.size() || s[p.size()] == '/');
    };
    return prefix(a, b) || prefix(b, a);
}

} // namespace detail

/// Parses JSON text; syntax errors become a validation error carrying line and column.
inline json parse_scenario_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, column] = detail::line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string what = e.what();
        if (auto pos = what.find(": "); pos != std::string::npos)
            what = what.substr(pos + 2);
        throw validation_error("", "JSON parse error at line " + std::to_string(line) + ", column " +
                                       std::to_string(column) + ": " + what);
    }
}

/// Builds a fully validated scenario, reporting every problem found rather than the first.
inline Scenario scenario_from_json(const json& doc) {
    detail::ScenarioReader rd;
    if (!doc.is_object())
        throw validation_error("", "scenario must be a JSON object");

    static const std::set<std::string> known{"n",   "model", "adjacency",      "x0",      "q",         "r",
                                             "bounds", "control_period", "dt", "t_end", "consensus_tol",
                                             "network", "seed", "law_variant", "name", "description"};
    for (const auto& [key, _] : doc.items())
        if (!known.contains(key))
            rd.fail("/" + key, "unknown field");

    // Robot count.
    std::size_t n = 0;
    if (!doc.contains("n") || !doc.at("n").is_number_integer() || doc.at("n").get<long long>() < 1 ||
        doc.at("n").get<long long>() > 10000)
        rd.fail("/n", "required positive integer (at most 10000)");
    else
        n = doc.at("n").get<std::size_t>();
    const std::size_t robots = n == 0 ? 1 : n;

    // Dynamics, and from them the state and input dimensions.
    Scenario s;
    std::size_t m = 0;
    if (doc.contains("model")) {
        const json& model = doc.at("model");
        if (!model.is_object() || !model.contains("a") || !model.contains("b")) {
            rd.fail("/model", "expected an object with matrices a and b");
        } else {
            auto a = rd.matrix(model.at("a"), "/model/a");
            auto b = rd.matrix(model.at("b"), "/model/b");
            if (a && b) {
                s.model = {*a, *b};
                m = a->rows();
            }
        }
    } else if (doc.contains("x0") && doc.at("x0").is_array() && !doc.at("x0").empty()) {
        const json& first = doc.at("x0").front();
        m = first.is_array() ? first.size() : 1;
        if (m == 0)
            m = 1;
        s.model = RobotModel::single_integrator(m);
    } else {
        m = 1;
        s.model = RobotModel::single_integrator(1);
    }
    if (m == 0) {
        m = 1;
        s.model = RobotModel::single_integrator(1);
    }
    const std::size_t in = s.model.b.cols() == 0 ? 1 : s.model.b.cols();

    // Topology.
    bool topology_ok = false;
    if (!doc.contains("adjacency") || doc.at("adjacency") == "default") {
        if (robots == 4) {
            s.topology = default_topology();
            topology_ok = true;
        } else {
            rd.fail("/adjacency", "required unless n = 4 (the default four-robot graph)");
        }
    } else if (doc.at("adjacency") == "complete") {
        s.topology = complete_graph(robots);
        topology_ok = true;
    } else if (doc.at("adjacency") == "path") {
        s.topology = path_graph(robots);
        topology_ok = true;
    } else if (auto adj = rd.matrix(doc.at("adjacency"), "/adjacency")) {
        if (adj->rows() != robots || adj->cols() != robots) {
            rd.fail("/adjacency", "expected " + std::to_string(robots) + "x" + std::to_string(robots) + ", got " +
                                      adj->shape());
        } else if (auto problems = detail::adjacency_issues(*adj, "/adjacency"); !problems.empty()) {
            for (auto& p : problems)
                rd.issues.push_back(std::move(p));
        } else {
            s.topology = Topology(*adj);
            topology_ok = true;
        }
    }
    if (!topology_ok)
        s.topology = complete_graph(robots); // placeholder; the run is rejected anyway

    // Initial positions.
    if (!doc.contains("x0") || !doc.at("x0").is_array() || doc.at("x0").size() != robots) {
        rd.fail("/x0", "expected one initial position per robot (" + std::to_string(robots) + ")");
        s.x0.assign(robots * m, 0.0);
    } else {
        const json& x0 = doc.at("x0");
        for (std::size_t i = 0; i < robots; ++i) {
            const std::string p = "/x0/" + std::to_string(i);
            if (x0[i].is_number() && m == 1) {
                s.x0.push_back(rd.number(x0[i], p).value_or(0.0));
            } else if (x0[i].is_array() && x0[i].size() == m) {
                for (std::size_t a = 0; a < m; ++a)
                    s.x0.push_back(rd.number(x0[i][a], p + "/" + std::to_string(a)).value_or(0.0));
            } else {
                rd.fail(p, "expected a position of dimension " + std::to_string(m));
                s.x0.insert(s.x0.end(), m, 0.0);
            }
        }
    }

    // Weights.
    s.q = rd.weight(doc, "q", m).value_or(Matrix::identity(m));
    s.r = rd.weight(doc, "r", in).value_or(Matrix::identity(in));

    // Bounds.
    const double inf = std::numeric_limits<double>::infinity();
    s.bounds = InputBounds::unbounded(robots, in);
    if (doc.contains("bounds") && !doc.at("bounds").is_null()) {
        const json& b = doc.at("bounds");
        if (!b.is_object()) {
            rd.fail("/bounds", "expected an object with u_min and u_max, or null");
        } else {
            for (const auto& [key, _] : b.items())
                if (key != "u_min" && key != "u_max")
                    rd.fail("/bounds/" + key, "unknown field");
            s.bounds.lower = rd.bound_side(b, "u_min", robots, in, -inf);
            s.bounds.upper = rd.bound_side(b, "u_max", robots, in, inf);
        }
    }

    // Timing.
    s.control_period = rd.number_field(doc, "control_period", 0.1).value_or(0.1);
    s.dt = rd.number_field(doc, "dt", 0.01).value_or(0.01);
    s.t_end = rd.number_field(doc, "t_end", 20.0).value_or(20.0);
    s.consensus_tol = rd.number_field(doc, "consensus_tol", 1e-3).value_or(1e-3);

    // Network.
    s.network = NetworkModel::perfect(robots);
    if (doc.contains("network")) {
        const json& net = doc.at("network");
        if (!net.is_object()) {
            rd.fail("/network", "expected an object");
        } else {
            for (const auto& [key, _] : net.items())
                if (key != "delay_periods" && key != "drop_probability" && key != "sensor_noise_std")
                    rd.fail("/network/" + key, "unknown field");
            if (net.contains("delay_periods")) {
                if (auto d = rd.link_table(net.at("delay_periods"), "/network/delay_periods", robots)) {
                    for (std::size_t k = 0; k < d->size(); ++k) {
                        const double v = (*d)[k];
                        if (v < 0.0 || v != std::floor(v) || v > 1e9)
                            rd.fail("/network/delay_periods" +
                                        (net.at("delay_periods").is_number()
                                             ? std::string()
                                             : "/" + std::to_string(k / robots) + "/" + std::to_string(k % robots)),
                                    "delay must be a nonnegative integer number of control periods");
                        else
                            s.network.delay_periods[k] = static_cast<std::uint32_t>(v);
                    }
                }
            }
            if (net.contains("drop_probability"))
                if (auto p = rd.link_table(net.at("drop_probability"), "/network/drop_probability", robots))
                    s.network.drop_probability = *p;
            if (net.contains("sensor_noise_std"))
                s.network.sensor_noise_std = rd.number(net.at("sensor_noise_std"), "/network/sensor_noise_std").value_or(0.0);
        }
    }

    // Seed and law.
    if (doc.contains("seed")) {
        const json& seed = doc.at("seed");
        if (seed.is_number_unsigned())
            s.seed = seed.get<std::uint64_t>();
        else if (seed.is_number_integer() && seed.get<long long>() >= 0)
            s.seed = static_cast<std::uint64_t>(seed.get<long long>());
        else
            rd.fail("/seed", "expected a nonnegative integer");
    }
    if (doc.contains("law_variant")) {
        const json& law = doc.at("law_variant");
        std::optional<LawVariant> v;
        if (law.is_string())
            v = parse_law_variant(law.get<std::string>());
        if (v)
            s.law = *v;
        else
            rd.fail("/law_variant", "expected \"per_robot\" or \"laplacian_weighted\"");
    }

    // Semantic checks, skipping anything already reported at or below the same path.
    auto problems = std::move(rd.issues);
    for (auto& semantic : s.issues()) {
        bool related = false;
        for (const auto& p : problems)
            related = related || detail::path_related(p.path, semantic.path);
        if (!related)
            problems.push_back(std::move(semantic));
    }
    if (!problems.empty())
        throw validation_error(std::move(problems));
    return s;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw io_error("failed reading " + path);
    return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw io_error("cannot open " + path + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out)
        throw io_error("failed writing " + path);
}

/// Reads, applies overrides, and validates. Returns the document as validated alongside the scenario.
inline std::pair<Scenario, json> load_scenario_document(const std::string& path, const ScenarioOverrides& overrides = {}) {
    json doc = parse_scenario_text(read_text_file(path));
    overrides.apply(doc);
    Scenario s = scenario_from_json(doc);
    return {std::move(s), std::move(doc)};
}

inline Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides = {}) {
    return load_scenario_document(path, overrides).first;
}

// ============================================================================
// Echo
// ============================================================================

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Stacked vector as one entry per robot (plain numbers when the dimension is 1). Infinities become null.
inline json per_robot_to_json(std::span<const double> v, std::size_t dim) {
    auto value = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    json out = json::array();
    for (std::size_t i = 0; i * dim < v.size(); ++i) {
        if (dim == 1) {
            out.push_back(value(v[i]));
            continue;
        }
        json row = json::array();
        for (std::size_t a = 0; a < dim; ++a)
            row.push_back(value(v[i * dim + a]));
        out.push_back(std::move(row));
    }
    return out;
}

/// Canonical, fully explicit form; scenario_from_json(scenario_to_json(s)) reproduces s.
inline json scenario_to_json(const Scenario& s) {
    const std::size_t n = s.robots();
    json net = json::object();
    json delays = json::array(), drops = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json drow = json::array(), prow = json::array();
        for (std::size_t j = 0; j < n; ++j) {
            drow.push_back(s.network.delay(i, j));
            prow.push_back(s.network.drop(i, j));
        }
        delays.push_back(std::move(drow));
        drops.push_back(std::move(prow));
    }
    net["delay_periods"] = std::move(delays);
    net["drop_probability"] = std::move(drops);
    net["sensor_noise_std"] = s.network.sensor_noise_std;

    json out = json::object();
    out["n"] = n;
    out["model"] = {{"a", matrix_to_json(s.model.a)}, {"b", matrix_to_json(s.model.b)}};
    out["adjacency"] = matrix_to_json(s.topology.adjacency());
    out["x0"] = per_robot_to_json(s.x0, s.state_dim());
    out["q"] = matrix_to_json(s.q);
    out["r"] = matrix_to_json(s.r);
    out["bounds"] = {{"u_min", per_robot_to_json(s.bounds.lower, s.bounds.input_dim)},
                     {"u_max", per_robot_to_json(s.bounds.upper, s.bounds.input_dim)}};
    out["control_period"] = s.control_period;
    out["dt"] = s.dt;
    out["t_end"] = s.t_end;
    out["consensus_tol"] = s.consensus_tol;
    out["network"] = std::move(net);
    out["seed"] = s.seed;
    out["law_variant"] = std::string(to_string(s.law));
    return out;
}

} // namespace rendezvous
