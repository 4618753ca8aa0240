#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "scenario_file.hpp"
#include "trajectory.hpp"

namespace rendezvous {

// ============================================================================
// Trajectory CSV
// ============================================================================
//
// One row per (sample, robot, axis), axis running over max(m, r). Columns that
// do not exist for an axis (x beyond m, controls beyond r) and an undefined
// V_sat are left empty. Numbers carry 9 significant digits; lines end in LF.

inline constexpr std::string_view csv_header = "t,robot,axis,x,u_raw,u_applied,saturated,V_quad,V_sat,J_cum,Ji_cum";

namespace detail {

inline void append_number(std::string& out, double v) {
    if (std::isnan(v))
        return;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += buf;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

inline double parse_field(std::string_view field, const std::string& where) {
    if (field.empty())
        return std::numeric_limits<double>::quiet_NaN();
    const std::string s(field);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw validation_error(where, "not a number: '" + s + "'");
    return v;
}

} // namespace detail

inline std::string trajectory_csv(const TrajectoryLog& log) {
    const std::size_t m = log.state_dim;
    const std::size_t in = log.input_dim;
    const std::size_t axes = std::max(m, in);
    std::string out(csv_header);
    out += '\n';
    for (const auto& s : log.samples)
        for (std::size_t i = 0; i < log.robots; ++i)
            for (std::size_t a = 0; a < axes; ++a) {
                detail::append_number(out, s.t);
                out += ',' + std::to_string(i) + ',' + std::to_string(a) + ',';
                if (a < m)
                    detail::append_number(out, s.x[i * m + a]);
                out += ',';
                if (a < in)
                    detail::append_number(out, s.u_raw[i * in + a]);
                out += ',';
                if (a < in)
                    detail::append_number(out, s.u_applied[i * in + a]);
                out += ',';
                if (a < in)
                    out += s.saturated[i * in + a] ? '1' : '0';
                out += ',';
                detail::append_number(out, s.v_quadratic);
                out += ',';
                detail::append_number(out, s.v_saturated);
                out += ',';
                detail::append_number(out, s.cost);
                out += ',';
                detail::append_number(out, s.robot_cost[i]);
                out += '\n';
            }
    return out;
}

inline void export_csv(const TrajectoryLog& log, const std::string& path) { write_text_file(path, trajectory_csv(log)); }

/**
 * Inverse of trajectory_csv for a team of known shape. Events and predictions
 * are not stored in the file and come back empty.
 */
inline TrajectoryLog parse_trajectory_csv(std::string_view text, std::size_t robots, std::size_t state_dim,
                                          std::size_t input_dim, const std::string& source = "trajectory.csv") {
    TrajectoryLog log;
    log.robots = robots;
    log.state_dim = state_dim;
    log.input_dim = input_dim;
    const std::size_t axes = std::max(state_dim, input_dim);
    const std::size_t rows_per_sample = robots * axes;

    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start < text.size();) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!line.empty())
            lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty() || lines.front() != csv_header)
        throw validation_error(source + ":1", "expected header '" + std::string(csv_header) + "'");
    const std::size_t body = lines.size() - 1;
    if (rows_per_sample == 0 || body == 0 || body % rows_per_sample != 0)
        throw validation_error(source, "row count " + std::to_string(body) + " is not a positive multiple of " +
                                           std::to_string(rows_per_sample) + " (robots x axes)");

    log.samples.resize(body / rows_per_sample);
    for (std::size_t k = 0; k < body; ++k) {
        const std::string where = source + ":" + std::to_string(k + 2);
        const auto f = detail::split_fields(lines[k + 1]);
        if (f.size() != 11)
            throw validation_error(where, "expected 11 fields, got " + std::to_string(f.size()));
        const std::size_t si = k / rows_per_sample;
        const std::size_t i = (k % rows_per_sample) / axes;
        const std::size_t a = k % axes;
        if (detail::parse_field(f[1], where) != static_cast<double>(i) ||
            detail::parse_field(f[2], where) != static_cast<double>(a))
            throw validation_error(where, "rows must be ordered by sample, robot, axis");
        auto& s = log.samples[si];
        if (k % rows_per_sample == 0) {
            s.t = detail::parse_field(f[0], where);
            s.x.assign(robots * state_dim, 0.0);
            s.u_raw.assign(robots * input_dim, 0.0);
            s.u_applied.assign(robots * input_dim, 0.0);
            s.saturated.assign(robots * input_dim, 0);
            s.robot_cost.assign(robots, 0.0);
            s.v_quadratic = detail::parse_field(f[7], where);
            s.v_saturated = detail::parse_field(f[8], where);
            s.cost = detail::parse_field(f[9], where);
        } else if (detail::parse_field(f[0], where) != s.t) {
            throw validation_error(where, "time differs within one sample");
        }
        if (a < state_dim)
            s.x[i * state_dim + a] = detail::parse_field(f[3], where);
        if (a < input_dim) {
            s.u_raw[i * input_dim + a] = detail::parse_field(f[4], where);
            s.u_applied[i * input_dim + a] = detail::parse_field(f[5], where);
            s.saturated[i * input_dim + a] = f[6] == "1";
        }
        if (a == 0)
            s.robot_cost[i] = detail::parse_field(f[10], where);
    }
    return log;
}

inline TrajectoryLog import_csv(const std::string& path, std::size_t robots, std::size_t state_dim,
                                std::size_t input_dim) {
    return parse_trajectory_csv(read_text_file(path), robots, state_dim, input_dim, path);
}

} // namespace rendezvous
