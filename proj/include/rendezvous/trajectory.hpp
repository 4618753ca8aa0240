#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rendezvous {

enum class BoundSide { upper, lower };

enum class Regime { sat_min, linear_interior, sat_max };

inline std::string_view to_string(BoundSide s) noexcept { return s == BoundSide::upper ? "upper" : "lower"; }

inline std::string_view to_string(Regime r) noexcept {
    switch (r) {
    case Regime::sat_min: return "sat_min";
    case Regime::linear_interior: return "linear_interior";
    case Regime::sat_max: return "sat_max";
    }
    return "?";
}

/// Predicted saturated -> interior switching instant for one robot axis.
struct SwitchPrediction {
    double t_s = 0.0;      // root of the trajectory-matching equality (s)
    double residual = 0.0; // matching residual at t_s
    BoundSide side = BoundSide::lower;
    std::size_t robot = 0;
    std::size_t axis = 0;
    double exit_time = 0.0; // instant the unconstrained control re-enters the bound (s)
    double gain = 0.0;
    double x0 = 0.0;
    double u_bound = 0.0;
};

struct RegimeEvent {
    double time = 0.0;
    std::size_t robot = 0;
    std::size_t axis = 0;
    Regime from = Regime::linear_interior;
    Regime to = Regime::linear_interior;

    friend bool operator==(const RegimeEvent&, const RegimeEvent&) = default;
};

/// One logged instant. Controls are the zero-order-hold values active from t onward.
struct TrajectorySample {
    double t = 0.0;
    std::vector<double> x;         // N*m stacked positions (m)
    std::vector<double> u_raw;     // N*r pre-saturation controls (m/s)
    std::vector<double> u_applied; // N*r clamped controls (m/s)
    std::vector<std::uint8_t> saturated;
    double v_quadratic = 0.0;
    double v_saturated = 0.0; // NaN when the saturated certificate is undefined
    double cost = 0.0;        // cumulative J
    std::vector<double> robot_cost;
};

struct TrajectoryLog {
    std::size_t robots = 0;
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;
    std::vector<TrajectorySample> samples;
    std::vector<RegimeEvent> events;
    std::vector<SwitchPrediction> predictions;
    std::vector<std::string> warnings;
};

} // namespace rendezvous
