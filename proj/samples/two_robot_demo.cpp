// Two scalar robots on a complete graph, built in code rather than from a
// scenario file. Prints the meeting time, the cost and the J / V(0) ratio.

#include <cstdio>

#include "rendezvous/rendezvous.hpp"

int main() {
    using namespace rendezvous;

    Scenario s;
    s.model = RobotModel::single_integrator(1);
    s.topology = complete_graph(2);
    s.x0 = {-1.0, 1.0};
    s.q = Matrix::identity(1);
    s.r = Matrix::identity(1);
    s.bounds = InputBounds::uniform(2, 1, -0.5, 0.5);
    s.control_period = 0.01;
    s.dt = 0.001;
    s.t_end = 10.0;
    s.network = NetworkModel::perfect(2);

    const TrajectoryLog log = simulate(s);
    const CostSummary cost = summarize_cost(s, log);
    const auto met = first_consensus_time(log, s.consensus_tol);

    std::printf("met at t = %.3f s\n", met ? *met : -1.0);
    std::printf("final positions: %.6f %.6f\n", log.samples.back().x[0], log.samples.back().x[1]);
    std::printf("J = %.6f (state %.6f, effort %.6f), V(0) = %.6f, J/V(0) = %.4f\n", cost.total, cost.state,
                cost.effort, cost.v0, cost.j_over_v0().value_or(0.0));
    for (const auto& p : log.predictions)
        std::printf("robot %zu leaves the %s bound: matching root %.4f s, re-entry %.4f s\n", p.robot,
                    p.side == BoundSide::upper ? "upper" : "lower", p.t_s, p.exit_time);
    for (const auto& e : log.events)
        std::printf("t = %.3f s: robot %zu %s -> %s\n", e.time, e.robot, std::string(to_string(e.from)).c_str(),
                    std::string(to_string(e.to)).c_str());
    return 0;
}
