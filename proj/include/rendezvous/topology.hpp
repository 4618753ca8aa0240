#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "matops.hpp"
#include "matrix.hpp"

namespace rendezvous {

// Edge convention used throughout the library: adjacency(i, j) > 0 means
// robot i listens to robot j (j is in the neighbor set of i), so information
// flows j -> i. Row i of the Laplacian then collects exactly the terms of
// robot i's control law, L = D - A with d_ii = sum_j a_ij.

namespace detail {

inline std::vector<issue> adjacency_issues(const Matrix& adjacency, const std::string& base) {
    std::vector<issue> out;
    if (!adjacency.is_square() || adjacency.empty()) {
        out.push_back({base, "adjacency must be a nonempty square matrix, got " + adjacency.shape()});
        return out;
    }
    for (std::size_t i = 0; i < adjacency.rows(); ++i)
        for (std::size_t j = 0; j < adjacency.cols(); ++j) {
            const double w = adjacency(i, j);
            const std::string path = base + "/" + std::to_string(i) + "/" + std::to_string(j);
            if (i == j && w != 0.0)
                out.push_back({path, "diagonal entries must be zero (no self loops)"});
            else if (w < 0.0)
                out.push_back({path, "edge weights must be nonnegative"});
        }
    return out;
}

} // namespace detail

/// L = D - A. Rejects negative weights and nonzero diagonal entries.
inline Matrix laplacian_of(const Matrix& adjacency) {
    if (auto issues = detail::adjacency_issues(adjacency, "/adjacency"); !issues.empty())
        throw validation_error(std::move(issues));
    const std::size_t n = adjacency.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            degree += adjacency(i, j);
            l(i, j) = -adjacency(i, j);
        }
        l(i, i) = degree;
    }
    return l;
}

/// Communication graph with its derived Laplacian. Immutable.
class Topology {
public:
    Topology() = default;
    explicit Topology(Matrix adjacency) : adjacency_(std::move(adjacency)), laplacian_(laplacian_of(adjacency_)) {
        neighbors_.resize(adjacency_.rows());
        for (std::size_t i = 0; i < adjacency_.rows(); ++i)
            for (std::size_t j = 0; j < adjacency_.cols(); ++j)
                if (adjacency_(i, j) > 0.0)
                    neighbors_[i].push_back(j);
    }

    [[nodiscard]] std::size_t size() const noexcept { return adjacency_.rows(); }
    [[nodiscard]] const Matrix& adjacency() const noexcept { return adjacency_; }
    [[nodiscard]] const Matrix& laplacian() const noexcept { return laplacian_; }
    [[nodiscard]] double weight(std::size_t i, std::size_t j) const noexcept { return adjacency_(i, j); }

    /// Robots that robot i listens to.
    [[nodiscard]] const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }

    [[nodiscard]] bool is_undirected() const noexcept { return adjacency_.is_symmetric(0.0); }

private:
    Matrix adjacency_;
    Matrix laplacian_;
    std::vector<std::vector<std::size_t>> neighbors_;
};

/// Nodes reachable from `root` when information flows j -> i for a_ij > 0.
inline std::vector<bool> reachable_from(const Topology& t, std::size_t root) {
    const std::size_t n = t.size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{root};
    seen[root] = true;
    while (!stack.empty()) {
        const std::size_t j = stack.back();
        stack.pop_back();
        for (std::size_t i = 0; i < n; ++i)
            if (!seen[i] && t.weight(i, j) > 0.0) {
                seen[i] = true;
                stack.push_back(i);
            }
    }
    return seen;
}

/// First node (lowest index) whose information reaches every robot.
inline std::optional<std::size_t> spanning_tree_root(const Topology& t) {
    for (std::size_t r = 0; r < t.size(); ++r) {
        const auto seen = reachable_from(t, r);
        bool all = true;
        for (bool s : seen)
            all = all && s;
        if (all)
            return r;
    }
    return std::nullopt;
}

inline bool has_directed_spanning_tree(const Topology& t) { return spanning_tree_root(t).has_value(); }

/**
 * Smallest real part among Laplacian eigenvalues above 1e-9; governs the
 * convergence rate of the consensus dynamics. Empty for an edgeless graph.
 */
inline std::optional<double> smallest_positive_eigenvalue(const Matrix& laplacian) {
    std::optional<double> best;
    for (const auto& ev : eigenvalues(laplacian))
        if (ev.real() > 1e-9 && (!best || ev.real() < *best))
            best = ev.real();
    return best;
}

// ============================================================================
// Stock graphs
// ============================================================================

inline Topology complete_graph(std::size_t n) {
    Matrix a(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        a(i, i) = 0.0;
    return Topology(std::move(a));
}

/// Undirected path 0 - 1 - ... - (n-1).
inline Topology path_graph(std::size_t n) {
    Matrix a(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        a(i, i + 1) = a(i + 1, i) = 1.0;
    return Topology(std::move(a));
}

/// Directed chain 0 -> 1 -> ... -> (n-1): robot i + 1 listens to robot i.
inline Topology directed_chain(std::size_t n) {
    Matrix a(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        a(i + 1, i) = 1.0;
    return Topology(std::move(a));
}

/**
 * Default four-robot graph. Directed and weight balanced (in-degree equals
 * out-degree at every node), made of the cycles 2 -> 1 -> 2 and
 * 2 -> 0 -> 3 -> 2 (0-indexed). Robot 2, the third robot, reaches every other
 * robot within two hops. Balance makes 1^T L = 0, so the mean of the
 * positions is conserved and the team meets at the average.
 */
inline Topology default_topology() {
    Matrix a(4, 4);
    a(1, 2) = 1.0; // 2 -> 1
    a(2, 1) = 1.0; // 1 -> 2
    a(0, 2) = 1.0; // 2 -> 0
    a(3, 0) = 1.0; // 0 -> 3
    a(2, 3) = 1.0; // 3 -> 2
    return Topology(std::move(a));
}

} // namespace rendezvous
