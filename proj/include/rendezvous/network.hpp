#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace rendezvous {

// ============================================================================
// Link model
// ============================================================================

/**
 * Per-link delay (in control periods) and drop probability, indexed
 * [listener * N + source], plus one isotropic sensor-noise level.
 */
struct NetworkModel {
    static constexpr std::uint32_t max_delay_periods = 1000;

    std::size_t robots = 0;
    std::vector<std::uint32_t> delay_periods;
    std::vector<double> drop_probability;
    double sensor_noise_std = 0.0;

    static NetworkModel perfect(std::size_t n) { return uniform(n, 0, 0.0, 0.0); }

    static NetworkModel uniform(std::size_t n, std::uint32_t delay, double drop, double noise) {
        return {n, std::vector<std::uint32_t>(n * n, delay), std::vector<double>(n * n, drop), noise};
    }

    [[nodiscard]] std::uint32_t delay(std::size_t listener, std::size_t source) const {
        return delay_periods.at(listener * robots + source);
    }
    [[nodiscard]] double drop(std::size_t listener, std::size_t source) const {
        return drop_probability.at(listener * robots + source);
    }

    [[nodiscard]] bool is_perfect() const noexcept {
        if (sensor_noise_std != 0.0)
            return false;
        for (std::size_t k = 0; k < delay_periods.size(); ++k)
            if (delay_periods[k] != 0 || drop_probability[k] != 0.0)
                return false;
        return true;
    }

    /// Issues with JSON-pointer paths under /network.
    [[nodiscard]] std::vector<issue> issues() const {
        std::vector<issue> out;
        if (delay_periods.size() != robots * robots)
            out.push_back({"/network/delay_periods", "expected " + std::to_string(robots) + "x" +
                                                         std::to_string(robots) + " entries"});
        if (drop_probability.size() != robots * robots)
            out.push_back({"/network/drop_probability", "expected " + std::to_string(robots) + "x" +
                                                            std::to_string(robots) + " entries"});
        if (!out.empty())
            return out;
        for (std::size_t k = 0; k < delay_periods.size(); ++k) {
            const std::string at = "/" + std::to_string(k / robots) + "/" + std::to_string(k % robots);
            if (delay_periods[k] > max_delay_periods)
                out.push_back({"/network/delay_periods" + at,
                               "delay exceeds the buffer limit of " + std::to_string(max_delay_periods) + " periods"});
            const double p = drop_probability[k];
            if (!(p >= 0.0 && p < 1.0))
                out.push_back({"/network/drop_probability" + at, "drop probability must lie in [0, 1)"});
        }
        if (!(sensor_noise_std >= 0.0) || !std::isfinite(sensor_noise_std))
            out.push_back({"/network/sensor_noise_std", "noise level must be finite and nonnegative"});
        return out;
    }
};

/// A directed measurement: `listener` observes the position of `source`.
struct Link {
    std::size_t listener;
    std::size_t source;
};

// ============================================================================
// Channel state
// ============================================================================

/**
 * Stateful delivery of position samples over the links of a network model.
 * Each link owns a ring of the last delay+1 samples, the last delivered value
 * (initially the source's starting position) and a private generator seeded
 * from (seed, listener, source), so outcomes on one link never depend on how
 * often other links are used.
 */
class NetworkChannel {
public:
    NetworkChannel(NetworkModel model, std::uint64_t seed, std::span<const double> x0, std::size_t state_dim)
        : model_(std::move(model)), seed_(seed), state_dim_(state_dim), x0_(x0.begin(), x0.end()) {
        if (state_dim_ == 0 || x0_.size() != model_.robots * state_dim_)
            throw std::invalid_argument("NetworkChannel: initial positions must have length N*m");
        if (auto problems = model_.issues(); !problems.empty())
            throw validation_error(std::move(problems));
    }

    [[nodiscard]] const NetworkModel& model() const noexcept { return model_; }

    /**
     * Measurement of `sample` (the source's true position at control tick
     * `tick`) as seen by the listener. Must be called once per tick per link
     * with nondecreasing ticks. Returns the sample from tick - delay (the
     * starting position before that exists), or the previous delivery if the
     * packet is dropped, plus fresh Gaussian noise.
     */
    std::vector<double> deliver(Link link, std::span<const double> sample, std::uint64_t tick) {
        if (link.listener >= model_.robots || link.source >= model_.robots)
            throw std::out_of_range("NetworkChannel::deliver: link outside the network");
        if (sample.size() != state_dim_)
            throw std::invalid_argument("NetworkChannel::deliver: sample has wrong dimension");
        LinkState& st = state_for(link);
        if (st.used && tick < st.last_tick)
            throw std::invalid_argument("NetworkChannel::deliver: ticks must be nondecreasing");
        st.used = true;
        st.last_tick = tick;

        const std::size_t delay = model_.delay(link.listener, link.source);
        st.history.emplace_back(sample.begin(), sample.end());
        while (st.history.size() > delay + 1)
            st.history.pop_front();
        // Before `delay` ticks have elapsed, the front is the tick-0 sample, which is x0.
        const std::vector<double>& candidate = st.history.front();

        const double u = st.uniform(st.rng);
        if (!(u < model_.drop(link.listener, link.source)))
            st.last_delivered = candidate;

        std::vector<double> out = st.last_delivered;
        if (model_.sensor_noise_std > 0.0)
            for (auto& v : out)
                v += st.noise(st.rng);
        return out;
    }

private:
    struct LinkState {
        std::mt19937_64 rng;
        std::uniform_real_distribution<double> uniform{0.0, 1.0};
        std::normal_distribution<double> noise;
        std::deque<std::vector<double>> history;
        std::vector<double> last_delivered;
        std::uint64_t last_tick = 0;
        bool used = false;
    };

    LinkState& state_for(Link link) {
        const std::size_t key = link.listener * model_.robots + link.source;
        auto it = links_.find(key);
        if (it != links_.end())
            return it->second;
        std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                          static_cast<std::uint32_t>(link.listener), static_cast<std::uint32_t>(link.source)};
        LinkState st{std::mt19937_64(seq), std::uniform_real_distribution<double>(0.0, 1.0),
                     std::normal_distribution<double>(0.0, model_.sensor_noise_std > 0.0 ? model_.sensor_noise_std : 1.0),
                     {}, {}, 0, false};
        const auto src = std::span<const double>(x0_).subspan(link.source * state_dim_, state_dim_);
        st.last_delivered.assign(src.begin(), src.end());
        return links_.emplace(key, std::move(st)).first->second;
    }

    NetworkModel model_;
    std::uint64_t seed_;
    std::size_t state_dim_;
    std::vector<double> x0_;
    std::map<std::size_t, LinkState> links_;
};

} // namespace rendezvous
