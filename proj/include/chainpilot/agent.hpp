#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace chainpilot {

/// Exploration schedule. LinearDecay walks start -> end over `decay_steps`
/// action selections and stays at `end` afterwards; Constant ignores the step.
struct EpsilonSchedule {
    enum class Kind : std::uint8_t { Constant, LinearDecay };

    Kind kind = Kind::LinearDecay;
    double start = 1.0;
    double end = 0.05;
    long decay_steps = 1;

    static EpsilonSchedule constant(double eps) {
        return {Kind::Constant, eps, eps, 1};
    }
    static EpsilonSchedule linear(double start, double end, long decay_steps) {
        return {Kind::LinearDecay, start, end, decay_steps < 1 ? 1 : decay_steps};
    }

    double value(long step) const {
        if (kind == Kind::Constant) return start;
        if (step >= decay_steps) return end;
        return start + (end - start) * static_cast<double>(step) /
                           static_cast<double>(decay_steps);
    }
};

struct AgentConfig {
    int obs_dim = 2;
    int n_actions = 2;
    int hidden = 64;
    double lr = 1e-3;
    double gamma = 0.9;
    std::size_t replay_capacity = 10000;
    std::size_t minibatch = 32;
    long target_sync = 50;   // online->target copy cadence, in update steps
    double grad_clip = 10.0; // global gradient-norm ceiling
    EpsilonSchedule epsilon;
    std::uint64_t seed = 1;
};

struct Transition {
    std::vector<double> obs;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_obs;
};

/// One-hidden-layer Q-network trained by TD(0) with experience replay and a
/// periodically synced target copy. Everything is plain double math so runs
/// are bit-reproducible for a given seed.
class DqnAgent {
  public:
    explicit DqnAgent(const AgentConfig& config);

    /// Epsilon-greedy pick, advancing the exploration schedule by one step.
    std::size_t select_action(const std::vector<double>& obs);
    /// Epsilon-greedy pick at an explicit epsilon (schedule untouched).
    std::size_t select_action(const std::vector<double>& obs, double eps);
    /// Argmax of the online network; ties go to the lowest index.
    std::size_t greedy_action(const std::vector<double>& obs) const;

    std::vector<double> q_values(const std::vector<double>& obs) const;

    /// Stores the transition and, once enough experience has accumulated,
    /// runs one minibatch update. Returns the minibatch TD loss (0 when the
    /// buffer is still warming up).
    double learn(const Transition& t);
    /// One additional minibatch update from the replay buffer, without
    /// storing anything new — for reusing experience more than once per
    /// environment step. Returns the TD loss (0 while warming up).
    double replay_update();

    double epsilon() const { return config_.epsilon.value(action_steps_); }
    long action_steps() const { return action_steps_; }
    long learn_calls() const { return update_steps_; }
    const AgentConfig& config() const { return config_; }

    void save_weights(const std::string& path) const;  // throws on I/O error
    void load_weights(const std::string& path);        // throws on bad file

  private:
    // Flat parameter block: w1 (hidden x in), b1, w2 (out x hidden), b2.
    std::size_t w1_at(int j, int i) const;
    std::size_t b1_at(int j) const;
    std::size_t w2_at(int k, int j) const;
    std::size_t b2_at(int k) const;

    std::vector<double> forward(const std::vector<double>& params,
                                const std::vector<double>& obs,
                                std::vector<double>* hidden_out) const;

    AgentConfig config_;
    std::vector<double> online_;
    std::vector<double> target_;
    std::vector<double> adam_m_;
    std::vector<double> adam_v_;
    long adam_t_ = 0;
    std::vector<Transition> replay_;
    std::size_t replay_next_ = 0;
    bool replay_full_ = false;
    long action_steps_ = 0;
    long update_steps_ = 0;
    mutable std::mt19937_64 rng_;
};

}  // namespace chainpilot
