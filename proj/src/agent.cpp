#include "chainpilot/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chainpilot {

namespace {
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

DqnAgent::DqnAgent(const AgentConfig& config) : config_(config), rng_(config.seed) {
    if (config_.obs_dim < 1 || config_.n_actions < 1 || config_.hidden < 1)
        throw std::invalid_argument("agent dimensions must be positive");
    if (config_.minibatch < 1 || config_.replay_capacity < config_.minibatch)
        throw std::invalid_argument("replay capacity must hold a minibatch");

    const std::size_t n = static_cast<std::size_t>(config_.hidden) * config_.obs_dim +
                          config_.hidden +
                          static_cast<std::size_t>(config_.n_actions) * config_.hidden +
                          config_.n_actions;
    online_.resize(n);
    const double lim1 = 1.0 / std::sqrt(static_cast<double>(config_.obs_dim));
    const double lim2 = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
    std::uniform_real_distribution<double> u1(-lim1, lim1);
    std::uniform_real_distribution<double> u2(-lim2, lim2);
    for (int j = 0; j < config_.hidden; ++j) {
        for (int i = 0; i < config_.obs_dim; ++i) online_[w1_at(j, i)] = u1(rng_);
        online_[b1_at(j)] = 0.0;
    }
    for (int k = 0; k < config_.n_actions; ++k) {
        for (int j = 0; j < config_.hidden; ++j) online_[w2_at(k, j)] = u2(rng_);
        online_[b2_at(k)] = 0.0;
    }
    target_ = online_;
    adam_m_.assign(n, 0.0);
    adam_v_.assign(n, 0.0);
    replay_.reserve(config_.replay_capacity);
}

std::size_t DqnAgent::w1_at(int j, int i) const {
    return static_cast<std::size_t>(j) * config_.obs_dim + i;
}
std::size_t DqnAgent::b1_at(int j) const {
    return static_cast<std::size_t>(config_.hidden) * config_.obs_dim + j;
}
std::size_t DqnAgent::w2_at(int k, int j) const {
    return static_cast<std::size_t>(config_.hidden) * config_.obs_dim + config_.hidden +
           static_cast<std::size_t>(k) * config_.hidden + j;
}
std::size_t DqnAgent::b2_at(int k) const {
    return static_cast<std::size_t>(config_.hidden) * config_.obs_dim + config_.hidden +
           static_cast<std::size_t>(config_.n_actions) * config_.hidden + k;
}

std::vector<double> DqnAgent::forward(const std::vector<double>& params,
                                      const std::vector<double>& obs,
                                      std::vector<double>* hidden_out) const {
    if (obs.size() != static_cast<std::size_t>(config_.obs_dim))
        throw std::invalid_argument("observation dimension mismatch");
    std::vector<double> h(config_.hidden);
    for (int j = 0; j < config_.hidden; ++j) {
        double acc = params[b1_at(j)];
        for (int i = 0; i < config_.obs_dim; ++i)
            acc += params[w1_at(j, i)] * obs[static_cast<std::size_t>(i)];
        h[static_cast<std::size_t>(j)] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> q(config_.n_actions);
    for (int k = 0; k < config_.n_actions; ++k) {
        double acc = params[b2_at(k)];
        for (int j = 0; j < config_.hidden; ++j)
            acc += params[w2_at(k, j)] * h[static_cast<std::size_t>(j)];
        q[static_cast<std::size_t>(k)] = acc;
    }
    if (hidden_out) *hidden_out = std::move(h);
    return q;
}

std::vector<double> DqnAgent::q_values(const std::vector<double>& obs) const {
    return forward(online_, obs, nullptr);
}

std::size_t DqnAgent::greedy_action(const std::vector<double>& obs) const {
    const std::vector<double> q = forward(online_, obs, nullptr);
    std::size_t best = 0;
    for (std::size_t k = 1; k < q.size(); ++k)
        if (q[k] > q[best]) best = k;
    return best;
}

std::size_t DqnAgent::select_action(const std::vector<double>& obs) {
    const double eps = config_.epsilon.value(action_steps_);
    action_steps_++;
    return select_action(obs, eps);
}

std::size_t DqnAgent::select_action(const std::vector<double>& obs, double eps) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng_) < eps) {
        std::uniform_int_distribution<std::size_t> pick(
            0, static_cast<std::size_t>(config_.n_actions) - 1);
        return pick(rng_);
    }
    return greedy_action(obs);
}

double DqnAgent::learn(const Transition& t) {
    if (replay_.size() < config_.replay_capacity) {
        replay_.push_back(t);
    } else {
        replay_[replay_next_] = t;
        replay_full_ = true;
    }
    replay_next_ = (replay_next_ + 1) % config_.replay_capacity;
    return replay_update();
}

double DqnAgent::replay_update() {
    update_steps_++;
    if (replay_.size() < config_.minibatch) {
        if (update_steps_ % config_.target_sync == 0) target_ = online_;
        return 0.0;
    }

    // Sample the minibatch (with replacement), build TD targets off the
    // frozen copy, then take one clipped Adam step on the online net.
    const std::size_t B = config_.minibatch;
    std::uniform_int_distribution<std::size_t> pick(0, replay_.size() - 1);
    std::vector<double> grad(online_.size(), 0.0);
    double loss = 0.0;
    std::vector<double> h;
    for (std::size_t b = 0; b < B; ++b) {
        const Transition& tr = replay_[pick(rng_)];
        const std::vector<double> q_next = forward(target_, tr.next_obs, nullptr);
        const double y =
            tr.reward + config_.gamma * *std::max_element(q_next.begin(), q_next.end());
        const std::vector<double> q = forward(online_, tr.obs, &h);
        const double err = q[tr.action] - y;
        loss += err * err / static_cast<double>(B);

        const double g = 2.0 * err / static_cast<double>(B);
        const int a = static_cast<int>(tr.action);
        grad[b2_at(a)] += g;
        for (int j = 0; j < config_.hidden; ++j) {
            const double hj = h[static_cast<std::size_t>(j)];
            grad[w2_at(a, j)] += g * hj;
            if (hj <= 0.0) continue;  // ReLU gate
            const double gh = g * online_[w2_at(a, j)];
            grad[b1_at(j)] += gh;
            for (int i = 0; i < config_.obs_dim; ++i)
                grad[w1_at(j, i)] += gh * tr.obs[static_cast<std::size_t>(i)];
        }
    }

    double norm_sq = 0.0;
    for (double g : grad) norm_sq += g * g;
    const double norm = std::sqrt(norm_sq);
    if (norm > config_.grad_clip && norm > 0.0) {
        const double scale = config_.grad_clip / norm;
        for (double& g : grad) g *= scale;
    }

    adam_t_++;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_t_));
    for (std::size_t p = 0; p < online_.size(); ++p) {
        adam_m_[p] = kAdamBeta1 * adam_m_[p] + (1.0 - kAdamBeta1) * grad[p];
        adam_v_[p] = kAdamBeta2 * adam_v_[p] + (1.0 - kAdamBeta2) * grad[p] * grad[p];
        online_[p] -= config_.lr * (adam_m_[p] / bc1) /
                      (std::sqrt(adam_v_[p] / bc2) + kAdamEps);
    }

    if (update_steps_ % config_.target_sync == 0) target_ = online_;
    return loss;
}

void DqnAgent::save_weights(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write weights: " + path);
    out << "qnet-v1 " << config_.obs_dim << ' ' << config_.hidden << ' '
        << config_.n_actions << '\n';
    char buf[32];
    auto emit_row = [&](std::size_t base, int count) {
        for (int i = 0; i < count; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", online_[base + i]);
            out << buf << (i + 1 == count ? '\n' : ' ');
        }
    };
    for (int j = 0; j < config_.hidden; ++j) emit_row(w1_at(j, 0), config_.obs_dim);
    emit_row(b1_at(0), config_.hidden);
    for (int k = 0; k < config_.n_actions; ++k) emit_row(w2_at(k, 0), config_.hidden);
    emit_row(b2_at(0), config_.n_actions);
    if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

void DqnAgent::load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read weights: " + path);
    std::string tag;
    int in_dim = 0, hidden = 0, out_dim = 0;
    if (!(in >> tag >> in_dim >> hidden >> out_dim) || tag != "qnet-v1")
        throw std::runtime_error("unrecognized weight file: " + path);
    if (in_dim != config_.obs_dim || hidden != config_.hidden ||
        out_dim != config_.n_actions) {
        std::ostringstream msg;
        msg << "weight shape " << in_dim << 'x' << hidden << 'x' << out_dim
            << " does not match agent " << config_.obs_dim << 'x' << config_.hidden
            << 'x' << config_.n_actions;
        throw std::runtime_error(msg.str());
    }
    for (double& p : online_)
        if (!(in >> p)) throw std::runtime_error("truncated weight file: " + path);
    target_ = online_;
}

}  // namespace chainpilot
