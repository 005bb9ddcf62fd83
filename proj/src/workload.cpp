#include "chainpilot/workload.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chainpilot {

MusicPhase music_phase(const WorkloadSpec& spec, int step) {
    return (step / spec.phase_length) % 2 == 0 ? MusicPhase::Update
                                               : MusicPhase::Compute;
}

std::string generator_key(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "k%05d", i);
    return buf;
}

std::string music_key(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "M%04d", i);
    return buf;
}

std::vector<std::pair<std::string, LedgerValue>> genesis_entries(
    const WorkloadSpec& spec, std::uint32_t payload_bytes) {
    std::vector<std::pair<std::string, LedgerValue>> entries;
    entries.reserve(spec.key_count);
    const bool music = spec.family == WorkloadFamily::MusicOscillating;
    for (int i = 0; i < spec.key_count; ++i) {
        LedgerValue v;
        v.payload_bytes = payload_bytes;
        entries.emplace_back(music ? music_key(i) : generator_key(i), v);
    }
    return entries;
}

namespace {

std::vector<ClientSpec> fleet(double org1_rate, double org2_rate) {
    std::vector<ClientSpec> clients;
    for (int i = 1; i <= 10; ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "c%02d", i);
        clients.push_back(ClientSpec{id, i <= 5 ? "Org1" : "Org2",
                                     i <= 5 ? org1_rate : org2_rate});
    }
    return clients;
}

}  // namespace

std::vector<ClientSpec> param_clients() { return fleet(50.0, 50.0); }
std::vector<ClientSpec> music_clients() { return fleet(10.0, 10.0); }
std::vector<ClientSpec> fairness_clients() { return fleet(250.0, 100.0); }

std::pair<std::vector<ClientSpec>, WorkloadSpec> fairness_scenario() {
    WorkloadSpec spec;
    spec.family = WorkloadFamily::SkewedUpdate;
    return {fairness_clients(), spec};
}

std::vector<Submission> generate_step(const WorkloadSpec& spec,
                                      const std::vector<ClientSpec>& clients,
                                      int step, const RateSchedule& schedule,
                                      const AdmissionPolicy& policy,
                                      double step_duration, double step_start,
                                      std::mt19937_64& rng) {
    double fleet_base = 0.0;
    for (const ClientSpec& c : clients) fleet_base += c.base_rate;
    const double mult =
        fleet_base > 0.0 ? schedule.fleet_rate(step, fleet_base) / fleet_base : 0.0;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Submission> out;
    for (const ClientSpec& c : clients) {
        const double rate = c.base_rate * mult * policy.for_org(c.org_id);
        const double expect = rate * step_duration;
        auto count = static_cast<long>(expect);
        if (unit(rng) < expect - static_cast<double>(count)) count++;
        for (long i = 0; i < count; ++i) {
            Submission s;
            s.time = step_start + unit(rng) * step_duration;
            s.client_id = c.client_id;
            s.org_id = c.org_id;
            switch (spec.family) {
                case WorkloadFamily::Update: {
                    s.call.function = ContractFunction::GeneratorUpdate;
                    auto k = static_cast<int>(unit(rng) * spec.key_count);
                    s.call.target_key = generator_key(k < spec.key_count ? k : 0);
                    break;
                }
                case WorkloadFamily::SkewedUpdate: {
                    s.call.function = ContractFunction::GeneratorUpdate;
                    int k;
                    if (unit(rng) < spec.hot_prob) {
                        k = static_cast<int>(unit(rng) * spec.hot_keys);
                        if (k >= spec.hot_keys) k = 0;
                    } else {
                        const int cold = spec.key_count - spec.hot_keys;
                        k = spec.hot_keys + static_cast<int>(unit(rng) * cold);
                        if (k >= spec.key_count) k = spec.hot_keys;
                    }
                    s.call.target_key = generator_key(k);
                    break;
                }
                case WorkloadFamily::MusicOscillating: {
                    s.call.variant = spec.variant;
                    if (music_phase(spec, step) == MusicPhase::Update) {
                        s.call.function = ContractFunction::PlayMusic;
                        auto k = static_cast<int>(unit(rng) * spec.music_hot_keys);
                        s.call.target_key =
                            music_key(k < spec.music_hot_keys ? k : 0);
                    } else {
                        s.call.function = ContractFunction::CalculateRevenue;
                        auto k = static_cast<int>(unit(rng) * spec.key_count);
                        s.call.target_key = music_key(k < spec.key_count ? k : 0);
                    }
                    break;
                }
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

ClientConfig ClientConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read client config: " + path);
    ClientConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        // strip comments and whitespace
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') continue;  // section headers are decorative
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "org1") {
            cfg.org1_rate = std::stod(value);
        } else if (key == "org2") {
            cfg.org2_rate = std::stod(value);
        } else if (key == "variant") {
            if (value == "vanilla" || value == "0") {
                cfg.variant = ContractVariant::Vanilla;
            } else if (value == "delta" || value == "1") {
                cfg.variant = ContractVariant::Delta;
            } else {
                throw std::runtime_error("client config: unknown variant '" + value +
                                         "'");
            }
        }
    }
    return cfg;
}

void ClientConfig::save_atomic(const std::string& path) const {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write client config: " + tmp);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "[admission]\norg1 = %.2f\norg2 = %.2f\n\n[contract]\nvariant "
                      "= %s\n",
                      org1_rate, org2_rate,
                      variant == ContractVariant::Delta ? "delta" : "vanilla");
        out << buf;
        if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace chainpilot
