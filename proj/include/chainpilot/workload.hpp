#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chainpilot/sim.hpp"

namespace chainpilot {

struct ClientSpec {
    std::string client_id;
    std::string org_id;  // "Org1" | "Org2"
    double base_rate = 0.0;  // TPS
};

/// Fleet-level send-rate schedule: `rates` are total offered TPS, cycled
/// every `phase_length` learning steps. Empty `rates` means each client just
/// sends at its base rate.
struct RateSchedule {
    int phase_length = 100;
    std::vector<double> rates;

    double fleet_rate(int step, double fleet_base) const {
        if (rates.empty()) return fleet_base;
        return rates[static_cast<std::size_t>(step / phase_length) % rates.size()];
    }
};

enum class WorkloadFamily : std::uint8_t { Update, SkewedUpdate, MusicOscillating };

enum class MusicPhase : std::uint8_t { Update, Compute };

struct WorkloadSpec {
    WorkloadFamily family = WorkloadFamily::Update;
    int key_count = 10000;   // initialized ledger keys
    int hot_keys = 50;       // SkewedUpdate: shared contended prefix
    double hot_prob = 0.5;   // SkewedUpdate: P(draw from hot set)
    int music_hot_keys = 20;  // MusicOscillating: the "charts" played constantly
    int phase_length = 100;   // MusicOscillating: steps per update/compute phase
    ContractVariant variant = ContractVariant::Vanilla;  // music contract choice
};

/// Per-organization admission throttle. The controller only ever picks
/// multipliers from {1.0, 0.6, 0.4} (unchanged / -40% / -60%).
struct AdmissionPolicy {
    double org1 = 1.0;
    double org2 = 1.0;

    double for_org(const std::string& org_id) const {
        return org_id == "Org1" ? org1 : org2;
    }
};

/// MusicOscillating starts in the update phase and flips every phase_length.
MusicPhase music_phase(const WorkloadSpec& spec, int step);

std::string generator_key(int i);  // "k00042"
std::string music_key(int i);      // "M0042"

/// World-state seed matching the workload family (all `key_count` keys).
std::vector<std::pair<std::string, LedgerValue>> genesis_entries(
    const WorkloadSpec& spec, std::uint32_t payload_bytes = 200);

/// Standard fleets.
std::vector<ClientSpec> param_clients();     // 10 x 50 TPS, 5 per org
std::vector<ClientSpec> music_clients();     // 10 x 10 TPS, 5 per org
std::vector<ClientSpec> fairness_clients();  // 5 x 250 Org1 + 5 x 100 Org2

/// Rate-skew scenario: Org1 floods the network while both orgs contend on a
/// shared hot-key set.
std::pair<std::vector<ClientSpec>, WorkloadSpec> fairness_scenario();

/// One learning step's worth of proposals. Per client, the count is
/// rate x multipliers x duration (floor + Bernoulli on the fraction), with
/// submit times uniform in [step_start, step_start + duration).
std::vector<Submission> generate_step(const WorkloadSpec& spec,
                                      const std::vector<ClientSpec>& clients,
                                      int step, const RateSchedule& schedule,
                                      const AdmissionPolicy& policy,
                                      double step_duration, double step_start,
                                      std::mt19937_64& rng);

/// The client-side configuration file the controller rewrites between steps:
/// per-org admission multipliers plus the active music-contract variant.
struct ClientConfig {
    double org1_rate = 1.0;
    double org2_rate = 1.0;
    ContractVariant variant = ContractVariant::Vanilla;

    static ClientConfig load(const std::string& path);  // throws on bad file
    void save_atomic(const std::string& path) const;    // temp + rename
};

}  // namespace chainpilot
