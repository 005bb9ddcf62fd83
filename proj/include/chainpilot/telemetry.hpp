#pragma once

#include <map>
#include <string>
#include <vector>

#include "chainpilot/sim.hpp"

namespace chainpilot {

/// Per-learning-step measurements, all rates in TPS over the step window.
struct StepMetrics {
    double overall_tps = 0.0;   // committed + aborted, i.e. validated
    double success_tps = 0.0;   // committed only
    double avg_latency = 0.0;   // seconds, commit - submit, committed txs only
    double send_rate = 0.0;     // offered load (post-admission)
    double jain = 0.0;          // fairness over per-org success rates
    double org1_success = 0.0;  // committed TPS attributed to Org1
    double org2_success = 0.0;
    long committed = 0;
    long aborted_mvcc = 0;
    long aborted_vscc = 0;
    long dropped = 0;
    std::map<std::string, long> per_client_success;
    std::map<std::string, double> per_client_success_rate;  // committed/offered
};

/// Jain's fairness index over two allocations. Throws std::domain_error when
/// both are zero (the index is undefined there).
double jain_index(double s1, double s2);

/// Folds one step's transaction outcomes into metrics. `offered_per_client`
/// is how many proposals each client actually sent this step (post-admission);
/// `prev_jain` is substituted when no transaction succeeded for either org.
StepMetrics collect(const std::vector<TxOutcome>& outcomes,
                    const std::map<std::string, long>& offered_per_client,
                    double step_duration, double prev_jain);

}  // namespace chainpilot
