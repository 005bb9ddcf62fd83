#include "chainpilot/telemetry.hpp"

#include <stdexcept>

namespace chainpilot {

double jain_index(double s1, double s2) {
    const double sum = s1 + s2;
    if (sum == 0.0) throw std::domain_error("jain_index undefined for all-zero allocations");
    return sum * sum / (2.0 * (s1 * s1 + s2 * s2));
}

StepMetrics collect(const std::vector<TxOutcome>& outcomes,
                    const std::map<std::string, long>& offered_per_client,
                    double step_duration, double prev_jain) {
    StepMetrics m;
    long offered = 0;
    for (const auto& [client, count] : offered_per_client) offered += count;
    m.send_rate = offered / step_duration;

    double latency_sum = 0.0;
    long org1_committed = 0;
    long org2_committed = 0;
    for (const TxOutcome& o : outcomes) {
        switch (o.status) {
            case TxStatus::Committed:
                m.committed++;
                latency_sum += o.t_committed - o.t_submitted;
                m.per_client_success[o.client_id]++;
                (o.org_id == "Org1" ? org1_committed : org2_committed)++;
                break;
            case TxStatus::AbortedMVCC: m.aborted_mvcc++; break;
            case TxStatus::AbortedVSCC: m.aborted_vscc++; break;
            case TxStatus::Dropped: m.dropped++; break;
        }
    }
    const long validated = m.committed + m.aborted_mvcc + m.aborted_vscc;
    m.overall_tps = validated / step_duration;
    m.success_tps = m.committed / step_duration;
    m.avg_latency = m.committed > 0 ? latency_sum / m.committed : 0.0;
    m.org1_success = org1_committed / step_duration;
    m.org2_success = org2_committed / step_duration;
    m.jain = (org1_committed + org2_committed) > 0
                 ? jain_index(m.org1_success, m.org2_success)
                 : prev_jain;

    for (const auto& [client, count] : offered_per_client) {
        const auto it = m.per_client_success.find(client);
        const long ok = it == m.per_client_success.end() ? 0 : it->second;
        m.per_client_success_rate[client] =
            count > 0 ? static_cast<double>(ok) / count : 0.0;
    }
    return m;
}

}  // namespace chainpilot
