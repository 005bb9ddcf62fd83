#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainpilot/ledger.hpp"

namespace chainpilot {

enum class ContractFunction : std::uint8_t {
    GeneratorUpdate,    // single-key read + write
    PlayMusic,          // play-count increment
    CalculateRevenue,   // total-revenue update from play-count
};

enum class ContractVariant : std::uint8_t { Vanilla, Delta };

const char* to_string(ContractFunction f);
const char* to_string(ContractVariant v);

/// A client-side contract invocation. GeneratorUpdate has a single
/// implementation and ignores the variant.
struct ContractCall {
    ContractFunction function = ContractFunction::GeneratorUpdate;
    ContractVariant variant = ContractVariant::Vanilla;
    std::string target_key;
};

/// Tag like "PlayMusic/Delta" used in transactions and traces.
std::string kind_tag(const ContractCall& call);

struct ContractParams {
    std::uint32_t record_bytes = 200;        // serialized size of one written record
    double revenue_per_play = 1.0;
    double delta_aggregation_delay = 0.5;    // simulated delta revenue aggregation
};

/// Simulated execution output: what the endorser would sign.
struct EndorsementResult {
    std::vector<std::pair<std::string, Version>> read_set;
    std::vector<std::pair<std::string, LedgerValue>> write_set;
    double compute_delay = 0.0;
};

/// Composite key for one delta increment, e.g. "M01+1T01".
std::string delta_entry_key(const std::string& music_id, std::int64_t increment,
                            const std::string& tx_id);

/// Simulate a contract invocation against the committed world state.
/// The state is never mutated; the read set records the versions seen.
/// Throws MissingKeyError for required reads of absent keys and
/// UnknownFunctionError for unregistered function tags.
EndorsementResult exec_contract(const ContractCall& call, const WorldState& state,
                                const std::string& tx_id,
                                const ContractParams& params = {});

/// Expected endorsement latency contribution of the call itself (the
/// compute-delay part of exec_contract, available without executing).
double contract_compute_delay(const ContractCall& call, const ContractParams& params
                              = {});

}  // namespace chainpilot
