#include "chainpilot/contracts.hpp"

#include <stdexcept>

namespace chainpilot {

const char* to_string(ContractFunction f) {
    switch (f) {
        case ContractFunction::GeneratorUpdate: return "GeneratorUpdate";
        case ContractFunction::PlayMusic: return "PlayMusic";
        case ContractFunction::CalculateRevenue: return "CalculateRevenue";
    }
    return "?";
}

const char* to_string(ContractVariant v) {
    return v == ContractVariant::Vanilla ? "Vanilla" : "Delta";
}

std::string kind_tag(const ContractCall& call) {
    if (call.function == ContractFunction::GeneratorUpdate)
        return "GeneratorUpdate";
    std::string tag = to_string(call.function);
    tag += '/';
    tag += to_string(call.variant);
    return tag;
}

std::string delta_entry_key(const std::string& music_id, std::int64_t increment,
                            const std::string& tx_id) {
    std::string key = music_id;
    key += '+';
    key += std::to_string(increment);
    key += tx_id;
    return key;
}

namespace {

// Read target_key from committed state, recording the observed version.
const LedgerValue& must_read(const ContractCall& call, const WorldState& state,
                             EndorsementResult& out) {
    const WorldEntry* entry = state.find(call.target_key);
    if (!entry) {
        throw MissingKeyError("contract " + kind_tag(call) + " reads missing key '" +
                              call.target_key + "'");
    }
    out.read_set.emplace_back(call.target_key, entry->version);
    return entry->value;
}

}  // namespace

EndorsementResult exec_contract(const ContractCall& call, const WorldState& state,
                                const std::string& tx_id,
                                const ContractParams& params) {
    EndorsementResult out;
    switch (call.function) {
        case ContractFunction::GeneratorUpdate: {
            // Plain read-modify-write on one record; payload size unchanged.
            const LedgerValue& cur = must_read(call, state, out);
            LedgerValue next = cur;
            next.payload_bytes = params.record_bytes;
            next.play_count = cur.play_count + 1;
            out.write_set.emplace_back(call.target_key, next);
            return out;
        }
        case ContractFunction::PlayMusic: {
            if (call.variant == ContractVariant::Vanilla) {
                const LedgerValue& cur = must_read(call, state, out);
                LedgerValue next = cur;
                next.payload_bytes = params.record_bytes;
                next.play_count = cur.play_count + 1;
                out.write_set.emplace_back(call.target_key, next);
                return out;
            }
            // Delta: blind write of one increment record under a composite
            // key; no read set, so concurrent plays never conflict.
            LedgerValue delta;
            delta.payload_bytes = params.record_bytes;
            delta.play_count = 1;
            out.write_set.emplace_back(delta_entry_key(call.target_key, 1, tx_id),
                                       delta);
            return out;
        }
        case ContractFunction::CalculateRevenue: {
            const LedgerValue& cur = must_read(call, state, out);
            LedgerValue next = cur;
            next.payload_bytes = params.record_bytes;
            next.total_revenue =
                static_cast<double>(cur.play_count) * params.revenue_per_play;
            out.write_set.emplace_back(call.target_key, next);
            if (call.variant == ContractVariant::Delta) {
                // Folding outstanding delta rows into the base record costs
                // extra endorsement time.
                out.compute_delay = params.delta_aggregation_delay;
            }
            return out;
        }
    }
    throw UnknownFunctionError("unknown contract function tag");
}

double contract_compute_delay(const ContractCall& call, const ContractParams& params) {
    if (call.function == ContractFunction::CalculateRevenue &&
        call.variant == ContractVariant::Delta) {
        return params.delta_aggregation_delay;
    }
    return 0.0;
}

}  // namespace chainpilot
