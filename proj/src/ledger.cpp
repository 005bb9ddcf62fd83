#include "chainpilot/ledger.hpp"

namespace chainpilot {

namespace {
constexpr double kBytesPerMb = 1e6;  // decimal megabytes throughout
}

void WorldState::put(const std::string& key, LedgerValue value, Version version) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        total_bytes_ += entry_bytes(key, value);
        entries_.emplace(key, WorldEntry{value, version});
    } else {
        total_bytes_ -= entry_bytes(key, it->second.value);
        total_bytes_ += entry_bytes(key, value);
        it->second = WorldEntry{value, version};
    }
}

double WorldState::total_mb() const {
    return static_cast<double>(total_bytes_) / kBytesPerMb;
}

std::uint64_t WorldState::recompute_total_bytes() const {
    std::uint64_t sum = 0;
    for (const auto& [key, entry] : entries_) sum += entry_bytes(key, entry.value);
    return sum;
}

const char* to_string(TxStatus s) {
    switch (s) {
        case TxStatus::Committed: return "Committed";
        case TxStatus::AbortedMVCC: return "AbortedMVCC";
        case TxStatus::AbortedVSCC: return "AbortedVSCC";
        case TxStatus::Dropped: return "Dropped";
    }
    return "?";
}

const char* to_string(CutReason r) {
    switch (r) {
        case CutReason::MsgCount: return "MsgCount";
        case CutReason::Bytes: return "Bytes";
        case CutReason::Timeout: return "Timeout";
        case CutReason::ConfigFlush: return "ConfigFlush";
    }
    return "?";
}

BlockPlan plan_block(const WorldState& state, const Block& block,
                     std::uint32_t endorsement_policy,
                     std::uint64_t expected_seq) {
    if (block.seq != expected_seq) {
        throw SequenceGapError("block seq " + std::to_string(block.seq) +
                               ", expected " + std::to_string(expected_seq));
    }
    BlockPlan plan;
    plan.result.verdicts.reserve(block.txs.size());
    // Writes staged by earlier committed txs of this block shadow the
    // underlying state for both reads and version checks.
    std::unordered_map<std::string, WorldEntry> staged;
    for (std::uint32_t idx = 0; idx < block.txs.size(); ++idx) {
        const Transaction& tx = block.txs[idx];
        TxStatus status = TxStatus::Committed;
        if (tx.endorsement_count < endorsement_policy) {
            status = TxStatus::AbortedVSCC;
        } else {
            for (const auto& [key, seen] : tx.read_set) {
                const WorldEntry* cur = nullptr;
                if (auto it = staged.find(key); it != staged.end()) {
                    cur = &it->second;
                } else {
                    cur = state.find(key);
                }
                // A missing key reads as version-absent; any recorded version
                // mismatches it.
                if (cur == nullptr || cur->version != seen) {
                    status = TxStatus::AbortedMVCC;
                    break;
                }
            }
        }
        if (status == TxStatus::Committed) {
            for (const auto& [key, value] : tx.write_set) {
                WorldEntry entry{value, Version{block.seq, idx}};
                staged[key] = entry;
                plan.writes.emplace_back(key, entry);
            }
            plan.result.committed_count += 1;
            plan.result.committed_writes += tx.write_set.size();
        }
        plan.result.verdicts.push_back(TxVerdict{tx.tx_id, status});
    }
    return plan;
}

ValidationResult apply_block(WorldState& state, const Block& block,
                             std::uint32_t endorsement_policy,
                             std::uint64_t expected_seq) {
    BlockPlan plan = plan_block(state, block, endorsement_policy, expected_seq);
    for (const auto& [key, entry] : plan.writes) {
        state.put(key, entry.value, entry.version);
    }
    return std::move(plan.result);
}

std::pair<WorldState, ValidationResult> validate_block(const WorldState& state,
                                                       const Block& block,
                                                       std::uint32_t endorsement_policy,
                                                       std::uint64_t expected_seq) {
    WorldState post = state;
    ValidationResult result = apply_block(post, block, endorsement_policy, expected_seq);
    return {std::move(post), std::move(result)};
}

}  // namespace chainpilot
