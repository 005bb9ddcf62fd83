#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chainpilot {

struct LedgerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingKeyError : LedgerError {
    using LedgerError::LedgerError;
};
struct UnknownFunctionError : LedgerError {
    using LedgerError::LedgerError;
};
struct SequenceGapError : LedgerError {
    using LedgerError::LedgerError;
};

/// Key version: bumped to (block_seq, tx_index) by every committed write.
/// Totally ordered lexicographically.
struct Version {
    std::uint64_t block_seq = 0;
    std::uint32_t tx_index = 0;

    auto operator<=>(const Version&) const = default;
};

/// Stored value. Payloads are opaque and modeled by size only;
/// the music-management contract additionally keeps its record fields here.
struct LedgerValue {
    std::uint32_t payload_bytes = 0;
    std::int64_t play_count = 0;
    double total_revenue = 0.0;

    bool operator==(const LedgerValue&) const = default;
};

struct WorldEntry {
    LedgerValue value;
    Version version;
};

/// Versioned key-value world state. total_bytes() is maintained
/// incrementally on every put.
class WorldState {
public:
    const WorldEntry* find(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    bool contains(const std::string& key) const { return entries_.count(key) != 0; }

    /// Insert or replace; keeps the byte total in sync.
    void put(const std::string& key, LedgerValue value, Version version);

    std::size_t size() const { return entries_.size(); }
    std::uint64_t total_bytes() const { return total_bytes_; }
    double total_mb() const;

    /// Exhaustive recomputation of the byte total (test cross-check).
    std::uint64_t recompute_total_bytes() const;

    static std::uint64_t entry_bytes(const std::string& key, const LedgerValue& value) {
        return key.size() + value.payload_bytes;
    }

    const std::unordered_map<std::string, WorldEntry>& entries() const { return entries_; }

private:
    std::unordered_map<std::string, WorldEntry> entries_;
    std::uint64_t total_bytes_ = 0;
};

enum class TxStatus : std::uint8_t {
    Committed,
    AbortedMVCC,
    AbortedVSCC,
    Dropped,
};

const char* to_string(TxStatus s);

/// One endorsed transaction. Read set carries the versions observed at
/// endorsement time; the write set carries the values to apply on commit.
/// Key sets are small, so flat vectors stand in for maps (keys unique).
struct Transaction {
    std::string tx_id;
    std::string client_id;
    std::string org_id;
    std::string kind;  // contract tag, e.g. "PlayMusic/Delta"; "Config" for config txs
    std::vector<std::pair<std::string, Version>> read_set;
    std::vector<std::pair<std::string, LedgerValue>> write_set;
    std::uint32_t endorsement_count = 0;
    std::uint32_t size_bytes = 0;
    // Lifecycle timestamps in simulated seconds; negative = phase not reached.
    double t_submitted = -1.0;
    double t_endorsed = -1.0;
    double t_ordered = -1.0;
    double t_committed = -1.0;
};

enum class CutReason : std::uint8_t { MsgCount, Bytes, Timeout, ConfigFlush };

const char* to_string(CutReason r);

/// Ordered transaction batch. byte_size is the sum of tx sizes and txs
/// preserve ordering-service arrival order.
struct Block {
    std::uint64_t seq = 0;
    std::vector<Transaction> txs;
    CutReason cut_reason = CutReason::MsgCount;
    std::uint64_t byte_size = 0;
};

struct TxVerdict {
    std::string tx_id;
    TxStatus status = TxStatus::Committed;
};

struct ValidationResult {
    std::vector<TxVerdict> verdicts;
    std::uint64_t committed_count = 0;
    std::uint64_t committed_writes = 0;
};

/// Validation outcome plus the writes it would apply, without touching the
/// input state. Lets the simulator decide verdicts when validation starts but
/// make the writes visible only at commit time.
struct BlockPlan {
    ValidationResult result;
    // One entry per committed write op, in block order; later entries for the
    // same key supersede earlier ones when applied sequentially.
    std::vector<std::pair<std::string, WorldEntry>> writes;
};

/// Validate a block against `state`: VSCC (endorsement count vs. policy) then
/// MVCC (every read-set version must still match, including writes committed
/// by earlier transactions of the same block). Committed write sets get
/// version (block.seq, tx_index). `state` is not mutated.
/// Throws SequenceGapError unless block.seq == expected_seq.
BlockPlan plan_block(const WorldState& state, const Block& block,
                     std::uint32_t endorsement_policy,
                     std::uint64_t expected_seq);

/// plan_block + apply the planned writes to `state`.
ValidationResult apply_block(WorldState& state, const Block& block,
                             std::uint32_t endorsement_policy,
                             std::uint64_t expected_seq);

/// Pure variant: returns the post-state alongside the verdicts and leaves
/// the input state untouched.
std::pair<WorldState, ValidationResult> validate_block(const WorldState& state,
                                                       const Block& block,
                                                       std::uint32_t endorsement_policy,
                                                       std::uint64_t expected_seq);

}  // namespace chainpilot
