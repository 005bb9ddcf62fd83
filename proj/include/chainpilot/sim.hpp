#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainpilot/contracts.hpp"
#include "chainpilot/ledger.hpp"

namespace chainpilot {

struct InvalidConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The four orderer knobs. Sizes are decimal megabytes (1 MB = 1e6 bytes).
struct OrdererConfig {
    std::uint32_t max_message_count = 500;
    double preferred_max_bytes_mb = 2.0;
    double batch_timeout_s = 2.0;
    double snapshot_interval_mb = 16.0;

    std::uint64_t preferred_max_bytes() const {
        return static_cast<std::uint64_t>(preferred_max_bytes_mb * 1e6 + 0.5);
    }

    void validate() const;  // throws InvalidConfigError on non-positive values

    bool operator==(const OrdererConfig&) const = default;
};

/// Service-time model for the three pipeline stages plus queue bounds.
/// The endorser is a worker pool (finite concurrency), the orderer and the
/// validator are single servers. All times in simulated seconds.
struct CostModel {
    double endorse_base = 0.010;     // endorsement service time per tx
    double network_hop = 0.005;      // endorser -> orderer transfer
    double order_per_block = 0.050;  // fixed ordering cost per block
    double order_per_tx = 0.0002;
    double vscc_per_tx = 0.0005;
    double commit_per_block = 0.350;  // fixed state-db/ledger-append cost
    double commit_per_write = 0.001;
    double snapshot_per_mb = 0.020;  // stall per MB of world state

    std::uint32_t endorser_workers = 50;
    std::uint32_t endorser_queue_cap = 5000;   // waiting txs before drop
    std::uint32_t orderer_queue_cap = 10000;   // pending pool size before drop
    std::uint32_t validator_queue_cap = 64;    // blocks in flight past the pool

    void validate() const;  // throws InvalidConfigError
};

struct CutDecision {
    std::size_t count = 0;
    CutReason reason = CutReason::MsgCount;
};

/// One endorsed transaction waiting in the orderer pool.
struct PoolTx {
    std::uint32_t slot = 0;
    std::uint32_t size_bytes = 0;
    double enter_time = 0.0;
};

/// Pure cutting rule over the pending pool (FIFO front first):
///   1. pool length >= max_message_count      -> first M_C txs, MsgCount
///   2. pool bytes >= preferred_max_bytes     -> longest prefix that fits
///                                               (at least 1 tx), Bytes
///   3. oldest tx waited >= batch_timeout     -> whole pool, Timeout
/// Returns nullopt when no condition holds or the pool is empty.
/// `pool_bytes` must equal the byte sum of the pool (caller maintains it).
std::optional<CutDecision> cut_block(const std::deque<PoolTx>& pool,
                                     std::uint64_t pool_bytes, double now,
                                     const OrdererConfig& cfg);

/// What a client hands to the simulator.
struct Submission {
    double time = 0.0;
    std::string client_id;
    std::string org_id;
    ContractCall call;
    // Sentinel: endorsement collects exactly the policy-required count.
    static constexpr std::uint32_t kMeetPolicy = 0xffffffffu;
    std::uint32_t endorsements = kMeetPolicy;
};

/// Terminal record for one transaction, emitted by advance_until().
struct TxOutcome {
    std::string tx_id;
    std::string client_id;
    std::string org_id;
    std::string kind;
    TxStatus status = TxStatus::Committed;
    double t_submitted = -1.0;
    double t_committed = -1.0;  // < 0 unless committed or aborted at validation
};

/// Observer for the event-trace dump; every hook corresponds to one trace
/// record. Implementations must not mutate the simulator.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void genesis(const WorldState& state, std::uint32_t policy) = 0;
    virtual void submit(double t, const Transaction& tx) = 0;
    virtual void drop(double t, const Transaction& tx, const char* stage) = 0;
    virtual void endorse(double t, const Transaction& tx, double compute_delay) = 0;
    virtual void ordered(double t, const Block& block) = 0;
    virtual void validated(double t, const Block& block, const ValidationResult& r) = 0;
    virtual void snapshot(double t, double world_mb, double stall) = 0;
    virtual void config_applied(double t, const OrdererConfig& cfg) = 0;
};

/// Deterministic discrete-event engine for the execute-order-validate
/// pipeline. Events are processed in strict (time, insertion seq) order.
class Simulator {
public:
    struct Stats {
        std::uint64_t submitted = 0;
        std::uint64_t endorsed = 0;
        std::uint64_t dropped_endorser = 0;
        std::uint64_t dropped_orderer = 0;
        std::uint64_t blocks_cut = 0;
        std::uint64_t blocks_committed = 0;
        std::uint64_t committed = 0;
        std::uint64_t aborted_mvcc = 0;
        std::uint64_t aborted_vscc = 0;
        std::uint64_t snapshots = 0;
        std::uint64_t configs_applied = 0;

        std::uint64_t dropped() const { return dropped_endorser + dropped_orderer; }
    };

    Simulator(OrdererConfig config, CostModel costs, std::uint32_t endorsement_policy = 2,
              ContractParams contract_params = {}, TraceSink* trace = nullptr);

    /// Install the genesis state: entries get versions (0, i) in input order
    /// and the first simulated block is seq 1.
    void seed_genesis(const std::vector<std::pair<std::string, LedgerValue>>& entries);

    /// Schedule a client proposal. `s.time` must be >= now().
    void submit(const Submission& s);

    /// Schedule a configuration transaction at the current time. It traverses
    /// endorse -> order -> validate; the pool is flushed (one ConfigFlush
    /// block) before the config tx is ordered alone; the new knobs take
    /// effect at the config tx's commit.
    void propose_config(const OrdererConfig& new_config);

    /// Run all events with time <= until; returns outcomes finalized since
    /// the previous call (in finalization order).
    std::vector<TxOutcome> advance_until(double until);

    double now() const { return now_; }
    const OrdererConfig& config() const { return cfg_; }
    const CostModel& costs() const { return costs_; }
    const WorldState& world() const { return world_; }
    const Stats& stats() const { return stats_; }
    std::size_t pool_size() const { return pool_.size(); }
    std::size_t endorser_queue_size() const { return endorse_queue_.size(); }
    std::size_t validation_backlog() const;  // blocks ordered but not committed
    std::uint64_t ledger_height() const { return next_seq_ - 1; }
    double bytes_since_snapshot_mb() const { return bytes_since_snapshot_ / 1e6; }

    /// Txs submitted but not yet finalized (for conservation checks).
    std::uint64_t in_flight() const;

private:
    enum class EventKind : std::uint8_t {
        Submit,
        EndorseDone,
        CutCheck,
        BlockOrdered,
        BlockValidated,
        SnapshotDone,
        ConfigApply,
    };

    struct Event {
        double time;
        std::uint64_t seq;
        EventKind kind;
        std::uint32_t slot;
        std::uint32_t gen;
    };
    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    struct TxRec {
        Transaction tx;
        ContractCall call;
        double service = 0.0;  // endorsement service time (set at submit)
        std::uint32_t gen = 0;
        bool live = false;
    };

    std::uint32_t alloc_slot();
    void free_slot(std::uint32_t slot);
    void push_event(double time, EventKind kind, std::uint32_t slot = 0,
                    std::uint32_t gen = 0);
    void emit_outcome(const Transaction& tx, TxStatus status, double t_committed);
    void start_endorse(std::uint32_t slot);
    void enter_pool(std::uint32_t slot);
    void arm_cut_check();
    void try_cut();
    void cut(std::size_t count, CutReason reason);
    void start_ordering(Block block);
    void start_validation();

    void on_submit(const Event& ev);
    void on_endorse_done(const Event& ev);
    void on_cut_check(const Event& ev);
    void on_block_ordered();
    void on_block_validated();
    void on_snapshot_done();
    void on_config_apply();

    OrdererConfig cfg_;
    CostModel costs_;
    std::uint32_t policy_;
    ContractParams cparams_;
    TraceSink* trace_;

    WorldState world_;
    double now_ = 0.0;
    std::uint64_t next_event_seq_ = 0;
    std::uint64_t next_tx_no_ = 1;
    std::uint64_t next_seq_ = 1;  // next block sequence (genesis = 0)

    std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
    std::vector<TxRec> slots_;
    std::vector<std::uint32_t> free_slots_;

    // Endorser worker pool.
    std::uint32_t endorse_busy_ = 0;
    std::deque<std::uint32_t> endorse_queue_;

    // Orderer pending pool (FIFO) + single ordering server.
    std::deque<PoolTx> pool_;
    std::uint64_t pool_bytes_ = 0;
    std::uint64_t pool_admitted_ = 0;  // txs ever admitted to the pool
    std::uint64_t pool_cut_ = 0;       // txs ever cut out of the pool
    std::optional<Block> ordering_;  // block currently in the ordering server
    std::uint64_t cut_check_token_ = 0;  // identifies the live timeout timer

    // Configuration transactions by lifecycle stage.
    struct PendingConfig {
        std::uint32_t slot;
        OrdererConfig cfg;
        std::uint64_t flush_watermark;  // pool_admitted_ at arrival
    };
    std::deque<OrdererConfig> config_endorsing_;  // proposed, FIFO with Submit order
    std::deque<PendingConfig> config_waiting_;
    std::deque<OrdererConfig> config_committing_;  // applied at ConfigApply

    // Validator: FIFO block queue + single server (+ snapshot stalls).
    std::deque<Block> validation_queue_;
    std::optional<Block> validating_;
    std::optional<BlockPlan> validating_plan_;
    bool snapshotting_ = false;
    double bytes_since_snapshot_ = 0.0;

    std::vector<TxOutcome> outcomes_;
    Stats stats_;
    std::uint64_t in_flight_client_ = 0;  // client txs submitted, not finalized
};

}  // namespace chainpilot
