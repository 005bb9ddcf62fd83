#include "chainpilot/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <utility>

namespace chainpilot {

namespace {
// Guards float comparisons of "waited >= batch timeout" when the check runs
// at an event scheduled exactly at enter_time + timeout.
constexpr double kTimeEps = 1e-9;
constexpr std::uint32_t kConfigTxBytes = 512;
}  // namespace

void OrdererConfig::validate() const {
    if (max_message_count == 0)
        throw InvalidConfigError("max_message_count must be positive");
    if (!(preferred_max_bytes_mb > 0.0))
        throw InvalidConfigError("preferred_max_bytes_mb must be positive");
    if (!(batch_timeout_s > 0.0))
        throw InvalidConfigError("batch_timeout_s must be positive");
    if (!(snapshot_interval_mb > 0.0))
        throw InvalidConfigError("snapshot_interval_mb must be positive");
}

void CostModel::validate() const {
    const double costs[] = {endorse_base,   network_hop,      order_per_block,
                            order_per_tx,   vscc_per_tx,      commit_per_block,
                            commit_per_write, snapshot_per_mb};
    for (double c : costs) {
        if (c < 0.0 || !std::isfinite(c))
            throw InvalidConfigError("cost model entries must be finite and >= 0");
    }
    if (endorser_workers == 0 || endorser_queue_cap == 0 || orderer_queue_cap == 0 ||
        validator_queue_cap == 0) {
        throw InvalidConfigError("queue capacities and worker count must be positive");
    }
}

std::optional<CutDecision> cut_block(const std::deque<PoolTx>& pool,
                                     std::uint64_t pool_bytes, double now,
                                     const OrdererConfig& cfg) {
    if (pool.empty()) return std::nullopt;
    if (pool.size() >= cfg.max_message_count) {
        return CutDecision{cfg.max_message_count, CutReason::MsgCount};
    }
    const std::uint64_t cap = cfg.preferred_max_bytes();
    if (pool_bytes >= cap) {
        // Longest prefix that still fits; a single oversized tx goes alone.
        std::uint64_t sum = 0;
        std::size_t count = 0;
        for (const PoolTx& tx : pool) {
            if (sum + tx.size_bytes > cap) break;
            sum += tx.size_bytes;
            ++count;
        }
        if (count == 0) count = 1;
        return CutDecision{count, CutReason::Bytes};
    }
    if (now - pool.front().enter_time + kTimeEps >= cfg.batch_timeout_s) {
        return CutDecision{pool.size(), CutReason::Timeout};
    }
    return std::nullopt;
}

Simulator::Simulator(OrdererConfig config, CostModel costs,
                     std::uint32_t endorsement_policy, ContractParams contract_params,
                     TraceSink* trace)
    : cfg_(config),
      costs_(costs),
      policy_(endorsement_policy),
      cparams_(contract_params),
      trace_(trace) {
    cfg_.validate();
    costs_.validate();
}

void Simulator::seed_genesis(const std::vector<std::pair<std::string, LedgerValue>>& entries) {
    assert(now_ == 0.0 && next_seq_ == 1 && world_.size() == 0);
    std::uint32_t idx = 0;
    for (const auto& [key, value] : entries) {
        world_.put(key, value, Version{0, idx++});
    }
    if (trace_) trace_->genesis(world_, policy_);
}

std::uint32_t Simulator::alloc_slot() {
    if (!free_slots_.empty()) {
        std::uint32_t slot = free_slots_.back();
        free_slots_.pop_back();
        slots_[slot].live = true;
        return slot;
    }
    slots_.emplace_back();
    slots_.back().live = true;
    return static_cast<std::uint32_t>(slots_.size() - 1);
}

void Simulator::free_slot(std::uint32_t slot) {
    TxRec& rec = slots_[slot];
    rec.live = false;
    rec.gen++;
    rec.tx = Transaction{};
    free_slots_.push_back(slot);
}

void Simulator::push_event(double time, EventKind kind, std::uint32_t slot,
                           std::uint32_t gen) {
    events_.push(Event{time, next_event_seq_++, kind, slot, gen});
}

void Simulator::submit(const Submission& s) {
    assert(s.time + kTimeEps >= now_);
    std::uint32_t slot = alloc_slot();
    TxRec& rec = slots_[slot];
    rec.call = s.call;
    rec.service = costs_.endorse_base + contract_compute_delay(s.call, cparams_) +
                  costs_.network_hop;
    rec.tx.tx_id = "T" + std::to_string(next_tx_no_++);
    rec.tx.client_id = s.client_id;
    rec.tx.org_id = s.org_id;
    rec.tx.kind = kind_tag(s.call);
    rec.tx.endorsement_count =
        s.endorsements == Submission::kMeetPolicy ? policy_ : s.endorsements;
    rec.tx.size_bytes = cparams_.record_bytes;
    rec.tx.t_submitted = s.time;
    push_event(s.time, EventKind::Submit, slot, rec.gen);
}

void Simulator::propose_config(const OrdererConfig& new_config) {
    new_config.validate();
    std::uint32_t slot = alloc_slot();
    TxRec& rec = slots_[slot];
    rec.call = ContractCall{};
    rec.service = costs_.endorse_base + costs_.network_hop;
    rec.tx.tx_id = "T" + std::to_string(next_tx_no_++);
    rec.tx.client_id = "client-manager";
    rec.tx.org_id = "Org1";
    rec.tx.kind = "Config";
    rec.tx.endorsement_count = policy_;
    rec.tx.size_bytes = kConfigTxBytes;
    rec.tx.t_submitted = now_;
    config_endorsing_.push_back(new_config);
    push_event(now_, EventKind::Submit, slot, rec.gen);
}

std::vector<TxOutcome> Simulator::advance_until(double until) {
    assert(until + kTimeEps >= now_);
    while (!events_.empty() && events_.top().time <= until) {
        Event ev = events_.top();
        events_.pop();
        now_ = ev.time;
        switch (ev.kind) {
            case EventKind::Submit: on_submit(ev); break;
            case EventKind::EndorseDone: on_endorse_done(ev); break;
            case EventKind::CutCheck: on_cut_check(ev); break;
            case EventKind::BlockOrdered: on_block_ordered(); break;
            case EventKind::BlockValidated: on_block_validated(); break;
            case EventKind::SnapshotDone: on_snapshot_done(); break;
            case EventKind::ConfigApply: on_config_apply(); break;
        }
    }
    if (until > now_) now_ = until;
    return std::exchange(outcomes_, {});
}

void Simulator::emit_outcome(const Transaction& tx, TxStatus status, double t_committed) {
    outcomes_.push_back(TxOutcome{tx.tx_id, tx.client_id, tx.org_id, tx.kind, status,
                                  tx.t_submitted, t_committed});
}

void Simulator::on_submit(const Event& ev) {
    TxRec& rec = slots_[ev.slot];
    const bool is_config = rec.tx.kind == "Config";
    if (!is_config) {
        stats_.submitted++;
        in_flight_client_++;
    }
    if (trace_) trace_->submit(now_, rec.tx);
    if (endorse_busy_ < costs_.endorser_workers) {
        start_endorse(ev.slot);
        return;
    }
    // Config txs are administrative and never rejected at the client gateway.
    if (!is_config && endorse_queue_.size() >= costs_.endorser_queue_cap) {
        stats_.dropped_endorser++;
        in_flight_client_--;
        if (trace_) trace_->drop(now_, rec.tx, "endorser");
        emit_outcome(rec.tx, TxStatus::Dropped, -1.0);
        free_slot(ev.slot);
        return;
    }
    endorse_queue_.push_back(ev.slot);
}

void Simulator::start_endorse(std::uint32_t slot) {
    endorse_busy_++;
    push_event(now_ + slots_[slot].service, EventKind::EndorseDone, slot,
               slots_[slot].gen);
}

void Simulator::on_endorse_done(const Event& ev) {
    endorse_busy_--;
    if (!endorse_queue_.empty()) {
        std::uint32_t next = endorse_queue_.front();
        endorse_queue_.pop_front();
        start_endorse(next);
    }
    TxRec& rec = slots_[ev.slot];
    assert(rec.live && rec.gen == ev.gen);
    rec.tx.t_endorsed = now_;
    if (rec.tx.kind == "Config") {
        OrdererConfig cfg = config_endorsing_.front();
        config_endorsing_.pop_front();
        if (trace_) trace_->endorse(now_, rec.tx, 0.0);
        config_waiting_.push_back(PendingConfig{ev.slot, cfg, pool_admitted_});
        try_cut();
        return;
    }
    stats_.endorsed++;
    // Execution is simulated lazily here, against the world state committed
    // by this moment — that window is what MVCC later re-checks.
    EndorsementResult res = exec_contract(rec.call, world_, rec.tx.tx_id, cparams_);
    rec.tx.read_set = std::move(res.read_set);
    rec.tx.write_set = std::move(res.write_set);
    if (trace_) trace_->endorse(now_, rec.tx, res.compute_delay);
    if (pool_.size() >= costs_.orderer_queue_cap) {
        stats_.dropped_orderer++;
        in_flight_client_--;
        if (trace_) trace_->drop(now_, rec.tx, "orderer");
        emit_outcome(rec.tx, TxStatus::Dropped, -1.0);
        free_slot(ev.slot);
        return;
    }
    enter_pool(ev.slot);
}

void Simulator::enter_pool(std::uint32_t slot) {
    const bool was_empty = pool_.empty();
    pool_.push_back(PoolTx{slot, slots_[slot].tx.size_bytes, now_});
    pool_bytes_ += slots_[slot].tx.size_bytes;
    pool_admitted_++;
    if (was_empty) arm_cut_check();
    try_cut();
}

void Simulator::arm_cut_check() {
    if (pool_.empty()) return;
    const double due = pool_.front().enter_time + cfg_.batch_timeout_s;
    if (due <= now_) return;  // overdue fronts are handled by try_cut callers
    cut_check_token_++;
    push_event(due, EventKind::CutCheck, static_cast<std::uint32_t>(cut_check_token_),
               static_cast<std::uint32_t>(cut_check_token_ >> 32));
}

void Simulator::on_cut_check(const Event& ev) {
    const std::uint64_t token =
        (static_cast<std::uint64_t>(ev.gen) << 32) | ev.slot;
    if (token != cut_check_token_) return;  // superseded timer
    try_cut();
    arm_cut_check();
}

void Simulator::try_cut() {
    while (!ordering_) {
        if (!config_waiting_.empty()) {
            // A pending config change flushes what was queued ahead of it
            // (txs arriving afterwards wait their normal turn — flushing the
            // live pool would re-trigger forever under steady arrivals), then
            // rides in its own block; both bypass the backlog gate.
            const PendingConfig& pc = config_waiting_.front();
            if (pool_cut_ < pc.flush_watermark) {
                const std::uint64_t ahead = pc.flush_watermark - pool_cut_;
                cut(static_cast<std::size_t>(
                        std::min<std::uint64_t>(ahead, cfg_.max_message_count)),
                    CutReason::ConfigFlush);
                continue;
            }
            const std::uint32_t slot = pc.slot;
            const OrdererConfig cfg = pc.cfg;
            config_waiting_.pop_front();
            Block block;
            block.seq = next_seq_++;
            block.cut_reason = CutReason::ConfigFlush;
            block.byte_size = slots_[slot].tx.size_bytes;
            block.txs.push_back(std::move(slots_[slot].tx));
            free_slot(slot);
            config_committing_.push_back(cfg);
            stats_.blocks_cut++;
            start_ordering(std::move(block));
            continue;
        }
        // Backpressure: once the post-pool pipeline holds a full window of
        // blocks, stop cutting and let the pool absorb (and drop) the excess.
        if (validation_queue_.size() + (validating_ ? 1u : 0u) >=
            costs_.validator_queue_cap) {
            return;
        }
        auto decision = cut_block(pool_, pool_bytes_, now_, cfg_);
        if (!decision) return;
        cut(decision->count, decision->reason);
    }
}

void Simulator::cut(std::size_t count, CutReason reason) {
    assert(!ordering_ && count > 0 && count <= pool_.size());
    Block block;
    block.seq = next_seq_++;
    block.cut_reason = reason;
    block.txs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        PoolTx front = pool_.front();
        pool_.pop_front();
        pool_bytes_ -= front.size_bytes;
        block.byte_size += front.size_bytes;
        block.txs.push_back(std::move(slots_[front.slot].tx));
        free_slot(front.slot);
    }
    pool_cut_ += count;
    stats_.blocks_cut++;
    arm_cut_check();  // new front, new timeout
    start_ordering(std::move(block));
}

void Simulator::start_ordering(Block block) {
    const double service =
        costs_.order_per_block + costs_.order_per_tx * block.txs.size();
    ordering_ = std::move(block);
    push_event(now_ + service, EventKind::BlockOrdered);
}

void Simulator::on_block_ordered() {
    Block block = std::move(*ordering_);
    ordering_.reset();
    for (Transaction& tx : block.txs) tx.t_ordered = now_;
    if (trace_) trace_->ordered(now_, block);
    validation_queue_.push_back(std::move(block));
    if (!validating_ && !snapshotting_) start_validation();
    try_cut();
}

void Simulator::start_validation() {
    if (validation_queue_.empty()) return;
    validating_ = std::move(validation_queue_.front());
    validation_queue_.pop_front();
    validating_plan_ = plan_block(world_, *validating_, policy_, validating_->seq);
    const double service = costs_.vscc_per_tx * validating_->txs.size() +
                           costs_.commit_per_block +
                           costs_.commit_per_write *
                               validating_plan_->result.committed_writes;
    push_event(now_ + service, EventKind::BlockValidated);
}

void Simulator::on_block_validated() {
    Block block = std::move(*validating_);
    BlockPlan plan = std::move(*validating_plan_);
    validating_.reset();
    validating_plan_.reset();

    for (const auto& [key, entry] : plan.writes) {
        world_.put(key, entry.value, entry.version);
    }
    bool has_config = false;
    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        Transaction& tx = block.txs[i];
        tx.t_committed = now_;
        if (tx.kind == "Config") {
            has_config = true;
            continue;
        }
        switch (plan.result.verdicts[i].status) {
            case TxStatus::Committed: stats_.committed++; break;
            case TxStatus::AbortedMVCC: stats_.aborted_mvcc++; break;
            case TxStatus::AbortedVSCC: stats_.aborted_vscc++; break;
            case TxStatus::Dropped: break;  // unreachable in blocks
        }
        in_flight_client_--;
        emit_outcome(tx, plan.result.verdicts[i].status, now_);
    }
    stats_.blocks_committed++;
    if (trace_) trace_->validated(now_, block, plan.result);

    bytes_since_snapshot_ += static_cast<double>(block.byte_size);
    if (bytes_since_snapshot_ >= cfg_.snapshot_interval_mb * 1e6) {
        const double stall = costs_.snapshot_per_mb * world_.total_mb();
        bytes_since_snapshot_ = 0.0;
        snapshotting_ = true;
        stats_.snapshots++;
        push_event(now_ + stall, EventKind::SnapshotDone);
    }
    if (has_config) {
        push_event(now_, EventKind::ConfigApply);
    }
    if (!snapshotting_) start_validation();
    if (!has_config) try_cut();  // backlog shrank; config blocks re-try after apply
}

void Simulator::on_snapshot_done() {
    snapshotting_ = false;
    if (trace_) {
        trace_->snapshot(now_, world_.total_mb(),
                         costs_.snapshot_per_mb * world_.total_mb());
    }
    if (!validating_) start_validation();
}

void Simulator::on_config_apply() {
    cfg_ = config_committing_.front();
    config_committing_.pop_front();
    stats_.configs_applied++;
    if (trace_) trace_->config_applied(now_, cfg_);
    try_cut();
    arm_cut_check();  // batch timeout may have changed
}

std::size_t Simulator::validation_backlog() const {
    return validation_queue_.size() + (validating_ ? 1u : 0u);
}

std::uint64_t Simulator::in_flight() const { return in_flight_client_; }

}  // namespace chainpilot
