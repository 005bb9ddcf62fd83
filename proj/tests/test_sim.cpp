#include "doctest.h"

#include "chainpilot/sim.hpp"

#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace chainpilot;

namespace {

// Trace sink that flattens every hook into one log line, so tests can assert
// on event order and compare whole runs for determinism.
struct CaptureTrace : TraceSink {
    std::vector<std::string> lines;

    struct OrderedRec {
        double time;
        std::uint64_t seq;
        CutReason reason;
        std::size_t n_txs;
        std::vector<std::string> tx_ids;
    };
    std::vector<OrderedRec> ordered_blocks;
    std::vector<std::string> endorse_order;  // pool arrival order
    std::vector<double> config_applied_at;
    std::vector<std::pair<double, std::uint64_t>> validated_at;  // (time, seq)
    int snapshot_count = 0;

    void genesis(const WorldState& state, std::uint32_t policy) override {
        std::ostringstream os;
        os << "genesis n=" << state.size() << " policy=" << policy;
        lines.push_back(os.str());
    }
    void submit(double t, const Transaction& tx) override {
        std::ostringstream os;
        os << "submit t=" << t << " " << tx.tx_id << " " << tx.kind;
        lines.push_back(os.str());
    }
    void drop(double t, const Transaction& tx, const char* stage) override {
        std::ostringstream os;
        os << "drop t=" << t << " " << tx.tx_id << " at=" << stage;
        lines.push_back(os.str());
    }
    void endorse(double t, const Transaction& tx, double compute_delay) override {
        std::ostringstream os;
        os << "endorse t=" << t << " " << tx.tx_id << " delay=" << compute_delay;
        lines.push_back(os.str());
        if (tx.kind != "Config") endorse_order.push_back(tx.tx_id);
    }
    void ordered(double t, const Block& block) override {
        std::ostringstream os;
        os << "ordered t=" << t << " seq=" << block.seq << " reason="
           << to_string(block.cut_reason) << " n=" << block.txs.size();
        lines.push_back(os.str());
        OrderedRec rec{t, block.seq, block.cut_reason, block.txs.size(), {}};
        for (const Transaction& tx : block.txs) {
            if (tx.kind != "Config") rec.tx_ids.push_back(tx.tx_id);
        }
        ordered_blocks.push_back(std::move(rec));
    }
    void validated(double t, const Block& block, const ValidationResult& r) override {
        std::ostringstream os;
        os << "validated t=" << t << " seq=" << block.seq
           << " committed=" << r.committed_count;
        lines.push_back(os.str());
        validated_at.emplace_back(t, block.seq);
    }
    void snapshot(double t, double world_mb, double stall) override {
        std::ostringstream os;
        os << "snapshot t=" << t << " world_mb=" << world_mb << " stall=" << stall;
        lines.push_back(os.str());
        snapshot_count++;
    }
    void config_applied(double t, const OrdererConfig& cfg) override {
        std::ostringstream os;
        os << "config t=" << t << " mc=" << cfg.max_message_count;
        lines.push_back(os.str());
        config_applied_at.push_back(t);
    }
};

std::vector<std::pair<std::string, LedgerValue>> gen_keys(int n,
                                                          std::uint32_t bytes = 200) {
    std::vector<std::pair<std::string, LedgerValue>> entries;
    for (int i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "g%04d", i);
        entries.emplace_back(buf, LedgerValue{bytes, 0, 0.0});
    }
    return entries;
}

Submission update_at(double t, const std::string& key, const std::string& client = "c1",
                     const std::string& org = "Org1") {
    Submission s;
    s.time = t;
    s.client_id = client;
    s.org_id = org;
    s.call = ContractCall{ContractFunction::GeneratorUpdate, ContractVariant::Vanilla,
                          key};
    return s;
}

}  // namespace

TEST_CASE("endorsement takes base + hop before the tx reaches the pool") {
    Simulator sim({}, {});
    sim.seed_genesis(gen_keys(1));
    sim.submit(update_at(0.0, "g0000"));
    sim.advance_until(0.0149);
    CHECK(sim.pool_size() == 0);
    sim.advance_until(0.0151);
    CHECK(sim.pool_size() == 1);
    CHECK(sim.stats().endorsed == 1);
}

TEST_CASE("delta revenue aggregation delays pool entry by 0.5s") {
    Simulator sim({}, {});
    sim.seed_genesis({{"M0001", LedgerValue{200, 5, 0.0}}});
    Submission s;
    s.time = 0.0;
    s.client_id = "c1";
    s.org_id = "Org1";
    s.call = ContractCall{ContractFunction::CalculateRevenue, ContractVariant::Delta,
                          "M0001"};
    sim.submit(s);
    sim.advance_until(0.514);
    CHECK(sim.pool_size() == 0);
    sim.advance_until(0.516);
    CHECK(sim.pool_size() == 1);
}

TEST_CASE("a full orderer pool drops the overflow tx") {
    CostModel costs;
    costs.orderer_queue_cap = 5;
    OrdererConfig cfg;
    cfg.max_message_count = 1000;
    cfg.preferred_max_bytes_mb = 1000.0;
    cfg.batch_timeout_s = 1e6;
    Simulator sim(cfg, costs);
    sim.seed_genesis(gen_keys(6));
    for (int i = 0; i < 6; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        sim.submit(update_at(0.0, key));
    }
    auto outcomes = sim.advance_until(1.0);
    CHECK(sim.pool_size() == 5);
    CHECK(sim.stats().dropped_orderer == 1);
    REQUIRE(outcomes.size() == 1);
    CHECK(outcomes[0].status == TxStatus::Dropped);
    CHECK(outcomes[0].t_committed < 0.0);
    // Conservation with txs still parked in the pool.
    CHECK(sim.stats().submitted ==
          sim.stats().committed + sim.stats().aborted_mvcc + sim.stats().aborted_vscc +
              sim.stats().dropped() + sim.in_flight());
}

TEST_CASE("a full endorser waiting line drops at the gateway") {
    CostModel costs;
    costs.endorser_workers = 2;
    costs.endorser_queue_cap = 3;
    Simulator sim({}, costs);
    sim.seed_genesis(gen_keys(6));
    for (int i = 0; i < 6; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        sim.submit(update_at(0.0, key));
    }
    sim.advance_until(0.0);
    CHECK(sim.endorser_queue_size() == 3);
    CHECK(sim.stats().dropped_endorser == 1);
}

TEST_CASE("block pipeline time decomposes into configured stage costs") {
    // order 0.05 + 10*0.001, then vscc 10*0.001 + commit writes 10*0.002:
    // 0.09s from cut to commit.
    CostModel costs;
    costs.order_per_block = 0.05;
    costs.order_per_tx = 0.001;
    costs.vscc_per_tx = 0.001;
    costs.commit_per_block = 0.0;
    costs.commit_per_write = 0.002;
    OrdererConfig cfg;
    cfg.max_message_count = 10;
    Simulator sim(cfg, costs);
    sim.seed_genesis(gen_keys(10));
    for (int i = 0; i < 10; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        sim.submit(update_at(0.0, key));
    }
    auto outcomes = sim.advance_until(1.0);
    REQUIRE(outcomes.size() == 10);
    for (const auto& o : outcomes) {
        CHECK(o.status == TxStatus::Committed);
        // endorse done (and cut) at 0.015, plus the 0.09 block pipeline
        CHECK(o.t_committed == doctest::Approx(0.105).epsilon(1e-9));
    }
    CHECK(sim.stats().blocks_cut == 1);
    CHECK(sim.stats().blocks_committed == 1);
}

TEST_CASE("idle advance moves the clock and returns nothing") {
    Simulator sim({}, {});
    auto outcomes = sim.advance_until(5.0);
    CHECK(outcomes.empty());
    CHECK(sim.now() == 5.0);
}

TEST_CASE("timeout cut flushes a quiet pool after batch_timeout") {
    CaptureTrace trace;
    Simulator traced({}, {}, 2, {}, &trace);
    traced.seed_genesis(gen_keys(3));
    for (int i = 0; i < 3; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        traced.submit(update_at(0.0, key));
    }
    auto outcomes = traced.advance_until(10.0);
    REQUIRE(outcomes.size() == 3);
    for (const auto& o : outcomes) CHECK(o.status == TxStatus::Committed);
    REQUIRE(trace.ordered_blocks.size() == 1);
    CHECK(trace.ordered_blocks[0].reason == CutReason::Timeout);
    CHECK(trace.ordered_blocks[0].n_txs == 3);
    // Pool formed at 0.015; timeout 2s; ordering 0.05 + 3*0.0002.
    CHECK(trace.ordered_blocks[0].time == doctest::Approx(2.0656).epsilon(1e-6));
}

TEST_CASE("snapshots fire on byte cadence and stall validation") {
    // 100 txs/block * 20kB per record = 2 MB blocks; S_I = 16 MB -> a snapshot
    // after every 8th committed block.
    ContractParams cp;
    cp.record_bytes = 20000;
    OrdererConfig cfg;
    cfg.max_message_count = 100;
    CaptureTrace trace;
    Simulator sim(cfg, {}, 2, cp, &trace);
    sim.seed_genesis(gen_keys(2400, 200));
    for (int i = 0; i < 2400; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        sim.submit(update_at(0.0, key));
    }
    auto outcomes = sim.advance_until(200.0);
    CHECK(outcomes.size() == 2400);
    CHECK(sim.stats().committed == 2400);
    CHECK(sim.stats().blocks_committed == 24);
    CHECK(sim.stats().snapshots == 3);
    CHECK(sim.bytes_since_snapshot_mb() < 16.0);

    // Each snapshot line sits right after the 8th/16th/24th validated line.
    std::vector<std::uint64_t> before_snapshot;
    std::uint64_t last_seq = 0;
    for (const std::string& line : trace.lines) {
        if (line.rfind("validated", 0) == 0) {
            auto pos = line.find("seq=");
            last_seq = std::stoull(line.substr(pos + 4));
        } else if (line.rfind("snapshot", 0) == 0) {
            before_snapshot.push_back(last_seq);
        }
    }
    CHECK(before_snapshot == std::vector<std::uint64_t>{8, 16, 24});
}

TEST_CASE("config transactions take effect at commit, not at proposal") {
    CaptureTrace trace;
    Simulator sim({}, {}, 2, {}, &trace);
    sim.seed_genesis(gen_keys(40));
    for (int i = 0; i < 20; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        sim.submit(update_at(0.0, key));
    }
    sim.advance_until(0.1);
    OrdererConfig next;
    next.max_message_count = 5;
    sim.propose_config(next);

    sim.advance_until(0.5);
    CHECK(sim.config().max_message_count == 500);  // not yet committed

    sim.advance_until(2.0);
    CHECK(sim.config().max_message_count == 5);
    CHECK(sim.stats().configs_applied == 1);
    REQUIRE(trace.config_applied_at.size() == 1);

    for (int i = 20; i < 40; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i);
        sim.submit(update_at(2.0, key));
    }
    sim.advance_until(6.0);

    REQUIRE(trace.ordered_blocks.size() == 6);
    // The proposal flushed the 20 queued txs, then rode alone.
    CHECK(trace.ordered_blocks[0].reason == CutReason::ConfigFlush);
    CHECK(trace.ordered_blocks[0].n_txs == 20);
    CHECK(trace.ordered_blocks[1].reason == CutReason::ConfigFlush);
    CHECK(trace.ordered_blocks[1].n_txs == 1);
    // Everything after the commit obeys the new count.
    for (int b = 2; b < 6; ++b) {
        CHECK(trace.ordered_blocks[b].reason == CutReason::MsgCount);
        CHECK(trace.ordered_blocks[b].n_txs == 5);
        CHECK(trace.ordered_blocks[b].time > trace.config_applied_at[0]);
    }
    CHECK(sim.stats().committed == 40);
}

TEST_CASE("config flush under steady arrivals stays bounded and applies promptly") {
    // Regression: the flush used to re-cut "the current pool" on every
    // ordering completion, which livelocks when traffic keeps the pool
    // non-empty — the config never rides and tiny ConfigFlush blocks starve
    // the validator. Only txs admitted before the proposal may be flushed.
    CaptureTrace trace;
    OrdererConfig cfg;
    cfg.max_message_count = 100;
    Simulator sim(cfg, {}, 2, {}, &trace);
    sim.seed_genesis(gen_keys(200));
    for (int i = 0; i < 3000; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i % 200);
        sim.submit(update_at(i / 300.0, key));
    }
    sim.advance_until(1.0);
    OrdererConfig next = cfg;
    next.batch_timeout_s = 1.0;
    sim.propose_config(next);
    sim.advance_until(60.0);

    CHECK(sim.stats().configs_applied == 1);
    REQUIRE(trace.config_applied_at.size() == 1);
    CHECK(trace.config_applied_at[0] < 5.0);
    long flush_blocks = 0;
    for (const auto& b : trace.ordered_blocks)
        if (b.reason == CutReason::ConfigFlush) ++flush_blocks;
    // At most ceil(pool-at-proposal / max_message_count) + the config's own
    // block; the buggy version emitted dozens and kept going.
    CHECK(flush_blocks <= 4);
    CHECK(sim.in_flight() == 0);
    CHECK(sim.stats().committed + sim.stats().aborted_mvcc == 3000);
}

TEST_CASE("re-proposing the current config changes nothing observable") {
    Simulator sim({}, {});
    sim.seed_genesis(gen_keys(1));
    sim.propose_config(OrdererConfig{});
    sim.advance_until(5.0);
    CHECK(sim.config() == OrdererConfig{});
    CHECK(sim.stats().configs_applied == 1);
    CHECK(sim.stats().blocks_committed == 1);
    CHECK(sim.stats().committed == 0);  // client tx counters untouched
    CHECK(sim.ledger_height() == 1);
    CHECK(sim.in_flight() == 0);
}

TEST_CASE("invalid config proposals are rejected up front") {
    Simulator sim({}, {});
    OrdererConfig bad;
    bad.max_message_count = 0;
    CHECK_THROWS_AS(sim.propose_config(bad), InvalidConfigError);
    CHECK(sim.config().max_message_count == 500);
}

TEST_CASE("endorsement reads the world as of endorsement time, not submit time") {
    OrdererConfig cfg;
    cfg.max_message_count = 1;  // every tx rides its own block
    Simulator sim(cfg, {});
    sim.seed_genesis(gen_keys(1));
    sim.submit(update_at(0.0, "g0000"));  // T1: commits ~0.42
    sim.submit(update_at(0.1, "g0000"));  // T2: endorses at 0.115, stale by commit
    sim.submit(update_at(1.0, "g0000"));  // T3: endorses post-commit, fresh
    auto outcomes = sim.advance_until(10.0);
    REQUIRE(outcomes.size() == 3);
    std::map<std::string, TxStatus> by_id;
    std::map<std::string, double> committed_at;
    for (const auto& o : outcomes) {
        by_id[o.tx_id] = o.status;
        committed_at[o.tx_id] = o.t_committed;
    }
    CHECK(by_id["T1"] == TxStatus::Committed);
    CHECK(by_id["T2"] == TxStatus::AbortedMVCC);
    CHECK(by_id["T3"] == TxStatus::Committed);
    CHECK(committed_at["T2"] > 0.0);  // aborts are timestamped at validation
    CHECK(sim.stats().committed == 2);
    CHECK(sim.stats().aborted_mvcc == 1);
    const WorldEntry* entry = sim.world().find("g0000");
    REQUIRE(entry != nullptr);
    CHECK(entry->value.play_count == 2);
    CHECK(entry->version == Version{3, 0});
}

TEST_CASE("under-endorsed transactions abort at validation") {
    Simulator sim({}, {});  // policy 2
    sim.seed_genesis(gen_keys(2));
    Submission weak = update_at(0.0, "g0000");
    weak.endorsements = 1;
    sim.submit(weak);
    sim.submit(update_at(0.0, "g0001"));
    auto outcomes = sim.advance_until(10.0);
    REQUIRE(outcomes.size() == 2);
    std::map<std::string, TxStatus> by_id;
    for (const auto& o : outcomes) by_id[o.tx_id] = o.status;
    CHECK(by_id["T1"] == TxStatus::AbortedVSCC);
    CHECK(by_id["T2"] == TxStatus::Committed);
    CHECK(sim.stats().aborted_vscc == 1);
}

namespace {

struct RunResult {
    std::vector<std::string> lines;
    std::vector<TxOutcome> outcomes;
    Simulator::Stats stats;
    CaptureTrace trace;
};

// Busy mixed workload: cyclic hot keys for MVCC churn, every 7th tx
// under-endorsed, no drops.
RunResult busy_run() {
    RunResult r;
    OrdererConfig cfg;
    cfg.max_message_count = 50;
    auto sim = std::make_unique<Simulator>(cfg, CostModel{}, 2, ContractParams{},
                                           &r.trace);
    sim->seed_genesis(gen_keys(20));
    for (int i = 0; i < 600; ++i) {
        char key[16];
        std::snprintf(key, sizeof key, "g%04d", i % 20);
        Submission s = update_at(i * 0.005, key, i % 2 ? "c1" : "c2",
                                 i % 2 ? "Org1" : "Org2");
        if (i % 7 == 0) s.endorsements = 1;
        sim->submit(s);
    }
    for (double t : {1.0, 2.5, 60.0}) {
        auto chunk = sim->advance_until(t);
        r.outcomes.insert(r.outcomes.end(), chunk.begin(), chunk.end());
        // Conservation holds at every observation point, not just at the end.
        const auto& st = sim->stats();
        REQUIRE(st.submitted == st.committed + st.aborted_mvcc + st.aborted_vscc +
                                    st.dropped() + sim->in_flight());
    }
    r.lines = r.trace.lines;
    r.stats = sim->stats();
    REQUIRE(sim->in_flight() == 0);
    REQUIRE(sim->pool_size() == 0);
    return r;
}

}  // namespace

TEST_CASE("busy run: FIFO block order, status mix, and full determinism") {
    RunResult a = busy_run();

    CHECK(a.stats.submitted == 600);
    CHECK(a.stats.committed > 0);
    CHECK(a.stats.aborted_mvcc > 0);   // hot keys collide inside blocks
    CHECK(a.stats.aborted_vscc > 0);   // the under-endorsed seventh txs
    CHECK(a.stats.dropped() == 0);
    CHECK(a.stats.committed + a.stats.aborted_mvcc + a.stats.aborted_vscc == 600);

    // Blocks preserve orderer arrival order: the concatenation of block tx
    // ids equals the endorsement completion order.
    std::vector<std::string> in_blocks;
    for (const auto& block : a.trace.ordered_blocks) {
        in_blocks.insert(in_blocks.end(), block.tx_ids.begin(), block.tx_ids.end());
    }
    CHECK(in_blocks == a.trace.endorse_order);

    // Committed timestamps never precede submission.
    for (const auto& o : a.outcomes) {
        REQUIRE(o.t_committed >= o.t_submitted);
    }

    RunResult b = busy_run();
    CHECK(a.lines == b.lines);
    REQUIRE(a.outcomes.size() == b.outcomes.size());
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
        CHECK(a.outcomes[i].tx_id == b.outcomes[i].tx_id);
        CHECK(a.outcomes[i].status == b.outcomes[i].status);
        CHECK(a.outcomes[i].t_committed == b.outcomes[i].t_committed);
    }
}
