#include "doctest.h"

#include "chainpilot/ledger.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

using namespace chainpilot;

namespace {

Transaction make_tx(std::string id,
                    std::vector<std::pair<std::string, Version>> reads,
                    std::vector<std::pair<std::string, LedgerValue>> writes,
                    std::uint32_t endorsements = 2) {
    Transaction tx;
    tx.tx_id = std::move(id);
    tx.read_set = std::move(reads);
    tx.write_set = std::move(writes);
    tx.endorsement_count = endorsements;
    return tx;
}

// Independent re-derivation of block validation used to cross-check
// plan_block: plain map copy, no staging tricks, no early-exit reuse.
struct OracleOutcome {
    std::vector<TxStatus> statuses;
    std::unordered_map<std::string, WorldEntry> world;
};

OracleOutcome oracle_validate(const WorldState& state, const Block& block,
                              std::uint32_t policy) {
    OracleOutcome out;
    for (const auto& [key, entry] : state.entries()) out.world[key] = entry;
    for (std::uint32_t idx = 0; idx < block.txs.size(); ++idx) {
        const Transaction& tx = block.txs[idx];
        TxStatus st = TxStatus::Committed;
        if (tx.endorsement_count < policy) st = TxStatus::AbortedVSCC;
        if (st == TxStatus::Committed) {
            for (const auto& [key, seen] : tx.read_set) {
                auto it = out.world.find(key);
                if (it == out.world.end() || !(it->second.version == seen)) {
                    st = TxStatus::AbortedMVCC;
                    break;
                }
            }
        }
        if (st == TxStatus::Committed) {
            for (const auto& [key, value] : tx.write_set) {
                out.world[key] = WorldEntry{value, Version{block.seq, idx}};
            }
        }
        out.statuses.push_back(st);
    }
    return out;
}

}  // namespace

TEST_CASE("same-block read-write conflict: first tx wins, second aborts") {
    WorldState world;
    world.put("x", LedgerValue{100, 0, 0.0}, Version{1, 0});

    Block block;
    block.seq = 2;
    block.txs.push_back(make_tx("A", {{"x", Version{1, 0}}},
                                {{"x", LedgerValue{100, 1, 0.0}}}));
    block.txs.push_back(make_tx("B", {{"x", Version{1, 0}}},
                                {{"x", LedgerValue{100, 2, 0.0}}}));

    auto [post, result] = validate_block(world, block, 2, 2);
    REQUIRE(result.verdicts.size() == 2);
    CHECK(result.verdicts[0].tx_id == "A");
    CHECK(result.verdicts[0].status == TxStatus::Committed);
    CHECK(result.verdicts[1].tx_id == "B");
    CHECK(result.verdicts[1].status == TxStatus::AbortedMVCC);
    CHECK(result.committed_count == 1);

    const WorldEntry* entry = post.find("x");
    REQUIRE(entry != nullptr);
    CHECK(entry->value.play_count == 1);  // A's write, not B's
    CHECK(entry->version == Version{2, 0});
}

TEST_CASE("empty block commits nothing and advances nothing") {
    WorldState world;
    world.put("x", LedgerValue{10, 0, 0.0}, Version{1, 0});
    Block block;
    block.seq = 2;

    auto [post, result] = validate_block(world, block, 2, 2);
    CHECK(result.verdicts.empty());
    CHECK(result.committed_count == 0);
    CHECK(result.committed_writes == 0);
    CHECK(post.find("x")->version == Version{1, 0});
}

TEST_CASE("endorsement policy: zero endorsements fail VSCC before MVCC") {
    WorldState world;
    world.put("x", LedgerValue{10, 0, 0.0}, Version{1, 0});
    Block block;
    block.seq = 2;
    // Read set is stale too, but VSCC must be the reported reason.
    block.txs.push_back(make_tx("t", {{"x", Version{0, 0}}},
                                {{"x", LedgerValue{10, 1, 0.0}}}, /*endorsements=*/0));

    auto [post, result] = validate_block(world, block, 1, 2);
    REQUIRE(result.verdicts.size() == 1);
    CHECK(result.verdicts[0].status == TxStatus::AbortedVSCC);
    CHECK(post.find("x")->value.play_count == 0);
}

TEST_CASE("write-only transactions on the same key all commit") {
    // Delta-style appends: disjoint fresh keys, empty read sets.
    WorldState world;
    world.put("M01", LedgerValue{200, 3, 3.0}, Version{1, 0});

    Block block;
    block.seq = 2;
    block.txs.push_back(make_tx("T01", {}, {{"M01+1T01", LedgerValue{40, 1, 1.0}}}));
    block.txs.push_back(make_tx("T02", {}, {{"M01+1T02", LedgerValue{40, 1, 1.0}}}));
    block.txs.push_back(make_tx("T03", {}, {{"M01+1T03", LedgerValue{40, 1, 1.0}}}));

    auto [post, result] = validate_block(world, block, 2, 2);
    CHECK(result.committed_count == 3);
    for (const auto& v : result.verdicts) CHECK(v.status == TxStatus::Committed);
    CHECK(post.find("M01+1T01")->version == Version{2, 0});
    CHECK(post.find("M01+1T02")->version == Version{2, 1});
    CHECK(post.find("M01+1T03")->version == Version{2, 2});
    // Base record untouched.
    CHECK(post.find("M01")->version == Version{1, 0});
}

TEST_CASE("read of a missing key aborts MVCC") {
    WorldState world;
    Block block;
    block.seq = 0;
    block.txs.push_back(make_tx("t", {{"ghost", Version{0, 0}}}, {}));
    auto [post, result] = validate_block(world, block, 2, 0);
    CHECK(result.verdicts[0].status == TxStatus::AbortedMVCC);
}

TEST_CASE("sequence gap is rejected") {
    WorldState world;
    Block block;
    block.seq = 5;
    CHECK_THROWS_AS(plan_block(world, block, 2, 4), SequenceGapError);
    CHECK_THROWS_AS(plan_block(world, block, 2, 6), SequenceGapError);
    CHECK_NOTHROW(plan_block(world, block, 2, 5));
}

TEST_CASE("staged writes shadow the base state within a block") {
    // tx0 writes k; tx1 reads k at the *new* version and must commit.
    WorldState world;
    world.put("k", LedgerValue{10, 0, 0.0}, Version{1, 0});
    Block block;
    block.seq = 2;
    block.txs.push_back(make_tx("w", {{"k", Version{1, 0}}},
                                {{"k", LedgerValue{10, 1, 0.0}}}));
    block.txs.push_back(make_tx("r-new", {{"k", Version{2, 0}}},
                                {{"k", LedgerValue{10, 2, 0.0}}}));
    auto [post, result] = validate_block(world, block, 2, 2);
    CHECK(result.verdicts[0].status == TxStatus::Committed);
    CHECK(result.verdicts[1].status == TxStatus::Committed);
    CHECK(post.find("k")->value.play_count == 2);
    CHECK(post.find("k")->version == Version{2, 1});
}

TEST_CASE("world state byte accounting stays consistent under churn") {
    WorldState world;
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> key_pick(0, 49);
    std::uniform_int_distribution<std::uint32_t> size_pick(0, 4096);
    for (int i = 0; i < 2000; ++i) {
        std::string key = "key" + std::to_string(key_pick(rng));
        world.put(key, LedgerValue{size_pick(rng), 0, 0.0},
                  Version{static_cast<std::uint64_t>(i), 0});
    }
    CHECK(world.total_bytes() == world.recompute_total_bytes());
    CHECK(world.total_mb() == doctest::Approx(world.total_bytes() / 1e6));
}

TEST_CASE("validation agrees with an independent oracle over random blocks") {
    std::mt19937_64 rng(20240817);
    std::uniform_int_distribution<int> key_pick(0, 11);
    std::uniform_int_distribution<int> n_tx(0, 8);
    std::uniform_int_distribution<int> n_rw(0, 3);
    std::uniform_int_distribution<int> endorse_pick(0, 3);
    std::uniform_int_distribution<std::uint64_t> stale_seq(0, 2);

    WorldState world;
    for (int k = 0; k < 12; ++k) {
        world.put("k" + std::to_string(k), LedgerValue{64, 0, 0.0}, Version{0, 0});
    }

    std::uint64_t seq = 1;
    for (int round = 0; round < 300; ++round) {
        Block block;
        block.seq = seq;
        int txs = n_tx(rng);
        for (int t = 0; t < txs; ++t) {
            Transaction tx;
            tx.tx_id = "b" + std::to_string(round) + "t" + std::to_string(t);
            tx.endorsement_count = static_cast<std::uint32_t>(endorse_pick(rng));
            int reads = n_rw(rng);
            for (int r = 0; r < reads; ++r) {
                std::string key = "k" + std::to_string(key_pick(rng));
                // Mix of honest reads (current version) and stale/garbage ones.
                Version seen{0, 0};
                if (const WorldEntry* cur = world.find(key)) seen = cur->version;
                if (stale_seq(rng) == 0) seen.block_seq += 1;
                tx.read_set.emplace_back(key, seen);
            }
            int writes = n_rw(rng);
            for (int w = 0; w < writes; ++w) {
                std::string key = "k" + std::to_string(key_pick(rng));
                tx.write_set.emplace_back(
                    key, LedgerValue{64, round, static_cast<double>(t)});
            }
            block.txs.push_back(std::move(tx));
        }

        OracleOutcome expect = oracle_validate(world, block, 2);
        auto [post, result] = validate_block(world, block, 2, seq);

        REQUIRE(result.verdicts.size() == expect.statuses.size());
        std::uint64_t oracle_committed = 0;
        for (std::size_t i = 0; i < expect.statuses.size(); ++i) {
            CHECK(result.verdicts[i].status == expect.statuses[i]);
            if (expect.statuses[i] == TxStatus::Committed) ++oracle_committed;
        }
        CHECK(result.committed_count == oracle_committed);
        REQUIRE(post.size() == expect.world.size());
        for (const auto& [key, entry] : expect.world) {
            const WorldEntry* got = post.find(key);
            REQUIRE(got != nullptr);
            CHECK(got->version == entry.version);
            CHECK(got->value == entry.value);
        }
        world = std::move(post);
        ++seq;
    }
}

TEST_CASE("committed write versions are monotone across blocks") {
    WorldState world;
    world.put("k", LedgerValue{8, 0, 0.0}, Version{0, 0});
    Version last{0, 0};
    for (std::uint64_t s = 1; s <= 50; ++s) {
        Block block;
        block.seq = s;
        Version seen = world.find("k")->version;
        block.txs.push_back(make_tx("t" + std::to_string(s), {{"k", seen}},
                                    {{"k", LedgerValue{8, 0, 0.0}}}));
        ValidationResult res = apply_block(world, block, 2, s);
        REQUIRE(res.verdicts[0].status == TxStatus::Committed);
        Version now = world.find("k")->version;
        CHECK(last < now);
        last = now;
    }
}

TEST_CASE("write-only transactions never abort on MVCC regardless of state") {
    std::mt19937_64 rng(99);
    WorldState world;
    std::uniform_int_distribution<int> key_pick(0, 5);
    for (std::uint64_t s = 0; s < 40; ++s) {
        Block block;
        block.seq = s;
        for (int t = 0; t < 4; ++t) {
            block.txs.push_back(make_tx(
                "t", {}, {{"k" + std::to_string(key_pick(rng)), LedgerValue{8, 0, 0.0}}}));
        }
        ValidationResult res = apply_block(world, block, 2, s);
        for (const auto& v : res.verdicts) CHECK(v.status == TxStatus::Committed);
    }
}
