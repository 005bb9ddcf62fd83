#include "doctest.h"

#include "chainpilot/telemetry.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

using namespace chainpilot;

namespace {

TxOutcome outcome(TxStatus status, const std::string& client, const std::string& org,
                  double submitted = 0.0, double committed = 1.0) {
    return TxOutcome{"T", client, org, "GeneratorUpdate", status, submitted, committed};
}

}  // namespace

TEST_CASE("jain index hand values") {
    CHECK(jain_index(100, 100) == doctest::Approx(1.0));
    CHECK(jain_index(100, 0) == doctest::Approx(0.5));
    CHECK(jain_index(300, 100) == doctest::Approx(0.8));
    CHECK_THROWS_AS(jain_index(0, 0), std::domain_error);
}

TEST_CASE("jain index symmetry and scale invariance") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> value(0.0, 1000.0);
    std::uniform_real_distribution<double> scale(0.001, 1000.0);
    for (int i = 0; i < 1000; ++i) {
        double a = value(rng), b = value(rng);
        if (a + b == 0.0) continue;
        const double j = jain_index(a, b);
        CHECK(std::abs(j - jain_index(b, a)) < 1e-12);
        const double k = scale(rng);
        CHECK(std::abs(j - jain_index(k * a, k * b)) < 1e-12);
        CHECK(j > 0.0);
        CHECK(j <= 1.0 + 1e-15);
        CHECK(std::abs(jain_index(a, a) - 1.0) < 1e-12);
    }
}

TEST_CASE("throughput split: 450 committed + 50 aborted over 30s") {
    std::vector<TxOutcome> outcomes;
    for (int i = 0; i < 450; ++i)
        outcomes.push_back(outcome(TxStatus::Committed, i % 2 ? "c01" : "c06",
                                   i % 2 ? "Org1" : "Org2", 0.0, 2.5));
    for (int i = 0; i < 50; ++i)
        outcomes.push_back(outcome(TxStatus::AbortedMVCC, "c01", "Org1"));

    StepMetrics m = collect(outcomes, {{"c01", 275}, {"c06", 225}}, 30.0, 0.5);
    CHECK(m.overall_tps == doctest::Approx(500.0 / 30.0));
    CHECK(m.success_tps == doctest::Approx(15.0));
    CHECK(m.send_rate == doctest::Approx(500.0 / 30.0));
    CHECK(m.avg_latency == doctest::Approx(2.5));
    CHECK(m.committed == 450);
    CHECK(m.aborted_mvcc == 50);
    CHECK(m.committed + m.aborted_mvcc + m.aborted_vscc + m.dropped ==
          static_cast<long>(outcomes.size()));
}

TEST_CASE("empty step: zero rates, latency zero, jain falls back") {
    StepMetrics m = collect({}, {}, 30.0, 0.73);
    CHECK(m.overall_tps == 0.0);
    CHECK(m.success_tps == 0.0);
    CHECK(m.avg_latency == 0.0);
    CHECK(m.send_rate == 0.0);
    CHECK(m.jain == doctest::Approx(0.73));
}

TEST_CASE("all-committed step has equal overall and success throughput") {
    std::vector<TxOutcome> outcomes;
    for (int i = 0; i < 60; ++i)
        outcomes.push_back(outcome(TxStatus::Committed, "c01", "Org1", 1.0, 3.0));
    StepMetrics m = collect(outcomes, {{"c01", 60}}, 30.0, 0.5);
    CHECK(m.overall_tps == m.success_tps);
    CHECK(m.avg_latency == doctest::Approx(2.0));
    // Only one org succeeded -> two-party fairness floor.
    CHECK(m.jain == doctest::Approx(0.5));
    CHECK(m.per_client_success.at("c01") == 60);
    CHECK(m.per_client_success_rate.at("c01") == doctest::Approx(1.0));
}

TEST_CASE("drops and aborts are tallied but excluded from latency") {
    std::vector<TxOutcome> outcomes;
    outcomes.push_back(outcome(TxStatus::Committed, "c01", "Org1", 0.0, 4.0));
    outcomes.push_back(outcome(TxStatus::AbortedVSCC, "c01", "Org1", 0.0, 9.0));
    TxOutcome dropped = outcome(TxStatus::Dropped, "c06", "Org2");
    dropped.t_committed = -1.0;
    outcomes.push_back(dropped);

    StepMetrics m = collect(outcomes, {{"c01", 2}, {"c06", 1}}, 1.0, 0.5);
    CHECK(m.committed == 1);
    CHECK(m.aborted_vscc == 1);
    CHECK(m.dropped == 1);
    CHECK(m.avg_latency == doctest::Approx(4.0));  // the aborted 9s is ignored
    CHECK(m.overall_tps == doctest::Approx(2.0));  // dropped txs never validated
    CHECK(m.per_client_success_rate.at("c01") == doctest::Approx(0.5));
    CHECK(m.per_client_success_rate.at("c06") == doctest::Approx(0.0));
}

TEST_CASE("per-org success rates feed the fairness index") {
    std::vector<TxOutcome> outcomes;
    for (int i = 0; i < 300; ++i)
        outcomes.push_back(outcome(TxStatus::Committed, "c01", "Org1"));
    for (int i = 0; i < 100; ++i)
        outcomes.push_back(outcome(TxStatus::Committed, "c06", "Org2"));
    StepMetrics m =
        collect(outcomes, {{"c01", 300}, {"c06", 100}}, 10.0, 0.5);
    CHECK(m.org1_success == doctest::Approx(30.0));
    CHECK(m.org2_success == doctest::Approx(10.0));
    CHECK(m.jain == doctest::Approx(0.8));
}
