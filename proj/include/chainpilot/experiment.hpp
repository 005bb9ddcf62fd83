#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainpilot/agent.hpp"
#include "chainpilot/envs.hpp"

namespace chainpilot {

struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kCsvSchemaTag = "step-v1";

/// One CSV row; doubles are written with 6 decimals so identical runs are
/// byte-identical.
struct StepRow {
    long step = 0;
    std::string phase;
    double send_rate = 0.0;
    double overall_tps = 0.0;
    double success_tps = 0.0;
    double avg_latency = 0.0;
    double jain = 0.0;
    double org1_success = 0.0;
    double org2_success = 0.0;
    std::string action = "-";  // agent action index, "-" for baseline rows
    double reward = 0.0;
    double epsilon = 0.0;
};

void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const StepRow& row);

/// Parses a steps CSV; throws SchemaMismatch on a missing/foreign schema tag,
/// wrong header or malformed row, IoError when the file cannot be read.
std::vector<StepRow> read_csv(const std::string& path);

struct WindowMeans {
    double overall_tps = 0.0;
    double success_tps = 0.0;
    double avg_latency = 0.0;
    double jain = 0.0;
};

/// Mean metrics over the last `window` rows (throws std::invalid_argument
/// when the window does not fit).
WindowMeans window_means(const std::vector<StepRow>& rows, long window);

struct CompareSummary {
    long window = 0;
    WindowMeans a;  // first run ("candidate")
    WindowMeans b;  // second run ("baseline")
    double d_overall_pct = 0.0;
    double d_success_pct = 0.0;
    double d_latency_pct = 0.0;
    double d_jain_pct = 0.0;
};

CompareSummary compare_csv(const std::string& path_a, const std::string& path_b,
                           long window);
std::string format_summary(const CompareSummary& s);

std::uint64_t fnv1a(const std::string& s);

/// Streams the simulator's event hooks as one JSON object per line.
class NdjsonTraceSink final : public TraceSink {
  public:
    explicit NdjsonTraceSink(const std::string& path);

    void genesis(const WorldState& state, std::uint32_t policy) override;
    void submit(double t, const Transaction& tx) override;
    void drop(double t, const Transaction& tx, const char* stage) override;
    void endorse(double t, const Transaction& tx, double compute_delay) override;
    void ordered(double t, const Block& block) override;
    void validated(double t, const Block& block, const ValidationResult& r) override;
    void snapshot(double t, double world_mb, double stall) override;
    void config_applied(double t, const OrdererConfig& cfg) override;

  private:
    std::ofstream out_;
};

struct ReplayReport {
    long blocks = 0;
    long txs = 0;
    std::vector<std::string> mismatches;

    bool ok() const { return mismatches.empty(); }
};

/// Re-validates an event-trace dump: rebuilds the world from the genesis
/// record, re-runs every ordered block through the validation rules and
/// compares the verdicts with what the trace recorded.
ReplayReport replay_trace(const std::string& path);

enum class ExperimentKind : std::uint8_t {
    ParamTuning,
    ContractAdapt,
    AdmissionFairness,
};
enum class RunMode : std::uint8_t { Baseline, Learn };

const char* kind_slug(ExperimentKind k);
const char* mode_slug(RunMode m);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::ParamTuning;
    RunMode mode = RunMode::Learn;
    int steps = 400;
    double step_duration = 30.0;
    std::vector<std::uint64_t> seeds = {1};
    std::string out_dir = "out";
    CostModel costs;  // per-kind defaults via default_costs()
    OrdererConfig initial_config;
    WorkloadSpec workload;
    AgentConfig agent;  // obs/action dims and seed are filled per run
    int learn_passes = 1;  // replay updates per environment step
    bool epsilon_constant = false;
    double epsilon_value = 0.2;   // constant-mode exploration rate
    bool emit_trace = false;
    bool emit_plots = false;
    int summary_window = 100;
    std::string baseline_dir;  // optional: per-seed deltas in the summaries

    /// Cost model an experiment kind starts from. The fairness scenario
    /// drives 1750 TPS, so its validator/orderer are provisioned accordingly;
    /// the other two deliberately keep desk-scale bottlenecks.
    static CostModel default_costs(ExperimentKind kind);

    std::string run_dir() const;  // <out_dir>/<kind>-<mode>
    void validate() const;        // throws InvalidConfigError
};

struct SeedRunResult {
    std::string dir;
    std::vector<StepRow> rows;
};

std::unique_ptr<SimEnv> make_env(const ExperimentConfig& cfg, std::uint64_t seed,
                                 TraceSink* trace, const std::string& seed_dir);

/// Runs one seed end to end and writes steps.csv / manifest.json / summary
/// (plus optional weights, trace and plots) under run_dir()/seed-<seed>.
SeedRunResult run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs every configured seed and writes the run-level summary.json.
void run_experiment(const ExperimentConfig& cfg);

}  // namespace chainpilot
