#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainpilot/sim.hpp"
#include "chainpilot/telemetry.hpp"
#include "chainpilot/workload.hpp"

namespace chainpilot {

// Discrete action grids. Decode order is row-major with the first grid
// outermost, so index 0 is the first entry of every grid.
inline constexpr std::array<int, 3> kMsgCountGrid = {300, 500, 1000};
inline constexpr std::array<double, 3> kMaxBytesGridMb = {2.0, 4.0, 16.0};
inline constexpr std::array<double, 3> kTimeoutGridS = {0.5, 1.0, 2.0};
inline constexpr std::array<double, 3> kSnapshotGridMb = {16.0, 32.0, 64.0};
inline constexpr std::array<double, 3> kAdmissionGrid = {1.0, 0.6, 0.4};

inline constexpr std::size_t kParamActionCount = 81;
inline constexpr std::size_t kContractActionCount = 2;
inline constexpr std::size_t kAdmissionActionCount = 9;

/// index -> (max_message_count, preferred_max_bytes, batch_timeout,
/// snapshot_interval); throws std::out_of_range past 80.
OrdererConfig decode_param_action(std::size_t index);

/// index -> contract variant (0 = Vanilla, 1 = Delta).
ContractVariant decode_contract_action(std::size_t index);

/// index -> per-org admission multipliers, Org1 outermost.
AdmissionPolicy decode_admission_action(std::size_t index);

struct EnvOptions {
    CostModel costs;
    OrdererConfig initial_config;
    WorkloadSpec workload;
    double step_duration = 30.0;
    std::uint64_t seed = 1;
    std::string client_config_path;  // empty -> keep controller state in memory
    TraceSink* trace = nullptr;
    std::uint32_t endorsement_policy = 2;
    ContractParams contract_params;
};

struct EnvStep {
    StepMetrics metrics;
    std::vector<double> obs;  // normalized observation
    double reward = 0.0;
    std::string phase;
};

/// Shared chassis: one simulator plus a seeded workload stream, advanced one
/// fixed-duration step at a time.
class SimEnv {
  public:
    virtual ~SimEnv() = default;

    /// Applies the action (none = leave controls untouched), feeds one step
    /// of workload, advances the simulator and reports what happened.
    virtual EnvStep step(std::optional<std::size_t> action) = 0;

    virtual std::size_t n_actions() const = 0;
    virtual int obs_dim() const = 0;

    const Simulator& simulator() const { return sim_; }
    int step_index() const { return step_; }

  protected:
    SimEnv(const EnvOptions& opt, std::vector<ClientSpec> clients,
           const WorkloadSpec& spec, RateSchedule schedule);

    StepMetrics advance_step(const AdmissionPolicy& policy);

    EnvOptions opt_;
    std::vector<ClientSpec> clients_;
    WorkloadSpec spec_;
    RateSchedule schedule_;
    Simulator sim_;
    std::mt19937_64 wl_rng_;
    int step_ = 0;
    double prev_jain_ = 0.5;
};

/// Orderer-knob tuning over the 81-point grid; acting means submitting a
/// config transaction through the pipeline itself.
class ParamTuningEnv : public SimEnv {
  public:
    explicit ParamTuningEnv(const EnvOptions& opt);

    EnvStep step(std::optional<std::size_t> action) override;
    std::size_t n_actions() const override { return kParamActionCount; }
    int obs_dim() const override { return 2; }
};

/// Vanilla-vs-delta contract switching on the oscillating music workload.
class ContractEnv : public SimEnv {
  public:
    explicit ContractEnv(const EnvOptions& opt);

    EnvStep step(std::optional<std::size_t> action) override;
    std::size_t n_actions() const override { return kContractActionCount; }
    int obs_dim() const override { return 2; }

    ContractVariant variant() const { return spec_.variant; }

  private:
    void apply_variant(ContractVariant v);
};

/// Per-org admission throttling on the rate-skewed scenario.
class AdmissionEnv : public SimEnv {
  public:
    explicit AdmissionEnv(const EnvOptions& opt);

    EnvStep step(std::optional<std::size_t> action) override;
    std::size_t n_actions() const override { return kAdmissionActionCount; }
    int obs_dim() const override { return 3; }

    const AdmissionPolicy& policy() const { return policy_; }

  private:
    void apply_policy(const AdmissionPolicy& p);

    AdmissionPolicy policy_;
};

}  // namespace chainpilot
