#include "chainpilot/envs.hpp"

#include <cstdio>
#include <stdexcept>

namespace chainpilot {

namespace {
// Independent stream for workload draws so agent exploration noise never
// perturbs the traffic, and vice versa.
constexpr std::uint64_t kWorkloadSeedSalt = 0x9e3779b97f4a7c15ULL;

std::string fmt_rate_phase(double fleet_rate) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "r%.0f", fleet_rate);
    return buf;
}

// The scenario dictates the family; fixing it before base construction keeps
// the genesis key set aligned with what the generator will target.
WorkloadSpec with_family(WorkloadSpec spec, WorkloadFamily family) {
    spec.family = family;
    return spec;
}
}  // namespace

OrdererConfig decode_param_action(std::size_t index) {
    if (index >= kParamActionCount)
        throw std::out_of_range("param action index out of range");
    OrdererConfig cfg;
    cfg.max_message_count = kMsgCountGrid[index / 27];
    cfg.preferred_max_bytes_mb = kMaxBytesGridMb[(index / 9) % 3];
    cfg.batch_timeout_s = kTimeoutGridS[(index / 3) % 3];
    cfg.snapshot_interval_mb = kSnapshotGridMb[index % 3];
    return cfg;
}

ContractVariant decode_contract_action(std::size_t index) {
    if (index >= kContractActionCount)
        throw std::out_of_range("contract action index out of range");
    return index == 0 ? ContractVariant::Vanilla : ContractVariant::Delta;
}

AdmissionPolicy decode_admission_action(std::size_t index) {
    if (index >= kAdmissionActionCount)
        throw std::out_of_range("admission action index out of range");
    AdmissionPolicy p;
    p.org1 = kAdmissionGrid[index / 3];
    p.org2 = kAdmissionGrid[index % 3];
    return p;
}

SimEnv::SimEnv(const EnvOptions& opt, std::vector<ClientSpec> clients,
               const WorkloadSpec& spec, RateSchedule schedule)
    : opt_(opt),
      clients_(std::move(clients)),
      spec_(spec),
      schedule_(std::move(schedule)),
      sim_(opt.initial_config, opt.costs, opt.endorsement_policy,
           opt.contract_params, opt.trace),
      wl_rng_(opt.seed ^ kWorkloadSeedSalt) {
    sim_.seed_genesis(genesis_entries(spec_));
}

StepMetrics SimEnv::advance_step(const AdmissionPolicy& policy) {
    const double start = sim_.now();
    const std::vector<Submission> subs =
        generate_step(spec_, clients_, step_, schedule_, policy,
                      opt_.step_duration, start, wl_rng_);
    std::map<std::string, long> offered;
    for (const ClientSpec& c : clients_) offered[c.client_id] = 0;
    for (const Submission& s : subs) offered[s.client_id]++;
    for (const Submission& s : subs) sim_.submit(s);
    const std::vector<TxOutcome> outcomes =
        sim_.advance_until(start + opt_.step_duration);
    StepMetrics m = collect(outcomes, offered, opt_.step_duration, prev_jain_);
    prev_jain_ = m.jain;
    step_++;
    return m;
}

ParamTuningEnv::ParamTuningEnv(const EnvOptions& opt)
    : SimEnv(opt, param_clients(), opt.workload,
             RateSchedule{100, {300.0, 500.0}}) {}

EnvStep ParamTuningEnv::step(std::optional<std::size_t> action) {
    if (action) sim_.propose_config(decode_param_action(*action));
    double fleet_base = 0.0;
    for (const ClientSpec& c : clients_) fleet_base += c.base_rate;
    const std::string phase = fmt_rate_phase(schedule_.fleet_rate(step_, fleet_base));

    EnvStep out;
    out.metrics = advance_step(AdmissionPolicy{});
    // Goodput, not raw completions: once the pipeline runs hot, aborted txs
    // skip the commit-write cost and completions self-regulate to the offered
    // rate for almost any knob setting — committed throughput is the signal
    // that actually separates configurations.
    out.obs = {out.metrics.success_tps / 1000.0, out.metrics.send_rate / 1000.0};
    out.reward = out.metrics.send_rate > 0.0
                     ? out.metrics.success_tps / out.metrics.send_rate
                     : 0.0;
    out.phase = phase;
    return out;
}

ContractEnv::ContractEnv(const EnvOptions& opt)
    : SimEnv(opt, music_clients(),
             with_family(opt.workload, WorkloadFamily::MusicOscillating),
             RateSchedule{}) {
    if (!opt_.client_config_path.empty()) {
        // Publish the starting variant so the file is authoritative from step 0.
        ClientConfig cfg;
        cfg.variant = spec_.variant;
        cfg.save_atomic(opt_.client_config_path);
    }
}

void ContractEnv::apply_variant(ContractVariant v) {
    if (opt_.client_config_path.empty()) {
        spec_.variant = v;
        return;
    }
    // Round-trip through the client config file: the controller edits it, the
    // clients pick it up when generating the next step's proposals.
    ClientConfig cfg = ClientConfig::load(opt_.client_config_path);
    cfg.variant = v;
    cfg.save_atomic(opt_.client_config_path);
    spec_.variant = ClientConfig::load(opt_.client_config_path).variant;
}

EnvStep ContractEnv::step(std::optional<std::size_t> action) {
    if (action) apply_variant(decode_contract_action(*action));
    const std::string phase =
        music_phase(spec_, step_) == MusicPhase::Update ? "update" : "compute";

    EnvStep out;
    out.metrics = advance_step(AdmissionPolicy{});
    out.obs = {out.metrics.success_tps / 1000.0, out.metrics.send_rate / 1000.0};
    out.reward = out.metrics.send_rate > 0.0
                     ? out.metrics.success_tps / out.metrics.send_rate
                     : 0.0;
    out.phase = phase;
    return out;
}

AdmissionEnv::AdmissionEnv(const EnvOptions& opt)
    : SimEnv(opt, fairness_clients(),
             with_family(opt.workload, WorkloadFamily::SkewedUpdate),
             RateSchedule{}) {
    if (!opt_.client_config_path.empty()) {
        ClientConfig cfg;
        cfg.org1_rate = policy_.org1;
        cfg.org2_rate = policy_.org2;
        cfg.save_atomic(opt_.client_config_path);
    }
}

void AdmissionEnv::apply_policy(const AdmissionPolicy& p) {
    if (opt_.client_config_path.empty()) {
        policy_ = p;
        return;
    }
    ClientConfig cfg = ClientConfig::load(opt_.client_config_path);
    cfg.org1_rate = p.org1;
    cfg.org2_rate = p.org2;
    cfg.save_atomic(opt_.client_config_path);
    const ClientConfig applied = ClientConfig::load(opt_.client_config_path);
    policy_.org1 = applied.org1_rate;
    policy_.org2 = applied.org2_rate;
}

EnvStep AdmissionEnv::step(std::optional<std::size_t> action) {
    if (action) apply_policy(decode_admission_action(*action));

    EnvStep out;
    out.metrics = advance_step(policy_);
    out.obs = {out.metrics.success_tps / 1000.0, out.metrics.send_rate / 1000.0,
               out.metrics.jain};
    out.reward = out.metrics.jain;
    out.phase = "steady";
    return out;
}

}  // namespace chainpilot
