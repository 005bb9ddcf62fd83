#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chainpilot/agent.hpp"
#include "chainpilot/envs.hpp"
#include "chainpilot/experiment.hpp"
#include "chainpilot/sim.hpp"
#include "chainpilot/telemetry.hpp"
#include "chainpilot/workload.hpp"

namespace py = pybind11;
using namespace chainpilot;

PYBIND11_MODULE(_chainpilot, m) {
    m.doc() = "Execute-order-validate pipeline simulator with learning controllers";

    py::register_exception<InvalidConfigError>(m, "InvalidConfigError");
    py::register_exception<SchemaMismatch>(m, "SchemaMismatchError");
    py::register_exception<IoError>(m, "IoError");

    py::enum_<TxStatus>(m, "TxStatus")
        .value("Committed", TxStatus::Committed)
        .value("AbortedMVCC", TxStatus::AbortedMVCC)
        .value("AbortedVSCC", TxStatus::AbortedVSCC)
        .value("Dropped", TxStatus::Dropped);

    py::enum_<ContractFunction>(m, "ContractFunction")
        .value("GeneratorUpdate", ContractFunction::GeneratorUpdate)
        .value("PlayMusic", ContractFunction::PlayMusic)
        .value("CalculateRevenue", ContractFunction::CalculateRevenue);

    py::enum_<ContractVariant>(m, "ContractVariant")
        .value("Vanilla", ContractVariant::Vanilla)
        .value("Delta", ContractVariant::Delta);

    py::enum_<WorkloadFamily>(m, "WorkloadFamily")
        .value("Update", WorkloadFamily::Update)
        .value("SkewedUpdate", WorkloadFamily::SkewedUpdate)
        .value("MusicOscillating", WorkloadFamily::MusicOscillating);

    py::class_<LedgerValue>(m, "LedgerValue")
        .def(py::init<>())
        .def_readwrite("payload_bytes", &LedgerValue::payload_bytes)
        .def_readwrite("play_count", &LedgerValue::play_count)
        .def_readwrite("total_revenue", &LedgerValue::total_revenue);

    py::class_<OrdererConfig>(m, "OrdererConfig")
        .def(py::init<>())
        .def_readwrite("max_message_count", &OrdererConfig::max_message_count)
        .def_readwrite("preferred_max_bytes_mb", &OrdererConfig::preferred_max_bytes_mb)
        .def_readwrite("batch_timeout_s", &OrdererConfig::batch_timeout_s)
        .def_readwrite("snapshot_interval_mb", &OrdererConfig::snapshot_interval_mb)
        .def("validate", &OrdererConfig::validate)
        .def("__eq__",
             [](const OrdererConfig& a, const OrdererConfig& b) { return a == b; });

    py::class_<CostModel>(m, "CostModel")
        .def(py::init<>())
        .def_readwrite("endorse_base", &CostModel::endorse_base)
        .def_readwrite("network_hop", &CostModel::network_hop)
        .def_readwrite("order_per_block", &CostModel::order_per_block)
        .def_readwrite("order_per_tx", &CostModel::order_per_tx)
        .def_readwrite("vscc_per_tx", &CostModel::vscc_per_tx)
        .def_readwrite("commit_per_block", &CostModel::commit_per_block)
        .def_readwrite("commit_per_write", &CostModel::commit_per_write)
        .def_readwrite("snapshot_per_mb", &CostModel::snapshot_per_mb)
        .def_readwrite("endorser_workers", &CostModel::endorser_workers)
        .def_readwrite("endorser_queue_cap", &CostModel::endorser_queue_cap)
        .def_readwrite("orderer_queue_cap", &CostModel::orderer_queue_cap)
        .def_readwrite("validator_queue_cap", &CostModel::validator_queue_cap)
        .def("validate", &CostModel::validate);

    py::class_<ContractCall>(m, "ContractCall")
        .def(py::init<>())
        .def_readwrite("function", &ContractCall::function)
        .def_readwrite("variant", &ContractCall::variant)
        .def_readwrite("target_key", &ContractCall::target_key);

    py::class_<Submission>(m, "Submission")
        .def(py::init<>())
        .def_readwrite("time", &Submission::time)
        .def_readwrite("client_id", &Submission::client_id)
        .def_readwrite("org_id", &Submission::org_id)
        .def_readwrite("call", &Submission::call)
        .def_readwrite("endorsements", &Submission::endorsements);

    py::class_<TxOutcome>(m, "TxOutcome")
        .def_readonly("tx_id", &TxOutcome::tx_id)
        .def_readonly("client_id", &TxOutcome::client_id)
        .def_readonly("org_id", &TxOutcome::org_id)
        .def_readonly("kind", &TxOutcome::kind)
        .def_readonly("status", &TxOutcome::status)
        .def_readonly("t_submitted", &TxOutcome::t_submitted)
        .def_readonly("t_committed", &TxOutcome::t_committed);

    py::class_<Simulator::Stats>(m, "SimStats")
        .def_readonly("submitted", &Simulator::Stats::submitted)
        .def_readonly("endorsed", &Simulator::Stats::endorsed)
        .def_readonly("dropped_endorser", &Simulator::Stats::dropped_endorser)
        .def_readonly("dropped_orderer", &Simulator::Stats::dropped_orderer)
        .def_readonly("blocks_cut", &Simulator::Stats::blocks_cut)
        .def_readonly("blocks_committed", &Simulator::Stats::blocks_committed)
        .def_readonly("committed", &Simulator::Stats::committed)
        .def_readonly("aborted_mvcc", &Simulator::Stats::aborted_mvcc)
        .def_readonly("aborted_vscc", &Simulator::Stats::aborted_vscc)
        .def_readonly("snapshots", &Simulator::Stats::snapshots)
        .def_readonly("configs_applied", &Simulator::Stats::configs_applied)
        .def("dropped", &Simulator::Stats::dropped);

    py::class_<ContractParams>(m, "ContractParams")
        .def(py::init<>())
        .def_readwrite("record_bytes", &ContractParams::record_bytes)
        .def_readwrite("revenue_per_play", &ContractParams::revenue_per_play)
        .def_readwrite("delta_aggregation_delay", &ContractParams::delta_aggregation_delay);

    py::class_<Simulator>(m, "Simulator")
        .def(py::init<OrdererConfig, CostModel, std::uint32_t, ContractParams>(),
             py::arg("config") = OrdererConfig{}, py::arg("costs") = CostModel{},
             py::arg("endorsement_policy") = 2,
             py::arg("contract_params") = ContractParams{})
        .def("seed_genesis", &Simulator::seed_genesis)
        .def("submit", &Simulator::submit)
        .def("propose_config", &Simulator::propose_config)
        .def("advance_until", &Simulator::advance_until)
        .def_property_readonly("now", &Simulator::now)
        .def_property_readonly("config", &Simulator::config)
        .def_property_readonly("stats", &Simulator::stats)
        .def_property_readonly("pool_size", &Simulator::pool_size)
        .def_property_readonly("validation_backlog", &Simulator::validation_backlog)
        .def_property_readonly("ledger_height", &Simulator::ledger_height)
        .def_property_readonly("in_flight", &Simulator::in_flight);

    py::class_<StepMetrics>(m, "StepMetrics")
        .def_readonly("overall_tps", &StepMetrics::overall_tps)
        .def_readonly("success_tps", &StepMetrics::success_tps)
        .def_readonly("avg_latency", &StepMetrics::avg_latency)
        .def_readonly("send_rate", &StepMetrics::send_rate)
        .def_readonly("jain", &StepMetrics::jain)
        .def_readonly("org1_success", &StepMetrics::org1_success)
        .def_readonly("org2_success", &StepMetrics::org2_success)
        .def_readonly("committed", &StepMetrics::committed)
        .def_readonly("aborted_mvcc", &StepMetrics::aborted_mvcc)
        .def_readonly("aborted_vscc", &StepMetrics::aborted_vscc)
        .def_readonly("dropped", &StepMetrics::dropped);

    m.def("jain_index", &jain_index, py::arg("s1"), py::arg("s2"));

    py::class_<WorkloadSpec>(m, "WorkloadSpec")
        .def(py::init<>())
        .def_readwrite("family", &WorkloadSpec::family)
        .def_readwrite("key_count", &WorkloadSpec::key_count)
        .def_readwrite("hot_keys", &WorkloadSpec::hot_keys)
        .def_readwrite("hot_prob", &WorkloadSpec::hot_prob)
        .def_readwrite("music_hot_keys", &WorkloadSpec::music_hot_keys)
        .def_readwrite("phase_length", &WorkloadSpec::phase_length)
        .def_readwrite("variant", &WorkloadSpec::variant);

    py::class_<EnvOptions>(m, "EnvOptions")
        .def(py::init<>())
        .def_readwrite("costs", &EnvOptions::costs)
        .def_readwrite("initial_config", &EnvOptions::initial_config)
        .def_readwrite("workload", &EnvOptions::workload)
        .def_readwrite("step_duration", &EnvOptions::step_duration)
        .def_readwrite("seed", &EnvOptions::seed)
        .def_readwrite("client_config_path", &EnvOptions::client_config_path)
        .def_readwrite("endorsement_policy", &EnvOptions::endorsement_policy)
        .def_readwrite("contract_params", &EnvOptions::contract_params);

    py::class_<EnvStep>(m, "EnvStep")
        .def_readonly("metrics", &EnvStep::metrics)
        .def_readonly("obs", &EnvStep::obs)
        .def_readonly("reward", &EnvStep::reward)
        .def_readonly("phase", &EnvStep::phase);

    py::class_<SimEnv>(m, "SimEnv")
        .def("step", &SimEnv::step, py::arg("action") = std::nullopt)
        .def_property_readonly("n_actions", &SimEnv::n_actions)
        .def_property_readonly("obs_dim", &SimEnv::obs_dim)
        .def_property_readonly("step_index", &SimEnv::step_index);

    py::class_<ParamTuningEnv, SimEnv>(m, "ParamTuningEnv").def(py::init<EnvOptions>());
    py::class_<ContractEnv, SimEnv>(m, "ContractEnv")
        .def(py::init<EnvOptions>())
        .def_property_readonly("variant", &ContractEnv::variant);
    py::class_<AdmissionEnv, SimEnv>(m, "AdmissionEnv")
        .def(py::init<EnvOptions>())
        .def_property_readonly("policy", &AdmissionEnv::policy);

    py::class_<AdmissionPolicy>(m, "AdmissionPolicy")
        .def(py::init<>())
        .def_readwrite("org1", &AdmissionPolicy::org1)
        .def_readwrite("org2", &AdmissionPolicy::org2);

    m.def("decode_param_action", &decode_param_action);
    m.def("decode_contract_action", &decode_contract_action);
    m.def("decode_admission_action", &decode_admission_action);

    py::class_<EpsilonSchedule>(m, "EpsilonSchedule")
        .def_static("constant", &EpsilonSchedule::constant)
        .def_static("linear", &EpsilonSchedule::linear)
        .def("value", &EpsilonSchedule::value);

    py::class_<AgentConfig>(m, "AgentConfig")
        .def(py::init<>())
        .def_readwrite("obs_dim", &AgentConfig::obs_dim)
        .def_readwrite("n_actions", &AgentConfig::n_actions)
        .def_readwrite("hidden", &AgentConfig::hidden)
        .def_readwrite("lr", &AgentConfig::lr)
        .def_readwrite("gamma", &AgentConfig::gamma)
        .def_readwrite("replay_capacity", &AgentConfig::replay_capacity)
        .def_readwrite("minibatch", &AgentConfig::minibatch)
        .def_readwrite("target_sync", &AgentConfig::target_sync)
        .def_readwrite("grad_clip", &AgentConfig::grad_clip)
        .def_readwrite("epsilon", &AgentConfig::epsilon)
        .def_readwrite("seed", &AgentConfig::seed);

    py::class_<Transition>(m, "Transition")
        .def(py::init<>())
        .def_readwrite("obs", &Transition::obs)
        .def_readwrite("action", &Transition::action)
        .def_readwrite("reward", &Transition::reward)
        .def_readwrite("next_obs", &Transition::next_obs);

    py::class_<DqnAgent>(m, "DqnAgent")
        .def(py::init<AgentConfig>())
        .def("select_action",
             py::overload_cast<const std::vector<double>&>(&DqnAgent::select_action))
        .def("select_action_at",
             py::overload_cast<const std::vector<double>&, double>(
                 &DqnAgent::select_action),
             py::arg("obs"), py::arg("epsilon"))
        .def("greedy_action", &DqnAgent::greedy_action)
        .def("q_values", &DqnAgent::q_values)
        .def("learn", &DqnAgent::learn)
        .def("replay_update", &DqnAgent::replay_update)
        .def_property_readonly("epsilon", &DqnAgent::epsilon)
        .def("save_weights", &DqnAgent::save_weights)
        .def("load_weights", &DqnAgent::load_weights);

    py::class_<ReplayReport>(m, "ReplayReport")
        .def_readonly("blocks", &ReplayReport::blocks)
        .def_readonly("txs", &ReplayReport::txs)
        .def_readonly("mismatches", &ReplayReport::mismatches)
        .def("ok", &ReplayReport::ok);

    m.def("replay_trace", &replay_trace, py::arg("path"));

    py::class_<WindowMeans>(m, "WindowMeans")
        .def_readonly("overall_tps", &WindowMeans::overall_tps)
        .def_readonly("success_tps", &WindowMeans::success_tps)
        .def_readonly("avg_latency", &WindowMeans::avg_latency)
        .def_readonly("jain", &WindowMeans::jain);

    py::class_<CompareSummary>(m, "CompareSummary")
        .def_readonly("window", &CompareSummary::window)
        .def_readonly("a", &CompareSummary::a)
        .def_readonly("b", &CompareSummary::b)
        .def_readonly("d_overall_pct", &CompareSummary::d_overall_pct)
        .def_readonly("d_success_pct", &CompareSummary::d_success_pct)
        .def_readonly("d_latency_pct", &CompareSummary::d_latency_pct)
        .def_readonly("d_jain_pct", &CompareSummary::d_jain_pct);

    m.def("compare_csv", &compare_csv, py::arg("run_csv"), py::arg("baseline_csv"),
          py::arg("window") = 100);
    m.def("format_summary", &format_summary);
}
