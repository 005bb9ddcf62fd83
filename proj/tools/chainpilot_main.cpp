#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainpilot/experiment.hpp"

using namespace chainpilot;

namespace {

ExperimentKind parse_kind(const std::string& s) {
    if (s == "param-tuning") return ExperimentKind::ParamTuning;
    if (s == "contract-adapt") return ExperimentKind::ContractAdapt;
    if (s == "admission-fairness") return ExperimentKind::AdmissionFairness;
    throw InvalidConfigError("unknown experiment '" + s + "'");
}

WorkloadFamily parse_family(const std::string& s) {
    if (s == "update") return WorkloadFamily::Update;
    if (s == "skewed-update") return WorkloadFamily::SkewedUpdate;
    if (s == "music") return WorkloadFamily::MusicOscillating;
    throw InvalidConfigError("unknown workload '" + s + "'");
}

std::string default_out_root() {
    const char* env = std::getenv("CHAINPILOT_OUT");
    return env && *env ? env : "out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Execute-order-validate pipeline simulator with learning controllers"};
    app.require_subcommand(1);
    // Config files live on the top-level app; [run] sections address the run
    // subcommand. fallthrough() lets `--config` appear after the subcommand
    // name too, since unmatched options bubble up to the parent parser.
    app.set_config("--config", "", "Read options from an INI file (sections address subcommands)");

    // ---- run ----------------------------------------------------------
    CLI::App* run = app.add_subcommand("run", "Run an experiment and write CSV/manifest artifacts");
    run->fallthrough();
    std::string experiment = "param-tuning";
    std::string mode = "learn";
    std::string workload;
    std::string variant = "vanilla";
    std::string epsilon_mode = "decay";
    ExperimentConfig cfg;
    cfg.out_dir = default_out_root();
    run->add_option("--experiment", experiment,
                    "param-tuning | contract-adapt | admission-fairness")
        ->capture_default_str();
    run->add_option("--mode", mode, "baseline | learn")->capture_default_str();
    run->add_option("--steps", cfg.steps, "Learning steps per run")->capture_default_str();
    run->add_option("--step-duration", cfg.step_duration, "Simulated seconds per step")
        ->capture_default_str();
    run->add_option("--seed", cfg.seeds, "Run seed(s); repeat for multiple runs")
        ->capture_default_str();
    run->add_option("--out", cfg.out_dir,
                    "Output root (default $CHAINPILOT_OUT or ./out)")
        ->capture_default_str();
    run->add_option("--window", cfg.summary_window, "Final summary window in steps")
        ->capture_default_str();
    run->add_option("--baseline-dir", cfg.baseline_dir,
                    "Baseline run directory for per-seed deltas in summaries");
    run->add_flag("--trace", cfg.emit_trace, "Write trace.ndjson event dumps");
    run->add_flag("--plots", cfg.emit_plots, "Write SVG line plots");

    // Orderer knobs (initial config; the fixed knobs in baseline mode).
    CLI::Option* o_mc = run->add_option("--mc", cfg.initial_config.max_message_count,
                                        "Block cut: max message count");
    CLI::Option* o_pb = run->add_option("--pb", cfg.initial_config.preferred_max_bytes_mb,
                                        "Block cut: preferred max bytes (MB)");
    CLI::Option* o_bt = run->add_option("--bt", cfg.initial_config.batch_timeout_s,
                                        "Block cut: batch timeout (s)");
    CLI::Option* o_si = run->add_option("--si", cfg.initial_config.snapshot_interval_mb,
                                        "Snapshot interval (MB)");

    // Workload shape.
    CLI::Option* o_wl = run->add_option("--workload", workload,
                                        "update | skewed-update | music "
                                        "(default depends on experiment)");
    run->add_option("--variant", variant, "Music contract at start: vanilla | delta")
        ->capture_default_str();
    CLI::Option* o_keys = run->add_option("--key-count", cfg.workload.key_count,
                                          "Initialized ledger keys");
    CLI::Option* o_hot = run->add_option("--hot-keys", cfg.workload.hot_keys,
                                         "Contended key prefix (skewed-update)");
    CLI::Option* o_hp = run->add_option("--hot-prob", cfg.workload.hot_prob,
                                        "P(hot key) for skewed-update");
    CLI::Option* o_mhk = run->add_option("--music-hot-keys", cfg.workload.music_hot_keys,
                                         "Records played during update phases");
    CLI::Option* o_pl = run->add_option("--phase-length", cfg.workload.phase_length,
                                        "Steps per music workload phase");

    // Cost model overrides (defaults depend on the experiment).
    double c_eb = 0, c_nh = 0, c_opb = 0, c_opt = 0, c_vpt = 0, c_cpb = 0, c_cpw = 0,
           c_spm = 0;
    std::uint32_t c_ew = 0, c_eqc = 0, c_oqc = 0, c_vqc = 0;
    CLI::Option* o_eb = run->add_option("--endorse-base", c_eb, "Endorse service time (s)");
    CLI::Option* o_nh = run->add_option("--network-hop", c_nh, "Endorser->orderer hop (s)");
    CLI::Option* o_opb = run->add_option("--order-per-block", c_opb, "Ordering cost per block (s)");
    CLI::Option* o_opt = run->add_option("--order-per-tx", c_opt, "Ordering cost per tx (s)");
    CLI::Option* o_vpt = run->add_option("--vscc-per-tx", c_vpt, "Validation cost per tx (s)");
    CLI::Option* o_cpb = run->add_option("--commit-per-block", c_cpb, "Commit cost per block (s)");
    CLI::Option* o_cpw = run->add_option("--commit-per-write", c_cpw, "Commit cost per write (s)");
    CLI::Option* o_spm = run->add_option("--snapshot-per-mb", c_spm, "Snapshot stall per world MB (s)");
    CLI::Option* o_ew = run->add_option("--endorser-workers", c_ew, "Endorser pool size");
    CLI::Option* o_eqc = run->add_option("--endorser-queue-cap", c_eqc, "Endorser queue capacity");
    CLI::Option* o_oqc = run->add_option("--orderer-queue-cap", c_oqc, "Orderer pool capacity");
    CLI::Option* o_vqc = run->add_option("--validator-queue-cap", c_vqc, "Validator queue (blocks)");

    // Agent hyperparameters.
    run->add_option("--hidden", cfg.agent.hidden, "Hidden layer width")->capture_default_str();
    run->add_option("--lr", cfg.agent.lr, "Learning rate")->capture_default_str();
    run->add_option("--gamma", cfg.agent.gamma, "Discount factor")->capture_default_str();
    run->add_option("--replay", cfg.agent.replay_capacity, "Replay buffer capacity")
        ->capture_default_str();
    run->add_option("--minibatch", cfg.agent.minibatch, "Minibatch size")->capture_default_str();
    run->add_option("--target-sync", cfg.agent.target_sync, "Target sync interval (learn calls)")
        ->capture_default_str();
    run->add_option("--grad-clip", cfg.agent.grad_clip, "Global gradient-norm ceiling")
        ->capture_default_str();
    run->add_option("--learn-passes", cfg.learn_passes,
                    "Replay minibatch updates per environment step")
        ->capture_default_str();
    run->add_option("--epsilon-mode", epsilon_mode, "decay | constant")->capture_default_str();
    run->add_option("--epsilon", cfg.epsilon_value, "Exploration rate for constant mode")
        ->capture_default_str();

    // ---- compare ------------------------------------------------------
    CLI::App* cmp = app.add_subcommand("compare", "Compare two step CSVs over a final window");
    std::string csv_a, csv_b;
    long cmp_window = 100;
    cmp->add_option("run_csv", csv_a, "Candidate run steps.csv")->required();
    cmp->add_option("baseline_csv", csv_b, "Baseline run steps.csv")->required();
    cmp->add_option("--window", cmp_window, "Window in steps")->capture_default_str();

    // ---- replay-trace --------------------------------------------------
    CLI::App* rpl = app.add_subcommand(
        "replay-trace", "Re-validate an event-trace dump against the validation rules "
                        "(exit 1 on any mismatch)");
    std::string trace_path;
    rpl->add_option("trace", trace_path, "trace.ndjson produced by run --trace")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            cfg.experiment = parse_kind(experiment);
            if (mode == "baseline") {
                cfg.mode = RunMode::Baseline;
            } else if (mode == "learn") {
                cfg.mode = RunMode::Learn;
            } else {
                throw InvalidConfigError("unknown mode '" + mode + "'");
            }
            cfg.epsilon_constant = epsilon_mode == "constant";
            if (!cfg.epsilon_constant && epsilon_mode != "decay")
                throw InvalidConfigError("unknown epsilon mode '" + epsilon_mode + "'");

            if (*o_wl) cfg.workload.family = parse_family(workload);
            if (variant == "delta") {
                cfg.workload.variant = ContractVariant::Delta;
            } else if (variant != "vanilla") {
                throw InvalidConfigError("unknown variant '" + variant + "'");
            }
            (void)o_keys; (void)o_hot; (void)o_hp; (void)o_mhk; (void)o_pl;
            (void)o_mc; (void)o_pb; (void)o_bt; (void)o_si;

            cfg.costs = ExperimentConfig::default_costs(cfg.experiment);
            if (*o_eb) cfg.costs.endorse_base = c_eb;
            if (*o_nh) cfg.costs.network_hop = c_nh;
            if (*o_opb) cfg.costs.order_per_block = c_opb;
            if (*o_opt) cfg.costs.order_per_tx = c_opt;
            if (*o_vpt) cfg.costs.vscc_per_tx = c_vpt;
            if (*o_cpb) cfg.costs.commit_per_block = c_cpb;
            if (*o_cpw) cfg.costs.commit_per_write = c_cpw;
            if (*o_spm) cfg.costs.snapshot_per_mb = c_spm;
            if (*o_ew) cfg.costs.endorser_workers = c_ew;
            if (*o_eqc) cfg.costs.endorser_queue_cap = c_eqc;
            if (*o_oqc) cfg.costs.orderer_queue_cap = c_oqc;
            if (*o_vqc) cfg.costs.validator_queue_cap = c_vqc;

            run_experiment(cfg);
            std::cout << "run complete: " << cfg.run_dir() << "\n";
        } else if (cmp->parsed()) {
            std::cout << format_summary(compare_csv(csv_a, csv_b, cmp_window));
        } else if (rpl->parsed()) {
            const ReplayReport rep = replay_trace(trace_path);
            std::cout << "replayed " << rep.blocks << " blocks / " << rep.txs
                      << " transactions\n";
            if (!rep.ok()) {
                for (const std::string& m : rep.mismatches)
                    std::cerr << "mismatch: " << m << "\n";
                std::cerr << rep.mismatches.size() << " mismatch(es) found\n";
                return 1;
            }
            std::cout << "trace is consistent with the validation rules\n";
        }
    } catch (const InvalidConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaMismatch& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
