#include "chainpilot/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace chainpilot {

namespace {

constexpr std::uint64_t kAgentSeedSalt = 0xc2b2ae3d27d4eb4fULL;

constexpr const char* kCsvHeader =
    "step,phase,send_rate,overall_tps,success_tps,avg_latency,jain,"
    "org1_success,org2_success,action,reward,epsilon";

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

const char* status_code(TxStatus s) {
    switch (s) {
        case TxStatus::Committed: return "C";
        case TxStatus::AbortedMVCC: return "MVCC";
        case TxStatus::AbortedVSCC: return "VSCC";
        case TxStatus::Dropped: return "DROP";
    }
    return "?";
}

}  // namespace

void write_csv_header(std::ostream& out) {
    out << "# schema=" << kCsvSchemaTag << '\n' << kCsvHeader << '\n';
}

void write_csv_row(std::ostream& out, const StepRow& r) {
    out << r.step << ',' << r.phase << ',' << fmt6(r.send_rate) << ','
        << fmt6(r.overall_tps) << ',' << fmt6(r.success_tps) << ','
        << fmt6(r.avg_latency) << ',' << fmt6(r.jain) << ','
        << fmt6(r.org1_success) << ',' << fmt6(r.org2_success) << ',' << r.action
        << ',' << fmt6(r.reward) << ',' << fmt6(r.epsilon) << '\n';
}

std::vector<StepRow> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw SchemaMismatch(path + ": empty file, expected schema tag");
    if (line != std::string("# schema=") + kCsvSchemaTag)
        throw SchemaMismatch(path + ": unsupported schema line '" + line + "'");
    if (!std::getline(in, line) || line != kCsvHeader)
        throw SchemaMismatch(path + ": header does not match schema " +
                             kCsvSchemaTag);
    std::vector<StepRow> rows;
    long line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv(line);
        if (f.size() != 12)
            throw SchemaMismatch(path + ": line " + std::to_string(line_no) +
                                 " has " + std::to_string(f.size()) +
                                 " columns, expected 12");
        try {
            StepRow r;
            r.step = std::stol(f[0]);
            r.phase = f[1];
            r.send_rate = std::stod(f[2]);
            r.overall_tps = std::stod(f[3]);
            r.success_tps = std::stod(f[4]);
            r.avg_latency = std::stod(f[5]);
            r.jain = std::stod(f[6]);
            r.org1_success = std::stod(f[7]);
            r.org2_success = std::stod(f[8]);
            r.action = f[9];
            r.reward = std::stod(f[10]);
            r.epsilon = std::stod(f[11]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw SchemaMismatch(path + ": line " + std::to_string(line_no) +
                                 " is not numeric");
        }
    }
    return rows;
}

WindowMeans window_means(const std::vector<StepRow>& rows, long window) {
    if (window <= 0 || static_cast<std::size_t>(window) > rows.size())
        throw std::invalid_argument("window of " + std::to_string(window) +
                                    " steps does not fit a run of " +
                                    std::to_string(rows.size()));
    WindowMeans m;
    const std::size_t begin = rows.size() - static_cast<std::size_t>(window);
    for (std::size_t i = begin; i < rows.size(); ++i) {
        m.overall_tps += rows[i].overall_tps;
        m.success_tps += rows[i].success_tps;
        m.avg_latency += rows[i].avg_latency;
        m.jain += rows[i].jain;
    }
    const double n = static_cast<double>(window);
    m.overall_tps /= n;
    m.success_tps /= n;
    m.avg_latency /= n;
    m.jain /= n;
    return m;
}

namespace {
double pct_delta(double a, double b) { return b != 0.0 ? (a - b) / b * 100.0 : 0.0; }
}  // namespace

CompareSummary compare_csv(const std::string& path_a, const std::string& path_b,
                           long window) {
    const std::vector<StepRow> ra = read_csv(path_a);
    const std::vector<StepRow> rb = read_csv(path_b);
    CompareSummary s;
    s.window = window;
    s.a = window_means(ra, window);
    s.b = window_means(rb, window);
    s.d_overall_pct = pct_delta(s.a.overall_tps, s.b.overall_tps);
    s.d_success_pct = pct_delta(s.a.success_tps, s.b.success_tps);
    s.d_latency_pct = pct_delta(s.a.avg_latency, s.b.avg_latency);
    s.d_jain_pct = pct_delta(s.a.jain, s.b.jain);
    return s;
}

std::string format_summary(const CompareSummary& s) {
    char buf[128];
    std::ostringstream out;
    out << "final-window comparison (" << s.window << " steps)\n";
    auto row = [&](const char* name, double a, double b, double d) {
        std::snprintf(buf, sizeof buf, "  %-12s %12.3f %12.3f %+9.2f%%\n", name, a,
                      b, d);
        out << buf;
    };
    std::snprintf(buf, sizeof buf, "  %-12s %12s %12s %10s\n", "metric", "run",
                  "baseline", "delta");
    out << buf;
    row("overall_tps", s.a.overall_tps, s.b.overall_tps, s.d_overall_pct);
    row("success_tps", s.a.success_tps, s.b.success_tps, s.d_success_pct);
    row("avg_latency", s.a.avg_latency, s.b.avg_latency, s.d_latency_pct);
    row("jain", s.a.jain, s.b.jain, s.d_jain_pct);
    return out.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Event-trace writer.

NdjsonTraceSink::NdjsonTraceSink(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot open trace file: " + path);
}

void NdjsonTraceSink::genesis(const WorldState& state, std::uint32_t policy) {
    std::vector<std::pair<std::string, WorldEntry>> sorted(state.entries().begin(),
                                                           state.entries().end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    json entries = json::array();
    for (const auto& [key, e] : sorted)
        entries.push_back(json::array({key, e.value.payload_bytes, e.value.play_count,
                                       e.value.total_revenue, e.version.block_seq,
                                       e.version.tx_index}));
    out_ << json{{"ev", "genesis"}, {"policy", policy}, {"entries", std::move(entries)}}
                .dump()
         << '\n';
}

void NdjsonTraceSink::submit(double t, const Transaction& tx) {
    out_ << json{{"ev", "submit"},   {"t", t},
                 {"tx", tx.tx_id},   {"client", tx.client_id},
                 {"org", tx.org_id}, {"kind", tx.kind},
                 {"size", tx.size_bytes}}
                .dump()
         << '\n';
}

void NdjsonTraceSink::drop(double t, const Transaction& tx, const char* stage) {
    out_ << json{{"ev", "drop"}, {"t", t}, {"tx", tx.tx_id}, {"stage", stage}}.dump()
         << '\n';
}

void NdjsonTraceSink::endorse(double t, const Transaction& tx, double compute_delay) {
    json reads = json::array();
    for (const auto& [key, ver] : tx.read_set)
        reads.push_back(json::array({key, ver.block_seq, ver.tx_index}));
    json writes = json::array();
    for (const auto& [key, val] : tx.write_set)
        writes.push_back(
            json::array({key, val.payload_bytes, val.play_count, val.total_revenue}));
    out_ << json{{"ev", "endorse"}, {"t", t},       {"tx", tx.tx_id},
                 {"e", tx.endorsement_count},       {"delay", compute_delay},
                 {"reads", std::move(reads)},       {"writes", std::move(writes)}}
                .dump()
         << '\n';
}

void NdjsonTraceSink::ordered(double t, const Block& block) {
    json txs = json::array();
    for (const Transaction& tx : block.txs) txs.push_back(tx.tx_id);
    out_ << json{{"ev", "ordered"},          {"t", t},
                 {"seq", block.seq},         {"reason", to_string(block.cut_reason)},
                 {"bytes", block.byte_size}, {"txs", std::move(txs)}}
                .dump()
         << '\n';
}

void NdjsonTraceSink::validated(double t, const Block& block,
                                const ValidationResult& r) {
    json statuses = json::array();
    for (const TxVerdict& v : r.verdicts) statuses.push_back(status_code(v.status));
    out_ << json{{"ev", "validated"},
                 {"t", t},
                 {"seq", block.seq},
                 {"statuses", std::move(statuses)}}
                .dump()
         << '\n';
}

void NdjsonTraceSink::snapshot(double t, double world_mb, double stall) {
    out_ << json{{"ev", "snapshot"}, {"t", t}, {"world_mb", world_mb}, {"stall", stall}}
                .dump()
         << '\n';
}

void NdjsonTraceSink::config_applied(double t, const OrdererConfig& cfg) {
    out_ << json{{"ev", "config"},
                 {"t", t},
                 {"mc", cfg.max_message_count},
                 {"pb", cfg.preferred_max_bytes_mb},
                 {"bt", cfg.batch_timeout_s},
                 {"si", cfg.snapshot_interval_mb}}
                .dump()
         << '\n';
}

// ---------------------------------------------------------------------------
// Trace replay against the validation rules.

ReplayReport replay_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);

    struct TxInfo {
        std::vector<std::pair<std::string, Version>> reads;
        std::vector<std::pair<std::string, LedgerValue>> writes;
        std::uint32_t endorsements = 0;
    };

    ReplayReport rep;
    WorldState world;
    std::uint32_t policy = 0;
    bool have_genesis = false;
    std::unordered_map<std::string, TxInfo> txs;
    std::map<std::uint64_t, Block> pending;
    std::uint64_t last_seq = 0;

    auto flag = [&rep](std::string msg) {
        if (rep.mismatches.size() < 50) rep.mismatches.push_back(std::move(msg));
    };

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaMismatch(path + ": line " + std::to_string(line_no) +
                                 " is not valid JSON: " + e.what());
        }
        const std::string ev = j.value("ev", "");
        if (ev == "genesis") {
            policy = j.at("policy").get<std::uint32_t>();
            for (const json& e : j.at("entries")) {
                LedgerValue v;
                v.payload_bytes = e.at(1).get<std::uint32_t>();
                v.play_count = e.at(2).get<std::int64_t>();
                v.total_revenue = e.at(3).get<double>();
                Version ver{e.at(4).get<std::uint64_t>(), e.at(5).get<std::uint32_t>()};
                world.put(e.at(0).get<std::string>(), v, ver);
            }
            have_genesis = true;
        } else if (ev == "endorse") {
            TxInfo info;
            info.endorsements = j.at("e").get<std::uint32_t>();
            for (const json& r : j.at("reads"))
                info.reads.emplace_back(
                    r.at(0).get<std::string>(),
                    Version{r.at(1).get<std::uint64_t>(), r.at(2).get<std::uint32_t>()});
            for (const json& w : j.at("writes")) {
                LedgerValue v;
                v.payload_bytes = w.at(1).get<std::uint32_t>();
                v.play_count = w.at(2).get<std::int64_t>();
                v.total_revenue = w.at(3).get<double>();
                info.writes.emplace_back(w.at(0).get<std::string>(), v);
            }
            txs[j.at("tx").get<std::string>()] = std::move(info);
        } else if (ev == "ordered") {
            Block b;
            b.seq = j.at("seq").get<std::uint64_t>();
            for (const json& id : j.at("txs")) {
                const std::string tx_id = id.get<std::string>();
                const auto it = txs.find(tx_id);
                if (it == txs.end()) {
                    flag("block " + std::to_string(b.seq) + ": tx " + tx_id +
                         " ordered without an endorse record");
                    continue;
                }
                Transaction tx;
                tx.tx_id = tx_id;
                tx.read_set = it->second.reads;
                tx.write_set = it->second.writes;
                tx.endorsement_count = it->second.endorsements;
                b.txs.push_back(std::move(tx));
            }
            pending[b.seq] = std::move(b);
        } else if (ev == "validated") {
            const auto seq = j.at("seq").get<std::uint64_t>();
            if (seq != last_seq + 1)
                flag("block " + std::to_string(seq) + " validated out of order (after " +
                     std::to_string(last_seq) + ")");
            last_seq = seq;
            const auto it = pending.find(seq);
            if (it == pending.end()) {
                flag("block " + std::to_string(seq) + " validated but never ordered");
                continue;
            }
            const Block& block = it->second;
            const BlockPlan plan = plan_block(world, block, policy, seq);
            const json& statuses = j.at("statuses");
            if (statuses.size() != plan.result.verdicts.size()) {
                flag("block " + std::to_string(seq) + ": trace has " +
                     std::to_string(statuses.size()) + " verdicts, rules give " +
                     std::to_string(plan.result.verdicts.size()));
            } else {
                for (std::size_t i = 0; i < plan.result.verdicts.size(); ++i) {
                    const std::string got = statuses[i].get<std::string>();
                    const char* want = status_code(plan.result.verdicts[i].status);
                    if (got != want)
                        flag("block " + std::to_string(seq) + " tx " +
                             plan.result.verdicts[i].tx_id + ": trace says " + got +
                             ", rules say " + want);
                }
            }
            for (const auto& [key, entry] : plan.writes)
                world.put(key, entry.value, entry.version);
            rep.blocks++;
            rep.txs += static_cast<long>(block.txs.size());
            pending.erase(it);
        }
        // submit/drop/snapshot/config records carry no validation obligations.
    }
    if (!have_genesis)
        rep.mismatches.insert(rep.mismatches.begin(), "trace has no genesis record");
    return rep;
}

// ---------------------------------------------------------------------------
// Experiment orchestration.

const char* kind_slug(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::ParamTuning: return "param-tuning";
        case ExperimentKind::ContractAdapt: return "contract-adapt";
        case ExperimentKind::AdmissionFairness: return "admission-fairness";
    }
    return "?";
}

const char* mode_slug(RunMode m) {
    return m == RunMode::Baseline ? "baseline" : "learn";
}

CostModel ExperimentConfig::default_costs(ExperimentKind kind) {
    CostModel c;
    if (kind == ExperimentKind::AdmissionFairness) {
        // The rate-skew fleet offers 1750 TPS; provision ordering/validation
        // so fairness is shaped by admission and conflicts, not by pipeline
        // saturation.
        c.order_per_tx = 0.0001;
        c.vscc_per_tx = 0.0001;
        c.commit_per_block = 0.050;
        c.commit_per_write = 0.0001;
    }
    return c;
}

std::string ExperimentConfig::run_dir() const {
    return out_dir + "/" + kind_slug(experiment) + "-" + mode_slug(mode);
}

void ExperimentConfig::validate() const {
    if (steps <= 0) throw InvalidConfigError("steps must be positive");
    if (step_duration <= 0.0)
        throw InvalidConfigError("step_duration must be positive");
    if (seeds.empty()) throw InvalidConfigError("at least one seed is required");
    if (summary_window <= 0 || summary_window > steps)
        throw InvalidConfigError("summary window must be in [1, steps]");
    if (out_dir.empty()) throw InvalidConfigError("output directory must be set");
    if (mode == RunMode::Learn) {
        if (agent.hidden < 1) throw InvalidConfigError("hidden width must be >= 1");
        if (agent.lr <= 0.0) throw InvalidConfigError("learning rate must be > 0");
        if (agent.gamma < 0.0 || agent.gamma >= 1.0)
            throw InvalidConfigError("gamma must lie in [0, 1)");
        if (agent.minibatch < 1 || agent.replay_capacity < agent.minibatch)
            throw InvalidConfigError("replay capacity must hold a minibatch");
        if (agent.target_sync < 1)
            throw InvalidConfigError("target sync interval must be >= 1");
        if (learn_passes < 1)
            throw InvalidConfigError("learn passes must be >= 1");
        if (epsilon_constant && (epsilon_value < 0.0 || epsilon_value > 1.0))
            throw InvalidConfigError("epsilon must lie in [0, 1]");
    }
    costs.validate();
    initial_config.validate();
}

std::unique_ptr<SimEnv> make_env(const ExperimentConfig& cfg, std::uint64_t seed,
                                 TraceSink* trace, const std::string& seed_dir) {
    EnvOptions opt;
    opt.costs = cfg.costs;
    opt.initial_config = cfg.initial_config;
    opt.workload = cfg.workload;
    opt.step_duration = cfg.step_duration;
    opt.seed = seed;
    opt.trace = trace;
    switch (cfg.experiment) {
        case ExperimentKind::ParamTuning:
            return std::make_unique<ParamTuningEnv>(opt);
        case ExperimentKind::ContractAdapt:
            opt.client_config_path = seed_dir + "/client-config.ini";
            return std::make_unique<ContractEnv>(opt);
        case ExperimentKind::AdmissionFairness:
            opt.client_config_path = seed_dir + "/client-config.ini";
            return std::make_unique<AdmissionEnv>(opt);
    }
    throw InvalidConfigError("unknown experiment kind");
}

namespace {

std::string canonical_config(const ExperimentConfig& cfg) {
    std::ostringstream s;
    s << kind_slug(cfg.experiment) << '|' << mode_slug(cfg.mode) << '|' << cfg.steps
      << '|' << fmt6(cfg.step_duration) << '|' << cfg.initial_config.max_message_count
      << '|' << fmt6(cfg.initial_config.preferred_max_bytes_mb) << '|'
      << fmt6(cfg.initial_config.batch_timeout_s) << '|'
      << fmt6(cfg.initial_config.snapshot_interval_mb) << '|'
      << fmt6(cfg.costs.endorse_base) << '|' << fmt6(cfg.costs.network_hop) << '|'
      << fmt6(cfg.costs.order_per_block) << '|' << fmt6(cfg.costs.order_per_tx) << '|'
      << fmt6(cfg.costs.vscc_per_tx) << '|' << fmt6(cfg.costs.commit_per_block) << '|'
      << fmt6(cfg.costs.commit_per_write) << '|' << fmt6(cfg.costs.snapshot_per_mb)
      << '|' << cfg.costs.endorser_workers << '|' << cfg.costs.endorser_queue_cap
      << '|' << cfg.costs.orderer_queue_cap << '|' << cfg.costs.validator_queue_cap
      << '|' << static_cast<int>(cfg.workload.family) << '|' << cfg.workload.key_count
      << '|' << cfg.workload.hot_keys << '|' << fmt6(cfg.workload.hot_prob) << '|'
      << cfg.workload.music_hot_keys << '|' << cfg.workload.phase_length << '|'
      << static_cast<int>(cfg.workload.variant) << '|' << cfg.agent.hidden << '|'
      << fmt6(cfg.agent.lr) << '|' << fmt6(cfg.agent.gamma) << '|'
      << cfg.agent.replay_capacity << '|' << cfg.agent.minibatch << '|'
      << cfg.agent.target_sync << '|' << fmt6(cfg.agent.grad_clip) << '|'
      << (cfg.epsilon_constant ? 1 : 0) << '|' << fmt6(cfg.epsilon_value) << '|'
      << cfg.learn_passes << '|' << cfg.summary_window;
    return s.str();
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ordered_json config_json(const OrdererConfig& c) {
    return ordered_json{{"max_message_count", c.max_message_count},
                        {"preferred_max_bytes_mb", c.preferred_max_bytes_mb},
                        {"batch_timeout_s", c.batch_timeout_s},
                        {"snapshot_interval_mb", c.snapshot_interval_mb}};
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << body;
    if (!out.flush()) throw IoError("write failed: " + path);
}

// Minimal standalone line plot; enough to eyeball a run.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    constexpr int W = 760, H = 380, ML = 64, MR = 16, MT = 34, MB = 30;
    double lo = 0.0, hi = 1e-9;
    std::size_t n = 0;
    for (const auto& [name, ys] : series) {
        n = std::max(n, ys.size());
        for (double y : ys) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
    }
    if (n < 2) return;
    const double xs = static_cast<double>(W - ML - MR) / static_cast<double>(n - 1);
    const double yr = hi - lo > 0 ? hi - lo : 1.0;
    auto ypix = [&](double y) { return MT + (H - MT - MB) * (1.0 - (y - lo) / yr); };
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << ' ' << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << ML << "' y='20' font-family='monospace' font-size='14'>"
        << title << "</text>\n"
        << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='"
        << H - MB << "' stroke='#444'/>\n"
        << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR << "' y2='"
        << H - MB << "' stroke='#444'/>\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", hi);
    svg << "<text x='4' y='" << MT + 4 << "' font-family='monospace' font-size='11'>"
        << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.6g", lo);
    svg << "<text x='4' y='" << H - MB << "' font-family='monospace' font-size='11'>"
        << buf << "</text>\n";
    int ci = 0;
    for (const auto& [name, ys] : series) {
        const char* color = kColors[ci % 4];
        svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.2' points='";
        for (std::size_t i = 0; i < ys.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", ML + xs * static_cast<double>(i),
                          ypix(ys[i]));
            svg << buf;
        }
        svg << "'/>\n<text x='" << ML + 8 + 150 * ci << "' y='" << H - 8
            << "' font-family='monospace' font-size='12' fill='" << color << "'>"
            << name << "</text>\n";
        ++ci;
    }
    svg << "</svg>\n";
    write_text_file(path, svg.str());
}

void write_plots(const std::string& dir, const std::vector<StepRow>& rows) {
    fs::create_directories(dir);
    std::vector<double> overall, success, latency, jain;
    overall.reserve(rows.size());
    for (const StepRow& r : rows) {
        overall.push_back(r.overall_tps);
        success.push_back(r.success_tps);
        latency.push_back(r.avg_latency);
        jain.push_back(r.jain);
    }
    write_svg_plot(dir + "/throughput.svg", "throughput (TPS) vs step",
                   {{"overall", overall}, {"success", success}});
    write_svg_plot(dir + "/latency.svg", "avg latency (s) vs step",
                   {{"latency", latency}});
    write_svg_plot(dir + "/fairness.svg", "fairness index vs step", {{"jain", jain}});
}

ordered_json summary_json(const ExperimentConfig& cfg,
                          const std::vector<StepRow>& rows) {
    const WindowMeans m = window_means(rows, cfg.summary_window);
    return ordered_json{{"window", cfg.summary_window},
                        {"overall_tps", m.overall_tps},
                        {"success_tps", m.success_tps},
                        {"avg_latency", m.avg_latency},
                        {"jain", m.jain}};
}

}  // namespace

SeedRunResult run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::string seed_dir = cfg.run_dir() + "/seed-" + std::to_string(seed);
    std::error_code ec;
    fs::create_directories(seed_dir, ec);
    if (ec) throw IoError("cannot create " + seed_dir + ": " + ec.message());

    std::unique_ptr<NdjsonTraceSink> trace;
    if (cfg.emit_trace)
        trace = std::make_unique<NdjsonTraceSink>(seed_dir + "/trace.ndjson");

    std::unique_ptr<SimEnv> env = make_env(cfg, seed, trace.get(), seed_dir);

    std::unique_ptr<DqnAgent> agent;
    if (cfg.mode == RunMode::Learn) {
        AgentConfig ac = cfg.agent;
        ac.obs_dim = env->obs_dim();
        ac.n_actions = env->n_actions();
        ac.seed = seed ^ kAgentSeedSalt;
        // Decay over the first 60% of the run, then a small residual floor.
        // One exploratory mis-step can poison a whole measurement step (a bad
        // knob set persists until the next action), so the floor stays low.
        ac.epsilon = cfg.epsilon_constant
                         ? EpsilonSchedule::constant(cfg.epsilon_value)
                         : EpsilonSchedule::linear(1.0, 0.02, cfg.steps * 6L / 10L);
        agent = std::make_unique<DqnAgent>(ac);
    }

    std::ofstream csv(seed_dir + "/steps.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write " + seed_dir + "/steps.csv");
    write_csv_header(csv);

    std::vector<StepRow> rows;
    rows.reserve(static_cast<std::size_t>(cfg.steps));

    // Unrecorded warm-up step under the starting controls: it yields the
    // first observation without spending a learning step on a blind action.
    EnvStep prev = env->step(std::nullopt);

    for (int k = 0; k < cfg.steps; ++k) {
        std::optional<std::size_t> action;
        double eps = 0.0;
        if (agent) {
            eps = agent->epsilon();
            action = agent->select_action(prev.obs);
        }
        EnvStep es = env->step(action);
        if (agent) {
            // Measurement steps are expensive (one simulated window each), so
            // the replay buffer may be reused several times per step; the
            // transition itself is stored only once.
            agent->learn({prev.obs, *action, es.reward, es.obs});
            for (int p = 1; p < cfg.learn_passes; ++p) agent->replay_update();
        }

        StepRow row;
        row.step = k;
        row.phase = es.phase;
        row.send_rate = es.metrics.send_rate;
        row.overall_tps = es.metrics.overall_tps;
        row.success_tps = es.metrics.success_tps;
        row.avg_latency = es.metrics.avg_latency;
        row.jain = es.metrics.jain;
        row.org1_success = es.metrics.org1_success;
        row.org2_success = es.metrics.org2_success;
        row.action = action ? std::to_string(*action) : "-";
        row.reward = es.reward;
        row.epsilon = eps;
        write_csv_row(csv, row);
        rows.push_back(std::move(row));
        prev = std::move(es);
    }
    if (!csv.flush()) throw IoError("write failed: " + seed_dir + "/steps.csv");
    csv.close();

    if (agent) agent->save_weights(seed_dir + "/weights.txt");

    ordered_json manifest{{"schema", kCsvSchemaTag},
                          {"experiment", kind_slug(cfg.experiment)},
                          {"mode", mode_slug(cfg.mode)},
                          {"seed", seed},
                          {"steps", cfg.steps},
                          {"step_duration", cfg.step_duration},
                          {"config_hash", hash_hex(fnv1a(canonical_config(cfg)))},
                          {"initial_config", config_json(cfg.initial_config)}};
    if (agent) {
        manifest["agent"] = ordered_json{
            {"hidden", cfg.agent.hidden},
            {"lr", cfg.agent.lr},
            {"gamma", cfg.agent.gamma},
            {"replay_capacity", cfg.agent.replay_capacity},
            {"minibatch", cfg.agent.minibatch},
            {"target_sync", cfg.agent.target_sync},
            {"grad_clip", cfg.agent.grad_clip},
            {"learn_passes", cfg.learn_passes},
            {"epsilon_mode", cfg.epsilon_constant ? "constant" : "linear-decay"}};
    }
    write_text_file(seed_dir + "/manifest.json", manifest.dump(2) + "\n");

    ordered_json summary = summary_json(cfg, rows);
    if (!cfg.baseline_dir.empty()) {
        const std::string base_csv =
            cfg.baseline_dir + "/seed-" + std::to_string(seed) + "/steps.csv";
        if (fs::exists(base_csv)) {
            const CompareSummary cs =
                compare_csv(seed_dir + "/steps.csv", base_csv, cfg.summary_window);
            summary["baseline"] = base_csv;
            summary["delta_overall_pct"] = cs.d_overall_pct;
            summary["delta_success_pct"] = cs.d_success_pct;
            summary["delta_latency_pct"] = cs.d_latency_pct;
            summary["delta_jain_pct"] = cs.d_jain_pct;
        }
    }
    write_text_file(seed_dir + "/summary.json", summary.dump(2) + "\n");

    if (cfg.emit_plots) write_plots(seed_dir + "/plots", rows);

    return SeedRunResult{seed_dir, std::move(rows)};
}

void run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ordered_json per_seed = ordered_json::array();
    WindowMeans agg;
    for (std::uint64_t seed : cfg.seeds) {
        const SeedRunResult res = run_one_seed(cfg, seed);
        const WindowMeans m = window_means(res.rows, cfg.summary_window);
        agg.overall_tps += m.overall_tps;
        agg.success_tps += m.success_tps;
        agg.avg_latency += m.avg_latency;
        agg.jain += m.jain;
        per_seed.push_back(ordered_json{{"seed", seed},
                                        {"dir", res.dir},
                                        {"overall_tps", m.overall_tps},
                                        {"success_tps", m.success_tps},
                                        {"avg_latency", m.avg_latency},
                                        {"jain", m.jain}});
    }
    const double n = static_cast<double>(cfg.seeds.size());
    ordered_json run_summary{
        {"experiment", kind_slug(cfg.experiment)},
        {"mode", mode_slug(cfg.mode)},
        {"window", cfg.summary_window},
        {"seeds", per_seed},
        {"mean", ordered_json{{"overall_tps", agg.overall_tps / n},
                              {"success_tps", agg.success_tps / n},
                              {"avg_latency", agg.avg_latency / n},
                              {"jain", agg.jain / n}}}};
    write_text_file(cfg.run_dir() + "/summary.json", run_summary.dump(2) + "\n");
}

}  // namespace chainpilot
