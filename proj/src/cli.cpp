#include "dpafd/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "dpafd/analysis.hpp"
#include "dpafd/engine.hpp"

namespace dpafd::cli {

namespace {

bool write_file(const std::filesystem::path& path, const std::string& text, std::ostream& err) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        err << "error: cannot write '" << path.string() << "'\n";
        return false;
    }
    return true;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("DPAFD_SEED")) {
        std::uint64_t v = 0;
        std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size()) {
            return v;
        }
    }
    return 1;
}

std::string labels(const std::vector<LocalFrame>& frames) {
    std::string s;
    for (const auto& f : frames) {
        s += (s.empty() ? "" : " ") + f.address;
    }
    return s.empty() ? "-" : s;
}

}  // namespace

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    PeriodicResult result;
    try {
        const Scenario s = load_scenario(opt.scenario);
        result = run_periodic(s);
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const LivelockError& e) {
        err << "error: " << e.what() << '\n';
        for (const auto& p : e.pending()) {
            err << "  pending: " << p << '\n';
        }
        return kLivelock;
    }

    bool ok = true;
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        const auto& r = result.reports[i];
        out << render(r);
        ok = ok && r.terminated && r.violations == 0;
        if (opt.verdict) {
            const Verdict v = check_diagnosis(result.trace.cycle_segment(r.cycle_index), result.states[i]);
            out << "Verdict cycle " << r.cycle_index << '\n' << render(v);
            ok = ok && v.all();
        }
    }
    if (opt.trace_out && !write_file(*opt.trace_out, result.trace.export_text(), err)) {
        return kUsage;
    }
    return ok ? kOk : kVerdict;
}

int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
    Topology topo;
    try {
        topo = parse_topology(read_file(opt.topology));
    } catch (const std::exception& e) {
        err << "error: " << opt.topology.string() << ": " << e.what() << '\n';
        return kUsage;
    }
    std::vector<SweepRow> rows;
    try {
        rows = fault_sweep(topo, opt.faults, opt.trials, opt.seed.value_or(default_seed()));
    } catch (const AnalysisError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const LivelockError& e) {
        err << "error: " << e.what() << '\n';
        return kLivelock;
    }
    const std::string csv = sweep_csv(rows);
    if (opt.out) {
        return write_file(*opt.out, csv, err) ? kOk : kUsage;
    }
    out << csv;
    return kOk;
}

int cmd_exchange(const std::vector<std::filesystem::path>& scenarios, std::ostream& out, std::ostream& err) {
    if (scenarios.size() < 2) {
        err << "error: exchange needs at least two scenario files\n";
        return kUsage;
    }
    std::vector<NetworkOutcome> outcomes;
    try {
        for (const auto& path : scenarios) {
            const Scenario s = load_scenario(path);
            const PeriodicResult r = run_periodic(s);
            const CycleReport& last = r.reports.back();
            if (!last.final_frame) {
                err << "error: network " << s.network_id << " did not finish its last cycle\n";
                return kVerdict;
            }
            outcomes.push_back(NetworkOutcome{s.network_id, choose_gateway(s, r.states.back(), last),
                                              extract_faulty(*last.final_frame)});
        }
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const LivelockError& e) {
        err << "error: " << e.what() << '\n';
        return kLivelock;
    }

    const ExchangeResult ex = inter_network_exchange(outcomes);
    for (const auto& v : ex.views) {
        out << "Network " << v.network_id << " gateway=" << v.gateway << '\n';
        out << "  own: " << labels(v.own) << '\n';
        for (const auto& [origin, faulty] : v.received) {
            out << "  from " << origin << ": " << labels(faulty) << '\n';
        }
    }
    return kOk;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distributed fault diagnosis simulator"};
    app.require_subcommand(1);

    RunOptions run;
    std::string trace_path;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario's diagnosis cycles");
    run_cmd->add_option("scenario", run.scenario, "Scenario file")->required();
    run_cmd->add_option("--trace", trace_path, "Write the trace export here");
    run_cmd->add_flag("--verdict", run.verdict, "Check each cycle against the reachability oracle");

    SweepOptions sweep;
    std::string sweep_out;
    std::uint64_t sweep_seed = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Mean messages against crash-fault count");
    sweep_cmd->add_option("topology", sweep.topology, "Topology file")->required();
    sweep_cmd->add_option("--faults", sweep.faults, "Fault counts")->delimiter(',')->required();
    sweep_cmd->add_option("--trials", sweep.trials, "Trials per count")->check(CLI::PositiveNumber);
    auto* seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "Seed");
    sweep_cmd->add_option("--out", sweep_out, "CSV output path");

    std::vector<std::filesystem::path> exchange;
    auto* exchange_cmd = app.add_subcommand("exchange", "Exchange faulty lists between networks");
    exchange_cmd->add_option("scenarios", exchange, "Scenario files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    if (*run_cmd) {
        if (!trace_path.empty()) {
            run.trace_out = trace_path;
        }
        return cmd_run(run, out, err);
    }
    if (*sweep_cmd) {
        if (*seed_opt) {
            sweep.seed = sweep_seed;
        }
        if (!sweep_out.empty()) {
            sweep.out = sweep_out;
        }
        return cmd_sweep(sweep, out, err);
    }
    return cmd_exchange(exchange, out, err);
}

}  // namespace dpafd::cli
