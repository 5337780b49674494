// adacont run|sweep|verify
//
// Exit status: 0 when all requested work succeeded, 1 when a trace, sweep
// entry or check failed, 2 on configuration or usage errors.
#include "adacont/app.hpp"
#include "adacont/checks.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace adacont;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string output;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "Override a config value, e.g. --set continuation.newton_max=20");
    cmd->add_option("-o,--output", c.output, "Output directory (overrides output.directory)");
}

RunConfig load(const Common& c, std::vector<std::string> extra = {}) {
    std::vector<std::string> sets = c.sets;
    if (!c.output.empty()) sets.push_back("output.directory=\"" + c.output + "\"");
    sets.insert(sets.end(), extra.begin(), extra.end());
    return load_run_config(c.config, sets);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stepper-preconditioned continuation of steady states"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run_cmd = app.add_subcommand("run", "Trace a branch, writing branch.csv and snapshots");
    add_common(run_cmd, run_opts);

    Common sweep_opts;
    std::vector<double> delta_t;
    int threads = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a continuation segment for a list of preconditioner steps");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--delta-t", delta_t, "Step list (overrides sweep.delta_t)")->delimiter(',');
    sweep_cmd->add_option("--threads", threads, "Concurrent entries (overrides sweep.threads)")->check(CLI::PositiveNumber);

    bool full = false;
    std::string work = (std::filesystem::temp_directory_path() / "adacont_verify").string();
    auto* verify_cmd = app.add_subcommand("verify", "Run the oracle checks and print PASS/FAIL per check");
    verify_cmd->add_flag("--full", full, "Include the convection delta t sweep (minutes)");
    verify_cmd->add_option("--work-dir", work, "Scratch directory for files written by checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) {
            const RunConfig cfg = load(run_opts);
            const RunSummary s = run(cfg);
            std::cout << "status=" << to_string(s.status) << " points=" << s.points << " rejected=" << s.failures;
            if (!s.message.empty()) std::cout << " message=" << s.message;
            std::cout << "\nwrote " << (cfg.output.directory / "branch.csv").string() << "\n";
            return s.status == TraceStatus::Completed ? 0 : 1;
        }
        if (*sweep_cmd) {
            std::vector<std::string> extra;
            if (threads > 0) extra.push_back("sweep.threads=" + std::to_string(threads));
            const RunConfig cfg = load(sweep_opts, extra);
            const auto& list = delta_t.empty() ? cfg.sweep.delta_t : delta_t;
            const auto rows = sweep(cfg, list);
            bool ok = true;
            for (const auto& r : rows) {
                std::cout << "delta_t=" << r.delta_t << " " << r.status << " points=" << r.points_completed
                          << " eta_mean=" << r.eta_mean << " eta_std=" << r.eta_std;
                if (!r.message.empty()) std::cout << " (" << r.message << ")";
                std::cout << "\n";
                ok = ok && r.status == "converged";
            }
            std::cout << "wrote " << (cfg.output.directory / "sweep.csv").string() << "\n";
            return ok ? 0 : 1;
        }
        std::filesystem::create_directories(work);
        std::vector<std::function<CheckResult()>> checks{
            check_laminar_fixed_point,    check_conduction_fixed_point, check_jacobian_differences,
            check_preconditioner_limits,  check_bicgstab_dense,         check_continuation_toys,
            check_step_schedule,          check_laminar_branch,
            [&] { return check_snapshot_round_trip(work); },
        };
        if (full) checks.push_back([&] { return check_delta_t_regimes(work); });
        int failed = 0;
        for (const auto& c : checks) {
            const CheckResult r = timed(c);
            print_result(std::cout, r);
            std::cout.flush();
            failed += r.passed ? 0 : 1;
        }
        return failed ? 1 : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
