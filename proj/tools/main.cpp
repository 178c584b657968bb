#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "probelab/bench.hpp"
#include "probelab/errors.hpp"
#include "probelab/metrics.hpp"

namespace {

probelab::Scheme parse_scheme(const std::string& name) {
    const auto scheme = probelab::scheme_from_string(name);
    if (!scheme) throw probelab::UsageError("unknown scheme: " + name);
    return *scheme;
}

std::vector<probelab::Scheme> parse_scheme_list(const std::string& list) {
    std::vector<probelab::Scheme> schemes;
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t comma = list.find(',', start);
        const std::string part =
            list.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!part.empty()) schemes.push_back(parse_scheme(part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (schemes.empty()) throw probelab::UsageError("no scheme given");
    return schemes;
}

// "k" or "lo:hi".
std::pair<unsigned, unsigned> parse_delta_range(const std::string& text) {
    try {
        const std::size_t colon = text.find(':');
        if (colon == std::string::npos) {
            const unsigned k = static_cast<unsigned>(std::stoul(text));
            return {k, k};
        }
        const unsigned lo = static_cast<unsigned>(std::stoul(text.substr(0, colon)));
        const unsigned hi = static_cast<unsigned>(std::stoul(text.substr(colon + 1)));
        return {lo, hi};
    } catch (const std::exception&) {
        throw probelab::UsageError("cannot parse log2-inv-delta range: " + text);
    }
}

struct CliArgs {
    std::string scheme;
    std::string delta;
    std::string format = "csv";
    std::string detail = "aggregate";
    std::string out_path;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    unsigned trials = 1;
    unsigned budget_c = 4;
    unsigned jobs = 0;
    bool allow_failures = false;
};

void add_common_options(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--n", args.n, "table capacity (power of two, 2^6..2^26)")
        ->required();
    cmd->add_option("--log2-inv-delta", args.delta,
                    "k for delta = 2^-k (sweep accepts lo:hi)")
        ->required();
    cmd->add_option("--trials", args.trials, "seeded trials per cell");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--c", args.budget_c, "elastic probe-budget constant");
    cmd->add_option("--format", args.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", args.out_path, "output path (default: stdout)");
    cmd->add_option("--jobs", args.jobs, "max concurrent trials (0 = auto)");
    cmd->add_flag("--allow-failures", args.allow_failures,
                  "exit 0 even when trials fail");
}

probelab::RunSpec to_spec(const CliArgs& args, bool sweep) {
    probelab::RunSpec spec;
    spec.schemes = sweep ? parse_scheme_list(args.scheme)
                         : std::vector{parse_scheme(args.scheme)};
    spec.n = args.n;
    const auto [lo, hi] = parse_delta_range(args.delta);
    if (!sweep && lo != hi)
        throw probelab::UsageError("run takes a single log2-inv-delta; use sweep");
    spec.delta_log2_lo = lo;
    spec.delta_log2_hi = hi;
    spec.trials = args.trials;
    spec.master_seed = args.seed;
    spec.budget_c = args.budget_c;
    spec.format = args.format == "json" ? probelab::OutputFormat::json
                                        : probelab::OutputFormat::csv;
    spec.out_path = args.out_path;
    spec.detail = args.detail == "per_insertion" ? probelab::Detail::per_insertion
                                                 : probelab::Detail::aggregate;
    spec.jobs = args.jobs;
    spec.allow_failures = args.allow_failures;
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probelab: probe-complexity benchmarks for open addressing "
                 "without reordering"};
    app.require_subcommand(1);

    CliArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run one (scheme, n, delta) cell");
    run->add_option("--scheme", run_args.scheme, "elastic, funnel or uniform")
        ->required();
    add_common_options(run, run_args);
    run->add_option("--detail", run_args.detail, "aggregate or per_insertion")
        ->check(CLI::IsMember({"aggregate", "per_insertion"}));

    CliArgs sweep_args;
    CLI::App* sweep =
        app.add_subcommand("sweep", "run a cartesian scheme x delta sweep");
    sweep->add_option("--scheme", sweep_args.scheme,
                      "comma-separated scheme list")
        ->required();
    add_common_options(sweep, sweep_args);

    bool verify_fast = false;
    bool verify_fault = false;
    unsigned verify_jobs = 0;
    CLI::App* verify =
        app.add_subcommand("verify", "run the library's property suites");
    verify->add_flag("--fast", verify_fast, "skip the statistical sweeps");
    verify->add_flag("--inject-phi-fault", verify_fault,
                     "testing hook: corrupt phi and expect the suite to catch it");
    verify->add_option("--jobs", verify_jobs, "max concurrent trials (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (run->parsed()) return probelab::run_experiment(to_spec(run_args, false));
        if (sweep->parsed())
            return probelab::run_experiment(to_spec(sweep_args, true));
        if (verify->parsed()) {
            const probelab::VerifyOptions options{verify_fast, verify_fault,
                                                  verify_jobs};
            return probelab::run_verify(options, std::cout) ? 0 : 1;
        }
    } catch (const probelab::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const probelab::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
