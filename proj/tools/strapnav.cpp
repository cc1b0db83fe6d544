// Batch front end: generate synthetic datasets, run a navigation filter over
// a dataset, compare run outputs.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nav/errors.hpp"
#include "nav/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct SimArgs {
    std::string traj_file;
    std::string err_file;
    std::string gnss_file;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct RunArgs {
    std::string filter;
    std::string config_file;
    std::string in_dir;
    std::string out_dir;
    std::vector<std::string> overrides;
};

struct CompareArgs {
    std::vector<std::string> dirs;
    std::string out_csv = "compare.csv";
};

int cmd_sim(const SimArgs& args) {
    const nav::TrajectorySpec traj =
        nav::parse_trajectory_spec(nav::Config::from_file(args.traj_file));
    const nav::SensorErrorSpec err =
        nav::parse_error_spec(nav::Config::from_file(args.err_file));
    const nav::GnssSpec gnss = nav::parse_gnss_spec(nav::Config::from_file(args.gnss_file));
    nav::EarthModel earth;
    nav::write_dataset(args.out_dir, traj, err, gnss, args.seed, earth);
    std::printf("dataset written to %s\n", args.out_dir.c_str());
    return kExitOk;
}

int cmd_run(const RunArgs& args) {
    nav::Config cfg;
    if (!args.config_file.empty()) cfg = nav::Config::from_file(args.config_file);
    for (const std::string& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw nav::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.filter.empty()) cfg.set("filter", args.filter);

    const nav::RunConfig run_cfg = nav::parse_run_config(cfg);
    const nav::DatasetBundle bundle = nav::load_bundle(args.in_dir);
    const nav::RunResult result = nav::run_filter(bundle, run_cfg);
    nav::write_run_outputs(args.out_dir, result);

    if (result.diverged) {
        std::fprintf(stderr, "filter diverged after t=%.6f s: %s\n", result.last_good_t,
                     result.divergence_reason.c_str());
        return kExitDiverged;
    }
    std::printf("run written to %s (%zu epochs)\n", args.out_dir.c_str(),
                result.estimates.size());
    return kExitOk;
}

int cmd_compare(const CompareArgs& args) {
    const auto table = nav::compare_runs(args.dirs);

    std::printf("%-26s", "metric");
    for (const auto& dir : args.dirs) std::printf(" %20s", dir.c_str());
    std::printf("\n");
    for (const auto& [name, values] : table) {
        std::printf("%-26s", name.c_str());
        for (double v : values) std::printf(" %20.6g", v);
        std::printf("\n");
    }

    std::FILE* f = std::fopen(args.out_csv.c_str(), "w");
    if (!f) throw nav::ConfigError("cannot write " + args.out_csv);
    std::fprintf(f, "metric");
    for (const auto& dir : args.dirs) std::fprintf(f, ",%s", dir.c_str());
    std::fprintf(f, "\n");
    for (const auto& [name, values] : table) {
        std::fprintf(f, "%s", name.c_str());
        for (double v : values) std::fprintf(f, ",%.17g", v);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strapdown INS / GNSS fusion toolkit"};
    app.require_subcommand(1);

    SimArgs sim_args;
    CLI::App* sim = app.add_subcommand("sim", "generate a synthetic dataset");
    sim->add_option("--traj", sim_args.traj_file, "trajectory spec file")->required();
    sim->add_option("--err", sim_args.err_file, "sensor error spec file")->required();
    sim->add_option("--gnss", sim_args.gnss_file, "GNSS spec file")->required();
    sim->add_option("--seed", sim_args.seed, "random seed");
    sim->add_option("-o,--out", sim_args.out_dir, "output directory")->required();

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run a filter over a dataset");
    run->add_option("--filter", run_args.filter, "ins | eskf | comp | gd")
        ->check(CLI::IsMember({"ins", "eskf", "comp", "gd"}));
    run->add_option("--config", run_args.config_file, "run config file (key=value)");
    run->add_option("--set", run_args.overrides, "override a config key (key=value)");
    run->add_option("-i,--in", run_args.in_dir, "dataset directory")->required();
    run->add_option("-o,--out", run_args.out_dir, "output directory")->required();

    CompareArgs cmp_args;
    CLI::App* cmp = app.add_subcommand("compare", "compare run outputs");
    cmp->add_option("dirs", cmp_args.dirs, "run directories")->expected(-2);
    cmp->add_option("-o,--out", cmp_args.out_csv, "comparison csv path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_sim(sim_args);
        if (run->parsed()) return cmd_run(run_args);
        if (cmp->parsed()) return cmd_compare(cmp_args);
    } catch (const nav::DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
