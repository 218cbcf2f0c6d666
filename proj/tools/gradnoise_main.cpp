#include "gradnoise/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

namespace {

struct CliOverrides {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trajectories = 0;
    bool trajectories_set = false;
    int workers = -1;
};

void add_common_flags(CLI::App* cmd, CliOverrides& ov) {
    cmd->add_option("--config", ov.config, "key = value configuration file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", ov.seed, "master seed for the counter RNG")
        ->each([&ov](const std::string&) { ov.seed_set = true; });
    cmd->add_option("--out", ov.out, "output directory");
    cmd->add_option("--trajectories", ov.trajectories, "Monte Carlo sample count")
        ->each([&ov](const std::string&) { ov.trajectories_set = true; });
    cmd->add_option("--workers", ov.workers, "worker threads (0 = hardware)");
}

void print_summary(const gradnoise::ResultRecord& rec, const gradnoise::ExperimentPlan& plan) {
    std::printf("scenario: %s\n", gradnoise::scenario_name(rec.scenario).c_str());
    if (rec.scenario != gradnoise::Scenario::verify_identities)
        std::printf("trajectories: %d completed, %d failed\n", rec.trajectories_completed,
                    rec.trajectories_failed);
    for (const auto& row : rec.identities)
        std::printf("  [%s] %s  computed=%.6g expected=%.6g tol=%.3g\n",
                    row.pass ? "pass" : "FAIL", row.name.c_str(), row.computed, row.expected,
                    row.tolerance);
    if (!rec.scaling.empty()) {
        for (const auto& row : rec.scaling)
            std::printf("  eps=%-8g I=%.6g (ci %.3g)\n", row.eps, row.I, row.ci_half);
        std::printf("  fit: slope=%.4f r2=%.4f monotone=%d%s -> %s\n", rec.fit.slope, rec.fit.r2,
                    rec.fit.monotone ? 1 : 0, rec.fit.narrow_span ? " (narrow eps span)" : "",
                    rec.fit.pass ? "pass" : "FAIL");
    }
    std::printf("wall time: %.2f s, outputs in %s\n", rec.wall_seconds, plan.output_dir.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo study of gradient-rescaled noise on the circle"};
    app.require_subcommand(1);

    struct Cmd {
        const char* name;
        const char* help;
        gradnoise::Scenario scenario;
    };
    const Cmd cmds[] = {
        {"simulate", "run one ensemble and record trajectory diagnostics", gradnoise::Scenario::single_run},
        {"sweep-eps", "gradient functional decay across an eps grid", gradnoise::Scenario::eps_sweep},
        {"sweep-power", "super-linear decay for power-law shapes", gradnoise::Scenario::power_sweep},
        {"verify", "deterministic identity checks, no simulation", gradnoise::Scenario::verify_identities},
        {"martingale", "spatial-mean martingale diagnostics", gradnoise::Scenario::martingale_check},
        {"ou-control", "constant-shape control with closed-form statistics", gradnoise::Scenario::ou_control},
    };

    CliOverrides ov;
    gradnoise::Scenario chosen = gradnoise::Scenario::single_run;
    for (const Cmd& c : cmds) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common_flags(sub, ov);
        sub->callback([&chosen, sc = c.scenario] { chosen = sc; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        gradnoise::ExperimentPlan plan = gradnoise::default_profile();
        plan.scenario = chosen;
        if (!ov.config.empty()) gradnoise::apply_config(plan, gradnoise::load_config_file(ov.config));
        plan.scenario = chosen; // subcommand wins over any scenario= line
        if (ov.seed_set) plan.master_seed = ov.seed;
        if (!ov.out.empty()) plan.output_dir = ov.out;
        if (ov.trajectories_set) plan.trajectories = ov.trajectories;
        if (ov.workers >= 0) plan.workers = ov.workers;

        if (chosen == gradnoise::Scenario::power_sweep &&
            plan.base.shape.regime != gradnoise::ShapeRegime::power)
            gradnoise::apply_config(plan, {{"shape", "power"}, {"gamma", "2"}});
        if (chosen == gradnoise::Scenario::ou_control &&
            plan.base.shape.kind != gradnoise::ShapeKind::constant)
            gradnoise::apply_config(plan, {{"shape", "constant"}, {"shape_c", "1"}});

        const gradnoise::ResultRecord rec = gradnoise::run_plan(plan);
        print_summary(rec, plan);

        if (rec.trajectories_failed > 0) {
            std::fprintf(stderr, "warning: %d trajectories failed (blow-up or error)\n",
                         rec.trajectories_failed);
            return 3;
        }
        if (chosen == gradnoise::Scenario::verify_identities && !rec.pass) return 4;
        return 0;
    } catch (const gradnoise::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
