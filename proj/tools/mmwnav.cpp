// SPDX-License-Identifier: Apache-2.0
//
// mmwnav: command-line front end for the simulation pipeline.
//
// Exit status: 0 on success, 1 on usage errors, 2 on data errors.

#include "mmw/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

namespace
{

namespace fs = std::filesystem;

struct CommonFlags
{
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string in;
    std::string out;
    bool full = false;
};

void add_common(CLI::App *cmd, CommonFlags &f, bool needs_in)
{
    cmd->add_option("--seed", f.seed, "Seed for this stage's randomness");
    cmd->add_option("--config", f.config, "Experiment config JSON (keys override the defaults)");
    cmd->add_option("--out", f.out, "Output directory")->required();
    if (needs_in)
        cmd->add_option("--in", f.in, "Input run directory (defaults to --out)");
    cmd->add_flag("--full", f.full, "Start from the full-scale config instead of the desk-scale one");
}

mmw::ExperimentConfig resolve_config(const CommonFlags &f)
{
    mmw::ExperimentConfig cfg = f.full ? mmw::ExperimentConfig::full() : mmw::ExperimentConfig::desk();
    const std::string in = f.in.empty() ? f.out : f.in;
    const std::string stored = mmw::run::config_file(in);
    if (fs::exists(stored))
        cfg = mmw::load_config(stored, cfg);
    if (!f.config.empty())
        cfg = mmw::load_config(f.config, cfg);
    return cfg;
}

void persist_config(const CommonFlags &f, const mmw::ExperimentConfig &cfg)
{
    mmw::save_config(mmw::run::config_file(f.out), cfg);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"mmWave link-state simulation and navigation pipeline"};
    app.require_subcommand(1);

    CommonFlags f;
    int n_envs = 0;
    int n_tx = 0;
    int sound_limit = 1;

    auto *gen = app.add_subcommand("gen-env", "Generate floor plans and TX placements");
    add_common(gen, f, false);
    gen->add_option("--n", n_envs, "Number of environments")->check(CLI::Range(2, 100000));
    gen->add_option("--tx", n_tx, "Transmitters per environment")->check(CLI::PositiveNumber);

    auto *trace = app.add_subcommand("raytrace", "Trace every TX over the receiver grid");
    add_common(trace, f, true);
    auto *sound = app.add_subcommand("sound", "Save correlation tensors for a sample of links");
    add_common(sound, f, true);
    sound->add_option("--limit", sound_limit, "Links per (environment, TX)")->check(CLI::PositiveNumber);
    auto *est = app.add_subcommand("estimate", "Sound and estimate every traced link");
    add_common(est, f, true);
    auto *ds = app.add_subcommand("build-dataset", "Join estimates with ray-trace labels");
    add_common(ds, f, true);
    auto *tr = app.add_subcommand("train", "Train the AoA+AoD and AoA-only classifiers");
    add_common(tr, f, true);
    auto *ev = app.add_subcommand("eval-classifier", "Evaluate both classifiers on held-out environments");
    add_common(ev, f, true);
    auto *nav = app.add_subcommand("navigate", "Run navigation episodes on held-out environments");
    add_common(nav, f, true);
    auto *rep = app.add_subcommand("report", "Write report CSVs for a run directory");
    add_common(rep, f, true);
    auto *all = app.add_subcommand("pipeline", "Run every stage and the report on one directory");
    add_common(all, f, false);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::Success &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 1;
    }

    try
    {
        mmw::ExperimentConfig cfg = resolve_config(f);
        const std::string in = f.in.empty() ? f.out : f.in;
        if (gen->parsed())
        {
            if (n_envs > 0)
            {
                cfg.n_envs = n_envs;
                cfg.train_envs = std::max(1, static_cast<int>(std::lround(n_envs * 18.0 / 38.0)));
                cfg.eval_envs = n_envs - cfg.train_envs;
            }
            if (n_tx > 0)
                cfg.tx_per_env = n_tx;
            if (f.seed)
                cfg.seeds.env = *f.seed;
            mmw::stage_gen_env(cfg, f.out);
        }
        else if (trace->parsed())
        {
            persist_config(f, cfg);
            mmw::stage_raytrace(cfg, in, f.out);
        }
        else if (sound->parsed())
        {
            if (f.seed)
                cfg.seeds.noise = *f.seed;
            persist_config(f, cfg);
            mmw::stage_sound(cfg, in, f.out, sound_limit);
        }
        else if (est->parsed())
        {
            if (f.seed)
                cfg.seeds.noise = *f.seed;
            persist_config(f, cfg);
            mmw::stage_estimate(cfg, in, f.out);
        }
        else if (ds->parsed())
        {
            persist_config(f, cfg);
            mmw::stage_build_dataset(cfg, in, f.out);
        }
        else if (tr->parsed())
        {
            if (f.seed)
                cfg.seeds.train = *f.seed;
            persist_config(f, cfg);
            mmw::stage_train(cfg, in, f.out);
        }
        else if (ev->parsed())
        {
            mmw::stage_eval_classifier(cfg, in, f.out);
        }
        else if (nav->parsed())
        {
            if (f.seed)
                cfg.seeds.nav = *f.seed;
            persist_config(f, cfg);
            mmw::stage_navigate(cfg, in, f.out);
        }
        else if (rep->parsed())
        {
            mmw::write_report(mmw::build_report(cfg, in), f.out);
        }
        else if (all->parsed())
        {
            if (f.seed)
                cfg.seeds.env = *f.seed;
            mmw::run_pipeline(cfg, f.out);
        }
    }
    catch (const mmw::Error &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
