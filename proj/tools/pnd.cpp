#include <CLI11.hpp>
#include <iostream>

#include "pnd/errors.hpp"
#include "pnd/harness.hpp"

namespace {

// --section.key=value overrides collected from the leftover arguments.
void apply_extra_overrides(pnd::ConfigMap& cfg, const std::vector<std::string>& extras) {
    for (const auto& raw : extras) {
        std::string s = raw;
        if (s.rfind("--", 0) == 0) s = s.substr(2);
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw pnd::ConfigError("unrecognized argument (expected --key=value): " + raw);
        }
        cfg.apply_override(s.substr(0, eq), s.substr(eq + 1));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Propagate & Distill: GNN-to-MLP distillation lab"};
    app.require_subcommand(1);
    app.allow_extras();

    std::string config_path;
    std::string out_dir;
    std::string data_root;
    std::int64_t seed = -1;
    int threads = 0;
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "single seed (overrides the seed list)");
    app.add_option("--threads", threads, "worker pool size");
    app.add_option("--data-root", data_root, "dataset root (PND_DATA_DIR fallback)");

    const char* names[] = {"train-teacher", "distill",      "sweep",
                           "chains-casestudy", "energy-trace", "theory-check",
                           "gen-chains",       "gen-synthetic", "make-splits"};
    for (const char* n : names) {
        app.add_subcommand(n)->allow_extras();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        pnd::ConfigMap cfg;
        if (!config_path.empty()) cfg = pnd::ConfigMap::from_file(config_path);
        apply_extra_overrides(cfg, app.remaining());
        CLI::App* sub = app.get_subcommands().front();
        apply_extra_overrides(cfg, sub->remaining());
        if (!out_dir.empty()) cfg.apply_override("experiment.out", out_dir);
        if (seed >= 0) cfg.apply_override("experiment.seeds", std::to_string(seed));
        if (threads > 0) cfg.apply_override("experiment.threads", std::to_string(threads));

        pnd::ExperimentConfig ec = pnd::ExperimentConfig::from_config(cfg, data_root);
        const std::string name = sub->get_name();
        if (name == "train-teacher") return pnd::cmd_train_teacher(ec);
        if (name == "distill") return pnd::cmd_distill(ec);
        if (name == "sweep") return pnd::cmd_sweep(ec);
        if (name == "chains-casestudy") return pnd::cmd_chains_casestudy(ec);
        if (name == "energy-trace") return pnd::cmd_energy_trace(ec);
        if (name == "theory-check") return pnd::cmd_theory_check(ec);
        if (name == "gen-chains") return pnd::cmd_gen_chains(ec);
        if (name == "gen-synthetic") return pnd::cmd_gen_synthetic(ec);
        if (name == "make-splits") return pnd::cmd_make_splits(ec);
        std::cerr << "unknown subcommand " << name << "\n";
        return 2;
    } catch (const pnd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pnd::LoadError& e) {
        std::cerr << "load error: " << e.what() << "\n";
        return 2;
    } catch (const pnd::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
