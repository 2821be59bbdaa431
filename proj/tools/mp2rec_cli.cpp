// mp2rec: train / eval / grid / reproduce / synth for the three-tower
// momentum recommender and its baselines.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mp2rec/commands.hpp"
#include "mp2rec/error.hpp"

namespace {

struct CliState {
    std::string config_path;
    // Flag overrides in command-line order; applied on top of the config
    // file through the same typed schema.
    std::vector<std::pair<std::string, std::string>> overrides;
};

// Every run-config key doubles as a --flag, so the file and the command
// line stay one schema.
void add_config_flags(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_path, "run config file (key = value lines)");
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"dataset", "ratings file (resolved against $MP2REC_DATA_ROOT when relative)"},
        {"format", "ratings format: ml100k | ml1m | csv"},
        {"model", "model kind: neumf | bpr | ranknet | appl | t3 | mp2"},
        {"out", "output directory"},
        {"alpha", "momentum coefficient in [0,1]"},
        {"beta", "pairwise loss weight"},
        {"lambda", "L2 coefficient"},
        {"lr", "learning rate"},
        {"dim", "embedding dimension"},
        {"mlp", "tower widths like 64x32, or none"},
        {"batch", "mini-batch size"},
        {"epochs", "training epochs"},
        {"seed", "run seed"},
        {"weighting", "label weighting: joint | separate | uniform"},
        {"allow_degenerate_alpha", "accept alpha=1 (frozen momentum tower)"},
        {"optimizer", "adam | sgd"},
        {"activation", "relu | sigmoid | tanh"},
        {"threshold", "binarization threshold on ratings"},
        {"pairs_per_user", "training pairs sampled per user"},
        {"negatives", "sampled negatives per test user"},
        {"ks", "metric cutoffs, e.g. 5,20"},
        {"seeds", "seed list for grid/reproduce, e.g. 1,2,3,4,5"},
        {"threads", "worker threads (1 = serial reference path)"},
        {"alphas", "grid alpha list (default: the 8-point sweep)"},
        {"betas", "grid beta list"},
        {"models", "reproduce model list (default: all six)"},
        {"reference", "reference table name: ml-100k | ml-1m | none"},
        {"constants", "reference constants file override"},
    };
    for (const auto& [key, help] : keys) {
        std::string flag = "--" + key;
        for (char& c : flag) {
            if (c == '_') c = '-';
        }
        cmd->add_option_function<std::string>(
               flag,
               [&state, k = key](const std::string& v) { state.overrides.emplace_back(k, v); },
               help)
            ->take_last();  // repeated flags: the last occurrence wins
    }
}

mp2rec::RunConfig build_config(const CliState& state) {
    mp2rec::RunConfig config;
    if (!state.config_path.empty()) config = mp2rec::load_config(state.config_path);
    for (const auto& [key, value] : state.overrides) {
        mp2rec::apply_config_entry(config, key, value, "flag --" + key);
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-tower momentum recommender toolkit"};
    app.require_subcommand(1);

    CliState state;

    CLI::App* train = app.add_subcommand("train", "train one model; writes log + checkpoint");
    add_config_flags(train, state);

    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint against a split manifest");
    add_config_flags(eval, state);
    std::string eval_checkpoint, eval_manifest;
    eval->add_option("checkpoint", eval_checkpoint, "checkpoint file (default: the train output path)");
    eval->add_option("manifest", eval_manifest, "split manifest (default: the train output path)");

    CLI::App* grid = app.add_subcommand("grid", "alpha/beta sweep, mean metrics per point");
    add_config_flags(grid, state);

    CLI::App* reproduce =
        app.add_subcommand("reproduce", "comparison table over models with frozen defaults");
    add_config_flags(reproduce, state);

    CLI::App* synth = app.add_subcommand("synth", "write a synthetic ratings file");
    add_config_flags(synth, state);
    std::string synth_path;
    mp2rec::SyntheticSpec synth_spec;
    synth->add_option("path", synth_path, "destination ratings file")->required();
    synth->add_option("--users", synth_spec.n_users, "user count");
    synth->add_option("--items", synth_spec.n_items, "item count");
    synth->add_option("--noise", synth_spec.noise, "context-noise stddev (rating units)");
    synth->add_option("--gain", synth_spec.signal_gain, "latent-affinity gain (rating units)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        mp2rec::RunConfig config = build_config(state);
        if (train->parsed()) return mp2rec::cmd_train(config, std::cout);
        if (eval->parsed()) return mp2rec::cmd_eval(config, eval_checkpoint, eval_manifest, std::cout);
        if (grid->parsed()) return mp2rec::cmd_grid(config, std::cout);
        if (reproduce->parsed()) return mp2rec::cmd_reproduce(config, std::cout);
        if (synth->parsed()) {
            synth_spec.seed = config.hyper.seed;
            return mp2rec::cmd_synth(synth_path, synth_spec, std::cout);
        }
    } catch (const mp2rec::NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
