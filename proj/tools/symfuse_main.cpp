// symfuse command-line interface: extract | select | characterize | train |
// evaluate | fewshot. Exit codes: 0 success, 1 internal/numeric failure,
// 2 user or configuration error.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "symfuse/cli.hpp"

namespace {

symfuse::RunConfig load_base_config(const std::string& config_path) {
    symfuse::RunConfig cfg;
    if (config_path.empty()) return cfg;
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw symfuse::ConfigError("cannot open config file: " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw symfuse::ConfigError("cannot parse config file " + config_path + ": " + e.what());
    }
    return symfuse::RunConfig::from_json(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"symfuse: symbolic feature extraction, selection, and fused classification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string data, lexicons, embeddings, out = "out", task, checkpoint;
    size_t fallback_dim = 64;
    double alpha = 0.05, dev_frac = 0.10, test_frac = 0.15;
    uint64_t seed = 0;
    std::vector<int> shots;
    double lr = 1e-4, dropout = 0.1;
    int epochs = 30, patience = 10, batch_size = 32;
    size_t hidden = 64;

    app.add_option("--config", config_path, "JSON config file; flags override its fields");

    auto add_common = [&](CLI::App* cmd, bool needs_lexicons) {
        cmd->add_option("--data", data, "dataset JSONL file");
        if (needs_lexicons) cmd->add_option("--lexicons", lexicons, "lexicon directory");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", seed, "root seed");
        cmd->add_option("--alpha", alpha, "selection significance level");
        cmd->add_option("--task", task, "task name (defaults to data file stem)");
        cmd->add_option("--dev-frac", dev_frac, "development fraction");
        cmd->add_option("--test-frac", test_frac, "test fraction");
    };
    auto add_embedding_opts = [&](CLI::App* cmd) {
        cmd->add_option("--embeddings", embeddings, "precomputed embeddings JSONL");
        cmd->add_option("--fallback-dim", fallback_dim, "fallback embedder dimension");
    };
    auto add_train_opts = [&](CLI::App* cmd) {
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--epochs", epochs, "max epochs");
        cmd->add_option("--patience", patience, "early stopping patience");
        cmd->add_option("--batch-size", batch_size, "batch size");
        cmd->add_option("--dropout", dropout, "dropout rate");
        cmd->add_option("--hidden", hidden, "classifier hidden width");
    };

    auto* c_extract = app.add_subcommand("extract", "write per-model feature CSVs");
    add_common(c_extract, true);
    auto* c_select = app.add_subcommand("select", "univariate feature selection on the training split");
    add_common(c_select, true);
    auto* c_char = app.add_subcommand("characterize", "dataset-level descriptive report");
    add_common(c_char, true);
    auto* c_train = app.add_subcommand("train", "3-seed full-protocol training and evaluation");
    add_common(c_train, true);
    add_embedding_opts(c_train);
    add_train_opts(c_train);
    auto* c_eval = app.add_subcommand("evaluate", "score a saved checkpoint on its test split");
    add_common(c_eval, true);
    add_embedding_opts(c_eval);
    c_eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
    auto* c_fewshot = app.add_subcommand("fewshot", "10/25/50-shot runs with the AdapterV baseline");
    add_common(c_fewshot, true);
    add_embedding_opts(c_fewshot);
    add_train_opts(c_fewshot);
    c_fewshot->add_option("--shots", shots, "shot counts (default 10 25 50)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        symfuse::RunConfig cfg = load_base_config(config_path);
        auto use = [&](CLI::App* cmd, const std::string& flag, auto& target, const auto& value) {
            if (cmd->count(flag)) target = value;
        };
        CLI::App* active = app.get_subcommands().front();
        use(active, "--data", cfg.data_path, data);
        use(active, "--lexicons", cfg.lexicon_dir, lexicons);
        use(active, "--out", cfg.out_dir, out);
        use(active, "--seed", cfg.seed, seed);
        use(active, "--alpha", cfg.alpha, alpha);
        use(active, "--task", cfg.task, task);
        use(active, "--dev-frac", cfg.dev_frac, dev_frac);
        use(active, "--test-frac", cfg.test_frac, test_frac);
        if (active->get_option_no_throw("--embeddings")) {
            use(active, "--embeddings", cfg.embeddings_path, embeddings);
            use(active, "--fallback-dim", cfg.fallback_dim, fallback_dim);
        }
        if (active->get_option_no_throw("--lr")) {
            use(active, "--lr", cfg.train.lr, lr);
            use(active, "--epochs", cfg.train.epochs, epochs);
            use(active, "--patience", cfg.train.patience, patience);
            use(active, "--batch-size", cfg.train.batch_size, batch_size);
            use(active, "--dropout", cfg.train.dropout, dropout);
            use(active, "--hidden", cfg.train.hidden, hidden);
        }
        if (active->get_option_no_throw("--shots") && active->count("--shots")) cfg.shots = shots;
        if (cfg.data_path.empty()) throw symfuse::ConfigError("--data is required");
        cfg.resolve();

        if (active == c_extract) {
            for (const auto& path : symfuse::cmd_extract(cfg)) std::cout << path << '\n';
        } else if (active == c_select) {
            symfuse::cmd_select(cfg);
            std::cout << cfg.out_dir << "/selection.json\n";
        } else if (active == c_char) {
            symfuse::cmd_characterize(cfg);
            std::cout << cfg.out_dir << "/characterization.json\n";
        } else if (active == c_train) {
            const auto report = symfuse::cmd_train(cfg);
            std::cout << "mean test macro_f1 " << report["mean"]["test_macro_f1"].dump() << '\n';
        } else if (active == c_eval) {
            const auto report = symfuse::cmd_evaluate(cfg, checkpoint);
            std::cout << "test macro_f1 " << report["test"]["macro_f1"].dump() << '\n';
        } else if (active == c_fewshot) {
            symfuse::cmd_fewshot(cfg);
            std::cout << cfg.out_dir << "/fewshot.json\n";
        }
        return 0;
    } catch (const symfuse::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
