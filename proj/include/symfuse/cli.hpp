#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symfuse/characterize.hpp"
#include "symfuse/corpus.hpp"
#include "symfuse/embed.hpp"
#include "symfuse/fusion.hpp"
#include "symfuse/stats.hpp"
#include "symfuse/symbolic.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

/// Fully resolved run configuration. Every artifact embeds its JSON form so a
/// run can be reproduced from any output file.
struct RunConfig {
    std::string data_path;
    std::string lexicon_dir;
    std::string embeddings_path; // empty selects the fallback embedder
    size_t fallback_dim = 64;
    double alpha = 0.05;
    uint64_t seed = 0;
    std::vector<int> shots = {10, 25, 50};
    double dev_frac = 0.10;
    double test_frac = 0.15;
    TrainConfig train;
    std::string out_dir = "out";
    std::string task;

    nlohmann::ordered_json to_json() const {
        return {{"data", data_path},
                {"lexicons", lexicon_dir},
                {"embeddings", embeddings_path},
                {"fallback_dim", fallback_dim},
                {"alpha", alpha},
                {"seed", seed},
                {"shots", shots},
                {"dev_frac", dev_frac},
                {"test_frac", test_frac},
                {"train",
                 {{"lr", train.lr},
                  {"epochs", train.epochs},
                  {"patience", train.patience},
                  {"batch_size", train.batch_size},
                  {"dropout", train.dropout},
                  {"hidden", train.hidden}}},
                {"out", out_dir},
                {"task", task}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig cfg;
        if (j.contains("data")) cfg.data_path = j["data"].get<std::string>();
        if (j.contains("lexicons")) cfg.lexicon_dir = j["lexicons"].get<std::string>();
        if (j.contains("embeddings")) cfg.embeddings_path = j["embeddings"].get<std::string>();
        if (j.contains("fallback_dim")) cfg.fallback_dim = j["fallback_dim"].get<size_t>();
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
        if (j.contains("shots")) cfg.shots = j["shots"].get<std::vector<int>>();
        if (j.contains("dev_frac")) cfg.dev_frac = j["dev_frac"].get<double>();
        if (j.contains("test_frac")) cfg.test_frac = j["test_frac"].get<double>();
        if (j.contains("train")) {
            const auto& t = j["train"];
            if (t.contains("lr")) cfg.train.lr = t["lr"].get<double>();
            if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
            if (t.contains("patience")) cfg.train.patience = t["patience"].get<int>();
            if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<int>();
            if (t.contains("dropout")) cfg.train.dropout = t["dropout"].get<double>();
            if (t.contains("hidden")) cfg.train.hidden = t["hidden"].get<size_t>();
        }
        if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
        if (j.contains("task")) cfg.task = j["task"].get<std::string>();
        return cfg;
    }

    void resolve() {
        if (task.empty() && !data_path.empty())
            task = std::filesystem::path(data_path).stem().string();
    }

    void validate_paths(bool need_lexicons = true) const {
        namespace fs = std::filesystem;
        if (data_path.empty() || !fs::exists(data_path))
            throw ConfigError("config: data file not found: " + data_path);
        if (need_lexicons && (lexicon_dir.empty() || !fs::is_directory(lexicon_dir)))
            throw ConfigError("config: lexicon directory not found: " + lexicon_dir);
        if (!embeddings_path.empty() && !fs::exists(embeddings_path))
            throw ConfigError("config: embeddings file not found: " + embeddings_path);
    }
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

inline std::string markdown_footer(const RunConfig& cfg) {
    return "\n---\nrun_config: `" + cfg.to_json().dump() + "`\n";
}

inline EmbeddingTable embeddings_for(const RunConfig& cfg, const LabeledDataset& ds) {
    if (!cfg.embeddings_path.empty()) {
        EmbeddingTable table = load_embeddings(cfg.embeddings_path);
        for (const auto& doc : ds.documents)
            if (!table.has(doc.id))
                throw ConfigError("embeddings: no entry for document '" + doc.id + "' in " +
                                  cfg.embeddings_path);
        return table;
    }
    return fallback_embeddings(ds, cfg.fallback_dim, cfg.seed);
}

inline std::vector<FeatureMatrix> restrict_rows(const std::vector<FeatureMatrix>& matrices,
                                                const std::vector<std::string>& ids) {
    std::vector<FeatureMatrix> out;
    out.reserve(matrices.size());
    for (const auto& m : matrices) out.push_back(m.select_rows(ids));
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

/// extract: one feature CSV per model over the full dataset.
inline std::vector<std::string> cmd_extract(const RunConfig& cfg) {
    cfg.validate_paths();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const LabeledDataset ds = load_jsonl(cfg.data_path);
    const auto extractors = default_extractors(cfg.lexicon_dir);
    const auto matrices = extract_all(ds, extractors);
    const std::string provenance = cfg.to_json().dump();
    std::vector<std::string> written;
    for (const auto& m : matrices) {
        const fs::path path = fs::path(cfg.out_dir) / ("features_" + m.model_id + ".csv");
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        write_feature_csv(m, os, provenance);
        written.push_back(path.string());
    }
    return written;
}

/// select: univariate tests on the training split; JSON report plus a
/// top-3-per-model markdown table.
inline SelectionReport cmd_select(const RunConfig& cfg) {
    cfg.validate_paths();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const LabeledDataset ds = load_jsonl(cfg.data_path);
    SplitSpec spec{SplitMode::full, cfg.seed, std::nullopt, cfg.dev_frac, cfg.test_frac};
    const FullSplit split = split_full(ds, spec);
    const auto extractors = default_extractors(cfg.lexicon_dir);
    const auto matrices = extract_all(split.train, extractors);
    SelectionReport report = select_features(matrices, split.train.label_vector(), cfg.alpha, cfg.task);

    auto j = selection_to_json(report);
    j["run_config"] = cfg.to_json();
    detail::write_json_file(fs::path(cfg.out_dir) / "selection.json", j);
    detail::write_text_file(fs::path(cfg.out_dir) / "selection.md",
                            selection_to_markdown(report) + detail::markdown_footer(cfg));
    return report;
}

/// characterize: dataset-level means and top detected classes.
inline CharacterizationReport cmd_characterize(const RunConfig& cfg) {
    cfg.validate_paths();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    LabeledDataset ds = load_jsonl(cfg.data_path);
    ds.name = cfg.task;
    const auto extractors = default_extractors(cfg.lexicon_dir);
    const auto matrices = extract_all(ds, extractors);
    const CharacterizationReport report = summarize(ds, matrices);

    auto j = characterization_to_json(report);
    j["run_config"] = cfg.to_json();
    detail::write_json_file(fs::path(cfg.out_dir) / "characterization.json", j);
    detail::write_text_file(fs::path(cfg.out_dir) / "characterization.md",
                            characterization_to_markdown(report) + detail::markdown_footer(cfg));
    return report;
}

struct SeedRunResult {
    uint64_t seed = 0;
    SelectionReport selection;
    Standardizer standardizer;
    TrainResult trained;
    Metrics train_metrics, dev_metrics, test_metrics;
    size_t d_f = 0, d_e = 0;
    bool symbolic_empty = false;
};

namespace detail {

/// One full-protocol run: split, select on train, standardize on train,
/// build fused inputs, train, evaluate all three splits.
inline SeedRunResult run_full_once(const RunConfig& cfg, const LabeledDataset& ds,
                                   const std::vector<FeatureMatrix>& full_matrices,
                                   const EmbeddingTable& embeds, uint64_t run_seed) {
    SeedRunResult out;
    out.seed = run_seed;

    SplitSpec spec{SplitMode::full, run_seed, std::nullopt, cfg.dev_frac, cfg.test_frac};
    const FullSplit split = split_full(ds, spec);

    const auto train_m = restrict_rows(full_matrices, split.train.ids());
    out.selection = select_features(train_m, split.train.label_vector(), cfg.alpha, cfg.task);
    if (out.selection.reduced_total() == 0)
        std::cerr << "warning: no symbolic feature passed selection (seed " << run_seed
                  << "); training embedding-only head\n";

    const auto cols = selected_columns(out.selection);
    out.standardizer = fit_standardizer(cols, train_m);
    const Standardizer& st = out.standardizer;
    const FusedDataset train_data = build_fused_inputs(cols, train_m, embeds, split.train, st);
    const FusedDataset dev_data =
        build_fused_inputs(cols, restrict_rows(full_matrices, split.dev.ids()), embeds, split.dev, st);
    const FusedDataset test_data =
        build_fused_inputs(cols, restrict_rows(full_matrices, split.test.ids()), embeds, split.test, st);

    TrainConfig tc = cfg.train;
    tc.seed = run_seed;
    out.trained = train(train_data, dev_data, tc);
    out.train_metrics = evaluate(out.trained.params, train_data);
    out.dev_metrics = evaluate(out.trained.params, dev_data);
    out.test_metrics = evaluate(out.trained.params, test_data);
    out.d_f = train_data.d_f();
    out.d_e = train_data.d_e();
    out.symbolic_empty = train_data.symbolic_empty;
    return out;
}

inline nlohmann::ordered_json seed_run_to_json(const SeedRunResult& r,
                                               const std::vector<std::string>& feature_order) {
    return {{"seed", r.seed},
            {"d_f", r.d_f},
            {"d_e", r.d_e},
            {"symbolic_empty", r.symbolic_empty},
            {"selected_features", feature_order},
            {"best_epoch", r.trained.best_epoch},
            {"best_val_macro_f1", r.trained.best_val_macro_f1},
            {"splits",
             {{"train", metrics_to_json(r.train_metrics)},
              {"dev", metrics_to_json(r.dev_metrics)},
              {"test", metrics_to_json(r.test_metrics)}}}};
}

} // namespace detail

/// train: the full protocol over three consecutive seeds with mean test
/// metrics; writes eval.json and one checkpoint per seed.
inline nlohmann::ordered_json cmd_train(const RunConfig& cfg) {
    cfg.validate_paths();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const LabeledDataset ds = load_jsonl(cfg.data_path);
    const auto extractors = default_extractors(cfg.lexicon_dir);
    const auto matrices = extract_all(ds, extractors);
    const EmbeddingTable embeds = detail::embeddings_for(cfg, ds);

    nlohmann::ordered_json j;
    j["task"] = cfg.task;
    j["protocol"] = "full";
    j["seeds"] = nlohmann::ordered_json::array();
    j["per_seed"] = nlohmann::ordered_json::array();
    double mean_f1 = 0.0, mean_bacc = 0.0;
    constexpr int n_seeds = 3;
    for (int k = 0; k < n_seeds; ++k) {
        const uint64_t run_seed = cfg.seed + static_cast<uint64_t>(k);
        const SeedRunResult r = detail::run_full_once(cfg, ds, matrices, embeds, run_seed);
        j["seeds"].push_back(run_seed);

        const auto cols = selected_columns(r.selection);
        j["per_seed"].push_back(detail::seed_run_to_json(r, column_names(cols)));
        mean_f1 += r.test_metrics.macro_f1();
        mean_bacc += r.test_metrics.balanced_accuracy();

        TrainConfig tc = cfg.train;
        tc.seed = run_seed;
        auto ck = checkpoint_to_json(r.trained.params, r.standardizer, column_names(cols), tc);
        ck["run_config"] = cfg.to_json();
        detail::write_json_file(fs::path(cfg.out_dir) /
                                    ("checkpoint_seed" + std::to_string(run_seed) + ".json"),
                                ck);
    }
    j["mean"] = {{"test_macro_f1", mean_f1 / n_seeds}, {"test_balanced_accuracy", mean_bacc / n_seeds}};
    j["run_config"] = cfg.to_json();
    detail::write_json_file(fs::path(cfg.out_dir) / "eval.json", j);
    return j;
}

/// evaluate: reload a checkpoint, rebuild its test split, and score it.
inline nlohmann::ordered_json cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path) {
    cfg.validate_paths();
    namespace fs = std::filesystem;
    if (!fs::exists(checkpoint_path))
        throw ConfigError("evaluate: checkpoint not found: " + checkpoint_path);
    fs::create_directories(cfg.out_dir);

    std::ifstream in(checkpoint_path, std::ios::binary);
    nlohmann::json ckj;
    try {
        in >> ckj;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("evaluate: cannot parse checkpoint: " + std::string(e.what()));
    }
    const Checkpoint ck = checkpoint_from_json(ckj);

    const LabeledDataset ds = load_jsonl(cfg.data_path);
    const auto extractors = default_extractors(cfg.lexicon_dir);
    const auto matrices = extract_all(ds, extractors);
    const EmbeddingTable embeds = detail::embeddings_for(cfg, ds);

    SplitSpec spec{SplitMode::full, ck.train_config.seed, std::nullopt, cfg.dev_frac, cfg.test_frac};
    const FullSplit split = split_full(ds, spec);
    const auto cols = parse_column_names(ck.feature_order);
    const FusedDataset test_data = build_fused_inputs(
        cols, detail::restrict_rows(matrices, split.test.ids()), embeds, split.test, ck.standardizer);
    const Metrics m = evaluate(ck.params, test_data);
    if (m.single_class_data)
        std::cerr << "warning: evaluation data contains a single class; metrics degenerate\n";

    nlohmann::ordered_json j;
    j["task"] = cfg.task;
    j["protocol"] = "evaluate";
    j["checkpoint"] = checkpoint_path;
    j["seed"] = ck.train_config.seed;
    j["test"] = metrics_to_json(m);
    j["run_config"] = cfg.to_json();
    detail::write_json_file(fs::path(cfg.out_dir) / "eval_checkpoint.json", j);
    return j;
}

/// fewshot: 10/25/50-shot runs with both the fused head and the
/// embedding-only baseline; emits a shots-by-head grid.
inline nlohmann::ordered_json cmd_fewshot(const RunConfig& cfg) {
    cfg.validate_paths();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const LabeledDataset ds = load_jsonl(cfg.data_path);
    const auto extractors = default_extractors(cfg.lexicon_dir);
    const auto matrices = extract_all(ds, extractors);
    const EmbeddingTable embeds = detail::embeddings_for(cfg, ds);

    nlohmann::ordered_json j;
    j["task"] = cfg.task;
    j["protocol"] = "fewshot";
    j["seed"] = cfg.seed;
    j["grid"] = nlohmann::ordered_json::array();

    std::ostringstream md;
    md << "# Few-shot evaluation: " << cfg.task << "\n\n| Task |";
    for (int shots : cfg.shots)
        md << ' ' << shots << " AdapterV | " << shots << " AdapterF |";
    md << "\n|---|";
    for (size_t i = 0; i < cfg.shots.size() * 2; ++i) md << "---|";
    md << "\n| " << cfg.task << " |";

    for (int shots : cfg.shots) {
        SplitSpec spec{SplitMode::fewshot, cfg.seed, shots, cfg.dev_frac, cfg.test_frac};
        const FewshotSplit split = split_fewshot(ds, spec);

        const auto train_m = detail::restrict_rows(matrices, split.train.ids());
        SelectionReport report;
        try {
            report = select_features(train_m, split.train.label_vector(), cfg.alpha, cfg.task);
        } catch (const std::invalid_argument&) {
            // single-class shot sample: no usable selection, run embedding-only
            report.task = cfg.task;
            report.alpha = cfg.alpha;
            report.n = static_cast<int>(split.train.size());
        }
        const auto cols = selected_columns(report);
        const Standardizer st = fit_standardizer(cols, train_m);
        const FusedDataset train_data = build_fused_inputs(cols, train_m, embeds, split.train, st);
        const FusedDataset val_data = build_fused_inputs(
            cols, detail::restrict_rows(matrices, split.val.ids()), embeds, split.val, st);
        const FusedDataset test_data = build_fused_inputs(
            cols, detail::restrict_rows(matrices, split.test.ids()), embeds, split.test, st);

        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;
        const TrainResult fused = train(train_data, val_data, tc);
        const TrainResult vanilla = train_baseline_vanilla(train_data, val_data, tc);
        const Metrics fused_m = evaluate(fused.params, test_data);
        const Metrics vanilla_m = evaluate(vanilla.params, strip_symbolic(test_data));

        j["grid"].push_back({{"shots", shots},
                             {"train_size", split.train.size()},
                             {"val_size", split.val.size()},
                             {"test_size", split.test.size()},
                             {"selected_features", column_names(cols)},
                             {"adapter_f", {{"test", metrics_to_json(fused_m)},
                                            {"best_epoch", fused.best_epoch}}},
                             {"adapter_v", {{"test", metrics_to_json(vanilla_m)},
                                            {"best_epoch", vanilla.best_epoch}}}});
        char fbuf[32], vbuf[32];
        std::snprintf(vbuf, sizeof(vbuf), "%.1f%%", 100.0 * vanilla_m.macro_f1());
        std::snprintf(fbuf, sizeof(fbuf), "%.1f%%", 100.0 * fused_m.macro_f1());
        md << ' ' << vbuf << " | " << fbuf << " |";
    }
    md << "\n";
    j["run_config"] = cfg.to_json();
    detail::write_json_file(fs::path(cfg.out_dir) / "fewshot.json", j);
    detail::write_text_file(fs::path(cfg.out_dir) / "fewshot.md", md.str() + detail::markdown_footer(cfg));
    return j;
}

} // namespace symfuse
