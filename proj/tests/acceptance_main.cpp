// Acceptance suite: each numbered criterion prints one PASS/FAIL line.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "symfuse/cli.hpp"
#include "symfuse/corpus.hpp"
#include "symfuse/fusion.hpp"
#include "symfuse/stats.hpp"
#include "symfuse/symbolic.hpp"

#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace symfuse;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    std::ostringstream detail;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << (detail.tellp() > 0 ? "; " : "") << what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --- criterion 1 -----------------------------------------------------------

void survival_function_oracle(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    for (int d2 : {2, 8, 98}) {
        for (double f : {0.1, 1.0, 4.0, 10.0}) {
            const double sf = f_survival(f, 1, d2);
            const double ref = oracles::f_survival_quadrature(f, d2);
            c.expect(std::fabs(sf - ref) <= 1e-8,
                     "SF(" + fmt(f) + ";1," + std::to_string(d2) + ") off by " + fmt(sf - ref));
        }
    }
    const double closed = f_survival(32.0 / 9.0, 1, 2);
    c.expect(std::fabs(closed - 0.2) <= 1e-12, "closed form SF(32/9;1,2) = " + fmt(closed));
    const double elapsed = seconds_since(start);
    c.expect(elapsed < 1.0, "runtime " + fmt(elapsed) + "s exceeds 1s");
}

// --- criterion 2 -----------------------------------------------------------

void p_value_identity(Criterion& c) {
    Rng rng(20250101);
    for (int n : {10, 50, 200}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(n), y(n);
            const double mix = rng.uniform();
            for (int i = 0; i < n; ++i) {
                x[i] = rng.normal();
                y[i] = mix * x[i] + (1.0 - mix) * rng.normal();
            }
            const double r = pearson_r(x, y);
            const double f = f_statistic(r, n);
            const double p = std::isinf(f) ? 0.0 : f_survival(f, 1, n - 2);
            const double p_t = oracles::t_test_two_sided_p(std::sqrt(f), n - 2);
            if (std::fabs(p - p_t) > 1e-10) {
                c.expect(false, "n=" + std::to_string(n) + " |p - p_t| = " + fmt(std::fabs(p - p_t)));
                return;
            }
        }
    }
}

// --- criterion 3 -----------------------------------------------------------

void false_positive_calibration(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    const int n = 200, n_features = 1000;
    std::vector<double> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i < n / 2 ? 1.0 : 0.0;

    double total_fraction = 0.0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 7919);
        int selected = 0;
        std::vector<double> col(n);
        for (int j = 0; j < n_features; ++j) {
            for (int i = 0; i < n; ++i) col[i] = rng.normal();
            const double p = f_survival(f_statistic(pearson_r(col, labels), n), 1, n - 2);
            if (p <= 0.05) ++selected;
        }
        total_fraction += static_cast<double>(selected) / n_features;
    }
    const double fraction = total_fraction / 5.0;
    c.expect(fraction >= 0.03 && fraction <= 0.07,
             "seed-averaged selected fraction " + fmt(fraction) + " outside [0.03, 0.07]");
    const double elapsed = seconds_since(start);
    c.expect(elapsed < 10.0, "runtime " + fmt(elapsed) + "s exceeds 10s");
}

// --- criterion 4 -----------------------------------------------------------

void gradient_check(Criterion& c) {
    const double h = 1e-5;
    for (int draw = 0; draw < 3; ++draw) {
        Rng rng(500 + draw);
        auto params = FusionParams::shaped(3, 6, 8, 0.1);
        Rng init = rng.child(0);
        params.init(init);
        FusedInput in;
        for (int i = 0; i < 3; ++i) in.symbolic.push_back(rng.normal());
        for (int i = 0; i < 6; ++i) in.embedding.push_back(rng.normal());
        const int label = draw % 2;

        Rng dummy(0);
        ForwardCache cache;
        forward(params, in, Mode::eval, dummy, cache);
        FusionParams grads = FusionParams::zeros_like(params);
        backward(params, cache, cross_entropy_grad(cache.logits, label), grads);

        auto loss_now = [&]() {
            Rng d(0);
            ForwardCache cc;
            forward(params, in, Mode::eval, d, cc);
            return cross_entropy(cc.logits, label);
        };

        auto prefs = params.tensor_refs();
        auto grefs = grads.tensor_refs();
        double worst = 0.0;
        std::string worst_tensor;
        for (size_t k = 0; k < prefs.size(); ++k) {
            Vec& pv = *prefs[k].second;
            Vec& gv = *grefs[k].second;
            for (size_t i = 0; i < pv.size(); ++i) {
                const double orig = pv[i];
                pv[i] = orig + h;
                const double up = loss_now();
                pv[i] = orig - h;
                const double down = loss_now();
                pv[i] = orig;
                const double fd = (up - down) / (2.0 * h);
                const double rel =
                    std::fabs(fd - gv[i]) / std::max({std::fabs(fd), std::fabs(gv[i]), 1e-5});
                if (rel > worst) {
                    worst = rel;
                    worst_tensor = prefs[k].first;
                }
            }
        }
        c.expect(worst < 1e-4, "draw " + std::to_string(draw) + ": max rel error " + fmt(worst) +
                                   " in " + worst_tensor);
    }
}

// --- criterion 5 -----------------------------------------------------------

FusedDataset slice(const FusedDataset& all, size_t begin, size_t end) {
    FusedDataset out;
    out.feature_order = all.feature_order;
    out.symbolic_empty = all.symbolic_empty;
    for (size_t i = begin; i < end; ++i) {
        out.inputs.push_back(all.inputs[i]);
        out.labels.push_back(all.labels[i]);
    }
    return out;
}

void fusion_value_property(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    const size_t n = 400, d_f = 3, d_e = 16;

    // task A: label carried by one symbolic feature, embeddings pure noise
    FusedDataset task_a;
    {
        Rng rng(808);
        for (size_t i = 0; i < n; ++i) {
            FusedInput in;
            for (size_t j = 0; j < d_f; ++j) in.symbolic.push_back(rng.normal());
            for (size_t j = 0; j < d_e; ++j) in.embedding.push_back(rng.normal());
            task_a.labels.push_back(in.symbolic[0] > 0.0 ? 1 : 0);
            task_a.inputs.push_back(std::move(in));
        }
    }
    // task B: mirrored, label carried by the embedding, symbolic pure noise
    FusedDataset task_b;
    {
        Rng rng(809);
        for (size_t i = 0; i < n; ++i) {
            FusedInput in;
            const int label = static_cast<int>(i % 2);
            for (size_t j = 0; j < d_f; ++j) in.symbolic.push_back(rng.normal());
            for (size_t j = 0; j < d_e; ++j)
                in.embedding.push_back(rng.normal() + (label ? 1.0 : -1.0));
            task_b.labels.push_back(label);
            task_b.inputs.push_back(std::move(in));
        }
    }

    TrainConfig cfg;
    cfg.seed = 17;
    // from-scratch head on 300 samples needs a larger step than the
    // fine-tuning default to converge inside the 30-epoch budget
    cfg.lr = 3e-3;

    auto run_task = [&](const FusedDataset& all) {
        // 75/10/15 protocol shape over the already shuffled synthetic order
        const size_t n_train = 300, n_dev = 40;
        const auto train_split = slice(all, 0, n_train);
        const auto dev_split = slice(all, n_train, n_train + n_dev);
        const auto test_split = slice(all, n_train + n_dev, all.inputs.size());
        const auto fused = train(train_split, dev_split, cfg);
        const auto vanilla = train_baseline_vanilla(train_split, dev_split, cfg);
        return std::pair<double, double>{
            evaluate(fused.params, test_split).macro_f1(),
            evaluate(vanilla.params, strip_symbolic(test_split)).macro_f1()};
    };

    const auto [fused_a, vanilla_a] = run_task(task_a);
    c.expect(fused_a >= 0.9, "symbolic task: fused macro-F1 " + fmt(fused_a) + " < 0.9");
    c.expect(vanilla_a <= 0.6, "symbolic task: embedding-only macro-F1 " + fmt(vanilla_a) + " > 0.6");

    const auto [fused_b, vanilla_b] = run_task(task_b);
    c.expect(std::fabs(fused_b - vanilla_b) <= 0.05,
             "embedding task: |fused - vanilla| = " + fmt(std::fabs(fused_b - vanilla_b)) + " > 0.05");

    const double elapsed = seconds_since(start);
    c.expect(elapsed < 120.0, "runtime " + fmt(elapsed) + "s exceeds 2min");
}

// --- criterion 6 -----------------------------------------------------------

void readability_golden(Criterion& c) {
    struct Golden {
        const char* text;
        double cl, ari, gulpease;
    };
    const std::vector<Golden> golden = {
        {"The cat sat.", -8.03, -5.80, 100.0},
        {"Hi! Bye!", -30.70, -9.155, 100.0},
        {"The quick brown fox jumps over the lazy dog.", 3.7777778, 1.3866667, 83.4444444},
        {"I have 2 dogs.", -9.97, -7.655, 100.0},
        {"Reading is fun. Books open minds. Words carry weight.", 1.7733333, 2.05, 100.0},
    };
    for (const auto& g : golden) {
        const auto fv = writeprint(g.text);
        c.expect(std::fabs(fv.get("Coleman-Liau") - g.cl) <= 0.01,
                 std::string(g.text) + ": Coleman-Liau " + fmt(fv.get("Coleman-Liau")));
        c.expect(std::fabs(fv.get("Automated Readability") - g.ari) <= 0.01,
                 std::string(g.text) + ": ARI " + fmt(fv.get("Automated Readability")));
        c.expect(std::fabs(fv.get("Gulpease") - g.gulpease) <= 0.01,
                 std::string(g.text) + ": Gulpease " + fmt(fv.get("Gulpease")));
    }
}

// --- criterion 7 -----------------------------------------------------------

RunConfig toy_run(const std::string& out_dir) {
    RunConfig cfg;
    cfg.data_path = std::string(SYMFUSE_DATA_DIR) + "/toy/toy_misinfo.jsonl";
    cfg.lexicon_dir = std::string(SYMFUSE_DATA_DIR) + "/lexicons";
    cfg.fallback_dim = 32;
    cfg.seed = 3;
    cfg.task = "toy";
    cfg.out_dir = out_dir;
    cfg.train.epochs = 8;
    cfg.train.patience = 8;
    return cfg;
}

void protocol_shape(Criterion& c) {
    LabeledDataset ds;
    for (int i = 0; i < 100; ++i)
        ds.documents.push_back({"d" + std::to_string(i), "text body",
                                i % 2 ? Label::positive : Label::negative});
    const auto full = split_full(ds, SplitSpec{SplitMode::full, 11, std::nullopt});
    c.expect(full.train.size() == 75 && full.dev.size() == 10 && full.test.size() == 15,
             "full split sizes " + std::to_string(full.train.size()) + "/" +
                 std::to_string(full.dev.size()) + "/" + std::to_string(full.test.size()));

    const std::vector<std::tuple<int, size_t, size_t>> shot_shapes{
        {10, 8, 2}, {25, 20, 5}, {50, 40, 10}};
    for (const auto& [shots, tr, va] : shot_shapes) {
        const auto fs_split = split_fewshot(ds, SplitSpec{SplitMode::fewshot, 11, shots});
        c.expect(fs_split.train.size() == tr && fs_split.val.size() == va,
                 std::to_string(shots) + "-shot split " + std::to_string(fs_split.train.size()) +
                     "/" + std::to_string(fs_split.val.size()));
        c.expect(fs_split.test.size() == 100 - static_cast<size_t>(shots),
                 std::to_string(shots) + "-shot test size");
    }

    testutil::TempDir tmp;
    const auto report = cmd_train(toy_run(tmp / "out"));
    c.expect(report["seeds"].size() == 3,
             "cmd_train aggregated " + std::to_string(report["seeds"].size()) + " seeds");
    c.expect(report["per_seed"].size() == 3, "per-seed blocks");
}

// --- criterion 8 -----------------------------------------------------------

void determinism(Criterion& c) {
    testutil::TempDir tmp;
    const std::string out = tmp / "run";
    auto run_all = [&]() {
        auto cfg = toy_run(out);
        cmd_extract(cfg);
        cmd_select(cfg);
        cmd_train(cfg);
        cfg.shots = {10, 25};
        cmd_fewshot(cfg);
    };

    const std::vector<std::string> files{
        "features_writeprint.csv", "features_sentiment.csv", "features_emotional.csv",
        "features_behavioural.csv", "features_hate.csv",      "features_narratives.csv",
        "selection.json",          "selection.md",            "eval.json",
        "checkpoint_seed3.json",   "checkpoint_seed4.json",   "checkpoint_seed5.json",
        "fewshot.json",            "fewshot.md"};

    run_all();
    std::vector<std::string> snapshot;
    for (const auto& name : files) {
        snapshot.push_back(testutil::slurp((fs::path(out) / name).string()));
        c.expect(!snapshot.back().empty(), name + " missing after first run");
    }
    run_all();
    for (size_t i = 0; i < files.size(); ++i) {
        const auto again = testutil::slurp((fs::path(out) / files[i]).string());
        c.expect(again == snapshot[i], files[i] + " differs between identical runs");
    }
}

// --- criterion 9 -----------------------------------------------------------

void characterization_consistency(Criterion& c) {
    testutil::TempDir tmp;
    const auto cfg = toy_run(tmp / "out");
    const auto report = cmd_characterize(cfg);
    c.expect(report.overall == report.positivity + report.negativity,
             "overall != positivity + negativity");

    const LabeledDataset ds = load_jsonl(cfg.data_path);
    const auto matrices = extract_all(ds, default_extractors(cfg.lexicon_dir));
    for (const auto& m : matrices) {
        const auto all = top_class_frequencies(m, m.n_cols());
        if (all.empty()) continue;
        double total = 0.0;
        for (const auto& [name, f] : all) total += f;
        c.expect(std::fabs(total - 100.0) <= 1e-9,
                 m.model_id + " frequencies sum to " + fmt(total));
    }
}

} // namespace

int main() {
    struct Entry {
        int number;
        const char* name;
        std::function<void(Criterion&)> fn;
    };
    const std::vector<Entry> entries = {
        {1, "statistics oracle (F survival vs quadrature)", survival_function_oracle},
        {2, "end-to-end p-value identity with the t test", p_value_identity},
        {3, "false-positive calibration at alpha = 0.05", false_positive_calibration},
        {4, "finite-difference gradient check", gradient_check},
        {5, "fusion value property (fused vs embedding-only)", fusion_value_property},
        {6, "readability golden set", readability_golden},
        {7, "protocol shape (75/10/15, shot splits, 3 seeds)", protocol_shape},
        {8, "end-to-end determinism", determinism},
        {9, "characterization consistency", characterization_consistency},
    };

    int failures = 0;
    for (const auto& entry : entries) {
        Criterion c;
        const auto start = std::chrono::steady_clock::now();
        try {
            entry.fn(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(start);
        if (c.ok) {
            std::printf("PASS  criterion %d: %s (%.2fs)\n", entry.number, entry.name, elapsed);
        } else {
            ++failures;
            std::printf("FAIL  criterion %d: %s (%.2fs) -- %s\n", entry.number, entry.name, elapsed,
                        c.detail.str().c_str());
        }
    }
    if (failures == 0) std::printf("all %zu acceptance criteria passed\n", entries.size());
    return failures;
}
