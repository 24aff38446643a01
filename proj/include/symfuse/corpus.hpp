#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "symfuse/rng.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

enum class Label { positive, negative };

inline std::string to_string(Label l) { return l == Label::positive ? "positive" : "negative"; }

struct Document {
    std::string id;
    std::string text;
    Label label = Label::negative;
};

/// Ordered document collection; ingestion order is the determinism anchor for
/// everything downstream (matrix rows, splits, shuffles).
struct LabeledDataset {
    std::string name;
    std::string task;
    std::vector<Document> documents;

    size_t size() const { return documents.size(); }

    size_t count(Label l) const {
        size_t c = 0;
        for (const auto& d : documents)
            if (d.label == l) ++c;
        return c;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(documents.size());
        for (const auto& d : documents) out.push_back(d.id);
        return out;
    }

    /// Labels encoded positive=1, negative=0.
    std::vector<double> label_vector() const {
        std::vector<double> out;
        out.reserve(documents.size());
        for (const auto& d : documents) out.push_back(d.label == Label::positive ? 1.0 : 0.0);
        return out;
    }
};

enum class SplitMode { full, fewshot };

struct SplitSpec {
    SplitMode mode = SplitMode::full;
    uint64_t seed = 0;
    std::optional<int> shots;
    double dev_frac = 0.10;
    double test_frac = 0.15;

    void validate() const {
        if (dev_frac <= 0.0 || dev_frac >= 1.0 || test_frac <= 0.0 || test_frac >= 1.0)
            throw ConfigError("SplitSpec: fractions must be in (0,1)");
        if (dev_frac + test_frac >= 1.0)
            throw ConfigError("SplitSpec: dev_frac + test_frac must be < 1");
        if ((mode == SplitMode::fewshot) != shots.has_value())
            throw ConfigError("SplitSpec: shots required iff mode is fewshot");
        if (shots && *shots < 2) throw ConfigError("SplitSpec: shots must be >= 2");
    }
};

// ---------------------------------------------------------------------------
// JSONL ingestion
// ---------------------------------------------------------------------------

/// Loads `{"id","text","label"}` lines. An optional first line
/// `{"label_map": {raw: "positive"|"negative"}}` normalizes foreign label
/// vocabularies; without it only literal positive/negative are accepted.
inline LabeledDataset load_jsonl(const std::string& path,
                                 const std::unordered_map<std::string, std::string>& config_label_map = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_jsonl: cannot open " + path);

    LabeledDataset ds;
    ds.name = path;
    std::unordered_map<std::string, std::string> label_map = config_label_map;
    std::unordered_set<std::string> seen_ids;

    std::string line;
    size_t line_no = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("load_jsonl: malformed JSON at " + path + ":" + std::to_string(line_no) +
                              ": " + e.what());
        }
        if (first_content_line && obj.contains("label_map")) {
            for (auto& [raw, norm] : obj["label_map"].items()) {
                if (norm != "positive" && norm != "negative")
                    throw ConfigError("load_jsonl: label_map values must be positive/negative at " +
                                      path + ":" + std::to_string(line_no));
                label_map[raw] = norm.get<std::string>();
            }
            first_content_line = false;
            continue;
        }
        first_content_line = false;
        if (!obj.contains("id") || !obj.contains("text") || !obj.contains("label"))
            throw ConfigError("load_jsonl: missing id/text/label at " + path + ":" + std::to_string(line_no));

        Document d;
        std::string raw_label;
        try {
            d.id = obj["id"].get<std::string>();
            d.text = obj["text"].get<std::string>();
            raw_label = obj["label"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("load_jsonl: bad field types at " + path + ":" +
                              std::to_string(line_no) + ": " + e.what());
        }

        if (d.id.empty())
            throw ConfigError("load_jsonl: empty id at " + path + ":" + std::to_string(line_no));
        if (!seen_ids.insert(d.id).second)
            throw ConfigError("load_jsonl: duplicate id '" + d.id + "' at " + path + ":" +
                              std::to_string(line_no));
        if (trim(d.text).empty())
            throw ConfigError("load_jsonl: empty text for id '" + d.id + "' at " + path + ":" +
                              std::to_string(line_no));

        auto it = label_map.find(raw_label);
        std::string norm = it != label_map.end() ? it->second : raw_label;
        if (norm == "positive") d.label = Label::positive;
        else if (norm == "negative") d.label = Label::negative;
        else
            throw ConfigError("load_jsonl: unknown label '" + raw_label + "' for id '" + d.id +
                              "' (no label_map entry) at " + path + ":" + std::to_string(line_no));
        ds.documents.push_back(std::move(d));
    }
    return ds;
}

inline void save_jsonl(const LabeledDataset& ds, std::ostream& os) {
    for (const auto& d : ds.documents) {
        nlohmann::ordered_json j{{"id", d.id}, {"text", d.text}, {"label", to_string(d.label)}};
        os << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Splitting protocols
// ---------------------------------------------------------------------------

namespace detail {

/// Largest-remainder allocation of `total` slots across groups with the given
/// quotas. Ties go to the earlier group. With two groups the per-group error
/// is at most 0.5 slots, which keeps splits stratified to within one document.
inline std::vector<size_t> allocate_counts(const std::vector<double>& quotas, size_t total) {
    const size_t g = quotas.size();
    std::vector<size_t> out(g);
    std::vector<double> frac(g);
    size_t assigned = 0;
    for (size_t i = 0; i < g; ++i) {
        out[i] = static_cast<size_t>(std::floor(quotas[i]));
        frac[i] = quotas[i] - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::vector<size_t> order(g);
    for (size_t i = 0; i < g; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return frac[a] > frac[b]; });
    for (size_t k = 0; assigned < total; ++assigned, ++k) out[order[k % g]] += 1;
    return out;
}

/// Per-label document indices in ingestion order, labels in fixed
/// (positive, negative) order.
inline std::vector<std::vector<size_t>> group_by_label(const LabeledDataset& ds) {
    std::vector<std::vector<size_t>> groups(2);
    for (size_t i = 0; i < ds.documents.size(); ++i)
        groups[ds.documents[i].label == Label::positive ? 0 : 1].push_back(i);
    return groups;
}

inline LabeledDataset subset_in_ingestion_order(const LabeledDataset& ds,
                                                std::vector<size_t> indices,
                                                const std::string& suffix) {
    std::sort(indices.begin(), indices.end());
    LabeledDataset out;
    out.name = ds.name.empty() ? suffix : ds.name + "/" + suffix;
    out.task = ds.task;
    out.documents.reserve(indices.size());
    for (size_t i : indices) out.documents.push_back(ds.documents[i]);
    return out;
}

} // namespace detail

struct FullSplit {
    LabeledDataset train, dev, test;
};

/// Stratified train/dev/test partition. dev and test sizes round to the
/// nearest integer of their fractions; train absorbs the remainder. Membership
/// is driven solely by the seed; each part keeps ingestion order.
inline FullSplit split_full(const LabeledDataset& ds, const SplitSpec& spec) {
    spec.validate();
    if (spec.mode != SplitMode::full) throw ConfigError("split_full: spec.mode must be full");
    const size_t n = ds.size();
    if (n < 20) throw ConfigError("split_full: dataset too small (need >= 20 documents)");

    const auto dev_total = static_cast<size_t>(std::llround(spec.dev_frac * static_cast<double>(n)));
    const auto test_total = static_cast<size_t>(std::llround(spec.test_frac * static_cast<double>(n)));

    auto groups = detail::group_by_label(ds);
    if (groups[0].empty() || groups[1].empty())
        throw ConfigError("split_full: dataset must contain both labels");

    std::vector<double> dev_q(2), test_q(2);
    for (size_t g = 0; g < 2; ++g) {
        const double share = static_cast<double>(groups[g].size()) / static_cast<double>(n);
        dev_q[g] = static_cast<double>(dev_total) * share;
        test_q[g] = static_cast<double>(test_total) * share;
    }
    const auto dev_n = detail::allocate_counts(dev_q, dev_total);
    const auto test_n = detail::allocate_counts(test_q, test_total);

    Rng rng(spec.seed);
    std::vector<size_t> train_idx, dev_idx, test_idx;
    for (size_t g = 0; g < 2; ++g) {
        auto idx = groups[g];
        rng.shuffle(idx);
        if (test_n[g] + dev_n[g] >= idx.size() || test_n[g] == 0 || dev_n[g] == 0)
            throw ConfigError("split_full: dataset too small to place both labels in every part");
        size_t k = 0;
        for (size_t i = 0; i < test_n[g]; ++i) test_idx.push_back(idx[k++]);
        for (size_t i = 0; i < dev_n[g]; ++i) dev_idx.push_back(idx[k++]);
        for (; k < idx.size(); ++k) train_idx.push_back(idx[k]);
    }
    return {detail::subset_in_ingestion_order(ds, std::move(train_idx), "train"),
            detail::subset_in_ingestion_order(ds, std::move(dev_idx), "dev"),
            detail::subset_in_ingestion_order(ds, std::move(test_idx), "test")};
}

struct FewshotSplit {
    LabeledDataset train, val, test;
};

/// Samples exactly `shots` documents (stratified, seeded), splits them
/// 80/20 into train/val with val taking the ceiling, and routes every
/// remaining document to test.
inline FewshotSplit split_fewshot(const LabeledDataset& ds, const SplitSpec& spec) {
    spec.validate();
    if (spec.mode != SplitMode::fewshot) throw ConfigError("split_fewshot: spec.mode must be fewshot");
    const size_t shots = static_cast<size_t>(*spec.shots);
    const size_t n = ds.size();
    if (shots > n - 2) throw ConfigError("split_fewshot: shots exceed dataset size - 2");

    auto groups = detail::group_by_label(ds);
    if (groups[0].empty() || groups[1].empty())
        throw ConfigError("split_fewshot: dataset must contain both labels");

    std::vector<double> shot_q(2);
    for (size_t g = 0; g < 2; ++g)
        shot_q[g] = static_cast<double>(shots) * static_cast<double>(groups[g].size()) /
                    static_cast<double>(n);
    auto shot_n = detail::allocate_counts(shot_q, shots);
    // never draw a single-class shot set: steal one slot from the larger side
    for (size_t g = 0; g < 2; ++g) {
        if (shot_n[g] == 0 && shots >= 2) {
            const size_t other = 1 - g;
            shot_n[g] = 1;
            shot_n[other] -= 1;
        }
    }
    for (size_t g = 0; g < 2; ++g)
        if (shot_n[g] > groups[g].size())
            throw ConfigError("split_fewshot: shots exceed available documents for label " +
                              to_string(g == 0 ? Label::positive : Label::negative));

    const size_t val_total = static_cast<size_t>(std::ceil(0.2 * static_cast<double>(shots)));
    std::vector<double> val_q(2);
    for (size_t g = 0; g < 2; ++g)
        val_q[g] = static_cast<double>(val_total) * static_cast<double>(shot_n[g]) /
                   static_cast<double>(shots);
    const auto val_n = detail::allocate_counts(val_q, val_total);

    Rng rng(spec.seed);
    std::vector<size_t> train_idx, val_idx, test_idx;
    for (size_t g = 0; g < 2; ++g) {
        auto idx = groups[g];
        rng.shuffle(idx);
        const size_t train_g = shot_n[g] - val_n[g];
        size_t k = 0;
        for (size_t i = 0; i < train_g; ++i) train_idx.push_back(idx[k++]);
        for (size_t i = 0; i < val_n[g]; ++i) val_idx.push_back(idx[k++]);
        for (; k < idx.size(); ++k) test_idx.push_back(idx[k]);
    }
    return {detail::subset_in_ingestion_order(ds, std::move(train_idx), "train"),
            detail::subset_in_ingestion_order(ds, std::move(val_idx), "val"),
            detail::subset_in_ingestion_order(ds, std::move(test_idx), "test")};
}

} // namespace symfuse
