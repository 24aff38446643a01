#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symfuse/corpus.hpp"
#include "symfuse/features.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

/// Column mean of a feature matrix, feature names preserved.
inline FeatureVector mean_vector(const FeatureMatrix& m) {
    if (m.rows.empty()) throw std::invalid_argument("mean_vector: empty matrix");
    FeatureVector fv;
    fv.model_id = m.model_id;
    fv.entries.reserve(m.n_cols());
    for (size_t j = 0; j < m.n_cols(); ++j) {
        double sum = 0.0;
        for (const auto& row : m.rows) sum += row[j];
        fv.entries.emplace_back(m.feature_names[j], sum / static_cast<double>(m.n_rows()));
    }
    return fv;
}

/// A class is detected in a document when its score is strictly positive.
/// frequency(c) = 100 * detections(c) / total detections over all classes,
/// so frequencies across the full class set sum to 100 whenever any exist.
inline std::vector<std::pair<std::string, double>> top_class_frequencies(const FeatureMatrix& m,
                                                                         size_t k) {
    if (k < 1) throw std::invalid_argument("top_class_frequencies: k must be >= 1");
    std::vector<long> detections(m.n_cols(), 0);
    long total = 0;
    for (const auto& row : m.rows) {
        for (size_t j = 0; j < m.n_cols(); ++j) {
            if (row[j] > 0.0) {
                ++detections[j];
                ++total;
            }
        }
    }
    if (total == 0) return {};
    std::vector<std::pair<std::string, double>> freqs;
    freqs.reserve(m.n_cols());
    for (size_t j = 0; j < m.n_cols(); ++j)
        if (detections[j] > 0)
            freqs.emplace_back(m.feature_names[j],
                               100.0 * static_cast<double>(detections[j]) / static_cast<double>(total));
    std::sort(freqs.begin(), freqs.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (freqs.size() > k) freqs.resize(k);
    return freqs;
}

struct ModelSummary {
    FeatureVector mean;
    std::vector<std::pair<std::string, double>> top_classes;
};

struct CharacterizationReport {
    std::string dataset;
    size_t n_documents = 0;
    std::vector<std::pair<std::string, ModelSummary>> per_model;

    // sentiment means; overall is positivity + negativity by construction
    double positivity = 0.0;
    double negativity = 0.0;
    double overall = 0.0;

    // readability means
    double coleman_liau = 0.0;
    double gulpease = 0.0;
    double automated_readability = 0.0;
};

/// Dataset-level descriptive report: per-model mean vectors and top-3 detected
/// classes, plus sentiment/readability summaries.
inline CharacterizationReport summarize(const LabeledDataset& ds,
                                        const std::vector<FeatureMatrix>& matrices,
                                        size_t top_k = 3) {
    CharacterizationReport rep;
    rep.dataset = ds.name;
    rep.n_documents = ds.size();
    const FeatureMatrix* sentiment_m = nullptr;
    const FeatureMatrix* writeprint_m = nullptr;
    for (const auto& m : matrices) {
        if (m.n_rows() != ds.size() )
            throw std::invalid_argument("summarize: matrix for model '" + m.model_id +
                                        "' is misaligned with the dataset");
        for (size_t i = 0; i < m.doc_ids.size(); ++i)
            if (m.doc_ids[i] != ds.documents[i].id)
                throw std::invalid_argument("summarize: row order for model '" + m.model_id +
                                            "' does not match the dataset");
        ModelSummary s;
        s.mean = mean_vector(m);
        s.top_classes = top_class_frequencies(m, top_k);
        rep.per_model.emplace_back(m.model_id, std::move(s));
        if (m.model_id == "sentiment") sentiment_m = &m;
        if (m.model_id == "writeprint") writeprint_m = &m;
    }
    if (sentiment_m) {
        const auto mean = mean_vector(*sentiment_m);
        rep.positivity = mean.get("positivity");
        rep.negativity = mean.get("negativity");
        rep.overall = rep.positivity + rep.negativity;
    }
    if (writeprint_m) {
        const auto mean = mean_vector(*writeprint_m);
        rep.coleman_liau = mean.get("Coleman-Liau");
        rep.gulpease = mean.get("Gulpease");
        rep.automated_readability = mean.get("Automated Readability");
    }
    return rep;
}

inline nlohmann::ordered_json characterization_to_json(const CharacterizationReport& rep) {
    nlohmann::ordered_json j;
    j["dataset"] = rep.dataset;
    j["n_documents"] = rep.n_documents;
    auto& models = j["per_model"] = nlohmann::ordered_json::object();
    for (const auto& [model, s] : rep.per_model) {
        nlohmann::ordered_json mj;
        auto& mean = mj["mean_vector"] = nlohmann::ordered_json::object();
        for (const auto& [name, v] : s.mean.entries) mean[name] = v;
        mj["top_classes"] = nlohmann::ordered_json::array();
        for (const auto& [name, freq] : s.top_classes)
            mj["top_classes"].push_back({{"class", name}, {"frequency_percent", freq}});
        models[model] = std::move(mj);
    }
    j["summaries"] = {{"sentiment",
                       {{"positivity", rep.positivity},
                        {"negativity", rep.negativity},
                        {"overall", rep.overall}}},
                      {"writeprint",
                       {{"Coleman-Liau", rep.coleman_liau},
                        {"Gulpease", rep.gulpease},
                        {"Automated Readability", rep.automated_readability}}}};
    return j;
}

inline std::string characterization_to_markdown(const CharacterizationReport& rep) {
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f%%", v);
        return std::string(buf);
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "# Characterization: " << rep.dataset << "\n\n";
    os << "Documents: " << rep.n_documents << "\n\n";

    os << "## Top detected classes\n\n| Dataset |";
    std::vector<const std::pair<std::string, ModelSummary>*> category_models;
    for (const auto& entry : rep.per_model) {
        if (entry.first == "sentiment" || entry.first == "writeprint") continue;
        category_models.push_back(&entry);
        os << ' ' << entry.first << " |";
    }
    os << "\n|---|";
    for (size_t i = 0; i < category_models.size(); ++i) os << "---|";
    os << "\n| " << rep.dataset << " |";
    for (const auto* entry : category_models) {
        os << ' ';
        if (entry->second.top_classes.empty()) os << "-";
        for (size_t i = 0; i < entry->second.top_classes.size(); ++i) {
            if (i) os << "<br>";
            os << entry->second.top_classes[i].first << " ("
               << pct(entry->second.top_classes[i].second) << ")";
        }
        os << " |";
    }
    os << "\n\n## Sentiment and writeprint\n\n";
    os << "| Dataset | Positivity | Negativity | Overall | Coleman-Liau | Gulpease | Automated Readability |\n";
    os << "|---|---|---|---|---|---|---|\n";
    os << "| " << rep.dataset << " | " << num(rep.positivity) << " | " << num(rep.negativity)
       << " | " << num(rep.overall) << " | " << num(rep.coleman_liau) << " | "
       << num(rep.gulpease) << " | " << num(rep.automated_readability) << " |\n";
    return os.str();
}

} // namespace symfuse
