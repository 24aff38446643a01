#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "symfuse/util.hpp"

namespace symfuse {

/// Named, weighted scores one extractor assigns to one document.
/// Entry order is fixed per model so matrices line up column-wise.
struct FeatureVector {
    std::string model_id;
    std::vector<std::pair<std::string, double>> entries;

    double get(const std::string& name) const {
        for (const auto& [k, v] : entries)
            if (k == name) return v;
        throw std::out_of_range("FeatureVector: no feature '" + name + "' in model " + model_id);
    }
};

/// Row-major matrix of one model's features over a dataset. Rows follow the
/// dataset's document order; columns are the model's fixed feature set.
struct FeatureMatrix {
    std::string model_id;
    std::vector<std::string> feature_names;
    std::vector<std::string> doc_ids;
    std::vector<std::vector<double>> rows;

    size_t n_rows() const { return rows.size(); }
    size_t n_cols() const { return feature_names.size(); }

    size_t col_index(const std::string& name) const {
        for (size_t j = 0; j < feature_names.size(); ++j)
            if (feature_names[j] == name) return j;
        throw std::out_of_range("FeatureMatrix: no column '" + name + "' in model " + model_id);
    }

    std::vector<double> column(size_t j) const {
        std::vector<double> out(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
        return out;
    }

    /// Map doc id -> row index. Built on demand.
    std::unordered_map<std::string, size_t> row_index() const {
        std::unordered_map<std::string, size_t> idx;
        idx.reserve(doc_ids.size());
        for (size_t i = 0; i < doc_ids.size(); ++i) idx.emplace(doc_ids[i], i);
        return idx;
    }

    /// New matrix restricted to the given doc ids, in the given order.
    FeatureMatrix select_rows(const std::vector<std::string>& ids) const {
        auto idx = row_index();
        FeatureMatrix out;
        out.model_id = model_id;
        out.feature_names = feature_names;
        out.doc_ids = ids;
        out.rows.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = idx.find(id);
            if (it == idx.end())
                throw std::runtime_error("FeatureMatrix: document '" + id + "' missing from model " + model_id);
            out.rows.push_back(rows[it->second]);
        }
        return out;
    }
};

namespace detail {

inline std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\n") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace detail

/// Writes `doc_id,model_id,<feature names...>` rows. `provenance`, when
/// nonempty, is emitted as a leading `#` comment line.
inline void write_feature_csv(const FeatureMatrix& m, std::ostream& os,
                              const std::string& provenance = "") {
    if (!provenance.empty()) os << "# run_config: " << provenance << "\n";
    os << "doc_id,model_id";
    for (const auto& name : m.feature_names) os << ',' << detail::csv_escape(name);
    os << '\n';
    for (size_t i = 0; i < m.rows.size(); ++i) {
        os << detail::csv_escape(m.doc_ids[i]) << ',' << detail::csv_escape(m.model_id);
        for (double v : m.rows[i]) os << ',' << fmt_double(v);
        os << '\n';
    }
}

} // namespace symfuse
