#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "symfuse/util.hpp"

namespace symfuse {

/// Weighted pattern lexicon backing one categorical extractor. Patterns are
/// lowercase token n-grams; categories keep their first-appearance order from
/// the source file, which fixes the extractor's feature-vector layout.
class Lexicon {
public:
    struct Hit {
        size_t category_index;
        double weight;
    };

    Lexicon() = default;
    explicit Lexicon(std::string model_id) : model_id_(std::move(model_id)) {}

    const std::string& model_id() const { return model_id_; }
    const std::vector<std::string>& categories() const { return categories_; }
    size_t max_pattern_tokens() const { return max_pattern_tokens_; }
    size_t size() const { return n_entries_; }
    bool empty() const { return n_entries_ == 0; }

    bool has_category(const std::string& name) const {
        for (const auto& c : categories_)
            if (c == name) return true;
        return false;
    }

    /// Adds one (pattern, category, weight) entry. The pattern is normalized
    /// to lowercase space-joined tokens.
    void add(const std::string& pattern, const std::string& category, double weight) {
        if (weight <= 0.0)
            throw ConfigError("Lexicon " + model_id_ + ": weight must be > 0 for pattern '" + pattern + "'");
        const std::string key = normalize_pattern(pattern);
        if (key.empty()) throw ConfigError("Lexicon " + model_id_ + ": empty pattern");
        const size_t cat = intern_category(category);
        for (const auto& hit : patterns_[key])
            if (hit.category_index == cat)
                throw ConfigError("Lexicon " + model_id_ + ": duplicate (pattern, category) entry '" +
                                  key + "' / '" + category + "'");
        patterns_[key].push_back({cat, weight});
        size_t n_tokens = 1;
        for (char c : key)
            if (c == ' ') ++n_tokens;
        if (n_tokens > max_pattern_tokens_) max_pattern_tokens_ = n_tokens;
        ++n_entries_;
    }

    const std::vector<Hit>* find(const std::string& normalized_pattern) const {
        auto it = patterns_.find(normalized_pattern);
        return it == patterns_.end() ? nullptr : &it->second;
    }

    static std::string normalize_pattern(const std::string& raw) {
        std::string out;
        bool in_space = true;
        for (char ch : to_lower(trim(raw))) {
            if (ch == ' ' || ch == '\t') {
                if (!in_space) out.push_back(' ');
                in_space = true;
            } else {
                out.push_back(ch);
                in_space = false;
            }
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

private:
    size_t intern_category(const std::string& name) {
        for (size_t i = 0; i < categories_.size(); ++i)
            if (categories_[i] == name) return i;
        categories_.push_back(name);
        return categories_.size() - 1;
    }

    std::string model_id_;
    std::vector<std::string> categories_;
    std::unordered_map<std::string, std::vector<Hit>> patterns_;
    size_t max_pattern_tokens_ = 0;
    size_t n_entries_ = 0;
};

/// Loads a TSV lexicon: columns pattern, category, weight; `#` starts a
/// comment line.
inline Lexicon load_lexicon(const std::string& path, const std::string& model_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_lexicon: cannot open " + path);
    Lexicon lex(model_id);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::string s(t);
        const size_t tab1 = s.find('\t');
        const size_t tab2 = tab1 == std::string::npos ? std::string::npos : s.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos)
            throw ConfigError("load_lexicon: expected 3 tab-separated columns at " + path + ":" +
                              std::to_string(line_no));
        const std::string pattern = s.substr(0, tab1);
        const std::string category(trim(s.substr(tab1 + 1, tab2 - tab1 - 1)));
        const std::string weight_str(trim(s.substr(tab2 + 1)));
        double weight = 0.0;
        try {
            weight = std::stod(weight_str);
        } catch (const std::exception&) {
            throw ConfigError("load_lexicon: bad weight '" + weight_str + "' at " + path + ":" +
                              std::to_string(line_no));
        }
        try {
            lex.add(pattern, category, weight);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " at " + path + ":" + std::to_string(line_no));
        }
    }
    return lex;
}

} // namespace symfuse
