#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "symfuse/corpus.hpp"
#include "symfuse/features.hpp"
#include "symfuse/lexicon.hpp"
#include "symfuse/tokenize.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

namespace detail {

inline const std::vector<std::string>& auxiliary_verbs() {
    static const std::vector<std::string> words = {
        "am",   "is",    "are",  "was",   "were",  "be",   "been",   "being", "do",
        "does", "did",   "done", "have",  "has",   "had",  "having", "can",  "could",
        "shall", "should", "will", "would", "may",  "might", "must",  "ought"};
    return words;
}

inline bool is_auxiliary(const std::string& lower_word) {
    for (const auto& w : auxiliary_verbs())
        if (w == lower_word) return true;
    return false;
}

/// Suffix heuristic standing in for a POS tagger; recall is deliberately
/// rough, determinism is the contract.
inline bool looks_adjective(const std::string& lower_word) {
    static const std::vector<std::string> suffixes = {"ous",  "ful", "ive", "less", "able",
                                                      "ible", "ish", "ary", "ent",  "ant",
                                                      "al",   "ic"};
    if (lower_word.size() < 4) return false;
    for (const auto& suf : suffixes) {
        if (lower_word.size() > suf.size() &&
            lower_word.compare(lower_word.size() - suf.size(), suf.size(), suf) == 0)
            return true;
    }
    return false;
}

/// Shared matcher: case-insensitive, longest n-gram first, non-overlapping.
/// Returns summed weights per lexicon category (category order preserved).
inline std::vector<double> match_categories(const TokenizedText& toks, const Lexicon& lex) {
    std::vector<double> sums(lex.categories().size(), 0.0);
    if (lex.empty() || toks.tokens.empty()) return sums;
    std::vector<std::string> lower;
    lower.reserve(toks.tokens.size());
    for (const auto& t : toks.tokens) lower.push_back(to_lower(t));

    const size_t max_n = std::max<size_t>(1, lex.max_pattern_tokens());
    size_t i = 0;
    while (i < lower.size()) {
        size_t advance = 1;
        const size_t longest = std::min(max_n, lower.size() - i);
        for (size_t n = longest; n >= 1; --n) {
            std::string key = lower[i];
            for (size_t k = 1; k < n; ++k) {
                key += ' ';
                key += lower[i + k];
            }
            if (const auto* hits = lex.find(key)) {
                for (const auto& h : *hits) sums[h.category_index] += h.weight;
                advance = n;
                break;
            }
        }
        i += advance;
    }
    return sums;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Extractors
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& writeprint_feature_names() {
    static const std::vector<std::string> names = {
        "tokens",
        "sentences",
        "charactersPerSentence",
        "adjectivesPerSentence",
        "auxiliariesPerSentence",
        "commasPerSentence",
        "colonsPerSentence",
        "doubleQuotationMarksPerSentence",
        "exclamationMarksPerSentence",
        "emoticonsPerSentence",
        "capitalFirstLetterSentences",
        "Coleman-Liau",
        "Automated Readability",
        "Gulpease"};
    return names;
}

/// Text statistics, stylometric rates, and the three readability indexes:
///   Coleman-Liau          0.0588 L - 0.296 S - 15.8   (L, S per 100 words)
///   Automated Readability 4.71 chars/words + 0.5 words/sentences - 21.43
///   Gulpease              89 + (300 sentences - 10 letters) / words, in [0,100]
inline FeatureVector writeprint(const std::string& text) {
    if (trim(text).empty()) throw std::invalid_argument("writeprint: empty text");
    const TokenizedText t = tokenize(text);

    const double words = static_cast<double>(t.words);
    const double sentences = static_cast<double>(t.sentence_count);
    const double letters = static_cast<double>(t.letters);
    const double characters = static_cast<double>(t.characters);

    long adjectives = 0, auxiliaries = 0;
    for (const auto& tok : t.tokens) {
        const std::string lower = to_lower(tok);
        if (detail::is_auxiliary(lower)) ++auxiliaries;
        else if (detail::looks_adjective(lower)) ++adjectives;
    }

    auto per_sentence = [&](double count) { return sentences > 0.0 ? count / sentences : 0.0; };

    double coleman_liau = 0.0, ari = 0.0, gulpease = 0.0;
    if (words > 0.0 && sentences > 0.0) {
        const double L = letters / words * 100.0;
        const double S = sentences / words * 100.0;
        coleman_liau = 0.0588 * L - 0.296 * S - 15.8;
        ari = 4.71 * (characters / words) + 0.5 * (words / sentences) - 21.43;
        gulpease = std::clamp(89.0 + (300.0 * sentences - 10.0 * letters) / words, 0.0, 100.0);
    }

    FeatureVector fv;
    fv.model_id = "writeprint";
    fv.entries = {
        {"tokens", words},
        {"sentences", sentences},
        {"charactersPerSentence", per_sentence(characters)},
        {"adjectivesPerSentence", per_sentence(static_cast<double>(adjectives))},
        {"auxiliariesPerSentence", per_sentence(static_cast<double>(auxiliaries))},
        {"commasPerSentence", per_sentence(static_cast<double>(t.commas))},
        {"colonsPerSentence", per_sentence(static_cast<double>(t.colons))},
        {"doubleQuotationMarksPerSentence", per_sentence(static_cast<double>(t.double_quotes))},
        {"exclamationMarksPerSentence", per_sentence(static_cast<double>(t.exclamations))},
        {"emoticonsPerSentence", per_sentence(static_cast<double>(t.emoticons.size()))},
        {"capitalFirstLetterSentences", static_cast<double>(t.capital_first_sentences)},
        {"Coleman-Liau", coleman_liau},
        {"Automated Readability", ari},
        {"Gulpease", gulpease}};
    return fv;
}

/// Valence scores per 100 tokens: positivity >= 0, negativity <= 0,
/// overall = positivity + negativity.
inline FeatureVector sentiment(const std::string& text, const Lexicon& lex) {
    if (!lex.has_category("positive") || !lex.has_category("negative"))
        throw ConfigError("sentiment: lexicon must define categories 'positive' and 'negative'");
    const TokenizedText t = tokenize(text);
    const auto sums = detail::match_categories(t, lex);
    double pos_sum = 0.0, neg_sum = 0.0;
    for (size_t c = 0; c < lex.categories().size(); ++c) {
        if (lex.categories()[c] == "positive") pos_sum = sums[c];
        if (lex.categories()[c] == "negative") neg_sum = sums[c];
    }
    const double scale = t.words > 0 ? 100.0 / static_cast<double>(t.words) : 0.0;
    const double positivity = pos_sum * scale;
    const double negativity = -neg_sum * scale;
    FeatureVector fv;
    fv.model_id = lex.model_id().empty() ? "sentiment" : lex.model_id();
    fv.entries = {{"positivity", positivity},
                  {"negativity", negativity},
                  {"overall", positivity + negativity}};
    return fv;
}

/// Generic category scorer: per-category matched weight per 100 tokens.
inline FeatureVector lexicon_categories(const std::string& text, const Lexicon& lex) {
    if (lex.empty()) throw ConfigError("lexicon_categories: empty lexicon for model " + lex.model_id());
    const TokenizedText t = tokenize(text);
    const auto sums = detail::match_categories(t, lex);
    const double scale = t.words > 0 ? 100.0 / static_cast<double>(t.words) : 0.0;
    FeatureVector fv;
    fv.model_id = lex.model_id();
    fv.entries.reserve(sums.size());
    for (size_t c = 0; c < sums.size(); ++c)
        fv.entries.emplace_back(lex.categories()[c], sums[c] * scale);
    return fv;
}

// ---------------------------------------------------------------------------
// Extractor configuration and batch extraction
// ---------------------------------------------------------------------------

struct Extractor {
    enum class Kind { writeprint, sentiment, categories };

    std::string model_id;
    Kind kind = Kind::writeprint;
    Lexicon lexicon;

    FeatureVector extract(const std::string& text) const {
        switch (kind) {
            case Kind::writeprint: return writeprint(text);
            case Kind::sentiment: return sentiment(text, lexicon);
            case Kind::categories: return lexicon_categories(text, lexicon);
        }
        throw std::logic_error("Extractor: unknown kind");
    }

    std::vector<std::string> feature_names() const {
        switch (kind) {
            case Kind::writeprint: return writeprint_feature_names();
            case Kind::sentiment: return {"positivity", "negativity", "overall"};
            case Kind::categories: return lexicon.categories();
        }
        throw std::logic_error("Extractor: unknown kind");
    }
};

/// Runs every extractor over the dataset. Row order follows document order;
/// a failing document aborts with its id.
inline std::vector<FeatureMatrix> extract_all(const LabeledDataset& ds,
                                              const std::vector<Extractor>& extractors) {
    if (extractors.empty()) throw ConfigError("extract_all: no extractors configured");
    std::vector<FeatureMatrix> out;
    out.reserve(extractors.size());
    for (const auto& ex : extractors) {
        FeatureMatrix m;
        m.model_id = ex.model_id;
        m.feature_names = ex.feature_names();
        m.doc_ids.reserve(ds.size());
        m.rows.reserve(ds.size());
        for (const auto& doc : ds.documents) {
            FeatureVector fv;
            try {
                fv = ex.extract(doc.text);
            } catch (const std::exception& e) {
                throw std::runtime_error("extract_all: extractor '" + ex.model_id +
                                         "' failed on document '" + doc.id + "': " + e.what());
            }
            if (fv.entries.size() != m.feature_names.size())
                throw std::runtime_error("extract_all: feature count drift on document '" + doc.id + "'");
            std::vector<double> row;
            row.reserve(fv.entries.size());
            for (const auto& [name, score] : fv.entries) {
                if (!std::isfinite(score))
                    throw std::runtime_error("extract_all: non-finite score for '" + name +
                                             "' on document '" + doc.id + "'");
                row.push_back(score);
            }
            m.doc_ids.push_back(doc.id);
            m.rows.push_back(std::move(row));
        }
        out.push_back(std::move(m));
    }
    return out;
}

/// Canonical model ids in pipeline order; lexicon-backed models load
/// `<model>.tsv` from the given directory.
inline std::vector<Extractor> default_extractors(const std::string& lexicon_dir) {
    std::vector<Extractor> out;
    out.push_back({"writeprint", Extractor::Kind::writeprint, {}});
    out.push_back({"sentiment", Extractor::Kind::sentiment,
                   load_lexicon(lexicon_dir + "/sentiment.tsv", "sentiment")});
    for (const std::string model : {"emotional", "behavioural", "hate", "narratives"})
        out.push_back({model, Extractor::Kind::categories,
                       load_lexicon(lexicon_dir + "/" + model + ".tsv", model)});
    return out;
}

} // namespace symfuse
