#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "symfuse/tokenize.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

/// Precomputed document embeddings keyed by doc id. Entries are either a
/// single vector or a token-level matrix that gets mean-pooled downstream.
struct EmbeddingTable {
    size_t dim = 0;
    // std::map keeps serialization order stable
    std::map<std::string, std::vector<double>> vectors;
    std::map<std::string, std::vector<std::vector<double>>> token_matrices;

    bool has(const std::string& id) const {
        return vectors.count(id) > 0 || token_matrices.count(id) > 0;
    }
    size_t size() const { return vectors.size() + token_matrices.size(); }
};

/// Column mean of a token-level embedding matrix.
inline std::vector<double> mean_pool(const std::vector<std::vector<double>>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("mean_pool: empty matrix");
    const size_t d = tokens[0].size();
    std::vector<double> out(d, 0.0);
    for (const auto& row : tokens) {
        if (row.size() != d) throw std::invalid_argument("mean_pool: ragged rows");
        for (size_t j = 0; j < d; ++j) out[j] += row[j];
    }
    for (double& v : out) v /= static_cast<double>(tokens.size());
    return out;
}

/// Pooled lookup: document-level entries pass through, token-level entries
/// are mean-pooled.
inline std::vector<double> pooled_embedding(const EmbeddingTable& table, const std::string& id) {
    if (auto it = table.vectors.find(id); it != table.vectors.end()) return it->second;
    if (auto it = table.token_matrices.find(id); it != table.token_matrices.end())
        return mean_pool(it->second);
    throw ConfigError("embeddings: no entry for document '" + id + "'");
}

/// Loads JSONL embeddings: `{"id": str, "vector": [...]}` or
/// `{"id": str, "tokens": [[...], ...]}`; dimensions must agree across records.
inline EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_embeddings: cannot open " + path);
    EmbeddingTable table;
    std::string line;
    size_t line_no = 0;
    auto check_values = [&](const std::vector<double>& v, const std::string& id) {
        if (table.dim == 0) table.dim = v.size();
        if (v.size() != table.dim || v.empty())
            throw ConfigError("load_embeddings: dimension mismatch for id '" + id + "' at " + path +
                              ":" + std::to_string(line_no) + " (expected " +
                              std::to_string(table.dim) + ", got " + std::to_string(v.size()) + ")");
        for (double x : v)
            if (!std::isfinite(x))
                throw ConfigError("load_embeddings: non-finite value for id '" + id + "' at " + path +
                                  ":" + std::to_string(line_no));
    };
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("load_embeddings: malformed JSON at " + path + ":" +
                              std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.contains("id"))
            throw ConfigError("load_embeddings: missing id at " + path + ":" + std::to_string(line_no));
        try {
            const std::string id = obj["id"].get<std::string>();
            if (table.has(id))
                throw ConfigError("load_embeddings: duplicate id '" + id + "' at " + path + ":" +
                                  std::to_string(line_no));
            if (obj.contains("vector")) {
                auto v = obj["vector"].get<std::vector<double>>();
                check_values(v, id);
                table.vectors.emplace(id, std::move(v));
            } else if (obj.contains("tokens")) {
                auto rows = obj["tokens"].get<std::vector<std::vector<double>>>();
                if (rows.empty())
                    throw ConfigError("load_embeddings: empty token matrix for id '" + id + "'");
                for (const auto& row : rows) check_values(row, id);
                table.token_matrices.emplace(id, std::move(rows));
            } else {
                throw ConfigError("load_embeddings: record needs 'vector' or 'tokens' at " + path +
                                  ":" + std::to_string(line_no));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("load_embeddings: bad record at " + path + ":" +
                              std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

inline void save_embeddings(const EmbeddingTable& table, std::ostream& os) {
    for (const auto& [id, v] : table.vectors) {
        nlohmann::ordered_json j{{"id", id}, {"vector", v}};
        os << j.dump() << '\n';
    }
    for (const auto& [id, rows] : table.token_matrices) {
        nlohmann::ordered_json j{{"id", id}, {"tokens", rows}};
        os << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Fallback embedder
// ---------------------------------------------------------------------------

namespace detail {

inline uint64_t hash_bytes(const void* data, size_t len, uint64_t seed) {
    // FNV-1a folded with the seed, then splitmix finalizer
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 1469598103934665603ull ^ (seed * 0x9E3779B97F4A7C15ull);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    h ^= h >> 30;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 27;
    h *= 0x94D049BB133111EBull;
    return h ^ (h >> 31);
}

} // namespace detail

/// Self-contained stand-in for an external sentence encoder: term frequencies
/// of character 3-grams and word unigrams over the first 128 word tokens,
/// signed-hashed into `dim` buckets and L2-normalized. No fitted state, so
/// nothing can leak across splits.
inline std::vector<double> fallback_embed(const std::string& text, size_t dim, uint64_t seed) {
    if (dim < 8) throw std::invalid_argument("fallback_embed: dim must be >= 8");
    constexpr size_t max_tokens = 128;

    const TokenizedText toks = tokenize(text);
    std::vector<double> acc(dim, 0.0);
    auto bump = [&](const void* data, size_t len, uint64_t stream) {
        const uint64_t h = detail::hash_bytes(data, len, seed ^ (0xABCDEF1234567890ull * (stream + 1)));
        const size_t bucket = static_cast<size_t>(h % dim);
        const double sign = (h >> 63) ? 1.0 : -1.0;
        acc[bucket] += sign;
    };

    // truncate to the first 128 word tokens, then take grams inside that span
    std::string span;
    size_t used = 0;
    for (const auto& tok : toks.tokens) {
        if (used == max_tokens) break;
        const std::string lower = to_lower(tok);
        bump(lower.data(), lower.size(), 1);
        if (!span.empty()) span.push_back(' ');
        span += lower;
        ++used;
    }
    if (span.size() >= 3)
        for (size_t i = 0; i + 3 <= span.size(); ++i) bump(span.data() + i, 3, 2);
    if (used == 0 && !text.empty()) bump(text.data(), text.size(), 3);

    double norm = 0.0;
    for (double v : acc) norm += v * v;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& v : acc) v /= norm;
    }
    return acc;
}

/// Builds a full document-level table with the fallback embedder.
template <typename DatasetT>
inline EmbeddingTable fallback_embeddings(const DatasetT& ds, size_t dim, uint64_t seed) {
    EmbeddingTable table;
    table.dim = dim;
    for (const auto& doc : ds.documents) table.vectors.emplace(doc.id, fallback_embed(doc.text, dim, seed));
    return table;
}

} // namespace symfuse
