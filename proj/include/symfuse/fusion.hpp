#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "symfuse/corpus.hpp"
#include "symfuse/embed.hpp"
#include "symfuse/features.hpp"
#include "symfuse/metrics.hpp"
#include "symfuse/rng.hpp"
#include "symfuse/stats.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

using Vec = std::vector<double>;

struct Mat {
    size_t rows = 0, cols = 0;
    Vec a;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(size_t i, size_t j) { return a[i * cols + j]; }
    double at(size_t i, size_t j) const { return a[i * cols + j]; }

    Vec mul(const Vec& x) const {
        Vec y(rows, 0.0);
        for (size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (size_t j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Vec mul_transposed(const Vec& y) const {
        Vec x(cols, 0.0);
        for (size_t i = 0; i < rows; ++i)
            for (size_t j = 0; j < cols; ++j) x[j] += a[i * cols + j] * y[i];
        return x;
    }
};

// ---------------------------------------------------------------------------
// Fused inputs
// ---------------------------------------------------------------------------

/// One training instance: standardized reduced symbolic features plus the
/// pooled document embedding. `symbolic` is empty when no feature survived
/// selection, in which case the head degrades to the embedding-only baseline.
struct FusedInput {
    Vec symbolic;
    Vec embedding;
};

/// Column standardizer fitted on the training split only. A zero-variance
/// column maps to all zeros.
struct Standardizer {
    Vec mean, stddev;

    double apply(size_t j, double x) const {
        return stddev[j] > 0.0 ? (x - mean[j]) / stddev[j] : 0.0;
    }
};

struct FusedDataset {
    std::vector<FusedInput> inputs;
    std::vector<int> labels;                // positive=1, negative=0
    std::vector<std::string> feature_order; // "model:feature", concatenation order
    bool symbolic_empty = false;

    size_t d_f() const { return inputs.empty() ? 0 : inputs[0].symbolic.size(); }
    size_t d_e() const { return inputs.empty() ? 0 : inputs[0].embedding.size(); }
};

/// (model, feature) column addresses in concatenation order.
using ColumnList = std::vector<std::pair<std::string, std::string>>;

/// Selected columns in report order; the per-model blocks follow the report's
/// model order, features the reduced-set order.
inline ColumnList selected_columns(const SelectionReport& report) {
    ColumnList cols;
    for (const auto& [model, feats] : report.reduced_sets)
        for (const auto& f : feats) cols.emplace_back(model, f);
    return cols;
}

inline std::vector<std::string> column_names(const ColumnList& cols) {
    std::vector<std::string> out;
    out.reserve(cols.size());
    for (const auto& [model, feature] : cols) out.push_back(model + ":" + feature);
    return out;
}

inline ColumnList parse_column_names(const std::vector<std::string>& names) {
    ColumnList cols;
    cols.reserve(names.size());
    for (const auto& name : names) {
        const size_t sep = name.find(':');
        if (sep == std::string::npos)
            throw ConfigError("feature order entry '" + name + "' is not model:feature");
        cols.emplace_back(name.substr(0, sep), name.substr(sep + 1));
    }
    return cols;
}

namespace detail {

inline const FeatureMatrix& matrix_for(const std::vector<FeatureMatrix>& matrices,
                                       const std::string& model_id) {
    for (const auto& m : matrices)
        if (m.model_id == model_id) return m;
    throw std::invalid_argument("fusion: no feature matrix for model '" + model_id + "'");
}

} // namespace detail

/// Training-split statistics for every selected column.
inline Standardizer fit_standardizer(const ColumnList& cols,
                                     const std::vector<FeatureMatrix>& train_matrices) {
    Standardizer st;
    st.mean.reserve(cols.size());
    st.stddev.reserve(cols.size());
    for (const auto& [model, feature] : cols) {
        const auto& m = detail::matrix_for(train_matrices, model);
        const auto col = m.column(m.col_index(feature));
        if (col.empty()) throw std::invalid_argument("fit_standardizer: empty training column");
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(col.size());
        st.mean.push_back(mean);
        st.stddev.push_back(std::sqrt(var));
    }
    return st;
}

inline Standardizer fit_standardizer(const SelectionReport& report,
                                     const std::vector<FeatureMatrix>& train_matrices) {
    return fit_standardizer(selected_columns(report), train_matrices);
}

/// Assembles fused inputs for one split. Matrices must be row-aligned with
/// `ds`; embeddings must cover every document id.
inline FusedDataset build_fused_inputs(const ColumnList& cols,
                                       const std::vector<FeatureMatrix>& matrices,
                                       const EmbeddingTable& embeds, const LabeledDataset& ds,
                                       const Standardizer& standardizer) {
    if (cols.size() != standardizer.mean.size())
        throw std::invalid_argument("build_fused_inputs: standardizer does not match the reduced set");

    FusedDataset out;
    out.symbolic_empty = cols.empty();
    out.feature_order = column_names(cols);

    std::vector<std::pair<const FeatureMatrix*, size_t>> resolved;
    resolved.reserve(cols.size());
    for (const auto& [model, feature] : cols) {
        const auto& m = detail::matrix_for(matrices, model);
        if (m.n_rows() != ds.size())
            throw std::invalid_argument("build_fused_inputs: matrix for '" + model +
                                        "' is misaligned with the dataset");
        resolved.emplace_back(&m, m.col_index(feature));
    }

    out.inputs.reserve(ds.size());
    out.labels.reserve(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        FusedInput in;
        in.symbolic.reserve(cols.size());
        for (size_t c = 0; c < resolved.size(); ++c) {
            const auto& [m, j] = resolved[c];
            if (m->doc_ids[i] != ds.documents[i].id)
                throw std::invalid_argument("build_fused_inputs: row order mismatch for model '" +
                                            m->model_id + "'");
            in.symbolic.push_back(standardizer.apply(c, m->rows[i][j]));
        }
        in.embedding = pooled_embedding(embeds, ds.documents[i].id);
        out.inputs.push_back(std::move(in));
        out.labels.push_back(ds.documents[i].label == Label::positive ? 1 : 0);
    }
    return out;
}

inline FusedDataset build_fused_inputs(const SelectionReport& report,
                                       const std::vector<FeatureMatrix>& matrices,
                                       const EmbeddingTable& embeds, const LabeledDataset& ds,
                                       const Standardizer& standardizer) {
    return build_fused_inputs(selected_columns(report), matrices, embeds, ds, standardizer);
}

/// Embedding-only view of a fused dataset (the vanilla baseline input).
inline FusedDataset strip_symbolic(const FusedDataset& data) {
    FusedDataset out;
    out.labels = data.labels;
    out.symbolic_empty = true;
    out.inputs.reserve(data.inputs.size());
    for (const auto& in : data.inputs) out.inputs.push_back({{}, in.embedding});
    return out;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// All learnable tensors of the fusion head. With d_f = 0 the symbolic branch
/// (and the prominence gate) is absent and the classifier runs on the
/// normalized embedding projection alone.
struct FusionParams {
    static constexpr double ln_eps = 1e-12;

    size_t d_f = 0, d_e = 0;
    size_t hidden = 64;
    double dropout = 0.1;

    Mat w_f;
    Vec b_f, ln_f_gain, ln_f_bias;
    Mat w_e;
    Vec b_e, ln_e_gain, ln_e_bias;
    Mat w_h;
    Vec b_h;
    Mat w_o;
    Vec b_o;

    size_t classifier_in() const { return d_f > 0 ? d_f + d_e : d_e; }

    static FusionParams shaped(size_t d_f, size_t d_e, size_t hidden, double dropout) {
        if (d_e < 1) throw std::invalid_argument("FusionParams: embedding dim must be >= 1");
        FusionParams p;
        p.d_f = d_f;
        p.d_e = d_e;
        p.hidden = hidden;
        p.dropout = dropout;
        if (d_f > 0) {
            p.w_f = Mat(d_f, d_f);
            p.b_f.assign(d_f, 0.0);
            p.ln_f_gain.assign(d_f, 1.0);
            p.ln_f_bias.assign(d_f, 0.0);
        }
        p.w_e = Mat(d_e, d_e);
        p.b_e.assign(d_e, 0.0);
        p.ln_e_gain.assign(d_e, 1.0);
        p.ln_e_bias.assign(d_e, 0.0);
        p.w_h = Mat(hidden, p.classifier_in());
        p.b_h.assign(hidden, 0.0);
        p.w_o = Mat(2, hidden);
        p.b_o.assign(2, 0.0);
        return p;
    }

    static FusionParams zeros_like(const FusionParams& other) {
        FusionParams p = shaped(other.d_f, other.d_e, other.hidden, other.dropout);
        if (p.d_f > 0) {
            std::fill(p.ln_f_gain.begin(), p.ln_f_gain.end(), 0.0);
        }
        std::fill(p.ln_e_gain.begin(), p.ln_e_gain.end(), 0.0);
        return p;
    }

    /// Fan-in scaled uniform init for weight matrices; draw order is fixed.
    void init(Rng& rng) {
        auto fill = [&rng](Mat& m) {
            const double limit = std::sqrt(6.0 / static_cast<double>(m.cols));
            for (double& v : m.a) v = rng.uniform(-limit, limit);
        };
        if (d_f > 0) fill(w_f);
        fill(w_e);
        fill(w_h);
        fill(w_o);
    }

    /// Active tensors in a fixed order (name, data). Gradients reuse this
    /// struct, so the same listing drives the optimizer and serialization.
    std::vector<std::pair<std::string, Vec*>> tensor_refs() {
        std::vector<std::pair<std::string, Vec*>> refs;
        if (d_f > 0) {
            refs.emplace_back("w_f", &w_f.a);
            refs.emplace_back("b_f", &b_f);
            refs.emplace_back("ln_f_gain", &ln_f_gain);
            refs.emplace_back("ln_f_bias", &ln_f_bias);
        }
        refs.emplace_back("w_e", &w_e.a);
        refs.emplace_back("b_e", &b_e);
        refs.emplace_back("ln_e_gain", &ln_e_gain);
        refs.emplace_back("ln_e_bias", &ln_e_bias);
        refs.emplace_back("w_h", &w_h.a);
        refs.emplace_back("b_h", &b_h);
        refs.emplace_back("w_o", &w_o.a);
        refs.emplace_back("b_o", &b_o);
        return refs;
    }
};

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

enum class Mode { train, eval };

struct ForwardCache {
    Vec f, e;
    Vec zf, ze;
    Vec xf_hat, xe_hat;
    double inv_std_f = 0.0, inv_std_e = 0.0;
    Vec fhat, ehat;
    Vec gate;        // softmax over fhat ++ ehat (empty when d_f = 0)
    Vec pre_dropout; // gated vector, or ehat for the vanilla head
    Vec mask;        // dropout multipliers
    Vec dropped;
    Vec hpre, h;
    Vec logits;
};

namespace detail {

struct LnCache {
    Vec x_hat;
    double inv_std = 0.0;
};

inline Vec layer_norm(const Vec& z, const Vec& gain, const Vec& bias, LnCache& cache) {
    const size_t n = z.size();
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    cache.inv_std = 1.0 / std::sqrt(var + FusionParams::ln_eps);
    cache.x_hat.resize(n);
    Vec out(n);
    for (size_t i = 0; i < n; ++i) {
        cache.x_hat[i] = (z[i] - mean) * cache.inv_std;
        out[i] = gain[i] * cache.x_hat[i] + bias[i];
    }
    return out;
}

/// Given d(loss)/d(LN output), accumulates gain/bias grads and returns
/// d(loss)/d(LN input).
inline Vec layer_norm_backward(const Vec& d_out, const Vec& gain, const LnCache& cache,
                               Vec& d_gain, Vec& d_bias) {
    const size_t n = d_out.size();
    Vec d_xhat(n);
    double m1 = 0.0, m2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        d_gain[i] += d_out[i] * cache.x_hat[i];
        d_bias[i] += d_out[i];
        d_xhat[i] = d_out[i] * gain[i];
        m1 += d_xhat[i];
        m2 += d_xhat[i] * cache.x_hat[i];
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    Vec d_z(n);
    for (size_t i = 0; i < n; ++i)
        d_z[i] = cache.inv_std * (d_xhat[i] - m1 - cache.x_hat[i] * m2);
    return d_z;
}

inline Vec softmax(const Vec& x) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : x) mx = std::max(mx, v);
    Vec out(x.size());
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

} // namespace detail

/// Full head: normalized projections of both representations, a single
/// softmax over their concatenation apportioning prominence, element-wise
/// gating of the original vectors, dropout, then hidden + output layers.
inline Vec forward(const FusionParams& p, const FusedInput& in, Mode mode, Rng& rng,
                   ForwardCache& cache) {
    if (in.symbolic.size() != p.d_f || in.embedding.size() != p.d_e)
        throw std::invalid_argument("forward: input shape mismatch");

    cache = ForwardCache{};
    cache.f = in.symbolic;
    cache.e = in.embedding;

    detail::LnCache ln_e;
    cache.ze = p.w_e.mul(cache.e);
    for (size_t i = 0; i < p.d_e; ++i) cache.ze[i] += p.b_e[i];
    cache.ehat = detail::layer_norm(cache.ze, p.ln_e_gain, p.ln_e_bias, ln_e);
    cache.xe_hat = ln_e.x_hat;
    cache.inv_std_e = ln_e.inv_std;

    if (p.d_f > 0) {
        detail::LnCache ln_f;
        cache.zf = p.w_f.mul(cache.f);
        for (size_t i = 0; i < p.d_f; ++i) cache.zf[i] += p.b_f[i];
        cache.fhat = detail::layer_norm(cache.zf, p.ln_f_gain, p.ln_f_bias, ln_f);
        cache.xf_hat = ln_f.x_hat;
        cache.inv_std_f = ln_f.inv_std;

        Vec concat;
        concat.reserve(p.d_f + p.d_e);
        concat.insert(concat.end(), cache.fhat.begin(), cache.fhat.end());
        concat.insert(concat.end(), cache.ehat.begin(), cache.ehat.end());
        cache.gate = detail::softmax(concat);

        cache.pre_dropout.resize(p.d_f + p.d_e);
        for (size_t i = 0; i < p.d_f; ++i) cache.pre_dropout[i] = cache.gate[i] * cache.f[i];
        for (size_t i = 0; i < p.d_e; ++i)
            cache.pre_dropout[p.d_f + i] = cache.gate[p.d_f + i] * cache.e[i];
    } else {
        cache.pre_dropout = cache.ehat;
    }

    const size_t cin = p.classifier_in();
    cache.mask.assign(cin, 1.0);
    if (mode == Mode::train && p.dropout > 0.0) {
        const double keep = 1.0 - p.dropout;
        for (size_t i = 0; i < cin; ++i)
            cache.mask[i] = rng.uniform() < p.dropout ? 0.0 : 1.0 / keep;
    }
    cache.dropped.resize(cin);
    for (size_t i = 0; i < cin; ++i) cache.dropped[i] = cache.pre_dropout[i] * cache.mask[i];

    cache.hpre = p.w_h.mul(cache.dropped);
    for (size_t i = 0; i < p.hidden; ++i) cache.hpre[i] += p.b_h[i];
    cache.h.resize(p.hidden);
    for (size_t i = 0; i < p.hidden; ++i) cache.h[i] = cache.hpre[i] > 0.0 ? cache.hpre[i] : 0.0;

    cache.logits = p.w_o.mul(cache.h);
    cache.logits[0] += p.b_o[0];
    cache.logits[1] += p.b_o[1];
    return cache.logits;
}

/// Exact gradients of the forward composition, accumulated into `grads`.
inline void backward(const FusionParams& p, const ForwardCache& cache, const Vec& grad_logits,
                     FusionParams& grads) {
    // output layer
    for (size_t i = 0; i < 2; ++i) {
        grads.b_o[i] += grad_logits[i];
        for (size_t j = 0; j < p.hidden; ++j) grads.w_o.at(i, j) += grad_logits[i] * cache.h[j];
    }
    Vec dh = p.w_o.mul_transposed(grad_logits);

    // hidden layer (ReLU)
    Vec dhpre(p.hidden);
    for (size_t i = 0; i < p.hidden; ++i) dhpre[i] = cache.hpre[i] > 0.0 ? dh[i] : 0.0;
    for (size_t i = 0; i < p.hidden; ++i) {
        grads.b_h[i] += dhpre[i];
        for (size_t j = 0; j < cache.dropped.size(); ++j)
            grads.w_h.at(i, j) += dhpre[i] * cache.dropped[j];
    }
    Vec ddropped = p.w_h.mul_transposed(dhpre);

    Vec dpre(cache.pre_dropout.size());
    for (size_t i = 0; i < dpre.size(); ++i) dpre[i] = ddropped[i] * cache.mask[i];

    detail::LnCache ln_e{cache.xe_hat, cache.inv_std_e};

    if (p.d_f > 0) {
        // gate: g = w ⊙ (f ++ e)
        Vec dgate(p.d_f + p.d_e);
        for (size_t i = 0; i < p.d_f; ++i) dgate[i] = dpre[i] * cache.f[i];
        for (size_t i = 0; i < p.d_e; ++i) dgate[p.d_f + i] = dpre[p.d_f + i] * cache.e[i];

        // softmax
        double dot = 0.0;
        for (size_t i = 0; i < dgate.size(); ++i) dot += dgate[i] * cache.gate[i];
        Vec dconcat(dgate.size());
        for (size_t i = 0; i < dgate.size(); ++i)
            dconcat[i] = cache.gate[i] * (dgate[i] - dot);

        Vec dfhat(dconcat.begin(), dconcat.begin() + static_cast<long>(p.d_f));
        Vec dehat(dconcat.begin() + static_cast<long>(p.d_f), dconcat.end());

        detail::LnCache ln_f{cache.xf_hat, cache.inv_std_f};
        Vec dzf = detail::layer_norm_backward(dfhat, p.ln_f_gain, ln_f, grads.ln_f_gain,
                                              grads.ln_f_bias);
        for (size_t i = 0; i < p.d_f; ++i) {
            grads.b_f[i] += dzf[i];
            for (size_t j = 0; j < p.d_f; ++j) grads.w_f.at(i, j) += dzf[i] * cache.f[j];
        }

        Vec dze = detail::layer_norm_backward(dehat, p.ln_e_gain, ln_e, grads.ln_e_gain,
                                              grads.ln_e_bias);
        for (size_t i = 0; i < p.d_e; ++i) {
            grads.b_e[i] += dze[i];
            for (size_t j = 0; j < p.d_e; ++j) grads.w_e.at(i, j) += dze[i] * cache.e[j];
        }
    } else {
        Vec dze = detail::layer_norm_backward(dpre, p.ln_e_gain, ln_e, grads.ln_e_gain,
                                              grads.ln_e_bias);
        for (size_t i = 0; i < p.d_e; ++i) {
            grads.b_e[i] += dze[i];
            for (size_t j = 0; j < p.d_e; ++j) grads.w_e.at(i, j) += dze[i] * cache.e[j];
        }
    }
}

/// Softmax cross-entropy over the two logits; label is 0 or 1.
inline double cross_entropy(const Vec& logits, int label) {
    const double mx = std::max(logits[0], logits[1]);
    const double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
    return lse - logits[label];
}

inline Vec cross_entropy_grad(const Vec& logits, int label) {
    Vec p = detail::softmax(logits);
    p[label] -= 1.0;
    return p;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    double lr = 1e-4;
    int epochs = 30;
    int patience = 10;
    int batch_size = 32;
    double dropout = 0.1;
    size_t hidden = 64;
    uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        if (lr <= 0.0 || epochs < 1 || patience < 1 || batch_size < 1 || hidden < 1)
            throw ConfigError("TrainConfig: values must be positive");
        if (patience > epochs) throw ConfigError("TrainConfig: patience must be <= epochs");
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("TrainConfig: dropout must be in [0,1)");
    }
};

struct AdamState {
    FusionParams m, v;
    long t = 0;

    explicit AdamState(const FusionParams& shape)
        : m(FusionParams::zeros_like(shape)), v(FusionParams::zeros_like(shape)) {}

    void step(FusionParams& params, FusionParams& grads, const TrainConfig& cfg) {
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        auto prefs = params.tensor_refs();
        auto grefs = grads.tensor_refs();
        auto mrefs = m.tensor_refs();
        auto vrefs = v.tensor_refs();
        for (size_t k = 0; k < prefs.size(); ++k) {
            Vec& pv = *prefs[k].second;
            Vec& gv = *grefs[k].second;
            Vec& mv = *mrefs[k].second;
            Vec& vv = *vrefs[k].second;
            for (size_t i = 0; i < pv.size(); ++i) {
                mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gv[i];
                vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gv[i] * gv[i];
                const double mhat = mv[i] / bc1;
                const double vhat = vv[i] / bc2;
                pv[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            }
        }
    }
};

inline int predict(const FusionParams& p, const FusedInput& in) {
    Rng dummy(0);
    ForwardCache cache;
    const Vec logits = forward(p, in, Mode::eval, dummy, cache);
    return logits[1] > logits[0] ? 1 : 0;
}

inline Metrics evaluate(const FusionParams& p, const FusedDataset& data) {
    if (data.inputs.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<int> pred;
    pred.reserve(data.inputs.size());
    for (const auto& in : data.inputs) pred.push_back(predict(p, in));
    return Metrics::from_predictions(data.labels, pred);
}

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
};

struct TrainResult {
    FusionParams params;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_macro_f1 = 0.0;
};

/// Minimizes mean cross-entropy with Adam, shuffling per epoch from the
/// seeded rng, and returns the parameters with the best validation macro F1
/// (early stop after `patience` epochs without improvement).
inline TrainResult train(const FusedDataset& train_data, const FusedDataset& val_data,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (train_data.inputs.empty() || val_data.inputs.empty())
        throw std::invalid_argument("train: train and validation splits must be nonempty");
    const size_t d_f = train_data.d_f();
    const size_t d_e = train_data.d_e();
    if (val_data.d_f() != d_f || val_data.d_e() != d_e)
        throw std::invalid_argument("train: split dimensionality mismatch");

    Rng root(cfg.seed);
    Rng init_rng = root.child(0);
    Rng dropout_rng = root.child(1);
    Rng shuffle_rng = root.child(2);

    FusionParams params = FusionParams::shaped(d_f, d_e, cfg.hidden, cfg.dropout);
    params.init(init_rng);
    AdamState adam(params);

    TrainResult result;
    result.params = params;
    double best = -1.0;
    int since_best = 0;

    std::vector<size_t> order(train_data.inputs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        size_t n_batches = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            const double inv_b = 1.0 / static_cast<double>(end - start);
            FusionParams grads = FusionParams::zeros_like(params);
            double batch_loss = 0.0;
            ForwardCache cache;
            for (size_t k = start; k < end; ++k) {
                const auto& in = train_data.inputs[order[k]];
                const int label = train_data.labels[order[k]];
                forward(params, in, Mode::train, dropout_rng, cache);
                batch_loss += cross_entropy(cache.logits, label);
                Vec gl = cross_entropy_grad(cache.logits, label);
                gl[0] *= inv_b;
                gl[1] *= inv_b;
                backward(params, cache, gl, grads);
            }
            batch_loss *= inv_b;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch));
            adam.step(params, grads, cfg);
            epoch_loss += batch_loss;
            ++n_batches;
        }

        const Metrics val = evaluate(params, val_data);
        EpochLog entry{epoch, epoch_loss / static_cast<double>(n_batches), val.macro_f1()};
        result.log.push_back(entry);

        if (entry.val_macro_f1 > best) {
            best = entry.val_macro_f1;
            result.params = params;
            result.best_epoch = epoch;
            result.best_val_macro_f1 = best;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

/// Baseline trainer: same loop over the embedding-only view of the data.
inline TrainResult train_baseline_vanilla(const FusedDataset& train_data,
                                          const FusedDataset& val_data, const TrainConfig& cfg) {
    return train(strip_symbolic(train_data), strip_symbolic(val_data), cfg);
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json checkpoint_to_json(const FusionParams& params,
                                                 const Standardizer& standardizer,
                                                 const std::vector<std::string>& feature_order,
                                                 const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["format"] = "symfuse-checkpoint-v1";
    j["kind"] = params.d_f > 0 ? "fused" : "embedding_only";
    j["d_f"] = params.d_f;
    j["d_e"] = params.d_e;
    j["hidden"] = params.hidden;
    j["dropout"] = params.dropout;
    j["feature_order"] = feature_order;
    j["standardizer"] = {{"mean", standardizer.mean}, {"stddev", standardizer.stddev}};
    j["train_config"] = {{"lr", cfg.lr},
                         {"epochs", cfg.epochs},
                         {"patience", cfg.patience},
                         {"batch_size", cfg.batch_size},
                         {"dropout", cfg.dropout},
                         {"hidden", cfg.hidden},
                         {"seed", cfg.seed}};
    auto& tensors = j["params"] = nlohmann::ordered_json::object();
    FusionParams copy = params;
    for (auto& [name, data] : copy.tensor_refs()) tensors[name] = *data;
    return j;
}

struct Checkpoint {
    FusionParams params;
    Standardizer standardizer;
    std::vector<std::string> feature_order;
    TrainConfig train_config;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != "symfuse-checkpoint-v1")
        throw ConfigError("checkpoint: unrecognized format");
    Checkpoint ck;
    ck.params = FusionParams::shaped(j["d_f"].get<size_t>(), j["d_e"].get<size_t>(),
                                     j["hidden"].get<size_t>(), j["dropout"].get<double>());
    for (auto& [name, data] : ck.params.tensor_refs()) {
        const auto vals = j["params"].at(name).get<Vec>();
        if (vals.size() != data->size())
            throw ConfigError("checkpoint: tensor '" + name + "' has wrong size");
        *data = vals;
    }
    ck.standardizer.mean = j["standardizer"]["mean"].get<Vec>();
    ck.standardizer.stddev = j["standardizer"]["stddev"].get<Vec>();
    ck.feature_order = j["feature_order"].get<std::vector<std::string>>();
    const auto& tc = j["train_config"];
    ck.train_config.lr = tc["lr"].get<double>();
    ck.train_config.epochs = tc["epochs"].get<int>();
    ck.train_config.patience = tc["patience"].get<int>();
    ck.train_config.batch_size = tc["batch_size"].get<int>();
    ck.train_config.dropout = tc["dropout"].get<double>();
    ck.train_config.hidden = tc["hidden"].get<size_t>();
    ck.train_config.seed = tc["seed"].get<uint64_t>();
    return ck;
}

} // namespace symfuse
