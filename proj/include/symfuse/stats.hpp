#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "symfuse/features.hpp"
#include "symfuse/util.hpp"

namespace symfuse {

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// log Gamma(x) for x > 0, Lanczos g=7 with 9 coefficients.
inline double log_gamma(double x) {
    static const double coef[9] = {
        0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
        771.32342877765313,       -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x <= 0.0) throw std::invalid_argument("log_gamma: x must be > 0");
    if (x < 0.5) {
        // reflection
        const double pi = 3.14159265358979323846;
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }
    x -= 1.0;
    double a = coef[0];
    double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += coef[i] / (x + static_cast<double>(i));
    return 0.5 * std::log(2.0 * 3.14159265358979323846) + (x + 0.5) * std::log(t) - t + std::log(a);
}

namespace detail {

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-14;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * detail::beta_cf(a, b, x) / a;
    return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Upper-tail probability of the F distribution with (d1, d2) degrees of
/// freedom: SF(f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2).
inline double f_survival(double f, int d1, int d2) {
    if (d1 < 1 || d2 < 1) throw std::invalid_argument("f_survival: degrees of freedom must be >= 1");
    if (std::isnan(f) || f < 0.0) throw std::invalid_argument("f_survival: f must be >= 0");
    if (std::isinf(f)) return 0.0;
    const double x = d2 / (d2 + d1 * f);
    return incomplete_beta(0.5 * d2, 0.5 * d1, x);
}

// ---------------------------------------------------------------------------
// Univariate regression test
// ---------------------------------------------------------------------------

/// Pearson correlation of two equal-length samples, n >= 3. A constant input
/// has no linear association, so zero variance maps to r = 0.
inline double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_r: length mismatch");
    const size_t n = x.size();
    if (n < 3) throw std::invalid_argument("pearson_r: need n >= 3");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    double r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    return std::clamp(r, -1.0, 1.0);
}

/// F statistic of a single-regressor test: r^2 / (1 - r^2) * (n - 2).
/// |r| = 1 yields +infinity; the caller treats that as p = 0.
inline double f_statistic(double r, int n) {
    if (std::fabs(r) > 1.0) throw std::invalid_argument("f_statistic: |r| must be <= 1");
    if (n < 3) throw std::invalid_argument("f_statistic: need n >= 3");
    const double r2 = r * r;
    if (r2 >= 1.0) return std::numeric_limits<double>::infinity();
    return r2 / (1.0 - r2) * static_cast<double>(n - 2);
}

struct FeatureTestResult {
    std::string model_id;
    std::string feature_name;
    double r = 0.0;
    double f_stat = 0.0;
    double p_value = 1.0;
    int n = 0;
    bool selected = false;
};

/// Per-run selection report: every (model, feature) test plus the reduced
/// feature set of each model. Within a model, results are ordered by ascending
/// p, ties broken by feature name; models keep their configured order.
struct SelectionReport {
    std::string task;
    double alpha = 0.05;
    int n = 0;
    std::vector<FeatureTestResult> results;
    std::vector<std::pair<std::string, std::vector<std::string>>> reduced_sets;

    const std::vector<std::string>* reduced_for(const std::string& model_id) const {
        for (const auto& [m, feats] : reduced_sets)
            if (m == model_id) return &feats;
        return nullptr;
    }

    size_t reduced_total() const {
        size_t t = 0;
        for (const auto& [m, feats] : reduced_sets) t += feats.size();
        return t;
    }
};

/// Tests every column of one model's matrix against binary labels (positive=1)
/// and assembles the significant set at level alpha.
inline std::vector<FeatureTestResult> test_features(const FeatureMatrix& m,
                                                    std::span<const double> labels,
                                                    double alpha) {
    if (m.n_rows() != labels.size())
        throw std::invalid_argument("test_features: row/label count mismatch");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("test_features: alpha must be in (0,1)");
    const int n = static_cast<int>(labels.size());
    if (n < 3) throw std::invalid_argument("test_features: need at least 3 samples");
    bool has0 = false, has1 = false;
    for (double v : labels) (v > 0.5 ? has1 : has0) = true;
    if (!has0 || !has1) throw std::invalid_argument("test_features: labels contain a single class");

    std::vector<FeatureTestResult> out;
    out.reserve(m.n_cols());
    for (size_t j = 0; j < m.n_cols(); ++j) {
        const auto col = m.column(j);
        FeatureTestResult res;
        res.model_id = m.model_id;
        res.feature_name = m.feature_names[j];
        res.n = n;
        res.r = pearson_r(col, labels);
        res.f_stat = f_statistic(res.r, n);
        res.p_value = std::isinf(res.f_stat) ? 0.0 : f_survival(res.f_stat, 1, n - 2);
        res.selected = res.p_value <= alpha;
        out.push_back(std::move(res));
    }
    std::sort(out.begin(), out.end(), [](const FeatureTestResult& a, const FeatureTestResult& b) {
        if (a.p_value != b.p_value) return a.p_value < b.p_value;
        return a.feature_name < b.feature_name;
    });
    return out;
}

inline SelectionReport select_features(const FeatureMatrix& m, std::span<const double> labels,
                                       double alpha, const std::string& task = "") {
    SelectionReport rep;
    rep.task = task;
    rep.alpha = alpha;
    rep.n = static_cast<int>(labels.size());
    rep.results = test_features(m, labels, alpha);
    std::vector<std::string> reduced;
    for (const auto& r : rep.results)
        if (r.selected) reduced.push_back(r.feature_name);
    rep.reduced_sets.emplace_back(m.model_id, std::move(reduced));
    return rep;
}

/// Multi-model variant; matrices keep their given order in the report.
inline SelectionReport select_features(const std::vector<FeatureMatrix>& matrices,
                                       std::span<const double> labels, double alpha,
                                       const std::string& task = "") {
    SelectionReport rep;
    rep.task = task;
    rep.alpha = alpha;
    rep.n = static_cast<int>(labels.size());
    for (const auto& m : matrices) {
        auto results = test_features(m, labels, alpha);
        std::vector<std::string> reduced;
        for (const auto& r : results)
            if (r.selected) reduced.push_back(r.feature_name);
        rep.reduced_sets.emplace_back(m.model_id, std::move(reduced));
        for (auto& r : results) rep.results.push_back(std::move(r));
    }
    return rep;
}

inline nlohmann::ordered_json selection_to_json(const SelectionReport& rep) {
    nlohmann::ordered_json j;
    j["task"] = rep.task;
    j["alpha"] = rep.alpha;
    j["n"] = rep.n;
    j["results"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.results) {
        j["results"].push_back({{"model", r.model_id},
                                {"feature", r.feature_name},
                                {"r", r.r},
                                {"f", std::isinf(r.f_stat) ? std::numeric_limits<double>::max() : r.f_stat},
                                {"p", r.p_value},
                                {"selected", r.selected}});
    }
    auto& sets = j["reduced_sets"] = nlohmann::ordered_json::object();
    for (const auto& [model, feats] : rep.reduced_sets) sets[model] = feats;
    return j;
}

/// Markdown table with one column per model, top-k features stacked per cell.
inline std::string selection_to_markdown(const SelectionReport& rep, size_t top_k = 3) {
    std::ostringstream os;
    os << "# Feature selection: " << rep.task << "\n\n";
    os << "alpha = " << fmt_double(rep.alpha) << ", n = " << rep.n << "\n\n";
    os << "| Task |";
    for (const auto& [model, feats] : rep.reduced_sets) os << ' ' << model << " |";
    os << "\n|---|";
    for (size_t i = 0; i < rep.reduced_sets.size(); ++i) os << "---|";
    os << "\n| " << rep.task << " |";
    for (const auto& [model, feats] : rep.reduced_sets) {
        os << ' ';
        size_t shown = 0;
        for (const auto& r : rep.results) {
            if (r.model_id != model || !r.selected) continue;
            if (shown == top_k) break;
            if (shown) os << "<br>";
            char pbuf[32];
            std::snprintf(pbuf, sizeof(pbuf), "%.2g", r.p_value);
            os << r.feature_name << " (" << pbuf << ")";
            ++shown;
        }
        if (shown == 0) os << "-";
        os << " |";
    }
    os << "\n";
    return os.str();
}

} // namespace symfuse
