#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "symfuse/rng.hpp"
#include "symfuse/stats.hpp"

#include "oracles.hpp"

using namespace symfuse;

TEST_CASE("pearson_r on exact linear relations") {
    const std::vector<double> x{1, 2, 3};
    CHECK(pearson_r(x, std::vector<double>{2, 4, 6}) == Approx(1.0).margin(1e-15));
    CHECK(pearson_r(x, std::vector<double>{3, 2, 1}) == Approx(-1.0).margin(1e-15));

    // hand evaluation: means 2.5/2.5, cov = 2.25-0.25-0.25+2.25 = 4,
    // var_x = var_y = 5, r = 4/5
    const std::vector<double> x4{1, 2, 3, 4}, y4{1, 3, 2, 4};
    CHECK(pearson_r(x4, y4) == Approx(0.8).margin(1e-15));
}

TEST_CASE("pearson_r preconditions and degenerate input") {
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                    std::invalid_argument);
    // zero-variance input carries no information
    CHECK(pearson_r(std::vector<double>{5, 5, 5, 5}, std::vector<double>{1, 2, 3, 4}) == 0.0);
}

TEST_CASE("pearson_r properties: symmetry, affine invariance, range") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 3 + rng.bounded(40);
        std::vector<double> x(n), y(n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        const double r = pearson_r(x, y);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        CHECK(pearson_r(y, x) == Approx(r).margin(1e-12));

        const double a = rng.uniform(0.1, 5.0), b = rng.uniform(-3.0, 3.0);
        std::vector<double> xs(n);
        for (size_t i = 0; i < n; ++i) xs[i] = a * x[i] + b;
        CHECK(pearson_r(xs, y) == Approx(r).margin(1e-10));
        for (size_t i = 0; i < n; ++i) xs[i] = -a * x[i] + b;
        CHECK(pearson_r(xs, y) == Approx(-r).margin(1e-10));
    }
}

TEST_CASE("f_statistic values and monotonicity") {
    CHECK(f_statistic(0.0, 10) == 0.0);
    // 0.64/0.36 * 2 = 32/9
    CHECK(f_statistic(0.8, 4) == Approx(32.0 / 9.0).margin(1e-12));
    CHECK(std::isinf(f_statistic(1.0, 5)));
    CHECK(std::isinf(f_statistic(-1.0, 5)));

    double prev = 0.0;
    for (double r = 0.05; r < 1.0; r += 0.05) {
        const double f = f_statistic(r, 20);
        CHECK(f > prev);
        prev = f;
    }
    CHECK(f_statistic(0.5, 30) > f_statistic(0.5, 10));
}

TEST_CASE("f_survival endpoints and closed form") {
    CHECK(f_survival(0.0, 1, 8) == Approx(1.0).margin(1e-15));
    // SF(f; 1, 2) = 1 - sqrt(f/(f+2)); at f = 32/9 this is exactly 0.2
    CHECK(f_survival(32.0 / 9.0, 1, 2) == Approx(0.2).margin(1e-12));
    CHECK(f_survival(1e6, 1, 8) < 1e-10);
    CHECK(f_survival(std::numeric_limits<double>::infinity(), 1, 8) == 0.0);
    CHECK_THROWS_AS(f_survival(-0.5, 1, 8), std::invalid_argument);
    CHECK_THROWS_AS(f_survival(1.0, 0, 8), std::invalid_argument);
}

TEST_CASE("f_survival matches quadrature of the density") {
    for (int d2 : {2, 8, 98}) {
        double prev = 1.0;
        for (double f : {0.1, 1.0, 4.0, 10.0}) {
            const double sf = f_survival(f, 1, d2);
            CHECK(sf <= prev); // monotone non-increasing
            prev = sf;
            CHECK(sf == Approx(oracles::f_survival_quadrature(f, d2)).margin(1e-8));
        }
    }
}

TEST_CASE("log_gamma agrees with the standard library") {
    for (double x : {0.1, 0.5, 1.0, 2.5, 7.0, 49.0, 99.0, 250.0})
        CHECK(log_gamma(x) == Approx(std::lgamma(x)).epsilon(1e-12).margin(1e-12));
}

namespace {

symfuse::FeatureMatrix matrix_of(std::vector<std::string> names,
                                 std::vector<std::vector<double>> rows) {
    symfuse::FeatureMatrix m;
    m.model_id = "toy";
    m.feature_names = std::move(names);
    m.rows = std::move(rows);
    for (size_t i = 0; i < m.rows.size(); ++i) m.doc_ids.push_back("d" + std::to_string(i));
    return m;
}

} // namespace

TEST_CASE("select_features: perfect predictor and constant column") {
    std::vector<double> labels{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
    std::vector<std::vector<double>> rows;
    for (double y : labels) rows.push_back({y, 7.0, y * 2.0 + 1.0});
    const auto m = matrix_of({"perfect", "flat", "affine"}, rows);

    const auto rep = select_features(m, labels, 0.05, "unit");
    REQUIRE(rep.results.size() == 3);
    REQUIRE(rep.reduced_sets.size() == 1);

    for (const auto& r : rep.results) {
        if (r.feature_name == "flat") {
            CHECK(r.r == 0.0);
            CHECK(r.p_value == Approx(1.0).margin(1e-12));
            CHECK_FALSE(r.selected);
        } else {
            CHECK(std::fabs(r.r) == Approx(1.0).margin(1e-12));
            CHECK(r.p_value == Approx(0.0).margin(1e-12));
            CHECK(r.selected);
        }
    }
    // ascending p with lexicographic ties: both perfect columns share p = 0
    CHECK(rep.results[0].feature_name == "affine");
    CHECK(rep.results[1].feature_name == "perfect");
    CHECK(rep.results[2].feature_name == "flat");
    CHECK(rep.reduced_sets[0].second == std::vector<std::string>{"affine", "perfect"});
}

TEST_CASE("select_features rejects degenerate labels") {
    const auto m = matrix_of({"a"}, {{1}, {2}, {3}});
    CHECK_THROWS_AS(select_features(m, std::vector<double>{1, 1, 1}, 0.05),
                    std::invalid_argument);
}

TEST_CASE("selection is threshold-consistent") {
    Rng rng(7);
    const int n = 40;
    std::vector<double> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i % 2;
    std::vector<std::vector<double>> rows(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 12; ++j)
            rows[i].push_back(0.4 * labels[i] * (j % 3) + rng.normal());
    }
    std::vector<std::string> names;
    for (int j = 0; j < 12; ++j) names.push_back("f" + std::to_string(j));
    const auto m = matrix_of(names, rows);

    const auto loose = select_features(m, labels, 0.2);
    const auto strict = select_features(m, labels, 0.01);
    for (const auto& f : strict.reduced_sets[0].second) {
        const auto& sel = loose.reduced_sets[0].second;
        CHECK(std::find(sel.begin(), sel.end(), f) != sel.end());
    }
    CHECK(strict.reduced_sets[0].second.size() <= loose.reduced_sets[0].second.size());
}

TEST_CASE("pipeline p equals the two-sided correlation t test") {
    Rng rng(123);
    for (int n : {10, 50, 200}) {
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> x(n), y(n);
            const double mix = rng.uniform();
            for (int i = 0; i < n; ++i) {
                x[i] = rng.normal();
                y[i] = mix * x[i] + (1.0 - mix) * rng.normal();
            }
            const double r = pearson_r(x, y);
            const double f = f_statistic(r, n);
            const double p = std::isinf(f) ? 0.0 : f_survival(f, 1, n - 2);

            const double t_abs = std::sqrt(f);
            const double p_oracle = oracles::t_test_two_sided_p(t_abs, n - 2);
            CHECK(p == Approx(p_oracle).margin(1e-10));
        }
    }
}

TEST_CASE("noise features are selected at roughly the significance level") {
    Rng rng(2024);
    const int n = 200, n_features = 1000;
    std::vector<double> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i < n / 2 ? 1.0 : 0.0;

    int selected = 0;
    std::vector<double> col(n);
    for (int j = 0; j < n_features; ++j) {
        for (int i = 0; i < n; ++i) col[i] = rng.normal();
        const double r = pearson_r(col, labels);
        const double p = f_survival(f_statistic(r, n), 1, n - 2);
        if (p <= 0.05) ++selected;
    }
    const double fraction = static_cast<double>(selected) / n_features;
    CHECK(fraction >= 0.03);
    CHECK(fraction <= 0.07);
}

TEST_CASE("selection report serializes with stable structure") {
    std::vector<double> labels{1, 0, 1, 0, 1, 0};
    std::vector<std::vector<double>> rows;
    for (double y : labels) rows.push_back({y, 3.0});
    const auto m = matrix_of({"hit", "flat"}, rows);
    const auto rep = select_features(m, labels, 0.05, "demo");

    const auto j = selection_to_json(rep);
    CHECK(j["task"] == "demo");
    CHECK(j["alpha"] == Approx(0.05));
    REQUIRE(j["results"].size() == 2);
    CHECK(j["results"][0]["feature"] == "hit");
    CHECK(j["results"][0]["selected"] == true);
    CHECK(j["reduced_sets"]["toy"].size() == 1);

    const auto md = selection_to_markdown(rep);
    CHECK(md.find("hit") != std::string::npos);
}
