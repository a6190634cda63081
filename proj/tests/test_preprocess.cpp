#include "cropfuse/preprocess.hpp"
#include "cropfuse/errors.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cropfuse;

namespace {

Series daily(std::vector<double> values, int start_doy = 1) {
    Series s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.doy.push_back(start_doy + int(i));
        s.value.push_back(values[i]);
    }
    return s;
}

// Exact AR(p) sequence from fixed initial history, zero innovations.
std::vector<double> noiseless_ar(const std::vector<double>& phi, double c,
                                 std::vector<double> init, std::size_t n) {
    std::vector<double> x = std::move(init);
    while (x.size() < n) {
        double v = c;
        for (std::size_t i = 0; i < phi.size(); ++i) v += phi[i] * x[x.size() - 1 - i];
        x.push_back(v);
    }
    return x;
}

std::vector<double> noisy_ar(const std::vector<double>& phi, double c, double sd,
                             std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, sd);
    std::vector<double> x(phi.size(), 0.0);
    for (std::size_t t = 0; t < n + 100; ++t) { // burn-in
        double v = c + noise(gen);
        for (std::size_t i = 0; i < phi.size(); ++i) v += phi[i] * x[x.size() - 1 - i];
        x.push_back(v);
    }
    return {x.end() - std::ptrdiff_t(n), x.end()};
}

} // namespace

TEST_CASE("freeze screening masks flagged samples") {
    Series s = daily({1.0, 2.0, 3.0});
    Series out = screen_frozen(s, {1, 0, 1});
    CHECK(out.doy == s.doy);
    CHECK(out.value[0] == 1.0);
    CHECK_FALSE(out.has_value(1));
    CHECK(out.value[2] == 3.0);

    CHECK_THROWS_AS(screen_frozen(s, {1, 0}), DimensionError);
}

TEST_CASE("moving average") {
    SUBCASE("interior uses the full day window") {
        Series s = daily({1, 2, 3, 4, 5, 6, 7});
        Series out = moving_average(s, 7);
        CHECK(out.value[3] == doctest::Approx(4.0)); // mean of 1..7
        // truncated at the ends
        CHECK(out.value[0] == doctest::Approx((1 + 2 + 3 + 4) / 4.0));
        CHECK(out.value[6] == doctest::Approx((4 + 5 + 6 + 7) / 4.0));
    }
    SUBCASE("window is in days, not samples") {
        Series s;
        s.doy = {1, 2, 50, 51};
        s.value = {1.0, 3.0, 10.0, 20.0};
        Series out = moving_average(s, 7);
        CHECK(out.value[0] == doctest::Approx(2.0)); // day 50 is out of reach
        CHECK(out.value[2] == doctest::Approx(15.0));
    }
    SUBCASE("missing samples stay missing and are skipped as neighbours") {
        Series s = daily({1.0, kMissing, 3.0});
        Series out = moving_average(s, 3);
        CHECK(out.value[0] == doctest::Approx(1.0));
        CHECK_FALSE(out.has_value(1));
        CHECK(out.value[2] == doctest::Approx(3.0));
    }
    SUBCASE("even or non-positive windows are rejected") {
        Series s = daily({1, 2, 3});
        CHECK_THROWS_AS(moving_average(s, 4), ParameterError);
        CHECK_THROWS_AS(moving_average(s, 0), ParameterError);
    }
}

TEST_CASE("ar fit recovers exact dynamics") {
    SUBCASE("ar(1)") {
        auto x = noiseless_ar({0.8}, 0.5, {3.0}, 40);
        ArModel m = fit_ar(x, 1);
        CHECK(m.coeff[0] == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(m.intercept == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(m.residual_variance <= 1e-20);
    }
    SUBCASE("ar(2) with oscillatory decay") {
        auto x = noiseless_ar({1.6, -0.8}, 0.1, {1.0, 2.0}, 60);
        ArModel m = fit_ar(x, 2);
        CHECK(m.coeff[0] == doctest::Approx(1.6).epsilon(1e-10));
        CHECK(m.coeff[1] == doctest::Approx(-0.8).epsilon(1e-10));
    }
    SUBCASE("aic matches its definition") {
        auto x = noisy_ar({0.7}, 0.0, 0.1, 50, 7);
        ArModel m = fit_ar(x, 1);
        double n_eff = 49.0;
        CHECK(m.aic ==
              doctest::Approx(n_eff * std::log(std::max(m.residual_variance, 1e-30)) + 4.0)
                  .epsilon(1e-12));
    }
    SUBCASE("constant segment has a rank-deficient design") {
        std::vector<double> x(30, 2.0);
        CHECK_THROWS_AS(fit_ar(x, 1), RankError);
    }
    SUBCASE("too-short segments are rejected") {
        CHECK_THROWS_AS(fit_ar({1.0, 2.0, 3.0}, 2), InsufficientDataError);
    }
}

TEST_CASE("ar residual variance matches a direct least squares solve") {
    auto x = noisy_ar({0.6, 0.2}, 0.3, 0.2, 80, 11);
    ArModel m = fit_ar(x, 2);

    // Normal equations on the oracle side: design [1, x_{t-1}, x_{t-2}]
    std::size_t n_eff = x.size() - 2;
    oracle::Mat g = oracle::make_mat(3, 3);
    oracle::Vec rhs(3, 0.0);
    for (std::size_t t = 2; t < x.size(); ++t) {
        double row[3] = {1.0, x[t - 1], x[t - 2]};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) g[a][b] += row[a] * row[b];
            rhs[a] += row[a] * x[t];
        }
    }
    oracle::Vec beta = oracle::gauss_solve(g, rhs);
    CHECK(m.intercept == doctest::Approx(beta[0]).epsilon(1e-9));
    CHECK(m.coeff[0] == doctest::Approx(beta[1]).epsilon(1e-9));
    CHECK(m.coeff[1] == doctest::Approx(beta[2]).epsilon(1e-9));

    double ssr = 0.0;
    for (std::size_t t = 2; t < x.size(); ++t) {
        double pred = beta[0] + beta[1] * x[t - 1] + beta[2] * x[t - 2];
        ssr += (x[t] - pred) * (x[t] - pred);
    }
    CHECK(m.residual_variance == doctest::Approx(ssr / double(n_eff)).epsilon(1e-9));
}

TEST_CASE("aic order selection") {
    SUBCASE("noiseless series select the generating order") {
        auto x = noiseless_ar({1.6, -0.8}, 0.1, {1.0, 2.0}, 60);
        ArModel m = select_ar_order(x, 6);
        CHECK(m.order == 2);
    }
    SUBCASE("white noise prefers the smallest order on ties") {
        auto x = noisy_ar({0.9}, 0.0, 0.15, 120, 3);
        ArModel m = select_ar_order(x, 5);
        CHECK(m.order >= 1);
        CHECK(m.order <= 5);
    }
    SUBCASE("segment shorter than p_max+2 is rejected") {
        CHECK_THROWS_AS(select_ar_order({1.0, 2.0, 3.0}, 5), InsufficientDataError);
    }
}

TEST_CASE("gap filling by forward recursion") {
    auto x = noiseless_ar({0.9}, 0.2, {5.0}, 30);
    Series s = daily(x);
    Series holed = s;
    holed.value[10] = kMissing;
    holed.value[11] = kMissing;
    holed.value[20] = kMissing;

    ArModel m = fit_ar(x, 1);
    Series filled = gapfill(holed, m);
    REQUIRE(filled.gap_free());
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(filled.value[i] == doctest::Approx(s.value[i]).epsilon(1e-10));

    SUBCASE("observed samples are never altered") {
        CHECK(filled.value[9] == s.value[9]);
        CHECK(filled.value[12] == s.value[12]);
    }
    SUBCASE("fill uses previously filled values, by hand") {
        ArModel toy;
        toy.order = 1;
        toy.coeff = {0.5};
        toy.intercept = 1.0;
        Series t = daily({2.0, kMissing, kMissing, 4.0});
        Series out = gapfill(t, toy);
        CHECK(out.value[1] == doctest::Approx(2.0));  // 1 + 0.5*2
        CHECK(out.value[2] == doctest::Approx(2.0));  // 1 + 0.5*2
        CHECK(out.value[3] == 4.0);
    }
    SUBCASE("a gap before enough history is an error") {
        Series bad = daily({kMissing, 1.0, 2.0});
        CHECK_THROWS_AS(gapfill(bad, m), HeadGapError);

        ArModel two;
        two.order = 2;
        two.coeff = {0.5, 0.1};
        Series bad2 = daily({1.0, kMissing, 2.0, 3.0});
        CHECK_THROWS_AS(gapfill(bad2, two), HeadGapError);
    }
}

TEST_CASE("dynamic range screening") {
    Series s = daily({0.1, 0.2, 0.9, 0.3, 0.05}, 100); // max day 102, min day 104
    SUBCASE("kept when extrema are far enough apart") {
        ScreeningReport r = screen_dynamic_range(s, 2);
        CHECK_FALSE(r.dropped);
        CHECK(r.min_max_gap_days == 2);
    }
    SUBCASE("dropped strictly below the threshold") {
        ScreeningReport r = screen_dynamic_range(s, 3);
        CHECK(r.dropped);
        CHECK(r.reason == ScreenReason::short_dynamic_range);
    }
    SUBCASE("extrema ties resolve to the earliest day") {
        Series t = daily({0.5, 0.1, 0.5, 0.1, 0.5}, 1);
        ScreeningReport r = screen_dynamic_range(t, 1);
        CHECK(r.min_max_gap_days == 1); // max at day 1, min at day 2
    }
}

TEST_CASE("linear interpolation of gaps") {
    Series s;
    s.doy = {1, 3, 4, 10};
    s.value = {1.0, kMissing, 4.0, 10.0};
    Series out = interpolate_missing_linear(s);
    CHECK(out.value[1] == doctest::Approx(3.0)); // 2/3 of the way from 1 to 4

    SUBCASE("head and tail take the nearest observation") {
        Series t = daily({kMissing, 2.0, kMissing, 6.0, kMissing});
        Series o = interpolate_missing_linear(t);
        CHECK(o.value[0] == doctest::Approx(2.0));
        CHECK(o.value[2] == doctest::Approx(4.0));
        CHECK(o.value[4] == doctest::Approx(6.0));
    }
    SUBCASE("all-missing series cannot be interpolated") {
        Series t = daily({kMissing, kMissing});
        CHECK_THROWS_AS(interpolate_missing_linear(t), DataError);
    }
}

TEST_CASE("longest observed run") {
    Series s = daily({1.0, kMissing, 2.0, 3.0, 4.0, kMissing, 5.0, 6.0});
    auto [start, len] = longest_observed_run(s);
    CHECK(start == 2);
    CHECK(len == 3);

    Series tie = daily({1.0, 2.0, kMissing, 3.0, 4.0});
    auto [s2, l2] = longest_observed_run(tie);
    CHECK(s2 == 0); // earliest run wins the tie
    CHECK(l2 == 2);
}

TEST_CASE("vod preprocessing chain") {
    PreprocessOptions opt;
    opt.smoothing_window = 7;
    opt.p_max = 4;
    opt.min_range_days = 19;

    // A slow seasonal hump with a few flagged / missing days.
    PixelSeries px;
    px.pixel_id = "v0";
    px.sensor = Sensor::vod;
    const int n = 160;
    for (int i = 0; i < n; ++i) {
        double d = 91.0 + i;
        double v = 0.25 + 0.2 * std::exp(-std::pow((d - 180.0) / 35.0, 2.0));
        px.series.doy.push_back(int(d));
        px.series.value.push_back(v);
        px.quality.push_back(1);
    }
    px.quality[40] = 0;
    px.series.value[90] = kMissing;
    px.series.value[91] = kMissing;

    PreprocessOutcome out = preprocess_vod(px, opt);
    CHECK(out.kept);
    CHECK(out.series.gap_free());
    CHECK(out.series.size() == std::size_t(n));
    CHECK_FALSE(out.report.dropped);
    CHECK(out.report.min_max_gap_days >= 19);
    CHECK(out.model.order >= 1);

    SUBCASE("flat series fail the range screen or the fit") {
        PixelSeries flat = px;
        for (auto& v : flat.series.value) v = 0.3;
        for (auto& q : flat.quality) q = 1;
        PreprocessOutcome o = preprocess_vod(flat, opt);
        CHECK_FALSE(o.kept);
    }
    SUBCASE("everything flagged means frozen") {
        PixelSeries frozen = px;
        for (auto& q : frozen.quality) q = 0;
        PreprocessOutcome o = preprocess_vod(frozen, opt);
        CHECK_FALSE(o.kept);
        CHECK(o.report.reason == ScreenReason::frozen_flagged);
    }
    SUBCASE("a missing head is reported as such") {
        PixelSeries headless = px;
        for (int i = 0; i < 10; ++i) headless.series.value[i] = kMissing;
        // the longest observed run starts after the head, so the fill
        // cannot seed its recursion
        PreprocessOutcome o = preprocess_vod(headless, opt);
        if (!o.kept) CHECK(o.report.reason == ScreenReason::head_gap);
    }
}

TEST_CASE("gap-free pixels skip the ar stage") {
    PreprocessOptions opt;
    PixelSeries px;
    px.pixel_id = "clean";
    px.sensor = Sensor::vod;
    for (int i = 0; i < 120; ++i) {
        double d = 91.0 + i;
        px.series.doy.push_back(int(d));
        px.series.value.push_back(0.2 + 0.15 * std::exp(-std::pow((d - 150.0) / 30.0, 2.0)));
        px.quality.push_back(1);
    }
    PreprocessOutcome out = preprocess_vod(px, opt);
    CHECK(out.kept);
    CHECK(out.model.order == 0); // no fill was needed
}
