#include "cropfuse/report.hpp"
#include "cropfuse/errors.hpp"

#include <doctest.h>

#include "tmpdir.hpp"

#include <cmath>

using namespace cropfuse;

TEST_CASE("percentile with linear interpolation") {
    std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
    CHECK(percentile(v, 0) == 1.0);
    CHECK(percentile(v, 100) == 4.0);
    CHECK(percentile(v, 50) == doctest::Approx(2.5));
    CHECK(percentile(v, 25) == doctest::Approx(1.75));
    CHECK(percentile({5.0}, 50) == 5.0);
    CHECK_THROWS_AS(percentile({}, 50), DataError);
    CHECK_THROWS_AS(percentile({1.0}, 101), ParameterError);
}

TEST_CASE("month labels") {
    CHECK(month_short_name(4) == "apr");
    CHECK(month_short_name(10) == "oct");
    CHECK_THROWS_AS(month_short_name(13), ParameterError);
}

namespace {

RunResult ok_result(Predictor p, ModelKind m, int month, double r2_base) {
    RunResult r;
    r.scenario = Scenario::total;
    r.predictor = p;
    r.model = m;
    r.window_end_month = month;
    r.n = 100;
    r.t = 226;
    r.ok = true;
    for (int i = 0; i < 3; ++i) {
        EvalStats s;
        s.me = 0.001 * i;
        s.rmse = 0.05 + 0.01 * i;
        s.r2 = r2_base + 0.01 * i;
        r.eval.reps.push_back(s);
        r.eval.mean.me += s.me / 3.0;
        r.eval.mean.rmse += s.rmse / 3.0;
        r.eval.mean.r2 += s.r2 / 3.0;
    }
    double var = 0.0;
    for (const auto& s : r.eval.reps)
        var += (s.rmse - r.eval.mean.rmse) * (s.rmse - r.eval.mean.rmse);
    r.eval.stdev.rmse = std::sqrt(var / 2.0);
    return r;
}

} // namespace

TEST_CASE("results csv round trip") {
    TmpDir tmp("results");
    std::vector<RunResult> results;
    results.push_back(ok_result(Predictor::evi_vod_series, ModelKind::krr, 0, 0.8));
    results.push_back(ok_result(Predictor::lag, ModelKind::rlr, 7, 0.4));
    RunResult missing;
    missing.predictor = Predictor::vod_pc1;
    missing.model = ModelKind::krr;
    missing.ok = false;
    missing.note = "too few counties";
    results.push_back(missing);

    write_results_csv(tmp.file("r.csv"), results);
    std::vector<RunResult> back = read_results_csv(tmp.file("r.csv"));

    REQUIRE(back.size() == 3);
    CHECK(back[0].predictor == Predictor::evi_vod_series);
    CHECK(back[0].model == ModelKind::krr);
    CHECK(back[0].window_end_month == 0);
    CHECK(back[0].n == 100);
    REQUIRE(back[0].eval.reps.size() == 3);
    CHECK(back[0].eval.reps[2].r2 == results[0].eval.reps[2].r2); // bitwise via %.12g
    CHECK(back[0].eval.mean.rmse == doctest::Approx(results[0].eval.mean.rmse).epsilon(1e-12));
    CHECK(back[0].eval.stdev.rmse ==
          doctest::Approx(results[0].eval.stdev.rmse).epsilon(1e-12));

    CHECK(back[1].window_end_month == 7);
    CHECK_FALSE(back[2].ok);
    CHECK(back[2].note == "too few counties");
}

TEST_CASE("county predictions csv round trip") {
    TmpDir tmp("county");
    std::vector<CountyPrediction> rows;
    CountyPrediction a;
    a.county_id = "17001";
    a.year = 2015;
    a.predictor = Predictor::evi_series;
    a.model = ModelKind::krr;
    a.survey_yield = 0.9;
    a.predicted_yield = 0.85;
    a.residual = -0.05;
    a.relative_defined = true;
    a.relative_error_pct = 100.0 * 0.05 / 0.9;
    CountyPrediction b = a;
    b.county_id = "17003";
    b.survey_yield = 0.0;
    b.relative_defined = false;
    b.relative_error_pct = 0.0;
    rows = {a, b};

    write_county_csv(tmp.file("c.csv"), rows);
    auto back = read_county_csv(tmp.file("c.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].county_id == "17001");
    CHECK(back[0].relative_defined);
    CHECK(back[0].relative_error_pct == doctest::Approx(a.relative_error_pct));
    CHECK_FALSE(back[1].relative_defined);
}

TEST_CASE("comparison table shape") {
    std::vector<RunResult> results;
    results.push_back(ok_result(Predictor::evi_vod_series, ModelKind::krr, 0, 0.8));
    RunResult missing;
    missing.predictor = Predictor::vod_pc1;
    missing.ok = false;
    missing.note = "no usable counties";
    results.push_back(missing);

    std::string table = comparison_table(results);
    CHECK(table.find("evi_vod_series") != std::string::npos);
    CHECK(table.find("krr") != std::string::npos);
    CHECK(table.find("R2") != std::string::npos);
    CHECK(table.find("RMSE") != std::string::npos);
    CHECK(table.find("0.81") != std::string::npos); // mean r2 of the reps
    CHECK(table.find("missing (no usable counties)") != std::string::npos);
}

TEST_CASE("residual table bins by survey yield quartile") {
    std::vector<CountyPrediction> rows;
    for (int i = 0; i < 40; ++i) {
        CountyPrediction p;
        p.county_id = std::to_string(i);
        p.survey_yield = 0.5 + 0.01 * i;
        p.predicted_yield = p.survey_yield + (i % 2 == 0 ? 0.02 : -0.02);
        p.residual = p.predicted_yield - p.survey_yield;
        p.relative_defined = true;
        rows.push_back(p);
    }
    std::string table = residual_table(rows);
    CHECK(table.find("quartile") != std::string::npos);
    // 40 evenly spread rows split into 4 bins of 10 each
    std::size_t bins = 0, pos = 0;
    while ((pos = table.find("10    ", pos)) != std::string::npos) {
        ++bins;
        pos += 6;
    }
    CHECK(bins == 4);
}

TEST_CASE("limitation header names the caveat") {
    std::string h = limitation_header();
    CHECK(h.find("not validated") != std::string::npos);
}
