#pragma once

#include "cropfuse/pipeline.hpp"
#include "cropfuse/regress.hpp"

#include <string>
#include <vector>

namespace cropfuse {

/// One experiment cell: a (scenario, predictor, model) combination,
/// optionally restricted to a forecast window ending at a given month.
struct RunResult {
    Scenario scenario = Scenario::total;
    Predictor predictor = Predictor::evi_vod_series;
    ModelKind model = ModelKind::krr;
    int window_end_month = 0; // 0 = full observational window
    int n = 0;                // dataset rows
    int t = 0;                // feature length
    bool ok = false;
    std::string note; // reason when not ok
    EvalSummary eval;
};

/// One county's in-sample prediction from the full-data refit.
struct CountyPrediction {
    Scenario scenario = Scenario::total;
    Predictor predictor = Predictor::evi_vod_series;
    ModelKind model = ModelKind::krr;
    std::string county_id;
    int year = 0;
    double survey_yield = 0.0;
    double predicted_yield = 0.0;
    double residual = 0.0;
    bool relative_defined = false;
    double relative_error_pct = 0.0;
};

/// Percentile with linear interpolation between closest ranks; q in
/// [0, 100].
double percentile(std::vector<double> values, double q);

std::string month_short_name(int month);

// Machine-readable artifacts: one row per repetition for completed cells,
// one `status=missing` row for infeasible ones.
void write_results_csv(const std::string& path, const std::vector<RunResult>& results);
std::vector<RunResult> read_results_csv(const std::string& path);

void write_county_csv(const std::string& path, const std::vector<CountyPrediction>& rows);
std::vector<CountyPrediction> read_county_csv(const std::string& path);

/// Comparison grid across cells: N, T, ME, RMSE (x100) and R2, each as
/// mean +/- std over repetitions.
std::string comparison_table(const std::vector<RunResult>& results);

/// Residual-vs-survey-yield quartile table with 25th/75th residual
/// percentiles per bin.
std::string residual_table(const std::vector<CountyPrediction>& rows);

/// Caveat block for report headers: real-data runs have no external
/// accuracy guarantee.
std::string limitation_header();

} // namespace cropfuse
