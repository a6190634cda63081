#pragma once

#include "cropfuse/ingest.hpp"
#include "cropfuse/metrics.hpp"
#include "cropfuse/preprocess.hpp"
#include "cropfuse/regress.hpp"
#include "cropfuse/synth.hpp"
#include "cropfuse/types.hpp"

#include <string>
#include <vector>

namespace cropfuse {

enum class Scenario { total, corn, soybean, wheat };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);
/// Crop filter for a scenario; empty for `total`.
std::string scenario_crop(Scenario s);

enum class Predictor {
    evi_max,
    vod_max,
    evi_int,
    vod_int,
    evi_pc1,
    vod_pc1,
    lag,
    evi_series,
    vod_series,
    evi_vod_series,
};

std::string predictor_name(Predictor p);
Predictor predictor_from_name(const std::string& name);
const std::vector<Predictor>& all_predictors();

/// County-level gap-free series after aggregation and preprocessing.
struct CountyData {
    std::string county_id;
    Series evi; // composite day grid
    Series vod; // daily grid
};

/// Assigns cropland pixels to counties, runs the VOD quality chain per
/// pixel, averages survivors per county, and interpolates any missing
/// county-level EVI composites. Counties left without both sensors are
/// omitted. Screening reports (one per VOD pixel) are appended in pixel
/// input order when `reports` is non-null.
std::vector<CountyData> build_county_data(const std::vector<PixelSeries>& pixels,
                                          const std::vector<CountyGeometry>& counties,
                                          const PreprocessOptions& opt,
                                          std::vector<ScreeningReport>* reports,
                                          int threads = 1);

struct DatasetSpec {
    Scenario scenario = Scenario::total;
    Predictor predictor = Predictor::evi_vod_series;
    int truncate_doy = 0; // 0 = full observational window
    LagConfig lag;
};

struct SkippedCounty {
    std::string county_id;
    std::string reason;
};

struct BuildResult {
    Dataset data;
    std::vector<SkippedCounty> skipped;
};

/// Turns county series + survey labels into one feature vector per county
/// for the requested scenario and predictor. Counties whose feature cannot
/// be computed (no label, empty truncated window, infeasible lag, ...) are
/// skipped with a reason rather than failing the whole build.
BuildResult build_dataset(const std::vector<CountyData>& counties,
                          const std::vector<CountyRecord>& survey,
                          const std::vector<SeasonWindow>& seasons, const DatasetSpec& spec,
                          int year);

// -- application configuration ----------------------------------------------

/// Flat key=value run configuration shared by the CLI subcommands.
/// Unknown keys are rejected so typos fail loudly.
struct AppConfig {
    std::string pixels;   // may contain a {year} placeholder
    std::string survey;
    std::string counties;
    std::string units;   // optional bushel-weight overrides
    std::string seasons; // optional; season windows estimated when absent

    std::vector<int> years = {2015};
    Scenario scenario = Scenario::total;
    std::vector<Predictor> predictors = {Predictor::evi_vod_series};
    std::vector<ModelKind> models = {ModelKind::krr};

    CvConfig cv;
    LagConfig lag_cfg;
    PreprocessOptions preprocess;
    SynthOptions synth;

    int forecast_month_start = 4;
    int forecast_month_end = 10;
    int threads = 1;
};

AppConfig read_app_config(const std::string& path);

/// Replaces a literal "{year}" placeholder.
std::string substitute_year(const std::string& path, int year);

/// Loads one year of inputs and builds county data; seasons fall back to
/// the per-county estimator when no seasons file is configured.
struct YearData {
    int year = 0;
    std::vector<CountyData> counties;
    std::vector<CountyRecord> survey;
    std::vector<SeasonWindow> seasons;
    std::vector<ScreeningReport> screening;
};

YearData load_year(const AppConfig& cfg, int year);

} // namespace cropfuse
