#include "cropfuse/pipeline.hpp"

#include "cropfuse/csv.hpp"
#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace cropfuse {

std::string scenario_name(Scenario s) {
    switch (s) {
    case Scenario::total: return "total";
    case Scenario::corn: return "corn";
    case Scenario::soybean: return "soybean";
    case Scenario::wheat: return "wheat";
    }
    return "total";
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "total") return Scenario::total;
    if (name == "corn") return Scenario::corn;
    if (name == "soybean") return Scenario::soybean;
    if (name == "wheat") return Scenario::wheat;
    throw ParameterError("unknown scenario '" + name + "'");
}

std::string scenario_crop(Scenario s) {
    return s == Scenario::total ? std::string() : scenario_name(s);
}

namespace {
const std::vector<std::pair<Predictor, std::string>> kPredictorNames = {
    {Predictor::evi_max, "evi_max"},        {Predictor::vod_max, "vod_max"},
    {Predictor::evi_int, "evi_int"},        {Predictor::vod_int, "vod_int"},
    {Predictor::evi_pc1, "evi_pc1"},        {Predictor::vod_pc1, "vod_pc1"},
    {Predictor::lag, "lag"},                {Predictor::evi_series, "evi_series"},
    {Predictor::vod_series, "vod_series"},  {Predictor::evi_vod_series, "evi_vod_series"},
};
} // namespace

std::string predictor_name(Predictor p) {
    for (const auto& [pred, name] : kPredictorNames)
        if (pred == p) return name;
    return "unknown";
}

Predictor predictor_from_name(const std::string& name) {
    for (const auto& [pred, pname] : kPredictorNames)
        if (pname == name) return pred;
    throw ParameterError("unknown predictor '" + name + "'");
}

const std::vector<Predictor>& all_predictors() {
    static const std::vector<Predictor> all = [] {
        std::vector<Predictor> v;
        for (const auto& [pred, name] : kPredictorNames) v.push_back(pred);
        return v;
    }();
    return all;
}

namespace {

/// Reindexes a pixel onto a common axis; days absent from the input are
/// plain gaps (usable-but-missing), not quality failures.
PixelSeries reindex_pixel(const PixelSeries& px, const std::vector<int>& axis) {
    PixelSeries out = px;
    out.series.doy = axis;
    out.series.value.assign(axis.size(), kMissing);
    out.quality.assign(axis.size(), 1);
    std::size_t j = 0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        while (j < px.series.size() && px.series.doy[j] < axis[i]) ++j;
        if (j < px.series.size() && px.series.doy[j] == axis[i]) {
            out.series.value[i] = px.series.value[j];
            out.quality[i] = px.quality.empty() ? 1 : px.quality[j];
        }
    }
    return out;
}

} // namespace

std::vector<CountyData> build_county_data(const std::vector<PixelSeries>& pixels,
                                          const std::vector<CountyGeometry>& counties,
                                          const PreprocessOptions& opt,
                                          std::vector<ScreeningReport>* reports, int threads) {
    auto assignment = assign_pixels_to_counties(pixels, counties);

    // Common axes: a contiguous daily grid spanning every VOD sample, and
    // the union of EVI composite days.
    int vod_lo = 0, vod_hi = -1;
    std::set<int> evi_days;
    for (const auto& [county_id, idxs] : assignment) {
        for (std::size_t i : idxs) {
            const auto& px = pixels[i];
            if (px.series.empty()) continue;
            if (px.sensor == Sensor::vod) {
                if (vod_hi < vod_lo) {
                    vod_lo = px.series.doy.front();
                    vod_hi = px.series.doy.back();
                } else {
                    vod_lo = std::min(vod_lo, px.series.doy.front());
                    vod_hi = std::max(vod_hi, px.series.doy.back());
                }
            } else {
                evi_days.insert(px.series.doy.begin(), px.series.doy.end());
            }
        }
    }
    std::vector<int> vod_axis;
    for (int d = vod_lo; d <= vod_hi; ++d) vod_axis.push_back(d);
    std::vector<int> evi_axis(evi_days.begin(), evi_days.end());

    // Preprocess assigned VOD pixels in input order, index-addressed so
    // the parallel schedule cannot change results.
    std::vector<std::size_t> vod_idx;
    std::map<std::size_t, std::size_t> outcome_of; // pixel index -> slot
    for (const auto& [county_id, idxs] : assignment)
        for (std::size_t i : idxs)
            if (pixels[i].sensor == Sensor::vod) vod_idx.push_back(i);
    std::sort(vod_idx.begin(), vod_idx.end());
    for (std::size_t s = 0; s < vod_idx.size(); ++s) outcome_of[vod_idx[s]] = s;

    std::vector<PreprocessOutcome> outcomes(vod_idx.size());
    parallel_for(vod_idx.size(), threads, [&](std::size_t s) {
        PixelSeries px = reindex_pixel(pixels[vod_idx[s]], vod_axis);
        outcomes[s] = preprocess_vod(px, opt);
    });
    if (reports)
        for (const auto& o : outcomes) reports->push_back(o.report);

    std::vector<CountyData> out;
    for (const auto& county : counties) {
        auto it = assignment.find(county.county_id);
        if (it == assignment.end()) continue;

        std::vector<PixelSeries> evi_px;
        std::vector<const Series*> vod_series;
        for (std::size_t i : it->second) {
            if (pixels[i].sensor == Sensor::evi) {
                evi_px.push_back(reindex_pixel(pixels[i], evi_axis));
            } else {
                const auto& o = outcomes[outcome_of.at(i)];
                if (o.kept) vod_series.push_back(&o.series);
            }
        }
        if (evi_px.empty() || vod_series.empty()) continue;

        std::vector<const PixelSeries*> evi_ptr;
        for (const auto& p : evi_px) evi_ptr.push_back(&p);
        Series evi = county_mean_series(evi_ptr);
        if (evi.count_observed() == 0) continue;
        if (!evi.gap_free()) evi = interpolate_missing_linear(evi);

        CountyData cd;
        cd.county_id = county.county_id;
        cd.evi = std::move(evi);
        cd.vod = mean_series(vod_series);
        out.push_back(std::move(cd));
    }
    return out;
}

namespace {

struct LabeledCounty {
    const CountyData* data;
    double label;
    Series evi;
    Series vod;
    SeasonWindow window;
};

} // namespace

BuildResult build_dataset(const std::vector<CountyData>& counties,
                          const std::vector<CountyRecord>& survey,
                          const std::vector<SeasonWindow>& seasons, const DatasetSpec& spec,
                          int year) {
    BuildResult result;
    std::map<std::string, const CountyRecord*> record_of;
    for (const auto& rec : survey)
        if (rec.year == year) record_of[rec.county_id] = &rec;
    std::map<std::string, const SeasonWindow*> season_of;
    for (const auto& s : seasons) season_of[s.county_id] = &s;

    std::string crop = scenario_crop(spec.scenario);
    bool needs_window = spec.predictor != Predictor::lag &&
                        spec.predictor != Predictor::evi_series &&
                        spec.predictor != Predictor::vod_series &&
                        spec.predictor != Predictor::evi_vod_series;

    std::vector<LabeledCounty> rows;
    for (const auto& cd : counties) {
        auto rec_it = record_of.find(cd.county_id);
        if (rec_it == record_of.end()) {
            result.skipped.push_back({cd.county_id, "no survey record"});
            continue;
        }
        const CountyRecord& rec = *rec_it->second;
        double label;
        if (crop.empty()) {
            label = rec.weighted_yield;
        } else {
            auto prop = rec.proportions.find(crop);
            if (prop == rec.proportions.end() || prop->second <= 0.0) {
                result.skipped.push_back({cd.county_id, "no " + crop + " area"});
                continue;
            }
            label = rec.crop_yield_kg_m2.at(crop);
        }

        LabeledCounty lc;
        lc.data = &cd;
        lc.label = label;
        lc.evi = spec.truncate_doy > 0 ? truncate_after(cd.evi, spec.truncate_doy) : cd.evi;
        lc.vod = spec.truncate_doy > 0 ? truncate_after(cd.vod, spec.truncate_doy) : cd.vod;
        if (lc.evi.empty() || lc.vod.empty()) {
            result.skipped.push_back({cd.county_id, "empty series after truncation"});
            continue;
        }

        if (needs_window) {
            try {
                if (auto it = season_of.find(cd.county_id); it != season_of.end())
                    lc.window = *it->second;
                else
                    lc.window = estimate_season_window(cd.evi, cd.county_id);
            } catch (const Error& e) {
                result.skipped.push_back({cd.county_id, e.what()});
                continue;
            }
            if (spec.truncate_doy > 0)
                lc.window.end_doy = std::min(lc.window.end_doy, spec.truncate_doy);
            if (lc.window.start_doy >= lc.window.end_doy) {
                result.skipped.push_back({cd.county_id, "season window after truncation"});
                continue;
            }
        }
        rows.push_back(std::move(lc));
    }

    bool pc1 = spec.predictor == Predictor::evi_pc1 || spec.predictor == Predictor::vod_pc1;
    std::vector<Eigen::VectorXd> features;
    std::vector<const LabeledCounty*> kept;
    for (const auto& lc : rows) {
        try {
            Eigen::VectorXd f;
            const Series& evi = lc.evi;
            const Series& vod = lc.vod;
            switch (spec.predictor) {
            case Predictor::evi_max:
                f = Eigen::VectorXd::Constant(1, metric_max(evi, lc.window));
                break;
            case Predictor::vod_max:
                f = Eigen::VectorXd::Constant(1, metric_max(vod, lc.window));
                break;
            case Predictor::evi_int:
                f = Eigen::VectorXd::Constant(1, metric_small_integral(evi, lc.window));
                break;
            case Predictor::vod_int:
                f = Eigen::VectorXd::Constant(1, metric_small_integral(vod, lc.window));
                break;
            case Predictor::evi_pc1:
                f = metric_battery(evi, lc.window).to_vector();
                break;
            case Predictor::vod_pc1:
                f = metric_battery(vod, lc.window).to_vector();
                break;
            case Predictor::lag: {
                LagResult lr = evi_vod_lag(evi, vod, spec.lag);
                f = Eigen::VectorXd::Constant(1, double(lr.lag_days));
                break;
            }
            case Predictor::evi_series:
                f = Eigen::Map<const Eigen::VectorXd>(evi.value.data(), evi.value.size());
                break;
            case Predictor::vod_series:
                f = Eigen::Map<const Eigen::VectorXd>(vod.value.data(), vod.value.size());
                break;
            case Predictor::evi_vod_series:
                f = stack_features(
                    Eigen::Map<const Eigen::VectorXd>(evi.value.data(), evi.value.size()),
                    Eigen::Map<const Eigen::VectorXd>(vod.value.data(), vod.value.size()));
                break;
            }
            features.push_back(std::move(f));
            kept.push_back(&lc);
        } catch (const Error& e) {
            result.skipped.push_back({lc.data->county_id, e.what()});
        }
    }

    if (pc1) {
        if (features.size() < MetricBattery::kCount)
            throw InsufficientDataError("too few counties (" + std::to_string(features.size()) +
                                        ") to fit PC1");
        Eigen::MatrixXd batteries(features.size(), MetricBattery::kCount);
        for (std::size_t i = 0; i < features.size(); ++i)
            batteries.row(i) = features[i];
        Pc1Projection proj = fit_pc1(batteries);
        for (auto& f : features)
            f = Eigen::VectorXd::Constant(1, project_pc1(Eigen::VectorXd(f), proj));
    }

    for (std::size_t i = 0; i < kept.size(); ++i) {
        FeatureVector fv;
        fv.county_id = kept[i]->data->county_id;
        fv.year = year;
        fv.features = std::move(features[i]);
        fv.label = kept[i]->label;
        result.data.push_back(std::move(fv));
    }
    return result;
}

// -- configuration ------------------------------------------------------------

std::string substitute_year(const std::string& path, int year) {
    std::string out = path;
    const std::string key = "{year}";
    for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key))
        out.replace(pos, key.size(), std::to_string(year));
    return out;
}

namespace {

int to_int(const std::string& v, const std::string& key) {
    try {
        return parse_int(v, "config key '" + key + "'");
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        return parse_double(v, "config key '" + key + "'");
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
    std::vector<double> out;
    for (const auto& cell : split(v, ','))
        if (!trim(cell).empty()) out.push_back(to_double(trim(cell), key));
    if (out.empty()) throw ConfigError("config key '" + key + "' needs at least one value");
    return out;
}

} // namespace

AppConfig read_app_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);

    AppConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));

        try {
            if (key == "pixels") cfg.pixels = value;
            else if (key == "survey") cfg.survey = value;
            else if (key == "counties") cfg.counties = value;
            else if (key == "units") cfg.units = value;
            else if (key == "seasons") cfg.seasons = value;
            else if (key == "years") {
                cfg.years.clear();
                for (const auto& y : split(value, ','))
                    cfg.years.push_back(to_int(trim(y), key));
            } else if (key == "scenario") cfg.scenario = scenario_from_name(value);
            else if (key == "predictors") {
                cfg.predictors.clear();
                if (value == "all") {
                    cfg.predictors = all_predictors();
                } else {
                    for (const auto& p : split(value, ','))
                        cfg.predictors.push_back(predictor_from_name(trim(p)));
                }
            } else if (key == "models") {
                cfg.models.clear();
                for (const auto& m : split(value, ','))
                    cfg.models.push_back(model_kind_from_name(trim(m)));
            } else if (key == "train_fraction") cfg.cv.train_fraction = to_double(value, key);
            else if (key == "repetitions") cfg.cv.repetitions = to_int(value, key);
            else if (key == "inner_folds") cfg.cv.inner_folds = to_int(value, key);
            else if (key == "lambda_grid") cfg.cv.lambda_grid = to_doubles(value, key);
            else if (key == "sigma_factors") cfg.cv.sigma_factor_grid = to_doubles(value, key);
            else if (key == "lag_min") cfg.lag_cfg.lag_min = to_int(value, key);
            else if (key == "lag_max") cfg.lag_cfg.lag_max = to_int(value, key);
            else if (key == "min_overlap_days") cfg.lag_cfg.min_overlap_days = to_int(value, key);
            else if (key == "smoothing_window") cfg.preprocess.smoothing_window = to_int(value, key);
            else if (key == "p_max") cfg.preprocess.p_max = to_int(value, key);
            else if (key == "min_range_days") cfg.preprocess.min_range_days = to_int(value, key);
            else if (key == "n_counties") cfg.synth.n_counties = to_int(value, key);
            else if (key == "pixels_per_county") cfg.synth.pixels_per_county = to_int(value, key);
            else if (key == "yield_fn") cfg.synth.yield_fn = yield_fn_from_name(value);
            else if (key == "vod_noise_std") cfg.synth.vod_noise_std = to_double(value, key);
            else if (key == "gap_prob") cfg.synth.gap_prob = to_double(value, key);
            else if (key == "yield_noise_frac") cfg.synth.yield_noise_frac = to_double(value, key);
            else if (key == "forecast_month_start") cfg.forecast_month_start = to_int(value, key);
            else if (key == "forecast_month_end") cfg.forecast_month_end = to_int(value, key);
            else if (key == "threads") cfg.threads = to_int(value, key);
            else
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
        } catch (const ParameterError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }

    if (cfg.years.empty()) throw ConfigError("config needs at least one year");
    if (cfg.predictors.empty()) throw ConfigError("config needs at least one predictor");
    if (cfg.models.empty()) throw ConfigError("config needs at least one model");
    if (cfg.threads < 1) throw ConfigError("threads must be positive");
    if (cfg.forecast_month_start < 4 || cfg.forecast_month_end > 10 ||
        cfg.forecast_month_start > cfg.forecast_month_end)
        throw ConfigError("forecast months must satisfy 4 <= start <= end <= 10");
    if (cfg.cv.train_fraction <= 0.0 || cfg.cv.train_fraction >= 1.0)
        throw ConfigError("train_fraction must lie strictly between 0 and 1");
    if (cfg.cv.repetitions < 1) throw ConfigError("repetitions must be positive");
    if (cfg.cv.inner_folds < 2) throw ConfigError("inner_folds must be at least 2");
    if (cfg.cv.lambda_grid.empty() || cfg.cv.sigma_factor_grid.empty())
        throw ConfigError("hyperparameter grids must be non-empty");
    for (double l : cfg.cv.lambda_grid)
        if (l <= 0.0) throw ConfigError("lambda_grid entries must be positive");
    for (double f : cfg.cv.sigma_factor_grid)
        if (f <= 0.0) throw ConfigError("sigma_factors entries must be positive");
    if (cfg.lag_cfg.lag_min < 0 || cfg.lag_cfg.lag_min > cfg.lag_cfg.lag_max)
        throw ConfigError("lag bounds must satisfy 0 <= lag_min <= lag_max");
    if (cfg.lag_cfg.min_overlap_days < 2)
        throw ConfigError("min_overlap_days must be at least 2");
    if (cfg.preprocess.smoothing_window < 1 || cfg.preprocess.smoothing_window % 2 == 0)
        throw ConfigError("smoothing_window must be a positive odd number of days");
    if (cfg.preprocess.p_max < 1) throw ConfigError("p_max must be positive");
    if (cfg.preprocess.min_range_days < 0) throw ConfigError("min_range_days must be non-negative");
    if (cfg.synth.n_counties < 1 || cfg.synth.pixels_per_county < 1)
        throw ConfigError("synthetic benchmark sizes must be positive");
    if (cfg.synth.vod_noise_std < 0.0 || cfg.synth.yield_noise_frac < 0.0)
        throw ConfigError("noise levels must be non-negative");
    if (cfg.synth.gap_prob < 0.0 || cfg.synth.gap_prob >= 1.0)
        throw ConfigError("gap_prob must lie in [0, 1)");
    cfg.synth.year = cfg.years.front();
    cfg.cv.threads = cfg.threads;
    return cfg;
}

YearData load_year(const AppConfig& cfg, int year) {
    if (cfg.pixels.empty() || cfg.survey.empty() || cfg.counties.empty())
        throw ConfigError("config must set pixels, survey and counties paths");

    YearData yd;
    yd.year = year;
    UnitTable units = cfg.units.empty() ? UnitTable::defaults() : read_units_config(cfg.units);
    std::vector<PixelSeries> pixels = read_pixels_csv(substitute_year(cfg.pixels, year));
    std::vector<CountyGeometry> counties = read_counties_geojson(cfg.counties);
    yd.survey = read_survey_csv(cfg.survey, units);
    if (!cfg.seasons.empty()) yd.seasons = read_seasons_csv(cfg.seasons);
    yd.counties =
        build_county_data(pixels, counties, cfg.preprocess, &yd.screening, cfg.threads);
    return yd;
}

} // namespace cropfuse
