#include "cropfuse/csv.hpp"
#include "cropfuse/errors.hpp"
#include "cropfuse/pipeline.hpp"
#include "cropfuse/report.hpp"
#include "cropfuse/synth.hpp"
#include "cropfuse/util.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace cropfuse;

namespace {

struct CliArgs {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    int threads = 0; // 0 = take from config
};

AppConfig load_config(const CliArgs& args, bool required) {
    AppConfig cfg;
    if (!args.config.empty())
        cfg = read_app_config(args.config);
    else if (required)
        throw ConfigError("this command requires --config");
    if (args.threads > 0) cfg.threads = args.threads;
    cfg.cv.seed = args.seed;
    cfg.cv.threads = cfg.threads;
    return cfg;
}

std::ofstream open_text(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write " + path);
    return out;
}

std::string timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M:%S", std::gmtime(&now));
    return buf;
}

template <typename T, typename NameFn>
std::string join_names(const std::vector<T>& items, NameFn name) {
    std::string out;
    for (const T& it : items) {
        if (!out.empty()) out += ",";
        out += name(it);
    }
    return out;
}

void echo_config(std::ostream& os, const CliArgs& args, const AppConfig& cfg) {
    os << "seed: " << args.seed << "\n";
    os << "scenario: " << scenario_name(cfg.scenario) << "\n";
    os << "years:";
    for (int y : cfg.years) os << " " << y;
    os << "\npredictors:";
    for (auto p : cfg.predictors) os << " " << predictor_name(p);
    os << "\nmodels:";
    for (auto m : cfg.models) os << " " << model_kind_name(m);
    os << "\ntrain_fraction: " << fmt_double(cfg.cv.train_fraction)
       << "  repetitions: " << cfg.cv.repetitions << "  inner_folds: " << cfg.cv.inner_folds
       << "\nlag window: [" << cfg.lag_cfg.lag_min << ", " << cfg.lag_cfg.lag_max
       << "] min overlap " << cfg.lag_cfg.min_overlap_days << " days\n";
}

// -- synth --------------------------------------------------------------------

int cmd_synth(const CliArgs& args) {
    AppConfig cfg = load_config(args, false);
    SynthBenchmark b = generate_benchmark(cfg.synth, args.seed);
    write_benchmark(b, args.out);

    std::string pixels = args.out + "/pixels_{year}.csv";
    {
        // point at the generated files and carry the caller's settings so
        // downstream commands run with the same knobs
        std::ofstream run = open_text(args.out + "/run.config");
        run << "pixels = " << pixels << "\n";
        run << "survey = " << args.out << "/survey.csv\n";
        run << "counties = " << args.out << "/counties.geojson\n";
        run << "seasons = " << args.out << "/seasons.csv\n";
        run << "years = " << b.options.year << "\n";
        run << "scenario = " << scenario_name(cfg.scenario) << "\n";
        run << "predictors = " << join_names(cfg.predictors, predictor_name) << "\n";
        run << "models = " << join_names(cfg.models, model_kind_name) << "\n";
        run << "train_fraction = " << fmt_double(cfg.cv.train_fraction) << "\n";
        run << "repetitions = " << cfg.cv.repetitions << "\n";
        run << "inner_folds = " << cfg.cv.inner_folds << "\n";
        run << "lag_min = " << cfg.lag_cfg.lag_min << "\n";
        run << "lag_max = " << cfg.lag_cfg.lag_max << "\n";
        run << "min_overlap_days = " << cfg.lag_cfg.min_overlap_days << "\n";
        run << "smoothing_window = " << cfg.preprocess.smoothing_window << "\n";
        run << "p_max = " << cfg.preprocess.p_max << "\n";
        run << "min_range_days = " << cfg.preprocess.min_range_days << "\n";
        run << "forecast_month_start = " << cfg.forecast_month_start << "\n";
        run << "forecast_month_end = " << cfg.forecast_month_end << "\n";
        run << "threads = " << cfg.threads << "\n";
    }
    std::ofstream os = open_text(args.out + "/synth_summary.txt");
    os << "synthetic benchmark\n";
    os << "seed: " << args.seed << "\n";
    os << "counties: " << b.options.n_counties
       << "  pixels per county per sensor: " << b.options.pixels_per_county << "\n";
    os << "yield_fn: " << yield_fn_name(b.options.yield_fn) << "\n";
    os << "vod noise std: " << fmt_double(b.options.vod_noise_std)
       << "  gap prob: " << fmt_double(b.options.gap_prob) << "\n";
    std::cout << "wrote benchmark with " << b.truth.size() << " counties to " << args.out
              << "\n";
    return 0;
}

// -- ingest -------------------------------------------------------------------

int cmd_ingest(const CliArgs& args) {
    AppConfig cfg = load_config(args, true);
    if (cfg.pixels.empty() || cfg.survey.empty() || cfg.counties.empty())
        throw ConfigError("config must set pixels, survey and counties paths");
    UnitTable units = cfg.units.empty() ? UnitTable::defaults() : read_units_config(cfg.units);
    std::vector<CountyRecord> survey = read_survey_csv(cfg.survey, units);
    std::vector<CountyGeometry> counties = read_counties_geojson(cfg.counties);

    CsvWriter yields(args.out + "/county_yields.csv");
    yields.row({"county_id", "year", "weighted_yield_kg_m2"});
    CsvWriter crops(args.out + "/county_crops.csv");
    crops.row({"county_id", "year", "crop", "yield_kg_m2", "proportion", "area_acres"});
    for (const auto& rec : survey) {
        yields.row({rec.county_id, std::to_string(rec.year), fmt_double(rec.weighted_yield)});
        for (const auto& c : rec.crops)
            crops.row({rec.county_id, std::to_string(rec.year), c.crop,
                       fmt_double(rec.crop_yield_kg_m2.at(c.crop)),
                       fmt_double(rec.proportions.at(c.crop)),
                       fmt_double(c.area_planted_acres)});
    }

    std::ofstream os = open_text(args.out + "/ingest_summary.txt");
    os << "survey records: " << survey.size() << "\n";
    os << "county geometries: " << counties.size() << "\n";
    for (int year : cfg.years) {
        std::vector<PixelSeries> pixels = read_pixels_csv(substitute_year(cfg.pixels, year));
        auto assignment = assign_pixels_to_counties(pixels, counties);
        CsvWriter w(args.out + "/assignment_" + std::to_string(year) + ".csv");
        w.row({"county_id", "n_evi_pixels", "n_vod_pixels"});
        std::size_t assigned = 0;
        for (const auto& [county_id, idxs] : assignment) {
            int n_evi = 0, n_vod = 0;
            for (std::size_t i : idxs)
                (pixels[i].sensor == Sensor::evi ? n_evi : n_vod) += 1;
            w.row({county_id, std::to_string(n_evi), std::to_string(n_vod)});
            assigned += idxs.size();
        }
        os << "year " << year << ": " << pixels.size() << " pixels, " << assigned
           << " assigned to " << assignment.size() << " counties\n";
    }
    std::cout << "ingest artifacts written to " << args.out << "\n";
    return 0;
}

// -- preprocess -----------------------------------------------------------------

int cmd_preprocess(const CliArgs& args) {
    AppConfig cfg = load_config(args, true);
    std::ofstream os = open_text(args.out + "/preprocess_summary.txt");
    for (int year : cfg.years) {
        YearData yd = load_year(cfg, year);
        std::string suffix = "_" + std::to_string(year) + ".csv";

        CsvWriter sw(args.out + "/screening" + suffix);
        sw.row({"pixel_id", "dropped", "reason", "min_max_gap_days"});
        std::map<std::string, int> reason_counts;
        for (const auto& rep : yd.screening) {
            sw.row({rep.pixel_id, rep.dropped ? "1" : "0", screen_reason_name(rep.reason),
                    std::to_string(rep.min_max_gap_days)});
            reason_counts[screen_reason_name(rep.reason)] += 1;
        }

        CsvWriter cw(args.out + "/county_series" + suffix);
        cw.row({"county_id", "sensor", "doy", "value"});
        for (const auto& cd : yd.counties) {
            for (std::size_t i = 0; i < cd.evi.size(); ++i)
                cw.row({cd.county_id, "EVI", std::to_string(cd.evi.doy[i]),
                        fmt_double(cd.evi.value[i])});
            for (std::size_t i = 0; i < cd.vod.size(); ++i)
                cw.row({cd.county_id, "VOD", std::to_string(cd.vod.doy[i]),
                        fmt_double(cd.vod.value[i])});
        }

        os << "year " << year << ": " << yd.counties.size() << " counties with both sensors\n";
        for (const auto& [reason, count] : reason_counts)
            os << "  vod pixels " << reason << ": " << count << "\n";
    }
    std::cout << "preprocess artifacts written to " << args.out << "\n";
    return 0;
}

// -- metrics --------------------------------------------------------------------

int cmd_metrics(const CliArgs& args) {
    AppConfig cfg = load_config(args, true);
    std::ofstream os = open_text(args.out + "/metrics_summary.txt");
    for (int year : cfg.years) {
        YearData yd = load_year(cfg, year);
        std::map<std::string, const SeasonWindow*> season_of;
        for (const auto& s : yd.seasons) season_of[s.county_id] = &s;

        CsvWriter w(args.out + "/metrics_" + std::to_string(year) + ".csv");
        w.row({"county_id", "sensor", "metric_name", "value"});

        struct Row {
            std::string county_id;
            MetricBattery evi, vod;
            LagResult lag;
            bool lag_ok;
        };
        std::vector<Row> rows;
        int window_failures = 0;
        for (const auto& cd : yd.counties) {
            try {
                SeasonWindow window;
                if (auto it = season_of.find(cd.county_id); it != season_of.end())
                    window = *it->second;
                else
                    window = estimate_season_window(cd.evi, cd.county_id);
                Row row;
                row.county_id = cd.county_id;
                row.evi = metric_battery(cd.evi, window);
                row.vod = metric_battery(cd.vod, window);
                row.lag_ok = true;
                try {
                    row.lag = evi_vod_lag(cd.evi, cd.vod, cfg.lag_cfg);
                } catch (const InsufficientOverlapError&) {
                    row.lag_ok = false;
                }
                rows.push_back(std::move(row));
            } catch (const Error&) {
                ++window_failures;
            }
        }

        auto write_battery = [&](const std::string& id, const std::string& sensor,
                                 const MetricBattery& b) {
            Eigen::VectorXd v = b.to_vector();
            for (int j = 0; j < MetricBattery::kCount; ++j)
                w.row({id, sensor, MetricBattery::names()[j], fmt_double(v(j))});
        };

        // PC1 is fitted per sensor across the year's counties, then each
        // county's score is emitted alongside its battery.
        bool pc1_ok = rows.size() >= MetricBattery::kCount;
        Pc1Projection proj_evi, proj_vod;
        if (pc1_ok) {
            Eigen::MatrixXd be(rows.size(), MetricBattery::kCount);
            Eigen::MatrixXd bv(rows.size(), MetricBattery::kCount);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                be.row(i) = rows[i].evi.to_vector();
                bv.row(i) = rows[i].vod.to_vector();
            }
            try {
                proj_evi = fit_pc1(be);
                proj_vod = fit_pc1(bv);
            } catch (const Error&) {
                pc1_ok = false;
            }
        }

        for (const auto& row : rows) {
            write_battery(row.county_id, "EVI", row.evi);
            write_battery(row.county_id, "VOD", row.vod);
            if (pc1_ok) {
                w.row({row.county_id, "EVI", "pc1",
                       fmt_double(project_pc1(row.evi, proj_evi))});
                w.row({row.county_id, "VOD", "pc1",
                       fmt_double(project_pc1(row.vod, proj_vod))});
            }
            if (row.lag_ok) {
                w.row({row.county_id, "EVI_VOD", "lag_days",
                       std::to_string(row.lag.lag_days)});
                w.row({row.county_id, "EVI_VOD", "peak_correlation",
                       fmt_double(row.lag.peak_correlation)});
            }
        }

        os << "year " << year << ": metrics for " << rows.size() << " counties";
        if (window_failures > 0) os << " (" << window_failures << " without a season window)";
        os << "\n";
        if (pc1_ok) {
            os << "  EVI pc1 lambda1 " << fmt_double(proj_evi.lambda1)
               << (proj_evi.unstable ? " (unstable)" : "") << "\n";
            os << "  VOD pc1 lambda1 " << fmt_double(proj_vod.lambda1)
               << (proj_vod.unstable ? " (unstable)" : "") << "\n";
        }
    }
    std::cout << "metric artifacts written to " << args.out << "\n";
    return 0;
}

// -- estimate / forecast ----------------------------------------------------------

struct CellOutcome {
    RunResult result;
    std::vector<CountyPrediction> counties;
};

CellOutcome run_cell(const std::vector<YearData>& years, const AppConfig& cfg,
                     Predictor predictor, ModelKind model, int window_end_month,
                     std::uint64_t seed) {
    CellOutcome out;
    RunResult& rr = out.result;
    rr.scenario = cfg.scenario;
    rr.predictor = predictor;
    rr.model = model;
    rr.window_end_month = window_end_month;

    try {
        std::vector<Dataset> per_year;
        for (const auto& yd : years) {
            DatasetSpec spec;
            spec.scenario = cfg.scenario;
            spec.predictor = predictor;
            spec.lag = cfg.lag_cfg;
            if (window_end_month > 0)
                spec.truncate_doy = month_end_doy(yd.year, window_end_month);
            per_year.push_back(
                build_dataset(yd.counties, yd.survey, yd.seasons, spec, yd.year).data);
        }
        Dataset pooled = pool_years(per_year);

        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        dataset_to_matrix(pooled, X, y);
        rr.n = int(X.rows());
        rr.t = int(X.cols());

        CvConfig cv = cfg.cv;
        cv.seed = seed;
        rr.eval = run_cv_experiment(X, y, model, cv);
        rr.ok = true;

        // In-sample predictions from a full-data refit, for the per-county
        // residual tables.
        HyperParams hp = select_hyperparams(X, y, model, cv, mix_seed(seed, 0xa11f));
        Eigen::VectorXd pred = model == ModelKind::rlr
                                   ? predict(fit_rlr(X, y, hp.lambda), X)
                                   : predict(fit_krr(X, y, hp.lambda, hp.sigma), X);
        for (std::size_t i = 0; i < pooled.size(); ++i) {
            CountyPrediction cp;
            cp.scenario = cfg.scenario;
            cp.predictor = predictor;
            cp.model = model;
            cp.county_id = pooled[i].county_id;
            cp.year = pooled[i].year;
            cp.survey_yield = pooled[i].label;
            cp.predicted_yield = pred(i);
            cp.residual = pred(i) - pooled[i].label;
            cp.relative_defined = pooled[i].label > 0.0;
            if (cp.relative_defined)
                cp.relative_error_pct = 100.0 * std::abs(cp.residual) / pooled[i].label;
            out.counties.push_back(std::move(cp));
        }
    } catch (const Error& e) {
        rr.ok = false;
        rr.note = e.what();
        out.counties.clear();
    }
    return out;
}

int cmd_estimate(const CliArgs& args) {
    AppConfig cfg = load_config(args, true);
    std::vector<YearData> years;
    for (int y : cfg.years) years.push_back(load_year(cfg, y));

    std::vector<RunResult> results;
    std::vector<CountyPrediction> counties;
    for (Predictor p : cfg.predictors) {
        for (ModelKind m : cfg.models) {
            CellOutcome cell = run_cell(years, cfg, p, m, 0, args.seed);
            results.push_back(cell.result);
            counties.insert(counties.end(), cell.counties.begin(), cell.counties.end());
        }
    }

    write_results_csv(args.out + "/estimate_results.csv", results);
    write_county_csv(args.out + "/county_predictions.csv", counties);

    std::ofstream os = open_text(args.out + "/estimate_summary.txt");
    os << "yield estimation run  (" << timestamp() << " UTC)\n\n";
    os << limitation_header() << "\n";
    echo_config(os, args, cfg);
    os << "\n" << comparison_table(results);
    std::cout << comparison_table(results);
    std::cout << "estimate artifacts written to " << args.out << "\n";
    return 0;
}

int cmd_forecast(const CliArgs& args) {
    AppConfig cfg = load_config(args, true);
    std::vector<YearData> years;
    for (int y : cfg.years) years.push_back(load_year(cfg, y));

    std::vector<RunResult> results;
    for (Predictor p : cfg.predictors) {
        for (ModelKind m : cfg.models) {
            for (int month = cfg.forecast_month_start; month <= cfg.forecast_month_end;
                 ++month) {
                results.push_back(run_cell(years, cfg, p, m, month, args.seed).result);
            }
        }
    }

    write_results_csv(args.out + "/forecast_results.csv", results);
    std::ofstream os = open_text(args.out + "/forecast_summary.txt");
    os << "within-season forecast run  (" << timestamp() << " UTC)\n\n";
    os << limitation_header() << "\n";
    echo_config(os, args, cfg);
    os << "\n" << comparison_table(results);
    std::cout << comparison_table(results);
    std::cout << "forecast artifacts written to " << args.out << "\n";
    return 0;
}

int cmd_report(const CliArgs& args) {
    bool found = false;
    std::ofstream os = open_text(args.out + "/report_summary.txt");
    os << limitation_header() << "\n";
    for (const char* name : {"estimate_results.csv", "forecast_results.csv"}) {
        std::string path = args.out + "/" + std::string(name);
        if (!fs::exists(path)) continue;
        found = true;
        os << name << "\n" << comparison_table(read_results_csv(path)) << "\n";
    }
    std::string county_path = args.out + "/county_predictions.csv";
    if (fs::exists(county_path)) {
        found = true;
        os << residual_table(read_county_csv(county_path));
    }
    if (!found)
        throw DataError("no run artifacts found in " + args.out +
                        " (expected estimate_results.csv, forecast_results.csv or "
                        "county_predictions.csv)");
    std::cout << "report written to " << args.out << "/report_summary.txt\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"county-scale crop yield estimation from fused optical/microwave series"};
    app.require_subcommand(1);
    app.fallthrough();

    CliArgs args;
    app.add_option("--config", args.config, "key=value run configuration file");
    app.add_option("--seed", args.seed, "RNG seed for splits and generators");
    app.add_option("--out", args.out, "output directory");
    app.add_option("--threads", args.threads, "worker threads (overrides config)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    auto* ingest = app.add_subcommand("ingest", "read inputs and derive county labels");
    auto* preprocess =
        app.add_subcommand("preprocess", "screen, smooth and gap-fill sensor series");
    auto* metrics = app.add_subcommand("metrics", "compute per-county seasonal metrics");
    auto* estimate = app.add_subcommand("estimate", "cross-validated yield estimation");
    auto* forecast = app.add_subcommand("forecast", "truncated-window forecast sweep");
    auto* report = app.add_subcommand("report", "summarize run artifacts into tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        fs::create_directories(args.out);
        if (synth->parsed()) return cmd_synth(args);
        if (ingest->parsed()) return cmd_ingest(args);
        if (preprocess->parsed()) return cmd_preprocess(args);
        if (metrics->parsed()) return cmd_metrics(args);
        if (estimate->parsed()) return cmd_estimate(args);
        if (forecast->parsed()) return cmd_forecast(args);
        if (report->parsed()) return cmd_report(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
