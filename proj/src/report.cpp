#include "cropfuse/report.hpp"

#include "cropfuse/csv.hpp"
#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace cropfuse {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InsufficientDataError("percentile of an empty sample");
    if (q < 0.0 || q > 100.0) throw ParameterError("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    double pos = q / 100.0 * double(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    double frac = pos - double(lo);
    return (1.0 - frac) * values[lo] + frac * values[lo + 1];
}

std::string month_short_name(int month) {
    static const char* names[12] = {"jan", "feb", "mar", "apr", "may", "jun",
                                    "jul", "aug", "sep", "oct", "nov", "dec"};
    if (month < 1 || month > 12) throw ParameterError("month out of range");
    return names[month - 1];
}

namespace {

std::string window_label(int month) { return month == 0 ? "full" : month_short_name(month); }

int month_from_label(const std::string& label) {
    if (label == "full") return 0;
    for (int m = 1; m <= 12; ++m)
        if (month_short_name(m) == label) return m;
    throw DataError("unknown window label '" + label + "'");
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pm(double mean, double sd, int decimals) {
    return fmt_fixed(mean, decimals) + " +/- " + fmt_fixed(sd, decimals);
}

} // namespace

void write_results_csv(const std::string& path, const std::vector<RunResult>& results) {
    CsvWriter w(path);
    w.row({"scenario", "predictor", "model", "window", "n", "t", "rep", "me", "rmse", "r2",
           "status", "note"});
    for (const auto& r : results) {
        if (!r.ok) {
            w.row({scenario_name(r.scenario), predictor_name(r.predictor),
                   model_kind_name(r.model), window_label(r.window_end_month), "", "", "", "",
                   "", "", "missing", r.note});
            continue;
        }
        for (std::size_t rep = 0; rep < r.eval.reps.size(); ++rep) {
            const EvalStats& s = r.eval.reps[rep];
            w.row({scenario_name(r.scenario), predictor_name(r.predictor),
                   model_kind_name(r.model), window_label(r.window_end_month),
                   std::to_string(r.n), std::to_string(r.t), std::to_string(rep),
                   fmt_double(s.me), fmt_double(s.rmse), fmt_double(s.r2), "ok", ""});
        }
    }
}

std::vector<RunResult> read_results_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    std::size_t c_scen = csv.require_column("scenario");
    std::size_t c_pred = csv.require_column("predictor");
    std::size_t c_model = csv.require_column("model");
    std::size_t c_window = csv.require_column("window");
    std::size_t c_n = csv.require_column("n");
    std::size_t c_t = csv.require_column("t");
    std::size_t c_me = csv.require_column("me");
    std::size_t c_rmse = csv.require_column("rmse");
    std::size_t c_r2 = csv.require_column("r2");
    std::size_t c_status = csv.require_column("status");
    std::size_t c_note = csv.require_column("note");

    std::vector<RunResult> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        std::string key = row[c_scen] + "|" + row[c_pred] + "|" + row[c_model] + "|" +
                          row[c_window];
        auto [it, fresh] = index.try_emplace(key, out.size());
        if (fresh) {
            RunResult rr;
            rr.scenario = scenario_from_name(row[c_scen]);
            rr.predictor = predictor_from_name(row[c_pred]);
            rr.model = model_kind_from_name(row[c_model]);
            rr.window_end_month = month_from_label(row[c_window]);
            out.push_back(std::move(rr));
        }
        RunResult& rr = out[it->second];
        if (row[c_status] == "missing") {
            rr.ok = false;
            rr.note = row[c_note];
            continue;
        }
        rr.ok = true;
        rr.n = parse_int(row[c_n], ctx + " n");
        rr.t = parse_int(row[c_t], ctx + " t");
        EvalStats s;
        s.me = parse_double(row[c_me], ctx + " me");
        s.rmse = parse_double(row[c_rmse], ctx + " rmse");
        s.r2 = parse_double(row[c_r2], ctx + " r2");
        rr.eval.reps.push_back(s);
    }

    for (auto& rr : out) {
        if (!rr.ok) continue;
        auto agg = [&](auto field) {
            double m = 0.0;
            for (const auto& s : rr.eval.reps) m += field(s);
            m /= rr.eval.reps.size();
            double ss = 0.0;
            for (const auto& s : rr.eval.reps) ss += (field(s) - m) * (field(s) - m);
            double sd = rr.eval.reps.size() > 1 ? std::sqrt(ss / (rr.eval.reps.size() - 1)) : 0.0;
            return std::pair<double, double>{m, sd};
        };
        std::tie(rr.eval.mean.me, rr.eval.stdev.me) =
            agg([](const EvalStats& s) { return s.me; });
        std::tie(rr.eval.mean.rmse, rr.eval.stdev.rmse) =
            agg([](const EvalStats& s) { return s.rmse; });
        std::tie(rr.eval.mean.r2, rr.eval.stdev.r2) =
            agg([](const EvalStats& s) { return s.r2; });
    }
    return out;
}

void write_county_csv(const std::string& path, const std::vector<CountyPrediction>& rows) {
    CsvWriter w(path);
    w.row({"scenario", "predictor", "model", "county_id", "year", "survey_yield",
           "predicted_yield", "residual", "relative_error_pct"});
    for (const auto& c : rows)
        w.row({scenario_name(c.scenario), predictor_name(c.predictor),
               model_kind_name(c.model), c.county_id, std::to_string(c.year),
               fmt_double(c.survey_yield), fmt_double(c.predicted_yield),
               fmt_double(c.residual),
               c.relative_defined ? fmt_double(c.relative_error_pct) : ""});
}

std::vector<CountyPrediction> read_county_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    std::size_t c_scen = csv.require_column("scenario");
    std::size_t c_pred = csv.require_column("predictor");
    std::size_t c_model = csv.require_column("model");
    std::size_t c_id = csv.require_column("county_id");
    std::size_t c_year = csv.require_column("year");
    std::size_t c_survey = csv.require_column("survey_yield");
    std::size_t c_predy = csv.require_column("predicted_yield");
    std::size_t c_resid = csv.require_column("residual");
    std::size_t c_rel = csv.require_column("relative_error_pct");

    std::vector<CountyPrediction> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        CountyPrediction c;
        c.scenario = scenario_from_name(row[c_scen]);
        c.predictor = predictor_from_name(row[c_pred]);
        c.model = model_kind_from_name(row[c_model]);
        c.county_id = row[c_id];
        c.year = parse_int(row[c_year], ctx + " year");
        c.survey_yield = parse_double(row[c_survey], ctx + " survey_yield");
        c.predicted_yield = parse_double(row[c_predy], ctx + " predicted_yield");
        c.residual = parse_double(row[c_resid], ctx + " residual");
        c.relative_defined = !row[c_rel].empty();
        if (c.relative_defined)
            c.relative_error_pct = parse_double(row[c_rel], ctx + " relative_error_pct");
        out.push_back(std::move(c));
    }
    return out;
}

std::string comparison_table(const std::vector<RunResult>& results) {
    std::ostringstream os;
    os << pad("scenario", 10) << pad("predictor", 16) << pad("model", 7) << pad("window", 8)
       << pad("N", 6) << pad("T", 6) << pad("ME (x100)", 16) << pad("RMSE (x100)", 18)
       << "R2\n";
    os << std::string(100, '-') << "\n";
    for (const auto& r : results) {
        os << pad(scenario_name(r.scenario), 10) << pad(predictor_name(r.predictor), 16)
           << pad(model_kind_name(r.model), 7) << pad(window_label(r.window_end_month), 8);
        if (!r.ok) {
            os << pad("-", 6) << pad("-", 6) << "missing (" << r.note << ")\n";
            continue;
        }
        os << pad(std::to_string(r.n), 6) << pad(std::to_string(r.t), 6)
           << pad(pm(100.0 * r.eval.mean.me, 100.0 * r.eval.stdev.me, 2), 16)
           << pad(pm(100.0 * r.eval.mean.rmse, 100.0 * r.eval.stdev.rmse, 2), 18)
           << pm(r.eval.mean.r2, r.eval.stdev.r2, 2) << "\n";
    }
    return os.str();
}

std::string residual_table(const std::vector<CountyPrediction>& rows) {
    std::ostringstream os;
    if (rows.empty()) return "no county predictions\n";

    std::vector<double> survey;
    for (const auto& c : rows) survey.push_back(c.survey_yield);
    double q25 = percentile(survey, 25), q50 = percentile(survey, 50),
           q75 = percentile(survey, 75);
    double edges[5] = {percentile(survey, 0), q25, q50, q75, percentile(survey, 100)};

    os << "residuals by survey-yield quartile (kg/m^2 x100)\n";
    os << pad("survey bin", 26) << pad("n", 6) << pad("mean", 10) << pad("p25", 10)
       << "p75\n";
    os << std::string(60, '-') << "\n";
    for (int b = 0; b < 4; ++b) {
        std::vector<double> res;
        for (const auto& c : rows) {
            bool last = b == 3;
            if (c.survey_yield >= edges[b] &&
                (last ? c.survey_yield <= edges[b + 1] : c.survey_yield < edges[b + 1]))
                res.push_back(c.residual);
        }
        std::string bin = "[" + fmt_fixed(edges[b], 3) + ", " + fmt_fixed(edges[b + 1], 3) +
                          (b == 3 ? "]" : ")");
        if (res.empty()) {
            os << pad(bin, 26) << pad("0", 6) << "-\n";
            continue;
        }
        double mean = 0.0;
        for (double v : res) mean += v;
        mean /= res.size();
        os << pad(bin, 26) << pad(std::to_string(res.size()), 6)
           << pad(fmt_fixed(100.0 * mean, 2), 10)
           << pad(fmt_fixed(100.0 * percentile(res, 25), 2), 10)
           << fmt_fixed(100.0 * percentile(res, 75), 2) << "\n";
    }
    return os.str();
}

std::string limitation_header() {
    return "NOTE: accuracy on real satellite/survey inputs depends on upstream data\n"
           "reconstruction (gridding, masking, survey coverage) and is not validated\n"
           "against any external benchmark; treat absolute scores as indicative only.\n";
}

} // namespace cropfuse
