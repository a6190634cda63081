#include "cropfuse/synth.hpp"

#include "cropfuse/csv.hpp"
#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace cropfuse {

YieldFn yield_fn_from_name(const std::string& name) {
    if (name == "linear_in_lag") return YieldFn::linear_in_lag;
    if (name == "nonlinear_in_lag") return YieldFn::nonlinear_in_lag;
    if (name == "series_functional") return YieldFn::series_functional;
    throw ParameterError("unknown yield_fn '" + name + "'");
}

std::string yield_fn_name(YieldFn fn) {
    switch (fn) {
    case YieldFn::linear_in_lag: return "linear_in_lag";
    case YieldFn::nonlinear_in_lag: return "nonlinear_in_lag";
    case YieldFn::series_functional: return "series_functional";
    }
    return "series_functional";
}

double double_logistic(double doy, const PhenoParams& p) {
    double rise = 1.0 / (1.0 + std::exp(-p.growth_rate * (doy - p.sos_doy)));
    double fall = 1.0 / (1.0 + std::exp(-p.senescence_rate * (doy - p.eos_doy)));
    return std::max(p.base + p.amplitude * (rise - fall), p.base - 1e-9);
}

SensorPair generate_pair(const PhenoParams& p, const SynthOptions& opt, std::uint64_t seed) {
    if (p.amplitude <= 0.0 || p.sos_doy >= p.eos_doy || p.growth_rate <= 0.0 ||
        p.senescence_rate <= 0.0 || p.gap_prob < 0.0 || p.gap_prob >= 1.0)
        throw ParameterError("invalid phenology parameters");

    SensorPair out;
    for (int i = 0; i < opt.composite_count; ++i) {
        int d = opt.composite_start + i * opt.composite_step;
        out.evi.doy.push_back(d);
        out.evi.value.push_back(double_logistic(d, p));
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, p.noise_std > 0.0 ? p.noise_std : 1.0);
    for (int d = opt.doy_start; d <= opt.doy_end; ++d) {
        double v = double_logistic(d - p.vod_lag, p);
        if (p.noise_std > 0.0) v += noise(rng);
        bool gapped = p.gap_prob > 0.0 && unit(rng) < p.gap_prob;
        out.vod.doy.push_back(d);
        out.vod.value.push_back(gapped ? kMissing : v);
        out.vod_quality.push_back(gapped ? 0 : 1);
    }
    return out;
}

namespace {

// Relative variance contributions of the generating parameters to the
// series_functional yield. Season start carries the most signal, with the
// water-uptake lag next; the remainder is split between the two sensor
// amplitudes and season length. Full curves see the phenology terms, the
// lag metric only its own share, and single metrics only an amplitude, so
// richer features genuinely carry more usable signal.
struct YieldShares {
    double lag = 0.36, sos = 0.42, amp_e = 0.08, amp_v = 0.08, len = 0.03;
};

constexpr double kMeanYield = 0.9;  // kg/m^2, corn-belt-like scale
constexpr double kParamStd = 0.18;  // yield spread driven by parameters

double share_weight(double share, double total) {
    return kParamStd * std::sqrt(12.0 * share / total);
}

struct CountyDraw {
    double u_lag, u_sos, u_len, u_ampe, u_ampv;
    int lag;
};

double yield_from(YieldFn fn, const CountyDraw& d, double noise) {
    double lag_n = (d.lag - 6) / 73.0;
    switch (fn) {
    case YieldFn::linear_in_lag: return 0.55 + 0.7 * lag_n + noise;
    case YieldFn::nonlinear_in_lag:
        return 0.55 + 0.7 * (1.0 - std::exp(-3.0 * lag_n)) / (1.0 - std::exp(-3.0)) + noise;
    case YieldFn::series_functional: {
        YieldShares s;
        double total = s.lag + s.sos + s.amp_e + s.amp_v + s.len;
        double y = kMeanYield + noise;
        y += share_weight(s.lag, total) * (lag_n - 0.5);
        y += share_weight(s.sos, total) * (d.u_sos - 0.5);
        y += share_weight(s.amp_e, total) * (d.u_ampe - 0.5);
        y += share_weight(s.amp_v, total) * (d.u_ampv - 0.5);
        y += share_weight(s.len, total) * (d.u_len - 0.5);
        return y;
    }
    }
    return kMeanYield;
}

/// Applies a sensor gain/offset so VOD gets its own base level and
/// amplitude without changing the correlation structure.
void rescale(Series& s, double base_from, double base_to, double gain) {
    for (double& v : s.value)
        if (std::isfinite(v)) v = base_to + (v - base_from) * gain;
}

CountyGeometry grid_cell(const std::string& county_id, int k, int grid_cols) {
    constexpr double kLon0 = -96.0, kLat0 = 38.0, kCell = 0.2;
    double x0 = kLon0 + (k % grid_cols) * kCell;
    double y0 = kLat0 + (k / grid_cols) * kCell;
    CountyGeometry g;
    g.county_id = county_id;
    g.rings.push_back({{x0, y0},
                       {x0 + kCell, y0},
                       {x0 + kCell, y0 + kCell},
                       {x0, y0 + kCell},
                       {x0, y0}});
    return g;
}

} // namespace

SynthBenchmark generate_benchmark(const SynthOptions& opt, std::uint64_t seed) {
    if (opt.n_counties < 20) throw ParameterError("benchmark needs at least 20 counties");
    if (opt.pixels_per_county < 1) throw ParameterError("need at least one pixel per county");

    SynthBenchmark b;
    b.options = opt;
    b.seed = seed;
    int grid_cols = static_cast<int>(std::ceil(std::sqrt(double(opt.n_counties))));
    UnitTable units = UnitTable::defaults();

    for (int k = 0; k < opt.n_counties; ++k) {
        std::mt19937_64 rng(mix_seed(seed, 0xc027, k));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        CountyDraw d;
        d.u_lag = unit(rng);
        d.u_sos = unit(rng);
        d.u_len = unit(rng);
        d.u_ampe = unit(rng);
        d.u_ampv = unit(rng);
        d.lag = std::min(79, 6 + static_cast<int>(d.u_lag * 74.0));

        SynthCounty county;
        county.county_id = std::to_string(90001 + k);
        county.true_lag = d.lag;

        PhenoParams& pe = county.evi_params;
        pe.sos_doy = 122.0 + 18.0 * d.u_sos;
        pe.eos_doy = pe.sos_doy + 95.0 + 25.0 * d.u_len;
        pe.amplitude = 0.38 + 0.14 * d.u_ampe;
        pe.base = 0.10 + 0.04 * unit(rng);
        pe.growth_rate = 0.085 + 0.03 * unit(rng);
        pe.senescence_rate = 0.065 + 0.03 * unit(rng);
        pe.vod_lag = d.lag;
        pe.noise_std = opt.vod_noise_std;
        pe.gap_prob = opt.gap_prob;

        county.vod_params = pe;
        county.vod_params.amplitude = 0.26 + 0.12 * d.u_ampv;
        county.vod_params.base = 0.22 + 0.06 * unit(rng);

        std::normal_distribution<double> yield_noise(0.0, opt.yield_noise_frac * kMeanYield);
        county.true_yield = std::max(0.05, yield_from(opt.yield_fn, d, yield_noise(rng)));

        std::exponential_distribution<double> expo(1.0);
        double mix[3] = {expo(rng), expo(rng), expo(rng)};
        double mix_sum = mix[0] + mix[1] + mix[2];
        static const char* kCrops[3] = {"corn", "soybean", "wheat"};
        // Per-crop yield factors around the county mean; chosen so the
        // area-weighted survey average inverts exactly to true_yield.
        static const double kFactor[3] = {1.3, 0.7, 0.5};
        double denom = 0.0;
        for (int c = 0; c < 3; ++c) {
            county.crop_mix[kCrops[c]] = mix[c] / mix_sum;
            denom += (mix[c] / mix_sum) * kFactor[c];
        }

        double total_area = 60000.0 + 60000.0 * unit(rng);
        std::vector<CropEntry> entries;
        for (int c = 0; c < 3; ++c) {
            double y_kg = county.true_yield * kFactor[c] / denom;
            CropEntry e;
            e.crop = kCrops[c];
            e.area_planted_acres = county.crop_mix[kCrops[c]] * total_area;
            if (c < 2) {
                e.unit = YieldUnit::bu_per_acre;
                e.yield_native =
                    y_kg * kM2PerAcre / (kKgPerLb * units.pounds_per_bushel.at(kCrops[c]));
            } else {
                e.unit = YieldUnit::lb_per_acre;
                e.yield_native = y_kg * kM2PerAcre / kKgPerLb;
            }
            entries.push_back(e);
        }
        b.survey.push_back(make_county_record(county.county_id, opt.year, entries, units));

        county.season.county_id = county.county_id;
        county.season.start_doy = std::max(opt.doy_start, int(pe.sos_doy) - 12);
        county.season.end_doy = std::min(opt.doy_end, int(pe.eos_doy) + 12);
        b.seasons.push_back(county.season);

        b.counties.push_back(grid_cell(county.county_id, k, grid_cols));
        const auto& ring = b.counties.back().rings.front();
        double x0 = ring[0][0], y0 = ring[0][1], cell = ring[1][0] - ring[0][0];

        for (int j = 0; j < opt.pixels_per_county; ++j) {
            std::mt19937_64 prng(mix_seed(seed, 0xb1e1, std::uint64_t(k) * 1024 + j));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            PhenoParams pp = pe;
            double shift = -1.5 + 3.0 * u(prng);
            double gain = 0.97 + 0.06 * u(prng);
            pp.sos_doy += shift;
            pp.eos_doy += shift;
            pp.amplitude *= gain;
            double lon = x0 + cell * (0.15 + 0.7 * u(prng));
            double lat = y0 + cell * (0.15 + 0.7 * u(prng));

            SensorPair pair =
                generate_pair(pp, opt, mix_seed(seed, 0x9a12, std::uint64_t(k) * 1024 + j));
            rescale(pair.vod, pp.base, county.vod_params.base,
                    county.vod_params.amplitude / pe.amplitude);

            PixelSeries evi;
            evi.pixel_id = county.county_id + "_e" + std::to_string(j);
            evi.lon = lon;
            evi.lat = lat;
            evi.sensor = Sensor::evi;
            evi.series = std::move(pair.evi);
            evi.quality.assign(evi.series.size(), 1);
            b.pixels.push_back(std::move(evi));

            PixelSeries vod;
            vod.pixel_id = county.county_id + "_v" + std::to_string(j);
            vod.lon = lon;
            vod.lat = lat;
            vod.sensor = Sensor::vod;
            vod.series = std::move(pair.vod);
            vod.quality = std::move(pair.vod_quality);
            b.pixels.push_back(std::move(vod));
        }
        b.truth.push_back(std::move(county));
    }
    return b;
}

void write_benchmark(const SynthBenchmark& b, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::string base = out_dir + "/";

    {
        CsvWriter w(base + "pixels_" + std::to_string(b.options.year) + ".csv");
        w.row({"pixel_id", "lon", "lat", "sensor", "doy", "value", "quality", "is_cropland"});
        for (const auto& px : b.pixels) {
            for (std::size_t i = 0; i < px.series.size(); ++i) {
                bool ok = px.quality.empty() || px.quality[i];
                w.row({px.pixel_id, fmt_double(px.lon), fmt_double(px.lat),
                       sensor_name(px.sensor), std::to_string(px.series.doy[i]),
                       ok ? fmt_double(px.series.value[i]) : "", ok ? "1" : "0",
                       px.is_cropland ? "1" : "0"});
            }
        }
    }
    {
        CsvWriter w(base + "survey.csv");
        w.row({"county_id", "year", "crop", "yield_value", "yield_unit", "area_planted_acres"});
        for (const auto& rec : b.survey) {
            for (const auto& c : rec.crops) {
                w.row({rec.county_id, std::to_string(rec.year), c.crop,
                       fmt_double(c.yield_native),
                       c.unit == YieldUnit::bu_per_acre ? "bu_acre" : "lb_acre",
                       fmt_double(c.area_planted_acres)});
            }
        }
    }
    {
        CsvWriter w(base + "seasons.csv");
        w.row({"county_id", "start_doy", "end_doy"});
        for (const auto& s : b.seasons)
            w.row({s.county_id, std::to_string(s.start_doy), std::to_string(s.end_doy)});
    }
    {
        CsvWriter w(base + "truth.csv");
        w.row({"county_id", "true_lag", "true_yield", "mix_corn", "mix_soybean", "mix_wheat",
               "sos_doy", "eos_doy", "amp_evi", "amp_vod"});
        for (const auto& t : b.truth)
            w.row({t.county_id, std::to_string(t.true_lag), fmt_double(t.true_yield),
                   fmt_double(t.crop_mix.at("corn")), fmt_double(t.crop_mix.at("soybean")),
                   fmt_double(t.crop_mix.at("wheat")), fmt_double(t.evi_params.sos_doy),
                   fmt_double(t.evi_params.eos_doy), fmt_double(t.evi_params.amplitude),
                   fmt_double(t.vod_params.amplitude)});
    }
    {
        nlohmann::json features = nlohmann::json::array();
        for (const auto& g : b.counties) {
            nlohmann::json rings = nlohmann::json::array();
            for (const auto& ring : g.rings) {
                nlohmann::json pts = nlohmann::json::array();
                for (const auto& p : ring) pts.push_back({p[0], p[1]});
                rings.push_back(pts);
            }
            features.push_back({{"type", "Feature"},
                                {"properties", {{"county_id", g.county_id}}},
                                {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
        }
        nlohmann::json doc = {{"type", "FeatureCollection"}, {"features", features}};
        std::ofstream out(base + "counties.geojson");
        if (!out) throw FileError("cannot write " + base + "counties.geojson");
        out << doc.dump(1) << "\n";
    }
}

} // namespace cropfuse
