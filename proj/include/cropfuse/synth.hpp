#pragma once

#include "cropfuse/ingest.hpp"
#include "cropfuse/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cropfuse {

/// How synthetic county yield is derived from the generating parameters.
/// linear_in_lag / nonlinear_in_lag tie yield to the injected EVI-VOD lag
/// alone; series_functional mixes lag, season timing, amplitudes, and
/// season length so that full-series models dominate single metrics.
enum class YieldFn { linear_in_lag, nonlinear_in_lag, series_functional };

YieldFn yield_fn_from_name(const std::string& name);
std::string yield_fn_name(YieldFn fn);

/// Double-logistic phenology curve parameters plus the VOD observation
/// model (shift, noise, gaps).
struct PhenoParams {
    double base = 0.1;
    double amplitude = 0.45;
    double sos_doy = 130.0;
    double eos_doy = 235.0;
    double growth_rate = 0.09;
    double senescence_rate = 0.08;
    int vod_lag = 21;
    double noise_std = 0.0;
    double gap_prob = 0.0;
};

struct SynthOptions {
    int n_counties = 200;
    int pixels_per_county = 3; // per sensor
    int year = 2015;
    int doy_start = 91; // daily VOD window (inclusive)
    int doy_end = 303;
    int composite_start = 97; // EVI composite day-of-year grid
    int composite_step = 16;
    int composite_count = 13;
    double vod_noise_std = 0.008;
    double gap_prob = 0.03;
    double yield_noise_frac = 0.05; // of the mean yield
    YieldFn yield_fn = YieldFn::series_functional;
};

/// Ground truth for one synthetic county.
struct SynthCounty {
    std::string county_id;
    std::map<std::string, double> crop_mix;
    int true_lag = 0;
    double true_yield = 0.0; // kg/m^2, before survey round-trip
    PhenoParams evi_params;
    PhenoParams vod_params;
    SeasonWindow season;
};

/// A complete benchmark: pipeline input files plus the truth needed to
/// score recovery.
struct SynthBenchmark {
    SynthOptions options;
    std::uint64_t seed = 0;
    std::vector<SynthCounty> truth;
    std::vector<PixelSeries> pixels;
    std::vector<CountyGeometry> counties;
    std::vector<CountyRecord> survey;
    std::vector<SeasonWindow> seasons;
};

/// base + amplitude * (rise sigmoid - fall sigmoid), never below base.
double double_logistic(double doy, const PhenoParams& p);

struct SensorPair {
    Series evi;                        // clean, composite day grid
    Series vod;                        // daily, noisy, NaN at gaps
    std::vector<std::uint8_t> vod_quality; // 0 where gapped
};

/// One EVI/VOD pair from a single phenology: EVI sampled at the composite
/// days, VOD shifted by vod_lag with Gaussian noise and Bernoulli gaps.
SensorPair generate_pair(const PhenoParams& p, const SynthOptions& opt, std::uint64_t seed);

/// Full multi-county benchmark with survey records whose area-weighted
/// yields invert exactly to the injected county yield.
SynthBenchmark generate_benchmark(const SynthOptions& opt, std::uint64_t seed);

/// Writes pixels_{year}.csv, survey.csv, counties.geojson, seasons.csv and
/// truth.csv into out_dir (created if needed).
void write_benchmark(const SynthBenchmark& b, const std::string& out_dir);

} // namespace cropfuse
