#pragma once

#include "cropfuse/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace cropfuse {

/// Autoregressive model x_t = c + sum_i phi_i * x_{t-i} + eps, fitted by
/// conditional least squares.
struct ArModel {
    int order = 0;
    std::vector<double> coeff; // phi_1..phi_p
    double intercept = 0.0;
    double residual_variance = 0.0;
    double aic = 0.0;
};

enum class ScreenReason { none, frozen_flagged, short_dynamic_range, head_gap, ar_fit_failed };

std::string screen_reason_name(ScreenReason r);

struct ScreeningReport {
    std::string pixel_id;
    bool dropped = false;
    ScreenReason reason = ScreenReason::none;
    // Day separation of the extrema; -1 when the pixel was dropped before
    // the range screen could run.
    int min_max_gap_days = -1;
};

/// Marks samples whose quality flag is false as missing. Timestamps are
/// kept so the daily axis stays intact.
Series screen_frozen(const Series& s, const std::vector<std::uint8_t>& quality);

/// Centered moving average over the available samples within +/- window/2
/// days. Endpoints use the truncated window; missing samples stay missing
/// and do not contribute to neighbours.
Series moving_average(const Series& s, int window);

/// Least-squares AR(p) fit on a gap-free segment. residual_variance is
/// SSR / n_eff with n_eff = len - p; aic = n_eff*ln(sigma^2) + 2(p+1)
/// (variance floored at 1e-30 so the noiseless case keeps a finite AIC).
ArModel fit_ar(const std::vector<double>& segment, int p);

/// Fits p = 1..p_max and returns the minimum-AIC model; ties break toward
/// the smaller order. Orders whose design matrix is rank deficient are
/// skipped (an exact noiseless AR(p) makes higher orders collinear).
ArModel select_ar_order(const std::vector<double>& segment, int p_max);

/// Fills every gap by forward recursion from the model. Observed samples
/// are never altered. A gap starting before `order` observed samples of
/// history raises a head-gap error.
Series gapfill(const Series& s, const ArModel& model);

/// Drops series whose min and max are closer than `threshold` days apart;
/// extrema ties break toward the earliest day.
ScreeningReport screen_dynamic_range(const Series& s, int threshold);

/// Linear interpolation of missing samples on the day axis; missing head
/// or tail samples take the nearest observed value.
Series interpolate_missing_linear(const Series& s);

/// Longest contiguous stretch of observed samples (start index, length);
/// ties break toward the earliest.
std::pair<std::size_t, std::size_t> longest_observed_run(const Series& s);

struct PreprocessOptions {
    int smoothing_window = 7;
    int p_max = 10;
    int min_range_days = 19;
};

/// Per-pixel result of the full VOD chain. On a drop, `series` holds the
/// last state reached before the pixel was rejected.
struct PreprocessOutcome {
    bool kept = false;
    Series series;
    ArModel model;
    ScreeningReport report;
};

/// Full quality chain for one daily VOD pixel: freeze screening, 7-day
/// smoothing, AIC-selected AR fit on the longest observed run, forward
/// gap-filling, then the dynamic-range screen.
PreprocessOutcome preprocess_vod(const PixelSeries& px, const PreprocessOptions& opt);

} // namespace cropfuse
