#pragma once

#include "cropfuse/types.hpp"

#include <array>
#include <string>

namespace cropfuse {

/// Per-county, per-sensor seasonal summary metrics. `to_vector` fixes the
/// column order used everywhere a battery becomes a matrix row.
struct MetricBattery {
    double range = 0.0;
    double std = 0.0;
    double small_integral = 0.0;
    double large_integral = 0.0;
    double maximum = 0.0;
    double average = 0.0;

    static constexpr int kCount = 6;
    static const std::array<std::string, kCount>& names();
    Eigen::VectorXd to_vector() const;
};

/// Standardized first principal component of a battery matrix. The
/// loading's sign is disambiguated by `orientation_sign`, chosen so the
/// projection correlates positively with the `maximum` metric.
struct Pc1Projection {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
    Eigen::VectorXd loading;
    double orientation_sign = 1.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    // Set when the top two eigenvalues are (near-)equal and the leading
    // direction is therefore arbitrary.
    bool unstable = false;
};

struct LagResult {
    int lag_days = 0;
    double peak_correlation = 0.0;
};

struct LagConfig {
    int lag_min = 0;
    int lag_max = 120;
    int min_overlap_days = 30;
};

/// Maximum over samples with start_doy <= doy <= end_doy.
double metric_max(const Series& s, const SeasonWindow& window);

/// Trapezoidal integral over the window of (value - in-window minimum).
double metric_small_integral(const Series& s, const SeasonWindow& window);

/// All six seasonal metrics in one pass. std is the population standard
/// deviation; integrals are trapezoids on the day axis.
MetricBattery metric_battery(const Series& s, const SeasonWindow& window);

/// Fits PC1 on an N x 6 battery matrix: z-score per column, then take the
/// top eigenvector of the sample covariance.
Pc1Projection fit_pc1(const Eigen::MatrixXd& batteries);

double project_pc1(const Eigen::VectorXd& battery_row, const Pc1Projection& proj);
double project_pc1(const MetricBattery& battery, const Pc1Projection& proj);

/// Integer-day lag in [lag_min, lag_max] maximizing the Pearson
/// correlation of EVI(t) against VOD(t + lag). The composite EVI series is
/// linearly interpolated to the daily grid first. Lags with fewer than
/// min_overlap_days common days (or an undefined correlation) are skipped;
/// ties break toward the smallest lag.
LagResult evi_vod_lag(const Series& evi, const Series& vod, const LagConfig& cfg);

/// Fallback season bounds when no survey phenology is supplied: first and
/// last day the daily-interpolated series reaches `amplitude_fraction` of
/// its seasonal amplitude above the minimum.
SeasonWindow estimate_season_window(const Series& s, const std::string& county_id,
                                    double amplitude_fraction = 0.2);

} // namespace cropfuse
