#include "cropfuse/metrics.hpp"

#include "cropfuse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cropfuse {

const std::array<std::string, MetricBattery::kCount>& MetricBattery::names() {
    static const std::array<std::string, kCount> n = {
        "range", "std", "small_integral", "large_integral", "maximum", "average"};
    return n;
}

Eigen::VectorXd MetricBattery::to_vector() const {
    Eigen::VectorXd v(kCount);
    v << range, std, small_integral, large_integral, maximum, average;
    return v;
}

namespace {

constexpr int kMaximumColumn = 4; // index of `maximum` in MetricBattery::names()

struct WindowView {
    const Series* s;
    std::size_t first, last; // inclusive sample index range
};

WindowView window_view(const Series& s, const SeasonWindow& w) {
    if (!s.gap_free()) throw WindowError("seasonal metrics require a gap-free series");
    std::size_t first = s.size(), last = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.doy[i] < w.start_doy || s.doy[i] > w.end_doy) continue;
        first = std::min(first, i);
        last = std::max(last, i);
    }
    if (first == s.size())
        throw WindowError("no samples inside season window [" + std::to_string(w.start_doy) +
                          ", " + std::to_string(w.end_doy) + "]");
    return {&s, first, last};
}

double trapezoid(const WindowView& v, double base) {
    double area = 0.0;
    for (std::size_t i = v.first; i < v.last; ++i) {
        double dt = v.s->doy[i + 1] - v.s->doy[i];
        area += 0.5 * (v.s->value[i] - base + v.s->value[i + 1] - base) * dt;
    }
    return area;
}

/// Densifies a series to a daily grid over its own support by linear
/// interpolation (identity for already-daily series).
std::pair<int, std::vector<double>> daily_interpolated(const Series& s) {
    if (s.empty() || !s.gap_free())
        throw InsufficientDataError("lag estimation requires gap-free series");
    int start = s.doy.front(), end = s.doy.back();
    std::vector<double> out(end - start + 1);
    std::size_t seg = 0;
    for (int d = start; d <= end; ++d) {
        while (seg + 1 < s.size() && s.doy[seg + 1] < d) ++seg;
        if (s.doy[seg] == d || seg + 1 == s.size()) {
            out[d - start] = s.value[seg];
        } else {
            double w = double(d - s.doy[seg]) / double(s.doy[seg + 1] - s.doy[seg]);
            out[d - start] = (1.0 - w) * s.value[seg] + w * s.value[seg + 1];
        }
    }
    return {start, out};
}

} // namespace

double metric_max(const Series& s, const SeasonWindow& window) {
    WindowView v = window_view(s, window);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = v.first; i <= v.last; ++i) m = std::max(m, s.value[i]);
    return m;
}

double metric_small_integral(const Series& s, const SeasonWindow& window) {
    WindowView v = window_view(s, window);
    double base = std::numeric_limits<double>::infinity();
    for (std::size_t i = v.first; i <= v.last; ++i) base = std::min(base, s.value[i]);
    return trapezoid(v, base);
}

MetricBattery metric_battery(const Series& s, const SeasonWindow& window) {
    WindowView v = window_view(s, window);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t n = v.last - v.first + 1;
    for (std::size_t i = v.first; i <= v.last; ++i) {
        lo = std::min(lo, s.value[i]);
        hi = std::max(hi, s.value[i]);
        sum += s.value[i];
    }
    double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = v.first; i <= v.last; ++i) {
        double d = s.value[i] - mean;
        ss += d * d;
    }
    MetricBattery b;
    b.range = hi - lo;
    b.std = std::sqrt(ss / n);
    b.small_integral = trapezoid(v, lo);
    b.large_integral = trapezoid(v, 0.0);
    b.maximum = hi;
    b.average = mean;
    return b;
}

Pc1Projection fit_pc1(const Eigen::MatrixXd& batteries) {
    Eigen::Index n = batteries.rows(), m = batteries.cols();
    if (n < m)
        throw InsufficientDataError("PC1 needs at least as many rows as metrics, got " +
                                    std::to_string(n) + " x " + std::to_string(m));

    Pc1Projection proj;
    proj.means = batteries.colwise().mean();
    Eigen::MatrixXd centered = batteries.rowwise() - proj.means.transpose();
    proj.stds = (centered.array().square().colwise().sum() / double(n)).sqrt();
    for (Eigen::Index j = 0; j < m; ++j)
        if (proj.stds(j) <= 0.0) {
            std::string label = j < MetricBattery::kCount ? MetricBattery::names()[j]
                                                          : "column " + std::to_string(j);
            throw DegenerateFeatureError("metric '" + label + "' has zero variance");
        }

    Eigen::MatrixXd z = centered.array().rowwise() / proj.stds.transpose().array();
    Eigen::MatrixXd cov = z.transpose() * z / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DataError("PC1 eigendecomposition failed");

    proj.loading = eig.eigenvectors().col(m - 1);
    proj.lambda1 = eig.eigenvalues()(m - 1);
    proj.lambda2 = m > 1 ? eig.eigenvalues()(m - 2) : 0.0;
    proj.unstable = proj.lambda1 - proj.lambda2 < 1e-9 * std::max(1.0, proj.lambda1);

    // Orient so scores rise with the `maximum` metric: the correlation
    // sign equals the sign of the covariance between the raw scores and
    // that column.
    Eigen::VectorXd scores = z * proj.loading;
    double cov_with_max = scores.dot(z.col(std::min<Eigen::Index>(kMaximumColumn, m - 1)));
    proj.orientation_sign = cov_with_max < 0.0 ? -1.0 : 1.0;
    return proj;
}

double project_pc1(const Eigen::VectorXd& battery_row, const Pc1Projection& proj) {
    if (battery_row.size() != proj.loading.size())
        throw DimensionError("battery length does not match fitted projection");
    Eigen::VectorXd z =
        (battery_row - proj.means).array() / proj.stds.array();
    return proj.orientation_sign * proj.loading.dot(z);
}

double project_pc1(const MetricBattery& battery, const Pc1Projection& proj) {
    return project_pc1(battery.to_vector(), proj);
}

LagResult evi_vod_lag(const Series& evi, const Series& vod, const LagConfig& cfg) {
    if (cfg.lag_min > cfg.lag_max)
        throw ParameterError("lag search window is empty");
    if (cfg.min_overlap_days < 2)
        throw ParameterError("correlation needs at least 2 overlapping days");

    auto [evi_start, e] = daily_interpolated(evi);
    auto [vod_start, v] = daily_interpolated(vod);
    int evi_end = evi_start + static_cast<int>(e.size()) - 1;
    int vod_end = vod_start + static_cast<int>(v.size()) - 1;

    bool found = false;
    LagResult best;
    for (int lag = cfg.lag_min; lag <= cfg.lag_max; ++lag) {
        // Overlap in EVI time t: both t and t + lag must be observed.
        int t0 = std::max(evi_start, vod_start - lag);
        int t1 = std::min(evi_end, vod_end - lag);
        int n = t1 - t0 + 1;
        if (n < cfg.min_overlap_days) continue;

        double se = 0, sv = 0, see = 0, svv = 0, sev = 0;
        for (int t = t0; t <= t1; ++t) {
            double a = e[t - evi_start];
            double b = v[t + lag - vod_start];
            se += a;
            sv += b;
            see += a * a;
            svv += b * b;
            sev += a * b;
        }
        double var_e = see - se * se / n;
        double var_v = svv - sv * sv / n;
        if (var_e <= 0.0 || var_v <= 0.0) continue;
        double r = (sev - se * sv / n) / std::sqrt(var_e * var_v);
        if (!found || r > best.peak_correlation) {
            best = {lag, r};
            found = true;
        }
    }
    if (!found)
        throw InsufficientOverlapError("no lag in [" + std::to_string(cfg.lag_min) + ", " +
                                       std::to_string(cfg.lag_max) + "] has " +
                                       std::to_string(cfg.min_overlap_days) +
                                       " overlapping days with a defined correlation");
    return best;
}

SeasonWindow estimate_season_window(const Series& s, const std::string& county_id,
                                    double amplitude_fraction) {
    auto [start_doy, daily] = daily_interpolated(s);
    double lo = *std::min_element(daily.begin(), daily.end());
    double hi = *std::max_element(daily.begin(), daily.end());
    if (!(hi > lo))
        throw WindowError("county '" + county_id + "': series has no seasonal amplitude");
    double threshold = lo + amplitude_fraction * (hi - lo);

    int first = -1, last = -1;
    for (std::size_t i = 0; i < daily.size(); ++i) {
        if (daily[i] < threshold) continue;
        if (first < 0) first = start_doy + static_cast<int>(i);
        last = start_doy + static_cast<int>(i);
    }
    if (first < 0 || first >= last)
        throw WindowError("county '" + county_id + "': cannot estimate a season window");
    return {county_id, first, last};
}

} // namespace cropfuse
