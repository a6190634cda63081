#include "cropfuse/preprocess.hpp"

#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace cropfuse {

namespace {
constexpr double kVarianceFloor = 1e-30;
}

std::string screen_reason_name(ScreenReason r) {
    switch (r) {
    case ScreenReason::none: return "none";
    case ScreenReason::frozen_flagged: return "frozen_flagged";
    case ScreenReason::short_dynamic_range: return "short_dynamic_range";
    case ScreenReason::head_gap: return "head_gap";
    case ScreenReason::ar_fit_failed: return "ar_fit_failed";
    }
    return "none";
}

Series screen_frozen(const Series& s, const std::vector<std::uint8_t>& quality) {
    if (quality.size() != s.size())
        throw DimensionError("quality flags do not match series length");
    Series out = s;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!quality[i]) out.value[i] = kMissing;
    return out;
}

Series moving_average(const Series& s, int window) {
    if (window < 1 || window % 2 == 0)
        throw ParameterError("moving-average window must be odd and positive, got " +
                             std::to_string(window));
    int half = window / 2;
    Series out = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.has_value(i)) continue;
        double sum = 0.0;
        int n = 0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (std::abs(s.doy[j] - s.doy[i]) > half || !s.has_value(j)) continue;
            sum += s.value[j];
            ++n;
        }
        out.value[i] = sum / n;
    }
    return out;
}

ArModel fit_ar(const std::vector<double>& segment, int p) {
    if (p < 0) throw ParameterError("AR order must be non-negative");
    int n = static_cast<int>(segment.size());
    int n_eff = n - p;
    if (n <= p + 1)
        throw InsufficientDataError("AR(" + std::to_string(p) + ") needs more than " +
                                    std::to_string(p + 1) + " samples, got " + std::to_string(n));

    Eigen::MatrixXd design(n_eff, p + 1);
    Eigen::VectorXd target(n_eff);
    for (int t = p; t < n; ++t) {
        int row = t - p;
        design(row, 0) = 1.0;
        for (int i = 1; i <= p; ++i) design(row, i) = segment[t - i];
        target(row) = segment[t];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p + 1)
        throw RankError("AR(" + std::to_string(p) + ") design matrix is rank deficient");
    Eigen::VectorXd beta = qr.solve(target);

    ArModel model;
    model.order = p;
    model.intercept = beta(0);
    model.coeff.assign(beta.data() + 1, beta.data() + p + 1);
    double ssr = (target - design * beta).squaredNorm();
    model.residual_variance = ssr / n_eff;
    model.aic = n_eff * std::log(std::max(model.residual_variance, kVarianceFloor)) +
                2.0 * (p + 1);
    return model;
}

ArModel select_ar_order(const std::vector<double>& segment, int p_max) {
    if (p_max < 1) throw ParameterError("p_max must be at least 1");
    if (static_cast<int>(segment.size()) <= p_max + 1)
        throw InsufficientDataError("segment of " + std::to_string(segment.size()) +
                                    " samples cannot support AR order " + std::to_string(p_max));
    bool found = false;
    ArModel best;
    for (int p = 1; p <= p_max; ++p) {
        ArModel m;
        try {
            m = fit_ar(segment, p);
        } catch (const RankError&) {
            continue;
        }
        if (!found || m.aic < best.aic) {
            best = m;
            found = true;
        }
    }
    if (!found) throw RankError("no AR order up to " + std::to_string(p_max) + " is fittable");
    return best;
}

Series gapfill(const Series& s, const ArModel& model) {
    int p = model.order;
    Series out = s;
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (out.has_value(t)) continue;
        if (static_cast<int>(t) < p)
            throw HeadGapError("gap at index " + std::to_string(t) + " with fewer than " +
                               std::to_string(p) + " preceding samples");
        double pred = model.intercept;
        for (int i = 1; i <= p; ++i) pred += model.coeff[i - 1] * out.value[t - i];
        out.value[t] = pred;
    }
    return out;
}

ScreeningReport screen_dynamic_range(const Series& s, int threshold) {
    if (s.empty() || !s.gap_free())
        throw InsufficientDataError("dynamic-range screen requires a non-empty gap-free series");
    std::size_t imin = 0, imax = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s.value[i] < s.value[imin]) imin = i;
        if (s.value[i] > s.value[imax]) imax = i;
    }
    ScreeningReport report;
    report.min_max_gap_days = std::abs(s.doy[imax] - s.doy[imin]);
    report.dropped = report.min_max_gap_days < threshold;
    report.reason = report.dropped ? ScreenReason::short_dynamic_range : ScreenReason::none;
    return report;
}

Series interpolate_missing_linear(const Series& s) {
    std::vector<std::size_t> observed;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.has_value(i)) observed.push_back(i);
    if (observed.empty())
        throw InsufficientDataError("cannot interpolate a fully-missing series");

    Series out = s;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.has_value(i)) continue;
        auto it = std::lower_bound(observed.begin(), observed.end(), i);
        if (it == observed.begin()) {
            out.value[i] = s.value[observed.front()];
        } else if (it == observed.end()) {
            out.value[i] = s.value[observed.back()];
        } else {
            std::size_t hi = *it, lo = *(it - 1);
            double w = double(s.doy[i] - s.doy[lo]) / double(s.doy[hi] - s.doy[lo]);
            out.value[i] = (1.0 - w) * s.value[lo] + w * s.value[hi];
        }
    }
    return out;
}

std::pair<std::size_t, std::size_t> longest_observed_run(const Series& s) {
    std::size_t best_start = 0, best_len = 0, start = 0, len = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.has_value(i)) {
            if (len == 0) start = i;
            ++len;
            if (len > best_len) {
                best_len = len;
                best_start = start;
            }
        } else {
            len = 0;
        }
    }
    return {best_start, best_len};
}

PreprocessOutcome preprocess_vod(const PixelSeries& px, const PreprocessOptions& opt) {
    PreprocessOutcome r;
    r.report.pixel_id = px.pixel_id;

    Series s = screen_frozen(px.series, px.quality);
    s = moving_average(s, opt.smoothing_window);
    r.series = s;

    if (s.count_observed() == 0) {
        r.report.dropped = true;
        r.report.reason = ScreenReason::frozen_flagged;
        return r;
    }

    if (!s.gap_free()) {
        auto [run_start, run_len] = longest_observed_run(s);
        int p_max = std::min<int>(opt.p_max, (static_cast<int>(run_len) - 1) / 2);
        if (p_max < 1) {
            r.report.dropped = true;
            r.report.reason = ScreenReason::ar_fit_failed;
            return r;
        }
        std::vector<double> run(s.value.begin() + run_start,
                                s.value.begin() + run_start + run_len);
        try {
            r.model = select_ar_order(run, p_max);
            s = gapfill(s, r.model);
        } catch (const HeadGapError&) {
            r.report.dropped = true;
            r.report.reason = ScreenReason::head_gap;
            return r;
        } catch (const RankError&) {
            r.report.dropped = true;
            r.report.reason = ScreenReason::ar_fit_failed;
            return r;
        }
        r.series = s;
    }

    ScreeningReport range = screen_dynamic_range(s, opt.min_range_days);
    r.report.dropped = range.dropped;
    r.report.reason = range.reason;
    r.report.min_max_gap_days = range.min_max_gap_days;
    r.kept = !r.report.dropped;
    return r;
}

} // namespace cropfuse
