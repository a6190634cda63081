#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace cropfuse {

/// Missing-sample marker inside a Series.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

enum class Sensor { evi, vod };

std::string sensor_name(Sensor s);
Sensor sensor_from_name(const std::string& name);

/// A day-of-year indexed time series. NaN marks a missing sample at an
/// existing timestep; `doy` is strictly increasing.
struct Series {
    std::vector<int> doy;
    std::vector<double> value;

    std::size_t size() const { return doy.size(); }
    bool empty() const { return doy.empty(); }
    bool has_value(std::size_t i) const { return std::isfinite(value[i]); }

    std::size_t count_observed() const {
        std::size_t n = 0;
        for (double v : value)
            if (std::isfinite(v)) ++n;
        return n;
    }
    bool gap_free() const { return count_observed() == size(); }
};

/// Inserts NaN samples so the series covers [doy_start, doy_end] with
/// one sample per day. Existing samples are kept untouched.
Series reindex_daily(const Series& s, int doy_start, int doy_end);

/// Keeps only samples with doy <= last_doy.
Series truncate_after(const Series& s, int last_doy);

/// One grid cell's time series for a single sensor, with quality flags
/// parallel to the samples (true = usable).
struct PixelSeries {
    std::string pixel_id;
    double lon = 0.0;
    double lat = 0.0;
    Sensor sensor = Sensor::vod;
    Series series;
    std::vector<std::uint8_t> quality;
    bool is_cropland = true;
};

/// Per-county growing season bounds (day-of-year).
struct SeasonWindow {
    std::string county_id;
    int start_doy = 0;
    int end_doy = 0;
};

/// One county's predictor vector and yield label for a given year.
struct FeatureVector {
    std::string county_id;
    int year = 0;
    Eigen::VectorXd features;
    double label = 0.0;
};

using Dataset = std::vector<FeatureVector>;

/// Feature matrix / label vector view of a dataset.
void dataset_to_matrix(const Dataset& ds, Eigen::MatrixXd& X, Eigen::VectorXd& y);

} // namespace cropfuse
