#include "cropfuse/types.hpp"

#include "cropfuse/errors.hpp"

#include <limits>

namespace cropfuse {

std::string sensor_name(Sensor s) {
    return s == Sensor::evi ? "EVI" : "VOD";
}

Sensor sensor_from_name(const std::string& name) {
    if (name == "EVI" || name == "evi") return Sensor::evi;
    if (name == "VOD" || name == "vod") return Sensor::vod;
    throw DataError("unknown sensor: " + name);
}

Series reindex_daily(const Series& s, int doy_start, int doy_end) {
    if (doy_end < doy_start) throw ParameterError("reindex_daily: empty day range");
    Series out;
    const int n = doy_end - doy_start + 1;
    out.doy.resize(n);
    out.value.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (int d = 0; d < n; ++d) out.doy[d] = doy_start + d;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.doy[i] < doy_start || s.doy[i] > doy_end) continue;
        out.value[s.doy[i] - doy_start] = s.value[i];
    }
    return out;
}

Series truncate_after(const Series& s, int last_doy) {
    Series out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.doy[i] > last_doy) break;
        out.doy.push_back(s.doy[i]);
        out.value.push_back(s.value[i]);
    }
    return out;
}

void dataset_to_matrix(const Dataset& ds, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    if (ds.empty()) throw InsufficientDataError("empty dataset");
    const Eigen::Index t = ds.front().features.size();
    X.resize(static_cast<Eigen::Index>(ds.size()), t);
    y.resize(static_cast<Eigen::Index>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds[i].features.size() != t)
            throw DimensionError("dataset rows have inconsistent feature length");
        X.row(static_cast<Eigen::Index>(i)) = ds[i].features.transpose();
        y(static_cast<Eigen::Index>(i)) = ds[i].label;
    }
}

} // namespace cropfuse
