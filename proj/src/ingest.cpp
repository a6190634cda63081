#include "cropfuse/ingest.hpp"

#include "cropfuse/csv.hpp"
#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cropfuse {

YieldUnit yield_unit_from_name(const std::string& name) {
    if (name == "bu_acre") return YieldUnit::bu_per_acre;
    if (name == "lb_acre") return YieldUnit::lb_per_acre;
    throw DataError("unknown yield unit '" + name + "' (expected bu_acre or lb_acre)");
}

UnitTable UnitTable::defaults() {
    UnitTable t;
    t.pounds_per_bushel = {
        {"corn", 56.0},   {"soybean", 60.0}, {"wheat", 60.0},    {"oats", 32.0},
        {"barley", 48.0}, {"sorghum", 56.0}, {"flaxseed", 56.0},
    };
    return t;
}

double convert_yield(double yield_native, YieldUnit unit, const std::string& crop,
                     const UnitTable& table) {
    if (!std::isfinite(yield_native) || yield_native < 0.0)
        throw DomainError("yield must be finite and non-negative, got " +
                          fmt_double(yield_native) + " for crop '" + crop + "'");
    double lb_per_acre = yield_native;
    if (unit == YieldUnit::bu_per_acre) {
        auto it = table.pounds_per_bushel.find(crop);
        if (it == table.pounds_per_bushel.end())
            throw MissingConversionError("no pounds-per-bushel entry for crop '" + crop + "'");
        lb_per_acre *= it->second;
    }
    return lb_per_acre * kKgPerLb / kM2PerAcre;
}

double weighted_county_yield(const std::vector<std::pair<double, double>>& yield_area) {
    double num = 0.0, den = 0.0;
    for (const auto& [y, a] : yield_area) {
        if (a < 0.0) throw DomainError("negative planted area " + fmt_double(a));
        num += y * a;
        den += a;
    }
    if (den <= 0.0) throw UndefinedYieldError("total planted area is zero");
    return num / den;
}

namespace {

bool on_segment(double px, double py, double x1, double y1, double x2, double y2) {
    double cross = (x2 - x1) * (py - y1) - (px - x1) * (y2 - y1);
    if (cross != 0.0) return false;
    return px >= std::min(x1, x2) && px <= std::max(x1, x2) && py >= std::min(y1, y2) &&
           py <= std::max(y1, y2);
}

} // namespace

bool point_in_geometry(const CountyGeometry& geom, double lon, double lat) {
    bool inside = false;
    for (const auto& ring : geom.rings) {
        std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            double xi = ring[i][0], yi = ring[i][1];
            double xj = ring[j][0], yj = ring[j][1];
            if (on_segment(lon, lat, xi, yi, xj, yj)) return true;
            if ((yi > lat) != (yj > lat)) {
                double x_cross = xi + (lat - yi) * (xj - xi) / (yj - yi);
                if (lon < x_cross) inside = !inside;
            }
        }
    }
    return inside;
}

std::map<std::string, std::vector<std::size_t>>
assign_pixels_to_counties(const std::vector<PixelSeries>& pixels,
                          const std::vector<CountyGeometry>& counties) {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const auto& px = pixels[i];
        if (!px.is_cropland) continue;
        for (const auto& county : counties) {
            if (point_in_geometry(county, px.lon, px.lat)) {
                out[county.county_id].push_back(i);
                break;
            }
        }
    }
    return out;
}

Series county_mean_series(const std::vector<const PixelSeries*>& pixels) {
    if (pixels.empty()) throw EmptyCountyError("no pixels to aggregate");
    const auto& axis = pixels.front()->series.doy;
    for (const auto* p : pixels)
        if (p->series.doy != axis)
            throw DimensionError("pixel time axes differ within county (pixel '" +
                                 p->pixel_id + "')");
    Series out;
    out.doy = axis;
    out.value.assign(axis.size(), kMissing);
    for (std::size_t t = 0; t < axis.size(); ++t) {
        double sum = 0.0;
        int n = 0;
        for (const auto* p : pixels) {
            if (!p->quality.empty() && !p->quality[t]) continue;
            double v = p->series.value[t];
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
        }
        if (n > 0) out.value[t] = sum / n;
    }
    return out;
}

Series mean_series(const std::vector<const Series*>& series) {
    if (series.empty()) throw EmptyCountyError("no series to aggregate");
    const auto& axis = series.front()->doy;
    for (const auto* s : series)
        if (s->doy != axis) throw DimensionError("series time axes differ");
    Series out;
    out.doy = axis;
    out.value.assign(axis.size(), kMissing);
    for (std::size_t t = 0; t < axis.size(); ++t) {
        double sum = 0.0;
        int n = 0;
        for (const auto* s : series) {
            if (!s->has_value(t)) continue;
            sum += s->value[t];
            ++n;
        }
        if (n > 0) out.value[t] = sum / n;
    }
    return out;
}

Eigen::VectorXd stack_features(const Eigen::VectorXd& evi, const Eigen::VectorXd& vod) {
    if (evi.size() == 0 || vod.size() == 0)
        throw DimensionError("stack_features requires non-empty inputs");
    if (!evi.allFinite() || !vod.allFinite())
        throw DataError("stack_features requires fully gap-filled finite inputs");
    Eigen::VectorXd out(evi.size() + vod.size());
    out << evi, vod;
    return out;
}

Dataset pool_years(const std::vector<Dataset>& per_year) {
    Dataset out;
    Eigen::Index t = -1;
    for (const auto& ds : per_year) {
        for (const auto& fv : ds) {
            if (t < 0) t = fv.features.size();
            if (fv.features.size() != t)
                throw DimensionError("pooled years must share feature length (" +
                                     std::to_string(fv.features.size()) + " vs " +
                                     std::to_string(t) + ")");
            out.push_back(fv);
        }
    }
    return out;
}

std::vector<PixelSeries> read_pixels_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    std::size_t c_id = table.require_column("pixel_id");
    std::size_t c_lon = table.require_column("lon");
    std::size_t c_lat = table.require_column("lat");
    std::size_t c_sensor = table.require_column("sensor");
    std::size_t c_doy = table.require_column("doy");
    std::size_t c_value = table.require_column("value");
    std::size_t c_quality = table.require_column("quality");
    std::size_t c_crop = table.require_column("is_cropland");

    struct Raw {
        int doy;
        double value;
        bool quality;
    };
    std::map<std::string, std::size_t> index;
    std::vector<PixelSeries> out;
    std::vector<std::vector<Raw>> raws;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string& id = row[c_id];
        std::string ctx = path + " row " + std::to_string(r + 2);
        double lon = parse_double(row[c_lon], ctx + " lon");
        double lat = parse_double(row[c_lat], ctx + " lat");
        if (lon < -180.0 || lon > 180.0 || lat < -90.0 || lat > 90.0)
            throw DomainError(ctx + ": coordinates out of range");
        Sensor sensor = sensor_from_name(row[c_sensor]);
        int quality = parse_int(row[c_quality], ctx + " quality");
        int cropland = parse_int(row[c_crop], ctx + " is_cropland");
        if ((quality != 0 && quality != 1) || (cropland != 0 && cropland != 1))
            throw DataError(ctx + ": quality and is_cropland must be 0 or 1");
        double value = row[c_value].empty() ? kMissing : parse_double(row[c_value], ctx + " value");
        if (quality == 1 && !std::isfinite(value))
            throw DataError(ctx + ": usable sample must carry a finite value");

        auto [it, fresh] = index.try_emplace(id, out.size());
        if (fresh) {
            PixelSeries px;
            px.pixel_id = id;
            px.lon = lon;
            px.lat = lat;
            px.sensor = sensor;
            px.is_cropland = cropland == 1;
            out.push_back(std::move(px));
            raws.emplace_back();
        } else {
            const PixelSeries& px = out[it->second];
            if (px.sensor != sensor || px.lon != lon || px.lat != lat ||
                px.is_cropland != (cropland == 1))
                throw DataError(ctx + ": pixel '" + id + "' has inconsistent metadata");
        }
        raws[it->second].push_back({parse_int(row[c_doy], ctx + " doy"), value, quality == 1});
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& rs = raws[i];
        std::sort(rs.begin(), rs.end(), [](const Raw& a, const Raw& b) { return a.doy < b.doy; });
        for (std::size_t k = 1; k < rs.size(); ++k)
            if (rs[k].doy == rs[k - 1].doy)
                throw DataError(path + ": pixel '" + out[i].pixel_id + "' has duplicate doy " +
                                std::to_string(rs[k].doy));
        for (const auto& raw : rs) {
            out[i].series.doy.push_back(raw.doy);
            out[i].series.value.push_back(raw.quality ? raw.value : kMissing);
            out[i].quality.push_back(raw.quality ? 1 : 0);
        }
    }
    return out;
}

CountyRecord make_county_record(const std::string& county_id, int year,
                                std::vector<CropEntry> crops, const UnitTable& table) {
    CountyRecord rec;
    rec.county_id = county_id;
    rec.year = year;
    rec.crops = std::move(crops);

    std::vector<std::pair<double, double>> yield_area;
    double total_area = 0.0;
    for (const auto& c : rec.crops) {
        if (!std::isfinite(c.area_planted_acres) || c.area_planted_acres < 0.0)
            throw DomainError("county '" + county_id + "' crop '" + c.crop +
                              "': planted area must be finite and non-negative");
        double kg_m2 = convert_yield(c.yield_native, c.unit, c.crop, table);
        rec.crop_yield_kg_m2[c.crop] = kg_m2;
        yield_area.emplace_back(kg_m2, c.area_planted_acres);
        total_area += c.area_planted_acres;
    }
    rec.weighted_yield = weighted_county_yield(yield_area);
    for (const auto& c : rec.crops)
        rec.proportions[c.crop] = c.area_planted_acres / total_area;
    return rec;
}

std::vector<CountyRecord> read_survey_csv(const std::string& path, const UnitTable& table) {
    CsvTable csv = read_csv(path);
    std::size_t c_id = csv.require_column("county_id");
    std::size_t c_year = csv.require_column("year");
    std::size_t c_crop = csv.require_column("crop");
    std::size_t c_yield = csv.require_column("yield_value");
    std::size_t c_unit = csv.require_column("yield_unit");
    std::size_t c_area = csv.require_column("area_planted_acres");

    std::map<std::pair<std::string, int>, std::vector<CropEntry>> grouped;
    std::vector<std::pair<std::string, int>> order;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        std::pair<std::string, int> key{row[c_id], parse_int(row[c_year], ctx + " year")};
        CropEntry entry;
        entry.crop = row[c_crop];
        entry.yield_native = parse_double(row[c_yield], ctx + " yield_value");
        entry.unit = yield_unit_from_name(row[c_unit]);
        entry.area_planted_acres = parse_double(row[c_area], ctx + " area_planted_acres");
        auto [it, fresh] = grouped.try_emplace(key);
        if (fresh) order.push_back(key);
        for (const auto& existing : it->second)
            if (existing.crop == entry.crop)
                throw DataError(ctx + ": duplicate crop '" + entry.crop + "' for county '" +
                                key.first + "' year " + std::to_string(key.second));
        it->second.push_back(std::move(entry));
    }

    std::vector<CountyRecord> out;
    out.reserve(order.size());
    for (const auto& key : order)
        out.push_back(make_county_record(key.first, key.second, std::move(grouped[key]), table));
    return out;
}

namespace {

std::vector<std::array<double, 2>> parse_ring(const nlohmann::json& ring,
                                              const std::string& county_id) {
    if (!ring.is_array() || ring.size() < 4)
        throw DataError("county '" + county_id + "': ring needs at least 4 positions");
    std::vector<std::array<double, 2>> out;
    out.reserve(ring.size());
    for (const auto& pos : ring) {
        if (!pos.is_array() || pos.size() < 2)
            throw DataError("county '" + county_id + "': malformed ring position");
        out.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    if (out.front() != out.back())
        throw DataError("county '" + county_id + "': ring is not closed");
    return out;
}

} // namespace

std::vector<CountyGeometry> read_counties_geojson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features"))
        throw DataError(path + ": expected a GeoJSON FeatureCollection");

    std::vector<CountyGeometry> out;
    for (const auto& feature : doc["features"]) {
        CountyGeometry geom;
        if (feature.contains("properties") && feature["properties"].contains("county_id"))
            geom.county_id = feature["properties"]["county_id"].get<std::string>();
        else if (feature.contains("id"))
            geom.county_id = feature["id"].get<std::string>();
        else
            throw DataError(path + ": feature without county_id");

        const auto& g = feature.at("geometry");
        std::string type = g.value("type", "");
        const auto& coords = g.at("coordinates");
        if (type == "Polygon") {
            for (const auto& ring : coords) geom.rings.push_back(parse_ring(ring, geom.county_id));
        } else if (type == "MultiPolygon") {
            for (const auto& poly : coords)
                for (const auto& ring : poly) geom.rings.push_back(parse_ring(ring, geom.county_id));
        } else {
            throw DataError(path + ": county '" + geom.county_id +
                            "': unsupported geometry type '" + type + "'");
        }
        out.push_back(std::move(geom));
    }
    return out;
}

UnitTable read_units_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    UnitTable table = UnitTable::defaults();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected crop = lb_per_bu");
        std::string crop = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        double w;
        try {
            w = parse_double(value, path + ":" + std::to_string(lineno));
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
        if (crop.empty() || !std::isfinite(w) || w <= 0.0)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": bushel weight must be positive");
        table.pounds_per_bushel[crop] = w;
    }
    return table;
}

std::vector<SeasonWindow> read_seasons_csv(const std::string& path) {
    CsvTable csv = read_csv(path);
    std::size_t c_id = csv.require_column("county_id");
    std::size_t c_start = csv.require_column("start_doy");
    std::size_t c_end = csv.require_column("end_doy");
    std::vector<SeasonWindow> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        SeasonWindow w;
        w.county_id = row[c_id];
        w.start_doy = parse_int(row[c_start], ctx + " start_doy");
        w.end_doy = parse_int(row[c_end], ctx + " end_doy");
        if (w.start_doy >= w.end_doy)
            throw DataError(ctx + ": season start must precede end");
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace cropfuse
