#pragma once

#include "cropfuse/types.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace cropfuse {

enum class YieldUnit { bu_per_acre, lb_per_acre };

YieldUnit yield_unit_from_name(const std::string& name);

/// Pounds-per-bushel weights used to convert bushel yields to mass.
/// Defaults cover the crops of the study region; user-overridable from
/// a key=value config file.
struct UnitTable {
    std::map<std::string, double> pounds_per_bushel;

    static UnitTable defaults();
    bool has(const std::string& crop) const { return pounds_per_bushel.count(crop) > 0; }
};

struct CropEntry {
    std::string crop;
    double yield_native = 0.0;
    YieldUnit unit = YieldUnit::bu_per_acre;
    double area_planted_acres = 0.0;
};

/// County survey record for one year: per-crop yields and areas plus the
/// derived area-weighted yield (kg/m^2) and crop proportions.
struct CountyRecord {
    std::string county_id;
    int year = 0;
    std::vector<CropEntry> crops;
    double weighted_yield = 0.0; // kg/m^2
    std::map<std::string, double> proportions;
    std::map<std::string, double> crop_yield_kg_m2;
};

/// County boundary as one or more closed rings (lon, lat). MultiPolygon
/// parts and holes are all stored as rings; containment uses the even-odd
/// rule so holes need no special casing.
struct CountyGeometry {
    std::string county_id;
    std::vector<std::vector<std::array<double, 2>>> rings;
};

constexpr double kKgPerLb = 0.45359237;
constexpr double kM2PerAcre = 4046.8564224;

/// Converts a native survey yield to kg/m^2. Bushel units require a
/// per-crop weight from the table; lb/acre converts directly.
double convert_yield(double yield_native, YieldUnit unit, const std::string& crop,
                     const UnitTable& table);

/// Area-weighted mean of (yield kg/m^2, area acres) pairs.
double weighted_county_yield(const std::vector<std::pair<double, double>>& yield_area);

/// Even-odd point-in-polygon; points on a ring edge count as inside.
bool point_in_geometry(const CountyGeometry& geom, double lon, double lat);

/// Assigns each cropland pixel to the first county (input order) whose
/// geometry contains its centroid. Pixels outside all counties, and
/// non-cropland pixels, are left unassigned.
std::map<std::string, std::vector<std::size_t>>
assign_pixels_to_counties(const std::vector<PixelSeries>& pixels,
                          const std::vector<CountyGeometry>& counties);

/// Per-timestep mean over pixels whose quality flag is set at that
/// timestep; a timestep with no usable pixel stays missing. All pixels
/// must share one time axis.
Series county_mean_series(const std::vector<const PixelSeries*>& pixels);

/// Per-timestep mean over the observed values of plain series sharing one
/// time axis (used after preprocessing, when quality flags are spent).
Series mean_series(const std::vector<const Series*>& series);

/// [evi ‖ vod], optical first. Inputs must be non-empty and fully finite
/// (gap-filled upstream).
Eigen::VectorXd stack_features(const Eigen::VectorXd& evi, const Eigen::VectorXd& vod);

/// Row-wise concatenation of per-year datasets; feature length must match.
Dataset pool_years(const std::vector<Dataset>& per_year);

// -- file readers ---------------------------------------------------------

/// pixels.csv: pixel_id,lon,lat,sensor,doy,value,quality,is_cropland
std::vector<PixelSeries> read_pixels_csv(const std::string& path);

/// survey.csv: county_id,year,crop,yield_value,yield_unit,area_planted_acres
std::vector<CountyRecord> read_survey_csv(const std::string& path, const UnitTable& table);

/// Builds a CountyRecord from parsed crop entries (conversion, weighting,
/// proportions). Exposed for the synthetic generator and tests.
CountyRecord make_county_record(const std::string& county_id, int year,
                                std::vector<CropEntry> crops, const UnitTable& table);

/// Minimal GeoJSON subset: FeatureCollection of Polygon/MultiPolygon
/// features carrying a county_id (in properties or as feature id).
std::vector<CountyGeometry> read_counties_geojson(const std::string& path);

/// Flat `crop = pounds_per_bushel` overrides applied on top of defaults.
UnitTable read_units_config(const std::string& path);

/// seasons.csv: county_id,start_doy,end_doy
std::vector<SeasonWindow> read_seasons_csv(const std::string& path);

} // namespace cropfuse
