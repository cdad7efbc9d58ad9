#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include <tppd/error.hpp>
#include <tppd/geo.hpp>

namespace tppd {

struct trajectory_record {
    geo_point position;
    double timestamp_s = 0.0; // seconds since Unix epoch
};

struct trajectory {
    std::string vehicle_id;
    std::vector<trajectory_record> records;

    std::size_t size() const { return records.size(); }
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream ss(line);
    while (std::getline(ss, tok, ','))
        out.push_back(tok);
    if (!line.empty() && line.back() == ',')
        out.push_back("");
    return out;
}

inline std::string trim_ws(const std::string& s) {
    const char* ws = " \t\r\n";
    std::size_t b = s.find_first_not_of(ws);
    std::size_t e = s.find_last_not_of(ws);
    return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
}

inline bool parse_double_strict(const std::string& s, double& out) {
    char* end = nullptr;
    std::string t = trim_ws(s);
    if (t.empty()) return false;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

/// "YYYY-MM-DD" + "HH:MM:SS" to seconds since the Unix epoch.
inline bool parse_datetime(const std::string& date, const std::string& time, double& out) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    if (std::sscanf(date.c_str(), "%d-%d-%d", &y, &mo, &d) != 3) return false;
    if (std::sscanf(time.c_str(), "%d:%d:%d", &h, &mi, &se) != 3) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60)
        return false;
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return false;
    sys_days days{ymd};
    out = static_cast<double>(days.time_since_epoch().count()) * 86400.0 + h * 3600.0 + mi * 60.0 + se;
    return true;
}

} // namespace detail

/// Geolife PLT ingestion. Layout: 6 header lines, then one record per line:
///   lat,lon,0,altitude_ft,days,date,time
/// Altitude and the constant third field are discarded; the timestamp is
/// taken from the date and time fields. Records keep file order; monotonicity
/// violations are left for clean().
inline trajectory parse_plt(std::string_view content, std::string vehicle_id = "") {
    trajectory t;
    t.vehicle_id = std::move(vehicle_id);

    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no <= 6) continue; // fixed-size preamble
        if (detail::trim_ws(line).empty()) continue;

        auto fields = detail::split_csv(line);
        if (fields.size() < 7)
            throw error("plt: line " + std::to_string(line_no) + ": expected 7 fields, got " +
                        std::to_string(fields.size()));
        double lat = 0, lon = 0, ts = 0;
        if (!detail::parse_double_strict(fields[0], lat) || !detail::parse_double_strict(fields[1], lon))
            throw error("plt: line " + std::to_string(line_no) + ": bad coordinate");
        if (!detail::parse_datetime(detail::trim_ws(fields[5]), detail::trim_ws(fields[6]), ts))
            throw error("plt: line " + std::to_string(line_no) + ": bad date/time");
        geo_point p{lat, lon};
        if (!is_valid(p))
            throw error("plt: line " + std::to_string(line_no) + ": coordinate out of range");
        t.records.push_back({p, ts});
    }
    if (t.records.empty())
        throw error("plt: no records");
    return t;
}

inline trajectory load_plt(const std::string& path, std::string vehicle_id = "") {
    std::ifstream in(path);
    if (!in)
        throw error("plt: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (vehicle_id.empty()) vehicle_id = path;
    return parse_plt(ss.str(), std::move(vehicle_id));
}

/// Outlier and duplicate removal. A record is dropped when it shares its
/// predecessor's timestamp, steps backwards in time, or implies an
/// instantaneous speed above max_speed_mps from the last kept record.
inline trajectory clean(const trajectory& t, double max_speed_mps = 50.0) {
    require(t.records.size() >= 2, "clean: trajectory needs at least 2 records");
    trajectory out;
    out.vehicle_id = t.vehicle_id;
    for (const auto& rec : t.records) {
        if (out.records.empty()) {
            out.records.push_back(rec);
            continue;
        }
        const auto& prev = out.records.back();
        const double dt = rec.timestamp_s - prev.timestamp_s;
        if (dt <= 0.0)
            continue; // duplicate or non-monotone timestamp
        const double d = haversine_distance(prev.position, rec.position);
        if (d / dt > max_speed_mps)
            continue;
        out.records.push_back(rec);
    }
    if (out.records.size() < 2)
        throw error("clean: trajectory degenerate after cleaning");
    return out;
}

struct coordinate_bounds {
    normalization_bounds lat;
    normalization_bounds lon;
};

struct window_sample {
    Eigen::MatrixXd input;   // seq_len x 2, normalized (lat, lon)
    Eigen::Vector2d target;  // normalized next position
};

struct windowed_dataset {
    std::vector<window_sample> windows;
    coordinate_bounds bounds;
    int seq_len = 0;

    std::size_t size() const { return windows.size(); }
};

namespace detail {

/// Per-dimension min/max over the whole trajectory. A constant dimension is
/// widened to [v-0.5, v+0.5] so that the constant maps to 0.5 and the strict
/// bounds invariant holds.
inline normalization_bounds dimension_bounds(const trajectory& t, bool lat) {
    double lo = lat ? t.records.front().position.lat_deg : t.records.front().position.lon_deg;
    double hi = lo;
    for (const auto& r : t.records) {
        const double v = lat ? r.position.lat_deg : r.position.lon_deg;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo)
        return normalization_bounds(lo - 0.5, lo + 0.5);
    return normalization_bounds(lo, hi);
}

} // namespace detail

/// Stride-1 sliding windows of seq_len normalized positions with the next
/// position as target. Bounds are computed per dimension over the whole
/// trajectory and stored with the dataset.
inline windowed_dataset build_windows(const trajectory& t, int seq_len = 8) {
    require(seq_len >= 1, "build_windows: seq_len must be >= 1");
    if (t.records.size() < static_cast<std::size_t>(seq_len) + 1)
        throw error("build_windows: need at least seq_len + 1 records, got " +
                    std::to_string(t.records.size()));

    windowed_dataset ds{{}, {detail::dimension_bounds(t, true), detail::dimension_bounds(t, false)}, seq_len};

    const std::size_t n_windows = t.records.size() - static_cast<std::size_t>(seq_len);
    ds.windows.reserve(n_windows);
    for (std::size_t i = 0; i < n_windows; ++i) {
        window_sample w;
        w.input.resize(seq_len, 2);
        for (int s = 0; s < seq_len; ++s) {
            const auto& p = t.records[i + s].position;
            w.input(s, 0) = normalize(p.lat_deg, ds.bounds.lat);
            w.input(s, 1) = normalize(p.lon_deg, ds.bounds.lon);
        }
        const auto& tp = t.records[i + seq_len].position;
        w.target << normalize(tp.lat_deg, ds.bounds.lat), normalize(tp.lon_deg, ds.bounds.lon);
        ds.windows.push_back(std::move(w));
    }
    return ds;
}

/// Chronological split; windows are already in time order, so no shuffling.
inline std::pair<windowed_dataset, windowed_dataset> split(const windowed_dataset& d,
                                                           double train_fraction) {
    require(train_fraction > 0.0 && train_fraction < 1.0,
            "split: train_fraction must be in (0, 1)");
    const std::size_t n = d.windows.size();
    const std::size_t n_train = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    if (n_train == 0 || n_train == n)
        throw error("split: a share would be empty");
    windowed_dataset train{{d.windows.begin(), d.windows.begin() + static_cast<std::ptrdiff_t>(n_train)},
                           d.bounds, d.seq_len};
    windowed_dataset test{{d.windows.begin() + static_cast<std::ptrdiff_t>(n_train), d.windows.end()},
                          d.bounds, d.seq_len};
    return {std::move(train), std::move(test)};
}

struct station {
    std::string id;
    geo_point position;
    double capacity_hz = 0.0;      // F_k
    double service_range_m = 0.0;  // d^s_max
};

struct station_snapshot {
    std::vector<station> stations;
};

struct station_defaults {
    double capacity_hz;
    double service_range_m;
};

/// Base-station CSV: header row with at least `lat` and `lon` columns;
/// optional `id`, `capacity_hz`, `range_m` columns override the scenario
/// defaults per row.
inline station_snapshot parse_stations(std::string_view content, const station_defaults& defaults) {
    std::istringstream in{std::string(content)};
    std::string line;
    if (!std::getline(in, line))
        throw error("stations: empty file");

    auto header = detail::split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[detail::trim_ws(header[i])] = i;
    if (!col.count("lat") || !col.count("lon"))
        throw error("stations: missing required column 'lat' or 'lon'");

    station_snapshot snap;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim_ws(line).empty()) continue;
        auto fields = detail::split_csv(line);
        auto field = [&](const std::string& name) -> const std::string& {
            static const std::string empty;
            auto it = col.find(name);
            if (it == col.end() || it->second >= fields.size()) return empty;
            return fields[it->second];
        };

        station s;
        double lat = 0, lon = 0;
        if (!detail::parse_double_strict(field("lat"), lat) ||
            !detail::parse_double_strict(field("lon"), lon))
            throw error("stations: line " + std::to_string(line_no) + ": bad coordinate");
        s.position = {lat, lon};
        if (!is_valid(s.position))
            throw error("stations: line " + std::to_string(line_no) + ": coordinate out of range");

        const std::string id_raw = detail::trim_ws(field("id"));
        s.id = id_raw.empty() ? "s" + std::to_string(row) : id_raw;
        if (!seen.insert(s.id).second)
            throw error("stations: line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");

        double cap = defaults.capacity_hz, rng_m = defaults.service_range_m;
        if (!detail::trim_ws(field("capacity_hz")).empty())
            require(detail::parse_double_strict(field("capacity_hz"), cap),
                    "stations: line " + std::to_string(line_no) + ": bad capacity_hz");
        if (!detail::trim_ws(field("range_m")).empty())
            require(detail::parse_double_strict(field("range_m"), rng_m),
                    "stations: line " + std::to_string(line_no) + ": bad range_m");
        if (cap <= 0.0 || rng_m <= 0.0)
            throw error("stations: line " + std::to_string(line_no) + ": capacity and range must be positive");
        s.capacity_hz = cap;
        s.service_range_m = rng_m;

        snap.stations.push_back(std::move(s));
        ++row;
    }
    if (snap.stations.empty())
        throw error("stations: no rows");
    return snap;
}

inline station_snapshot load_stations(const std::string& path, const station_defaults& defaults) {
    std::ifstream in(path);
    if (!in)
        throw error("stations: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_stations(ss.str(), defaults);
}

} // namespace tppd
