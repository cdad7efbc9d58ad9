#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include <tppd/data.hpp>
#include <tppd/rng.hpp>

using namespace tppd;

namespace {

std::string plt_with(const std::vector<std::string>& data_lines) {
    std::string s;
    for (int i = 0; i < 6; ++i)
        s += "header line " + std::to_string(i) + "\n";
    for (const auto& l : data_lines)
        s += l + "\n";
    return s;
}

trajectory make_track(std::size_t n, double lat0 = 39.9, double lon0 = 116.3,
                      double step_deg = 1e-5, double dt = 1.0) {
    trajectory t;
    t.vehicle_id = "v0";
    for (std::size_t i = 0; i < n; ++i)
        t.records.push_back({{lat0 + step_deg * static_cast<double>(i), lon0}, 1000.0 + dt * static_cast<double>(i)});
    return t;
}

} // namespace

TEST_CASE("parse_plt: counts and field positions", "[data]") {
    auto t = parse_plt(plt_with({
        "39.984702,116.318417,0,492,39744.1201851852,2008-10-23,02:53:04",
        "39.984683,116.31845,0,492,39744.1202546296,2008-10-23,02:53:10",
        "39.984686,116.318417,0,492,39744.1203240741,2008-10-23,02:53:16",
    }));
    REQUIRE(t.records.size() == 3);
    CHECK(t.records[0].position.lat_deg == 39.984702);
    CHECK(t.records[0].position.lon_deg == 116.318417);
    // 2008-10-23 = 14175 days since the epoch; 02:53:04 = 10384 s.
    CHECK(t.records[0].timestamp_s == 14175.0 * 86400.0 + 10384.0);
    CHECK(t.records[1].timestamp_s - t.records[0].timestamp_s == 6.0);
}

TEST_CASE("parse_plt: empty data section", "[data]") {
    CHECK_THROWS_WITH(parse_plt(plt_with({})), Catch::Matchers::ContainsSubstring("no records"));
}

TEST_CASE("parse_plt: malformed line names the line number", "[data]") {
    CHECK_THROWS_WITH(parse_plt(plt_with({
                          "39.9,116.3,0,10,39744.12,2008-10-23,02:53:04",
                          "not,a,valid,line",
                      })),
                      Catch::Matchers::ContainsSubstring("line 8"));
    CHECK_THROWS_WITH(parse_plt(plt_with({"91.5,116.3,0,10,39744.12,2008-10-23,02:53:04"})),
                      Catch::Matchers::ContainsSubstring("line 7"));
    CHECK_THROWS_WITH(parse_plt(plt_with({"39.9,116.3,0,10,39744.12,2008-13-23,02:53:04"})),
                      Catch::Matchers::ContainsSubstring("date"));
}

TEST_CASE("clean: clean data is unchanged", "[data]") {
    auto t = make_track(20);
    auto c = clean(t, 50.0);
    REQUIRE(c.records.size() == t.records.size());
}

TEST_CASE("clean: speed outlier removed", "[data]") {
    auto t = make_track(5);
    // ~100 km jump one second after its predecessor.
    t.records[2].position.lat_deg += 0.9;
    auto c = clean(t, 100.0);
    REQUIRE(c.records.size() == 4);
    for (const auto& r : c.records)
        CHECK(r.position.lat_deg < 39.91);
}

TEST_CASE("clean: duplicate timestamp dropped", "[data]") {
    auto t = make_track(4);
    t.records[2].timestamp_s = t.records[1].timestamp_s;
    auto c = clean(t, 50.0);
    CHECK(c.records.size() == 3);
    CHECK(c.records[1].position.lat_deg == t.records[1].position.lat_deg);
}

TEST_CASE("clean: idempotent on jittered tracks", "[data]") {
    rng r(11);
    for (int rep = 0; rep < 20; ++rep) {
        trajectory t = make_track(60);
        for (auto& rec : t.records) {
            rec.position.lat_deg += r.uniform(-5e-4, 5e-4);
            if (r.uniform() < 0.1) rec.timestamp_s -= r.uniform(0.0, 2.0);
        }
        auto once = clean(t, 30.0);
        auto twice = clean(once, 30.0);
        REQUIRE(once.records.size() == twice.records.size());
        for (std::size_t i = 0; i < once.records.size(); ++i) {
            CHECK(once.records[i].timestamp_s == twice.records[i].timestamp_s);
            CHECK(once.records[i].position.lat_deg == twice.records[i].position.lat_deg);
        }
    }
}

TEST_CASE("clean: degenerate result is an error", "[data]") {
    auto t = make_track(3);
    t.records[1].position.lat_deg += 10.0;
    t.records[2].position.lat_deg += 20.0;
    CHECK_THROWS_WITH(clean(t, 1.0), Catch::Matchers::ContainsSubstring("degenerate"));
}

TEST_CASE("build_windows: window count is records - seq_len", "[data]") {
    CHECK(build_windows(make_track(9), 8).windows.size() == 1);
    CHECK(build_windows(make_track(100), 8).windows.size() == 92);
    CHECK(build_windows(make_track(7082), 8).windows.size() == 7074);
    CHECK_THROWS_AS(build_windows(make_track(8), 8), tppd::error);

    rng r(3);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = static_cast<std::size_t>(r.uniform_int(9, 400));
        CHECK(build_windows(make_track(n), 8).windows.size() == n - 8);
    }
}

TEST_CASE("build_windows: normalized values lie in [0,1]", "[data]") {
    rng r(5);
    trajectory t = make_track(50);
    for (auto& rec : t.records) {
        rec.position.lat_deg += r.uniform(-1e-3, 1e-3);
        rec.position.lon_deg += r.uniform(-1e-3, 1e-3);
    }
    auto ds = build_windows(t, 8);
    for (const auto& w : ds.windows) {
        CHECK(w.input.minCoeff() >= 0.0);
        CHECK(w.input.maxCoeff() <= 1.0);
        CHECK(w.target.minCoeff() >= 0.0);
        CHECK(w.target.maxCoeff() <= 1.0);
    }
}

TEST_CASE("build_windows: constant trajectory maps to 0.5", "[data]") {
    trajectory t;
    for (int i = 0; i < 12; ++i)
        t.records.push_back({{40.0, 116.0}, 1000.0 + i});
    auto ds = build_windows(t, 8);
    REQUIRE(ds.windows.size() == 4);
    for (const auto& w : ds.windows) {
        CHECK(w.input(0, 0) == 0.5);
        CHECK(w.target(1) == 0.5);
    }
    CHECK(denormalize(0.5, ds.bounds.lat) == 40.0);
}

TEST_CASE("split: shares and chronology", "[data]") {
    auto ds = build_windows(make_track(108), 8); // 100 windows
    auto [train, test] = split(ds, 0.8);
    CHECK(train.windows.size() == 80);
    CHECK(test.windows.size() == 20);
    // Track is monotone in latitude, so targets are ordered in time:
    // every train target precedes every test target.
    const double train_max = train.windows.back().target(0);
    const double test_min = test.windows.front().target(0);
    CHECK(train_max < test_min);

    auto [a, b] = split(build_windows(make_track(10), 8), 0.5); // 2 windows
    CHECK(a.windows.size() == 1);
    CHECK(b.windows.size() == 1);

    CHECK_THROWS_AS(split(ds, 1.0), tppd::error);
    CHECK_THROWS_AS(split(ds, 0.0), tppd::error);
    auto tiny = build_windows(make_track(10), 8);
    CHECK_THROWS_AS(split(tiny, 0.1), tppd::error); // train share would be empty
}

TEST_CASE("parse_stations: defaults and row count", "[data]") {
    const station_defaults d{10e9, 1000.0};
    auto snap = parse_stations(
        "lat,lon\n"
        "39.90,116.30\n"
        "39.91,116.31\n"
        "39.92,116.32\n"
        "39.93,116.33\n"
        "39.94,116.34\n"
        "39.95,116.35\n",
        d);
    REQUIRE(snap.stations.size() == 6);
    CHECK(snap.stations[0].id == "s0");
    CHECK(snap.stations[5].capacity_hz == 10e9);
    CHECK(snap.stations[2].service_range_m == 1000.0);
}

TEST_CASE("parse_stations: per-row overrides", "[data]") {
    const station_defaults d{10e9, 1000.0};
    auto snap = parse_stations(
        "id,lat,lon,capacity_hz,range_m\n"
        "alpha,39.90,116.30,5e9,800\n"
        "beta,39.91,116.31,,\n",
        d);
    REQUIRE(snap.stations.size() == 2);
    CHECK(snap.stations[0].id == "alpha");
    CHECK(snap.stations[0].capacity_hz == 5e9);
    CHECK(snap.stations[0].service_range_m == 800.0);
    CHECK(snap.stations[1].capacity_hz == 10e9);
}

TEST_CASE("parse_stations: errors", "[data]") {
    const station_defaults d{10e9, 1000.0};
    CHECK_THROWS_WITH(parse_stations("x,lon\n1,2\n", d),
                      Catch::Matchers::ContainsSubstring("lat"));
    CHECK_THROWS_WITH(parse_stations("id,lat,lon\na,39.9,116.3\na,39.8,116.2\n", d),
                      Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_WITH(parse_stations("lat,lon\n91,116.3\n", d),
                      Catch::Matchers::ContainsSubstring("out of range"));
    CHECK_THROWS_AS(parse_stations("lat,lon\n", d), tppd::error);
}
