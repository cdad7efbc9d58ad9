#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include <tppd/data.hpp>
#include <tppd/scenario.hpp>

using namespace tppd;

namespace {

struct temp_file {
    std::string path;
    temp_file(const std::string& name, const std::string& content)
        : path("/tmp/tppd_scn_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~temp_file() { std::remove(path.c_str()); }
};

const geo_point kCenter{39.90, 116.30};

} // namespace

TEST_CASE("offset_point: metric accuracy near the scenario scale", "[scenario]") {
    for (double east : {500.0, -1200.0}) {
        const geo_point p = offset_point(kCenter, east, 0.0);
        CHECK(haversine_distance(kCenter, p) == Catch::Approx(std::abs(east)).epsilon(1e-3));
    }
    const geo_point q = offset_point(kCenter, 0.0, 800.0);
    CHECK(haversine_distance(kCenter, q) == Catch::Approx(800.0).epsilon(1e-3));
    CHECK(q.lon_deg == kCenter.lon_deg);
}

TEST_CASE("orbit_track: geometry and cadence", "[scenario]") {
    trajectory t = orbit_track("v0", kCenter, 400.0, 15.0, 0.0, 120);
    REQUIRE(t.records.size() == 120);
    for (std::size_t j = 0; j < t.records.size(); j += 17) {
        CHECK(haversine_distance(kCenter, t.records[j].position) ==
              Catch::Approx(400.0).epsilon(2e-3));
        CHECK(t.records[j].timestamp_s == static_cast<double>(j));
    }
    // Arc step: consecutive points are ~15 m apart (chord vs arc is tiny).
    for (std::size_t j = 1; j < 10; ++j)
        CHECK(haversine_distance(t.records[j - 1].position, t.records[j].position) ==
              Catch::Approx(15.0).epsilon(5e-3));

    // Opposite phases sit on opposite sides of the circle.
    trajectory o = orbit_track("v1", kCenter, 400.0, 15.0, 3.14159265358979, 120);
    CHECK(haversine_distance(t.records[0].position, o.records[0].position) ==
          Catch::Approx(800.0).epsilon(2e-3));
}

TEST_CASE("sinusoid_track: shape, noise, determinism", "[scenario]") {
    trajectory smooth = sinusoid_track("t", kCenter, 4000.0, 300.0, 6.0, 2400, 0.0, 1);
    REQUIRE(smooth.records.size() == 2400);
    // Endpoints span the configured extent.
    CHECK(haversine_distance(smooth.records.front().position, smooth.records.back().position) ==
          Catch::Approx(4000.0).epsilon(2e-3));
    // Latitude swings stay within the amplitude around the center.
    for (const auto& r : smooth.records) {
        const double north =
            (r.position.lat_deg - kCenter.lat_deg) * earth_radius_m * 3.14159265358979 / 180.0;
        CHECK(std::abs(north) <= 300.0 * (1.0 + 1e-9));
    }

    trajectory noisy = sinusoid_track("t", kCenter, 4000.0, 300.0, 6.0, 2400, 0.01, 1);
    trajectory noisy2 = sinusoid_track("t", kCenter, 4000.0, 300.0, 6.0, 2400, 0.01, 1);
    trajectory other = sinusoid_track("t", kCenter, 4000.0, 300.0, 6.0, 2400, 0.01, 2);
    bool same = true, differs = false, deviates = false;
    for (std::size_t j = 0; j < noisy.records.size(); ++j) {
        same = same && noisy.records[j].position.lat_deg == noisy2.records[j].position.lat_deg;
        differs = differs || noisy.records[j].position.lat_deg != other.records[j].position.lat_deg;
        deviates = deviates || noisy.records[j].position.lat_deg != smooth.records[j].position.lat_deg;
    }
    CHECK(same);
    CHECK(differs);
    CHECK(deviates);

    // Window construction downstream works as-is.
    CHECK(build_windows(noisy, 8).size() == 2400 - 8);
}

TEST_CASE("ring_stations: placement", "[scenario]") {
    auto ring = ring_stations(kCenter, 500.0, 6, 10e9, 1000.0);
    REQUIRE(ring.size() == 6);
    for (std::size_t k = 0; k < ring.size(); ++k) {
        CHECK(ring[k].id == "s" + std::to_string(k));
        CHECK(haversine_distance(kCenter, ring[k].position) == Catch::Approx(500.0).epsilon(2e-3));
        CHECK(ring[k].capacity_hz == 10e9);
    }
    // Neighbors are separated by a 60-degree chord: 2 R sin(30 deg) = R.
    CHECK(haversine_distance(ring[0].position, ring[1].position) ==
          Catch::Approx(500.0).epsilon(2e-3));
}

TEST_CASE("load_scenario: stock world from an empty config", "[scenario]") {
    scenario sc = load_scenario(config::parse(""));
    CHECK(sc.vehicles.size() == 4);
    CHECK(sc.servers.size() == 6);
    CHECK(sc.channel.subchannels == 4);
    CHECK(sc.slots_per_episode == 100);
    for (const auto& v : sc.vehicles) CHECK(v.track.records.size() == 100);

    // The result is a valid world end to end.
    environment env(sc);
    env_state st = env.initial_state();
    auto tasks = env.tasks_for_slot(0);
    auto view = env.observe(st, tasks, position_mode::actual);
    // Every vehicle can reach at least one server in the stock geometry.
    for (std::size_t i = 0; i < sc.vehicles.size(); ++i) {
        bool any = false;
        for (std::size_t k = 0; k < sc.servers.size(); ++k) any = any || view.available[i][k];
        CHECK(any);
    }
}

TEST_CASE("load_scenario: key overrides", "[scenario]") {
    config cfg = config::parse(R"(
[world]
slots = 64
[vehicles]
count = 2
comm_range_m = 600
[servers]
count = 3
capacity_hz = 8e9
[channel]
subchannels = 5
[tasks]
cycles_max = 0.8e9
seed = 42
[sim]
slots_per_episode = 50
penalty_miss = 7.5
)");
    scenario sc = load_scenario(cfg);
    CHECK(sc.vehicles.size() == 2);
    CHECK(sc.vehicles[0].comm_range_m == 600.0);
    CHECK(sc.vehicles[0].track.records.size() == 64);
    CHECK(sc.servers.size() == 3);
    CHECK(sc.servers[1].capacity_hz == 8e9);
    CHECK(sc.channel.subchannels == 5);
    CHECK(sc.ranges.cycles_max == 0.8e9);
    CHECK(sc.task_seed == 42);
    CHECK(sc.slots_per_episode == 50);
    CHECK(sc.penalty_miss == 7.5);
}

TEST_CASE("load_scenario: ingests trajectory and station files", "[scenario]") {
    std::string plt = "h\nh\nh\nh\nh\nh\n";
    for (int j = 0; j < 20; ++j) {
        char line[128];
        std::snprintf(line, sizeof line, "39.9%03d,116.3,0,0,0,2008-10-23,02:53:%02d\n", j, j);
        plt += line;
    }
    temp_file track("track.plt", plt);
    temp_file stations("bs.csv",
                       "id,lat,lon,capacity_hz,range_m\n"
                       "alpha,39.905,116.300,12e9,900\n"
                       "beta,39.895,116.300,,\n");

    config cfg = config::parse("[vehicles]\ntracks = [\"" + track.path + "\"]\n"
                               "[servers]\nstations_file = \"" + stations.path + "\"\n"
                               "[sim]\nslots_per_episode = 10\n");
    scenario sc = load_scenario(cfg);
    REQUIRE(sc.vehicles.size() == 1);
    CHECK(sc.vehicles[0].track.records.size() == 20);
    CHECK(sc.vehicles[0].track.records[3].position.lat_deg == 39.9003);
    REQUIRE(sc.servers.size() == 2);
    CHECK(sc.servers[0].id == "alpha");
    CHECK(sc.servers[0].capacity_hz == 12e9);
    CHECK(sc.servers[1].id == "beta");
    CHECK(sc.servers[1].capacity_hz == 10e9);   // default fill-in
    CHECK(sc.channel.subchannels == 1);
}

TEST_CASE("load_scenario: rejects tracks shorter than an episode", "[scenario]") {
    config cfg = config::parse("[world]\nslots = 30\n[sim]\nslots_per_episode = 50\n");
    CHECK_THROWS_WITH(load_scenario(cfg), Catch::Matchers::ContainsSubstring("episode"));
}
