#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridstab/netmodel.hpp"

using namespace gridstab;

static std::string data_path(const std::string& name) {
    return std::string(GRIDSTAB_DATA_DIR) + "/" + name;
}

TEST_CASE("three-bus network file loads with the published line parameters") {
    Network net = load_network_config(data_path("three_bus.json"));
    REQUIRE(net.buses.size() == 3);
    REQUIRE(net.lines.size() == 2);
    for (const auto& ln : net.lines) {
        CHECK(ln.r == Catch::Approx(0.0146));
        CHECK(ln.l == Catch::Approx(0.146));
        CHECK(ln.g_sh == Catch::Approx(0.05));
        CHECK(ln.c_sh == Catch::Approx(0.09));
    }
    REQUIRE(net.loads.size() == 1);
    CHECK(net.loads[0].p == Catch::Approx(1.0));
    CHECK(net.loads[0].q == Catch::Approx(0.1));
    CHECK(net.units.size() == 2);
    CHECK(net.reference_unit == "gfm1");
}

TEST_CASE("validation rejects duplicate bus ids") {
    json doc = network_to_json(load_network_config(data_path("three_bus.json")));
    doc["buses"].push_back(doc["buses"][0]);
    CHECK_THROWS_AS(network_from_json(doc), ValidationError);
    CHECK_THROWS_WITH(network_from_json(doc), Catch::Matchers::ContainsSubstring("duplicate bus id"));
}

TEST_CASE("validation rejects a line to a nonexistent bus") {
    json doc = network_to_json(load_network_config(data_path("three_bus.json")));
    doc["lines"][0]["to"] = "nowhere";
    CHECK_THROWS_AS(network_from_json(doc), ValidationError);
}

TEST_CASE("validation rejects a disconnected graph") {
    json doc = network_to_json(load_network_config(data_path("three_bus.json")));
    doc["lines"].erase(1);  // bus2 becomes unreachable
    CHECK_THROWS_WITH(network_from_json(doc), Catch::Matchers::ContainsSubstring("not connected"));
}

TEST_CASE("validation rejects two loads on one bus") {
    json doc = network_to_json(load_network_config(data_path("three_bus.json")));
    doc["loads"].push_back({{"bus", "bus3"}, {"p", 0.1}, {"q", 0.0}});
    CHECK_THROWS_WITH(network_from_json(doc), Catch::Matchers::ContainsSubstring("more than one load"));
}

TEST_CASE("kcl_shunt_current examples") {
    Network net = load_network_config(data_path("three_bus.json"));

    SECTION("no injection, no lines") {
        Vec2d r = kcl_shunt_current(net, "bus1", {0, 0}, {});
        CHECK(r.d == 0.0);
        CHECK(r.q == 0.0);
    }
    SECTION("exact balance with one outgoing line") {
        Vec2d r = kcl_shunt_current(net, "bus1", {1, 0}, {{{1, 0}, false}});
        CHECK(r.d == Catch::Approx(0.0).margin(1e-15));
        CHECK(r.q == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("mixed incoming and outgoing") {
        Vec2d r = kcl_shunt_current(net, "bus2", {0.5, -0.1},
                                    {{{0.2, 0.1}, true}, {{0.3, 0.0}, false}});
        CHECK(r.d == Catch::Approx(0.4));
        CHECK(r.q == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("unknown bus id") {
        CHECK_THROWS_AS(kcl_shunt_current(net, "bus99", {0, 0}, {}), ValidationError);
    }
}

TEST_CASE("kcl telescoping over a consistent random network") {
    // With line currents assigned arbitrarily, summing the shunt-branch
    // currents over all nodes must telescope to the sum of injections.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    json doc;
    doc["base"] = {{"s_base_mva", 100.0}, {"v_base_kv", 100.0}, {"f_base_hz", 50.0}};
    const int n = 6;
    doc["buses"] = json::array();
    for (int i = 0; i < n; ++i)
        doc["buses"].push_back({{"id", "b" + std::to_string(i)},
                                {"kind", i == 0 ? "GFM" : "Load"},
                                {"shunt_c", 0.01}});
    doc["lines"] = json::array();
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < n; ++i) edges.emplace_back(rng() % i, i);  // random tree
    edges.emplace_back(0, n - 1);
    for (auto [a, b] : edges)
        doc["lines"].push_back({{"from", "b" + std::to_string(a)},
                                {"to", "b" + std::to_string(b)},
                                {"r", 0.01},
                                {"l", 0.1}});
    doc["loads"] = json::array();
    doc["units"] = json::array();
    doc["units"].push_back(
        {{"id", "u0"},
         {"bus", "b0"},
         {"kind", "GFM"},
         {"rating_mva", 100.0},
         {"params",
          {{"r_f", 0.01}, {"l_f", 0.08}, {"c_f", 0.074}, {"r_t", 0.01}, {"l_t", 0.15},
           {"R_p", 0.02}, {"R_q", 0.01}, {"omega_z", 0.1}, {"K_P_v", 0.5}, {"K_I_v", 100.0},
           {"K_P_i", 1.0}, {"K_I_i", 100.0}}},
         {"setpoint", {{"p", 0.0}, {"q", 0.0}, {"v", 1.0}, {"omega", 1.0}}}});
    doc["reference_unit"] = "u0";
    Network net = network_from_json(doc);

    std::vector<Vec2d> line_current(edges.size());
    for (auto& c : line_current) c = {u(rng), u(rng)};
    std::vector<Vec2d> injection(n);
    Vec2d total{0, 0};
    for (auto& inj : injection) {
        inj = {u(rng), u(rng)};
        total += inj;
    }

    Vec2d sum{0, 0};
    for (int k = 0; k < n; ++k) {
        std::vector<IncidentCurrent> inc;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (edges[e].second == k) inc.push_back({line_current[e], true});
            if (edges[e].first == k) inc.push_back({line_current[e], false});
        }
        sum += kcl_shunt_current(net, "b" + std::to_string(k), injection[k], inc);
    }
    CHECK(sum.d == Catch::Approx(total.d).margin(1e-12));
    CHECK(sum.q == Catch::Approx(total.q).margin(1e-12));
}

TEST_CASE("load_to_impedance") {
    SECTION("unity voltage") {
        auto [g, b] = load_to_impedance({"x", 1.0, 0.1}, 1.0);
        CHECK(g == Catch::Approx(1.0));
        CHECK(b == Catch::Approx(-0.1));
    }
    SECTION("no load") {
        auto [g, b] = load_to_impedance({"x", 0.0, 0.0}, 1.0);
        CHECK(g == 0.0);
        CHECK(b == 0.0);
    }
    SECTION("off-nominal rating voltage against the complex-power identity") {
        // independent check: s = v^2 * conj(y) must reproduce (p, q)
        auto [g, b] = load_to_impedance({"x", 1.0, 0.1}, 0.95);
        CHECK(g == Catch::Approx(1.0 / 0.9025));
        CHECK(b == Catch::Approx(-0.1 / 0.9025));
        std::complex<double> y(g, b);
        std::complex<double> s = 0.95 * 0.95 * std::conj(y);
        CHECK(s.real() == Catch::Approx(1.0));
        CHECK(s.imag() == Catch::Approx(0.1));
    }
    SECTION("drawn power reproduced at the rating voltage for random loads") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.05, 2.0);
        for (int i = 0; i < 50; ++i) {
            double p = u(rng), q = u(rng) - 1.0, v = u(rng);
            auto [g, b] = load_to_impedance({"x", p, q}, v);
            std::complex<double> s = v * v * std::conj(std::complex<double>(g, b));
            CHECK(s.real() == Catch::Approx(p).epsilon(1e-14));
            CHECK(s.imag() == Catch::Approx(q).margin(1e-14));
        }
    }
}

TEST_CASE("network serialization round-trip is structurally exact") {
    Network net = load_network_config(data_path("three_bus.json"));
    Network again = network_from_json(network_to_json(net));
    CHECK(again.buses.size() == net.buses.size());
    CHECK(again.lines.size() == net.lines.size());
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        CHECK(again.buses[i].id == net.buses[i].id);
        CHECK(again.buses[i].shunt_c == net.buses[i].shunt_c);
    }
    for (std::size_t i = 0; i < net.lines.size(); ++i) {
        CHECK(again.lines[i].r == net.lines[i].r);
        CHECK(again.lines[i].l == net.lines[i].l);
        CHECK(again.lines[i].g_sh == net.lines[i].g_sh);
        CHECK(again.lines[i].c_sh == net.lines[i].c_sh);
    }
    for (std::size_t i = 0; i < net.units.size(); ++i) {
        CHECK(again.units[i].id == net.units[i].id);
        CHECK(again.units[i].params == net.units[i].params);
        CHECK(again.units[i].setpoint.v == net.units[i].setpoint.v);
    }
    CHECK(again.reference_unit == net.reference_unit);
    // and the serialized forms agree byte for byte
    CHECK(network_to_json(net).dump() == network_to_json(again).dump());
}

TEST_CASE("malformed file reports a parse error") {
    CHECK_THROWS_AS(load_network_config(data_path("does_not_exist.json")), ParseError);
}
