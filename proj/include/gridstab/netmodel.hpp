#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridstab/common.hpp"

namespace gridstab {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Per-unit network description. All electrical quantities are in pu on the
// system base except unit ratings (MVA). See docs/network-schema.md for the
// on-disk format and sign conventions.
// ---------------------------------------------------------------------------

struct PerUnitBase {
    double s_base_mva = 0.0;
    double v_base_kv = 0.0;
    double omega_b = 0.0;  // base angular frequency, rad/s
};

enum class BusKind { SG, GFM, GFL, Load };
enum class UnitKind { SG, GFM, GFL };

inline std::string to_string(BusKind k) {
    switch (k) {
        case BusKind::SG: return "SG";
        case BusKind::GFM: return "GFM";
        case BusKind::GFL: return "GFL";
        case BusKind::Load: return "Load";
    }
    return "?";
}

inline std::string to_string(UnitKind k) {
    switch (k) {
        case UnitKind::SG: return "SG";
        case UnitKind::GFM: return "GFM";
        case UnitKind::GFL: return "GFL";
    }
    return "?";
}

struct Bus {
    std::string id;
    BusKind kind = BusKind::Load;
    double shunt_g = 0.0;  // own shunt conductance, pu
    double shunt_c = 0.0;  // own shunt capacitance, pu
};

// Series r-l with a pi-section shunt (g_sh, c_sh are the line totals,
// split half to each terminal bus). Branch current is positive from -> to.
struct Line {
    std::string from;
    std::string to;
    double r = 0.0;
    double l = 0.0;
    double g_sh = 0.0;
    double c_sh = 0.0;
};

// Constant-impedance load rated to draw (p, q) at 1.0 pu voltage.
// q > 0 means inductive draw (consumer convention, y = (p - jq)/v^2).
struct Load {
    std::string bus;
    double p = 0.0;
    double q = 0.0;
};

struct Setpoint {
    double p = 0.0;
    double q = 0.0;
    double v = 1.0;
    double omega = 1.0;  // GFM frequency reference, pu
};

// Unit parameters stay as parsed JSON here; the components module gives them
// typed form. Keeping the raw document makes network round-trips exact.
struct UnitSpec {
    std::string id;
    std::string bus;
    UnitKind kind = UnitKind::GFM;
    double rating_mva = 0.0;
    json params;
    Setpoint setpoint;
};

struct Network {
    PerUnitBase base;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Load> loads;
    std::vector<UnitSpec> units;
    std::string reference_unit;

    std::size_t bus_index(const std::string& id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return i;
        throw ValidationError("unknown bus id '" + id + "'");
    }

    std::size_t unit_index(const std::string& id) const {
        for (std::size_t i = 0; i < units.size(); ++i)
            if (units[i].id == id) return i;
        throw ValidationError("unknown unit id '" + id + "'");
    }

    const Load* load_at_bus(std::size_t bus_idx) const {
        for (const auto& ld : loads)
            if (ld.bus == buses[bus_idx].id) return &ld;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace detail

inline void validate_network(const Network& net) {
    using detail::require;

    require(net.base.s_base_mva > 0, "base.s_base_mva must be positive");
    require(net.base.v_base_kv > 0, "base.v_base_kv must be positive");
    require(net.base.omega_b > 0, "base frequency must be positive");
    require(!net.buses.empty(), "network has no buses");

    std::map<std::string, std::size_t> bus_ids;
    for (const auto& b : net.buses) {
        require(!b.id.empty(), "bus with empty id");
        require(bus_ids.emplace(b.id, bus_ids.size()).second, "duplicate bus id '" + b.id + "'");
        require(b.shunt_g >= 0, "bus '" + b.id + "': shunt_g must be >= 0");
        require(b.shunt_c >= 0, "bus '" + b.id + "': shunt_c must be >= 0");
    }

    for (const auto& ln : net.lines) {
        require(bus_ids.count(ln.from), "line references nonexistent bus '" + ln.from + "'");
        require(bus_ids.count(ln.to), "line references nonexistent bus '" + ln.to + "'");
        require(ln.from != ln.to, "line from '" + ln.from + "' to itself");
        require(ln.r >= 0, "line " + ln.from + "-" + ln.to + ": r must be >= 0");
        require(ln.l > 0, "line " + ln.from + "-" + ln.to + ": l must be > 0");
        require(ln.g_sh >= 0 && ln.c_sh >= 0,
                "line " + ln.from + "-" + ln.to + ": shunt values must be >= 0");
    }

    // connectivity over the line graph (union-find)
    if (net.buses.size() > 1) {
        std::vector<std::size_t> parent(net.buses.size());
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        for (const auto& ln : net.lines) parent[find(bus_ids[ln.from])] = find(bus_ids[ln.to]);
        std::size_t root = find(0);
        for (std::size_t i = 1; i < net.buses.size(); ++i)
            require(find(i) == root, "network graph is not connected (bus '" + net.buses[i].id +
                                         "' unreachable from '" + net.buses[0].id + "')");
    }

    std::map<std::string, int> loads_per_bus;
    for (const auto& ld : net.loads) {
        require(bus_ids.count(ld.bus), "load references nonexistent bus '" + ld.bus + "'");
        require(++loads_per_bus[ld.bus] <= 1, "more than one load at bus '" + ld.bus + "'");
    }

    std::map<std::string, std::size_t> unit_ids;
    std::map<std::string, int> units_per_bus;
    for (const auto& u : net.units) {
        require(!u.id.empty(), "unit with empty id");
        require(unit_ids.emplace(u.id, unit_ids.size()).second, "duplicate unit id '" + u.id + "'");
        require(bus_ids.count(u.bus), "unit '" + u.id + "' references nonexistent bus '" + u.bus + "'");
        require(u.rating_mva > 0, "unit '" + u.id + "': rating_mva must be positive");
        require(++units_per_bus[u.bus] <= 1, "more than one unit at bus '" + u.bus + "'");
        const Bus& b = net.buses[net.bus_index(u.bus)];
        require(to_string(b.kind) == to_string(u.kind),
                "unit '" + u.id + "' of kind " + to_string(u.kind) + " placed at bus '" + u.bus +
                    "' of kind " + to_string(b.kind));
        require(u.setpoint.v > 0, "unit '" + u.id + "': setpoint v must be positive");
    }

    require(!net.units.empty(), "network has no generating units");
    require(unit_ids.count(net.reference_unit),
            "reference_unit '" + net.reference_unit + "' is not a defined unit");
}

// ---------------------------------------------------------------------------
// Node current balance: current entering the shunt branch of a bus, given the
// unit injection and the incident branch currents. The conductance term g_k*v
// is not subtracted here; it lives in the voltage dynamic itself.
// ---------------------------------------------------------------------------

struct IncidentCurrent {
    Vec2d current;
    bool into_node = true;
};

inline Vec2d kcl_shunt_current(const Network& net, const std::string& bus_id,
                               const Vec2d& nodal_injection,
                               const std::vector<IncidentCurrent>& incident) {
    net.bus_index(bus_id);  // throws on unknown bus
    Vec2d sum = nodal_injection;
    for (const auto& inc : incident) {
        if (inc.into_node)
            sum += inc.current;
        else
            sum -= inc.current;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Constant-impedance conversion: admittance that draws exactly (p, q) at
// voltage magnitude v_nominal. Returns (g, b) with b = -q/v^2 (inductive draw
// has negative susceptance).
// ---------------------------------------------------------------------------

inline std::pair<double, double> load_to_impedance(const Load& load, double v_nominal) {
    if (!(v_nominal > 0)) throw ValidationError("load_to_impedance: v_nominal must be positive");
    double v2 = v_nominal * v_nominal;
    return {load.p / v2, -load.q / v2};
}

// ---------------------------------------------------------------------------
// JSON ingestion / serialization
// ---------------------------------------------------------------------------

namespace detail {

inline double num_field(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
    if (!j.at(key).is_number()) throw ParseError(ctx + ": field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline double num_field_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<double>();
}

inline std::string str_field(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
    if (!j.at(key).is_string()) throw ParseError(ctx + ": field '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

inline BusKind parse_bus_kind(const std::string& s, const std::string& ctx) {
    if (s == "SG") return BusKind::SG;
    if (s == "GFM") return BusKind::GFM;
    if (s == "GFL") return BusKind::GFL;
    if (s == "Load") return BusKind::Load;
    throw ParseError(ctx + ": unknown bus kind '" + s + "'");
}

inline UnitKind parse_unit_kind(const std::string& s, const std::string& ctx) {
    if (s == "SG") return UnitKind::SG;
    if (s == "GFM") return UnitKind::GFM;
    if (s == "GFL") return UnitKind::GFL;
    throw ParseError(ctx + ": unknown unit kind '" + s + "'");
}

}  // namespace detail

inline Network network_from_json(const json& doc) {
    using namespace detail;
    Network net;

    if (!doc.is_object()) throw ParseError("network document must be a JSON object");
    if (!doc.contains("base")) throw ParseError("network: missing 'base'");
    const json& jb = doc.at("base");
    net.base.s_base_mva = num_field(jb, "s_base_mva", "base");
    net.base.v_base_kv = num_field(jb, "v_base_kv", "base");
    if (jb.contains("omega_b"))
        net.base.omega_b = jb.at("omega_b").get<double>();
    else if (jb.contains("f_base_hz"))
        net.base.omega_b = 2.0 * kPi * jb.at("f_base_hz").get<double>();
    else
        throw ParseError("base: give either 'omega_b' or 'f_base_hz'");

    for (const json& j : doc.value("buses", json::array())) {
        Bus b;
        b.id = str_field(j, "id", "bus");
        b.kind = parse_bus_kind(str_field(j, "kind", "bus " + b.id), "bus " + b.id);
        b.shunt_g = num_field_or(j, "shunt_g", 0.0);
        b.shunt_c = num_field_or(j, "shunt_c", 0.0);
        net.buses.push_back(std::move(b));
    }

    for (const json& j : doc.value("lines", json::array())) {
        Line ln;
        ln.from = str_field(j, "from", "line");
        ln.to = str_field(j, "to", "line");
        std::string ctx = "line " + ln.from + "-" + ln.to;
        ln.r = num_field(j, "r", ctx);
        ln.l = num_field(j, "l", ctx);
        ln.g_sh = num_field_or(j, "g_sh", 0.0);
        ln.c_sh = num_field_or(j, "c_sh", 0.0);
        net.lines.push_back(std::move(ln));
    }

    for (const json& j : doc.value("loads", json::array())) {
        Load ld;
        ld.bus = str_field(j, "bus", "load");
        ld.p = num_field(j, "p", "load at " + ld.bus);
        ld.q = num_field(j, "q", "load at " + ld.bus);
        net.loads.push_back(std::move(ld));
    }

    for (const json& j : doc.value("units", json::array())) {
        UnitSpec u;
        u.id = str_field(j, "id", "unit");
        u.bus = str_field(j, "bus", "unit " + u.id);
        u.kind = parse_unit_kind(str_field(j, "kind", "unit " + u.id), "unit " + u.id);
        u.rating_mva = num_field(j, "rating_mva", "unit " + u.id);
        if (!j.contains("params") || !j.at("params").is_object())
            throw ParseError("unit " + u.id + ": missing 'params' object");
        u.params = j.at("params");
        const json& sp = j.contains("setpoint") ? j.at("setpoint") : json::object();
        u.setpoint.p = num_field_or(sp, "p", 0.0);
        u.setpoint.q = num_field_or(sp, "q", 0.0);
        u.setpoint.v = num_field_or(sp, "v", 1.0);
        u.setpoint.omega = num_field_or(sp, "omega", 1.0);
        net.units.push_back(std::move(u));
    }

    if (!doc.contains("reference_unit"))
        throw ParseError("network: missing 'reference_unit'");
    net.reference_unit = doc.at("reference_unit").get<std::string>();

    validate_network(net);
    return net;
}

inline json network_to_json(const Network& net) {
    json doc;
    doc["schema_version"] = 1;
    doc["base"] = {{"s_base_mva", net.base.s_base_mva},
                   {"v_base_kv", net.base.v_base_kv},
                   {"omega_b", net.base.omega_b}};
    doc["buses"] = json::array();
    for (const auto& b : net.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"kind", to_string(b.kind)},
                                {"shunt_g", b.shunt_g},
                                {"shunt_c", b.shunt_c}});
    doc["lines"] = json::array();
    for (const auto& ln : net.lines)
        doc["lines"].push_back({{"from", ln.from},
                                {"to", ln.to},
                                {"r", ln.r},
                                {"l", ln.l},
                                {"g_sh", ln.g_sh},
                                {"c_sh", ln.c_sh}});
    doc["loads"] = json::array();
    for (const auto& ld : net.loads)
        doc["loads"].push_back({{"bus", ld.bus}, {"p", ld.p}, {"q", ld.q}});
    doc["units"] = json::array();
    for (const auto& u : net.units)
        doc["units"].push_back({{"id", u.id},
                                {"bus", u.bus},
                                {"kind", to_string(u.kind)},
                                {"rating_mva", u.rating_mva},
                                {"params", u.params},
                                {"setpoint",
                                 {{"p", u.setpoint.p},
                                  {"q", u.setpoint.q},
                                  {"v", u.setpoint.v},
                                  {"omega", u.setpoint.omega}}}});
    doc["reference_unit"] = net.reference_unit;
    return doc;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in '" + path + "': " + e.what());
    }
    return doc;
}

inline Network load_network_config(const std::string& path) {
    return network_from_json(load_json_file(path));
}

}  // namespace gridstab
