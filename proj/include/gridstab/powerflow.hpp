#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridstab/common.hpp"
#include "gridstab/netmodel.hpp"

namespace gridstab {

// ---------------------------------------------------------------------------
// Dispatch: per-unit bus-type assignment with scheduled values. Power values
// are system-base pu, net injection at the unit's bus, with the generator
// sign convention (q > 0 supplies reactive power). Loads come from the
// network description and enter the bus admittance, not the schedule.
// ---------------------------------------------------------------------------

enum class PfBusType { Slack, PV, PQ };

struct DispatchEntry {
    std::string unit;
    PfBusType type = PfBusType::PQ;
    double p = 0.0;
    double q = 0.0;
    double v = 1.0;
};

struct DispatchSpec {
    std::vector<DispatchEntry> entries;

    DispatchEntry& for_unit(const std::string& id) {
        for (auto& e : entries)
            if (e.unit == id) return e;
        throw ValidationError("dispatch has no entry for unit '" + id + "'");
    }
    const DispatchEntry& for_unit(const std::string& id) const {
        return const_cast<DispatchSpec*>(this)->for_unit(id);
    }
};

inline void validate_dispatch(const Network& net, const DispatchSpec& d) {
    using detail::require;
    int slack_count = 0;
    for (const auto& e : d.entries) {
        net.unit_index(e.unit);  // throws if unknown
        if (e.type == PfBusType::Slack) ++slack_count;
        require(std::isfinite(e.p) && std::isfinite(e.q) && std::isfinite(e.v),
                "dispatch for '" + e.unit + "' has non-finite values");
        if (e.type != PfBusType::PQ)
            require(e.v > 0, "dispatch for '" + e.unit + "': v must be positive");
    }
    require(slack_count == 1,
            "dispatch must have exactly one slack unit (got " + std::to_string(slack_count) + ")");
    for (const auto& u : net.units) {
        bool found = false;
        for (const auto& e : d.entries) found |= e.unit == u.id;
        require(found, "dispatch missing an entry for unit '" + u.id + "'");
    }
}

inline DispatchSpec dispatch_from_json(const json& doc) {
    DispatchSpec d;
    if (!doc.is_object() || !doc.contains("units") || !doc.at("units").is_array())
        throw ParseError("dispatch document needs a 'units' array");
    for (const json& j : doc.at("units")) {
        DispatchEntry e;
        e.unit = detail::str_field(j, "unit", "dispatch entry");
        std::string t = detail::str_field(j, "type", "dispatch for " + e.unit);
        if (t == "slack") {
            e.type = PfBusType::Slack;
            e.v = detail::num_field(j, "v", "dispatch for " + e.unit);
        } else if (t == "pv") {
            e.type = PfBusType::PV;
            e.p = detail::num_field(j, "p", "dispatch for " + e.unit);
            e.v = detail::num_field(j, "v", "dispatch for " + e.unit);
        } else if (t == "pq") {
            e.type = PfBusType::PQ;
            e.p = detail::num_field(j, "p", "dispatch for " + e.unit);
            e.q = detail::num_field(j, "q", "dispatch for " + e.unit);
        } else {
            throw ParseError("dispatch for " + e.unit + ": unknown type '" + t + "'");
        }
        d.entries.push_back(std::move(e));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Newton-Raphson power flow, polar form, dense. Pi-section shunts, bus
// shunts and constant-impedance loads all live in the admittance matrix;
// scheduled injections are the generating units only.
// ---------------------------------------------------------------------------

struct PowerFlowOptions {
    double tol = 1e-10;  // infinity norm of the power mismatch, pu
    int max_iter = 50;
    // warm start: previous bus phasors (network order); empty = flat start
    std::vector<std::complex<double>> warm;
};

struct PfBus {
    std::string id;
    double v = 1.0;      // magnitude, pu
    double delta = 0.0;  // angle, rad (slack = 0)
    double p = 0.0;      // net injection, system pu
    double q = 0.0;      // net injection, generator convention
};

struct PowerFlowSolution {
    std::vector<PfBus> buses;
    int iterations = 0;
    double mismatch = 0.0;

    std::complex<double> phasor(std::size_t k) const {
        return std::polar(buses[k].v, buses[k].delta);
    }
};

inline Eigen::MatrixXcd build_ybus(const Network& net) {
    const std::size_t n = net.buses.size();
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& ln : net.lines) {
        std::size_t a = net.bus_index(ln.from), b = net.bus_index(ln.to);
        std::complex<double> ys = 1.0 / std::complex<double>(ln.r, ln.l);
        std::complex<double> ysh(0.5 * ln.g_sh, 0.5 * ln.c_sh);
        Y(a, a) += ys + ysh;
        Y(b, b) += ys + ysh;
        Y(a, b) -= ys;
        Y(b, a) -= ys;
    }
    for (std::size_t k = 0; k < n; ++k)
        Y(k, k) += std::complex<double>(net.buses[k].shunt_g, net.buses[k].shunt_c);
    for (const auto& ld : net.loads) {
        auto [g, b] = load_to_impedance(ld, 1.0);
        std::size_t k = net.bus_index(ld.bus);
        Y(k, k) += std::complex<double>(g, b);
    }
    return Y;
}

// Net complex injections S_k = V_k * conj((Y V)_k).
inline Eigen::VectorXcd bus_injections(const Eigen::MatrixXcd& Y, const Eigen::VectorXcd& V) {
    return V.array() * (Y * V).array().conjugate();
}

inline PowerFlowSolution solve_power_flow(const Network& net, const DispatchSpec& dispatch,
                                          const PowerFlowOptions& opt = {}) {
    validate_dispatch(net, dispatch);
    const std::size_t n = net.buses.size();
    const Eigen::MatrixXcd Y = build_ybus(net);

    std::vector<PfBusType> type(n, PfBusType::PQ);
    Eigen::VectorXd p_sched = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_sched = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v_sched = Eigen::VectorXd::Ones(n);
    std::size_t slack = 0;
    for (const auto& e : dispatch.entries) {
        std::size_t k = net.bus_index(net.units[net.unit_index(e.unit)].bus);
        type[k] = e.type;
        p_sched(k) = e.p;
        q_sched(k) = e.q;
        v_sched(k) = e.v;
        if (e.type == PfBusType::Slack) slack = k;
    }

    Eigen::VectorXd vm(n), va(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!opt.warm.empty()) {
            vm(k) = std::abs(opt.warm[k]);
            va(k) = std::arg(opt.warm[k]);
        } else {
            vm(k) = 1.0;
            va(k) = 0.0;
        }
        if (type[k] != PfBusType::PQ) vm(k) = v_sched(k);
    }
    va(slack) = 0.0;

    // unknown ordering: angles at non-slack buses, magnitudes at PQ buses
    std::vector<std::size_t> ang_idx, mag_idx;
    for (std::size_t k = 0; k < n; ++k) {
        if (k != slack) ang_idx.push_back(k);
        if (type[k] == PfBusType::PQ) mag_idx.push_back(k);
    }
    const std::size_t na = ang_idx.size(), nm = mag_idx.size();

    Eigen::VectorXd p_calc(n), q_calc(n);
    auto compute_pq = [&]() {
        for (std::size_t k = 0; k < n; ++k) {
            double pk = 0, qk = 0;
            for (std::size_t m = 0; m < n; ++m) {
                const double G = Y(k, m).real(), B = Y(k, m).imag();
                const double t = va(k) - va(m);
                pk += vm(m) * (G * std::cos(t) + B * std::sin(t));
                qk += vm(m) * (G * std::sin(t) - B * std::cos(t));
            }
            p_calc(k) = vm(k) * pk;
            q_calc(k) = vm(k) * qk;
        }
    };

    auto mismatch_norm = [&]() {
        double r = 0;
        for (std::size_t k : ang_idx) r = std::max(r, std::abs(p_sched(k) - p_calc(k)));
        for (std::size_t k : mag_idx) r = std::max(r, std::abs(q_sched(k) - q_calc(k)));
        return r;
    };

    compute_pq();
    double norm0 = mismatch_norm();
    PowerFlowSolution sol;
    for (int it = 0; it <= opt.max_iter; ++it) {
        if (norm0 < opt.tol) {
            sol.iterations = it;
            sol.mismatch = norm0;
            sol.buses.resize(n);
            for (std::size_t k = 0; k < n; ++k)
                sol.buses[k] = {net.buses[k].id, vm(k), va(k), p_calc(k), q_calc(k)};
            return sol;
        }
        if (it == opt.max_iter) break;

        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(na + nm, na + nm);
        Eigen::VectorXd F(na + nm);
        for (std::size_t r = 0; r < na; ++r) {
            const std::size_t k = ang_idx[r];
            F(r) = p_sched(k) - p_calc(k);
            for (std::size_t c = 0; c < na; ++c) {
                const std::size_t m = ang_idx[c];
                if (m == k)
                    J(r, c) = -q_calc(k) - Y(k, k).imag() * vm(k) * vm(k);
                else {
                    const double t = va(k) - va(m);
                    J(r, c) = vm(k) * vm(m) *
                              (Y(k, m).real() * std::sin(t) - Y(k, m).imag() * std::cos(t));
                }
            }
            for (std::size_t c = 0; c < nm; ++c) {
                const std::size_t m = mag_idx[c];
                if (m == k)
                    J(r, na + c) = p_calc(k) / vm(k) + Y(k, k).real() * vm(k);
                else {
                    const double t = va(k) - va(m);
                    J(r, na + c) = vm(k) * (Y(k, m).real() * std::cos(t) +
                                            Y(k, m).imag() * std::sin(t));
                }
            }
        }
        for (std::size_t r = 0; r < nm; ++r) {
            const std::size_t k = mag_idx[r];
            F(na + r) = q_sched(k) - q_calc(k);
            for (std::size_t c = 0; c < na; ++c) {
                const std::size_t m = ang_idx[c];
                if (m == k)
                    J(na + r, c) = p_calc(k) - Y(k, k).real() * vm(k) * vm(k);
                else {
                    const double t = va(k) - va(m);
                    J(na + r, c) = -vm(k) * vm(m) *
                                   (Y(k, m).real() * std::cos(t) + Y(k, m).imag() * std::sin(t));
                }
            }
            for (std::size_t c = 0; c < nm; ++c) {
                const std::size_t m = mag_idx[c];
                if (m == k)
                    J(na + r, na + c) = q_calc(k) / vm(k) - Y(k, k).imag() * vm(k);
                else {
                    const double t = va(k) - va(m);
                    J(na + r, na + c) = vm(k) * (Y(k, m).real() * std::sin(t) -
                                                 Y(k, m).imag() * std::cos(t));
                }
            }
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible())
            throw NumericalError("power flow: singular Jacobian at iteration " +
                                 std::to_string(it + 1));
        Eigen::VectorXd dx = lu.solve(F);
        if (!dx.allFinite())
            throw NumericalError("power flow: non-finite Newton step at iteration " +
                                 std::to_string(it + 1));
        for (std::size_t r = 0; r < na; ++r) va(ang_idx[r]) += dx(r);
        for (std::size_t r = 0; r < nm; ++r) vm(mag_idx[r]) += dx(na + r);
        for (std::size_t k : mag_idx)
            if (!(vm(k) > 0))
                throw NumericalError("power flow diverged: negative voltage magnitude at bus '" +
                                     net.buses[k].id + "'");
        compute_pq();
        norm0 = mismatch_norm();
    }
    throw NumericalError("power flow did not converge after " + std::to_string(opt.max_iter) +
                         " iterations (final mismatch " + std::to_string(norm0) + " pu)");
}

}  // namespace gridstab
