#pragma once

#include <algorithm>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridstab/common.hpp"
#include "gridstab/dae.hpp"
#include "gridstab/netmodel.hpp"
#include "gridstab/powerflow.hpp"

namespace gridstab {

// ---------------------------------------------------------------------------
// Exact DAE operating point: the power-flow solution plus fully initialized
// differential and algebraic vectors.
// ---------------------------------------------------------------------------

struct Equilibrium {
    PowerFlowSolution bus_solution;
    std::vector<double> x0;
    std::vector<double> z0;
    double f_norm = 0.0;  // |f(x0,z0)|_inf
    double g_norm = 0.0;  // |g(x0,z0)|_inf
};

struct AssembledCase {
    std::shared_ptr<PowerSystemModel> model;  // unit setpoints anchored at the operating point
    Equilibrium eq;
};

struct AssembleOptions {
    PowerFlowOptions pf{1e-12, 50, {}};
    double residual_tol = 1e-8;
    bool polish = true;  // Newton-polish toward machine precision
};

namespace detail {

inline void eval_residual(const DaeModel& m, const std::vector<double>& x,
                          const std::vector<double>& z, std::vector<double>& f,
                          std::vector<double>& g) {
    f.assign(m.n_x(), 0.0);
    g.assign(m.n_z(), 0.0);
    m.eval(x.data(), z.data(), f.data(), g.data());
}

inline double inf_norm(const std::vector<double>& v) {
    double r = 0;
    for (double e : v) r = std::max(r, std::abs(e));
    return r;
}

inline std::string worst_equations(const DaeModel& m, const std::vector<double>& f,
                                   const std::vector<double>& g, std::size_t count = 5) {
    struct Item {
        double mag;
        std::string name;
    };
    std::vector<Item> items;
    const auto& xl = m.state_labels();
    const auto& zl = m.algebraic_labels();
    for (std::size_t i = 0; i < f.size(); ++i)
        items.push_back({std::abs(f[i]), "f[" + (i < xl.size() ? xl[i] : std::to_string(i)) + "]"});
    for (std::size_t i = 0; i < g.size(); ++i)
        items.push_back({std::abs(g[i]), "g[" + (i < zl.size() ? zl[i] : std::to_string(i)) + "]"});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.mag > b.mag; });
    std::string out;
    for (std::size_t i = 0; i < std::min(count, items.size()); ++i)
        out += (i ? ", " : "") + items[i].name + "=" + std::to_string(items[i].mag);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Newton polish of (f,g)=0. The combined Jacobian carries the structural
// frame-gauge null direction, so the step is computed as the least-squares
// solution with the reference unit's angle pinned.
// ---------------------------------------------------------------------------

inline void refine_equilibrium(const PowerSystemModel& m, Equilibrium& eq,
                               double target = 1e-12, int max_iter = 12) {
    const std::size_t nx = m.n_x(), nz = m.n_z(), n = nx + nz;
    const std::size_t gauge_col = m.ref_frozen_state();

    std::vector<double> f, g;
    for (int it = 0; it < max_iter; ++it) {
        detail::eval_residual(m, eq.x0, eq.z0, f, g);
        eq.f_norm = detail::inf_norm(f);
        eq.g_norm = detail::inf_norm(g);
        if (std::max(eq.f_norm, eq.g_norm) < target) return;

        DaeJacobian J = compute_jacobian(m, eq.x0, eq.z0);
        Eigen::MatrixXd A(n + 1, n);
        A << J.fx, J.fz, J.gx, J.gz, Eigen::RowVectorXd::Zero(n);
        A(n, gauge_col) = 1.0;  // pin the frame gauge
        Eigen::VectorXd r(n + 1);
        for (std::size_t i = 0; i < nx; ++i) r(i) = f[i];
        for (std::size_t i = 0; i < nz; ++i) r(nx + i) = g[i];
        r(n) = 0.0;

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < static_cast<Eigen::Index>(n))
            throw NumericalError("refine_equilibrium: singular combined Jacobian (rank " +
                                 std::to_string(qr.rank()) + " of " + std::to_string(n) + ")");
        Eigen::VectorXd step = qr.solve(-r);
        for (std::size_t i = 0; i < nx; ++i) eq.x0[i] += step(i);
        for (std::size_t i = 0; i < nz; ++i) eq.z0[i] += step(nx + i);
    }
    detail::eval_residual(m, eq.x0, eq.z0, f, g);
    eq.f_norm = detail::inf_norm(f);
    eq.g_norm = detail::inf_norm(g);
    if (std::max(eq.f_norm, eq.g_norm) >= target)
        throw NumericalError("refine_equilibrium: did not reach residual " +
                             std::to_string(target) + "; worst equations: " +
                             detail::worst_equations(m, f, g));
}

// ---------------------------------------------------------------------------
// Dispatch -> power flow -> unit back-solve -> assembled DAE equilibrium.
//
// Unit setpoints are re-anchored at the solved operating point (droop
// deviations zero, system frequency exactly nominal); the network frame is
// gauged to the reference unit's converter/rotor angle.
// ---------------------------------------------------------------------------

inline AssembledCase assemble_equilibrium(const Network& net, const DispatchSpec& dispatch,
                                          const AssembleOptions& opt = {}) {
    PowerFlowSolution pf = solve_power_flow(net, dispatch, opt.pf);
    auto model = std::make_shared<PowerSystemModel>(net);
    PowerSystemModel& m = *model;

    const std::size_t nbus = net.buses.size(), nline = net.lines.size();
    std::vector<std::complex<double>> V(nbus);
    for (std::size_t k = 0; k < nbus; ++k) V[k] = pf.phasor(k);

    // per-unit terminal pair and closed-form back-solve, in the power-flow frame
    std::vector<double> frame_angle(m.units().size(), 0.0);
    std::vector<std::vector<double>> unit_states(m.units().size());
    for (std::size_t ui = 0; ui < m.units().size(); ++ui) {
        auto& u = m.units()[ui];
        const std::complex<double> v = V[u.bus];
        std::complex<double> s_unit(pf.buses[u.bus].p, pf.buses[u.bus].q);
        // add back the constant-impedance load drawn at this bus, if any
        const double g_l = m.load_g(u.bus), b_l = m.load_b(u.bus);
        s_unit += std::norm(v) * std::complex<double>(g_l, -b_l);
        const std::complex<double> i_sys = std::conj(s_unit / v);
        const Vec2d v_n{v.real(), v.imag()};
        const Vec2d i_n{i_sys.real() / u.s_ratio, i_sys.imag() / u.s_ratio};

        if (u.kind == UnitKind::SG) {
            SgInit init = init_sg_state(u.sgp, v_n, i_n);
            u.refs = init.refs;
            frame_angle[ui] = init.frame_angle;
            unit_states[ui] = std::move(init.state);
        } else {
            ConverterInit init = init_converter_state(u.cp, u.mode, v_n, i_n);
            u.csp = init.setpoint;
            frame_angle[ui] = init.frame_angle;
            unit_states[ui] = std::move(init.state);
        }
    }

    // gauge the network frame to the reference unit
    const double alpha_ref = frame_angle[m.reference_unit()];
    Equilibrium eq;
    eq.bus_solution = pf;
    eq.x0.assign(m.n_x(), 0.0);

    for (std::size_t i = 0; i < nline; ++i) {
        const auto& ln = net.lines[i];
        std::size_t a = net.bus_index(ln.from), b = net.bus_index(ln.to);
        const std::complex<double> y = 1.0 / std::complex<double>(ln.r, ln.l);
        const std::complex<double> il = (V[a] - V[b]) * y;
        const std::complex<double> ir = il * std::polar(1.0, -alpha_ref);
        eq.x0[m.line_offset(i)] = ir.real();
        eq.x0[m.line_offset(i) + 1] = ir.imag();
    }
    for (std::size_t k = 0; k < nbus; ++k) {
        const std::complex<double> vr = V[k] * std::polar(1.0, -alpha_ref);
        eq.x0[m.bus_offset(k)] = vr.real();
        eq.x0[m.bus_offset(k) + 1] = vr.imag();
    }
    for (std::size_t ui = 0; ui < m.units().size(); ++ui) {
        auto& u = m.units()[ui];
        std::copy(unit_states[ui].begin(), unit_states[ui].end(), eq.x0.begin() + u.x_offset);
        eq.x0[u.x_offset] = frame_angle[ui] - alpha_ref;  // relative frame angle
        if (u.kind != UnitKind::SG && u.mode == ConverterMode::GFL)
            eq.x0[u.x_offset + cvt::kThetaS] -= alpha_ref;
    }

    eq.z0.assign(m.n_z(), 0.0);
    eq.z0[m.z_omega_g()] = 1.0;
    solve_algebraic(m, eq.x0, eq.z0);

    std::vector<double> f, g;
    detail::eval_residual(m, eq.x0, eq.z0, f, g);
    eq.f_norm = detail::inf_norm(f);
    eq.g_norm = detail::inf_norm(g);

    if (opt.polish && std::max(eq.f_norm, eq.g_norm) > 1e-13) {
        try {
            refine_equilibrium(m, eq, std::max(1e-13, opt.residual_tol * 1e-4));
        } catch (const NumericalError&) {
            // fall through to the hard check below
        }
    }
    if (std::max(eq.f_norm, eq.g_norm) >= opt.residual_tol) {
        detail::eval_residual(m, eq.x0, eq.z0, f, g);
        throw NumericalError("equilibrium initialization inconsistent: |f|=" +
                             std::to_string(eq.f_norm) + ", |g|=" + std::to_string(eq.g_norm) +
                             "; worst equations: " + detail::worst_equations(m, f, g));
    }
    return {model, std::move(eq)};
}

// JSON report for --dump-equilibrium: bus table plus the named state vector.
inline json equilibrium_to_json(const PowerSystemModel& m, const Equilibrium& eq) {
    json doc;
    doc["buses"] = json::array();
    for (const auto& b : eq.bus_solution.buses)
        doc["buses"].push_back(
            {{"id", b.id}, {"v", b.v}, {"delta", b.delta}, {"p", b.p}, {"q", b.q}});
    json xs = json::object(), zs = json::object();
    const auto& xl = m.state_labels();
    const auto& zl = m.algebraic_labels();
    for (std::size_t i = 0; i < eq.x0.size(); ++i) xs[xl[i]] = eq.x0[i];
    for (std::size_t i = 0; i < eq.z0.size(); ++i) zs[zl[i]] = eq.z0[i];
    doc["states"] = xs;
    doc["algebraic"] = zs;
    doc["residual"] = {{"f_inf", eq.f_norm}, {"g_inf", eq.g_norm}};
    return doc;
}

}  // namespace gridstab
