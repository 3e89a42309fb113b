#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridstab/common.hpp"
#include "gridstab/components.hpp"
#include "gridstab/netmodel.hpp"

namespace gridstab {

// ---------------------------------------------------------------------------
// Semi-explicit index-1 DAE:  dx/dt = f(x, z),  0 = g(x, z).
// Implementations provide the residual for both plain and dual scalars so
// Jacobians come from forward-mode differentiation.
// ---------------------------------------------------------------------------

class DaeModel {
public:
    virtual ~DaeModel() = default;
    virtual std::size_t n_x() const = 0;
    virtual std::size_t n_z() const = 0;
    virtual void eval(const double* x, const double* z, double* f, double* g) const = 0;
    virtual void eval_dual(const Dual* x, const Dual* z, Dual* f, Dual* g) const = 0;
    virtual const std::vector<std::string>& state_labels() const { return empty_labels_; }
    virtual const std::vector<std::string>& algebraic_labels() const { return empty_labels_; }
    // marks angle-type differential states (used to recognize the frame mode)
    virtual const std::vector<bool>& angle_mask() const { return empty_mask_; }

private:
    static inline const std::vector<std::string> empty_labels_{};
    static inline const std::vector<bool> empty_mask_{};
};

struct DaeJacobian {
    Eigen::MatrixXd fx, fz, gx, gz;
};

// Forward-mode Jacobian of (f, g) with respect to (x, z), column by column.
inline DaeJacobian compute_jacobian(const DaeModel& m, const std::vector<double>& x,
                                    const std::vector<double>& z) {
    const std::size_t nx = m.n_x(), nz = m.n_z();
    DaeJacobian J;
    J.fx.resize(nx, nx);
    J.fz.resize(nx, nz);
    J.gx.resize(nz, nx);
    J.gz.resize(nz, nz);

    std::vector<Dual> xd(x.begin(), x.end());
    std::vector<Dual> zd(z.begin(), z.end());
    std::vector<Dual> f(nx), g(nz);

    for (std::size_t j = 0; j < nx; ++j) {
        xd[j].d = 1.0;
        m.eval_dual(xd.data(), zd.data(), f.data(), g.data());
        xd[j].d = 0.0;
        for (std::size_t i = 0; i < nx; ++i) J.fx(i, j) = f[i].d;
        for (std::size_t i = 0; i < nz; ++i) J.gx(i, j) = g[i].d;
    }
    for (std::size_t j = 0; j < nz; ++j) {
        zd[j].d = 1.0;
        m.eval_dual(xd.data(), zd.data(), f.data(), g.data());
        zd[j].d = 0.0;
        for (std::size_t i = 0; i < nx; ++i) J.fz(i, j) = f[i].d;
        for (std::size_t i = 0; i < nz; ++i) J.gz(i, j) = g[i].d;
    }
    return J;
}

// Solve g(x, z) = 0 for z at fixed x (Newton; the power-system model is
// affine in z so this converges in one step).
inline void solve_algebraic(const DaeModel& m, const std::vector<double>& x,
                            std::vector<double>& z, double tol = 1e-12, int max_iter = 10) {
    const std::size_t nx = m.n_x(), nz = m.n_z();
    if (nz == 0) return;
    std::vector<double> f(nx), g(nz);
    for (int it = 0; it < max_iter; ++it) {
        m.eval(x.data(), z.data(), f.data(), g.data());
        double r = 0;
        for (double v : g) r = std::max(r, std::abs(v));
        if (r < tol) return;
        DaeJacobian J = compute_jacobian(m, x, z);
        Eigen::Map<Eigen::VectorXd> gv(g.data(), nz);
        Eigen::VectorXd dz = J.gz.partialPivLu().solve(-gv);
        for (std::size_t i = 0; i < nz; ++i) z[i] += dz(i);
    }
    throw NumericalError("algebraic solve did not converge");
}

// ---------------------------------------------------------------------------
// The assembled power-system DAE.
//
// Differential states: line currents (2 per line), nodal voltages (2 per
// bus), then one block per unit. Algebraic variables: the power-flow
// quadruple (p, q, v, delta) per bus followed by the network frame speed
// omega_g, which is tied to the reference unit.
//
// Per-bus shunts aggregate the bus's own shunt plus half of each incident
// line's pi-section; constant-impedance loads contribute a separate static
// admittance (load_g, load_b) so disturbances can retarget them.
// ---------------------------------------------------------------------------

class PowerSystemModel : public DaeModel {
public:
    struct Unit {
        std::string id;
        UnitKind kind = UnitKind::GFM;
        ConverterMode mode = ConverterMode::GFM;
        ConverterParams cp;
        SgParams sgp;
        ConverterSetpoint csp;  // anchored by the equilibrium assembly
        SgRefs refs;            // anchored by the equilibrium assembly
        double s_ratio = 1.0;   // unit rating / system base
        std::size_t bus = 0;
        std::size_t x_offset = 0;
        std::size_t n_states = 0;
    };

    explicit PowerSystemModel(const Network& net) : net_(net) {
        validate_network(net);
        omega_b_ = net.base.omega_b;
        const std::size_t nbus = net.buses.size();

        bus_c_.assign(nbus, 0.0);
        bus_g_.assign(nbus, 0.0);
        load_g_.assign(nbus, 0.0);
        load_b_.assign(nbus, 0.0);
        for (std::size_t k = 0; k < nbus; ++k) {
            bus_c_[k] = net.buses[k].shunt_c;
            bus_g_[k] = net.buses[k].shunt_g;
        }
        for (const auto& ln : net.lines) {
            std::size_t a = net.bus_index(ln.from), b = net.bus_index(ln.to);
            line_ends_.emplace_back(a, b);
            bus_c_[a] += 0.5 * ln.c_sh;
            bus_c_[b] += 0.5 * ln.c_sh;
            bus_g_[a] += 0.5 * ln.g_sh;
            bus_g_[b] += 0.5 * ln.g_sh;
        }
        for (const auto& ld : net.loads) {
            auto [g, b] = load_to_impedance(ld, 1.0);
            std::size_t k = net.bus_index(ld.bus);
            load_g_[k] += g;
            load_b_[k] += b;
        }
        for (std::size_t k = 0; k < nbus; ++k)
            if (!(bus_c_[k] > 0))
                throw ValidationError("bus '" + net.buses[k].id +
                                      "' has zero aggregate shunt capacitance; every bus needs "
                                      "c_k > 0 for its voltage dynamic");

        std::size_t off = 2 * net.lines.size() + 2 * nbus;
        for (const auto& us : net.units) {
            Unit u;
            u.id = us.id;
            u.kind = us.kind;
            u.bus = net.bus_index(us.bus);
            u.s_ratio = us.rating_mva / net.base.s_base_mva;
            if (us.kind == UnitKind::SG) {
                u.sgp = sg_params_from_json(us.params, "unit " + us.id);
                u.n_states = sg::kSize;
            } else {
                u.mode = us.kind == UnitKind::GFM ? ConverterMode::GFM : ConverterMode::GFL;
                u.cp = converter_params_from_json(us.params, u.mode, "unit " + us.id);
                u.n_states = converter_state_size(u.mode);
            }
            u.x_offset = off;
            off += u.n_states;
            units_.push_back(std::move(u));
        }
        nx_ = off;
        nz_ = 4 * nbus + 1;
        ref_unit_ = net.unit_index(net.reference_unit);
        build_labels();
    }

    std::size_t n_x() const override { return nx_; }
    std::size_t n_z() const override { return nz_; }
    const std::vector<std::string>& state_labels() const override { return labels_; }
    const std::vector<std::string>& algebraic_labels() const override { return z_labels_; }
    const std::vector<bool>& angle_mask() const override { return angle_mask_; }

    void eval(const double* x, const double* z, double* f, double* g) const override {
        rhs<double>(x, z, f, g);
    }
    void eval_dual(const Dual* x, const Dual* z, Dual* f, Dual* g) const override {
        rhs<Dual>(x, z, f, g);
    }

    const Network& network() const { return net_; }
    double omega_b() const { return omega_b_; }
    std::size_t n_buses() const { return net_.buses.size(); }
    std::size_t n_lines() const { return net_.lines.size(); }
    std::vector<Unit>& units() { return units_; }
    const std::vector<Unit>& units() const { return units_; }
    std::size_t reference_unit() const { return ref_unit_; }

    std::size_t line_offset(std::size_t i) const { return 2 * i; }
    std::size_t bus_offset(std::size_t k) const { return 2 * net_.lines.size() + 2 * k; }
    std::size_t z_bus_offset(std::size_t k) const { return 4 * k; }
    std::size_t z_omega_g() const { return 4 * net_.buses.size(); }

    const Unit& unit(const std::string& id) const { return units_[net_.unit_index(id)]; }
    Unit& unit(const std::string& id) { return units_[net_.unit_index(id)]; }

    // The angle state that defines the network frame gauge: its dynamic row
    // is identically zero (the reference unit cannot drift from its own
    // frame), which yields the structural zero eigenvalue.
    std::size_t ref_frozen_state() const {
        const Unit& u = units_[ref_unit_];
        const bool pll_ref = u.kind != UnitKind::SG && u.mode == ConverterMode::GFL;
        return u.x_offset + (pll_ref ? cvt::kThetaS : 0);
    }

    // Constant-impedance disturbance: extra admittance drawing (dp, dq) at
    // voltage magnitude v_at. Used for timed load-step events.
    void add_load_admittance(std::size_t bus, double dp, double dq, double v_at) {
        Load delta{net_.buses[bus].id, dp, dq};
        auto [g, b] = load_to_impedance(delta, v_at);
        load_g_[bus] += g;
        load_b_[bus] += b;
    }

    double load_g(std::size_t bus) const { return load_g_[bus]; }
    double load_b(std::size_t bus) const { return load_b_[bus]; }
    double shunt_g(std::size_t bus) const { return bus_g_[bus]; }
    double shunt_c(std::size_t bus) const { return bus_c_[bus]; }

    template <class S>
    void rhs(const S* x, const S* z, S* f, S* g) const {
        const std::size_t nbus = net_.buses.size();
        const std::size_t nline = net_.lines.size();
        const S omega_g = z[z_omega_g()];

        // unit injections into each bus, network frame, system base
        std::vector<Vec2<S>> inj(nbus, Vec2<S>{S(0.0), S(0.0)});
        for (const auto& u : units_) {
            const S* xu = x + u.x_offset;
            const Vec2<S> v_n{x[bus_offset(u.bus)], x[bus_offset(u.bus) + 1]};
            const S theta = xu[0];  // unit frame angle relative to network frame
            const Vec2<S> v_t = rotate(S(-theta), v_n);
            Vec2<S> i_local;
            if (u.kind == UnitKind::SG) {
                sg_rhs(u.sgp, u.refs, xu, v_t, omega_b_, omega_g, f + u.x_offset);
                i_local = Vec2<S>{xu[sg::kId], xu[sg::kId + 1]};
            } else {
                converter_rhs(u.cp, u.csp, u.mode, xu, v_t, omega_b_, omega_g,
                              f + u.x_offset);
                i_local = Vec2<S>{xu[cvt::kIg], xu[cvt::kIg + 1]};
            }
            inj[u.bus] += rotate(theta, i_local) * S(u.s_ratio);
        }

        // branch currents
        for (std::size_t i = 0; i < nline; ++i) {
            const auto& ln = net_.lines[i];
            const auto [a, b] = line_ends_[i];
            const Vec2<S> va{x[bus_offset(a)], x[bus_offset(a) + 1]};
            const Vec2<S> vb{x[bus_offset(b)], x[bus_offset(b) + 1]};
            const Vec2<S> il{x[line_offset(i)], x[line_offset(i) + 1]};
            const Vec2<S> d = (omega_b_ / ln.l) * (va - vb) - (ln.r / ln.l * omega_b_) * il -
                              (omega_b_ * omega_g) * jmul(il);
            f[line_offset(i)] = d.d;
            f[line_offset(i) + 1] = d.q;
        }

        // nodal voltages
        for (std::size_t k = 0; k < nbus; ++k) {
            Vec2<S> i_c = inj[k];
            for (std::size_t i = 0; i < nline; ++i) {
                const auto [a, b] = line_ends_[i];
                const Vec2<S> il{x[line_offset(i)], x[line_offset(i) + 1]};
                if (b == k) i_c += il;
                if (a == k) i_c -= il;
            }
            const Vec2<S> v{x[bus_offset(k)], x[bus_offset(k) + 1]};
            const double g_tot = bus_g_[k] + load_g_[k];
            const Vec2<S> d = (omega_b_ / bus_c_[k]) * (i_c - g_tot * v - load_b_[k] * jmul(v)) -
                              (omega_b_ * omega_g) * jmul(v);
            f[bus_offset(k)] = d.d;
            f[bus_offset(k) + 1] = d.q;
        }

        // algebraic rows: nodal power-flow variables ...
        for (std::size_t k = 0; k < nbus; ++k) {
            const Vec2<S> v{x[bus_offset(k)], x[bus_offset(k) + 1]};
            const Vec2<S> i_n = inj[k] - load_g_[k] * v - load_b_[k] * jmul(v);
            const std::size_t o = z_bus_offset(k);
            g[o + 0] = dot(v, i_n) - z[o + 0];
            g[o + 1] = jform(v, i_n) - z[o + 1];
            g[o + 2] = norm(v) - z[o + 2];
            using std::atan2; using gridstab::atan2;
            g[o + 3] = atan2(v.q, v.d) - z[o + 3];
        }

        // ... and the frame speed, tied to the reference unit. The reference
        // unit's own angle row is rewritten with the same speed value so the
        // gauge row of the reduced state matrix cancels exactly.
        const S omega_ref = ref_unit_speed(x);
        g[z_omega_g()] = omega_ref - omega_g;
        f[ref_frozen_state()] = omega_b_ * (omega_ref - omega_g);
    }

    template <class S>
    S ref_unit_speed(const S* x) const {
        const Unit& u = units_[ref_unit_];
        const S* xu = x + u.x_offset;
        if (u.kind == UnitKind::SG) return xu[sg::kOmega];
        if (u.mode == ConverterMode::GFM)
            return S(u.csp.omega_star) + xu[cvt::kOmegaTilde];
        const Vec2<S> v_f{xu[cvt::kVf], xu[cvt::kVf + 1]};
        const S v_f_q_pll = rotate(S(xu[cvt::kTheta] - xu[cvt::kThetaS]), v_f).q;
        return pll_output(u.cp, xu[cvt::kEps], v_f_q_pll, S(1.0));
    }

private:
    void build_labels() {
        labels_.assign(nx_, "");
        angle_mask_.assign(nx_, false);
        for (std::size_t i = 0; i < net_.lines.size(); ++i) {
            std::string base = "line:" + net_.lines[i].from + "-" + net_.lines[i].to;
            labels_[line_offset(i)] = base + ":i_d";
            labels_[line_offset(i) + 1] = base + ":i_q";
        }
        for (std::size_t k = 0; k < net_.buses.size(); ++k) {
            labels_[bus_offset(k)] = "bus:" + net_.buses[k].id + ":v_d";
            labels_[bus_offset(k) + 1] = "bus:" + net_.buses[k].id + ":v_q";
        }
        static const char* cvt_names[] = {"theta",   "omega_tilde", "v_tilde", "xi_d",
                                          "xi_q",    "gamma_d",     "gamma_q", "i_f_d",
                                          "i_f_q",   "v_f_d",       "v_f_q",   "i_g_d",
                                          "i_g_q",   "eps",         "theta_s"};
        static const char* sg_names[] = {"delta", "omega", "e_q_p", "e_d_p", "psi_1d",
                                         "psi_2q", "i_d",  "i_q",   "gov_1", "gov_2",
                                         "v_tr",   "v_r",  "e_fd",  "x_f"};
        for (const auto& u : units_) {
            const char** names = u.kind == UnitKind::SG ? sg_names : cvt_names;
            for (std::size_t s = 0; s < u.n_states; ++s)
                labels_[u.x_offset + s] = u.id + ":" + names[s];
            angle_mask_[u.x_offset + 0] = true;  // theta / delta
            if (u.kind != UnitKind::SG && u.mode == ConverterMode::GFL)
                angle_mask_[u.x_offset + cvt::kThetaS] = true;
        }
        z_labels_.assign(nz_, "");
        for (std::size_t k = 0; k < net_.buses.size(); ++k) {
            const std::string& id = net_.buses[k].id;
            z_labels_[z_bus_offset(k) + 0] = "pf:" + id + ":p";
            z_labels_[z_bus_offset(k) + 1] = "pf:" + id + ":q";
            z_labels_[z_bus_offset(k) + 2] = "pf:" + id + ":v";
            z_labels_[z_bus_offset(k) + 3] = "pf:" + id + ":delta";
        }
        z_labels_[z_omega_g()] = "omega_g";
    }

    Network net_;
    double omega_b_ = 0.0;
    std::vector<double> bus_c_, bus_g_;    // network shunts (own + line halves)
    std::vector<double> load_g_, load_b_;  // folded constant-impedance loads
    std::vector<std::pair<std::size_t, std::size_t>> line_ends_;
    std::vector<Unit> units_;
    std::size_t ref_unit_ = 0;
    std::size_t nx_ = 0, nz_ = 0;
    std::vector<std::string> labels_;
    std::vector<std::string> z_labels_;
    std::vector<bool> angle_mask_;
};

}  // namespace gridstab
