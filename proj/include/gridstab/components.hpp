#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gridstab/common.hpp"
#include "gridstab/netmodel.hpp"

namespace gridstab {

// ===========================================================================
// Voltage source converter, GFM and GFL modes.
//
// Both modes share one structure: droop-filtered power control generating a
// voltage reference in the converter frame, a virtual-impedance drop, dual
// voltage/current loops producing the averaged switching voltage, and the
// RLC filter plus transformer electrical stages. The only mode difference is
// the synchronization frequency: a GFM pins omega_s to its reference, a GFL
// takes it from the PLL.
//
// All quantities are pu on the unit rating. Time is in seconds; integrator
// gains K_I_* are 1/s, omega_z is pu of omega_b. Angle states are stored
// relative to the network frame, so an equilibrium is a genuine fixed point.
// ===========================================================================

enum class ConverterMode { GFM, GFL };

struct ConverterParams {
    double r_f = 0.0, l_f = 0.0, c_f = 0.0;  // RLC filter
    double r_t = 0.0, l_t = 0.0;             // transformer
    double r_v = 0.0, l_v = 0.0;             // virtual impedance
    double R_p = 0.0, R_q = 0.0;             // droop gains
    double omega_z = 0.0;                    // droop LPF cutoff, pu of omega_b
    double K_P_s = 0.0, K_I_s = 0.0;         // PLL gains (GFL only)
    double K_P_v = 0.0, K_I_v = 0.0;         // voltage loop
    double K_P_i = 0.0, K_I_i = 0.0;         // current loop
    double K_F_v = 1.0, K_F_i = 1.0;         // feedforward flags, 0 or 1
    double v_sw_max = 0.0;                   // 0 disables the limit check
};

// State layout. GFL appends the PLL pair to the GFM block.
namespace cvt {
constexpr std::size_t kTheta = 0;       // converter frame angle minus network frame angle
constexpr std::size_t kOmegaTilde = 1;  // droop frequency deviation
constexpr std::size_t kVTilde = 2;      // droop voltage deviation
constexpr std::size_t kXi = 3;          // voltage-loop integrator (2)
constexpr std::size_t kGamma = 5;       // current-loop integrator (2)
constexpr std::size_t kIf = 7;          // filter current (2)
constexpr std::size_t kVf = 9;          // filter voltage (2)
constexpr std::size_t kIg = 11;         // grid-side current (2)
constexpr std::size_t kEps = 13;        // PLL integrator (GFL)
constexpr std::size_t kThetaS = 14;     // PLL angle minus network frame angle (GFL)
constexpr std::size_t kSizeGfm = 13;
constexpr std::size_t kSizeGfl = 15;
}  // namespace cvt

inline std::size_t converter_state_size(ConverterMode mode) {
    return mode == ConverterMode::GFM ? cvt::kSizeGfm : cvt::kSizeGfl;
}

inline void validate_converter_params(const ConverterParams& p, ConverterMode mode,
                                      const std::string& ctx) {
    using detail::require;
    require(p.r_f >= 0 && p.l_f > 0 && p.c_f > 0, ctx + ": filter needs r_f >= 0, l_f > 0, c_f > 0");
    require(p.r_t >= 0 && p.l_t > 0, ctx + ": transformer needs r_t >= 0, l_t > 0");
    require(p.r_v >= 0 && p.l_v >= 0, ctx + ": virtual impedance must be >= 0");
    require(p.R_p > 0, ctx + ": R_p must be > 0");
    require(p.R_q >= 0, ctx + ": R_q must be >= 0");
    require(p.omega_z > 0, ctx + ": omega_z must be > 0");
    require(p.K_P_v > 0 && p.K_P_i > 0, ctx + ": K_P_v and K_P_i must be > 0");
    require(p.K_I_v >= 0 && p.K_I_i >= 0, ctx + ": K_I_v and K_I_i must be >= 0");
    require(p.K_F_v == 0.0 || p.K_F_v == 1.0, ctx + ": K_F_v must be 0 or 1");
    require(p.K_F_i == 0.0 || p.K_F_i == 1.0, ctx + ": K_F_i must be 0 or 1");
    if (mode == ConverterMode::GFL) {
        require(p.K_P_s > 0, ctx + ": K_P_s must be > 0 for GFL");
        require(p.K_I_s >= 0, ctx + ": K_I_s must be >= 0");
    } else {
        require(p.K_P_s == 0 && p.K_I_s == 0, ctx + ": GFM has no PLL gains");
    }
}

// Internal converter setpoint, pu on the unit rating. p/q refer to the
// filter-node measurement pair (p = v_f.i_g, q = v_f.J^T.i_g).
struct ConverterSetpoint {
    double p_star = 0.0;
    double q_star = 0.0;
    double v_star = 1.0;
    double omega_star = 1.0;
};

// omega_s = omega_ff + K_P_s v_f^q + K_I_s eps, with v_f^q measured in the
// PLL frame. The feedforward is the nominal frequency.
template <class S>
S pll_output(const ConverterParams& p, const S& eps, const S& v_f_q, const S& omega_ff) {
    return omega_ff + p.K_P_s * v_f_q + p.K_I_s * eps;
}

// x_n = R(theta_unit - theta_g) x_local
template <class S>
Vec2<S> rotate_to_network(const Vec2<S>& x_local, const S& theta_unit, const S& theta_g) {
    return rotate(S(theta_unit - theta_g), x_local);
}

// Right-hand side in the converter's own frame. `v_t` is the bus voltage
// expressed in that frame; `omega_frame` is the speed of the frame that the
// angle states are measured against (the network frame when assembled,
// nominal 1.0 for a unit in isolation).
template <class S>
void converter_rhs(const ConverterParams& p, const ConverterSetpoint& sp, ConverterMode mode,
                   const S* x, const Vec2<S>& v_t, double omega_b, const S& omega_frame,
                   S* dx, const S& omega_ff = S(1.0)) {
    using namespace cvt;
    const S omega_tilde = x[kOmegaTilde];
    const S v_tilde = x[kVTilde];
    const Vec2<S> xi{x[kXi], x[kXi + 1]};
    const Vec2<S> gamma{x[kGamma], x[kGamma + 1]};
    const Vec2<S> i_f{x[kIf], x[kIf + 1]};
    const Vec2<S> v_f{x[kVf], x[kVf + 1]};
    const Vec2<S> i_g{x[kIg], x[kIg + 1]};

    const S p_c = dot(v_f, i_g);
    const S q_c = jform(v_f, i_g);

    S omega_s;
    if (mode == ConverterMode::GFL) {
        const S v_f_q_pll = rotate(S(x[kTheta] - x[kThetaS]), v_f).q;
        omega_s = pll_output(p, x[kEps], v_f_q_pll, omega_ff);
        dx[kEps] = v_f_q_pll;
        dx[kThetaS] = omega_b * (omega_s - omega_frame);
    } else {
        omega_s = S(sp.omega_star);
    }

    const S omega_c = omega_s + omega_tilde;
    dx[kTheta] = omega_b * (omega_c - omega_frame);

    const double omega_z = p.omega_z * omega_b;  // cutoff in rad/s
    dx[kOmegaTilde] = omega_z * (-omega_tilde + p.R_p * (sp.p_star - p_c));
    dx[kVTilde] = omega_z * (-v_tilde + p.R_q * (sp.q_star - q_c));

    const Vec2<S> v_c{sp.v_star + v_tilde, S(0.0)};
    const Vec2<S> v_f_ref = v_c - p.r_v * i_g - (omega_c * p.l_v) * jmul(i_g);

    dx[kXi] = v_f_ref.d - v_f.d;
    dx[kXi + 1] = v_f_ref.q - v_f.q;
    const Vec2<S> i_f_ref = p.K_P_v * (v_f_ref - v_f) + p.K_I_v * xi + p.K_F_v * i_g +
                            (omega_c * p.c_f) * jmul(v_f);

    dx[kGamma] = i_f_ref.d - i_f.d;
    dx[kGamma + 1] = i_f_ref.q - i_f.q;
    const Vec2<S> v_sw = p.K_P_i * (i_f_ref - i_f) + p.K_I_i * gamma + p.K_F_i * v_f +
                         (omega_c * p.l_f) * jmul(i_f);

    const Vec2<S> d_i_f =
        (omega_b / p.l_f) * (v_sw - v_f) - (p.r_f / p.l_f * omega_b) * i_f -
        (omega_b * omega_c) * jmul(i_f);
    dx[kIf] = d_i_f.d;
    dx[kIf + 1] = d_i_f.q;

    const Vec2<S> d_v_f = (omega_b / p.c_f) * (i_f - i_g) - (omega_b * omega_c) * jmul(v_f);
    dx[kVf] = d_v_f.d;
    dx[kVf + 1] = d_v_f.q;

    const Vec2<S> d_i_g =
        (omega_b / p.l_t) * (v_f - v_t) - (p.r_t / p.l_t * omega_b) * i_g -
        (omega_b * omega_c) * jmul(i_g);
    dx[kIg] = d_i_g.d;
    dx[kIg + 1] = d_i_g.q;
}

// Measured converter powers (unit base) for a given state.
inline std::pair<double, double> converter_powers(const double* x) {
    Vec2d v_f{x[cvt::kVf], x[cvt::kVf + 1]};
    Vec2d i_g{x[cvt::kIg], x[cvt::kIg + 1]};
    return {dot(v_f, i_g), jform(v_f, i_g)};
}

struct ConverterInit {
    std::vector<double> state;    // converter block, local frame
    double frame_angle = 0.0;     // converter frame angle in the caller's frame
    ConverterSetpoint setpoint;   // anchored so the state is an exact fixed point
};

// Closed-form back-solve of the converter equilibrium from a terminal pair
// (v_n, i_n): bus voltage and injected current, both in the caller's frame,
// current on the unit base, at nominal frequency. Setpoints are re-anchored
// at the achieved operating point, which zeroes the droop deviations and
// pins the steady frequency at 1 pu.
inline ConverterInit init_converter_state(const ConverterParams& p, ConverterMode mode,
                                          const Vec2d& v_n, const Vec2d& i_n) {
    ConverterInit out;
    out.state.assign(converter_state_size(mode), 0.0);

    // steady electrical chain at omega = 1, frame-covariant forms
    const Vec2d i_g_net = i_n;
    const Vec2d v_f_net = v_n + p.r_t * i_g_net + p.l_t * jmul(i_g_net);
    const Vec2d i_f_net = i_g_net + p.c_f * jmul(v_f_net);
    const Vec2d v_sw_net = v_f_net + p.r_f * i_f_net + p.l_f * jmul(i_f_net);
    const Vec2d v_c_net = v_f_net + p.r_v * i_g_net + p.l_v * jmul(i_g_net);

    if (p.v_sw_max > 0 && norm(v_sw_net) > p.v_sw_max)
        throw NumericalError("infeasible terminal point: required switching voltage " +
                             std::to_string(norm(v_sw_net)) + " exceeds limit");

    const double alpha = std::atan2(v_c_net.q, v_c_net.d);
    out.frame_angle = alpha;
    auto to_local = [alpha](const Vec2d& v) { return rotate(-alpha, v); };

    const Vec2d i_g = to_local(i_g_net);
    const Vec2d v_f = to_local(v_f_net);
    const Vec2d i_f = to_local(i_f_net);
    const Vec2d v_sw = to_local(v_sw_net);

    out.setpoint.p_star = dot(v_f, i_g);
    out.setpoint.q_star = jform(v_f, i_g);
    out.setpoint.v_star = norm(v_c_net);
    out.setpoint.omega_star = 1.0;

    // integrators absorb the steady control outputs
    const Vec2d xi_num = i_f - p.K_F_v * i_g - p.c_f * jmul(v_f);
    const Vec2d ga_num = v_sw - p.K_F_i * v_f - p.l_f * jmul(i_f);
    if (p.K_I_v > 0) {
        out.state[cvt::kXi] = xi_num.d / p.K_I_v;
        out.state[cvt::kXi + 1] = xi_num.q / p.K_I_v;
    } else if (norm(xi_num) > 1e-12) {
        throw NumericalError("voltage-loop integrator disabled (K_I_v = 0) but a nonzero "
                             "steady output is required");
    }
    if (p.K_I_i > 0) {
        out.state[cvt::kGamma] = ga_num.d / p.K_I_i;
        out.state[cvt::kGamma + 1] = ga_num.q / p.K_I_i;
    } else if (norm(ga_num) > 1e-12) {
        throw NumericalError("current-loop integrator disabled (K_I_i = 0) but a nonzero "
                             "steady output is required");
    }

    out.state[cvt::kTheta] = alpha;
    out.state[cvt::kOmegaTilde] = 0.0;
    out.state[cvt::kVTilde] = 0.0;
    out.state[cvt::kIf] = i_f.d;
    out.state[cvt::kIf + 1] = i_f.q;
    out.state[cvt::kVf] = v_f.d;
    out.state[cvt::kVf + 1] = v_f.q;
    out.state[cvt::kIg] = i_g.d;
    out.state[cvt::kIg + 1] = i_g.q;

    if (mode == ConverterMode::GFL) {
        // PLL locks its frame to v_f and its integrator to nominal frequency
        out.state[cvt::kThetaS] = std::atan2(v_f_net.q, v_f_net.d);
        out.state[cvt::kEps] = 0.0;
    }
    return out;
}

// ===========================================================================
// Synchronous generator: round-rotor two-axis model with stator dynamics
// (8th order: angle, speed, four rotor flux states, stator current pair),
// TGOV1 governor and DC1A exciter. The unit transformer is a series branch
// carrying the stator current, absorbed exactly into the stator impedances;
// open-circuit rotor time constants are unaffected.
//
// Generator convention: stator current flows out of the machine. The rotor
// frame angle is stored relative to the network frame.
// ===========================================================================

struct SgGovernorParams {
    double R = 0.05;     // speed droop
    double T_1 = 0.5;    // valve time constant, s
    double T_2 = 2.0;    // lead
    double T_3 = 7.0;    // lag
    double D_t = 0.0;    // turbine damping
};

struct SgExciterParams {
    double K_A = 100.0, T_A = 0.02;  // regulator
    double K_E = 1.0, T_E = 0.5;     // exciter field
    double K_F = 0.03, T_F = 1.0;    // rate feedback washout
    double T_R = 0.01;               // measurement filter
    double A_ex = 0.0, B_ex = 0.0;   // saturation S_E = A_ex * exp(B_ex * e_fd)
};

struct SgParams {
    double r_s = 0.0;
    double x_d = 0.0, x_q = 0.0;
    double x_d_p = 0.0, x_q_p = 0.0;
    double x_d_pp = 0.0, x_q_pp = 0.0;
    double x_ls = 0.0;
    double T_d0_p = 0.0, T_q0_p = 0.0;
    double T_d0_pp = 0.0, T_q0_pp = 0.0;
    double H = 0.0, D = 0.0;
    double r_t = 0.0, l_t = 0.0;  // unit transformer
    SgGovernorParams gov;
    SgExciterParams exc;
};

namespace sg {
constexpr std::size_t kDelta = 0;   // rotor angle minus network frame angle
constexpr std::size_t kOmega = 1;   // rotor speed, pu
constexpr std::size_t kEqP = 2;     // transient q-axis EMF
constexpr std::size_t kEdP = 3;     // transient d-axis EMF
constexpr std::size_t kPsi1d = 4;   // d-axis damper flux
constexpr std::size_t kPsi2q = 5;   // q-axis damper flux
constexpr std::size_t kId = 6;      // stator current (2), rotor frame
constexpr std::size_t kGov1 = 8;    // TGOV1 valve
constexpr std::size_t kGov2 = 9;    // TGOV1 reheater
constexpr std::size_t kVtr = 10;    // AVR measurement filter
constexpr std::size_t kVr = 11;     // AVR regulator output
constexpr std::size_t kEfd = 12;    // exciter field voltage
constexpr std::size_t kXf = 13;     // rate-feedback washout state
constexpr std::size_t kSize = 14;
}  // namespace sg

inline void validate_sg_params(const SgParams& p, const std::string& ctx) {
    using detail::require;
    require(p.r_s >= 0 && p.r_t >= 0, ctx + ": resistances must be >= 0");
    require(p.x_ls >= 0, ctx + ": x_ls must be >= 0");
    require(p.x_d > p.x_d_p && p.x_d_p > p.x_d_pp && p.x_d_pp > p.x_ls,
            ctx + ": need x_d > x_d' > x_d'' > x_ls");
    require(p.x_q > p.x_q_p && p.x_q_p > p.x_q_pp && p.x_q_pp > p.x_ls,
            ctx + ": need x_q > x_q' > x_q'' > x_ls");
    require(p.T_d0_p > 0 && p.T_q0_p > 0 && p.T_d0_pp > 0 && p.T_q0_pp > 0,
            ctx + ": open-circuit time constants must be > 0");
    require(p.H > 0, ctx + ": inertia H must be > 0");
    require(p.D >= 0, ctx + ": damping D must be >= 0");
    require(p.l_t >= 0, ctx + ": l_t must be >= 0");
    require(p.gov.R > 0 && p.gov.T_1 > 0 && p.gov.T_3 > 0 && p.gov.T_2 >= 0 && p.gov.D_t >= 0,
            ctx + ": governor constants out of range");
    const auto& e = p.exc;
    require(e.K_A > 0 && e.T_A > 0 && e.K_E > 0 && e.T_E > 0 && e.T_F > 0 && e.T_R > 0 &&
                e.K_F >= 0 && e.A_ex >= 0,
            ctx + ": exciter constants out of range");
}

struct SgRefs {
    double p_ref = 0.0;  // governor load reference
    double v_ref = 1.0;  // AVR voltage reference
};

template <class S>
void sg_rhs(const SgParams& p, const SgRefs& refs, const S* x, const Vec2<S>& v_t,
            double omega_b, const S& omega_frame, S* dx) {
    using namespace sg;
    const S omega = x[kOmega];
    const S e_q_p = x[kEqP], e_d_p = x[kEdP];
    const S psi_1d = x[kPsi1d], psi_2q = x[kPsi2q];
    const Vec2<S> i{x[kId], x[kId + 1]};

    // transformer absorbed in series with the stator
    const double Rs = p.r_s + p.r_t;
    const double Xdpp = p.x_d_pp + p.l_t, Xqpp = p.x_q_pp + p.l_t;

    const double cd1 = (p.x_d_pp - p.x_ls) / (p.x_d_p - p.x_ls);
    const double cd2 = (p.x_d_p - p.x_d_pp) / (p.x_d_p - p.x_ls);
    const double cq1 = (p.x_q_pp - p.x_ls) / (p.x_q_p - p.x_ls);
    const double cq2 = (p.x_q_p - p.x_q_pp) / (p.x_q_p - p.x_ls);

    const S psi_pp_d = cd1 * e_q_p + cd2 * psi_1d;
    const S psi_pp_q = -cq1 * e_d_p + cq2 * psi_2q;
    const S psi_d = -Xdpp * i.d + psi_pp_d;
    const S psi_q = -Xqpp * i.q + psi_pp_q;

    const double kd = (p.x_d_p - p.x_d_pp) / ((p.x_d_p - p.x_ls) * (p.x_d_p - p.x_ls));
    const double kq = (p.x_q_p - p.x_q_pp) / ((p.x_q_p - p.x_ls) * (p.x_q_p - p.x_ls));

    dx[kEqP] = (-e_q_p -
                (p.x_d - p.x_d_p) *
                    (i.d - kd * (psi_1d + (p.x_d_p - p.x_ls) * i.d - e_q_p)) +
                x[kEfd]) /
               p.T_d0_p;
    dx[kPsi1d] = (-psi_1d + e_q_p - (p.x_d_p - p.x_ls) * i.d) / p.T_d0_pp;
    dx[kEdP] = (-e_d_p +
                (p.x_q - p.x_q_p) *
                    (i.q - kq * (psi_2q + (p.x_q_p - p.x_ls) * i.q + e_d_p))) /
               p.T_q0_p;
    dx[kPsi2q] = (-psi_2q - e_d_p - (p.x_q_p - p.x_ls) * i.q) / p.T_q0_pp;

    // stator: (1/wb) dpsi/dt = v + Rs i - w J psi, with psi = -X'' i + psi''
    const S d_psi_pp_d = cd1 * dx[kEqP] + cd2 * dx[kPsi1d];
    const S d_psi_pp_q = -cq1 * dx[kEdP] + cq2 * dx[kPsi2q];
    dx[kId] = (d_psi_pp_d - omega_b * (v_t.d + Rs * i.d + omega * psi_q)) / Xdpp;
    dx[kId + 1] = (d_psi_pp_q - omega_b * (v_t.q + Rs * i.q - omega * psi_d)) / Xqpp;

    // mechanical
    const S t_e = psi_d * i.q - psi_q * i.d;
    const double t23 = p.gov.T_2 / p.gov.T_3;
    const S p_m = t23 * x[kGov1] + (1.0 - t23) * x[kGov2] - p.gov.D_t * (omega - 1.0);
    dx[kOmega] = (p_m / omega - t_e - p.D * (omega - 1.0)) / (2.0 * p.H);
    dx[kDelta] = omega_b * (omega - omega_frame);

    // TGOV1
    dx[kGov1] = (refs.p_ref + (1.0 - omega) / p.gov.R - x[kGov1]) / p.gov.T_1;
    dx[kGov2] = (x[kGov1] - x[kGov2]) / p.gov.T_3;

    // DC1A
    const auto& e = p.exc;
    using std::exp; using gridstab::exp;
    const S v_mag = norm(v_t);
    dx[kVtr] = (v_mag - x[kVtr]) / e.T_R;
    const S v_fb = (e.K_F / e.T_F) * (x[kEfd] - x[kXf]);
    dx[kVr] = (e.K_A * (refs.v_ref - x[kVtr] - v_fb) - x[kVr]) / e.T_A;
    const S s_e = e.A_ex * exp(e.B_ex * x[kEfd]);
    dx[kEfd] = (x[kVr] - (e.K_E + s_e) * x[kEfd]) / e.T_E;
    dx[kXf] = (x[kEfd] - x[kXf]) / e.T_F;
}

struct SgInit {
    std::vector<double> state;
    double frame_angle = 0.0;
    SgRefs refs;
};

// Back-solve the machine equilibrium from a terminal pair (bus voltage and
// injected current in the caller's frame, unit base, nominal frequency).
inline SgInit init_sg_state(const SgParams& p, const Vec2d& v_n, const Vec2d& i_n) {
    SgInit out;
    out.state.assign(sg::kSize, 0.0);

    const double Rs = p.r_s + p.r_t;
    const double Xq = p.x_q + p.l_t, XdP = p.x_d_p + p.l_t;

    // the q-axis points along v + (Rs + Xq J) i
    const Vec2d e_hat = v_n + Rs * i_n + Xq * jmul(i_n);
    const double alpha = std::atan2(e_hat.q, e_hat.d) - kPi / 2.0;
    out.frame_angle = alpha;

    const Vec2d i = rotate(-alpha, i_n);
    const Vec2d v = rotate(-alpha, v_n);

    // steady stator: 0 = v + Rs i - J psi  =>  psi = -J (v + Rs i)
    const Vec2d psi = -jmul(Vec2d{v.d + Rs * i.d, v.q + Rs * i.q});

    const double e_d_p = (p.x_q - p.x_q_p) * i.q;
    const double psi_2q = -e_d_p - (p.x_q_p - p.x_ls) * i.q;
    const double e_q_p = psi.d + XdP * i.d;
    const double psi_1d = e_q_p - (p.x_d_p - p.x_ls) * i.d;
    const double e_fd = e_q_p + (p.x_d - p.x_d_p) * i.d;

    const double t_e = psi.d * i.q - psi.q * i.d;

    using namespace sg;
    out.state[kDelta] = alpha;
    out.state[kOmega] = 1.0;
    out.state[kEqP] = e_q_p;
    out.state[kEdP] = e_d_p;
    out.state[kPsi1d] = psi_1d;
    out.state[kPsi2q] = psi_2q;
    out.state[kId] = i.d;
    out.state[kId + 1] = i.q;
    out.state[kGov1] = t_e;
    out.state[kGov2] = t_e;
    out.refs.p_ref = t_e;

    const auto& e = p.exc;
    const double s_e = e.A_ex * std::exp(e.B_ex * e_fd);
    out.state[kVtr] = norm(v);
    out.state[kVr] = (e.K_E + s_e) * e_fd;
    out.state[kEfd] = e_fd;
    out.state[kXf] = e_fd;
    out.refs.v_ref = out.state[kVtr] + out.state[kVr] / e.K_A;

    return out;
}

// ---------------------------------------------------------------------------
// Typed parameter parsing from the unit descriptor JSON.
// ---------------------------------------------------------------------------

inline ConverterParams converter_params_from_json(const json& j, ConverterMode mode,
                                                  const std::string& ctx) {
    using detail::num_field;
    using detail::num_field_or;
    ConverterParams p;
    p.r_f = num_field(j, "r_f", ctx);
    p.l_f = num_field(j, "l_f", ctx);
    p.c_f = num_field(j, "c_f", ctx);
    p.r_t = num_field(j, "r_t", ctx);
    p.l_t = num_field(j, "l_t", ctx);
    p.r_v = num_field_or(j, "r_v", 0.0);
    p.l_v = num_field_or(j, "l_v", 0.0);
    p.R_p = num_field(j, "R_p", ctx);
    p.R_q = num_field(j, "R_q", ctx);
    p.omega_z = num_field(j, "omega_z", ctx);
    p.K_P_v = num_field(j, "K_P_v", ctx);
    p.K_I_v = num_field(j, "K_I_v", ctx);
    p.K_P_i = num_field(j, "K_P_i", ctx);
    p.K_I_i = num_field(j, "K_I_i", ctx);
    p.K_F_v = num_field_or(j, "K_F_v", 1.0);
    p.K_F_i = num_field_or(j, "K_F_i", 1.0);
    p.v_sw_max = num_field_or(j, "v_sw_max", 0.0);
    if (mode == ConverterMode::GFL) {
        p.K_P_s = num_field(j, "K_P_s", ctx);
        p.K_I_s = num_field(j, "K_I_s", ctx);
    } else {
        if (j.contains("K_P_s") || j.contains("K_I_s"))
            throw ValidationError(ctx + ": GFM has no PLL gains");
    }
    validate_converter_params(p, mode, ctx);
    return p;
}

inline SgParams sg_params_from_json(const json& j, const std::string& ctx) {
    using detail::num_field;
    using detail::num_field_or;
    SgParams p;
    p.r_s = num_field_or(j, "r_s", 0.0);
    p.x_d = num_field(j, "x_d", ctx);
    p.x_q = num_field(j, "x_q", ctx);
    p.x_d_p = num_field(j, "x_d_p", ctx);
    p.x_q_p = num_field(j, "x_q_p", ctx);
    p.x_d_pp = num_field(j, "x_d_pp", ctx);
    p.x_q_pp = num_field(j, "x_q_pp", ctx);
    p.x_ls = num_field(j, "x_ls", ctx);
    p.T_d0_p = num_field(j, "T_d0_p", ctx);
    p.T_q0_p = num_field(j, "T_q0_p", ctx);
    p.T_d0_pp = num_field(j, "T_d0_pp", ctx);
    p.T_q0_pp = num_field(j, "T_q0_pp", ctx);
    p.H = num_field(j, "H", ctx);
    p.D = num_field_or(j, "D", 0.0);
    p.r_t = num_field_or(j, "r_t", 0.0);
    p.l_t = num_field(j, "l_t", ctx);
    if (j.contains("governor")) {
        const json& g = j.at("governor");
        p.gov.R = num_field(g, "R", ctx + ".governor");
        p.gov.T_1 = num_field(g, "T_1", ctx + ".governor");
        p.gov.T_2 = num_field(g, "T_2", ctx + ".governor");
        p.gov.T_3 = num_field(g, "T_3", ctx + ".governor");
        p.gov.D_t = num_field_or(g, "D_t", 0.0);
    }
    if (j.contains("exciter")) {
        const json& e = j.at("exciter");
        p.exc.K_A = num_field(e, "K_A", ctx + ".exciter");
        p.exc.T_A = num_field(e, "T_A", ctx + ".exciter");
        p.exc.K_E = num_field(e, "K_E", ctx + ".exciter");
        p.exc.T_E = num_field(e, "T_E", ctx + ".exciter");
        p.exc.K_F = num_field(e, "K_F", ctx + ".exciter");
        p.exc.T_F = num_field(e, "T_F", ctx + ".exciter");
        p.exc.T_R = num_field_or(e, "T_R", 0.01);
        p.exc.A_ex = num_field_or(e, "A_ex", 0.0);
        p.exc.B_ex = num_field_or(e, "B_ex", 0.0);
    }
    validate_sg_params(p, ctx);
    return p;
}

}  // namespace gridstab
