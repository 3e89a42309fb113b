#pragma once

#include <algorithm>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridstab/common.hpp"
#include "gridstab/dae.hpp"
#include "gridstab/equilibrium.hpp"

namespace gridstab {

// ---------------------------------------------------------------------------
// Linearized DAE around an equilibrium:
//   d(dx)/dt = A_xx dx + A_xz dz,   0 = A_zx dx + A_zz dz
// reduced to d(dx)/dt = A_tilde dx with A_tilde = A_xx - A_xz A_zz^{-1} A_zx.
// ---------------------------------------------------------------------------

struct LinearModel {
    Eigen::MatrixXd A_xx, A_xz, A_zx, A_zz;
    Eigen::MatrixXd A_tilde;  // filled by reduce_to_ode
    std::vector<std::string> state_labels;
    std::vector<bool> angle_mask;
    std::size_t n_x = 0;
    double zz_condition = 0.0;  // filled by reduce_to_ode
};

struct LinearizeOptions {
    std::size_t probe_directions = 20;  // independent central-difference check
    double probe_tol = 1e-6;            // relative error bound per direction
    double probe_step = 1e-6;
    std::uint64_t seed = 12345;
    double residual_tol = 1e-8;  // equilibrium precondition
};

inline LinearModel linearize(const DaeModel& m, const Equilibrium& eq,
                             const LinearizeOptions& opt = {}) {
    const std::size_t nx = m.n_x(), nz = m.n_z();
    std::vector<double> f, g;
    detail::eval_residual(m, eq.x0, eq.z0, f, g);
    const double res = std::max(detail::inf_norm(f), detail::inf_norm(g));
    if (res >= opt.residual_tol)
        throw ValidationError("linearize: equilibrium residual " + std::to_string(res) +
                              " violates the precondition (< " +
                              std::to_string(opt.residual_tol) + ")");

    DaeJacobian J = compute_jacobian(m, eq.x0, eq.z0);

    // Independent central-difference probe along random directions.
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double jac_scale = std::max({1.0, J.fx.norm(), J.fz.norm(), J.gx.norm(), J.gz.norm()});
    for (std::size_t probe = 0; probe < opt.probe_directions; ++probe) {
        Eigen::VectorXd dx(nx), dz(nz);
        for (std::size_t i = 0; i < nx; ++i) dx(i) = gauss(rng);
        for (std::size_t i = 0; i < nz; ++i) dz(i) = gauss(rng);
        const double scale = std::sqrt(dx.squaredNorm() + dz.squaredNorm());
        dx /= scale;
        dz /= scale;

        const double h = opt.probe_step;
        std::vector<double> xp(eq.x0), xm(eq.x0), zp(eq.z0), zm(eq.z0);
        for (std::size_t i = 0; i < nx; ++i) {
            xp[i] += h * dx(i);
            xm[i] -= h * dx(i);
        }
        for (std::size_t i = 0; i < nz; ++i) {
            zp[i] += h * dz(i);
            zm[i] -= h * dz(i);
        }
        std::vector<double> fp, gp, fm, gm;
        detail::eval_residual(m, xp, zp, fp, gp);
        detail::eval_residual(m, xm, zm, fm, gm);

        Eigen::VectorXd fd(nx + nz), ad(nx + nz);
        for (std::size_t i = 0; i < nx; ++i) fd(i) = (fp[i] - fm[i]) / (2 * h);
        for (std::size_t i = 0; i < nz; ++i) fd(nx + i) = (gp[i] - gm[i]) / (2 * h);
        ad.head(nx) = J.fx * dx + J.fz * dz;
        ad.tail(nz) = J.gx * dx + J.gz * dz;

        const double denom = std::max(ad.norm(), 1e-9 * jac_scale);
        const double rel = (ad - fd).norm() / denom;
        if (rel > opt.probe_tol)
            throw NumericalError("linearize: differentiation inconsistency, probe direction " +
                                 std::to_string(probe) + " relative error " + std::to_string(rel));
    }

    LinearModel lm;
    lm.A_xx = std::move(J.fx);
    lm.A_xz = std::move(J.fz);
    lm.A_zx = std::move(J.gx);
    lm.A_zz = std::move(J.gz);
    lm.state_labels = m.state_labels();
    lm.angle_mask = m.angle_mask();
    lm.n_x = nx;
    return lm;
}

// Schur complement via a linear solve. Reports the conditioning of A_zz and
// rejects singular or numerically index-deficient systems.
inline const Eigen::MatrixXd& reduce_to_ode(LinearModel& lm, double cond_limit = 1e12) {
    if (lm.A_zz.rows() == 0) {
        lm.A_tilde = lm.A_xx;
        lm.zz_condition = 1.0;
        return lm.A_tilde;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lm.A_zz);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    lm.zz_condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(smin > 0) || lm.zz_condition > cond_limit)
        throw NumericalError("reduce_to_ode: A_zz singular or ill-conditioned (cond " +
                             std::to_string(lm.zz_condition) +
                             "); system is not numerically index-1");
    lm.A_tilde = lm.A_xx - lm.A_xz * lm.A_zz.partialPivLu().solve(lm.A_zx);
    return lm.A_tilde;
}

// ---------------------------------------------------------------------------
// Modal analysis: spectrum, right/left eigenvectors, participation factors.
// Structural frame modes (numerically zero eigenvalues whose participation
// lives in angle states) are identified and excluded from the dominant-mode
// choice unless the caller keeps them.
// ---------------------------------------------------------------------------

struct ModalAnalysis {
    Eigen::VectorXcd eigenvalues;  // 1/s
    Eigen::MatrixXcd right;        // columns phi_i
    Eigen::MatrixXcd left;         // rows psi_i (right^{-1})
    Eigen::MatrixXd participation;  // state x mode, columns normalized to max 1
    std::vector<std::string> labels;
    std::vector<bool> angle_mask;
    std::vector<int> frame_modes;  // indices of structural zero modes
    int dominant = -1;             // largest real part among retained modes
};

inline ModalAnalysis eigen_analysis(const Eigen::MatrixXd& A,
                                    const std::vector<std::string>& labels = {},
                                    const std::vector<bool>& angle_mask = {},
                                    double zero_mode_tol = 1e-8) {
    const std::size_t n = A.rows();
    if (!A.allFinite()) throw NumericalError("eigen_analysis: non-finite state matrix");

    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw NumericalError("eigen_analysis: eigensolver failed");

    ModalAnalysis ma;
    ma.eigenvalues = es.eigenvalues();
    ma.right = es.eigenvectors();
    ma.labels = labels.empty() ? std::vector<std::string>(n, "") : labels;
    ma.angle_mask = angle_mask.empty() ? std::vector<bool>(n, false) : angle_mask;

    // per-mode residual check against the matrix scale
    const double a_norm = A.norm();
    for (std::size_t i = 0; i < n; ++i) {
        const double res = (A * ma.right.col(i).eval() - ma.eigenvalues(i) * ma.right.col(i)).norm();
        if (res > 1e-8 * std::max(a_norm, 1.0))
            throw NumericalError("eigen_analysis: eigenpair " + std::to_string(i) +
                                 " residual " + std::to_string(res) + " exceeds tolerance");
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(ma.right);
    ma.left = lu.solve(Eigen::MatrixXcd::Identity(n, n));

    ma.participation.resize(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double col_max = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double p = std::abs(ma.right(k, i) * ma.left(i, k));
            ma.participation(k, i) = p;
            col_max = std::max(col_max, p);
        }
        if (col_max > 0) ma.participation.col(i) /= col_max;
    }

    // Structural frame modes: numerically zero eigenvalue with participation
    // mass concentrated in angle states. The gauge row of A is exactly zero,
    // but the QR iteration perturbs the zero eigenvalue by O(eps * |A|), so
    // the detection threshold follows the matrix scale.
    const double zero_scale = 128.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, a_norm);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(ma.eigenvalues(i)) >= std::max(zero_mode_tol, zero_scale)) continue;
        double angle_mass = 0, total = 0;
        for (std::size_t k = 0; k < n; ++k) {
            total += ma.participation(k, i);
            if (ma.angle_mask[k]) angle_mass += ma.participation(k, i);
        }
        if (total > 0 && angle_mass / total > 0.99) ma.frame_modes.push_back(static_cast<int>(i));
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (std::find(ma.frame_modes.begin(), ma.frame_modes.end(), static_cast<int>(i)) !=
            ma.frame_modes.end())
            continue;
        if (ma.dominant < 0 || ma.eigenvalues(i).real() > ma.eigenvalues(ma.dominant).real())
            ma.dominant = static_cast<int>(i);
    }
    return ma;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

enum class Verdict { Stable, Unstable, Marginal };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "Stable";
        case Verdict::Unstable: return "Unstable";
        case Verdict::Marginal: return "Marginal";
    }
    return "?";
}

struct StabilityReport {
    Verdict verdict = Verdict::Marginal;
    std::complex<double> dominant{0, 0};
    double freq_hz = 0.0;
    double damping = 0.0;
    std::string top_state;                                   // highest participation, dominant mode
    std::vector<std::pair<std::string, double>> top_states;  // top-5 with factors
    std::vector<int> frame_modes;
};

inline StabilityReport classify_stability(const ModalAnalysis& ma, double margin = 1e-6,
                                          bool keep_zero_mode = false) {
    StabilityReport rep;
    rep.frame_modes = ma.frame_modes;

    int dom = -1;
    const std::size_t n = ma.eigenvalues.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep_zero_mode &&
            std::find(ma.frame_modes.begin(), ma.frame_modes.end(), static_cast<int>(i)) !=
                ma.frame_modes.end())
            continue;
        if (dom < 0 || ma.eigenvalues(i).real() > ma.eigenvalues(dom).real())
            dom = static_cast<int>(i);
    }
    if (dom < 0) {
        rep.verdict = Verdict::Marginal;
        return rep;
    }

    rep.dominant = ma.eigenvalues(dom);
    const double max_re = rep.dominant.real();
    rep.freq_hz = std::abs(rep.dominant.imag()) / (2.0 * kPi);
    const double mag = std::abs(rep.dominant);
    rep.damping = mag > 0 ? -max_re / mag : 0.0;

    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t k = 0; k < n; ++k) ranked.emplace_back(ma.participation(k, dom), k);
    std::sort(ranked.rbegin(), ranked.rend());
    for (std::size_t r = 0; r < std::min<std::size_t>(5, ranked.size()); ++r)
        rep.top_states.emplace_back(ma.labels[ranked[r].second], ranked[r].first);
    if (!rep.top_states.empty()) rep.top_state = rep.top_states.front().first;

    if (max_re < -margin)
        rep.verdict = Verdict::Stable;
    else if (max_re <= margin)
        rep.verdict = Verdict::Marginal;
    else
        rep.verdict = Verdict::Unstable;
    return rep;
}

// CSV for --dump-modes: one row per mode with its strongest participants.
inline std::string modes_to_csv(const ModalAnalysis& ma, std::size_t top_k = 5) {
    std::string out = "mode_id,re,im,freq_hz,damping,top_states\n";
    char buf[64];
    const std::size_t n = ma.eigenvalues.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> ev = ma.eigenvalues(i);
        const double mag = std::abs(ev);
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t k = 0; k < n; ++k) ranked.emplace_back(ma.participation(k, i), k);
        std::sort(ranked.rbegin(), ranked.rend());
        std::string tops;
        for (std::size_t r = 0; r < std::min(top_k, ranked.size()); ++r) {
            snprintf(buf, sizeof buf, ":%.4f", ranked[r].first);
            tops += (r ? ";" : "") + ma.labels[ranked[r].second] + buf;
        }
        snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,", i, ev.real(), ev.imag(),
                 std::abs(ev.imag()) / (2 * kPi), mag > 0 ? -ev.real() / mag : 0.0);
        out += buf + tops + "\n";
    }
    return out;
}

}  // namespace gridstab
