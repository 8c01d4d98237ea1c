#ifndef FLOQBEC_MEANFIELD_HPP
#define FLOQBEC_MEANFIELD_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "floqbec/constants.hpp"
#include "floqbec/errors.hpp"
#include "floqbec/params.hpp"

namespace floqbec {

/// Complex pair (Psi_1, Psi_0), units m^-3/2.
struct MeanFieldState {
    cplx psi1{0.0, 0.0};
    cplx psi0{0.0, 0.0};

    double total_density() const { return std::norm(psi1) + std::norm(psi0); }
    bool finite() const {
        return std::isfinite(psi1.real()) && std::isfinite(psi1.imag()) &&
               std::isfinite(psi0.real()) && std::isfinite(psi0.imag());
    }
};

inline MeanFieldState operator+(const MeanFieldState& a, const MeanFieldState& b) {
    return {a.psi1 + b.psi1, a.psi0 + b.psi0};
}
inline MeanFieldState operator*(double s, const MeanFieldState& a) {
    return {s * a.psi1, s * a.psi0};
}

/// Density-matrix image of the two-level state: w = rho11 - rho00 and the
/// coherence rho10 = c1 c0*.  On the Bloch sphere w^2 + 4|rho10|^2 = 1.
struct BlochVector {
    double w = 1.0;
    cplx rho10{0.0, 0.0};

    double sphere_residual() const {
        return std::abs(w * w + 4.0 * std::norm(rho10) - 1.0);
    }
};

inline BlochVector operator+(const BlochVector& a, const BlochVector& b) {
    return {a.w + b.w, a.rho10 + b.rho10};
}
inline BlochVector operator*(double s, const BlochVector& a) {
    return {s * a.w, s * a.rho10};
}

/// Uniformly sampled trajectory; states[i] is the state at t = i*dt.
template <class State>
struct SampledTrajectory {
    double dt = 0.0;
    std::vector<State> states;

    double time(std::size_t i) const { return static_cast<double>(i) * dt; }
    double duration() const {
        return states.empty() ? 0.0 : dt * static_cast<double>(states.size() - 1);
    }
};

using Trajectory = SampledTrajectory<MeanFieldState>;
using BlochTrajectory = SampledTrajectory<BlochVector>;

/// Everything the homogeneous two-mode equations of motion need.
struct TwoModeSystem {
    double u = 0.0;           // U = U11 = U10, J m^3
    double kappa = 1.0;       // U00/U11
    double hbar_omega = 0.0;  // hbar * Rabi frequency, J
    double mu = 0.0;          // energy offset, J
    double hbar = constants::hbar;
    double mass = constants::mass_he_star;

    MeanFieldState rhs(const MeanFieldState& s) const {
        const double n1 = std::norm(s.psi1), n0 = std::norm(s.psi0);
        const cplx mi_over_h(0.0, -1.0 / hbar);
        return {mi_over_h * (u * (n1 + n0) * s.psi1 + hbar_omega * s.psi0 - mu * s.psi1),
                mi_over_h * (u * (n1 + kappa * n0) * s.psi0 + hbar_omega * s.psi1 - mu * s.psi0)};
    }
};

inline TwoModeSystem make_system(const PhysicalConfig& cfg, const InteractionSet& inter,
                                 double mu) {
    return {inter.u11, inter.kappa, cfg.hbar * cfg.rabi, mu, cfg.hbar, cfg.atom_mass};
}

inline MeanFieldState initial_state(const PhysicalConfig& cfg, const BackgroundDensity& bg) {
    const double n1 = bg.n * cfg.initial_split1;
    const double n0 = bg.n * (1.0 - cfg.initial_split1);
    return {cplx(std::sqrt(n1), 0.0),
            std::sqrt(n0) * std::exp(cplx(0.0, cfg.initial_rel_phase))};
}

namespace detail {

template <class State, class Rhs>
inline State rk4_step(const State& y, double dt, Rhs&& f) {
    const State k1 = f(y);
    const State k2 = f(y + (0.5 * dt) * k1);
    const State k3 = f(y + (0.5 * dt) * k2);
    const State k4 = f(y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Step beyond which the fixed-step integrator refuses to run.
inline constexpr double kStepGuard = 0.05;
/// Phase advance per step targeted by the default step choosers. Stricter
/// than the guard; keeps RK4 conservation drift under the 1e-8 budgets.
inline constexpr double kStepTarget = 0.02;

inline double meanfield_rate_scale(const TwoModeSystem& sys, double n_tot) {
    const double g = std::abs(n_tot * sys.u * (1.0 - sys.kappa) / sys.hbar);
    return std::max({g, sys.hbar_omega / sys.hbar, std::abs(sys.mu) / sys.hbar,
                     sys.u * n_tot / sys.hbar});
}

inline double default_meanfield_step(const TwoModeSystem& sys, double n_tot) {
    const double r = meanfield_rate_scale(sys, n_tot);
    return r > 0.0 ? kStepTarget / r : 1.0;
}

/// Integrate the two-mode equations with a fixed-step classical RK4.
/// The -mu psi terms are included so callers can cancel the global phase.
inline Trajectory evolve_mean_field(const MeanFieldState& initial, const TwoModeSystem& sys,
                                    double t_final, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve_mean_field: dt must be > 0");
    const double g = std::abs(initial.total_density() * sys.u * (1.0 - sys.kappa) / sys.hbar);
    const double guard_rate =
        std::max({g, sys.hbar_omega / sys.hbar, std::abs(sys.mu) / sys.hbar});
    if (dt * guard_rate > kStepGuard)
        throw std::invalid_argument(
            "evolve_mean_field: step-size guard violated, dt*max(|g|,Omega,|mu|/hbar) = " +
            std::to_string(dt * guard_rate) + " > " + std::to_string(kStepGuard));

    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    Trajectory traj;
    traj.dt = dt;
    traj.states.reserve(steps + 1);
    traj.states.push_back(initial);
    MeanFieldState y = initial;
    for (std::size_t i = 0; i < steps; ++i) {
        y = detail::rk4_step(y, dt, [&sys](const MeanFieldState& s) { return sys.rhs(s); });
        if (!y.finite())
            throw NumericError("evolve_mean_field: non-finite state at t = " +
                               std::to_string((i + 1) * dt));
        traj.states.push_back(y);
    }
    return traj;
}

/// Modified optical Bloch equations with the nonlinear detuning term:
///   d rho10/dt = -i (g/2)(1-w) rho10 + i Omega w,   dw/dt = -4 Omega Im rho10.
inline BlochVector bloch_rhs(const BlochVector& v, double g, double omega) {
    return {-4.0 * omega * v.rho10.imag(),
            cplx(0.0, -0.5 * g) * (1.0 - v.w) * v.rho10 + cplx(0.0, omega) * v.w};
}

inline BlochTrajectory evolve_bloch(const BlochVector& initial, double g, double omega,
                                    double t_final, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve_bloch: dt must be > 0");
    if (initial.sphere_residual() > 1e-12)
        throw std::invalid_argument("evolve_bloch: initial state off the Bloch sphere");
    if (dt * std::max(std::abs(g), std::abs(omega)) > kStepGuard)
        throw std::invalid_argument("evolve_bloch: step-size guard violated");

    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    BlochTrajectory traj;
    traj.dt = dt;
    traj.states.reserve(steps + 1);
    traj.states.push_back(initial);
    BlochVector v = initial;
    for (std::size_t i = 0; i < steps; ++i) {
        v = detail::rk4_step(v, dt,
                             [g, omega](const BlochVector& b) { return bloch_rhs(b, g, omega); });
        if (!std::isfinite(v.w) || !std::isfinite(v.rho10.real()) ||
            !std::isfinite(v.rho10.imag()))
            throw NumericError("evolve_bloch: non-finite state at t = " +
                               std::to_string((i + 1) * dt));
        traj.states.push_back(v);
    }
    return traj;
}

/// Mean energy per particle, E = -(hbar g/8)(1-w)^2 + 2 hbar Omega Re rho10.
inline double energy_per_particle(const BlochVector& v, double g, double omega,
                                  double hbar = constants::hbar) {
    return -0.125 * hbar * g * (1.0 - v.w) * (1.0 - v.w) +
           2.0 * hbar * omega * v.rho10.real();
}

inline BlochVector bloch_from_meanfield(const MeanFieldState& s) {
    const double n_tot = s.total_density();
    if (!(n_tot > 0.0))
        throw std::invalid_argument("bloch_from_meanfield: zero total density");
    return {(std::norm(s.psi1) - std::norm(s.psi0)) / n_tot,
            s.psi1 * std::conj(s.psi0) / n_tot};
}

/// Fixed point of the Bloch flow on the phi = 0 great circle; s = tan(theta/2)
/// solves g s^3 = Omega (1 - s^4).  The linearization eigenvalues are the
/// pure-imaginary pair +-sqrt(-Omega^2 (s^4+3)/s^2).
struct FixedPoint {
    double s = 0.0;
    double theta = 0.0;
    cplx eig_plus{0.0, 0.0};
    cplx eig_minus{0.0, 0.0};
};

inline std::vector<FixedPoint> find_fixed_points(double g, double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("find_fixed_points: omega must be > 0");
    // P(s) = Omega s^4 + g s^3 - Omega; the asymptotic root grows like g/Omega.
    const auto poly = [g, omega](double s) {
        return omega * s * s * s * s + g * s * s * s - omega;
    };
    const double span = 10.0 * std::max(1.0, std::abs(g) / omega);
    const int cells = 4096;
    std::vector<FixedPoint> out;
    double prev_s = -span, prev_p = poly(prev_s);
    for (int i = 1; i <= cells; ++i) {
        const double s = -span + 2.0 * span * i / cells;
        const double p = poly(s);
        if (prev_p == 0.0 || prev_p * p < 0.0) {
            double a = prev_s, b = s;
            for (int it = 0; it < 200 && (b - a) > 1e-17 * std::max(1.0, std::abs(a)); ++it) {
                const double m = 0.5 * (a + b);
                if (poly(a) * poly(m) <= 0.0) b = m;
                else a = m;
            }
            double root = 0.5 * (a + b);
            // Newton polish
            for (int it = 0; it < 4; ++it) {
                const double p0 = poly(root);
                const double d = 4.0 * omega * root * root * root + 3.0 * g * root * root;
                if (d != 0.0) root -= p0 / d;
            }
            FixedPoint fp;
            fp.s = root;
            fp.theta = 2.0 * std::atan(root);
            const cplx val(-omega * omega * (root * root * root * root + 3.0) / (root * root),
                           0.0);
            fp.eig_plus = std::sqrt(val);
            fp.eig_minus = -fp.eig_plus;
            out.push_back(fp);
        }
        prev_s = s;
        prev_p = p;
    }
    if (out.empty())
        throw NumericError("find_fixed_points: root scan exhausted on [-" +
                           std::to_string(span) + ", " + std::to_string(span) + "]");
    return out;
}

struct FixedPointReport {
    bool passed = false;
    double worst_re_over_omega = 0.0;
    double worst_s = 0.0;
};

/// All linearization eigenvalues must be pure imaginary (no attractors).
inline FixedPointReport verify_no_attracting_fixed_points(const std::vector<FixedPoint>& fps,
                                                          double omega) {
    FixedPointReport rep;
    for (const auto& fp : fps) {
        const double r = std::max(std::abs(fp.eig_plus.real()), std::abs(fp.eig_minus.real())) /
                         omega;
        if (r >= rep.worst_re_over_omega) {
            rep.worst_re_over_omega = r;
            rep.worst_s = fp.s;
        }
    }
    rep.passed = rep.worst_re_over_omega < 1e-10;
    return rep;
}

}  // namespace floqbec

#endif
