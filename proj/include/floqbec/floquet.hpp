#ifndef FLOQBEC_FLOQUET_HPP
#define FLOQBEC_FLOQUET_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "floqbec/errors.hpp"
#include "floqbec/mat4.hpp"
#include "floqbec/meanfield.hpp"
#include "floqbec/period.hpp"

namespace floqbec {

inline double free_particle_energy(double k, double mass, double hbar) {
    return hbar * hbar * k * k / (2.0 * mass);
}

/// Generator of the linearized fluctuation dynamics at wave number k about
/// the instantaneous mean field, in the basis
/// (dPsi1(k), dPsi1^dag(-k), dPsi0(k), dPsi0^dag(-k)).  Traceless by
/// construction; depends on k only through k^2.
inline Mat4 build_generator(double k, const MeanFieldState& s, const TwoModeSystem& sys) {
    const double e = free_particle_energy(k, sys.mass, sys.hbar);
    const double u = sys.u, kap = sys.kappa;
    const double n1 = std::norm(s.psi1), n0 = std::norm(s.psi0);
    const double q1 = u * (2.0 * n1 + n0);
    const double q0 = u * (2.0 * kap * n0 + n1);
    const cplx u01 = u * std::conj(s.psi0) * s.psi1;
    const cplx u10 = u * std::conj(s.psi1) * s.psi0;
    const cplx v11 = u * s.psi1 * s.psi1;
    const cplx v10 = u * s.psi1 * s.psi0;
    const cplx v00 = u * s.psi0 * s.psi0;
    const double hO = sys.hbar_omega;
    const double d1 = e + q1 - sys.mu;
    const double d0 = e + q0 - sys.mu;

    Mat4 h;
    h(0, 0) = d1;
    h(0, 1) = v11;
    h(0, 2) = u01 + hO;
    h(0, 3) = v10;
    h(1, 0) = -std::conj(v11);
    h(1, 1) = -d1;
    h(1, 2) = -std::conj(v10);
    h(1, 3) = -(u10 + hO);
    h(2, 0) = u10 + hO;
    h(2, 1) = v10;
    h(2, 2) = d0;
    h(2, 3) = kap * v00;
    h(3, 0) = -std::conj(v10);
    h(3, 1) = -(u01 + hO);
    h(3, 2) = -kap * std::conj(v00);
    h(3, 3) = -d0;
    return h;
}

/// One period of the phase-cancelled mean field, stored densely on the
/// half-step grid of the monodromy integrator (2*steps+1 states), so the
/// RK4 stages read exact samples rather than interpolating.
struct PeriodicMeanField {
    TwoModeSystem sys;  // with mu set to the total phase-cancelling offset
    double T = 0.0;
    double dt = 0.0;  // monodromy step; mean field stored at dt/2
    std::vector<MeanFieldState> half_grid;
    double periodicity_residual = 0.0;
};

/// Rate scale of the fluctuation generator up to k_max; sets the monodromy
/// step through dt = target / rate.
inline double generator_rate_scale(const TwoModeSystem& sys, double n_tot, double k_max) {
    const double e = free_particle_energy(k_max, sys.mass, sys.hbar);
    return (e + 2.0 * sys.u * n_tot * (1.0 + sys.kappa) + sys.hbar_omega +
            std::abs(sys.mu)) /
           sys.hbar;
}

inline constexpr double kMonodromyStepTarget = 0.01;

/// Integrate the mean field over one period at the monodromy resolution.
/// Throws if the stored period is not actually periodic to `residual_tol`.
inline PeriodicMeanField prepare_periodic_mean_field(const MeanFieldState& psi0,
                                                     const TwoModeSystem& sys, double T,
                                                     double k_max,
                                                     double residual_tol = 1e-3,
                                                     std::size_t steps_override = 0) {
    PeriodicMeanField pmf;
    pmf.sys = sys;
    pmf.T = T;
    const double rate = generator_rate_scale(sys, psi0.total_density(), k_max);
    const std::size_t steps =
        steps_override > 0
            ? steps_override
            : static_cast<std::size_t>(
                  std::max(64.0, std::ceil(T * rate / kMonodromyStepTarget)));
    pmf.dt = T / static_cast<double>(steps);
    pmf.half_grid.reserve(2 * steps + 1);
    pmf.half_grid.push_back(psi0);
    MeanFieldState y = psi0;
    const double h = pmf.dt / 2.0;
    for (std::size_t i = 0; i < 2 * steps; ++i) {
        y = detail::rk4_step(y, h, [&sys](const MeanFieldState& s) { return sys.rhs(s); });
        if (!y.finite())
            throw NumericError("prepare_periodic_mean_field: non-finite mean field");
        pmf.half_grid.push_back(y);
    }
    const MeanFieldState& last = pmf.half_grid.back();
    const double amp = std::sqrt(psi0.total_density());
    pmf.periodicity_residual =
        std::max(std::abs(last.psi1 - psi0.psi1), std::abs(last.psi0 - psi0.psi0)) / amp;
    if (pmf.periodicity_residual > residual_tol)
        throw NumericError("prepare_periodic_mean_field: periodicity residual " +
                           std::to_string(pmf.periodicity_residual) + " exceeds " +
                           std::to_string(residual_tol));
    return pmf;
}

/// Monodromy matrix Pi(T) of d Pi/dt = (-i/hbar) H(k,t) Pi with its
/// eigenvalue quadruple.
struct MonodromyResult {
    double k = 0.0;
    Mat4 m;
    std::array<cplx, 4> eigenvalues{};
    double det_residual = 0.0;
};

inline MonodromyResult monodromy(double k, const PeriodicMeanField& pmf) {
    const std::size_t steps = (pmf.half_grid.size() - 1) / 2;
    const cplx pref(0.0, -1.0 / pmf.sys.hbar);
    Mat4 P = Mat4::identity();
    const double dt = pmf.dt;
    for (std::size_t i = 0; i < steps; ++i) {
        const Mat4 a0 = pref * build_generator(k, pmf.half_grid[2 * i], pmf.sys);
        const Mat4 ah = pref * build_generator(k, pmf.half_grid[2 * i + 1], pmf.sys);
        const Mat4 a1 = pref * build_generator(k, pmf.half_grid[2 * i + 2], pmf.sys);
        const Mat4 k1 = a0 * P;
        const Mat4 k2 = ah * (P + (0.5 * dt) * k1);
        const Mat4 k3 = ah * (P + (0.5 * dt) * k2);
        const Mat4 k4 = a1 * (P + dt * k3);
        P += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!P.finite())
        throw NumericError("monodromy: non-finite propagator at k = " + std::to_string(k));
    MonodromyResult res;
    res.k = k;
    res.m = P;
    res.eigenvalues = eigenvalues4(P);
    res.det_residual = std::abs(det4(P) - cplx(1.0, 0.0));
    if (res.det_residual > 1e-6)
        throw NumericError("monodromy: det residual " + std::to_string(res.det_residual) +
                           " at k = " + std::to_string(k) + " (step size too coarse)");
    return res;
}

enum class StabilityClass { stable, two_mode_unstable, four_mode_unstable, degenerate };

inline const char* to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::stable: return "stable";
        case StabilityClass::two_mode_unstable: return "two_mode_unstable";
        case StabilityClass::four_mode_unstable: return "four_mode_unstable";
        default: return "degenerate";
    }
}

/// Floquet exponent xi = omega + i gamma; omega folded to [-pi/T, pi/T).
struct FloquetExponent {
    double omega = 0.0;  // rad/s
    double gamma = 0.0;  // 1/s
};

struct FloquetExponentSet {
    double k = 0.0;
    std::array<FloquetExponent, 4> exponents{};
    StabilityClass cls = StabilityClass::stable;
    double det_residual = 0.0;
};

/// xi_i = (i/T) log lambda_i on the principal branch.
inline FloquetExponentSet floquet_exponents(const MonodromyResult& mono, double T,
                                            double gamma_tol) {
    FloquetExponentSet set;
    set.k = mono.k;
    set.det_residual = mono.det_residual;
    int unstable = 0;
    for (int i = 0; i < 4; ++i) {
        const cplx lam = mono.eigenvalues[static_cast<std::size_t>(i)];
        FloquetExponent xi;
        xi.gamma = std::log(std::abs(lam)) / T;
        xi.omega = -std::arg(lam) / T;
        if (std::abs(xi.gamma) >= gamma_tol) ++unstable;
        set.exponents[static_cast<std::size_t>(i)] = xi;
    }
    if (unstable == 0) set.cls = StabilityClass::stable;
    else if (unstable == 2) set.cls = StabilityClass::two_mode_unstable;
    else if (unstable == 4) set.cls = StabilityClass::four_mode_unstable;
    else set.cls = StabilityClass::degenerate;
    return set;
}

struct SymmetryReport {
    bool passed = false;
    double max_mismatch = 0.0;
};

/// The eigenvalue set must be closed under lambda -> lambda*, 1/lambda and
/// 1/lambda*; reports the worst nearest-partner distance over the three maps.
inline SymmetryReport check_eigenvalue_symmetry(const MonodromyResult& mono, double tol) {
    SymmetryReport rep;
    const auto& ev = mono.eigenvalues;
    auto nearest = [&ev](const cplx& target) {
        double best = 1e300;
        for (const auto& l : ev) best = std::min(best, std::abs(l - target));
        return best;
    };
    for (const auto& l : ev) {
        rep.max_mismatch = std::max(rep.max_mismatch, nearest(std::conj(l)));
        if (std::abs(l) > 0.0) {
            rep.max_mismatch = std::max(rep.max_mismatch, nearest(1.0 / l));
            rep.max_mismatch = std::max(rep.max_mismatch, nearest(1.0 / std::conj(l)));
        }
    }
    rep.passed = rep.max_mismatch < tol;
    return rep;
}

struct FloquetSpectrum {
    std::vector<double> k_grid;
    std::vector<FloquetExponentSet> sets;
    double T = 0.0;
    double gamma_tol = 0.0;
};

/// Default instability threshold: 1e-3 of the folding frequency 2 pi / T.
inline double default_gamma_tol(double T) { return 1e-3 * 2.0 * constants::pi / T; }

/// Monodromy + exponent extraction over a k grid. Pure per-k work mapped
/// over a thread pool; results merged by grid index, so the output is
/// identical for any thread count.
inline FloquetSpectrum scan_spectrum(double k_min, double k_max, std::size_t count,
                                     const PeriodicMeanField& pmf, double gamma_tol = 0.0,
                                     unsigned threads = 0) {
    if (!(k_min >= 0.0) || !(k_max > k_min))
        throw std::invalid_argument("scan_spectrum: need 0 <= k_min < k_max");
    if (count < 2) throw std::invalid_argument("scan_spectrum: need at least 2 k points");
    FloquetSpectrum spec;
    spec.T = pmf.T;
    spec.gamma_tol = gamma_tol > 0.0 ? gamma_tol : default_gamma_tol(pmf.T);
    spec.k_grid.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        spec.k_grid[i] =
            k_min + (k_max - k_min) * static_cast<double>(i) / static_cast<double>(count - 1);
    spec.sets.resize(count);

    unsigned nthreads = threads > 0 ? threads : std::thread::hardware_concurrency();
    if (nthreads == 0) nthreads = 1;
    nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(count));

    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(count);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                const MonodromyResult mono = monodromy(spec.k_grid[i], pmf);
                spec.sets[i] = floquet_exponents(mono, pmf.T, spec.gamma_tol);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < count; ++i)
        if (!errors[i].empty())
            throw NumericError("scan_spectrum: failure at k = " + std::to_string(spec.k_grid[i]) +
                               ": " + errors[i]);
    return spec;
}

/// Contiguous run of unstable grid points sharing one classification.
struct Band {
    double k_lo = 0.0;
    double k_hi = 0.0;
    int n_unstable = 0;  // 2 or 4
    double gamma_max = 0.0;
    double k_at_max = 0.0;
};

inline std::vector<Band> unstable_bands(const FloquetSpectrum& spec) {
    auto count_of = [](StabilityClass c) {
        if (c == StabilityClass::two_mode_unstable) return 2;
        if (c == StabilityClass::four_mode_unstable) return 4;
        if (c == StabilityClass::degenerate) return -1;
        return 0;
    };
    std::vector<Band> bands;
    const std::size_t n = spec.k_grid.size();
    std::size_t i = 0;
    while (i < n) {
        const int cnt = count_of(spec.sets[i].cls);
        if (cnt <= 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        Band b;
        b.k_lo = spec.k_grid[i];
        b.n_unstable = cnt;
        while (j < n && count_of(spec.sets[j].cls) == cnt) {
            double g = 0.0;
            for (const auto& xi : spec.sets[j].exponents) g = std::max(g, xi.gamma);
            if (g >= b.gamma_max) {
                b.gamma_max = g;
                b.k_at_max = spec.k_grid[j];
            }
            b.k_hi = spec.k_grid[j];
            ++j;
        }
        bands.push_back(b);
        i = j;
    }
    return bands;
}

/// Excitation branches for equal scattering lengths (time-independent case):
/// hbar w_up = sqrt(eps (eps + 2 n U)), hbar w_down = eps.
inline std::pair<double, double> kappa1_spectrum(double k, double n, double u, double mass,
                                                 double hbar) {
    const double e = free_particle_energy(k, mass, hbar);
    return {std::sqrt(e * (e + 2.0 * n * u)) / hbar, e / hbar};
}

/// Single-component Bogoliubov dispersion sqrt(eps (eps + 2 n U)) / hbar.
inline double bogoliubov_spectrum(double k, double n, double u, double mass, double hbar) {
    const double e = free_particle_energy(k, mass, hbar);
    return std::sqrt(e * (e + 2.0 * n * u)) / hbar;
}

struct Gain {
    double amplitude = 1.0;   // cosh(n gamma T)
    double occupation = 0.0;  // sinh^2(n gamma T), vacuum-seeded
};

inline Gain predicted_gain(double gamma, double T, int n_periods) {
    if (n_periods < 0) throw std::invalid_argument("predicted_gain: n_periods must be >= 0");
    const double x = static_cast<double>(n_periods) * gamma * T;
    const double sh = std::sinh(x);
    return {std::cosh(x), sh * sh};
}

}  // namespace floqbec

#endif
