#ifndef FLOQBEC_TWA_HPP
#define FLOQBEC_TWA_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "floqbec/errors.hpp"
#include "floqbec/fft.hpp"
#include "floqbec/meanfield.hpp"
#include "floqbec/rng.hpp"

namespace floqbec {

/// Periodic 1D lattice. k_values follow FFT ordering: index j holds
/// k = 2 pi j / L for j < n/2 and k = 2 pi (j - n) / L above.
struct Lattice1D {
    std::size_t n = 0;
    double length = 0.0;
    double dx = 0.0;
    std::vector<double> k;

    double k_max() const { return constants::pi / dx; }
    double dk() const { return 2.0 * constants::pi / length; }
};

inline Lattice1D make_lattice(std::size_t n_points, double length) {
    if (n_points == 0 || (n_points & (n_points - 1)) != 0)
        throw std::invalid_argument("make_lattice: n_points must be a power of two");
    if (!(length > 0.0)) throw std::invalid_argument("make_lattice: length must be > 0");
    Lattice1D lat;
    lat.n = n_points;
    lat.length = length;
    lat.dx = length / static_cast<double>(n_points);
    lat.k.resize(n_points);
    for (std::size_t j = 0; j < n_points; ++j) {
        const auto sj = static_cast<std::ptrdiff_t>(j);
        const auto half = static_cast<std::ptrdiff_t>(n_points / 2);
        const double idx =
            static_cast<double>(sj < half ? sj : sj - static_cast<std::ptrdiff_t>(n_points));
        lat.k[j] = 2.0 * constants::pi * idx / length;
    }
    return lat;
}

/// 1D-reduced system: u1 carries J m (chosen so n1d*u1 matches the 3D n U).
struct TwaSystem {
    double u1 = 0.0;
    double kappa = 1.0;
    double hbar_omega = 0.0;
    double mu = 0.0;
    double hbar = constants::hbar;
    double mass = constants::mass_he_star;
};

struct WignerField {
    std::vector<cplx> psi1, psi0;  // m^-1/2
    std::uint64_t seed = 0;

    double norm(double dx) const {
        double s = 0.0;
        for (const auto& v : psi1) s += std::norm(v);
        for (const auto& v : psi0) s += std::norm(v);
        return s * dx;
    }
    bool finite() const {
        for (const auto& v : psi1)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        for (const auto& v : psi0)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }
};

/// Coherent background sqrt(n1d * split_j) plus half a quantum of complex
/// Gaussian noise per lattice site per component (variance 1/(2 dx)).
/// Component 1 is filled first, then component 0; one stream per trajectory.
inline WignerField sample_initial_field(const Lattice1D& lat, double n1d, double split1,
                                        double rel_phase, std::uint64_t master_seed,
                                        std::uint64_t trajectory, bool noise = true) {
    if (!(n1d > 0.0)) throw std::invalid_argument("sample_initial_field: n1d must be > 0");
    WignerField f;
    f.seed = master_seed;
    f.psi1.resize(lat.n);
    f.psi0.resize(lat.n);
    const cplx bg1(std::sqrt(n1d * split1), 0.0);
    const cplx bg0 = std::sqrt(n1d * (1.0 - split1)) * std::exp(cplx(0.0, rel_phase));
    GaussianRng rng(master_seed, trajectory);
    const double sigma = std::sqrt(1.0 / (4.0 * lat.dx));
    for (std::size_t i = 0; i < lat.n; ++i)
        f.psi1[i] = bg1 + (noise ? rng.cnormal(sigma) : cplx(0.0));
    for (std::size_t i = 0; i < lat.n; ++i)
        f.psi0[i] = bg0 + (noise ? rng.cnormal(sigma) : cplx(0.0));
    return f;
}

namespace detail {

// exp(-i phi) for the small per-step phases of the nonlinear substep;
// polynomial branch keeps the inner loop free of libm calls.
inline cplx cexp_small(double phi) {
    const double p2 = phi * phi;
    if (p2 < 4e-4) {
        const double c =
            1.0 - p2 * (0.5 - p2 * (1.0 / 24.0 - p2 * (1.0 / 720.0)));
        const double s =
            phi * (1.0 - p2 * (1.0 / 6.0 - p2 * (1.0 / 120.0 - p2 * (1.0 / 5040.0))));
        return {c, -s};
    }
    return {std::cos(phi), -std::sin(phi)};
}

}  // namespace detail

/// Split-step evolver: kinetic half-steps in momentum space around an exact
/// position-space substep D(dt/2) R(dt) D(dt/2), where D is the density
/// phase and R the (space-independent) Rabi rotation. Every factor is
/// unitary, so the per-trajectory norm is conserved to roundoff.
class TwaStepper {
public:
    TwaStepper(const Lattice1D& lat, const TwaSystem& sys, double dt)
        : lat_(lat), sys_(sys), dt_(dt), fft_(lat.n), kin_full_(lat.n), kin_half_(lat.n) {
        const double bound = 0.1 * 2.0 * sys.mass / (sys.hbar * lat.k_max() * lat.k_max());
        if (!(dt > 0.0) || dt > bound)
            throw std::invalid_argument(
                "TwaStepper: dt violates the kinetic stability bound dt*hbar*kmax^2/2M <= 0.1");
        for (std::size_t j = 0; j < lat.n; ++j) {
            const double eps = sys.hbar * sys.hbar * lat.k[j] * lat.k[j] / (2.0 * sys.mass);
            const double ph_full = eps * dt / sys.hbar;
            kin_full_[j] = cplx(std::cos(ph_full), -std::sin(ph_full));
            kin_half_[j] = cplx(std::cos(0.5 * ph_full), -std::sin(0.5 * ph_full));
        }
        cos_r_ = std::cos(sys.hbar_omega / sys.hbar * dt);
        sin_r_ = std::sin(sys.hbar_omega / sys.hbar * dt);
    }

    double dt() const { return dt_; }
    static double max_stable_dt(const Lattice1D& lat, const TwaSystem& sys) {
        return 0.1 * 2.0 * sys.mass / (sys.hbar * lat.k_max() * lat.k_max());
    }

    /// Advance by `steps` steps; adjacent kinetic half-steps are fused.
    void advance(WignerField& f, std::size_t steps) {
        if (steps == 0) return;
        kinetic(f, kin_half_);
        for (std::size_t s = 0; s + 1 < steps; ++s) {
            nonlinear(f);
            kinetic(f, kin_full_);
        }
        nonlinear(f);
        kinetic(f, kin_half_);
        if (!f.finite()) throw NumericError("TwaStepper: non-finite field");
    }

private:
    void kinetic(WignerField& f, const std::vector<cplx>& phase) {
        for (auto* comp : {&f.psi1, &f.psi0}) {
            fft_.forward(*comp);
            for (std::size_t j = 0; j < lat_.n; ++j) (*comp)[j] *= phase[j];
            fft_.inverse(*comp);
        }
    }

    void nonlinear(WignerField& f) {
        const double tau = 0.5 * dt_ / sys_.hbar;
        const double u = sys_.u1, kap = sys_.kappa, mu = sys_.mu;
        auto density_phase = [&](cplx& a, cplx& b) {
            const double n1 = std::norm(a), n0 = std::norm(b);
            a *= detail::cexp_small((u * (n1 + n0) - mu) * tau);
            b *= detail::cexp_small((u * (n1 + kap * n0) - mu) * tau);
        };
        for (std::size_t i = 0; i < lat_.n; ++i) {
            cplx a = f.psi1[i], b = f.psi0[i];
            density_phase(a, b);
            const cplx a2 = cos_r_ * a + cplx(0.0, -sin_r_) * b;
            const cplx b2 = cplx(0.0, -sin_r_) * a + cos_r_ * b;
            a = a2;
            b = b2;
            density_phase(a, b);
            f.psi1[i] = a;
            f.psi0[i] = b;
        }
    }

    Lattice1D lat_;
    TwaSystem sys_;
    double dt_;
    Fft fft_;
    std::vector<cplx> kin_full_, kin_half_;
    double cos_r_ = 1.0, sin_r_ = 0.0;
};

/// Time series of a single trajectory, sampled every snap_stride steps
/// (including t = 0 and the final time).
inline std::vector<WignerField> evolve_twa(const WignerField& initial, const Lattice1D& lat,
                                           const TwaSystem& sys, double t_final, double dt,
                                           std::size_t snap_stride = 0) {
    TwaStepper stepper(lat, sys, dt);
    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    if (snap_stride == 0) snap_stride = steps == 0 ? 1 : steps;
    std::vector<WignerField> out;
    out.push_back(initial);
    WignerField f = initial;
    std::size_t done = 0;
    while (done < steps) {
        const std::size_t chunk = std::min(snap_stride, steps - done);
        stepper.advance(f, chunk);
        done += chunk;
        out.push_back(f);
    }
    return out;
}

/// Mode amplitudes a_k = sqrt(dx/n) FFT(psi)[k]; occ = |a_k|^2 so that
/// sum_k occ_k = dx sum_x |psi_x|^2 (total particle number).
inline void mode_occupations(const Lattice1D& lat, const std::vector<cplx>& psi, Fft& fft,
                             std::vector<double>& occ_out) {
    std::vector<cplx> buf = psi;
    fft.forward(buf);
    const double scale = lat.dx / static_cast<double>(lat.n);
    occ_out.resize(lat.n);
    for (std::size_t j = 0; j < lat.n; ++j) occ_out[j] = scale * std::norm(buf[j]);
}

/// Ensemble-averaged, symmetrized-ordering-corrected momentum occupation
/// per component: <|a_k|^2> - 1/2.  Density per unit length = occ / L.
struct MomentumDensity {
    double t = 0.0;
    std::vector<double> occ1, occ0;  // corrected occupations, per FFT-ordered mode

    double total(std::size_t j) const { return occ1[j] + occ0[j]; }
};

inline MomentumDensity momentum_density(const Lattice1D& lat,
                                        const std::vector<const WignerField*>& ensemble,
                                        double t) {
    if (ensemble.empty()) throw std::invalid_argument("momentum_density: empty ensemble");
    Fft fft(lat.n);
    MomentumDensity md;
    md.t = t;
    md.occ1.assign(lat.n, 0.0);
    md.occ0.assign(lat.n, 0.0);
    std::vector<double> occ;
    for (const WignerField* f : ensemble) {
        mode_occupations(lat, f->psi1, fft, occ);
        for (std::size_t j = 0; j < lat.n; ++j) md.occ1[j] += occ[j];
        mode_occupations(lat, f->psi0, fft, occ);
        for (std::size_t j = 0; j < lat.n; ++j) md.occ0[j] += occ[j];
    }
    const double inv = 1.0 / static_cast<double>(ensemble.size());
    for (std::size_t j = 0; j < lat.n; ++j) {
        md.occ1[j] = md.occ1[j] * inv - 0.5;
        md.occ0[j] = md.occ0[j] * inv - 0.5;
    }
    return md;
}

struct EnsembleOptions {
    std::size_t realizations = 500;
    double t_final = 2e-3;
    double dt = 0.0;  // 0: 0.95 * kinetic stability bound
    std::size_t snap_stride = 0;  // 0: ~40 snapshots
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool noise = true;
    double n1d = 5e9;
    double split1 = 1.0;
    double rel_phase = 0.0;
    std::size_t chunk = 25;  // fixed reduction granularity (determinism)
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<MomentumDensity> snaps;  // ensemble-averaged, corrected
    double max_norm_drift = 0.0;         // worst per-trajectory |dN|/N
    std::size_t realizations = 0;
    double dt = 0.0;
};

/// Independent trajectories mapped over a thread pool. Reduction runs over
/// fixed-size chunks in chunk order, so the ensemble average is bitwise
/// identical for any thread count.
inline EnsembleResult run_ensemble(const Lattice1D& lat, const TwaSystem& sys,
                                   const EnsembleOptions& opt) {
    if (opt.realizations == 0)
        throw std::invalid_argument("run_ensemble: need at least 1 realization");
    const double dt =
        opt.dt > 0.0 ? opt.dt : 0.95 * TwaStepper::max_stable_dt(lat, sys);
    if (dt > TwaStepper::max_stable_dt(lat, sys))
        throw std::invalid_argument("run_ensemble: dt violates the kinetic stability bound");
    const auto steps = static_cast<std::size_t>(std::llround(opt.t_final / dt));
    const std::size_t stride =
        opt.snap_stride > 0 ? opt.snap_stride : std::max<std::size_t>(1, steps / 40);

    std::vector<std::size_t> snap_steps;  // step indices of snapshots
    snap_steps.push_back(0);
    for (std::size_t s = stride; s < steps; s += stride) snap_steps.push_back(s);
    if (steps > 0) snap_steps.push_back(steps);
    const std::size_t nsnap = snap_steps.size();

    const std::size_t nchunk = (opt.realizations + opt.chunk - 1) / opt.chunk;
    // per-chunk accumulators of sum_traj |a_k|^2 per component and snapshot
    std::vector<std::vector<std::vector<double>>> acc1(nchunk), acc0(nchunk);
    std::vector<double> chunk_drift(nchunk, 0.0);

    std::atomic<std::size_t> next_chunk{0};
    std::vector<std::string> errors(nchunk);
    auto worker = [&]() {
        Fft fft(lat.n);
        TwaStepper stepper(lat, sys, dt);
        std::vector<double> occ;
        for (;;) {
            const std::size_t c = next_chunk.fetch_add(1);
            if (c >= nchunk) return;
            try {
                auto& a1 = acc1[c];
                auto& a0 = acc0[c];
                a1.assign(nsnap, std::vector<double>(lat.n, 0.0));
                a0.assign(nsnap, std::vector<double>(lat.n, 0.0));
                const std::size_t t_lo = c * opt.chunk;
                const std::size_t t_hi = std::min(t_lo + opt.chunk, opt.realizations);
                for (std::size_t traj = t_lo; traj < t_hi; ++traj) {
                    WignerField f = sample_initial_field(lat, opt.n1d, opt.split1,
                                                         opt.rel_phase, opt.seed, traj,
                                                         opt.noise);
                    const double norm0 = f.norm(lat.dx);
                    std::size_t done = 0;
                    for (std::size_t si = 0; si < nsnap; ++si) {
                        const std::size_t target = snap_steps[si];
                        if (target > done) {
                            stepper.advance(f, target - done);
                            done = target;
                        }
                        mode_occupations(lat, f.psi1, fft, occ);
                        for (std::size_t j = 0; j < lat.n; ++j) a1[si][j] += occ[j];
                        mode_occupations(lat, f.psi0, fft, occ);
                        for (std::size_t j = 0; j < lat.n; ++j) a0[si][j] += occ[j];
                    }
                    const double drift = std::abs(f.norm(lat.dx) - norm0) / norm0;
                    chunk_drift[c] = std::max(chunk_drift[c], drift);
                }
            } catch (const std::exception& e) {
                errors[c] = e.what();
            }
        }
    };

    unsigned nthreads = opt.threads > 0 ? opt.threads : std::thread::hardware_concurrency();
    if (nthreads == 0) nthreads = 1;
    nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(nchunk));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t c = 0; c < nchunk; ++c)
        if (!errors[c].empty()) throw NumericError("run_ensemble: " + errors[c]);

    EnsembleResult res;
    res.realizations = opt.realizations;
    res.dt = dt;
    res.times.resize(nsnap);
    res.snaps.resize(nsnap);
    const double inv = 1.0 / static_cast<double>(opt.realizations);
    for (std::size_t si = 0; si < nsnap; ++si) {
        res.times[si] = static_cast<double>(snap_steps[si]) * dt;
        auto& md = res.snaps[si];
        md.t = res.times[si];
        md.occ1.assign(lat.n, 0.0);
        md.occ0.assign(lat.n, 0.0);
        for (std::size_t c = 0; c < nchunk; ++c) {  // fixed order
            for (std::size_t j = 0; j < lat.n; ++j) {
                md.occ1[j] += acc1[c][si][j];
                md.occ0[j] += acc0[c][si][j];
            }
        }
        for (std::size_t j = 0; j < lat.n; ++j) {
            md.occ1[j] = md.occ1[j] * inv - 0.5;
            md.occ0[j] = md.occ0[j] * inv - 0.5;
        }
    }
    for (double d : chunk_drift) res.max_norm_drift = std::max(res.max_norm_drift, d);
    return res;
}

/// Least-squares slope of log(occupation) vs t over the window where the
/// occupation is above `floor` and below `cap`; occupation grows as
/// e^{2 gamma t}, so gamma = slope / 2.
inline double growth_rate_fit(const std::vector<double>& times,
                              const std::vector<double>& occupation, double floor,
                              double cap) {
    double st = 0.0, stt = 0.0, sy = 0.0, sty = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double n = occupation[i];
        if (!(n > floor) || !(n < cap)) continue;
        const double y = std::log(n);
        st += times[i];
        stt += times[i] * times[i];
        sy += y;
        sty += times[i] * y;
        ++m;
    }
    if (m < 2) throw NumericError("growth_rate_fit: window empty");
    const double dm = static_cast<double>(m);
    const double det = dm * stt - st * st;
    if (std::abs(det) < 1e-300) throw NumericError("growth_rate_fit: window empty");
    return 0.5 * (dm * sty - st * sy) / det;
}

}  // namespace floqbec

#endif
