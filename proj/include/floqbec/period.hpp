#ifndef FLOQBEC_PERIOD_HPP
#define FLOQBEC_PERIOD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "floqbec/constants.hpp"
#include "floqbec/errors.hpp"
#include "floqbec/fft.hpp"
#include "floqbec/meanfield.hpp"

namespace floqbec {

struct SpectralPeak {
    double freq = 0.0;   // Hz
    double power = 0.0;  // |X|^2, unnormalized
    int component = 0;   // 0 -> psi1, 1 -> psi0
};

/// Period, fundamental frequency and global-phase offset extracted from the
/// discrete Fourier spectrum of a mean-field trajectory.
/// delta_nu is folded into [-nu0/2, nu0/2); mu = -2 pi hbar delta_nu cancels
/// the residual phase drift relative to the frame the trajectory was run in.
struct PeriodEstimate {
    double T = 0.0;
    double nu0 = 0.0;
    double delta_nu = 0.0;
    double mu = 0.0;
    std::vector<SpectralPeak> peaks;
    double comb_residual = 0.0;  // weighted rms of the comb fit, Hz
};

struct DetectOptions {
    double peak_threshold = 1e-6;  // relative power floor for peaks
    bool hann = false;             // rectangular by default
    bool polish = true;            // time-domain refinement of (T, delta_nu)
    double hbar = constants::hbar;
};

struct PowerSpectrum {
    std::vector<double> freq;    // Hz, ascending
    std::vector<double> power1;  // |FFT psi1|^2
    std::vector<double> power0;
};

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// DTFT of samples [begin, end) at frequency f (Hz); times j*dt with j
// counted from the start of the full record.
inline cplx dtft(const std::vector<cplx>& x, std::size_t begin, std::size_t end, double f,
                 double dt) {
    const double w = -2.0 * constants::pi * f * dt;
    // recurrence-free: accumulate with incremental rotation
    cplx rot = std::exp(cplx(0.0, w * static_cast<double>(begin)));
    const cplx stepr = std::exp(cplx(0.0, w));
    cplx acc(0.0, 0.0);
    for (std::size_t j = begin; j < end; ++j) {
        acc += x[j] * rot;
        rot *= stepr;
    }
    return acc;
}

// Two-segment phase comparison: refines a peak frequency well below the bin
// width for an isolated tone.
inline double refine_peak_by_phase(const std::vector<cplx>& x, double dt, double f0) {
    const std::size_t m = x.size() / 2;
    if (m < 8) return f0;
    double f = f0;
    for (int it = 0; it < 3; ++it) {
        const cplx a = dtft(x, 0, m, f, dt);
        const cplx b = dtft(x, m, 2 * m, f, dt);
        if (std::abs(a) == 0.0 || std::abs(b) == 0.0) break;
        const double phi = std::arg(b * std::conj(a));
        f += phi / (2.0 * constants::pi * static_cast<double>(m) * dt);
    }
    return f;
}

inline double fold_half_open(double x, double period) {
    double y = std::fmod(x, period);
    if (y < -period / 2.0) y += period;
    if (y >= period / 2.0) y -= period;
    return y;
}

}  // namespace detail

/// Raw power spectrum of the two components (zero-padded to a power of two,
/// rectangular window unless opts.hann).
inline PowerSpectrum power_spectrum(const Trajectory& traj, const DetectOptions& opts = {}) {
    const std::size_t ns = traj.states.size();
    if (ns < 16) throw std::invalid_argument("power_spectrum: record too short");
    const std::size_t nfft = detail::next_pow2(ns);
    Fft plan(nfft);
    std::vector<cplx> buf(nfft);
    PowerSpectrum ps;
    ps.freq.resize(nfft);
    for (std::size_t i = 0; i < nfft; ++i) {
        const auto si = static_cast<std::ptrdiff_t>(i);
        const auto shift = si < static_cast<std::ptrdiff_t>(nfft / 2)
                               ? si
                               : si - static_cast<std::ptrdiff_t>(nfft);
        ps.freq[i] = static_cast<double>(shift) / (static_cast<double>(nfft) * traj.dt);
    }
    std::sort(ps.freq.begin(), ps.freq.end());
    for (int comp = 0; comp < 2; ++comp) {
        std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
        for (std::size_t j = 0; j < ns; ++j) {
            cplx v = comp == 0 ? traj.states[j].psi1 : traj.states[j].psi0;
            if (opts.hann) {
                const double w =
                    0.5 - 0.5 * std::cos(2.0 * constants::pi * static_cast<double>(j) /
                                         static_cast<double>(ns - 1));
                v *= w;
            }
            buf[j] = v;
        }
        plan.forward(buf);
        auto& dst = comp == 0 ? ps.power1 : ps.power0;
        dst.resize(nfft);
        for (std::size_t i = 0; i < nfft; ++i) {
            // map bin to ascending-frequency position
            const std::size_t pos = (i + nfft / 2) % nfft;
            dst[pos] = std::norm(buf[i]);
        }
    }
    return ps;
}

/// Spectral peaks of both components, strongest first.
///
/// Tones are extracted iteratively: locate the maximum of the (optionally
/// Hann-windowed) power spectrum of the current residual, refine the
/// frequency by quadratic log-power interpolation and a two-segment DTFT
/// phase comparison, then subtract the fitted complex tone from the time
/// series before searching again. Subtracting in the time domain removes
/// the tone together with its entire leakage skirt, so window sidelobes
/// never masquerade as peaks and weak teeth are not biased by strong ones.
inline std::vector<SpectralPeak> find_spectral_peaks(const Trajectory& traj,
                                                     const DetectOptions& opts = {}) {
    const std::size_t ns = traj.states.size();
    if (ns < 64) throw std::invalid_argument("find_spectral_peaks: record too short");
    const double dt = traj.dt;
    const std::size_t nfft = detail::next_pow2(ns);
    const double bin = 1.0 / (static_cast<double>(nfft) * dt);

    Fft plan(nfft);
    std::vector<double> window;
    if (opts.hann) {
        window.resize(ns);
        for (std::size_t j = 0; j < ns; ++j)
            window[j] = 0.5 - 0.5 * std::cos(2.0 * constants::pi * static_cast<double>(j) /
                                             static_cast<double>(ns - 1));
    }

    std::vector<SpectralPeak> peaks;
    std::vector<cplx> residual(ns), buf(nfft);
    std::vector<double> p(nfft);
    for (int comp = 0; comp < 2; ++comp) {
        for (std::size_t j = 0; j < ns; ++j)
            residual[j] = comp == 0 ? traj.states[j].psi1 : traj.states[j].psi0;
        double pmax_first = -1.0;
        for (int found = 0; found < 32; ++found) {
            std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
            for (std::size_t j = 0; j < ns; ++j)
                buf[j] = opts.hann ? window[j] * residual[j] : residual[j];
            plan.forward(buf);
            std::size_t best = 0;
            double pmax = 0.0;
            for (std::size_t i = 0; i < nfft; ++i) {
                p[i] = std::norm(buf[i]);
                if (p[i] > pmax) {
                    pmax = p[i];
                    best = i;
                }
            }
            if (pmax_first < 0.0) pmax_first = pmax;
            if (pmax <= opts.peak_threshold * pmax_first || pmax == 0.0) break;

            // quadratic interpolation of log power around the raw maximum
            const std::size_t ip = (best + 1) % nfft, im = (best + nfft - 1) % nfft;
            const double lm = std::log(std::max(p[im], 1e-300));
            const double l0 = std::log(pmax);
            const double lp = std::log(std::max(p[ip], 1e-300));
            double d = 0.0;
            const double den = lm - 2.0 * l0 + lp;
            if (den < 0.0) d = 0.5 * (lm - lp) / den;
            d = std::clamp(d, -0.5, 0.5);
            const auto sb = static_cast<std::ptrdiff_t>(best);
            const auto half = static_cast<std::ptrdiff_t>(nfft / 2);
            const double fshift =
                static_cast<double>(sb < half ? sb : sb - static_cast<std::ptrdiff_t>(nfft));
            double f = (fshift + d) * bin;
            f = detail::refine_peak_by_phase(residual, dt, f);
            // least-squares complex amplitude of the tone over the record
            const cplx amp = detail::dtft(residual, 0, ns, f, dt) / static_cast<double>(ns);
            peaks.push_back({f, pmax, comp});
            // remove the tone from the time series
            const cplx rot0 = amp;
            const cplx step = std::exp(cplx(0.0, 2.0 * constants::pi * f * dt));
            cplx tone = rot0;
            for (std::size_t j = 0; j < ns; ++j) {
                residual[j] -= tone;
                tone *= step;
            }
        }
    }

    std::sort(peaks.begin(), peaks.end(),
              [](const SpectralPeak& a, const SpectralPeak& b) { return a.power > b.power; });
    return peaks;
}

/// Extract (T, nu0, delta_nu, mu) from the spectral comb n*nu0 + delta_nu:
/// peak detection -> least-squares comb fit over integer assignments ->
/// optional time-domain polish of (T, delta_nu).
inline PeriodEstimate detect_period(const Trajectory& traj, const DetectOptions& opts = {}) {
    const std::size_t ns = traj.states.size();
    const double dt = traj.dt;
    std::vector<SpectralPeak> peaks = find_spectral_peaks(traj, opts);
    if (peaks.size() < 2)
        throw PeriodError("detect_period: cannot determine nu0 (fewer than 2 significant peaks)");

    // ---- comb fit: candidate spacings from pairwise differences ----------
    // The record must span many periods (t >> T), so a legitimate comb
    // spacing covers several resolution bins.
    const double res_bin = 1.0 / (static_cast<double>(ns) * dt);
    const double min_spacing = 8.0 * res_bin;
    const std::size_t ncand_peaks = std::min<std::size_t>(peaks.size(), 12);
    std::vector<double> cands;
    for (std::size_t i = 0; i < ncand_peaks; ++i)
        for (std::size_t j = i + 1; j < ncand_peaks; ++j) {
            const double diff = std::abs(peaks[i].freq - peaks[j].freq);
            for (int q = 1; q <= 6; ++q) {
                const double c = diff / q;
                if (c >= min_spacing) cands.push_back(c);
            }
        }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](double a, double b) { return std::abs(a - b) < 5e-3 * b; }),
                cands.end());
    if (cands.empty())
        throw PeriodError("detect_period: cannot determine nu0 (no admissible comb spacing)");

    const double f0 = peaks[0].freq;
    struct CombFit {
        double nu0 = 0.0, offset = 0.0, wrms = 1e300;
        double inlier_mass = 0.0;  // summed power of peaks consistent with the comb
        bool valid = false;
    };
    // weighted LS of f_p = offset + n_p * nu over the inlier set; two
    // assignment passes so the refit can correct the integer labels
    auto fit_candidate = [&](double nu_init) {
        CombFit fit;
        double nu = nu_init, offset = f0;
        for (int pass = 0; pass < 2; ++pass) {
            const double tol = std::max(0.5 * res_bin, 2e-3 * nu);
            double sw = 0.0, sn = 0.0, snn = 0.0, sf = 0.0, snf = 0.0;
            double nmin = 1e300, nmax = -1e300, mass = 0.0;
            std::size_t inliers = 0;
            for (const auto& pk : peaks) {
                const double np = std::round((pk.freq - offset) / nu);
                if (std::abs(pk.freq - offset - np * nu) > tol) continue;
                const double w = pk.power;
                sw += w;
                sn += w * np;
                snn += w * np * np;
                sf += w * pk.freq;
                snf += w * np * pk.freq;
                nmin = std::min(nmin, np);
                nmax = std::max(nmax, np);
                mass += w;
                ++inliers;
            }
            const double det = sw * snn - sn * sn;
            if (inliers < 2 || nmax - nmin < 0.5 || std::abs(det) < 1e-30) {
                fit.valid = false;
                return fit;
            }
            offset = (snn * sf - sn * snf) / det;
            nu = (sw * snf - sn * sf) / det;
            if (!(nu > min_spacing)) {
                fit.valid = false;
                return fit;
            }
            double acc = 0.0;
            for (const auto& pk : peaks) {
                const double np = std::round((pk.freq - offset) / nu);
                const double r = pk.freq - offset - np * nu;
                if (std::abs(r) > std::max(0.5 * res_bin, 2e-3 * nu)) continue;
                acc += pk.power * r * r;
            }
            fit.nu0 = nu;
            fit.offset = offset;
            fit.wrms = std::sqrt(acc / sw);
            fit.inlier_mass = mass;
            fit.valid = true;
        }
        return fit;
    };

    CombFit best;
    for (double c : cands) {
        const CombFit f = fit_candidate(c);
        if (f.valid && f.inlier_mass > best.inlier_mass) best = f;
    }
    if (!best.valid)
        throw PeriodError("detect_period: cannot determine nu0 (no consistent comb spacing)");
    // any comb also fits its own subharmonics: among candidates capturing
    // the same power, keep the largest spacing
    CombFit chosen = best;
    for (double c : cands) {
        const CombFit f = fit_candidate(c);
        if (f.valid && f.inlier_mass >= 0.995 * best.inlier_mass && f.nu0 > chosen.nu0)
            chosen = f;
    }
    double total_mass = 0.0;
    for (const auto& pk : peaks) total_mass += pk.power;
    if (chosen.wrms > 0.02 * chosen.nu0 || chosen.inlier_mass < 0.5 * total_mass)
        throw PeriodError(
            "detect_period: comb-fit residual above threshold (non-periodic or under-resolved "
            "input)");

    PeriodEstimate est;
    est.peaks = peaks;
    est.comb_residual = chosen.wrms;
    double T = 1.0 / chosen.nu0;
    double dnu = detail::fold_half_open(chosen.offset, chosen.nu0);

    // ---- time-domain polish ----------------------------------------------
    const double duration = traj.duration();
    if (opts.polish && duration > 2.2 * T) {
        double amax = 0.0;
        for (const auto& s : traj.states)
            amax = std::max({amax, std::abs(s.psi1), std::abs(s.psi0)});
        auto score = [&](double Tc, double* alpha_out) {
            const double sT = Tc / dt;
            const auto i0 = static_cast<std::size_t>(std::floor(sT));
            const double fr = sT - static_cast<double>(i0);
            const std::size_t m = ns - (i0 + 2);
            cplx ov(0.0, 0.0);
            for (std::size_t j = 0; j < m; ++j) {
                const auto& a = traj.states[j];
                const auto& b0 = traj.states[j + i0];
                const auto& b1 = traj.states[j + i0 + 1];
                const cplx b1c = (1.0 - fr) * b0.psi1 + fr * b1.psi1;
                const cplx b0c = (1.0 - fr) * b0.psi0 + fr * b1.psi0;
                ov += std::conj(a.psi1) * b1c + std::conj(a.psi0) * b0c;
            }
            const double alpha = std::arg(ov);
            const cplx rot = std::exp(cplx(0.0, -alpha));
            double res = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const auto& a = traj.states[j];
                const auto& b0 = traj.states[j + i0];
                const auto& b1 = traj.states[j + i0 + 1];
                const cplx b1c = ((1.0 - fr) * b0.psi1 + fr * b1.psi1) * rot;
                const cplx b0c = ((1.0 - fr) * b0.psi0 + fr * b1.psi0) * rot;
                res = std::max(res, std::abs(b1c - a.psi1));
                res = std::max(res, std::abs(b0c - a.psi0));
            }
            if (alpha_out) *alpha_out = alpha;
            return amax > 0.0 ? res / amax : 0.0;
        };
        double lo = 0.98 * T, hi = std::min(1.02 * T, duration - dt);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
        double fc = score(c, nullptr), fd = score(d, nullptr);
        for (int it = 0; it < 60; ++it) {
            if (fc < fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - gr * (hi - lo);
                fc = score(c, nullptr);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + gr * (hi - lo);
                fd = score(d, nullptr);
            }
        }
        const double Tp = 0.5 * (lo + hi);
        double alpha = 0.0;
        score(Tp, &alpha);
        // keep the comb's branch of delta_nu; alpha pins it mod 1/T
        double dnu_p = alpha / (2.0 * constants::pi * Tp);
        dnu_p += std::round((dnu - dnu_p) * Tp) / Tp;
        T = Tp;
        dnu = detail::fold_half_open(dnu_p, 1.0 / Tp);
    }

    est.T = T;
    est.nu0 = 1.0 / T;
    est.delta_nu = dnu;
    est.mu = -2.0 * constants::pi * opts.hbar * dnu;
    return est;
}

/// Max over sampled t of |psi_j(t+T) - psi_j(t)| / max |psi| after the
/// analytic phase correction e^{-i 2 pi delta_nu t}.
inline double verify_periodicity(const Trajectory& traj, const PeriodEstimate& est) {
    const std::size_t ns = traj.states.size();
    const double dt = traj.dt;
    const double sT = est.T / dt;
    const auto i0 = static_cast<std::size_t>(std::floor(sT));
    if (i0 + 2 >= ns)
        throw std::invalid_argument("verify_periodicity: trajectory shorter than one period");
    const double fr = sT - static_cast<double>(i0);
    const std::size_t m = ns - (i0 + 2);
    double amax = 0.0;
    for (const auto& s : traj.states)
        amax = std::max({amax, std::abs(s.psi1), std::abs(s.psi0)});
    if (amax == 0.0) return 0.0;
    // correction for the shifted sample reduces to a constant rotation
    const cplx rot = std::exp(cplx(0.0, -2.0 * constants::pi * est.delta_nu * est.T));
    double res = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto& a = traj.states[j];
        const auto& b0 = traj.states[j + i0];
        const auto& b1 = traj.states[j + i0 + 1];
        const cplx b1c = ((1.0 - fr) * b0.psi1 + fr * b1.psi1) * rot;
        const cplx b0c = ((1.0 - fr) * b0.psi0 + fr * b1.psi0) * rot;
        res = std::max(res, std::abs(b1c - a.psi1));
        res = std::max(res, std::abs(b0c - a.psi0));
    }
    return res / amax;
}

}  // namespace floqbec

#endif
