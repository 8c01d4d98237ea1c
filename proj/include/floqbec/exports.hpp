#ifndef FLOQBEC_EXPORTS_HPP
#define FLOQBEC_EXPORTS_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "floqbec/floquet.hpp"
#include "floqbec/io.hpp"
#include "floqbec/meanfield.hpp"
#include "floqbec/period.hpp"
#include "floqbec/twa.hpp"

namespace floqbec {

namespace io {

/// t, Re psi1, Im psi1, Re psi0, Im psi0 (one row per sample).
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const std::string& hash,
                                 const std::vector<std::string>& param_echo) {
    CsvFile f(path);
    f.comment("manifest_hash=" + hash);
    for (const auto& line : param_echo) f.comment(line);
    f.header("t_s,re_psi1,im_psi1,re_psi0,im_psi0");
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& s = traj.states[i];
        f.row({traj.time(i), s.psi1.real(), s.psi1.imag(), s.psi0.real(), s.psi0.imag()});
    }
}

/// t, w, Re rho10, Im rho10.
inline void write_bloch_csv(const std::string& path, const BlochTrajectory& traj,
                            const std::string& hash,
                            const std::vector<std::string>& param_echo) {
    CsvFile f(path);
    f.comment("manifest_hash=" + hash);
    for (const auto& line : param_echo) f.comment(line);
    f.header("t_s,w,re_rho10,im_rho10");
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& v = traj.states[i];
        f.row({traj.time(i), v.w, v.rho10.real(), v.rho10.imag()});
    }
}

/// frequency Hz, power of each component (the Fig.-2-style artifact).
inline void write_power_spectrum_csv(const std::string& path, const PowerSpectrum& ps,
                                     const std::string& hash) {
    CsvFile f(path);
    f.comment("manifest_hash=" + hash);
    f.comment("raw |FFT|^2 of the zero-padded record, ascending frequency");
    f.header("freq_hz,power_component1,power_component0");
    for (std::size_t i = 0; i < ps.freq.size(); ++i)
        f.row({ps.freq[i], ps.power1[i], ps.power0[i]});
}

/// k, folded omega_1..4 (rad/s in [-pi/T, pi/T)), gamma_1..4 (1/s), class.
inline void write_floquet_csv(const std::string& path, const FloquetSpectrum& spec,
                              const std::string& hash) {
    CsvFile f(path);
    f.comment("manifest_hash=" + hash);
    f.comment("omega folded to [-pi/T, pi/T) rad/s, T = " + fmt(spec.T) + " s");
    f.comment("gamma_tol = " + fmt(spec.gamma_tol) + " 1/s");
    f.header("k_per_m,omega1,omega2,omega3,omega4,gamma1,gamma2,gamma3,gamma4,class");
    for (std::size_t i = 0; i < spec.k_grid.size(); ++i) {
        const auto& s = spec.sets[i];
        std::vector<double> vals{spec.k_grid[i]};
        for (const auto& xi : s.exponents) vals.push_back(xi.omega);
        for (const auto& xi : s.exponents) vals.push_back(xi.gamma);
        f.row_with_label(vals, to_string(s.cls));
    }
}

inline nlohmann::json bands_json(const std::vector<Band>& bands) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bands) {
        arr.push_back({{"k_lo", b.k_lo},
                       {"k_hi", b.k_hi},
                       {"n_unstable", b.n_unstable},
                       {"gamma_max", b.gamma_max},
                       {"k_at_gamma_max", b.k_at_max}});
    }
    return arr;
}

/// Long-format momentum density: t, k, occupation and per-length density of
/// both components. Sum over k of density equals particles per unit length.
inline void write_momentum_csv(const std::string& path, const Lattice1D& lat,
                               const EnsembleResult& res, const std::string& hash) {
    CsvFile f(path);
    f.comment("manifest_hash=" + hash);
    f.comment("occupation = <|a_k|^2> - 1/2 (symmetrized ordering corrected)");
    f.comment("density_per_m = occupation / L, L = " + fmt(lat.length) + " m");
    f.header("t_s,k_per_m,occ1,occ0,density1_per_m,density0_per_m");
    const double invL = 1.0 / lat.length;
    // ascending k for plotting
    std::vector<std::size_t> order(lat.n);
    for (std::size_t j = 0; j < lat.n; ++j) order[j] = (j + lat.n / 2) % lat.n;
    for (std::size_t si = 0; si < res.snaps.size(); ++si) {
        const auto& md = res.snaps[si];
        for (const std::size_t j : order)
            f.row({res.times[si], lat.k[j], md.occ1[j], md.occ0[j], md.occ1[j] * invL,
                   md.occ0[j] * invL});
    }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace io

}  // namespace floqbec

#endif
