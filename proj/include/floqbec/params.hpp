#ifndef FLOQBEC_PARAMS_HPP
#define FLOQBEC_PARAMS_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "floqbec/constants.hpp"

namespace floqbec {

/// Physical and numerical configuration of the coupled two-state condensate.
/// All quantities SI: masses kg, angular frequencies rad/s, lengths m.
struct PhysicalConfig {
    double atom_mass = constants::mass_he_star;
    double atom_number = 2e6;
    double omega_r = 2.0 * constants::pi * 1020.0;  // radial trap
    double omega_z = 2.0 * constants::pi * 55.0;    // axial trap
    double rabi = 2.0 * constants::pi * 3000.0;     // Rabi frequency (real)
    double a11 = 7.51e-9;
    double a10 = 7.51e-9;
    double a00 = 5.56e-9;
    double hbar = constants::hbar;

    // Optional override of the homogeneous background density. When unset the
    // Thomas-Fermi peak density of the trapped cloud is used.
    std::optional<double> density_override;

    // Initial mean-field state: population fraction in |1> and the relative
    // phase arg(psi0) - arg(psi1).
    double initial_split1 = 1.0;
    double initial_rel_phase = 0.0;

    void validate() const {
        auto fail = [](const std::string& msg) {
            throw std::invalid_argument("PhysicalConfig: " + msg);
        };
        if (!(atom_mass > 0.0)) fail("atom_mass must be > 0");
        if (!(atom_number > 0.0)) fail("atom_number must be > 0");
        if (!(omega_r > 0.0) || !(omega_z > 0.0)) fail("trap frequencies must be > 0");
        if (!(hbar > 0.0)) fail("hbar must be > 0");
        if (!(a11 > 0.0)) fail("a11 must be > 0");
        if (!std::isfinite(rabi)) fail("rabi must be finite");
        // Only the single-U regime of the model is supported: a10 == a11.
        if (std::abs(a10 - a11) > 1e-12 * std::abs(a11))
            fail("unsupported regime: a10 must equal a11");
        if (initial_split1 < 0.0 || initial_split1 > 1.0)
            fail("initial_split1 must lie in [0, 1]");
        if (density_override && !(*density_override >= 0.0))
            fail("density_override must be >= 0");
    }
};

/// Interaction strengths U_ij = 4 pi hbar^2 a_ij / M and the nonlinearity
/// mismatch kappa = U00/U11.
struct InteractionSet {
    double u11 = 0.0;  // J m^3
    double u10 = 0.0;
    double u00 = 0.0;
    double kappa = 0.0;
};

/// Homogeneous background used by the local density approximation.
struct BackgroundDensity {
    double n = 0.0;      // m^-3
    double g = 0.0;      // rad/s, g = n U (1-kappa) / hbar
    double mu_tf = 0.0;  // J, chemical potential of the background
};

inline InteractionSet derive_interactions(const PhysicalConfig& cfg) {
    cfg.validate();
    if (!(cfg.a11 > 0.0))
        throw std::invalid_argument("derive_interactions: a11 <= 0, kappa undefined");
    const double pref = 4.0 * constants::pi * cfg.hbar * cfg.hbar / cfg.atom_mass;
    InteractionSet s;
    s.u11 = pref * cfg.a11;
    s.u10 = pref * cfg.a10;
    s.u00 = pref * cfg.a00;
    s.kappa = s.u00 / s.u11;
    return s;
}

/// Thomas-Fermi peak density of an N-atom single-component condensate with
/// interaction u11 in the given harmonic trap:
///   mu = (hbar wbar / 2) (15 N a11 / abar)^(2/5),  n = mu / u11,
/// with wbar = (wr^2 wz)^(1/3) and abar = sqrt(hbar / (M wbar)).
inline BackgroundDensity estimate_peak_density(const PhysicalConfig& cfg,
                                               const InteractionSet& inter) {
    cfg.validate();
    BackgroundDensity bg;
    if (cfg.density_override) {
        bg.n = *cfg.density_override;
        bg.mu_tf = bg.n * inter.u11;
    } else {
        const double wbar = std::cbrt(cfg.omega_r * cfg.omega_r * cfg.omega_z);
        const double abar = std::sqrt(cfg.hbar / (cfg.atom_mass * wbar));
        bg.mu_tf = 0.5 * cfg.hbar * wbar *
                   std::pow(15.0 * cfg.atom_number * cfg.a11 / abar, 0.4);
        bg.n = bg.mu_tf / inter.u11;
    }
    bg.g = bg.n * inter.u11 * (1.0 - inter.kappa) / cfg.hbar;
    return bg;
}

}  // namespace floqbec

#endif
