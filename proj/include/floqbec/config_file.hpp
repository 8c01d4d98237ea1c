#ifndef FLOQBEC_CONFIG_FILE_HPP
#define FLOQBEC_CONFIG_FILE_HPP

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "floqbec/params.hpp"

namespace floqbec {

/// TWA lattice/ensemble settings carried alongside the physics.
struct TwaConfig {
    std::size_t lattice_points = 2048;
    double lattice_length = 400e-6;  // m
    double n1d = 5e9;                // m^-1
};

struct RunConfig {
    PhysicalConfig physics;
    TwaConfig twa;
    std::map<std::string, std::string> raw;  // exact key/value echo
};

/// Flat key-value configuration. Unit conventions are explicit in the key
/// names: *_hz values are in Hz and converted to rad/s (omega = 2 pi f),
/// *_nm in nanometres, *_um in micrometres, masses in kg.
/// Unknown keys are hard errors.
///
///   # He* two-state condensate
///   atom_number   = 2e6
///   omega_r_hz    = 1020
///   omega_z_hz    = 55
///   rabi_hz       = 3000
///   a11_nm        = 7.51
///   a10_nm        = 7.51
///   a00_nm        = 5.56
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const char* ws = " \t\r\n";
            const auto b = s.find_first_not_of(ws);
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(ws);
            return s.substr(b, e - b + 1);
        };
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string val = trim(stripped.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        if (cfg.raw.count(key))
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        cfg.raw[key] = val;

        auto num = [&]() {
            char* end = nullptr;
            const double v = std::strtod(val.c_str(), &end);
            if (end == val.c_str() || *end != '\0')
                throw std::invalid_argument("config key '" + key + "': not a number: " + val);
            return v;
        };
        const double two_pi = 2.0 * constants::pi;
        auto& ph = cfg.physics;
        if (key == "atom_mass_kg") ph.atom_mass = num();
        else if (key == "atom_number") ph.atom_number = num();
        else if (key == "omega_r_hz") ph.omega_r = two_pi * num();
        else if (key == "omega_z_hz") ph.omega_z = two_pi * num();
        else if (key == "rabi_hz") ph.rabi = two_pi * num();
        else if (key == "a11_nm") ph.a11 = 1e-9 * num();
        else if (key == "a10_nm") ph.a10 = 1e-9 * num();
        else if (key == "a00_nm") ph.a00 = 1e-9 * num();
        else if (key == "hbar_js") ph.hbar = num();
        else if (key == "density_m3") ph.density_override = num();
        else if (key == "init_split1") ph.initial_split1 = num();
        else if (key == "init_rel_phase_rad") ph.initial_rel_phase = num();
        else if (key == "lattice_points") cfg.twa.lattice_points = static_cast<std::size_t>(num());
        else if (key == "lattice_length_um") cfg.twa.lattice_length = 1e-6 * num();
        else if (key == "n1d_per_m") cfg.twa.n1d = num();
        else
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    cfg.physics.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config file not found: " + path);
    return parse_config(in);
}

}  // namespace floqbec

#endif
