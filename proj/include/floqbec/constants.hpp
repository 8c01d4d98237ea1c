#ifndef FLOQBEC_CONSTANTS_HPP
#define FLOQBEC_CONSTANTS_HPP

#include <complex>

namespace floqbec {

using cplx = std::complex<double>;

namespace constants {

inline constexpr double pi = 3.14159265358979323846;

// CODATA 2018 reduced Planck constant, J s
inline constexpr double hbar = 1.054571817e-34;

// mass of metastable helium (2^3 S_1), kg
inline constexpr double mass_he_star = 6.6465e-27;

}  // namespace constants

}  // namespace floqbec

#endif
