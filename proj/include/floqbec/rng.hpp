#ifndef FLOQBEC_RNG_HPP
#define FLOQBEC_RNG_HPP

#include <cstdint>
#include <random>

#include "floqbec/constants.hpp"

namespace floqbec {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic Gaussian stream. The normal transform is hand-rolled
/// (Box-Muller) because std::normal_distribution is implementation-defined;
/// outputs are reproducible for a given (master seed, stream index) on any
/// platform with the same mt19937_64.
class GaussianRng {
public:
    GaussianRng(std::uint64_t master_seed, std::uint64_t stream)
        : eng_(detail::splitmix64(master_seed ^ detail::splitmix64(stream))) {}

    /// Uniform in (0, 1].
    double uniform_pos() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform_pos();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * constants::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Complex Gaussian with the given standard deviation per quadrature.
    cplx cnormal(double sigma_quadrature) {
        const double re = normal();
        const double im = normal();
        return {sigma_quadrature * re, sigma_quadrature * im};
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace floqbec

#endif
