#ifndef FLOQBEC_FFT_HPP
#define FLOQBEC_FFT_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "floqbec/constants.hpp"

namespace floqbec {

/// In-place complex FFT for power-of-two sizes with cached twiddle and
/// bit-reversal tables. forward() applies sum_x f[x] e^{-2 pi i k x / n}
/// (no scaling); inverse() the conjugate transform scaled by 1/n.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (n == 0 || (n & (n - 1)) != 0)
            throw std::invalid_argument("Fft: size must be a power of two");
        rev_.resize(n);
        std::uint32_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t r = 0;
            for (std::uint32_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= 1u << (bits - 1 - b);
            rev_[i] = r;
        }
        tw_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * constants::pi * static_cast<double>(k) /
                               static_cast<double>(n);
            tw_[k] = cplx(std::cos(ang), std::sin(ang));
        }
    }

    std::size_t size() const { return n_; }

    void forward(cplx* a) const { transform(a, false); }
    void inverse(cplx* a) const {
        transform(a, true);
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) a[i] *= s;
    }

    void forward(std::vector<cplx>& v) const { forward(v.data()); }
    void inverse(std::vector<cplx>& v) const { inverse(v.data()); }

private:
    void transform(cplx* a, bool inv) const {
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j = rev_[i];
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len >> 1;
            const std::size_t step = n_ / len;
            for (std::size_t blk = 0; blk < n_; blk += len) {
                const cplx* w = tw_.data();
                for (std::size_t j = 0; j < half; ++j, w += step) {
                    const cplx tw = inv ? std::conj(*w) : *w;
                    const cplx u = a[blk + j];
                    const cplx t = a[blk + j + half] * tw;
                    a[blk + j] = u + t;
                    a[blk + j + half] = u - t;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::uint32_t> rev_;
    std::vector<cplx> tw_;
};

}  // namespace floqbec

#endif
