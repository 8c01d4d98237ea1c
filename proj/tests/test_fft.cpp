#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "floqbec/fft.hpp"

using namespace floqbec;

namespace {

std::vector<cplx> naive_dft(const std::vector<cplx>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * constants::pi * static_cast<double>(k * j) /
                               static_cast<double>(n);
            s += x[j] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

std::vector<cplx> random_signal(std::size_t n, unsigned seed) {
    std::mt19937 eng(seed);
    std::normal_distribution<double> nd;
    std::vector<cplx> x(n);
    for (auto& v : x) v = cplx(nd(eng), nd(eng));
    return x;
}

}  // namespace

TEST_CASE("FFT matches the naive DFT") {
    for (const std::size_t n : {2u, 8u, 64u, 256u}) {
        auto x = random_signal(n, 17 + static_cast<unsigned>(n));
        const auto expect = naive_dft(x);
        Fft plan(n);
        plan.forward(x);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(x[i] - expect[i]));
        CHECK(worst < 1e-10 * std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("inverse is the exact inverse") {
    auto x = random_signal(1024, 3);
    const auto orig = x;
    Fft plan(1024);
    plan.forward(x);
    plan.inverse(x);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - orig[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("Parseval") {
    auto x = random_signal(512, 7);
    double tsum = 0.0;
    for (const auto& v : x) tsum += std::norm(v);
    Fft plan(512);
    plan.forward(x);
    double fsum = 0.0;
    for (const auto& v : x) fsum += std::norm(v);
    CHECK(fsum / 512.0 == Catch::Approx(tsum).epsilon(1e-12));
}

TEST_CASE("non-power-of-two sizes are rejected") {
    CHECK_THROWS_AS(Fft(100), std::invalid_argument);
    CHECK_THROWS_AS(Fft(0), std::invalid_argument);
}
