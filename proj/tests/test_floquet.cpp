#include <cstring>

#include <catch2/catch_amalgamated.hpp>

#include "floqbec/floquet.hpp"
#include "floqbec/pipeline.hpp"

using namespace floqbec;

namespace {

// test-only matrix exponential by scaling and squaring of the Taylor series
Mat4 expm(const Mat4& a) {
    double norm = 0.0;
    for (const auto& v : a.a) norm = std::max(norm, std::abs(v));
    int squarings = 0;
    Mat4 b = a;
    while (norm > 0.25) {
        b = 0.5 * b;
        norm *= 0.5;
        ++squarings;
    }
    Mat4 result = Mat4::identity();
    Mat4 term = Mat4::identity();
    for (int k = 1; k <= 24; ++k) {
        term = (1.0 / k) * (term * b);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

struct HePipeline {
    PhysicalConfig cfg;
    PeriodPipelineResult p;
    PeriodicMeanField pmf;
};

const HePipeline& he_pipeline() {
    static const HePipeline hp = [] {
        HePipeline h;
        h.p = run_period_pipeline(h.cfg);
        h.pmf = prepare_floquet_background(h.cfg, h.p, 3e6);
        return h;
    }();
    return hp;
}

double fold_omega(double w, double T) {
    const double per = 2.0 * constants::pi / T;
    double y = std::fmod(w, per);
    if (y < -per / 2.0) y += per;
    if (y >= per / 2.0) y -= per;
    return y;
}

// worst circular mismatch between folded frequency multisets
double match_folded(std::array<double, 4> got, std::array<double, 4> expect, double T) {
    std::array<int, 4> perm{0, 1, 2, 3};
    double best = 1e300;
    do {
        double worst = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double d = std::abs(fold_omega(
                got[static_cast<std::size_t>(i)] -
                    expect[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])],
                T));
            worst = std::max(worst, d);
        }
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("generator: vacuum background is diagonal") {
    TwoModeSystem sys;
    sys.u = 1.5e-49;
    sys.kappa = 0.74;
    sys.hbar_omega = 0.0;
    sys.mu = 2e-30;
    const double k = 1e6;
    const auto h = build_generator(k, {cplx(0.0), cplx(0.0)}, sys);
    const double e = free_particle_energy(k, sys.mass, sys.hbar);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i != j) CHECK(std::abs(h(i, j)) == 0.0);
        }
    CHECK(h(0, 0).real() == Catch::Approx(e - sys.mu));
    CHECK(h(1, 1).real() == Catch::Approx(-(e - sys.mu)));
    CHECK(h(2, 2).real() == Catch::Approx(e - sys.mu));
    CHECK(h(3, 3).real() == Catch::Approx(-(e - sys.mu)));
}

TEST_CASE("generator: exactly traceless for arbitrary states") {
    TwoModeSystem sys;
    sys.u = 1.6e-49;
    sys.kappa = 0.74;
    sys.hbar_omega = constants::hbar * 1.9e4;
    sys.mu = 1.3e-29;
    const MeanFieldState s{cplx(5.1e9, -2.2e9), cplx(-1.7e9, 6.0e9)};
    const auto h = build_generator(7.7e5, s, sys);
    CHECK(h.trace() == cplx(0.0, 0.0));  // cancels pairwise by construction
}

TEST_CASE("generator: single-component block is Bogoliubov") {
    PhysicalConfig cfg;
    const auto inter = derive_interactions(cfg);
    const double n = 7.68e19;
    TwoModeSystem sys = make_system(cfg, inter, n * inter.u11);
    sys.hbar_omega = 0.0;
    const MeanFieldState s{std::sqrt(n) * std::exp(cplx(0.0, 0.7)), cplx(0.0)};
    for (const double k : {3e5, 1e6, 2.5e6}) {
        const auto h = build_generator(k, s, sys);
        const auto ev = eigenvalues4(h);
        const double e = free_particle_energy(k, sys.mass, sys.hbar);
        const double bog = std::sqrt(e * (e + 2.0 * n * inter.u11));
        // spectrum of the 4x4 is {+-bog (upper block), +-eps (lower block)}
        std::array<double, 4> got{}, expect{bog, -bog, e, -e};
        for (int i = 0; i < 4; ++i) {
            CHECK(std::abs(ev[static_cast<std::size_t>(i)].imag()) < 1e-9 * bog);
            got[static_cast<std::size_t>(i)] = ev[static_cast<std::size_t>(i)].real();
        }
        std::sort(got.begin(), got.end());
        std::sort(expect.begin(), expect.end());
        for (int i = 0; i < 4; ++i)
            CHECK(got[static_cast<std::size_t>(i)] ==
                  Catch::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-8).margin(1e-40));
    }
}

TEST_CASE("monodromy of a stationary background equals the matrix exponential") {
    PhysicalConfig cfg;
    const auto inter = derive_interactions(cfg);
    const double n = 7.68e19;
    TwoModeSystem sys = make_system(cfg, inter, n * inter.u11);
    sys.hbar_omega = 0.0;  // single component, mu = nU: rhs vanishes
    const MeanFieldState psi0{cplx(std::sqrt(n), 0.0), cplx(0.0)};
    const double T = 1.5e-4;
    const auto pmf = prepare_periodic_mean_field(psi0, sys, T, 2e6);
    CHECK(pmf.periodicity_residual < 1e-12);
    for (const double k : {5e5, 1.5e6}) {
        const auto mono = monodromy(k, pmf);
        const Mat4 expect = expm(cplx(0.0, -T / sys.hbar) * build_generator(k, psi0, sys));
        double worst = 0.0;
        for (int i = 0; i < 16; ++i)
            worst = std::max(worst, std::abs(mono.m.a[static_cast<std::size_t>(i)] -
                                             expect.a[static_cast<std::size_t>(i)]));
        CHECK(worst < 1e-9);
        CHECK(mono.det_residual < 1e-8);
    }
}

TEST_CASE("He* monodromy: determinant and eigenvalue symmetry") {
    const auto& hp = he_pipeline();
    for (const double k : {2e5, 8.26e5, 1.5e6, 2.25e6, 2.9e6}) {
        const auto mono = monodromy(k, hp.pmf);
        CHECK(mono.det_residual < 1e-8);
        const auto rep = check_eigenvalue_symmetry(mono, 1e-6);
        CHECK(rep.passed);
        // pseudo-unitarity: Pi^dag J Pi = J with J = diag(1,-1,1,-1)
        Mat4 j;
        j(0, 0) = 1.0;
        j(1, 1) = -1.0;
        j(2, 2) = 1.0;
        j(3, 3) = -1.0;
        Mat4 pd;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) pd(r, c) = std::conj(mono.m(c, r));
        const Mat4 res = pd * (j * mono.m);
        double worst = 0.0;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                worst = std::max(worst, std::abs(res(r, c) - j(r, c)));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("eigenvalue symmetry: negative control") {
    MonodromyResult mono;
    mono.eigenvalues = {cplx(1.3, 0.1), cplx(0.4, 0.0), cplx(0.9, -0.7), cplx(2.0, 2.0)};
    CHECK_FALSE(check_eigenvalue_symmetry(mono, 1e-6).passed);
    // a unitary-style quadruple passes
    mono.eigenvalues = {std::exp(cplx(0.0, 0.4)), std::exp(cplx(0.0, -0.4)),
                        std::exp(cplx(0.0, 1.9)), std::exp(cplx(0.0, -1.9))};
    CHECK(check_eigenvalue_symmetry(mono, 1e-9).passed);
}

TEST_CASE("exponent extraction") {
    const double T = 1.5e-4;
    const double gtol = default_gamma_tol(T);

    SECTION("identity monodromy is stable with zero exponents") {
        MonodromyResult mono;
        mono.m = Mat4::identity();
        mono.eigenvalues = {cplx(1.0), cplx(1.0), cplx(1.0), cplx(1.0)};
        const auto set = floquet_exponents(mono, T, gtol);
        CHECK(set.cls == StabilityClass::stable);
        for (const auto& xi : set.exponents) {
            CHECK(xi.omega == 0.0);
            CHECK(xi.gamma == 0.0);
        }
    }

    SECTION("real growing pair: gamma = r/T, omega in {0, pi nu0}") {
        MonodromyResult mono;
        mono.eigenvalues = {cplx(std::exp(0.3), 0.0), cplx(std::exp(-0.3), 0.0),
                            std::exp(cplx(0.0, 0.9)), std::exp(cplx(0.0, -0.9))};
        const auto set = floquet_exponents(mono, T, gtol);
        CHECK(set.cls == StabilityClass::two_mode_unstable);
        CHECK(set.exponents[0].gamma == Catch::Approx(0.3 / T).epsilon(1e-12));
        CHECK(set.exponents[0].omega == 0.0);
        CHECK(set.exponents[1].gamma == Catch::Approx(-0.3 / T).epsilon(1e-12));
        // negative real eigenvalue folds onto the zone edge omega = pi/T
        mono.eigenvalues[0] = cplx(-std::exp(0.3), 0.0);
        const auto set2 = floquet_exponents(mono, T, gtol);
        CHECK(std::abs(std::abs(set2.exponents[0].omega) - constants::pi / T) < 1e-9 / T);
    }

    SECTION("reconstruction lambda = exp(-i xi T)") {
        MonodromyResult mono;
        mono.eigenvalues = {cplx(1.2, 0.4), cplx(0.7, -0.2), std::exp(cplx(0.0, 2.0)),
                            cplx(0.83, 0.31)};
        const auto set = floquet_exponents(mono, T, gtol);
        for (int i = 0; i < 4; ++i) {
            const auto& xi = set.exponents[static_cast<std::size_t>(i)];
            const cplx rebuilt =
                std::exp(cplx(0.0, -1.0) * cplx(xi.omega, xi.gamma) * T);
            CHECK(std::abs(rebuilt - mono.eigenvalues[static_cast<std::size_t>(i)]) < 1e-10);
        }
    }
}

TEST_CASE("classification census matches the gamma threshold exactly") {
    const auto& hp = he_pipeline();
    const auto spec = scan_spectrum(0.0, 3e6, 61, hp.pmf);
    for (const auto& set : spec.sets) {
        int count = 0;
        for (const auto& xi : set.exponents)
            if (std::abs(xi.gamma) >= spec.gamma_tol) ++count;
        StabilityClass expect = StabilityClass::degenerate;
        if (count == 0) expect = StabilityClass::stable;
        else if (count == 2) expect = StabilityClass::two_mode_unstable;
        else if (count == 4) expect = StabilityClass::four_mode_unstable;
        CHECK(set.cls == expect);
    }
}

TEST_CASE("isotropy: the monodromy depends on k only through k^2") {
    const auto& hp = he_pipeline();
    const auto a = monodromy(9e5, hp.pmf);
    const auto b = monodromy(-9e5, hp.pmf);
    CHECK(std::memcmp(a.m.a.data(), b.m.a.data(), sizeof(a.m.a)) == 0);
}

TEST_CASE("paper wave numbers: four- and two-mode instabilities") {
    const auto& hp = he_pipeline();
    const double gtol = default_gamma_tol(hp.pmf.T);
    const auto at_826 = floquet_exponents(monodromy(8.26e5, hp.pmf), hp.pmf.T, gtol);
    CHECK(at_826.cls == StabilityClass::four_mode_unstable);
    const auto at_225 = floquet_exponents(monodromy(2.25e6, hp.pmf), hp.pmf.T, gtol);
    CHECK(at_225.cls == StabilityClass::two_mode_unstable);
    // exactly two eigenvalue moduli leave the unit circle at 2.25e6
    int off_circle = 0;
    for (const auto& lam : monodromy(2.25e6, hp.pmf).eigenvalues)
        if (std::abs(std::abs(lam) - 1.0) > gtol * hp.pmf.T) ++off_circle;
    CHECK(off_circle == 2);
}

TEST_CASE("kappa = 1 scan: no instabilities, omega matches the analytic pair") {
    PhysicalConfig cfg;
    cfg.a00 = cfg.a11;
    const auto p = run_period_pipeline(cfg);
    const auto pmf = prepare_floquet_background(cfg, p, 3e6);
    // the grid starts off k = 0: the monodromy there is defective (Jordan
    // blocks at lambda = 1), so the quadruple cannot be resolved numerically
    const auto spec = scan_spectrum(3e6 / 21, 3e6, 21, pmf);
    const double nU = p.bg.n * p.inter.u11;
    for (std::size_t i = 0; i < spec.k_grid.size(); ++i) {
        const auto& set = spec.sets[i];
        for (const auto& xi : set.exponents) CHECK(std::abs(xi.gamma) < spec.gamma_tol);
        CHECK(set.cls == StabilityClass::stable);
        const auto [wu, wd] =
            kappa1_spectrum(spec.k_grid[i], p.bg.n, p.inter.u11, cfg.atom_mass, cfg.hbar);
        (void)nU;
        std::array<double, 4> got{}, expect{wu, -wu, wd, -wd};
        for (int q = 0; q < 4; ++q)
            got[static_cast<std::size_t>(q)] = set.exponents[static_cast<std::size_t>(q)].omega;
        const double mismatch = match_folded(got, expect, spec.T);
        CHECK(mismatch < 1e-6 * std::max(2.0 * constants::pi / spec.T, wu));
    }
}

TEST_CASE("step-halving convergence is fourth order") {
    PhysicalConfig cfg;
    const auto p = run_period_pipeline(cfg);
    const TwoModeSystem sys = make_system(cfg, p.inter, p.mu_total);
    const double k = 1.1e6;
    auto mono_with_steps = [&](std::size_t steps) {
        const auto pmf = prepare_periodic_mean_field(p.psi0, sys, p.period.T, 3e6, 1e-3, steps);
        return monodromy(k, pmf).m;
    };
    const Mat4 ref = mono_with_steps(16384);
    auto err = [&](const Mat4& m) {
        double worst = 0.0;
        for (int i = 0; i < 16; ++i)
            worst = std::max(worst, std::abs(m.a[static_cast<std::size_t>(i)] -
                                             ref.a[static_cast<std::size_t>(i)]));
        return worst;
    };
    const double e1 = err(mono_with_steps(512));
    const double e2 = err(mono_with_steps(1024));
    const double ratio = e1 / e2;
    CHECK(ratio > 11.0);
    CHECK(ratio < 22.0);
}

TEST_CASE("scan grid validation and determinism across thread counts") {
    const auto& hp = he_pipeline();
    CHECK_THROWS_AS(scan_spectrum(2e6, 1e6, 10, hp.pmf), std::invalid_argument);
    CHECK_THROWS_AS(scan_spectrum(-1.0, 1e6, 10, hp.pmf), std::invalid_argument);
    const auto s1 = scan_spectrum(5e5, 1e6, 17, hp.pmf, 0.0, 1);
    const auto s2 = scan_spectrum(5e5, 1e6, 17, hp.pmf, 0.0, 4);
    for (std::size_t i = 0; i < s1.sets.size(); ++i)
        for (int q = 0; q < 4; ++q) {
            CHECK(s1.sets[i].exponents[static_cast<std::size_t>(q)].omega ==
                  s2.sets[i].exponents[static_cast<std::size_t>(q)].omega);
            CHECK(s1.sets[i].exponents[static_cast<std::size_t>(q)].gamma ==
                  s2.sets[i].exponents[static_cast<std::size_t>(q)].gamma);
        }
}

TEST_CASE("band extraction") {
    const auto& hp = he_pipeline();
    const auto spec = scan_spectrum(0.0, 3e6, 201, hp.pmf);
    const auto bands = unstable_bands(spec);
    REQUIRE_FALSE(bands.empty());
    bool four_near_paper = false, two_near_paper = false;
    for (const auto& b : bands) {
        CHECK(b.k_lo <= b.k_hi);
        CHECK(b.gamma_max > 0.0);
        if (b.n_unstable == 4 && b.k_lo <= 8.26e5 && 8.26e5 <= b.k_hi) four_near_paper = true;
        if (b.n_unstable == 2 && b.k_lo <= 2.25e6 && 2.25e6 <= b.k_hi) two_near_paper = true;
    }
    CHECK(four_near_paper);
    CHECK(two_near_paper);
}

TEST_CASE("free-particle limit at large k") {
    const auto& hp = he_pipeline();
    const double k = 2.95e6;
    const double gtol = default_gamma_tol(hp.pmf.T);
    const auto set = floquet_exponents(monodromy(k, hp.pmf), hp.pmf.T, gtol);
    CHECK(set.cls == StabilityClass::stable);
}

TEST_CASE("analytic spectra") {
    const double n = 7.68e19, u = 1.579e-49;
    const double mass = constants::mass_he_star, hbar = constants::hbar;

    SECTION("k = 0 gives (0, 0)") {
        const auto [wu, wd] = kappa1_spectrum(0.0, n, u, mass, hbar);
        CHECK(wu == 0.0);
        CHECK(wd == 0.0);
    }
    SECTION("nU = 0 collapses both branches to the free particle") {
        const double k = 1.3e6;
        const auto [wu, wd] = kappa1_spectrum(k, n, 0.0, mass, hbar);
        const double e = free_particle_energy(k, mass, hbar);
        CHECK(wu == Catch::Approx(e / hbar).epsilon(1e-14));
        CHECK(wd == Catch::Approx(e / hbar).epsilon(1e-14));
    }
    SECTION("eps = 2nU point of the upper branch") {
        const double e_target = 2.0 * n * u;
        const double k = std::sqrt(2.0 * mass * e_target) / hbar;
        const auto [wu, wd] = kappa1_spectrum(k, n, u, mass, hbar);
        (void)wd;
        CHECK(hbar * wu == Catch::Approx(2.0 * std::sqrt(2.0) * n * u).epsilon(1e-10));
    }
    SECTION("bogoliubov_spectrum equals the upper branch") {
        for (const double k : {1e5, 8e5, 2.2e6}) {
            const auto [wu, wd] = kappa1_spectrum(k, n, u, mass, hbar);
            (void)wd;
            CHECK(bogoliubov_spectrum(k, n, u, mass, hbar) == wu);
        }
    }
}

TEST_CASE("predicted gain") {
    CHECK(predicted_gain(0.0, 1.5e-4, 7).amplitude == 1.0);
    CHECK(predicted_gain(0.0, 1.5e-4, 7).occupation == 0.0);
    CHECK(predicted_gain(2500.0, 1.5e-4, 0).amplitude == 1.0);
    CHECK(predicted_gain(2500.0, 1.5e-4, 0).occupation == 0.0);
    // n gamma T = 1
    const auto g = predicted_gain(1000.0, 1e-3, 1);
    CHECK(g.amplitude == Catch::Approx(std::cosh(1.0)).epsilon(1e-14));
    CHECK(g.occupation == Catch::Approx(std::sinh(1.0) * std::sinh(1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(predicted_gain(1000.0, 1e-3, -1), std::invalid_argument);
}
