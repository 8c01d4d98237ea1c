#include <catch2/catch_amalgamated.hpp>

#include "floqbec/pipeline.hpp"
#include "floqbec/twa.hpp"

using namespace floqbec;

namespace {

TwaSystem he_matched_system(double n1d, double* mu_total = nullptr, double* n3 = nullptr,
                            double* u3 = nullptr) {
    PhysicalConfig cfg;
    const auto p = run_period_pipeline(cfg);
    TwaSystem sys;
    sys.u1 = p.bg.n * p.inter.u11 / n1d;
    sys.kappa = p.inter.kappa;
    sys.hbar_omega = cfg.hbar * cfg.rabi;
    sys.mu = p.mu_total;
    sys.hbar = cfg.hbar;
    sys.mass = cfg.atom_mass;
    if (mu_total) *mu_total = p.mu_total;
    if (n3) *n3 = p.bg.n;
    if (u3) *u3 = p.inter.u11;
    return sys;
}

}  // namespace

TEST_CASE("lattice geometry") {
    const auto lat = make_lattice(2048, 400e-6);
    CHECK(lat.dx == Catch::Approx(400e-6 / 2048));
    CHECK(lat.k[0] == 0.0);
    CHECK(lat.k[1] == Catch::Approx(2.0 * constants::pi / 400e-6));
    CHECK(lat.k[2047] == Catch::Approx(-2.0 * constants::pi / 400e-6));
    // covers the unstable region with margin
    CHECK(lat.k_max() > 1.5 * 3e6);
    CHECK_THROWS_AS(make_lattice(1000, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(make_lattice(256, -1.0), std::invalid_argument);
}

TEST_CASE("initial field: coherent part and determinism") {
    const auto lat = make_lattice(256, 50e-6);
    SECTION("noise disabled reproduces the uniform background exactly") {
        const auto f = sample_initial_field(lat, 5e9, 0.6, 0.3, 42, 0, false);
        const cplx bg1(std::sqrt(5e9 * 0.6), 0.0);
        const cplx bg0 = std::sqrt(5e9 * 0.4) * std::exp(cplx(0.0, 0.3));
        for (std::size_t i = 0; i < lat.n; ++i) {
            CHECK(f.psi1[i] == bg1);
            CHECK(std::abs(f.psi0[i] - bg0) == 0.0);
        }
    }
    SECTION("identical seeds are bitwise identical") {
        const auto a = sample_initial_field(lat, 5e9, 1.0, 0.0, 42, 3);
        const auto b = sample_initial_field(lat, 5e9, 1.0, 0.0, 42, 3);
        CHECK(a.psi1 == b.psi1);
        CHECK(a.psi0 == b.psi0);
        const auto c = sample_initial_field(lat, 5e9, 1.0, 0.0, 42, 4);
        CHECK(a.psi1 != c.psi1);
    }
}

TEST_CASE("vacuum noise carries half a quantum per mode") {
    const auto lat = make_lattice(256, 50e-6);
    Fft fft(lat.n);
    std::vector<double> occ;
    double acc = 0.0;
    const int reps = 64;
    for (int r = 0; r < reps; ++r) {
        // zero background: pure noise (split 1 with tiny n1d keeps n1d > 0)
        auto f = sample_initial_field(lat, 1e-30, 1.0, 0.0, 9, static_cast<std::uint64_t>(r));
        mode_occupations(lat, f.psi0, fft, occ);  // component 0 has no background
        for (const double o : occ) acc += o;
    }
    const double mean = acc / (reps * static_cast<double>(lat.n));
    // <|a_k|^2> = 1/2 within Monte-Carlo error ~ 1/sqrt(reps * n)
    CHECK(mean == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("free evolution preserves every momentum occupation") {
    const auto lat = make_lattice(256, 50e-6);
    TwaSystem sys;
    sys.u1 = 0.0;
    sys.hbar_omega = 0.0;
    sys.mu = 0.0;
    const auto f0 = sample_initial_field(lat, 4e9, 0.7, 0.0, 3, 0);
    const double dt = 0.9 * TwaStepper::max_stable_dt(lat, sys);
    const auto series = evolve_twa(f0, lat, sys, 3000 * dt, dt, 1500);
    Fft fft(lat.n);
    std::vector<double> occ0, occ1;
    for (auto comp : {&WignerField::psi1, &WignerField::psi0}) {
        mode_occupations(lat, series.front().*comp, fft, occ0);
        mode_occupations(lat, series.back().*comp, fft, occ1);
        for (std::size_t j = 0; j < lat.n; ++j)
            CHECK(occ1[j] == Catch::Approx(occ0[j]).margin(1e-9 * (occ0[j] + 1.0)));
    }
}

TEST_CASE("single-component plane wave only picks up the nonlinear phase") {
    const auto lat = make_lattice(128, 50e-6);
    const double n1d = 4e9;
    TwaSystem sys;
    sys.u1 = 2e-39;
    sys.kappa = 0.74;
    sys.hbar_omega = 0.0;
    sys.mu = 0.3 * n1d * sys.u1;
    const auto f0 = sample_initial_field(lat, n1d, 1.0, 0.0, 5, 0, false);
    const double dt = 0.9 * TwaStepper::max_stable_dt(lat, sys);
    const std::size_t steps = 2000;
    const auto series = evolve_twa(f0, lat, sys, static_cast<double>(steps) * dt, dt, steps);
    const double t = static_cast<double>(steps) * dt;
    const cplx expect =
        std::sqrt(n1d) * std::exp(cplx(0.0, -(sys.u1 * n1d - sys.mu) * t / sys.hbar));
    for (std::size_t i = 0; i < lat.n; ++i)
        CHECK(std::abs(series.back().psi1[i] - expect) < 1e-9 * std::sqrt(n1d));
}

TEST_CASE("kinetic stability bound is enforced") {
    const auto lat = make_lattice(256, 50e-6);
    TwaSystem sys;
    const double bound = TwaStepper::max_stable_dt(lat, sys);
    CHECK_THROWS_AS(TwaStepper(lat, sys, 1.5 * bound), std::invalid_argument);
    CHECK_NOTHROW(TwaStepper(lat, sys, 0.99 * bound));
}

TEST_CASE("growth rate fit") {
    SECTION("synthetic exponential is recovered exactly") {
        std::vector<double> t, n;
        for (int i = 0; i <= 20; ++i) {
            t.push_back(1e-4 * i);
            n.push_back(std::exp(2.0 * 1000.0 * t.back()));
        }
        CHECK(growth_rate_fit(t, n, 0.5, 1e30) == Catch::Approx(1000.0).epsilon(1e-12));
    }
    SECTION("window empty for a mode that never leaves the floor") {
        std::vector<double> t{0.0, 1e-4, 2e-4}, n{0.1, 0.12, 0.11};
        CHECK_THROWS_AS(growth_rate_fit(t, n, 10.0, 1e4), NumericError);
    }
}

TEST_CASE("momentum density: coherent peak and ensemble sum rule") {
    const auto lat = make_lattice(256, 50e-6);
    const double n1d = 4e9;
    std::vector<WignerField> fields;
    std::vector<const WignerField*> ptrs;
    for (int r = 0; r < 32; ++r)
        fields.push_back(sample_initial_field(lat, n1d, 1.0, 0.0, 77, static_cast<std::uint64_t>(r)));
    for (const auto& f : fields) ptrs.push_back(&f);
    const auto md = momentum_density(lat, ptrs, 0.0);
    // condensate bin carries ~ n1d * L atoms
    CHECK(md.occ1[0] == Catch::Approx(n1d * lat.length).epsilon(0.01));
    // corrected total equals particles per length within noise
    double total = 0.0;
    for (std::size_t j = 0; j < lat.n; ++j) total += md.total(j);
    CHECK(total / lat.length == Catch::Approx(n1d).epsilon(0.005));
    // vacuum component averages to ~0 after the half-quantum subtraction
    double vac = 0.0;
    for (std::size_t j = 1; j < lat.n; ++j) vac += md.occ0[j];
    CHECK(std::abs(vac / static_cast<double>(lat.n - 1)) < 0.05);
    CHECK_THROWS_AS(momentum_density(lat, {}, 0.0), std::invalid_argument);
}

TEST_CASE("ensemble reduction is bitwise deterministic across thread counts") {
    const auto lat = make_lattice(128, 50e-6);
    double mu = 0.0;
    const TwaSystem sys = he_matched_system(4e9, &mu);
    EnsembleOptions opt;
    opt.realizations = 60;
    opt.t_final = 1e-4;
    opt.seed = 11;
    opt.n1d = 4e9;
    opt.chunk = 7;
    opt.threads = 1;
    const auto a = run_ensemble(lat, sys, opt);
    opt.threads = 4;
    const auto b = run_ensemble(lat, sys, opt);
    REQUIRE(a.snaps.size() == b.snaps.size());
    for (std::size_t s = 0; s < a.snaps.size(); ++s) {
        CHECK(a.snaps[s].occ1 == b.snaps[s].occ1);
        CHECK(a.snaps[s].occ0 == b.snaps[s].occ0);
    }
}

TEST_CASE("norm conservation per trajectory") {
    const auto lat = make_lattice(256, 100e-6);
    const TwaSystem sys = he_matched_system(5e9);
    EnsembleOptions opt;
    opt.realizations = 4;
    opt.t_final = 3e-4;
    opt.seed = 2;
    opt.n1d = 5e9;
    const auto res = run_ensemble(lat, sys, opt);
    CHECK(res.max_norm_drift < 1e-6);
}

TEST_CASE("linear-regime growth sits on the Floquet bands") {
    // coarse but complete cross-check; the acceptance suite runs the
    // full-size version
    PhysicalConfig cfg;
    const auto p = run_period_pipeline(cfg);
    const auto pmf = prepare_floquet_background(cfg, p, 3e6);
    const auto spec = scan_spectrum(0.0, 3e6, 121, pmf);
    const auto bands = unstable_bands(spec);
    REQUIRE_FALSE(bands.empty());

    const double n1d = 5e9;
    const auto lat = make_lattice(256, 50e-6);
    TwaSystem sys;
    sys.u1 = p.bg.n * p.inter.u11 / n1d;
    sys.kappa = p.inter.kappa;
    sys.hbar_omega = cfg.hbar * cfg.rabi;
    sys.mu = p.mu_total;
    EnsembleOptions opt;
    opt.realizations = 48;
    opt.t_final = 1.2e-3;
    opt.seed = 5;
    opt.n1d = n1d;
    opt.chunk = 12;
    const auto res = run_ensemble(lat, sys, opt);

    // reference snapshot: last one still linear (< 1% of the condensate)
    const double cond = n1d * lat.length;
    std::size_t ref = 0;
    for (std::size_t si = 0; si < res.snaps.size(); ++si) {
        double biggest = 0.0;
        for (std::size_t j = 1; j < lat.n; ++j)
            biggest = std::max(biggest, res.snaps[si].total(j));
        if (biggest < 0.01 * cond) ref = si;
    }
    const auto& md = res.snaps[ref];
    const double dk = lat.dk();

    // every detected growing mode lies within one bin of an unstable band
    int n_growing = 0;
    for (std::size_t j = 1; j < lat.n; ++j) {
        if (md.total(j) < 10.0) continue;
        ++n_growing;
        const double k = std::abs(lat.k[j]);
        bool inside = false;
        for (const auto& b : bands)
            if (k >= b.k_lo - dk && k <= b.k_hi + dk) inside = true;
        CHECK(inside);
    }
    CHECK(n_growing > 0);

    // strongest band: fitted gamma within 25 percent
    const Band* strongest = &bands.front();
    for (const auto& b : bands)
        if (b.gamma_max > strongest->gamma_max) strongest = &b;
    std::size_t jbest = 0;
    double dbest = 1e300;
    for (std::size_t j = 1; j < lat.n / 2; ++j)
        if (std::abs(lat.k[j] - strongest->k_at_max) < dbest) {
            dbest = std::abs(lat.k[j] - strongest->k_at_max);
            jbest = j;
        }
    std::vector<double> series;
    for (const auto& s : res.snaps) series.push_back(s.total(jbest));
    const double gamma_fit = growth_rate_fit(res.times, series, 10.0, 0.01 * cond);
    // compare against the Floquet gamma at that exact k bin
    const auto set = floquet_exponents(monodromy(lat.k[jbest], pmf), pmf.T,
                                       default_gamma_tol(pmf.T));
    double gflo = 0.0;
    for (const auto& xi : set.exponents) gflo = std::max(gflo, xi.gamma);
    CHECK(gamma_fit == Catch::Approx(gflo).epsilon(0.25));
}
