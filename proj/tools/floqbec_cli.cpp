// Command-line front end: config ingestion, the period/Floquet procedure,
// the 1D truncated-Wigner cross-check and report emission.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "floqbec/exports.hpp"
#include "floqbec/pipeline.hpp"
#include "floqbec/twa.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace floqbec;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::map<std::string, std::string> hash_inputs(const RunConfig& cfg,
                                               const std::map<std::string, std::string>& flags) {
    std::map<std::string, std::string> m = cfg.raw;
    for (const auto& [k, v] : flags) m["flag:" + k] = v;
    return m;
}

std::string physics_hash(const RunConfig& cfg) {
    return io::manifest_hash(cfg.raw, 0, "physics");
}

json manifest_json(const std::string& subcommand, const RunConfig& cfg,
                   const CommonArgs& args, const std::map<std::string, std::string>& flags,
                   const std::vector<std::string>& files, const std::string& hash,
                   double walltime) {
    json m;
    m["subcommand"] = subcommand;
    m["config_path"] = args.config_path;
    m["config"] = cfg.raw;
    m["flags"] = flags;
    m["seed"] = args.seed;
    m["threads"] = args.threads;
    m["outputs"] = files;
    m["manifest_hash"] = hash;
    m["physics_hash"] = physics_hash(cfg);
    m["walltime_s"] = walltime;
    return m;
}

std::vector<std::string> config_echo_lines(const RunConfig& cfg) {
    std::vector<std::string> lines;
    for (const auto& [k, v] : cfg.raw) lines.push_back(k + " = " + v);
    return lines;
}

json period_json(const PeriodPipelineResult& p) {
    json j;
    j["T_s"] = p.period.T;
    j["nu0_hz"] = p.period.nu0;
    j["delta_nu_hz"] = p.period.delta_nu;
    j["mu_increment_j"] = p.period.mu;
    j["mu_run_j"] = p.mu_run;
    j["mu_total_j"] = p.mu_total;
    j["comb_residual_hz"] = p.period.comb_residual;
    j["periodicity_residual"] = p.record_residual;
    j["density_m3"] = p.bg.n;
    j["kappa"] = p.inter.kappa;
    j["g_rad_s"] = p.bg.g;
    json peaks = json::array();
    for (const auto& pk : p.period.peaks)
        peaks.push_back({{"freq_hz", pk.freq}, {"power", pk.power}, {"component", pk.component}});
    j["peaks"] = peaks;
    return j;
}

int cmd_meanfield(const CommonArgs& args, double t_final, double dt_opt) {
    Timer timer;
    const RunConfig cfg = load_config(args.config_path);
    const auto inter = derive_interactions(cfg.physics);
    const auto bg = estimate_peak_density(cfg.physics, inter);
    const auto psi0 = initial_state(cfg.physics, bg);
    const TwoModeSystem sys = make_system(cfg.physics, inter, bg.mu_tf);
    const double dt = dt_opt > 0.0 ? dt_opt : default_meanfield_step(sys, bg.n);
    const Trajectory traj = evolve_mean_field(psi0, sys, t_final, dt);

    const std::map<std::string, std::string> flags{{"t_final", io::fmt(t_final)},
                                                   {"dt", io::fmt(dt)}};
    const std::string hash = io::manifest_hash(hash_inputs(cfg, flags), args.seed, "meanfield");
    fs::create_directories(args.out_dir);
    const std::string csv = (fs::path(args.out_dir) / "meanfield.csv").string();
    io::write_trajectory_csv(csv, traj, hash, config_echo_lines(cfg));

    // diagnostics: norm drift, energy drift along the Bloch image
    double n0 = traj.states.front().total_density(), norm_drift = 0.0;
    for (const auto& s : traj.states)
        norm_drift = std::max(norm_drift, std::abs(s.total_density() - n0) / n0);
    json diag;
    diag["norm_drift_rel"] = norm_drift;
    diag["density_m3"] = bg.n;
    diag["mu_run_j"] = bg.mu_tf;
    diag["g_rad_s"] = bg.g;
    diag["kappa"] = inter.kappa;
    if (std::abs(inter.kappa - 1.0) < 1e-12) {
        // equal scattering lengths: compare with the closed-form rotation
        // between the Rabi eigenmodes (mu = nU cancels the phase there)
        const cplx phi_p = psi0.psi1;
        const cplx phi_m = cplx(0.0, -1.0) * psi0.psi0;
        double worst = 0.0;
        const double omega = sys.hbar_omega / sys.hbar;
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            const double t = traj.time(i);
            const cplx ph = std::exp(cplx(0.0, -(bg.n * inter.u11 - bg.mu_tf) * t / sys.hbar));
            const cplx p1 = (std::cos(omega * t) * phi_p + std::sin(omega * t) * phi_m) * ph;
            const cplx p0 =
                (cplx(0.0, -1.0) * std::sin(omega * t) * phi_p +
                 cplx(0.0, 1.0) * std::cos(omega * t) * phi_m) *
                ph;
            worst = std::max({worst, std::abs(p1 - traj.states[i].psi1),
                              std::abs(p0 - traj.states[i].psi0)});
        }
        diag["kappa1_analytic_max_dev"] = worst / std::sqrt(bg.n);
        std::printf("kappa=1 analytic match: max deviation %.3e (relative)\n",
                    worst / std::sqrt(bg.n));
    }
    const std::string diag_path = (fs::path(args.out_dir) / "meanfield_diagnostics.json").string();
    io::write_json(diag_path, diag);
    io::write_json((fs::path(args.out_dir) / "manifest_meanfield.json").string(),
                   manifest_json("meanfield", cfg, args, flags, {csv, diag_path}, hash,
                                 timer.seconds()));
    std::printf("meanfield: %zu samples, norm drift %.2e -> %s\n", traj.states.size(),
                norm_drift, csv.c_str());
    return 0;
}

int cmd_period(const CommonArgs& args, double t_final, bool hann) {
    Timer timer;
    const RunConfig cfg = load_config(args.config_path);
    PipelineOptions opt;
    opt.record_time = t_final;
    opt.detect.hann = hann;
    const auto p = run_period_pipeline(cfg.physics, opt);

    const std::map<std::string, std::string> flags{{"t_final", io::fmt(t_final)},
                                                   {"hann", hann ? "1" : "0"}};
    const std::string hash = io::manifest_hash(hash_inputs(cfg, flags), args.seed, "period");
    fs::create_directories(args.out_dir);
    const std::string csv = (fs::path(args.out_dir) / "power_spectrum.csv").string();
    DetectOptions det;
    det.hann = hann;
    io::write_power_spectrum_csv(csv, power_spectrum(p.record, det), hash);
    json pj = period_json(p);
    pj["physics_hash"] = physics_hash(cfg);
    const std::string pjson = (fs::path(args.out_dir) / "period.json").string();
    io::write_json(pjson, pj);
    io::write_json((fs::path(args.out_dir) / "manifest_period.json").string(),
                   manifest_json("period", cfg, args, flags, {csv, pjson}, hash,
                                 timer.seconds()));
    std::printf("period: T = %.6g us, nu0 = %.6g Hz, delta_nu = %.6g Hz, residual %.2e\n",
                p.period.T * 1e6, p.period.nu0, p.period.delta_nu, p.record_residual);
    return 0;
}

int cmd_spectrum(const CommonArgs& args, double k_min, double k_max, std::size_t k_count,
                 double t_final) {
    Timer timer;
    if (!(k_min >= 0.0) || !(k_max > k_min))
        throw std::invalid_argument("spectrum: need 0 <= k_min < k_max");
    const RunConfig cfg = load_config(args.config_path);
    PipelineOptions opt;
    opt.record_time = t_final;
    const auto p = run_period_pipeline(cfg.physics, opt);
    const auto pmf = prepare_floquet_background(cfg.physics, p, k_max);
    const auto spec = scan_spectrum(k_min, k_max, k_count, pmf, 0.0, args.threads);
    const auto bands = unstable_bands(spec);

    const std::map<std::string, std::string> flags{{"k_min", io::fmt(k_min)},
                                                   {"k_max", io::fmt(k_max)},
                                                   {"k_count", std::to_string(k_count)},
                                                   {"t_final", io::fmt(t_final)}};
    const std::string hash = io::manifest_hash(hash_inputs(cfg, flags), args.seed, "spectrum");
    fs::create_directories(args.out_dir);
    const std::string csv = (fs::path(args.out_dir) / "floquet_spectrum.csv").string();
    io::write_floquet_csv(csv, spec, hash);
    json bj;
    bj["physics_hash"] = physics_hash(cfg);
    bj["period"] = period_json(p);
    bj["gamma_tol"] = spec.gamma_tol;
    bj["bands"] = io::bands_json(bands);
    const std::string bjson = (fs::path(args.out_dir) / "bands.json").string();
    io::write_json(bjson, bj);
    const std::string pjson = (fs::path(args.out_dir) / "period.json").string();
    io::write_json(pjson, period_json(p));
    io::write_json((fs::path(args.out_dir) / "manifest_spectrum.json").string(),
                   manifest_json("spectrum", cfg, args, flags, {csv, bjson, pjson}, hash,
                                 timer.seconds()));
    if (bands.empty()) {
        std::printf("spectrum: no instabilities on [%g, %g] m^-1 (%zu points)\n", k_min, k_max,
                    k_count);
    } else {
        std::printf("spectrum: %zu unstable band(s):\n", bands.size());
        for (const auto& b : bands)
            std::printf("  [%.4e, %.4e] m^-1  %d-mode  gamma_max %.4g 1/s at k = %.4e\n",
                        b.k_lo, b.k_hi, b.n_unstable, b.gamma_max, b.k_at_max);
    }
    return 0;
}

int cmd_twa(const CommonArgs& args, std::size_t realizations, double t_final, double dt_opt,
            const std::string& spectrum_file) {
    Timer timer;
    const RunConfig cfg = load_config(args.config_path);
    const auto inter = derive_interactions(cfg.physics);
    const auto bg = estimate_peak_density(cfg.physics, inter);

    // background must be exactly periodic: reuse the period pipeline
    const auto p = run_period_pipeline(cfg.physics);
    const Lattice1D lat = make_lattice(cfg.twa.lattice_points, cfg.twa.lattice_length);
    TwaSystem sys;
    sys.u1 = bg.n * inter.u11 / cfg.twa.n1d;  // match n U (and so g) in 1D
    sys.kappa = inter.kappa;
    sys.hbar_omega = cfg.physics.hbar * cfg.physics.rabi;
    sys.mu = p.mu_total;
    sys.hbar = cfg.physics.hbar;
    sys.mass = cfg.physics.atom_mass;

    EnsembleOptions eopt;
    eopt.realizations = realizations;
    eopt.t_final = t_final;
    eopt.dt = dt_opt;
    eopt.seed = args.seed;
    eopt.threads = args.threads;
    eopt.n1d = cfg.twa.n1d;
    eopt.split1 = cfg.physics.initial_split1;
    eopt.rel_phase = cfg.physics.initial_rel_phase;
    const EnsembleResult res = run_ensemble(lat, sys, eopt);

    const std::map<std::string, std::string> flags{{"realizations", std::to_string(realizations)},
                                                   {"t_final", io::fmt(t_final)},
                                                   {"dt", io::fmt(res.dt)}};
    const std::string hash = io::manifest_hash(hash_inputs(cfg, flags), args.seed, "twa");
    fs::create_directories(args.out_dir);
    const std::string csv = (fs::path(args.out_dir) / "momentum_density.csv").string();
    io::write_momentum_csv(csv, lat, res, hash);

    // growth analysis: last snapshot still in the linear regime
    const double cond = eopt.n1d * lat.length;
    std::size_t ref = 0;
    for (std::size_t si = 0; si < res.snaps.size(); ++si) {
        double biggest = 0.0;
        for (std::size_t j = 1; j < lat.n; ++j)
            biggest = std::max(biggest, res.snaps[si].total(j));
        if (biggest < 0.01 * cond) ref = si;
    }
    const double noise_floor = 1.0;  // vacuum-corrected occupation scale
    json growing = json::array();
    const auto& md = res.snaps[ref];
    for (std::size_t j = 1; j < lat.n; ++j) {
        const double occ = md.total(j);
        const std::size_t jp = (j + 1) % lat.n, jm = (j + lat.n - 1) % lat.n;
        if (occ > 10.0 * noise_floor && occ >= md.total(jp) && occ > md.total(jm) && jp != 0 &&
            jm != 0) {
            std::vector<double> series;
            for (const auto& s : res.snaps) series.push_back(s.total(j));
            double gamma_fit = 0.0;
            bool ok = true;
            try {
                gamma_fit = growth_rate_fit(res.times, series, 10.0 * noise_floor, 0.01 * cond);
            } catch (const NumericError&) {
                ok = false;
            }
            json g;
            g["k_per_m"] = lat.k[j];
            g["occupation_at_ref"] = occ;
            if (ok) g["gamma_fit_per_s"] = gamma_fit;
            growing.push_back(g);
        }
    }

    json tj;
    tj["physics_hash"] = physics_hash(cfg);
    tj["lattice_points"] = lat.n;
    tj["lattice_length_m"] = lat.length;
    tj["n1d_per_m"] = eopt.n1d;
    tj["u1d"] = sys.u1;
    tj["realizations"] = realizations;
    tj["seed"] = args.seed;
    tj["dt_s"] = res.dt;
    tj["t_final_s"] = t_final;
    tj["reference_snapshot_t_s"] = res.times[ref];
    tj["max_norm_drift_rel"] = res.max_norm_drift;
    tj["growing_modes"] = growing;

    // comparison against a spectrum run
    if (!spectrum_file.empty()) {
        std::ifstream in(spectrum_file);
        if (!in) throw std::invalid_argument("twa: cannot open spectrum file " + spectrum_file);
        json bj = json::parse(in);
        if (bj.value("physics_hash", std::string()) != physics_hash(cfg)) {
            std::printf("warning: spectrum file has a different parameters hash, comparison "
                        "skipped\n");
            tj["comparison"] = "skipped (parameters hash mismatch)";
        } else {
            const double dk = lat.dk();
            json cmp = json::array();
            for (const auto& band : bj["bands"]) {
                const double klo = band["k_lo"], khi = band["k_hi"];
                const double kmaxg = band["k_at_gamma_max"], gflo = band["gamma_max"];
                json c;
                c["band_k_lo"] = klo;
                c["band_k_hi"] = khi;
                c["band_gamma_max"] = gflo;
                c["band_class"] = band["n_unstable"];
                bool inside = false;
                double best_occ = 0.0, best_k = 0.0, gamma_fit = 0.0;
                bool have_fit = false;
                for (const auto& g : growing) {
                    const double k = g["k_per_m"];
                    if (std::abs(k) >= klo - dk && std::abs(k) <= khi + dk) {
                        inside = true;
                        const double occ = g["occupation_at_ref"];
                        if (occ > best_occ) {
                            best_occ = occ;
                            best_k = k;
                            if (g.contains("gamma_fit_per_s")) {
                                gamma_fit = g["gamma_fit_per_s"];
                                have_fit = true;
                            }
                        }
                    }
                }
                c["twa_mode_found"] = inside;
                if (inside) {
                    c["twa_k_per_m"] = best_k;
                    if (have_fit) {
                        c["twa_gamma_fit_per_s"] = gamma_fit;
                        c["gamma_rel_err"] = std::abs(gamma_fit - gflo) / gflo;
                    }
                }
                (void)kmaxg;
                cmp.push_back(c);
            }
            tj["comparison"] = cmp;
        }
    }
    const std::string tjson = (fs::path(args.out_dir) / "twa_result.json").string();
    io::write_json(tjson, tj);
    io::write_json((fs::path(args.out_dir) / "manifest_twa.json").string(),
                   manifest_json("twa", cfg, args, flags, {csv, tjson}, hash, timer.seconds()));
    std::printf("twa: %zu realizations, %zu snapshots, norm drift %.2e -> %s\n", realizations,
                res.snaps.size(), res.max_norm_drift, csv.c_str());
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir) {
    json rep;
    auto load = [&](const char* name) -> json {
        std::ifstream in(fs::path(in_dir) / name);
        if (!in) return json();
        return json::parse(in, nullptr, false);
    };
    const json period = load("period.json");
    const json bands = load("bands.json");
    const json twa = load("twa_result.json");

    if (period.is_object()) {
        rep["period"] = {{"T_s", period.value("T_s", 0.0)},
                         {"nu0_hz", period.value("nu0_hz", 0.0)},
                         {"delta_nu_hz", period.value("delta_nu_hz", 0.0)},
                         {"mu_total_j", period.value("mu_total_j", 0.0)}};
    } else {
        rep["period"] = "missing";
    }
    double gamma_max = 0.0;
    if (bands.is_object() && bands.contains("bands")) {
        rep["bands"] = bands["bands"];
        for (const auto& b : bands["bands"])
            gamma_max = std::max(gamma_max, b.value("gamma_max", 0.0));
        rep["gamma_max_per_s"] = gamma_max;
    } else {
        rep["bands"] = "missing";
    }
    if (twa.is_object() && twa.contains("growing_modes")) {
        rep["twa"] = {{"growing_modes", twa["growing_modes"]},
                      {"realizations", twa.value("realizations", 0)},
                      {"comparison", twa.contains("comparison") ? twa["comparison"] : json()}};
    } else {
        rep["twa"] = "missing";
    }

    fs::create_directories(out_dir);
    io::write_json((fs::path(out_dir) / "report.json").string(), rep);

    std::ofstream md(fs::path(out_dir) / "report.md", std::ios::binary);
    md << "# Run summary\n\n";
    if (period.is_object()) {
        md << "## Mean-field period\n\n";
        md << "- T = " << io::fmt(period.value("T_s", 0.0) * 1e6) << " us\n";
        md << "- nu0 = " << io::fmt(period.value("nu0_hz", 0.0)) << " Hz\n";
        md << "- delta_nu = " << io::fmt(period.value("delta_nu_hz", 0.0)) << " Hz\n\n";
    } else {
        md << "## Mean-field period\n\nmissing\n\n";
    }
    if (bands.is_object() && bands.contains("bands")) {
        md << "## Unstable bands\n\n|k_lo|k_hi|modes|gamma_max|\n|-|-|-|-|\n";
        for (const auto& b : bands["bands"])
            md << "|" << io::fmt(b.value("k_lo", 0.0)) << "|" << io::fmt(b.value("k_hi", 0.0))
               << "|" << b.value("n_unstable", 0) << "|" << io::fmt(b.value("gamma_max", 0.0))
               << "|\n";
        md << "\n";
    } else {
        md << "## Unstable bands\n\nmissing\n\n";
    }
    if (twa.is_object() && twa.contains("growing_modes")) {
        md << "## Truncated-Wigner cross-check\n\n";
        md << "- realizations: " << twa.value("realizations", 0) << "\n";
        md << "- growing modes: " << twa["growing_modes"].size() << "\n";
    } else {
        md << "## Truncated-Wigner cross-check\n\nmissing\n";
    }
    std::printf("report -> %s\n", (fs::path(out_dir) / "report.json").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet stability analysis of a coupled two-state condensate"};
    app.require_subcommand(1);

    CommonArgs common;
    double t_final = 0.0, dt = 0.0, k_min = 0.0, k_max = 3e6;
    std::size_t k_count = 200, realizations = 500;
    bool hann = false;
    std::string spectrum_file, in_dir;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* o = sub->add_option("--config", common.config_path, "configuration file");
        if (needs_config) o->required();
        sub->add_option("--out-dir", common.out_dir, "output directory");
        sub->add_option("--seed", common.seed, "master seed");
        sub->add_option("--threads", common.threads, "worker threads (0 = hardware)");
    };

    auto* mf = app.add_subcommand("meanfield", "integrate the homogeneous mean field");
    add_common(mf);
    mf->add_option("--t-final", t_final, "simulated time, s")->default_val(8e-3);
    mf->add_option("--dt", dt, "integrator step, s (0 = auto)");

    auto* pd = app.add_subcommand("period", "detect the mean-field period");
    add_common(pd);
    pd->add_option("--t-final", t_final, "record length, s")->default_val(8e-3);
    pd->add_flag("--hann", hann, "Hann window for peak detection");

    auto* sp = app.add_subcommand("spectrum", "Floquet exponents over a k grid");
    add_common(sp);
    sp->add_option("--k-min", k_min, "lowest wave number, 1/m")->default_val(0.0);
    sp->add_option("--k-max", k_max, "highest wave number, 1/m")->default_val(3e6);
    sp->add_option("--k-count", k_count, "grid points")->default_val(200);
    sp->add_option("--t-final", t_final, "period-detection record length, s")->default_val(8e-3);

    auto* tw = app.add_subcommand("twa", "1D truncated-Wigner ensemble");
    add_common(tw);
    tw->add_option("--realizations", realizations, "ensemble size")->default_val(500);
    tw->add_option("--t-final", t_final, "simulated time, s")->default_val(2e-3);
    tw->add_option("--dt", dt, "split step, s (0 = auto)");
    tw->add_option("--spectrum-file", spectrum_file, "bands.json to compare against");

    auto* rp = app.add_subcommand("report", "consolidated summary from artifacts");
    rp->add_option("--in-dir", in_dir, "directory with period/bands/twa artifacts")->required();
    rp->add_option("--out-dir", common.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (mf->parsed()) return cmd_meanfield(common, t_final, dt);
        if (pd->parsed()) return cmd_period(common, t_final, hann);
        if (sp->parsed()) return cmd_spectrum(common, k_min, k_max, k_count, t_final);
        if (tw->parsed()) return cmd_twa(common, realizations, t_final, dt, spectrum_file);
        if (rp->parsed()) return cmd_report(in_dir, common.out_dir);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}
