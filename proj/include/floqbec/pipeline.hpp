#ifndef FLOQBEC_PIPELINE_HPP
#define FLOQBEC_PIPELINE_HPP

#include "floqbec/config_file.hpp"
#include "floqbec/floquet.hpp"
#include "floqbec/meanfield.hpp"
#include "floqbec/params.hpp"
#include "floqbec/period.hpp"

namespace floqbec {

/// Orchestration of the period-detection procedure:
///   1. integrate the homogeneous mean field for t >> T (by default in the
///      chemical-potential frame mu_run = mu_TF of the background),
///   2. Fourier-detect (T, nu0, delta_nu) and fold the energy offset
///      mu_total = mu_run - 2 pi hbar delta_nu that makes the wave
///      functions exactly periodic.
struct PipelineOptions {
    double record_time = 8e-3;
    bool mu_tf_frame = true;  // step 1 in the TF chemical-potential frame
    DetectOptions detect;
};

struct PeriodPipelineResult {
    InteractionSet inter;
    BackgroundDensity bg;
    MeanFieldState psi0;
    double mu_run = 0.0;
    Trajectory record;
    PeriodEstimate period;
    double mu_total = 0.0;
    double record_residual = 0.0;  // periodicity residual of the record
};

inline PeriodPipelineResult run_period_pipeline(const PhysicalConfig& cfg,
                                                const PipelineOptions& opt = {}) {
    PeriodPipelineResult r;
    r.inter = derive_interactions(cfg);
    r.bg = estimate_peak_density(cfg, r.inter);
    r.psi0 = initial_state(cfg, r.bg);
    r.mu_run = opt.mu_tf_frame ? r.bg.mu_tf : 0.0;
    const TwoModeSystem sys = make_system(cfg, r.inter, r.mu_run);
    const double dt = default_meanfield_step(sys, r.bg.n);
    r.record = evolve_mean_field(r.psi0, sys, opt.record_time, dt);
    DetectOptions det = opt.detect;
    det.hbar = cfg.hbar;
    r.period = detect_period(r.record, det);
    r.mu_total = r.mu_run + r.period.mu;
    r.record_residual = verify_periodicity(r.record, r.period);
    return r;
}

/// Step 3 preparation: one exactly-periodic mean-field period at the
/// monodromy resolution for the requested k range.
inline PeriodicMeanField prepare_floquet_background(const PhysicalConfig& cfg,
                                                    const PeriodPipelineResult& p,
                                                    double k_max,
                                                    double residual_tol = 1e-3) {
    const TwoModeSystem sys = make_system(cfg, p.inter, p.mu_total);
    return prepare_periodic_mean_field(p.psi0, sys, p.period.T, k_max, residual_tol);
}

}  // namespace floqbec

#endif
