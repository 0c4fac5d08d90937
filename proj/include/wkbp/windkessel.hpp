#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wkbp/signal.hpp"

namespace wkbp {

// Three-element Windkessel parameters.
struct Wk3Params {
    double r_p = 0.05; // characteristic impedance, mmHg*s/mL
    double r_d = 1.0;  // peripheral resistance, mmHg*s/mL
    double c = 1.2;    // arterial compliance, mL/mmHg

    bool valid() const {
        return r_p > 0.0 && r_d > 0.0 && c > 0.0 && std::isfinite(r_p) && std::isfinite(r_d) &&
               std::isfinite(c);
    }
};

// Half-sine systolic ejection, zero diastolic flow. A zero peak flow is
// allowed (pure relaxation, used to exercise the decay dynamics).
struct InflowProfile {
    double q0 = 400.0;             // peak flow, mL/s
    double systole_fraction = 0.35;
    double period_s = 0.85;

    bool valid() const {
        return q0 >= 0.0 && std::isfinite(q0) && systole_fraction > 0.0 &&
               systole_fraction < 1.0 && period_s > kMinBeatSeconds &&
               period_s < kMaxBeatSeconds;
    }
};

struct PressureTrace {
    std::vector<double> p; // mmHg
    double dt_s = 0.0;
    std::vector<int> beat_onsets; // sample index of each beat start
    // Extremes per complete beat interval, first beat discarded as the
    // startup transient: true_sbp[j] belongs to [onset_{j+1}, onset_{j+2})
    // (the final interval runs to the end of the trace).
    std::vector<double> true_sbp;
    std::vector<double> true_dbp;
};

// Sampling box for subject parameters. The defaults are calibrated so
// that every point in the box yields per-beat extremes inside the
// segmentation quality gate (the decay constant r_d*c must stay long
// enough that diastolic pressure holds above 50 mmHg).
struct ParamRanges {
    double r_p_min = 0.02, r_p_max = 0.1;
    double r_d_min = 0.9, r_d_max = 1.5;
    double c_min = 1.3, c_max = 2.2;
};

struct SynthDataset {
    std::vector<RawRecord> records;
    std::vector<Wk3Params> true_params; // one per subject
    // Ground-truth per-beat extremes aligned with the beats the signal
    // pipeline can segment from each record (one entry per RR interval).
    std::vector<std::vector<double>> true_sbp;
    std::vector<std::vector<double>> true_dbp;
};

// Instantaneous aortic inflow and its analytic time derivative.
double inflow_q(const InflowProfile& inflow, double t);
double inflow_dq(const InflowProfile& inflow, double t);

// dP/dt = [ (1 + r_p/r_d) Q + r_p c Q' - p/r_d ] / c
double wk3_rhs(double p, double t, const Wk3Params& params, const InflowProfile& inflow);

// RK4-integrates the pressure ODE over n_beats periods starting from p0.
// Requires dt_s <= period/50. Throws NonFiniteError on divergence.
PressureTrace simulate_pressure(const Wk3Params& params, const InflowProfile& inflow, int n_beats,
                                double dt_s, double p0 = 80.0);

// Synthetic multi-subject dataset: per subject, parameters drawn uniformly
// from `ranges`, ABP simulated (one warmup beat trimmed), PPG derived as
// min-max-normalized ABP delayed 0.05 s, ECG as unit impulses of width
// 8 ms at beat onsets. Gaussian noise of the given std is added to ABP
// and ECG. Deterministic for a fixed seed.
SynthDataset synth_dataset(int n_subjects, int beats_per_subject, const ParamRanges& ranges,
                           double noise_std, std::uint64_t seed,
                           const InflowProfile& inflow_base = InflowProfile{},
                           double sample_rate_hz = 125.0);

// ground_truth.csv: header subject,r_p,r_d,c.
void write_ground_truth_csv(const std::string& path, const std::vector<Wk3Params>& params);
std::vector<Wk3Params> load_ground_truth_csv(const std::string& path);

} // namespace wkbp
