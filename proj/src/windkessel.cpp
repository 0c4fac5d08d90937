#include "wkbp/windkessel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wkbp/csv.hpp"
#include "wkbp/rk4.hpp"
#include "wkbp/rng.hpp"

namespace wkbp {

double inflow_q(const InflowProfile& inflow, double t) {
    const double phase = std::fmod(t, inflow.period_s);
    const double systole = inflow.systole_fraction * inflow.period_s;
    if (phase >= systole) return 0.0;
    return inflow.q0 * std::sin(M_PI * phase / systole);
}

double inflow_dq(const InflowProfile& inflow, double t) {
    const double phase = std::fmod(t, inflow.period_s);
    const double systole = inflow.systole_fraction * inflow.period_s;
    if (phase >= systole) return 0.0;
    return inflow.q0 * (M_PI / systole) * std::cos(M_PI * phase / systole);
}

double wk3_rhs(double p, double t, const Wk3Params& params, const InflowProfile& inflow) {
    const double q = inflow_q(inflow, t);
    const double dq = inflow_dq(inflow, t);
    return ((1.0 + params.r_p / params.r_d) * q + params.r_p * params.c * dq - p / params.r_d) /
           params.c;
}

PressureTrace simulate_pressure(const Wk3Params& params, const InflowProfile& inflow, int n_beats,
                                double dt_s, double p0) {
    if (!params.valid()) throw std::invalid_argument("simulate_pressure: invalid Wk3Params");
    if (!inflow.valid()) throw std::invalid_argument("simulate_pressure: invalid InflowProfile");
    if (n_beats < 1) throw std::invalid_argument("simulate_pressure: n_beats must be >= 1");
    if (!(dt_s > 0.0) || dt_s > inflow.period_s / 50.0)
        throw std::invalid_argument("simulate_pressure: dt_s must be in (0, period/50]");

    const int n_steps = static_cast<int>(std::lround(n_beats * inflow.period_s / dt_s));
    PressureTrace trace;
    trace.dt_s = dt_s;
    trace.p.resize(static_cast<std::size_t>(n_steps) + 1);
    trace.p[0] = p0;

    auto rhs = [&](double p, double t) { return wk3_rhs(p, t, params, inflow); };
    for (int k = 0; k < n_steps; ++k) {
        trace.p[static_cast<std::size_t>(k) + 1] =
            rk4_step_scalar(rhs, trace.p[static_cast<std::size_t>(k)], k * dt_s, dt_s);
        if (!std::isfinite(trace.p[static_cast<std::size_t>(k) + 1]))
            throw NonFiniteError("simulate_pressure: diverged at step " + std::to_string(k) +
                                 " (check dt and parameters)");
    }

    for (int b = 0; b < n_beats; ++b)
        trace.beat_onsets.push_back(static_cast<int>(std::lround(b * inflow.period_s / dt_s)));

    // Per-beat extremes, skipping the startup transient beat. The last
    // interval runs to the end of the trace.
    for (int b = 1; b < n_beats; ++b) {
        const int lo = trace.beat_onsets[static_cast<std::size_t>(b)];
        const int hi = (b + 1 < n_beats) ? trace.beat_onsets[static_cast<std::size_t>(b) + 1]
                                         : static_cast<int>(trace.p.size());
        double mx = trace.p[static_cast<std::size_t>(lo)];
        double mn = mx;
        for (int i = lo; i < hi; ++i) {
            mx = std::max(mx, trace.p[static_cast<std::size_t>(i)]);
            mn = std::min(mn, trace.p[static_cast<std::size_t>(i)]);
        }
        trace.true_sbp.push_back(mx);
        trace.true_dbp.push_back(mn);
    }
    return trace;
}

SynthDataset synth_dataset(int n_subjects, int beats_per_subject, const ParamRanges& ranges,
                           double noise_std, std::uint64_t seed, const InflowProfile& inflow_base,
                           double sample_rate_hz) {
    if (n_subjects < 1) throw std::invalid_argument("synth_dataset: n_subjects must be >= 1");
    if (beats_per_subject < 2)
        throw std::invalid_argument("synth_dataset: beats_per_subject must be >= 2");
    if (noise_std < 0.0) throw std::invalid_argument("synth_dataset: noise_std must be >= 0");
    if (!(ranges.r_p_min > 0.0 && ranges.r_p_min <= ranges.r_p_max && ranges.r_d_min > 0.0 &&
          ranges.r_d_min <= ranges.r_d_max && ranges.c_min > 0.0 && ranges.c_min <= ranges.c_max))
        throw std::invalid_argument("synth_dataset: invalid parameter ranges");

    const double dt = 1.0 / sample_rate_hz;
    const int impulse_width = std::max(1, static_cast<int>(std::lround(0.008 * sample_rate_hz)));
    const int ppg_delay = static_cast<int>(std::lround(0.05 * sample_rate_hz));

    Rng rng(seed);
    SynthDataset out;
    for (int s = 0; s < n_subjects; ++s) {
        Wk3Params params;
        params.r_p = rng.uniform(ranges.r_p_min, ranges.r_p_max);
        params.r_d = rng.uniform(ranges.r_d_min, ranges.r_d_max);
        params.c = rng.uniform(ranges.c_min, ranges.c_max);

        // One extra beat up front, trimmed below, so the record starts at
        // steady state and pipeline labels line up with the recorded truth.
        // A short pre-roll keeps the first heartbeat marker away from the
        // record edge, where peak detection cannot see it.
        PressureTrace trace = simulate_pressure(params, inflow_base, beats_per_subject + 1, dt);
        const int pad = std::min(trace.beat_onsets[1],
                                 static_cast<int>(std::lround(0.2 * sample_rate_hz)));
        const int start = trace.beat_onsets[1] - pad;
        const int len = static_cast<int>(trace.p.size()) - start;

        RawRecord rec;
        char name[32];
        std::snprintf(name, sizeof(name), "subject_%03d", s);
        rec.id = name;
        rec.sample_rate_hz = sample_rate_hz;
        rec.abp.resize(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i)
            rec.abp[static_cast<std::size_t>(i)] = trace.p[static_cast<std::size_t>(start + i)];
        if (noise_std > 0.0)
            for (double& v : rec.abp) v += noise_std * rng.gaussian();

        // PPG surrogate: min-max-normalized ABP, delayed, edge-held.
        const double mn = *std::min_element(rec.abp.begin(), rec.abp.end());
        const double mx = *std::max_element(rec.abp.begin(), rec.abp.end());
        const double span = (mx > mn) ? (mx - mn) : 1.0;
        rec.ppg.resize(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) {
            const int j = std::max(0, i - ppg_delay);
            rec.ppg[static_cast<std::size_t>(i)] = (rec.abp[static_cast<std::size_t>(j)] - mn) / span;
        }

        rec.ecg.assign(static_cast<std::size_t>(len), 0.0);
        std::vector<double> sbp, dbp;
        for (int b = 1; b <= beats_per_subject; ++b) {
            const int onset = trace.beat_onsets[static_cast<std::size_t>(b)] - start;
            for (int w = 0; w < impulse_width && onset + w < len; ++w)
                rec.ecg[static_cast<std::size_t>(onset + w)] = 1.0;
            // The last marker only closes the previous beat; no complete
            // RR interval follows it, so it contributes no label.
            if (b < beats_per_subject) {
                sbp.push_back(trace.true_sbp[static_cast<std::size_t>(b - 1)]);
                dbp.push_back(trace.true_dbp[static_cast<std::size_t>(b - 1)]);
            }
        }
        if (noise_std > 0.0)
            for (double& v : rec.ecg) v += noise_std * rng.gaussian();

        out.records.push_back(std::move(rec));
        out.true_params.push_back(params);
        out.true_sbp.push_back(std::move(sbp));
        out.true_dbp.push_back(std::move(dbp));
    }
    return out;
}

void write_ground_truth_csv(const std::string& path, const std::vector<Wk3Params>& params) {
    std::vector<std::vector<double>> rows;
    rows.reserve(params.size());
    for (std::size_t s = 0; s < params.size(); ++s)
        rows.push_back({static_cast<double>(s), params[s].r_p, params[s].r_d, params[s].c});
    write_csv(path, {"subject", "r_p", "r_d", "c"}, rows);
}

std::vector<Wk3Params> load_ground_truth_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"subject", "r_p", "r_d", "c"})
        throw MalformedFileError(path + ": expected header subject,r_p,r_d,c");
    std::vector<Wk3Params> params;
    params.reserve(table.rows.size());
    for (const auto& row : table.rows) params.push_back({row[1], row[2], row[3]});
    return params;
}

} // namespace wkbp
