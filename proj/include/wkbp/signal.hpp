#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wkbp/errors.hpp"

namespace wkbp {

inline constexpr int kBeatSteps = 75;        // time steps per segmented beat
inline constexpr int kBeatChannels = 2;      // column 0 = PPG, column 1 = ECG
inline constexpr double kMinBeatSeconds = 0.25;
inline constexpr double kMaxBeatSeconds = 2.0;
inline constexpr double kMinLabelMmHg = 50.0;
inline constexpr double kMaxLabelMmHg = 220.0;

// One synchronized PPG/ABP/ECG recording.
struct RawRecord {
    std::string id;
    double sample_rate_hz = 125.0;
    std::vector<double> ppg; // arbitrary units
    std::vector<double> abp; // mmHg
    std::vector<double> ecg; // mV
};

// One segmented heartbeat resampled to 75 steps x 2 channels.
struct BeatMatrix {
    // Row-major 75x2: values[t * 2 + 0] = PPG, values[t * 2 + 1] = ECG.
    std::array<double, kBeatSteps * kBeatChannels> values{};
    std::string source_record;
    int onset_index = 0;
    double duration_s = 0.0;

    double& at(int step, int channel) { return values[static_cast<std::size_t>(step) * 2 + channel]; }
    double at(int step, int channel) const { return values[static_cast<std::size_t>(step) * 2 + channel]; }
};

struct BeatLabel {
    double sbp_mmHg = 0.0;
    double dbp_mmHg = 0.0;
};

struct Beat {
    BeatMatrix matrix;
    BeatLabel label;
};

// Per-channel z-score statistics fitted on the training split only.
struct NormStats {
    std::array<double, kBeatChannels> mean{};
    std::array<double, kBeatChannels> std{};
    std::array<double, 2> label_mean{}; // (sbp, dbp)
    std::array<double, 2> label_std{};
};

struct DatasetSplit {
    std::vector<Beat> train;
    std::vector<Beat> val;
    std::vector<Beat> test;
    NormStats norm; // fitted on train only
};

struct SegmentResult {
    std::vector<Beat> beats;
    int n_dropped = 0;
};

// Reads every *.csv under `dir` (sorted by filename) as a RawRecord.
// Files must carry the exact header `ppg,abp,ecg`. Throws
// MalformedFileError on format violations and EmptyRecordError when a
// file holds fewer than 2 seconds of samples.
std::vector<RawRecord> load_records(const std::string& dir, double sample_rate_hz = 125.0);

// Writes one record in the same CSV format.
void write_record_csv(const std::string& path, const RawRecord& record);

// Squared-derivative energy detector: moving-average smoothing (0.12 s),
// adaptive threshold at half the rolling 2 s maximum, 0.25 s refractory,
// final index refined to the strongest raw-signal sample nearby. Returns
// strictly increasing sample indices; throws NoBeatsError when fewer
// than two peaks survive.
std::vector<int> detect_r_peaks(const std::vector<double>& ecg, double sample_rate_hz);

// The smoothed detection function the threshold operates on (exposed for
// the detector's invariant tests).
std::vector<double> r_peak_detection_function(const std::vector<double>& ecg,
                                              double sample_rate_hz);

// One beat per adjacent peak pair [p_k, p_{k+1}); PPG/ECG resampled to 75
// steps, labels from the ABP extremes of the window. Beats violating the
// quality gate (duration, label range, finiteness) are dropped and counted.
SegmentResult segment_beats(const RawRecord& record, const std::vector<int>& peaks);

// Linear interpolation onto 75 equally spaced points spanning the window;
// endpoints are preserved exactly. Throws WindowTooShortError for
// windows of fewer than 2 samples.
std::array<double, kBeatSteps> resample_75(const std::vector<double>& window);

NormStats fit_norm_stats(const std::vector<Beat>& train);
BeatMatrix apply_norm(const BeatMatrix& beat, const NormStats& stats);
std::array<double, 2> normalize_label(const BeatLabel& label, const NormStats& stats);
BeatLabel invert_label_norm(const std::array<double, 2>& pred, const NormStats& stats);

// Deterministic shuffle-and-partition. Fractions must be positive and sum
// to 1; val/test sizes are floored and the remainder goes to train.
DatasetSplit split_dataset(const std::vector<Beat>& beats, double train_frac, double val_frac,
                           double test_frac, std::uint64_t seed);

// Same partition logic but whole records move together (all beats of a
// record land in one split).
DatasetSplit split_dataset_by_record(const std::vector<Beat>& beats, double train_frac,
                                     double val_frac, double test_frac, std::uint64_t seed);

// Beat dataset file: header sbp,dbp,ppg_0..ppg_74,ecg_0..ecg_74.
void write_beats_csv(const std::string& path, const std::vector<Beat>& beats);
std::vector<Beat> load_beats_csv(const std::string& path);

} // namespace wkbp
