#include "wkbp/signal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>

#include "wkbp/csv.hpp"
#include "wkbp/rng.hpp"

namespace fs = std::filesystem;

namespace wkbp {

namespace {

bool finite_all(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Moving average with a centered window (width forced odd).
std::vector<double> moving_average(const std::vector<double>& x, int width) {
    if (width < 1) width = 1;
    if (width % 2 == 0) ++width;
    const int half = width / 2;
    const int n = static_cast<int>(x.size());
    std::vector<double> out(x.size(), 0.0);
    double acc = 0.0;
    int lo = 0, hi = -1; // inclusive window [lo, hi]
    for (int i = 0; i < n; ++i) {
        int want_lo = std::max(0, i - half);
        int want_hi = std::min(n - 1, i + half);
        while (hi < want_hi) acc += x[static_cast<std::size_t>(++hi)];
        while (lo < want_lo) acc -= x[static_cast<std::size_t>(lo++)];
        out[static_cast<std::size_t>(i)] = acc / (want_hi - want_lo + 1);
    }
    return out;
}

// Max over a centered window of +-radius samples, O(n) monotonic deque.
std::vector<double> rolling_max(const std::vector<double>& x, int radius) {
    const int n = static_cast<int>(x.size());
    std::vector<double> out(x.size(), 0.0);
    std::deque<int> dq;
    int added = -1;
    for (int i = 0; i < n; ++i) {
        int want_hi = std::min(n - 1, i + radius);
        while (added < want_hi) {
            ++added;
            while (!dq.empty() && x[static_cast<std::size_t>(dq.back())] <=
                                      x[static_cast<std::size_t>(added)])
                dq.pop_back();
            dq.push_back(added);
        }
        while (dq.front() < i - radius) dq.pop_front();
        out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(dq.front())];
    }
    return out;
}

} // namespace

std::vector<double> r_peak_detection_function(const std::vector<double>& ecg,
                                              double sample_rate_hz) {
    std::vector<double> energy(ecg.size(), 0.0);
    for (std::size_t i = 0; i + 1 < ecg.size(); ++i) {
        double d = ecg[i + 1] - ecg[i];
        energy[i] = d * d;
    }
    return moving_average(energy, static_cast<int>(std::lround(0.12 * sample_rate_hz)));
}

std::vector<int> detect_r_peaks(const std::vector<double>& ecg, double sample_rate_hz) {
    if (sample_rate_hz <= 0.0)
        throw std::invalid_argument("detect_r_peaks: sample_rate_hz must be positive");
    if (ecg.size() < static_cast<std::size_t>(sample_rate_hz))
        throw std::invalid_argument("detect_r_peaks: need at least 1 s of signal");

    const int n = static_cast<int>(ecg.size());
    const int refractory = static_cast<int>(std::ceil(0.25 * sample_rate_hz));
    const int refine_radius = std::max(1, static_cast<int>(std::lround(0.10 * sample_rate_hz)));

    std::vector<double> det = r_peak_detection_function(ecg, sample_rate_hz);
    std::vector<double> thr = rolling_max(det, static_cast<int>(std::lround(sample_rate_hz)));
    for (double& t : thr) t *= 0.5;

    // Candidate local maxima above threshold, thinned by the refractory
    // period (strongest wins).
    std::vector<int> kept;
    for (int i = 1; i + 1 < n; ++i) {
        if (!(det[static_cast<std::size_t>(i)] > thr[static_cast<std::size_t>(i)])) continue;
        if (det[static_cast<std::size_t>(i)] < det[static_cast<std::size_t>(i - 1)] ||
            det[static_cast<std::size_t>(i)] < det[static_cast<std::size_t>(i + 1)])
            continue;
        if (!kept.empty() && i - kept.back() < refractory) {
            if (det[static_cast<std::size_t>(i)] > det[static_cast<std::size_t>(kept.back())])
                kept.back() = i;
        } else {
            kept.push_back(i);
        }
    }

    // Snap each candidate to the strongest raw sample nearby; the energy
    // plateau sits half a smoothing window off the R sample itself.
    auto raw2 = [&](int i) { return ecg[static_cast<std::size_t>(i)] * ecg[static_cast<std::size_t>(i)]; };
    std::vector<int> refined;
    refined.reserve(kept.size());
    for (int c : kept) {
        int best = std::max(0, c - refine_radius);
        for (int j = best + 1; j <= std::min(n - 1, c + refine_radius); ++j)
            if (raw2(j) > raw2(best)) best = j;
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());

    // Refinement can move neighbours together; re-apply the refractory rule.
    std::vector<int> peaks;
    for (int p : refined) {
        if (!peaks.empty() && p - peaks.back() < refractory) {
            if (raw2(p) > raw2(peaks.back())) peaks.back() = p;
        } else {
            peaks.push_back(p);
        }
    }

    if (peaks.size() < 2)
        throw NoBeatsError("detect_r_peaks: found " + std::to_string(peaks.size()) +
                           " peak(s), need at least 2");
    return peaks;
}

std::array<double, kBeatSteps> resample_75(const std::vector<double>& window) {
    if (window.size() < 2)
        throw WindowTooShortError("resample_75: window has " + std::to_string(window.size()) +
                                  " samples, need >= 2");
    std::array<double, kBeatSteps> out{};
    const std::size_t n = window.size();
    for (int k = 0; k < kBeatSteps; ++k) {
        double pos = static_cast<double>(k) * (n - 1) / (kBeatSteps - 1);
        std::size_t i = static_cast<std::size_t>(pos);
        if (i >= n - 1) {
            out[static_cast<std::size_t>(k)] = window[n - 1];
            continue;
        }
        double frac = pos - static_cast<double>(i);
        out[static_cast<std::size_t>(k)] = window[i] * (1.0 - frac) + window[i + 1] * frac;
    }
    out[0] = window.front();
    out[kBeatSteps - 1] = window.back();
    return out;
}

SegmentResult segment_beats(const RawRecord& record, const std::vector<int>& peaks) {
    if (peaks.size() < 2) throw std::invalid_argument("segment_beats: need >= 2 peaks");
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k)
        if (peaks[k] >= peaks[k + 1])
            throw std::invalid_argument("segment_beats: peaks must be strictly increasing");
    if (peaks.front() < 0 || static_cast<std::size_t>(peaks.back()) >= record.ppg.size())
        throw std::invalid_argument("segment_beats: peak index out of record bounds");

    SegmentResult result;
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
        const int a = peaks[k];
        const int b = peaks[k + 1];
        const double duration = (b - a) / record.sample_rate_hz;

        std::vector<double> ppg(record.ppg.begin() + a, record.ppg.begin() + b);
        std::vector<double> ecg(record.ecg.begin() + a, record.ecg.begin() + b);
        std::vector<double> abp(record.abp.begin() + a, record.abp.begin() + b);

        if (ppg.size() < 2 || !finite_all(ppg) || !finite_all(ecg) || !finite_all(abp)) {
            ++result.n_dropped;
            continue;
        }

        BeatLabel label;
        label.sbp_mmHg = *std::max_element(abp.begin(), abp.end());
        label.dbp_mmHg = *std::min_element(abp.begin(), abp.end());

        const bool ok = duration > kMinBeatSeconds && duration < kMaxBeatSeconds &&
                        label.sbp_mmHg > label.dbp_mmHg && label.dbp_mmHg >= kMinLabelMmHg &&
                        label.sbp_mmHg <= kMaxLabelMmHg;
        if (!ok) {
            ++result.n_dropped;
            continue;
        }

        Beat beat;
        beat.label = label;
        beat.matrix.source_record = record.id;
        beat.matrix.onset_index = a;
        beat.matrix.duration_s = duration;
        std::array<double, kBeatSteps> p = resample_75(ppg);
        std::array<double, kBeatSteps> e = resample_75(ecg);
        for (int t = 0; t < kBeatSteps; ++t) {
            beat.matrix.at(t, 0) = p[static_cast<std::size_t>(t)];
            beat.matrix.at(t, 1) = e[static_cast<std::size_t>(t)];
        }
        result.beats.push_back(std::move(beat));
    }

    if (result.beats.empty())
        throw NoBeatsError("segment_beats: all " + std::to_string(result.n_dropped) +
                           " candidate beats failed the quality gate");
    return result;
}

std::vector<RawRecord> load_records(const std::string& dir, double sample_rate_hz) {
    if (!fs::exists(dir)) throw std::invalid_argument("load_records: no such path " + dir);

    std::vector<std::string> files;
    if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(dir);
    }

    std::vector<RawRecord> records;
    for (const std::string& path : files) {
        CsvTable table = read_csv(path);
        if (table.header != std::vector<std::string>{"ppg", "abp", "ecg"})
            throw MalformedFileError(path + ": expected header ppg,abp,ecg");
        RawRecord rec;
        rec.id = fs::path(path).stem().string();
        rec.sample_rate_hz = sample_rate_hz;
        rec.ppg.reserve(table.rows.size());
        rec.abp.reserve(table.rows.size());
        rec.ecg.reserve(table.rows.size());
        for (const auto& row : table.rows) {
            rec.ppg.push_back(row[0]);
            rec.abp.push_back(row[1]);
            rec.ecg.push_back(row[2]);
        }
        if (rec.ppg.size() < static_cast<std::size_t>(2.0 * sample_rate_hz))
            throw EmptyRecordError(path + ": fewer than 2 s of samples");
        records.push_back(std::move(rec));
    }
    return records;
}

void write_record_csv(const std::string& path, const RawRecord& record) {
    std::vector<std::vector<double>> rows;
    rows.reserve(record.ppg.size());
    for (std::size_t i = 0; i < record.ppg.size(); ++i)
        rows.push_back({record.ppg[i], record.abp[i], record.ecg[i]});
    write_csv(path, {"ppg", "abp", "ecg"}, rows);
}

NormStats fit_norm_stats(const std::vector<Beat>& train) {
    if (train.empty()) throw std::invalid_argument("fit_norm_stats: empty train set");

    NormStats stats;
    const double n_vals = static_cast<double>(train.size()) * kBeatSteps;
    for (int c = 0; c < kBeatChannels; ++c) {
        double mean = 0.0;
        for (const Beat& b : train)
            for (int t = 0; t < kBeatSteps; ++t) mean += b.matrix.at(t, c);
        mean /= n_vals;
        double var = 0.0;
        for (const Beat& b : train)
            for (int t = 0; t < kBeatSteps; ++t) {
                double d = b.matrix.at(t, c) - mean;
                var += d * d;
            }
        var /= n_vals;
        stats.mean[static_cast<std::size_t>(c)] = mean;
        stats.std[static_cast<std::size_t>(c)] = std::sqrt(var);
    }

    const double n = static_cast<double>(train.size());
    for (int k = 0; k < 2; ++k) {
        double mean = 0.0;
        for (const Beat& b : train) mean += (k == 0 ? b.label.sbp_mmHg : b.label.dbp_mmHg);
        mean /= n;
        double var = 0.0;
        for (const Beat& b : train) {
            double d = (k == 0 ? b.label.sbp_mmHg : b.label.dbp_mmHg) - mean;
            var += d * d;
        }
        var /= n;
        stats.label_mean[static_cast<std::size_t>(k)] = mean;
        stats.label_std[static_cast<std::size_t>(k)] = std::sqrt(var);
    }

    for (double s : stats.std)
        if (!(s > 1e-8)) throw DegenerateChannelError("fit_norm_stats: channel std " +
                                                      std::to_string(s) + " <= 1e-8");
    for (double s : stats.label_std)
        if (!(s > 1e-8)) throw DegenerateChannelError("fit_norm_stats: label std " +
                                                      std::to_string(s) + " <= 1e-8");
    return stats;
}

BeatMatrix apply_norm(const BeatMatrix& beat, const NormStats& stats) {
    BeatMatrix out = beat;
    for (int t = 0; t < kBeatSteps; ++t)
        for (int c = 0; c < kBeatChannels; ++c)
            out.at(t, c) = (beat.at(t, c) - stats.mean[static_cast<std::size_t>(c)]) /
                           stats.std[static_cast<std::size_t>(c)];
    return out;
}

std::array<double, 2> normalize_label(const BeatLabel& label, const NormStats& stats) {
    return {(label.sbp_mmHg - stats.label_mean[0]) / stats.label_std[0],
            (label.dbp_mmHg - stats.label_mean[1]) / stats.label_std[1]};
}

BeatLabel invert_label_norm(const std::array<double, 2>& pred, const NormStats& stats) {
    BeatLabel label;
    label.sbp_mmHg = pred[0] * stats.label_std[0] + stats.label_mean[0];
    label.dbp_mmHg = pred[1] * stats.label_std[1] + stats.label_mean[1];
    return label;
}

namespace {

void check_fractions(double train_frac, double val_frac, double test_frac) {
    if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0))
        throw std::invalid_argument("split_dataset: fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: fractions must sum to 1");
}

} // namespace

DatasetSplit split_dataset(const std::vector<Beat>& beats, double train_frac, double val_frac,
                           double test_frac, std::uint64_t seed) {
    check_fractions(train_frac, val_frac, test_frac);
    const std::size_t n = beats.size();
    if (n < 3) throw TooFewBeatsError("split_dataset: need >= 3 beats, got " + std::to_string(n));

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    const std::size_t n_val = static_cast<std::size_t>(val_frac * static_cast<double>(n));
    const std::size_t n_test = static_cast<std::size_t>(test_frac * static_cast<double>(n));
    const std::size_t n_train = n - n_val - n_test;

    DatasetSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const Beat& b = beats[idx[i]];
        if (i < n_train) split.train.push_back(b);
        else if (i < n_train + n_val) split.val.push_back(b);
        else split.test.push_back(b);
    }
    split.norm = fit_norm_stats(split.train);
    return split;
}

DatasetSplit split_dataset_by_record(const std::vector<Beat>& beats, double train_frac,
                                     double val_frac, double test_frac, std::uint64_t seed) {
    check_fractions(train_frac, val_frac, test_frac);
    const std::size_t n = beats.size();
    if (n < 3)
        throw TooFewBeatsError("split_dataset_by_record: need >= 3 beats, got " + std::to_string(n));

    std::vector<std::string> record_ids;
    for (const Beat& b : beats)
        if (std::find(record_ids.begin(), record_ids.end(), b.matrix.source_record) ==
            record_ids.end())
            record_ids.push_back(b.matrix.source_record);
    Rng rng(seed);
    rng.shuffle(record_ids);

    const std::size_t target_val = static_cast<std::size_t>(val_frac * static_cast<double>(n));
    const std::size_t target_test = static_cast<std::size_t>(test_frac * static_cast<double>(n));

    DatasetSplit split;
    std::size_t got_val = 0, got_test = 0;
    for (const std::string& rid : record_ids) {
        std::vector<Beat> group;
        for (const Beat& b : beats)
            if (b.matrix.source_record == rid) group.push_back(b);
        // Records are atomic; fill test first, then val, remainder to train.
        if (got_test < target_test) {
            got_test += group.size();
            split.test.insert(split.test.end(), group.begin(), group.end());
        } else if (got_val < target_val) {
            got_val += group.size();
            split.val.insert(split.val.end(), group.begin(), group.end());
        } else {
            split.train.insert(split.train.end(), group.begin(), group.end());
        }
    }
    if (split.train.empty() || split.val.empty() || split.test.empty())
        throw TooFewBeatsError("split_dataset_by_record: too few records for a 3-way split");
    split.norm = fit_norm_stats(split.train);
    return split;
}

void write_beats_csv(const std::string& path, const std::vector<Beat>& beats) {
    std::vector<std::string> header{"sbp", "dbp"};
    for (int t = 0; t < kBeatSteps; ++t) header.push_back("ppg_" + std::to_string(t));
    for (int t = 0; t < kBeatSteps; ++t) header.push_back("ecg_" + std::to_string(t));

    std::vector<std::vector<double>> rows;
    rows.reserve(beats.size());
    for (const Beat& b : beats) {
        std::vector<double> row;
        row.reserve(2 + 2 * kBeatSteps);
        row.push_back(b.label.sbp_mmHg);
        row.push_back(b.label.dbp_mmHg);
        for (int t = 0; t < kBeatSteps; ++t) row.push_back(b.matrix.at(t, 0));
        for (int t = 0; t < kBeatSteps; ++t) row.push_back(b.matrix.at(t, 1));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

std::vector<Beat> load_beats_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.size() != 2 + 2 * kBeatSteps || table.header[0] != "sbp" ||
        table.header[1] != "dbp" || table.header[2] != "ppg_0" ||
        table.header[2 + kBeatSteps] != "ecg_0")
        throw MalformedFileError(path + ": not a beat dataset file");

    std::vector<Beat> beats;
    beats.reserve(table.rows.size());
    const std::string stem = fs::path(path).stem().string();
    int row_idx = 0;
    for (const auto& row : table.rows) {
        Beat b;
        b.label.sbp_mmHg = row[0];
        b.label.dbp_mmHg = row[1];
        for (int t = 0; t < kBeatSteps; ++t) {
            b.matrix.at(t, 0) = row[static_cast<std::size_t>(2 + t)];
            b.matrix.at(t, 1) = row[static_cast<std::size_t>(2 + kBeatSteps + t)];
        }
        b.matrix.source_record = stem;
        b.matrix.onset_index = row_idx++;
        // Beat duration is not part of the dataset schema; nominal value.
        b.matrix.duration_s = 1.0;
        beats.push_back(std::move(b));
    }
    return beats;
}

} // namespace wkbp
