#pragma once

#include <string>
#include <utility>
#include <vector>

namespace wkbp {

// Cumulative percentages of absolute errors within 5/10/15 mmHg and the
// grade those percentages earn. Thresholds, as (pct5, pct10, pct15)
// minima: A = (60, 85, 95), B = (50, 75, 90), C = (40, 65, 85), else D.
struct BhsResult {
    double pct5 = 0.0;
    double pct10 = 0.0;
    double pct15 = 0.0;
    char grade = 'D';
};

// Device-accuracy check: pass iff |mean error| <= 5 mmHg and the sample
// standard deviation of the errors is <= 8 mmHg.
struct AamiResult {
    double mean_error = 0.0;
    double sd_error = 0.0;
    bool pass = false;
};

struct OutputMetrics {
    double mae = 0.0;
    double pearson = 0.0; // NaN when either variance is zero
    BhsResult bhs;
    AamiResult aami;
};

struct MetricsReport {
    OutputMetrics sbp;
    OutputMetrics dbp;
    int n_beats = 0;
};

double mae(const std::vector<double>& pred, const std::vector<double>& truth);

// Sample-formula correlation. Returns NaN (not an error) when either
// side has zero variance, since r is undefined there.
double pearson(const std::vector<double>& pred, const std::vector<double>& truth);

// Errors are pred - truth in mmHg. Throws EmptyInputError when empty.
BhsResult bhs_grade(const std::vector<double>& errors);

// Throws TooFewSamplesError when fewer than 2 errors are given (the
// sample standard deviation needs n >= 2).
AamiResult aami_check(const std::vector<double>& errors);

OutputMetrics output_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

MetricsReport metrics_from_predictions(const std::vector<double>& sbp_pred,
                                       const std::vector<double>& sbp_true,
                                       const std::vector<double>& dbp_pred,
                                       const std::vector<double>& dbp_true);

// One row per (model, output) pair under the header
// model,output,mae,pearson,pct5,pct10,pct15,bhs_grade,aami_mean,aami_sd,aami_pass,n
void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, MetricsReport>>& reports);

struct HistBin {
    double lo = 0.0;
    double hi = 0.0;
    int count = 0;
};

// Equal-width bins spanning [min, max] of the errors; every input lands
// in exactly one bin (the top edge closes the last bin). Degenerate
// all-equal input collapses to a single unit-width bin.
std::vector<HistBin> error_histogram(const std::vector<double>& errors, int n_bins);

} // namespace wkbp
