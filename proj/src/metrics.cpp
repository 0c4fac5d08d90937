#include "wkbp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "wkbp/csv.hpp"
#include "wkbp/errors.hpp"

namespace wkbp {

static void require_paired(const std::vector<double>& pred, const std::vector<double>& truth,
                           const char* what) {
    if (pred.empty()) throw EmptyInputError(std::string(what) + ": empty input");
    if (pred.size() != truth.size())
        throw ShapeMismatchError(std::string(what) + ": " + std::to_string(pred.size()) +
                                 " predictions vs " + std::to_string(truth.size()) + " targets");
}

double mae(const std::vector<double>& pred, const std::vector<double>& truth) {
    require_paired(pred, truth, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

double pearson(const std::vector<double>& pred, const std::vector<double>& truth) {
    require_paired(pred, truth, "pearson");
    const double n = static_cast<double>(pred.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mx += pred[i];
        my += truth[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dx = pred[i] - mx;
        const double dy = truth[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

BhsResult bhs_grade(const std::vector<double>& errors) {
    if (errors.empty()) throw EmptyInputError("bhs_grade: empty error list");
    int within5 = 0, within10 = 0, within15 = 0;
    for (double e : errors) {
        const double a = std::fabs(e);
        if (a <= 5.0) ++within5;
        if (a <= 10.0) ++within10;
        if (a <= 15.0) ++within15;
    }
    const double n = static_cast<double>(errors.size());
    BhsResult r;
    r.pct5 = 100.0 * within5 / n;
    r.pct10 = 100.0 * within10 / n;
    r.pct15 = 100.0 * within15 / n;
    if (r.pct5 >= 60.0 && r.pct10 >= 85.0 && r.pct15 >= 95.0)
        r.grade = 'A';
    else if (r.pct5 >= 50.0 && r.pct10 >= 75.0 && r.pct15 >= 90.0)
        r.grade = 'B';
    else if (r.pct5 >= 40.0 && r.pct10 >= 65.0 && r.pct15 >= 85.0)
        r.grade = 'C';
    else
        r.grade = 'D';
    return r;
}

AamiResult aami_check(const std::vector<double>& errors) {
    if (errors.size() < 2)
        throw TooFewSamplesError("aami_check: need at least 2 errors, got " +
                                 std::to_string(errors.size()));
    const double n = static_cast<double>(errors.size());
    AamiResult r;
    for (double e : errors) r.mean_error += e;
    r.mean_error /= n;
    double ss = 0.0;
    for (double e : errors) ss += (e - r.mean_error) * (e - r.mean_error);
    r.sd_error = std::sqrt(ss / (n - 1.0));
    r.pass = std::fabs(r.mean_error) <= 5.0 && r.sd_error <= 8.0;
    return r;
}

OutputMetrics output_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
    require_paired(pred, truth, "output_metrics");
    std::vector<double> errors(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) errors[i] = pred[i] - truth[i];
    OutputMetrics m;
    m.mae = mae(pred, truth);
    m.pearson = pearson(pred, truth);
    m.bhs = bhs_grade(errors);
    m.aami = aami_check(errors);
    return m;
}

MetricsReport metrics_from_predictions(const std::vector<double>& sbp_pred,
                                       const std::vector<double>& sbp_true,
                                       const std::vector<double>& dbp_pred,
                                       const std::vector<double>& dbp_true) {
    if (sbp_pred.size() != dbp_pred.size())
        throw ShapeMismatchError("metrics_from_predictions: sbp and dbp counts differ");
    MetricsReport report;
    report.sbp = output_metrics(sbp_pred, sbp_true);
    report.dbp = output_metrics(dbp_pred, dbp_true);
    report.n_beats = static_cast<int>(sbp_pred.size());
    return report;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, MetricsReport>>& reports) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError(path + ": cannot open for writing");
    out << "model,output,mae,pearson,pct5,pct10,pct15,bhs_grade,aami_mean,aami_sd,aami_pass,n\n";
    for (const auto& [model, report] : reports) {
        const std::pair<const char*, const OutputMetrics*> rows[] = {{"sbp", &report.sbp},
                                                                     {"dbp", &report.dbp}};
        for (const auto& [name, m] : rows) {
            out << model << "," << name << "," << format_double(m->mae) << ","
                << format_double(m->pearson) << "," << format_double(m->bhs.pct5) << ","
                << format_double(m->bhs.pct10) << "," << format_double(m->bhs.pct15) << ","
                << m->bhs.grade << "," << format_double(m->aami.mean_error) << ","
                << format_double(m->aami.sd_error) << "," << (m->aami.pass ? 1 : 0) << ","
                << report.n_beats << "\n";
        }
    }
    if (!out) throw MalformedFileError(path + ": write failed");
}

std::vector<HistBin> error_histogram(const std::vector<double>& errors, int n_bins) {
    if (errors.empty()) throw EmptyInputError("error_histogram: empty error list");
    if (n_bins < 1) throw std::invalid_argument("error_histogram: n_bins must be >= 1");
    double lo = errors[0], hi = errors[0];
    for (double e : errors) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / n_bins;
    std::vector<HistBin> bins(static_cast<std::size_t>(n_bins));
    for (int k = 0; k < n_bins; ++k) {
        bins[static_cast<std::size_t>(k)].lo = lo + k * width;
        bins[static_cast<std::size_t>(k)].hi = lo + (k + 1) * width;
    }
    for (double e : errors) {
        int k = static_cast<int>((e - lo) / width);
        if (k >= n_bins) k = n_bins - 1; // top edge closes the last bin
        if (k < 0) k = 0;
        ++bins[static_cast<std::size_t>(k)].count;
    }
    return bins;
}

} // namespace wkbp
