#include "wkbp/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "wkbp/csv.hpp"
#include "wkbp/rng.hpp"

namespace wkbp {

void AdamState::init(const ParamStore& store) {
    t = 0;
    m.clear();
    v.clear();
    for (std::size_t i = 0; i < store.size(); ++i) {
        const Tensor& p = store.value_at(i);
        m.emplace_back(p.rows, p.cols);
        v.emplace_back(p.rows, p.cols);
    }
}

static void validate_train_config(const TrainConfig& tc) {
    if (tc.epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (tc.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(tc.lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (!(tc.adam_beta1 > 0.0 && tc.adam_beta1 < 1.0))
        throw std::invalid_argument("TrainConfig: adam_beta1 must be in (0, 1)");
    if (!(tc.adam_beta2 > 0.0 && tc.adam_beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: adam_beta2 must be in (0, 1)");
    if (!(tc.adam_eps > 0.0)) throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
    if (!(tc.clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
}

bool adam_step(ParamStore& store, AdamState& state, const TrainConfig& tc) {
    if (state.m.size() != store.size())
        throw std::invalid_argument("adam_step: state not initialized for this store");
    if (!store.grads_finite()) return false;

    ++state.t;
    const double bc1 = 1.0 - std::pow(tc.adam_beta1, state.t);
    const double bc2 = 1.0 - std::pow(tc.adam_beta2, state.t);
    for (std::size_t i = 0; i < store.size(); ++i) {
        Tensor& p = store.value_at(i);
        const Tensor& g = store.grad_at(i);
        Tensor& mi = state.m[i];
        Tensor& vi = state.v[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            mi.data[j] = tc.adam_beta1 * mi.data[j] + (1.0 - tc.adam_beta1) * g.data[j];
            vi.data[j] = tc.adam_beta2 * vi.data[j] + (1.0 - tc.adam_beta2) * g.data[j] * g.data[j];
            p.data[j] -= tc.lr * (mi.data[j] / bc1) / (std::sqrt(vi.data[j] / bc2) + tc.adam_eps);
        }
    }
    return true;
}

double clip_gradients(ParamStore& store, double clip_norm) {
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_gradients: clip_norm must be > 0");
    const double norm = store.grad_norm();
    if (std::isfinite(norm) && norm > clip_norm) {
        const double factor = clip_norm / norm;
        for (std::size_t i = 0; i < store.size(); ++i)
            for (double& g : store.grad_at(i).data) g *= factor;
    }
    return norm;
}

namespace {

struct NormalizedSet {
    std::vector<BeatMatrix> x;
    std::vector<Tensor> y; // 2x1 normalized (sbp, dbp)
};

NormalizedSet normalize_set(const std::vector<Beat>& beats, const NormStats& norm) {
    NormalizedSet set;
    set.x.reserve(beats.size());
    set.y.reserve(beats.size());
    for (const Beat& beat : beats) {
        set.x.push_back(apply_norm(beat.matrix, norm));
        const std::array<double, 2> l = normalize_label(beat.label, norm);
        set.y.push_back(Tensor::column({l[0], l[1]}));
    }
    return set;
}

double mean_loss(Tape& tape, const ParamStore& store, const ModelConfig& mc,
                 const NormalizedSet& set) {
    double acc = 0.0;
    for (std::size_t i = 0; i < set.x.size(); ++i) {
        tape.clear();
        const std::vector<int> ids = store.bind(tape);
        const ModelGraph graph = build_forward(tape, store, ids, mc, set.x[i]);
        const int loss = tape.mse(graph.out, tape.leaf(set.y[i]));
        acc += tape.value(loss)[0];
    }
    return acc / static_cast<double>(set.x.size());
}

} // namespace

TrainResult train_from(ParamStore initial, const ModelConfig& mc, const DatasetSplit& split,
                       const TrainConfig& tc) {
    validate_train_config(tc);
    if (split.train.empty()) throw EmptyInputError("train: training split is empty");
    if (split.val.empty()) throw EmptyInputError("train: validation split is empty");

    const NormalizedSet train_set = normalize_set(split.train, split.norm);
    const NormalizedSet val_set = normalize_set(split.val, split.norm);
    const int n = static_cast<int>(train_set.x.size());

    ParamStore store = std::move(initial);
    AdamState adam;
    adam.init(store);
    Tape tape;

    TrainResult res;
    res.best_val_loss = std::numeric_limits<double>::infinity();
    ParamStore best = store;
    bool stopped_by_callback = false;
    int epochs_since_best = 0;

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int e = 0; e < tc.epochs; ++e) {
        const int epoch = tc.start_epoch + e;
        // Seeding per absolute epoch keeps shuffle order reproducible
        // when a run is resumed from a checkpoint.
        Rng rng(tc.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch + 1));
        rng.shuffle(order);

        double loss_sum = 0.0;
        int loss_count = 0;
        double norm_sum = 0.0;
        int applied = 0;
        int skipped = 0;
        int step = 0;

        for (int start = 0; start < n; start += tc.batch_size, ++step) {
            const int end = std::min(n, start + tc.batch_size);
            const int bn = end - start;
            store.zero_grads();

            bool forward_failed = false;
            double batch_loss = 0.0;
            for (int i = start; i < end && !forward_failed; ++i) {
                const int idx = order[static_cast<std::size_t>(i)];
                tape.clear();
                const std::vector<int> ids = store.bind(tape);
                try {
                    const ModelGraph graph = build_forward(tape, store, ids, mc, train_set.x[idx]);
                    const int loss = tape.mse(graph.out, tape.leaf(train_set.y[idx]));
                    tape.backward(loss);
                    batch_loss += tape.value(loss)[0];
                } catch (const NonFiniteError&) {
                    forward_failed = true;
                }
                if (!forward_failed) store.accumulate_grads(tape, ids);
            }
            if (forward_failed) {
                ++skipped;
                continue;
            }
            for (std::size_t i = 0; i < store.size(); ++i)
                for (double& g : store.grad_at(i).data) g /= bn;

            if (tc.grad_hook) tc.grad_hook(store, epoch, step);
            const double pre_clip = clip_gradients(store, tc.clip_norm);
            if (!adam_step(store, adam, tc)) {
                ++skipped;
                continue;
            }
            ++applied;
            norm_sum += pre_clip;
            loss_sum += batch_loss;
            loss_count += bn;
        }

        res.total_skipped += skipped;
        if (applied == 0)
            throw AllStepsSkippedError("train: every step of epoch " + std::to_string(epoch) +
                                       " was skipped (" + std::to_string(skipped) +
                                       " non-finite steps); aborting");

        EpochReport report;
        report.epoch = epoch;
        report.train_loss = loss_sum / loss_count;
        report.val_loss = mean_loss(tape, store, mc, val_set);
        report.grad_norm = norm_sum / applied;
        report.n_skipped_nonfinite = skipped;
        res.epochs.push_back(report);

        if (report.val_loss < res.best_val_loss) {
            res.best_val_loss = report.val_loss;
            res.best_epoch = epoch;
            best = store;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }

        if (tc.epoch_callback && tc.epoch_callback(report, store)) {
            stopped_by_callback = true;
            break;
        }
        if (tc.early_stop_patience >= 1 && epochs_since_best >= tc.early_stop_patience) break;
    }

    res.weights = stopped_by_callback ? std::move(store) : std::move(best);
    return res;
}

TrainResult train(const ModelConfig& mc, const DatasetSplit& split, const TrainConfig& tc) {
    return train_from(init_weights(mc, tc.seed), mc, split, tc);
}

PredictionTable predict_all(const ParamStore& weights, const ModelConfig& mc,
                            const std::vector<Beat>& beats, const NormStats& norm) {
    PredictionTable table;
    for (const Beat& beat : beats) {
        const Prediction pred = predict(weights, mc, apply_norm(beat.matrix, norm));
        const BeatLabel mmHg = invert_label_norm({pred.sbp_norm, pred.dbp_norm}, norm);
        table.sbp_pred.push_back(mmHg.sbp_mmHg);
        table.sbp_true.push_back(beat.label.sbp_mmHg);
        table.dbp_pred.push_back(mmHg.dbp_mmHg);
        table.dbp_true.push_back(beat.label.dbp_mmHg);
    }
    return table;
}

MetricsReport evaluate(const ParamStore& weights, const ModelConfig& mc,
                       const std::vector<Beat>& test, const NormStats& norm) {
    if (test.empty()) throw EmptyInputError("evaluate: test set is empty");
    const PredictionTable t = predict_all(weights, mc, test, norm);
    return metrics_from_predictions(t.sbp_pred, t.sbp_true, t.dbp_pred, t.dbp_true);
}

ComparisonReport compare_models(const DatasetSplit& split, const TrainConfig& tc,
                                const ModelConfig& mc, ModelKind kind_a, ModelKind kind_b) {
    if (split.test.empty()) throw EmptyInputError("compare_models: test split is empty");

    ModelConfig ca = mc;
    ca.kind = kind_a;
    ModelConfig cb = mc;
    cb.kind = kind_b;
    const TrainResult ra = train(ca, split, tc);
    const TrainResult rb = train(cb, split, tc);

    ComparisonReport report;
    report.model_a = kind_to_string(kind_a);
    report.model_b = kind_to_string(kind_b);
    report.a = evaluate(ra.weights, ca, split.test, split.norm);
    report.b = evaluate(rb.weights, cb, split.test, split.norm);
    report.delta_mae_sbp = report.a.sbp.mae - report.b.sbp.mae;
    report.delta_mae_dbp = report.a.dbp.mae - report.b.dbp.mae;
    auto reduction = [](double maea, double maeb) {
        if (maeb == 0.0) return maea == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        return 100.0 * (maeb - maea) / maeb;
    };
    report.reduction_sbp_pct = reduction(report.a.sbp.mae, report.b.sbp.mae);
    report.reduction_dbp_pct = reduction(report.a.dbp.mae, report.b.dbp.mae);
    return report;
}

void write_comparison_csv(const std::string& path, const ComparisonReport& report) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError(path + ": cannot open for writing");
    out << "model_a,model_b,output,mae_a,mae_b,delta,reduction_pct\n";
    out << report.model_a << "," << report.model_b << ",sbp," << format_double(report.a.sbp.mae)
        << "," << format_double(report.b.sbp.mae) << "," << format_double(report.delta_mae_sbp)
        << "," << format_double(report.reduction_sbp_pct) << "\n";
    out << report.model_a << "," << report.model_b << ",dbp," << format_double(report.a.dbp.mae)
        << "," << format_double(report.b.dbp.mae) << "," << format_double(report.delta_mae_dbp)
        << "," << format_double(report.reduction_dbp_pct) << "\n";
    if (!out) throw MalformedFileError(path + ": write failed");
}

void write_epoch_csv(const std::string& path, const std::vector<EpochReport>& epochs) {
    std::vector<std::vector<double>> rows;
    rows.reserve(epochs.size());
    for (const EpochReport& r : epochs)
        rows.push_back({static_cast<double>(r.epoch), r.train_loss, r.val_loss, r.grad_norm,
                        static_cast<double>(r.n_skipped_nonfinite)});
    write_csv(path, {"epoch", "train_loss", "val_loss", "grad_norm", "skipped"}, rows);
}

std::vector<EpochReport> load_epoch_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"epoch", "train_loss", "val_loss", "grad_norm",
                                                 "skipped"})
        throw MalformedFileError(path + ": expected header epoch,train_loss,val_loss,grad_norm,skipped");
    std::vector<EpochReport> epochs;
    for (const auto& row : table.rows) {
        EpochReport r;
        r.epoch = static_cast<int>(row[0]);
        r.train_loss = row[1];
        r.val_loss = row[2];
        r.grad_norm = row[3];
        r.n_skipped_nonfinite = static_cast<int>(row[4]);
        epochs.push_back(r);
    }
    return epochs;
}

} // namespace wkbp
