#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wkbp/metrics.hpp"
#include "wkbp/model.hpp"
#include "wkbp/signal.hpp"
#include "wkbp/tape.hpp"

namespace wkbp {

struct EpochReport {
    int epoch = 0;
    double train_loss = 0.0; // mean per-beat loss over applied steps
    double val_loss = 0.0;   // full validation pass after the epoch's updates
    double grad_norm = 0.0;  // mean pre-clip global norm over applied steps
    int n_skipped_nonfinite = 0;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 1.0;
    // Stop after this many epochs without a validation improvement;
    // values < 1 disable early stopping.
    int early_stop_patience = 10;
    std::uint64_t seed = 0;
    // Epoch numbering offset for resumed runs. Shuffle order is derived
    // from (seed, absolute epoch), so a resumed run is reproducible.
    int start_epoch = 0;

    // Test seam: runs once per optimizer step after gradients are
    // accumulated and averaged, before clipping and the update.
    std::function<void(ParamStore&, int epoch, int step)> grad_hook;
    // Optional observer called with each finished epoch; returning true
    // stops training and keeps the current weights instead of the
    // best-validation snapshot.
    std::function<bool(const EpochReport&, const ParamStore&)> epoch_callback;
};

struct AdamState {
    int t = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    void init(const ParamStore& store);
};

// One optimizer step from the store's accumulated gradients. Returns
// false without touching parameters, moments or t when any gradient
// entry is non-finite (the skip guard).
bool adam_step(ParamStore& store, AdamState& state, const TrainConfig& tc);

// Scales all gradients in place so the global L2 norm is at most
// clip_norm; returns the pre-clip norm. Non-finite norms leave the
// gradients untouched (the guard downstream rejects them).
double clip_gradients(ParamStore& store, double clip_norm);

struct TrainResult {
    ParamStore weights; // best-validation weights (see epoch_callback note)
    std::vector<EpochReport> epochs;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    int total_skipped = 0;
};

// Minibatch training with shuffling, gradient clipping, the non-finite
// skip guard and early stopping on validation loss. Train and val must
// be non-empty. Steps whose forward pass or gradients go non-finite are
// skipped and counted; an epoch in which every step is skipped throws
// AllStepsSkippedError.
TrainResult train_from(ParamStore initial, const ModelConfig& mc, const DatasetSplit& split,
                       const TrainConfig& tc);

// Same, starting from fresh weights seeded with tc.seed.
TrainResult train(const ModelConfig& mc, const DatasetSplit& split, const TrainConfig& tc);

struct PredictionTable {
    std::vector<double> sbp_pred;
    std::vector<double> sbp_true;
    std::vector<double> dbp_pred;
    std::vector<double> dbp_true;
};

// Runs the model over the beats and de-normalizes predictions to mmHg.
PredictionTable predict_all(const ParamStore& weights, const ModelConfig& mc,
                            const std::vector<Beat>& beats, const NormStats& norm);

// De-normalizes predictions and computes the full metric set per output.
MetricsReport evaluate(const ParamStore& weights, const ModelConfig& mc,
                       const std::vector<Beat>& test, const NormStats& norm);

struct ComparisonReport {
    std::string model_a;
    std::string model_b;
    MetricsReport a;
    MetricsReport b;
    double delta_mae_sbp = 0.0;     // a - b
    double delta_mae_dbp = 0.0;
    double reduction_sbp_pct = 0.0; // 100 * (b - a) / b
    double reduction_dbp_pct = 0.0;
};

// Trains two model kinds under identical config and seed, evaluates both
// on the test split and reports the per-output MAE delta and relative
// reduction of a versus b.
ComparisonReport compare_models(const DatasetSplit& split, const TrainConfig& tc,
                                const ModelConfig& mc, ModelKind kind_a = ModelKind::kHybrid,
                                ModelKind kind_b = ModelKind::kBaseline);

// Header: model_a,model_b,output,mae_a,mae_b,delta,reduction_pct with
// one row per output. Model names are written as columns so the file
// stands alone.
void write_comparison_csv(const std::string& path, const ComparisonReport& report);

// Header: epoch,train_loss,val_loss,grad_norm,skipped
void write_epoch_csv(const std::string& path, const std::vector<EpochReport>& epochs);
std::vector<EpochReport> load_epoch_csv(const std::string& path);

} // namespace wkbp
