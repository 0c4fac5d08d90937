#pragma once

#include <cstdint>
#include <string>

namespace wkbp {

// Flat effective configuration for one command, assembled from built-in
// defaults, then the optional JSON config file, then command-line flags
// (highest precedence). Unknown file keys are rejected up front.
struct RunConfig {
    std::string out = "out";
    std::uint64_t seed = 0;

    // synth
    int subjects = 10;
    int beats_per_subject = 60;
    double noise_std = 0.0;
    double fs = 125.0;
    // Subject parameter sampling box; defaults mirror ParamRanges.
    double rp_min = 0.02, rp_max = 0.1;
    double rd_min = 0.9, rd_max = 1.5;
    double c_min = 1.3, c_max = 2.2;

    // ingest / segment inputs
    std::string input;   // directory of external record CSVs
    std::string records; // directory of canonical record CSVs

    // beat dataset
    std::string beats;      // beat CSV path
    std::string beats_meta; // beat->record sidecar; "" derives <dir>/beats_meta.csv

    // model
    std::string model = "hybrid";
    int latent_dim = 128;
    int comp_hidden = 128;
    int decoder_hidden = 64;
    int ode_steps = 8;

    // training
    int epochs = 100;
    int batch_size = 32;
    double lr = 1e-3;
    double clip_norm = 1.0;
    int patience = 10;
    double train_frac = 0.7;
    double val_frac = 0.15;
    bool split_by_subject = false;
    std::string resume;    // checkpoint to continue from
    int start_epoch = 0;

    // eval / report
    std::string checkpoint;
    std::string ckpt_a;
    std::string ckpt_b;
    std::string on = "test"; // train | val | test | all
    bool per_subject = false;
    int hist_bins = 20;
};

// Subcommand bodies. Each validates its inputs, does the work, writes
// its outputs under cfg.out and throws on failure (cli_main maps
// exceptions to a nonzero exit code and a stderr message).
void cmd_synth(const RunConfig& cfg);
void cmd_ingest(const RunConfig& cfg);
void cmd_segment(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

// Full argv entry point: parses subcommand + flags + optional --config
// file, echoes the effective configuration to <out>/run_config.resolved
// and dispatches. Returns the process exit code.
int cli_main(int argc, const char* const* argv);

} // namespace wkbp
