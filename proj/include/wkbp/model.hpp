#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wkbp/signal.hpp"
#include "wkbp/tape.hpp"
#include "wkbp/windkessel.hpp"

namespace wkbp {

// kHybrid runs the full pipeline: LSTM encoder, circulation parameter
// head, latent ODE integrated with RK4, then the decoder reads the final
// latent state concatenated with the three parameters.
// kBaseline keeps the encoder and the parameter head but skips the ODE
// (the decoder sees the encoder state directly), isolating what the
// integration itself contributes.
// kPlain drops the parameter head too; the decoder reads the encoder
// state alone.
enum class ModelKind { kHybrid, kBaseline, kPlain };

std::string kind_to_string(ModelKind kind);
ModelKind kind_from_string(const std::string& s);

struct ModelConfig {
    ModelKind kind = ModelKind::kHybrid;
    int latent_dim = 128;    // LSTM hidden size and ODE state size
    int comp_hidden = 128;   // hidden width of the learned flow correction
    int decoder_hidden = 64;
    int ode_steps = 8;       // fixed RK4 steps over unit time

    bool operator==(const ModelConfig&) const = default;
};

// Parameter names and shapes for a config, in canonical slot order.
struct ParamShape {
    std::string name;
    int rows = 0;
    int cols = 0;
};
std::vector<ParamShape> expected_shapes(const ModelConfig& cfg);

// Fresh weights. Matrices are uniform in +-1/sqrt(fan_in), drawn
// elementwise row-major in slot order from a single stream, so a given
// (config, seed) pair always produces identical values. Biases start at
// zero except the LSTM forget gate (1.0) and the parameter head, which
// starts at the log of nominal circulation values so the exponentials
// open at a physiological operating point.
ParamStore init_weights(const ModelConfig& cfg, std::uint64_t seed);

// Node ids of the interesting outputs of one beat's forward graph.
struct ModelGraph {
    int out = -1;     // 2x1: (sbp, dbp) in normalized units
    int params3 = -1; // 3x1: (r_p, r_d, c) after exp; -1 for kPlain
    int z0 = -1;      // encoder final hidden state
    int z_final = -1; // state handed to the decoder
};

// The learned latent circulation dynamics, shaped like the pressure ODE:
// dz/dt = (1/c) * (comp(z) - z/r_d - r_p*z), with comp a small tanh MLP
// standing in for the inflow term. Note that r_p acts on the state here,
// not on the inflow as it does in the physical model; that asymmetry is
// deliberate, do not "fix" it. Member ids name graph nodes holding the
// positive parameters (as 1/r_d, r_p, 1/c) and the comp weights; calling
// the object appends one dz/dt evaluation for state node z.
struct LatentDynamics {
    int inv_rd = -1;
    int rp = -1;
    int inv_c = -1;
    int comp_w1 = -1, comp_b1 = -1, comp_w2 = -1, comp_b2 = -1;

    int operator()(Tape& tape, int z) const;
};

// Appends the forward graph for one (already normalized) beat. `ids`
// must come from store.bind(tape) on the same tape.
ModelGraph build_forward(Tape& tape, const ParamStore& store, const std::vector<int>& ids,
                         const ModelConfig& cfg, const BeatMatrix& beat);

struct Prediction {
    double sbp_norm = 0.0;
    double dbp_norm = 0.0;
    Wk3Params params; // meaningful for kHybrid / kBaseline only
};

// One-off inference on a scratch tape.
Prediction predict(const ParamStore& store, const ModelConfig& cfg, const BeatMatrix& beat);

struct Checkpoint {
    ModelConfig config;
    NormStats norm;
    ParamStore params;
};

// Plain-text checkpoint, full double precision. load_checkpoint
// validates the magic line and that the stored tensors exactly match
// the names and shapes the stored config implies.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace wkbp
