#include "wkbp/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wkbp/csv.hpp"
#include "wkbp/rk4.hpp"
#include "wkbp/rng.hpp"

namespace wkbp {

std::string kind_to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::kHybrid: return "hybrid";
    case ModelKind::kBaseline: return "baseline";
    case ModelKind::kPlain: return "plain";
    }
    throw std::invalid_argument("kind_to_string: unknown ModelKind");
}

ModelKind kind_from_string(const std::string& s) {
    if (s == "hybrid") return ModelKind::kHybrid;
    if (s == "baseline") return ModelKind::kBaseline;
    if (s == "plain") return ModelKind::kPlain;
    throw std::invalid_argument("unknown model kind '" + s + "' (want hybrid, baseline or plain)");
}

static void validate_config(const ModelConfig& cfg) {
    if (cfg.latent_dim < 1 || cfg.comp_hidden < 1 || cfg.decoder_hidden < 1 || cfg.ode_steps < 1)
        throw std::invalid_argument("ModelConfig: all dimensions must be >= 1");
}

std::vector<ParamShape> expected_shapes(const ModelConfig& cfg) {
    validate_config(cfg);
    const int h = cfg.latent_dim;
    std::vector<ParamShape> shapes;
    shapes.push_back({"lstm.W", 4 * h, kBeatChannels});
    shapes.push_back({"lstm.U", 4 * h, h});
    shapes.push_back({"lstm.b", 4 * h, 1});
    if (cfg.kind != ModelKind::kPlain) {
        shapes.push_back({"head.W", 3, h});
        shapes.push_back({"head.b", 3, 1});
    }
    if (cfg.kind == ModelKind::kHybrid) {
        shapes.push_back({"comp.W1", cfg.comp_hidden, h});
        shapes.push_back({"comp.b1", cfg.comp_hidden, 1});
        shapes.push_back({"comp.W2", h, cfg.comp_hidden});
        shapes.push_back({"comp.b2", h, 1});
    }
    const int dec_in = (cfg.kind == ModelKind::kPlain) ? h : h + 3;
    shapes.push_back({"dec.W1", cfg.decoder_hidden, dec_in});
    shapes.push_back({"dec.b1", cfg.decoder_hidden, 1});
    shapes.push_back({"dec.W2", 2, cfg.decoder_hidden});
    shapes.push_back({"dec.b2", 2, 1});
    return shapes;
}

ParamStore init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    ParamStore store;
    const Wk3Params nominal; // struct defaults double as the head's opening point
    for (const ParamShape& s : expected_shapes(cfg)) {
        Tensor t(s.rows, s.cols);
        if (s.name.find(".b") == std::string::npos) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
            for (double& v : t.data) v = rng.uniform(-bound, bound);
        } else if (s.name == "lstm.b") {
            // Forget gate opens at 1 so early training does not wipe the cell.
            for (int r = cfg.latent_dim; r < 2 * cfg.latent_dim; ++r) t[r] = 1.0;
        } else if (s.name == "head.b") {
            t[0] = std::log(nominal.r_p);
            t[1] = std::log(nominal.r_d);
            t[2] = std::log(nominal.c);
        }
        store.add(s.name, std::move(t));
    }
    return store;
}

int LatentDynamics::operator()(Tape& tape, int z) const {
    const int comp = tape.add(
        tape.matmul(comp_w2, tape.tanh(tape.add(tape.matmul(comp_w1, z), comp_b1))), comp_b2);
    const int drain =
        tape.add(tape.scale(tape.mul(inv_rd, z), -1.0), tape.scale(tape.mul(rp, z), -1.0));
    return tape.mul(inv_c, tape.add(drain, comp));
}

ModelGraph build_forward(Tape& tape, const ParamStore& store, const std::vector<int>& ids,
                         const ModelConfig& cfg, const BeatMatrix& beat) {
    validate_config(cfg);
    if (ids.size() != store.size())
        throw std::invalid_argument("build_forward: ids do not match the parameter store");
    auto pid = [&](const char* name) { return ids[store.index_of(name)]; };

    const int H = cfg.latent_dim;
    const int lw = pid("lstm.W");
    const int lu = pid("lstm.U");
    const int lb = pid("lstm.b");

    int h = tape.leaf(Tensor(H, 1));
    int c = tape.leaf(Tensor(H, 1));
    for (int t = 0; t < kBeatSteps; ++t) {
        Tensor x(kBeatChannels, 1);
        for (int ch = 0; ch < kBeatChannels; ++ch) x[ch] = beat.at(t, ch);
        const int xt = tape.leaf(std::move(x));
        const int pre = tape.add(tape.add(tape.matmul(lw, xt), tape.matmul(lu, h)), lb);
        const int gi = tape.sigmoid(tape.slice(pre, 0, H));
        const int gf = tape.sigmoid(tape.slice(pre, H, 2 * H));
        const int gg = tape.tanh(tape.slice(pre, 2 * H, 3 * H));
        const int go = tape.sigmoid(tape.slice(pre, 3 * H, 4 * H));
        c = tape.add(tape.mul(gf, c), tape.mul(gi, gg));
        h = tape.mul(go, tape.tanh(c));
    }

    ModelGraph graph;
    graph.z0 = h;
    graph.z_final = h;

    if (cfg.kind != ModelKind::kPlain) {
        // Unbounded head outputs would blow up the exponentials, so the
        // raw values are hard-limited before the transform.
        const int theta =
            tape.clamp(tape.add(tape.matmul(pid("head.W"), h), pid("head.b")), -6.0, 6.0);
        graph.params3 = tape.exp(theta);

        if (cfg.kind == ModelKind::kHybrid) {
            LatentDynamics dyn;
            dyn.rp = tape.exp(tape.slice(theta, 0, 1));
            dyn.inv_rd = tape.exp(tape.scale(tape.slice(theta, 1, 2), -1.0));
            dyn.inv_c = tape.exp(tape.scale(tape.slice(theta, 2, 3), -1.0));
            dyn.comp_w1 = pid("comp.W1");
            dyn.comp_b1 = pid("comp.b1");
            dyn.comp_w2 = pid("comp.W2");
            dyn.comp_b2 = pid("comp.b2");
            graph.z_final = rk4_integrate(tape, dyn, h, cfg.ode_steps);
        }
    }

    const int dec_in = (cfg.kind == ModelKind::kPlain)
                           ? graph.z_final
                           : tape.concat0(graph.z_final, graph.params3);
    const int hid = tape.tanh(tape.add(tape.matmul(pid("dec.W1"), dec_in), pid("dec.b1")));
    graph.out = tape.add(tape.matmul(pid("dec.W2"), hid), pid("dec.b2"));
    return graph;
}

Prediction predict(const ParamStore& store, const ModelConfig& cfg, const BeatMatrix& beat) {
    Tape tape;
    tape.set_check_finite(false);
    const std::vector<int> ids = store.bind(tape);
    const ModelGraph graph = build_forward(tape, store, ids, cfg, beat);
    Prediction pred;
    pred.sbp_norm = tape.value(graph.out)[0];
    pred.dbp_norm = tape.value(graph.out)[1];
    if (graph.params3 >= 0) {
        const Tensor& p = tape.value(graph.params3);
        pred.params = {p[0], p[1], p[2]};
    }
    return pred;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError(path + ": cannot open for writing");
    out << "wkbp-checkpoint v1\n";
    out << "kind " << kind_to_string(ckpt.config.kind) << "\n";
    out << "latent_dim " << ckpt.config.latent_dim << "\n";
    out << "comp_hidden " << ckpt.config.comp_hidden << "\n";
    out << "decoder_hidden " << ckpt.config.decoder_hidden << "\n";
    out << "ode_steps " << ckpt.config.ode_steps << "\n";
    out << "norm";
    for (double v : ckpt.norm.mean) out << " " << format_double(v);
    for (double v : ckpt.norm.std) out << " " << format_double(v);
    for (double v : ckpt.norm.label_mean) out << " " << format_double(v);
    for (double v : ckpt.norm.label_std) out << " " << format_double(v);
    out << "\n";
    out << "params " << ckpt.params.size() << "\n";
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        const Tensor& t = ckpt.params.value_at(i);
        out << ckpt.params.names()[i] << " " << t.rows << " " << t.cols << "\n";
        for (int r = 0; r < t.rows; ++r) {
            for (int col = 0; col < t.cols; ++col) {
                if (col) out << " ";
                out << format_double(t.at(r, col));
            }
            out << "\n";
        }
    }
    if (!out) throw MalformedFileError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedFileError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != "wkbp-checkpoint v1")
        throw MalformedFileError(path + ": not a checkpoint file");

    Checkpoint ckpt;
    auto expect_key = [&](const char* key) {
        if (!std::getline(in, line)) throw MalformedFileError(path + ": truncated");
        std::istringstream ss(line);
        std::string k;
        ss >> k;
        if (k != key) throw MalformedFileError(path + ": expected '" + key + "', got '" + k + "'");
        return ss;
    };

    {
        std::istringstream ss = expect_key("kind");
        std::string kind;
        ss >> kind;
        ckpt.config.kind = kind_from_string(kind);
    }
    auto read_int = [&](const char* key) {
        std::istringstream ss = expect_key(key);
        int v = 0;
        if (!(ss >> v)) throw MalformedFileError(path + ": bad integer for " + key);
        return v;
    };
    ckpt.config.latent_dim = read_int("latent_dim");
    ckpt.config.comp_hidden = read_int("comp_hidden");
    ckpt.config.decoder_hidden = read_int("decoder_hidden");
    ckpt.config.ode_steps = read_int("ode_steps");
    {
        std::istringstream ss = expect_key("norm");
        for (double* v : {&ckpt.norm.mean[0], &ckpt.norm.mean[1], &ckpt.norm.std[0],
                          &ckpt.norm.std[1], &ckpt.norm.label_mean[0], &ckpt.norm.label_mean[1],
                          &ckpt.norm.label_std[0], &ckpt.norm.label_std[1]})
            if (!(ss >> *v)) throw MalformedFileError(path + ": bad norm line");
    }

    const std::vector<ParamShape> shapes = expected_shapes(ckpt.config);
    const int n = read_int("params");
    if (n != static_cast<int>(shapes.size()))
        throw MalformedFileError(path + ": expected " + std::to_string(shapes.size()) +
                                 " tensors, file declares " + std::to_string(n));
    for (const ParamShape& s : shapes) {
        if (!std::getline(in, line)) throw MalformedFileError(path + ": truncated");
        std::istringstream hdr(line);
        std::string name;
        int rows = 0, cols = 0;
        if (!(hdr >> name >> rows >> cols) || name != s.name || rows != s.rows || cols != s.cols)
            throw MalformedFileError(path + ": tensor '" + s.name + "' missing or has wrong shape");
        Tensor t(rows, cols);
        for (int r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw MalformedFileError(path + ": truncated");
            std::istringstream row(line);
            for (int col = 0; col < cols; ++col)
                if (!(row >> t.at(r, col)))
                    throw MalformedFileError(path + ": bad value in tensor " + s.name);
        }
        ckpt.params.add(s.name, std::move(t));
    }
    return ckpt;
}

} // namespace wkbp
