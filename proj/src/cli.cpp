#include "wkbp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <tuple>

#include "CLI11.hpp"
#include "json.hpp"

#include "wkbp/csv.hpp"
#include "wkbp/errors.hpp"
#include "wkbp/metrics.hpp"
#include "wkbp/model.hpp"
#include "wkbp/signal.hpp"
#include "wkbp/train.hpp"
#include "wkbp/windkessel.hpp"

namespace fs = std::filesystem;

namespace wkbp {

namespace {

enum class FieldType { kInt, kU64, kDouble, kBool, kString };

struct FieldRef {
    const char* name;
    FieldType type;
    void* ptr;
};

// Single source of truth for key names: drives the config-file loader,
// the flag merge and the resolved-config echo.
std::vector<FieldRef> field_refs(RunConfig& c) {
    return {
        {"out", FieldType::kString, &c.out},
        {"seed", FieldType::kU64, &c.seed},
        {"subjects", FieldType::kInt, &c.subjects},
        {"beats_per_subject", FieldType::kInt, &c.beats_per_subject},
        {"noise_std", FieldType::kDouble, &c.noise_std},
        {"fs", FieldType::kDouble, &c.fs},
        {"rp_min", FieldType::kDouble, &c.rp_min},
        {"rp_max", FieldType::kDouble, &c.rp_max},
        {"rd_min", FieldType::kDouble, &c.rd_min},
        {"rd_max", FieldType::kDouble, &c.rd_max},
        {"c_min", FieldType::kDouble, &c.c_min},
        {"c_max", FieldType::kDouble, &c.c_max},
        {"input", FieldType::kString, &c.input},
        {"records", FieldType::kString, &c.records},
        {"beats", FieldType::kString, &c.beats},
        {"beats_meta", FieldType::kString, &c.beats_meta},
        {"model", FieldType::kString, &c.model},
        {"latent_dim", FieldType::kInt, &c.latent_dim},
        {"comp_hidden", FieldType::kInt, &c.comp_hidden},
        {"decoder_hidden", FieldType::kInt, &c.decoder_hidden},
        {"ode_steps", FieldType::kInt, &c.ode_steps},
        {"epochs", FieldType::kInt, &c.epochs},
        {"batch_size", FieldType::kInt, &c.batch_size},
        {"lr", FieldType::kDouble, &c.lr},
        {"clip_norm", FieldType::kDouble, &c.clip_norm},
        {"patience", FieldType::kInt, &c.patience},
        {"train_frac", FieldType::kDouble, &c.train_frac},
        {"val_frac", FieldType::kDouble, &c.val_frac},
        {"split_by_subject", FieldType::kBool, &c.split_by_subject},
        {"resume", FieldType::kString, &c.resume},
        {"start_epoch", FieldType::kInt, &c.start_epoch},
        {"checkpoint", FieldType::kString, &c.checkpoint},
        {"ckpt_a", FieldType::kString, &c.ckpt_a},
        {"ckpt_b", FieldType::kString, &c.ckpt_b},
        {"on", FieldType::kString, &c.on},
        {"per_subject", FieldType::kBool, &c.per_subject},
        {"hist_bins", FieldType::kInt, &c.hist_bins},
    };
}

void copy_field(const FieldRef& dst, const FieldRef& src) {
    switch (dst.type) {
    case FieldType::kInt: *static_cast<int*>(dst.ptr) = *static_cast<int*>(src.ptr); break;
    case FieldType::kU64:
        *static_cast<std::uint64_t*>(dst.ptr) = *static_cast<std::uint64_t*>(src.ptr);
        break;
    case FieldType::kDouble:
        *static_cast<double*>(dst.ptr) = *static_cast<double*>(src.ptr);
        break;
    case FieldType::kBool: *static_cast<bool*>(dst.ptr) = *static_cast<bool*>(src.ptr); break;
    case FieldType::kString:
        *static_cast<std::string*>(dst.ptr) = *static_cast<std::string*>(src.ptr);
        break;
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(path + ": config must be a flat JSON object");

    std::vector<FieldRef> refs = field_refs(cfg);
    for (const auto& [key, value] : doc.items()) {
        const FieldRef* ref = nullptr;
        for (const FieldRef& r : refs)
            if (key == r.name) {
                ref = &r;
                break;
            }
        if (!ref) throw ConfigError(path + ": unknown config key '" + key + "'");
        switch (ref->type) {
        case FieldType::kInt:
            if (!value.is_number_integer())
                throw ConfigError(path + ": key '" + key + "' expects an integer");
            *static_cast<int*>(ref->ptr) = value.get<int>();
            break;
        case FieldType::kU64:
            if (!value.is_number_integer() || (value.is_number_integer() && value.get<long long>() < 0))
                throw ConfigError(path + ": key '" + key + "' expects a non-negative integer");
            *static_cast<std::uint64_t*>(ref->ptr) = value.get<std::uint64_t>();
            break;
        case FieldType::kDouble:
            if (!value.is_number())
                throw ConfigError(path + ": key '" + key + "' expects a number");
            *static_cast<double*>(ref->ptr) = value.get<double>();
            break;
        case FieldType::kBool:
            if (!value.is_boolean())
                throw ConfigError(path + ": key '" + key + "' expects a boolean");
            *static_cast<bool*>(ref->ptr) = value.get<bool>();
            break;
        case FieldType::kString:
            if (!value.is_string())
                throw ConfigError(path + ": key '" + key + "' expects a string");
            *static_cast<std::string*>(ref->ptr) = value.get<std::string>();
            break;
        }
    }
}

void write_resolved(const RunConfig& cfg, const std::string& command) {
    fs::create_directories(cfg.out);
    const std::string path = (fs::path(cfg.out) / "run_config.resolved").string();
    std::ofstream out(path);
    if (!out) throw ConfigError(path + ": cannot write resolved config");
    out << "command=" << command << "\n";
    std::vector<FieldRef> refs = field_refs(const_cast<RunConfig&>(cfg));
    for (const FieldRef& r : refs) {
        out << r.name << "=";
        switch (r.type) {
        case FieldType::kInt: out << *static_cast<int*>(r.ptr); break;
        case FieldType::kU64: out << *static_cast<std::uint64_t*>(r.ptr); break;
        case FieldType::kDouble: out << format_double(*static_cast<double*>(r.ptr)); break;
        case FieldType::kBool: out << (*static_cast<bool*>(r.ptr) ? "true" : "false"); break;
        case FieldType::kString: out << *static_cast<std::string*>(r.ptr); break;
        }
        out << "\n";
    }
}

std::string meta_path_for(const RunConfig& cfg) {
    if (!cfg.beats_meta.empty()) return cfg.beats_meta;
    return (fs::path(cfg.beats).parent_path() / "beats_meta.csv").string();
}

void write_beats_meta(const std::string& path, const std::vector<Beat>& beats) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError(path + ": cannot open for writing");
    out << "beat,record\n";
    for (std::size_t i = 0; i < beats.size(); ++i)
        out << i << "," << beats[i].matrix.source_record << "\n";
}

// The beat CSV holds no subject identity, so record ids travel in a
// sidecar written by `segment`. Loads it into source_record when
// present; `required` turns a missing sidecar into an error.
void apply_beats_meta(std::vector<Beat>& beats, const RunConfig& cfg, bool required) {
    const std::string path = meta_path_for(cfg);
    if (!fs::exists(path)) {
        if (required)
            throw ConfigError(path + ": beat->record sidecar not found (re-run segment, or pass "
                                     "--beats-meta)");
        return;
    }
    CsvTextTable table = read_csv_text(path);
    if (table.header != std::vector<std::string>{"beat", "record"})
        throw MalformedFileError(path + ": expected header beat,record");
    if (table.rows.size() != beats.size())
        throw MalformedFileError(path + ": " + std::to_string(table.rows.size()) +
                                 " rows for " + std::to_string(beats.size()) + " beats");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i][0] != std::to_string(i))
            throw MalformedFileError(path + ": row " + std::to_string(i + 1) +
                                     " is out of order");
        beats[i].matrix.source_record = table.rows[i][1];
    }
}

ModelConfig model_config_from(const RunConfig& cfg) {
    ModelConfig mc;
    mc.kind = kind_from_string(cfg.model);
    mc.latent_dim = cfg.latent_dim;
    mc.comp_hidden = cfg.comp_hidden;
    mc.decoder_hidden = cfg.decoder_hidden;
    mc.ode_steps = cfg.ode_steps;
    return mc;
}

double test_frac_of(const RunConfig& cfg) {
    const double t = 1.0 - cfg.train_frac - cfg.val_frac;
    if (!(cfg.train_frac > 0.0) || !(cfg.val_frac > 0.0) || !(t > 0.0))
        throw ConfigError("train_frac and val_frac must be positive and sum below 1");
    return t;
}

DatasetSplit split_of(const RunConfig& cfg, const std::vector<Beat>& beats) {
    const double test_frac = test_frac_of(cfg);
    if (cfg.split_by_subject)
        return split_dataset_by_record(beats, cfg.train_frac, cfg.val_frac, test_frac, cfg.seed);
    return split_dataset(beats, cfg.train_frac, cfg.val_frac, test_frac, cfg.seed);
}

// Beats the evaluation-style commands operate on, selected with the
// same split parameters the training run used.
std::vector<Beat> select_subset(const RunConfig& cfg, std::vector<Beat> beats) {
    if (cfg.on == "all") return beats;
    DatasetSplit split = split_of(cfg, beats);
    if (cfg.on == "train") return std::move(split.train);
    if (cfg.on == "val") return std::move(split.val);
    if (cfg.on == "test") return std::move(split.test);
    throw ConfigError("on must be one of train, val, test, all (got '" + cfg.on + "')");
}

std::vector<Beat> load_beats_for(const RunConfig& cfg, bool meta_required) {
    if (cfg.beats.empty()) throw ConfigError("--beats is required for this command");
    std::vector<Beat> beats = load_beats_csv(cfg.beats);
    apply_beats_meta(beats, cfg, meta_required);
    return beats;
}

} // namespace

void cmd_synth(const RunConfig& cfg) {
    const ParamRanges ranges{cfg.rp_min, cfg.rp_max, cfg.rd_min,
                             cfg.rd_max, cfg.c_min,  cfg.c_max};
    const SynthDataset ds = synth_dataset(cfg.subjects, cfg.beats_per_subject, ranges,
                                          cfg.noise_std, cfg.seed, InflowProfile{}, cfg.fs);
    const fs::path records_dir = fs::path(cfg.out) / "records";
    fs::create_directories(records_dir);
    for (const RawRecord& rec : ds.records)
        write_record_csv((records_dir / (rec.id + ".csv")).string(), rec);
    write_ground_truth_csv((fs::path(cfg.out) / "ground_truth.csv").string(), ds.true_params);
    std::cout << "wrote " << ds.records.size() << " records to " << records_dir.string()
              << " and ground_truth.csv\n";
}

void cmd_ingest(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("ingest: --input directory is required");
    const std::vector<RawRecord> records = load_records(cfg.input, cfg.fs);
    const fs::path records_dir = fs::path(cfg.out) / "records";
    fs::create_directories(records_dir);
    for (const RawRecord& rec : records)
        write_record_csv((records_dir / (rec.id + ".csv")).string(), rec);
    std::cout << "ingested " << records.size() << " records into " << records_dir.string()
              << "\n";
}

void cmd_segment(const RunConfig& cfg) {
    if (cfg.records.empty()) throw ConfigError("segment: --records directory is required");
    const std::vector<RawRecord> records = load_records(cfg.records, cfg.fs);
    if (records.empty()) throw EmptyInputError("segment: no record files in " + cfg.records);
    std::vector<Beat> beats;
    int dropped = 0;
    for (const RawRecord& rec : records) {
        const std::vector<int> peaks = detect_r_peaks(rec.ecg, rec.sample_rate_hz);
        SegmentResult result = segment_beats(rec, peaks);
        std::cout << rec.id << ": " << result.beats.size() << " beats, " << result.n_dropped
                  << " dropped\n";
        dropped += result.n_dropped;
        for (Beat& b : result.beats) beats.push_back(std::move(b));
    }
    const std::string beats_path = (fs::path(cfg.out) / "beats.csv").string();
    write_beats_csv(beats_path, beats);
    write_beats_meta((fs::path(cfg.out) / "beats_meta.csv").string(), beats);
    std::cout << "segmented " << beats.size() << " beats (" << dropped << " dropped) from "
              << records.size() << " records into " << beats_path << "\n";
}

void cmd_train(const RunConfig& cfg) {
    std::vector<Beat> beats = load_beats_for(cfg, cfg.split_by_subject);
    const DatasetSplit split = split_of(cfg, beats);
    const ModelConfig mc = model_config_from(cfg);

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.lr = cfg.lr;
    tc.clip_norm = cfg.clip_norm;
    tc.early_stop_patience = cfg.patience;
    tc.seed = cfg.seed;
    tc.start_epoch = cfg.start_epoch;
    tc.epoch_callback = [](const EpochReport& r, const ParamStore&) {
        std::cout << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss
                  << " grad " << r.grad_norm << " skipped " << r.n_skipped_nonfinite << "\n";
        return false;
    };

    TrainResult result;
    if (cfg.resume.empty()) {
        result = train(mc, split, tc);
    } else {
        Checkpoint ck = load_checkpoint(cfg.resume);
        if (!(ck.config == mc))
            throw ConfigError("resume: checkpoint model configuration does not match the "
                              "requested one");
        result = train_from(std::move(ck.params), mc, split, tc);
    }

    const std::string ckpt_path = (fs::path(cfg.out) / "checkpoint.txt").string();
    save_checkpoint(ckpt_path, {mc, split.norm, result.weights});
    write_epoch_csv((fs::path(cfg.out) / "epochs.csv").string(), result.epochs);
    std::cout << "trained " << result.epochs.size() << " epochs (best val "
              << result.best_val_loss << " at epoch " << result.best_epoch << ", "
              << result.total_skipped << " skipped steps); checkpoint at " << ckpt_path << "\n";
}

namespace {

void write_metrics_by_subject(const std::string& path,
                              const std::vector<std::pair<std::string, MetricsReport>>& rows,
                              const std::string& model) {
    std::ofstream out(path);
    if (!out) throw MalformedFileError(path + ": cannot open for writing");
    out << "subject,model,output,mae,pearson,pct5,pct10,pct15,bhs_grade,aami_mean,aami_sd,"
           "aami_pass,n\n";
    for (const auto& [subject, report] : rows) {
        const std::pair<const char*, const OutputMetrics*> outputs[] = {{"sbp", &report.sbp},
                                                                        {"dbp", &report.dbp}};
        for (const auto& [name, m] : outputs) {
            out << subject << "," << model << "," << name << "," << format_double(m->mae) << ","
                << format_double(m->pearson) << "," << format_double(m->bhs.pct5) << ","
                << format_double(m->bhs.pct10) << "," << format_double(m->bhs.pct15) << ","
                << m->bhs.grade << "," << format_double(m->aami.mean_error) << ","
                << format_double(m->aami.sd_error) << "," << (m->aami.pass ? 1 : 0) << ","
                << report.n_beats << "\n";
        }
    }
}

} // namespace

void cmd_eval(const RunConfig& cfg) {
    if (cfg.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required");
    const Checkpoint ck = load_checkpoint(cfg.checkpoint);
    std::vector<Beat> beats =
        load_beats_for(cfg, cfg.per_subject || cfg.split_by_subject);
    const std::vector<Beat> subset = select_subset(cfg, std::move(beats));
    if (subset.empty()) throw EmptyInputError("eval: selected subset is empty");

    // Inference always uses the normalization fitted at training time.
    const std::string model = kind_to_string(ck.config.kind);
    const MetricsReport report = evaluate(ck.params, ck.config, subset, ck.norm);
    write_metrics_csv((fs::path(cfg.out) / "metrics.csv").string(), {{model, report}});
    std::cout << model << " on " << cfg.on << ": n " << report.n_beats << ", MAE sbp "
              << report.sbp.mae << " dbp " << report.dbp.mae << ", grades "
              << report.sbp.bhs.grade << "/" << report.dbp.bhs.grade << "\n";

    if (cfg.per_subject) {
        std::map<std::string, std::vector<Beat>> groups;
        for (const Beat& b : subset) groups[b.matrix.source_record].push_back(b);
        std::vector<std::pair<std::string, MetricsReport>> rows;
        for (const auto& [subject, group] : groups) {
            if (group.size() < 2) {
                std::cout << "skipping subject " << subject << " (fewer than 2 beats)\n";
                continue;
            }
            rows.emplace_back(subject, evaluate(ck.params, ck.config, group, ck.norm));
        }
        write_metrics_by_subject((fs::path(cfg.out) / "metrics_by_subject.csv").string(), rows,
                                 model);
    }
}

void cmd_report(const RunConfig& cfg) {
    if (cfg.ckpt_a.empty() || cfg.ckpt_b.empty())
        throw ConfigError("report: --ckpt-a and --ckpt-b are required");
    const Checkpoint a = load_checkpoint(cfg.ckpt_a);
    const Checkpoint b = load_checkpoint(cfg.ckpt_b);
    std::vector<Beat> beats = load_beats_for(cfg, cfg.split_by_subject);
    const std::vector<Beat> subset = select_subset(cfg, std::move(beats));
    if (subset.empty()) throw EmptyInputError("report: selected subset is empty");

    const PredictionTable ta = predict_all(a.params, a.config, subset, a.norm);
    const PredictionTable tb = predict_all(b.params, b.config, subset, b.norm);

    ComparisonReport rep;
    rep.model_a = kind_to_string(a.config.kind);
    rep.model_b = kind_to_string(b.config.kind);
    rep.a = metrics_from_predictions(ta.sbp_pred, ta.sbp_true, ta.dbp_pred, ta.dbp_true);
    rep.b = metrics_from_predictions(tb.sbp_pred, tb.sbp_true, tb.dbp_pred, tb.dbp_true);
    rep.delta_mae_sbp = rep.a.sbp.mae - rep.b.sbp.mae;
    rep.delta_mae_dbp = rep.a.dbp.mae - rep.b.dbp.mae;
    auto reduction = [](double maea, double maeb) {
        if (maeb == 0.0) return maea == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        return 100.0 * (maeb - maea) / maeb;
    };
    rep.reduction_sbp_pct = reduction(rep.a.sbp.mae, rep.b.sbp.mae);
    rep.reduction_dbp_pct = reduction(rep.a.dbp.mae, rep.b.dbp.mae);
    write_comparison_csv((fs::path(cfg.out) / "comparison.csv").string(), rep);

    {
        const std::string path = (fs::path(cfg.out) / "scatter.csv").string();
        std::ofstream out(path);
        if (!out) throw MalformedFileError(path + ": cannot open for writing");
        out << "output,truth,pred_a,pred_b\n";
        for (std::size_t i = 0; i < ta.sbp_true.size(); ++i)
            out << "sbp," << format_double(ta.sbp_true[i]) << "," << format_double(ta.sbp_pred[i])
                << "," << format_double(tb.sbp_pred[i]) << "\n";
        for (std::size_t i = 0; i < ta.dbp_true.size(); ++i)
            out << "dbp," << format_double(ta.dbp_true[i]) << "," << format_double(ta.dbp_pred[i])
                << "," << format_double(tb.dbp_pred[i]) << "\n";
    }
    {
        const std::string path = (fs::path(cfg.out) / "histogram.csv").string();
        std::ofstream out(path);
        if (!out) throw MalformedFileError(path + ": cannot open for writing");
        out << "model,output,bin_lo,bin_hi,count\n";
        const std::tuple<std::string, const PredictionTable*> models[] = {{rep.model_a, &ta},
                                                                          {rep.model_b, &tb}};
        for (const auto& [model, table] : models) {
            const std::pair<const char*, std::pair<const std::vector<double>*,
                                                   const std::vector<double>*>>
                outputs[] = {{"sbp", {&table->sbp_pred, &table->sbp_true}},
                             {"dbp", {&table->dbp_pred, &table->dbp_true}}};
            for (const auto& [output, vecs] : outputs) {
                std::vector<double> errors(vecs.first->size());
                for (std::size_t i = 0; i < errors.size(); ++i)
                    errors[i] = (*vecs.first)[i] - (*vecs.second)[i];
                for (const HistBin& bin : error_histogram(errors, cfg.hist_bins))
                    out << model << "," << output << "," << format_double(bin.lo) << ","
                        << format_double(bin.hi) << "," << bin.count << "\n";
            }
        }
    }
    std::cout << "compared " << rep.model_a << " vs " << rep.model_b << " on " << subset.size()
              << " beats: MAE delta sbp " << rep.delta_mae_sbp << " dbp " << rep.delta_mae_dbp
              << " (reduction " << rep.reduction_sbp_pct << "% / " << rep.reduction_dbp_pct
              << "%)\n";
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Windkessel-informed blood pressure estimation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    RunConfig cfg;   // defaults, then file, then flags
    RunConfig flagv; // raw flag values
    std::vector<std::pair<CLI::Option*, std::size_t>> bound;
    std::vector<FieldRef> flag_refs = field_refs(flagv);

    auto field_index = [&](const char* key) {
        for (std::size_t i = 0; i < flag_refs.size(); ++i)
            if (std::string(key) == flag_refs[i].name) return i;
        throw std::logic_error(std::string("unknown field ") + key);
    };
    auto bind = [&](CLI::App* sub, const char* flag, const char* key, const char* help) {
        const std::size_t idx = field_index(key);
        const FieldRef& r = flag_refs[idx];
        CLI::Option* opt = nullptr;
        switch (r.type) {
        case FieldType::kInt: opt = sub->add_option(flag, *static_cast<int*>(r.ptr), help); break;
        case FieldType::kU64:
            opt = sub->add_option(flag, *static_cast<std::uint64_t*>(r.ptr), help);
            break;
        case FieldType::kDouble:
            opt = sub->add_option(flag, *static_cast<double*>(r.ptr), help);
            break;
        case FieldType::kBool: opt = sub->add_flag(flag, *static_cast<bool*>(r.ptr), help); break;
        case FieldType::kString:
            opt = sub->add_option(flag, *static_cast<std::string*>(r.ptr), help);
            break;
        }
        bound.emplace_back(opt, idx);
    };

    bind(&app, "--out", "out", "output directory");
    bind(&app, "--seed", "seed", "random seed");

    CLI::App* synth = app.add_subcommand("synth", "generate synthetic records + ground truth");
    synth->fallthrough();
    bind(synth, "--subjects", "subjects", "number of synthetic subjects");
    bind(synth, "--beats", "beats_per_subject", "beats per subject");
    bind(synth, "--noise", "noise_std", "additive gaussian noise std");
    bind(synth, "--fs", "fs", "sample rate in Hz");
    bind(synth, "--rp-min", "rp_min", "proximal resistance lower bound");
    bind(synth, "--rp-max", "rp_max", "proximal resistance upper bound");
    bind(synth, "--rd-min", "rd_min", "distal resistance lower bound");
    bind(synth, "--rd-max", "rd_max", "distal resistance upper bound");
    bind(synth, "--c-min", "c_min", "compliance lower bound");
    bind(synth, "--c-max", "c_max", "compliance upper bound");

    CLI::App* ingest = app.add_subcommand("ingest", "validate external records into canonical form");
    ingest->fallthrough();
    bind(ingest, "--input", "input", "directory of external record CSVs");
    bind(ingest, "--fs", "fs", "sample rate in Hz");

    CLI::App* segment = app.add_subcommand("segment", "detect beats and build the beat dataset");
    segment->fallthrough();
    bind(segment, "--records", "records", "directory of record CSVs");
    bind(segment, "--fs", "fs", "sample rate in Hz");

    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a beat dataset");
    train_cmd->fallthrough();
    bind(train_cmd, "--beats", "beats", "beat dataset CSV");
    bind(train_cmd, "--beats-meta", "beats_meta", "beat->record sidecar CSV");
    bind(train_cmd, "--model", "model", "hybrid, baseline or plain");
    bind(train_cmd, "--latent-dim", "latent_dim", "latent state size");
    bind(train_cmd, "--comp-hidden", "comp_hidden", "flow-correction hidden width");
    bind(train_cmd, "--decoder-hidden", "decoder_hidden", "decoder hidden width");
    bind(train_cmd, "--ode-steps", "ode_steps", "RK4 steps");
    bind(train_cmd, "--epochs", "epochs", "training epochs");
    bind(train_cmd, "--batch-size", "batch_size", "minibatch size");
    bind(train_cmd, "--lr", "lr", "learning rate");
    bind(train_cmd, "--clip-norm", "clip_norm", "gradient clip norm");
    bind(train_cmd, "--patience", "patience", "early stop patience (<1 disables)");
    bind(train_cmd, "--train-frac", "train_frac", "training fraction");
    bind(train_cmd, "--val-frac", "val_frac", "validation fraction");
    bind(train_cmd, "--split-by-subject", "split_by_subject",
         "keep each subject's beats in one split");
    bind(train_cmd, "--resume", "resume", "checkpoint to continue from");
    bind(train_cmd, "--start-epoch", "start_epoch", "epoch numbering offset for resumed runs");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->fallthrough();
    bind(eval_cmd, "--beats", "beats", "beat dataset CSV");
    bind(eval_cmd, "--beats-meta", "beats_meta", "beat->record sidecar CSV");
    bind(eval_cmd, "--checkpoint", "checkpoint", "checkpoint to evaluate");
    bind(eval_cmd, "--on", "on", "subset: train, val, test or all");
    bind(eval_cmd, "--per-subject", "per_subject", "also write per-subject metrics");
    bind(eval_cmd, "--train-frac", "train_frac", "training fraction used by the split");
    bind(eval_cmd, "--val-frac", "val_frac", "validation fraction used by the split");
    bind(eval_cmd, "--split-by-subject", "split_by_subject",
         "reproduce a subject-level split");

    CLI::App* report = app.add_subcommand("report", "compare two checkpoints + plot data");
    report->fallthrough();
    bind(report, "--beats", "beats", "beat dataset CSV");
    bind(report, "--beats-meta", "beats_meta", "beat->record sidecar CSV");
    bind(report, "--ckpt-a", "ckpt_a", "first checkpoint");
    bind(report, "--ckpt-b", "ckpt_b", "second checkpoint");
    bind(report, "--on", "on", "subset: train, val, test or all");
    bind(report, "--hist-bins", "hist_bins", "error histogram bin count");
    bind(report, "--train-frac", "train_frac", "training fraction used by the split");
    bind(report, "--val-frac", "val_frac", "validation fraction used by the split");
    bind(report, "--split-by-subject", "split_by_subject", "reproduce a subject-level split");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        std::vector<FieldRef> cfg_refs = field_refs(cfg);
        for (const auto& [opt, idx] : bound)
            if (opt->count() > 0) copy_field(cfg_refs[idx], flag_refs[idx]);

        const std::pair<CLI::App*, void (*)(const RunConfig&)> dispatch[] = {
            {synth, cmd_synth}, {ingest, cmd_ingest}, {segment, cmd_segment},
            {train_cmd, cmd_train}, {eval_cmd, cmd_eval}, {report, cmd_report}};
        for (const auto& [sub, fn] : dispatch) {
            if (sub->parsed()) {
                write_resolved(cfg, sub->get_name());
                fn(cfg);
                return 0;
            }
        }
        throw ConfigError("no subcommand given");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace wkbp
