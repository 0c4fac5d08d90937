#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wkbp/cli.hpp"
#include "wkbp/csv.hpp"
#include "wkbp/errors.hpp"
#include "wkbp/model.hpp"
#include "wkbp/signal.hpp"

#include "temp_dir.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace wkbp;
using wkbp_test::TempDir;

namespace {

// Runs the front end in-process. Captures stdout and stderr so test output
// stays readable and so assertions can look at the logged messages.
int run_cli(const std::vector<std::string>& args, std::string* text = nullptr) {
    std::vector<std::string> full;
    full.emplace_back("bpcli");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const std::string& s : full) argv.push_back(s.c_str());

    std::ostringstream captured;
    std::streambuf* old_out = std::cout.rdbuf(captured.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(captured.rdbuf());
    int rc = -1;
    try {
        rc = cli_main(static_cast<int>(argv.size()), argv.data());
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    if (text) *text = captured.str();
    return rc;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

int count_csv_files(const std::string& dir) {
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".csv") ++n;
    return n;
}

// Small synth + segment fixture shared by the train/eval/report cases.
// 4 subjects x 12 beats gives 44 segmentable beats, enough for a 3-way split.
struct BeatFixture {
    TempDir dir{"clifix"};
    std::string records;
    std::string beats;

    BeatFixture() {
        const std::string synth_out = dir.file("synth");
        REQUIRE(run_cli({"synth", "--subjects", "4", "--beats", "12", "--seed", "9",
                         "--out", synth_out}) == 0);
        records = synth_out + "/records";
        const std::string seg_out = dir.file("seg");
        REQUIRE(run_cli({"segment", "--records", records, "--out", seg_out}) == 0);
        beats = seg_out + "/beats.csv";
    }
};

// Cheap training flags so the heavier cases stay fast.
std::vector<std::string> tiny_train_flags() {
    return {"--model",          "plain", "--latent-dim", "4",   "--comp-hidden", "3",
            "--decoder-hidden", "3",     "--ode-steps",  "2",   "--batch-size",  "8",
            "--lr",             "0.01",  "--patience",   "0",   "--train-frac",  "0.6",
            "--val-frac",       "0.2",   "--seed",       "4"};
}

} // namespace

TEST_CASE("synth writes records, ground truth and the resolved config") {
    TempDir dir("clisynth");
    const std::string out = dir.file("out");
    std::string text;
    REQUIRE(run_cli({"synth", "--subjects", "5", "--beats", "20", "--seed", "1", "--out", out},
                    &text) == 0);
    CHECK(contains(text, "wrote 5 records"));

    CHECK(count_csv_files(out + "/records") == 5);
    CHECK(std::filesystem::exists(out + "/records/subject_000.csv"));
    CHECK(std::filesystem::exists(out + "/records/subject_004.csv"));

    const CsvTextTable truth = read_csv_text(out + "/ground_truth.csv");
    REQUIRE(truth.header == std::vector<std::string>{"subject", "r_p", "r_d", "c"});
    CHECK(truth.rows.size() == 5);

    const std::vector<std::string> resolved = lines_of(slurp(out + "/run_config.resolved"));
    REQUIRE(!resolved.empty());
    CHECK(resolved[0] == "command=synth");
    // One line per config field after the command line.
    CHECK(resolved.size() == 38);
    bool saw_subjects = false, saw_seed = false, saw_split = false;
    for (const std::string& line : resolved) {
        if (line == "subjects=5") saw_subjects = true;
        if (line == "seed=1") saw_seed = true;
        if (line == "split_by_subject=false") saw_split = true;
    }
    CHECK(saw_subjects);
    CHECK(saw_seed);
    CHECK(saw_split);
}

TEST_CASE("synth is byte-identical across identical invocations") {
    TempDir dir("clisynth2");
    const std::string a = dir.file("a");
    const std::string b = dir.file("b");
    const std::vector<std::string> base = {"synth", "--subjects", "3", "--beats", "10",
                                           "--seed", "21"};
    std::vector<std::string> run_a = base;
    run_a.insert(run_a.end(), {"--out", a});
    std::vector<std::string> run_b = base;
    run_b.insert(run_b.end(), {"--out", b});
    REQUIRE(run_cli(run_a) == 0);
    REQUIRE(run_cli(run_b) == 0);

    CHECK(slurp(a + "/records/subject_000.csv") == slurp(b + "/records/subject_000.csv"));
    CHECK(slurp(a + "/records/subject_002.csv") == slurp(b + "/records/subject_002.csv"));
    CHECK(slurp(a + "/ground_truth.csv") == slurp(b + "/ground_truth.csv"));
}

TEST_CASE("synth honours a narrowed parameter sampling box") {
    TempDir dir("clirange");
    const std::string out = dir.file("out");
    REQUIRE(run_cli({"synth", "--subjects", "6", "--beats", "6", "--seed", "2",
                     "--rd-min", "1.0", "--rd-max", "1.1", "--out", out}) == 0);
    const CsvTextTable truth = read_csv_text(out + "/ground_truth.csv");
    for (const auto& row : truth.rows) {
        const double r_d = std::stod(row[2]);
        CHECK(r_d >= 1.0);
        CHECK(r_d <= 1.1);
    }

    SUBCASE("a flipped range is rejected") {
        CHECK(run_cli({"synth", "--rd-min", "1.4", "--rd-max", "1.0",
                       "--out", dir.file("bad")}) == 1);
    }
}

TEST_CASE("synth rejects a zero subject count") {
    TempDir dir("clisynthbad");
    std::string text;
    CHECK(run_cli({"synth", "--subjects", "0", "--out", dir.file("out")}, &text) == 1);
    CHECK(contains(text, "error:"));
}

TEST_CASE("ingest copies well-formed records into the output tree") {
    TempDir dir("cliingest");
    const std::string synth_out = dir.file("synth");
    REQUIRE(run_cli({"synth", "--subjects", "2", "--beats", "8", "--seed", "3",
                     "--out", synth_out}) == 0);

    const std::string out = dir.file("ingested");
    std::string text;
    REQUIRE(run_cli({"ingest", "--input", synth_out + "/records", "--out", out}, &text) == 0);
    CHECK(contains(text, "ingested 2 records"));
    CHECK(slurp(out + "/records/subject_001.csv") ==
          slurp(synth_out + "/records/subject_001.csv"));

    SUBCASE("missing input directory fails") {
        CHECK(run_cli({"ingest", "--input", dir.file("nope"), "--out", dir.file("x")}) == 1);
    }
    SUBCASE("a malformed record file fails the whole ingest") {
        const std::string bad_dir = dir.file("bad");
        std::filesystem::create_directories(bad_dir);
        std::ofstream(bad_dir + "/broken.csv") << "ppg,abp,ecg\n1.0,2.0,oops\n";
        std::string err;
        CHECK(run_cli({"ingest", "--input", bad_dir, "--out", dir.file("y")}, &err) == 1);
        CHECK(contains(err, "broken.csv"));
    }
}

TEST_CASE("segment builds the beat dataset with a record sidecar") {
    BeatFixture fix;

    // Noise-free synthetic records segment without drops: 11 beats per
    // subject (one interval per adjacent peak pair over 12 generated beats).
    std::vector<Beat> beats = load_beats_csv(fix.beats);
    CHECK(beats.size() == 44);
    for (const Beat& b : beats) {
        CHECK(b.label.sbp_mmHg > b.label.dbp_mmHg);
        CHECK(b.label.dbp_mmHg > 50.0);
        CHECK(b.label.sbp_mmHg < 220.0);
    }

    const CsvTextTable meta =
        read_csv_text(std::filesystem::path(fix.beats).parent_path() / "beats_meta.csv");
    REQUIRE(meta.header == std::vector<std::string>{"beat", "record"});
    REQUIRE(meta.rows.size() == 44);
    std::set<std::string> subjects;
    for (const auto& row : meta.rows) subjects.insert(row[1]);
    CHECK(subjects.size() == 4);
    CHECK(subjects.count("subject_000") == 1);
    CHECK(subjects.count("subject_003") == 1);

    SUBCASE("the input records are left untouched") {
        const std::string record = fix.records + "/subject_000.csv";
        const std::string before = slurp(record);
        REQUIRE(run_cli({"segment", "--records", fix.records,
                         "--out", fix.dir.file("seg2")}) == 0);
        CHECK(slurp(record) == before);
    }
}

TEST_CASE("segment logs per-record counts and the total") {
    TempDir dir("cliseg");
    const std::string synth_out = dir.file("synth");
    REQUIRE(run_cli({"synth", "--subjects", "2", "--beats", "6", "--seed", "5",
                     "--out", synth_out}) == 0);
    std::string text;
    REQUIRE(run_cli({"segment", "--records", synth_out + "/records",
                     "--out", dir.file("seg")}, &text) == 0);
    CHECK(contains(text, "subject_000: 5 beats, 0 dropped"));
    CHECK(contains(text, "subject_001: 5 beats, 0 dropped"));
    CHECK(contains(text, "segmented 10 beats (0 dropped) from 2 records"));
}

TEST_CASE("segment fails on an empty records directory") {
    TempDir dir("clisegempty");
    const std::string empty = dir.file("records");
    std::filesystem::create_directories(empty);
    std::string text;
    CHECK(run_cli({"segment", "--records", empty, "--out", dir.file("out")}, &text) == 1);
    CHECK(contains(text, "no record files"));

    SUBCASE("and on a missing directory") {
        CHECK(run_cli({"segment", "--records", dir.file("absent"),
                       "--out", dir.file("out2")}) == 1);
    }
}

TEST_CASE("config file supplies values and explicit flags override them") {
    TempDir dir("clicfg");
    const std::string out1 = dir.file("a");
    const std::string cfg_path = dir.file("run.json");
    std::ofstream(cfg_path) << "{\"subjects\": 3, \"beats_per_subject\": 8, \"seed\": 5}\n";

    REQUIRE(run_cli({"--config", cfg_path, "synth", "--out", out1}) == 0);
    CHECK(count_csv_files(out1 + "/records") == 3);
    std::string resolved = slurp(out1 + "/run_config.resolved");
    CHECK(contains(resolved, "subjects=3"));
    CHECK(contains(resolved, "beats_per_subject=8"));
    CHECK(contains(resolved, "seed=5"));

    // A flag given alongside the file wins for that field only.
    const std::string out2 = dir.file("b");
    REQUIRE(run_cli({"--config", cfg_path, "synth", "--subjects", "2", "--out", out2}) == 0);
    CHECK(count_csv_files(out2 + "/records") == 2);
    resolved = slurp(out2 + "/run_config.resolved");
    CHECK(contains(resolved, "subjects=2"));
    CHECK(contains(resolved, "beats_per_subject=8"));
}

TEST_CASE("bad config files are rejected before any work starts") {
    TempDir dir("clibadcfg");
    const std::string out = dir.file("out");

    auto run_with = [&](const std::string& body, std::string* text) {
        const std::string path = dir.file("cfg.json");
        std::ofstream(path) << body;
        return run_cli({"--config", path, "synth", "--out", out}, text);
    };

    std::string text;
    SUBCASE("unknown key") {
        CHECK(run_with("{\"subects\": 3}", &text) == 1);
        CHECK(contains(text, "unknown"));
    }
    SUBCASE("not a JSON object") { CHECK(run_with("[1, 2]", &text) == 1); }
    SUBCASE("truncated JSON") { CHECK(run_with("{\"subjects\": ", &text) == 1); }
    SUBCASE("negative value for an unsigned field") {
        CHECK(run_with("{\"seed\": -4}", &text) == 1);
    }
    SUBCASE("wrong type") { CHECK(run_with("{\"subjects\": \"many\"}", &text) == 1); }
    SUBCASE("missing file") {
        CHECK(run_cli({"--config", dir.file("absent.json"), "synth", "--out", out}, &text) == 1);
    }
}

TEST_CASE("train writes a checkpoint and an epoch log") {
    BeatFixture fix;
    const std::string out = fix.dir.file("train");
    std::vector<std::string> args = {"train", "--beats", fix.beats, "--epochs", "2",
                                     "--out", out};
    std::vector<std::string> tiny = tiny_train_flags();
    args.insert(args.end(), tiny.begin(), tiny.end());
    std::string text;
    REQUIRE(run_cli(args, &text) == 0);
    CHECK(contains(text, "epoch 0 train"));
    CHECK(contains(text, "epoch 1 train"));

    const Checkpoint ck = load_checkpoint(out + "/checkpoint.txt");
    CHECK(ck.config.kind == ModelKind::kPlain);
    CHECK(ck.config.latent_dim == 4);
    CHECK(std::isfinite(ck.norm.label_mean[0]));
    CHECK(ck.norm.label_std[0] > 0.0);

    const CsvTable log = read_csv(out + "/epochs.csv");
    REQUIRE(log.header ==
            std::vector<std::string>{"epoch", "train_loss", "val_loss", "grad_norm", "skipped"});
    REQUIRE(log.rows.size() == 2);
    CHECK(log.rows[0][0] == 0.0);
    CHECK(log.rows[1][0] == 1.0);
    for (const auto& row : log.rows) {
        CHECK(std::isfinite(row[1]));
        CHECK(std::isfinite(row[2]));
        CHECK(row[4] == 0.0);
    }
}

TEST_CASE("train resumes from a checkpoint reproducibly") {
    BeatFixture fix;
    const std::string warm = fix.dir.file("warm");
    std::vector<std::string> base = {"train", "--beats", fix.beats, "--epochs", "2"};
    std::vector<std::string> tiny = tiny_train_flags();
    base.insert(base.end(), tiny.begin(), tiny.end());

    std::vector<std::string> warm_args = base;
    warm_args.insert(warm_args.end(), {"--out", warm});
    REQUIRE(run_cli(warm_args) == 0);
    const std::string warm_ck = warm + "/checkpoint.txt";

    auto resume_into = [&](const std::string& out) {
        std::vector<std::string> args = base;
        args.insert(args.end(),
                    {"--resume", warm_ck, "--start-epoch", "2", "--out", out});
        return run_cli(args);
    };
    const std::string r1 = fix.dir.file("r1");
    const std::string r2 = fix.dir.file("r2");
    REQUIRE(resume_into(r1) == 0);
    REQUIRE(resume_into(r2) == 0);

    CHECK(slurp(r1 + "/checkpoint.txt") == slurp(r2 + "/checkpoint.txt"));
    CHECK(slurp(r1 + "/epochs.csv") == slurp(r2 + "/epochs.csv"));

    // Resumed epochs continue the numbering rather than restarting at zero.
    const CsvTable log = read_csv(r1 + "/epochs.csv");
    REQUIRE(log.rows.size() == 2);
    CHECK(log.rows[0][0] == 2.0);
    CHECK(log.rows[1][0] == 3.0);

    SUBCASE("resume rejects a mismatched architecture") {
        // Rebuild the flag list so --latent-dim appears once, with a new value.
        std::vector<std::string> args = {"train", "--beats", fix.beats, "--epochs", "2"};
        std::vector<std::string> changed = tiny_train_flags();
        for (std::size_t i = 0; i + 1 < changed.size(); ++i)
            if (changed[i] == "--latent-dim") changed[i + 1] = "5";
        args.insert(args.end(), changed.begin(), changed.end());
        args.insert(args.end(), {"--resume", warm_ck, "--start-epoch", "2",
                                 "--out", fix.dir.file("bad")});
        std::string text;
        CHECK(run_cli(args, &text) == 1);
        CHECK(contains(text, "error:"));
    }
}

TEST_CASE("train overfits a small noise-free dataset through the front end") {
    TempDir dir("clioverfit");
    const std::string synth_out = dir.file("synth");
    REQUIRE(run_cli({"synth", "--subjects", "4", "--beats", "9", "--seed", "5",
                     "--out", synth_out}) == 0);
    const std::string seg_out = dir.file("seg");
    REQUIRE(run_cli({"segment", "--records", synth_out + "/records", "--out", seg_out}) == 0);
    const std::string beats = seg_out + "/beats.csv";

    const std::string train_out = dir.file("train");
    REQUIRE(run_cli({"train",        "--beats",        beats,
                     "--model",      "hybrid",         "--latent-dim",
                     "12",           "--comp-hidden",  "8",
                     "--decoder-hidden", "16",         "--ode-steps",
                     "4",            "--epochs",       "200",
                     "--batch-size", "8",              "--lr",
                     "0.01",         "--patience",     "0",
                     "--train-frac", "0.6",            "--val-frac",
                     "0.2",          "--seed",         "1",
                     "--out",        train_out}) == 0);

    const std::string eval_out = dir.file("eval");
    REQUIRE(run_cli({"eval", "--beats", beats, "--checkpoint",
                     train_out + "/checkpoint.txt", "--on", "train", "--train-frac", "0.6",
                     "--val-frac", "0.2", "--seed", "1", "--out", eval_out}) == 0);
    const CsvTextTable m = read_csv_text(eval_out + "/metrics.csv");
    REQUIRE(m.rows.size() == 2);
    for (const auto& row : m.rows) CHECK(std::stod(row[2]) <= 2.0); // mae in mmHg
}

TEST_CASE("train rejects an unknown model kind") {
    BeatFixture fix;
    std::string text;
    CHECK(run_cli({"train", "--beats", fix.beats, "--model", "resnet", "--epochs", "1",
                   "--out", fix.dir.file("out")}, &text) == 1);
    CHECK(contains(text, "model"));
}

TEST_CASE("train fails cleanly on a missing or unreadable beat file") {
    TempDir dir("clitrainbad");
    std::string text;
    CHECK(run_cli({"train", "--beats", dir.file("absent.csv"), "--epochs", "1",
                   "--out", dir.file("out")}, &text) == 1);
    CHECK(run_cli({"train", "--epochs", "1", "--out", dir.file("out2")}, &text) == 1);
    CHECK(contains(text, "--beats"));
}

TEST_CASE("eval writes the metrics report for the chosen subset") {
    BeatFixture fix;
    const std::string train_out = fix.dir.file("train");
    std::vector<std::string> args = {"train", "--beats", fix.beats, "--epochs", "1",
                                     "--out", train_out};
    std::vector<std::string> tiny = tiny_train_flags();
    args.insert(args.end(), tiny.begin(), tiny.end());
    REQUIRE(run_cli(args) == 0);
    const std::string ck = train_out + "/checkpoint.txt";

    const std::string eval_out = fix.dir.file("eval");
    REQUIRE(run_cli({"eval", "--beats", fix.beats, "--checkpoint", ck, "--on", "test",
                     "--train-frac", "0.6", "--val-frac", "0.2", "--seed", "4",
                     "--out", eval_out}) == 0);

    const CsvTextTable m = read_csv_text(eval_out + "/metrics.csv");
    REQUIRE(m.header == std::vector<std::string>{"model", "output", "mae", "pearson", "pct5",
                                                 "pct10", "pct15", "bhs_grade", "aami_mean",
                                                 "aami_sd", "aami_pass", "n"});
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0][0] == "plain");
    CHECK(m.rows[0][1] == "sbp");
    CHECK(m.rows[1][1] == "dbp");
    // 44 beats, val and test floor to 8 each under the 0.6/0.2 fractions.
    CHECK(m.rows[0][11] == "8");
    CHECK(m.rows[1][11] == "8");
    for (const auto& row : m.rows) {
        CHECK(std::stod(row[2]) >= 0.0);
        CHECK(std::isfinite(std::stod(row[2])));
    }

    SUBCASE("per-subject grouping writes the second report") {
        const std::string per_out = fix.dir.file("eval_per");
        REQUIRE(run_cli({"eval", "--beats", fix.beats, "--checkpoint", ck, "--on", "all",
                         "--per-subject", "--out", per_out}) == 0);
        const CsvTextTable per = read_csv_text(per_out + "/metrics_by_subject.csv");
        REQUIRE(per.header.size() == 13);
        CHECK(per.header[0] == "subject");
        CHECK(per.header[1] == "model");
        // 4 subjects x 2 outputs, each with its full complement of beats.
        CHECK(per.rows.size() == 8);
        std::set<std::string> subjects;
        for (const auto& row : per.rows) {
            subjects.insert(row[0]);
            CHECK(row[12] == "11");
        }
        CHECK(subjects.size() == 4);
    }

    SUBCASE("a checkpoint is required") {
        std::string text;
        CHECK(run_cli({"eval", "--beats", fix.beats, "--out", fix.dir.file("x")}, &text) == 1);
        CHECK(contains(text, "checkpoint"));
    }

    SUBCASE("an unknown subset name is rejected") {
        std::string text;
        CHECK(run_cli({"eval", "--beats", fix.beats, "--checkpoint", ck, "--on", "holdout",
                       "--out", fix.dir.file("y")}, &text) == 1);
        CHECK(contains(text, "holdout"));
    }
}

TEST_CASE("eval reports a perfect fixture with zero error and grade A") {
    // A model with a silenced decoder always predicts the label mean of
    // its normalization stats, so beats whose labels all sit on that
    // mean are predicted exactly.
    BeatFixture fix;
    std::vector<Beat> beats = load_beats_csv(fix.beats);
    REQUIRE(beats.size() >= 4);
    for (Beat& b : beats) {
        b.label.sbp_mmHg = 120.0;
        b.label.dbp_mmHg = 80.0;
    }
    const std::string flat = fix.dir.file("flat_beats.csv");
    write_beats_csv(flat, beats);

    Checkpoint ck;
    ck.config.kind = ModelKind::kPlain;
    ck.config.latent_dim = 4;
    ck.config.comp_hidden = 3;
    ck.config.decoder_hidden = 3;
    ck.config.ode_steps = 1;
    ck.norm.mean = {0.0, 0.0};
    ck.norm.std = {1.0, 1.0};
    ck.norm.label_mean = {120.0, 80.0};
    ck.norm.label_std = {1.0, 1.0};
    ck.params = init_weights(ck.config, 2);
    for (const char* name : {"dec.W1", "dec.b1", "dec.W2", "dec.b2"})
        for (double& v : ck.params.param(name).data) v = 0.0;
    const std::string ckpath = fix.dir.file("flat_ck.txt");
    save_checkpoint(ckpath, ck);

    const std::string out = fix.dir.file("eval_flat");
    REQUIRE(run_cli({"eval", "--beats", flat, "--checkpoint", ckpath, "--on", "all",
                     "--out", out}) == 0);
    const CsvTextTable m = read_csv_text(out + "/metrics.csv");
    REQUIRE(m.rows.size() == 2);
    for (const auto& row : m.rows) {
        CHECK(std::stod(row[2]) == 0.0); // mae
        CHECK(std::stod(row[4]) == 100.0);
        CHECK(row[7] == "A");
        CHECK(row[10] == "1"); // aami pass
    }
}

TEST_CASE("report compares two checkpoints and emits plot data") {
    BeatFixture fix;
    const std::string train_out = fix.dir.file("train");
    std::vector<std::string> args = {"train", "--beats", fix.beats, "--epochs", "1",
                                     "--out", train_out};
    std::vector<std::string> tiny = tiny_train_flags();
    args.insert(args.end(), tiny.begin(), tiny.end());
    REQUIRE(run_cli(args) == 0);
    const std::string ck = train_out + "/checkpoint.txt";

    const std::string rep_out = fix.dir.file("report");
    REQUIRE(run_cli({"report", "--beats", fix.beats, "--ckpt-a", ck, "--ckpt-b", ck,
                     "--on", "all", "--hist-bins", "6", "--out", rep_out}) == 0);

    // Identical checkpoints compare to a zero delta on both outputs.
    const CsvTextTable cmp = read_csv_text(rep_out + "/comparison.csv");
    REQUIRE(cmp.header == std::vector<std::string>{"model_a", "model_b", "output", "mae_a",
                                                   "mae_b", "delta", "reduction_pct"});
    REQUIRE(cmp.rows.size() == 2);
    for (const auto& row : cmp.rows) {
        CHECK(row[3] == row[4]);
        CHECK(std::stod(row[5]) == 0.0);
        CHECK(std::stod(row[6]) == 0.0);
    }

    const CsvTextTable scatter = read_csv_text(rep_out + "/scatter.csv");
    REQUIRE(scatter.header ==
            std::vector<std::string>{"output", "truth", "pred_a", "pred_b"});
    CHECK(scatter.rows.size() == 88); // 44 beats x 2 outputs
    for (const auto& row : scatter.rows) CHECK(row[2] == row[3]);

    const CsvTextTable hist = read_csv_text(rep_out + "/histogram.csv");
    REQUIRE(hist.header ==
            std::vector<std::string>{"model", "output", "bin_lo", "bin_hi", "count"});
    CHECK(hist.rows.size() == 24); // 2 models x 2 outputs x 6 bins
    long total = 0;
    for (const auto& row : hist.rows) total += std::stol(row[4]);
    CHECK(total == 4 * 44);

    SUBCASE("both checkpoints are required") {
        std::string text;
        CHECK(run_cli({"report", "--beats", fix.beats, "--ckpt-a", ck,
                       "--out", fix.dir.file("z")}, &text) == 1);
        CHECK(contains(text, "ckpt"));
    }
}

TEST_CASE("subject-grouped work requires the beat sidecar") {
    BeatFixture fix;

    // Copy beats.csv somewhere without its beats_meta.csv neighbour.
    const std::string lone_dir = fix.dir.file("lone");
    std::filesystem::create_directories(lone_dir);
    const std::string lone_beats = lone_dir + "/beats.csv";
    std::filesystem::copy_file(fix.beats, lone_beats);

    std::vector<std::string> args = {"train", "--beats", lone_beats, "--epochs", "1",
                                     "--split-by-subject", "--out", fix.dir.file("t")};
    std::vector<std::string> tiny = tiny_train_flags();
    args.insert(args.end(), tiny.begin(), tiny.end());
    std::string text;
    CHECK(run_cli(args, &text) == 1);
    CHECK(contains(text, "--beats-meta"));

    // Pointing at the original sidecar explicitly restores the grouping.
    const std::string meta =
        (std::filesystem::path(fix.beats).parent_path() / "beats_meta.csv").string();
    std::vector<std::string> ok = {"train",       "--beats", lone_beats, "--epochs", "1",
                                   "--beats-meta", meta,     "--split-by-subject",
                                   "--out",       fix.dir.file("t2")};
    ok.insert(ok.end(), tiny.begin(), tiny.end());
    CHECK(run_cli(ok) == 0);
}

TEST_CASE("command line parse failures exit nonzero without running") {
    TempDir dir("cliparse");
    std::string text;
    CHECK(run_cli({"synth", "--bogus", "3", "--out", dir.file("out")}, &text) != 0);
    CHECK(run_cli({}, &text) != 0);
    CHECK(run_cli({"mystery"}, &text) != 0);
    CHECK(!std::filesystem::exists(dir.file("out")));
}
