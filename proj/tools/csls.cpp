#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "csls/ablation.hpp"
#include "csls/calibration.hpp"
#include "csls/error.hpp"
#include "csls/io.hpp"
#include "csls/json.hpp"
#include "csls/prototypes.hpp"
#include "csls/pseudo_label.hpp"
#include "csls/smoothing.hpp"
#include "csls/version.hpp"

using namespace csls;

namespace {

// Float32 files carry about 7 significant digits, so score rows read back
// from disk are accepted when they sum to 1 within this and renormalized.
constexpr double kScoreTolerance = 1e-4;

int log_level() {
    const char* env = std::getenv("CSLS_LOG");
    if (!env) return 0;
    try {
        return std::stoi(env);
    } catch (const std::exception&) {
        return 0;
    }
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "csls: " << msg << '\n';
}

struct Output {
    std::string path;
    std::string format;  // "", "csv" or "binary"

    io::MatrixFormat matrix_format() const {
        if (format == "csv") return io::MatrixFormat::csv;
        if (format == "binary") return io::MatrixFormat::binary;
        return path.empty() ? io::MatrixFormat::csv : io::format_for_path(path);
    }
};

void add_output(CLI::App* cmd, Output& out, bool matrix) {
    cmd->add_option("--out,-o", out.path, "Output file (default: standard output)");
    if (matrix) {
        cmd->add_option("--format", out.format, "Matrix format; default from the --out extension (.bin = binary)")
            ->check(CLI::IsMember({"csv", "binary"}));
    }
}

void emit_text(const Output& out, const std::string& text) {
    if (out.path.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        io::write_text(out.path, text);
    }
}

void emit_matrix(const Output& out, const Matrix& m) {
    const io::MatrixFormat fmt = out.matrix_format();
    if (!out.path.empty()) {
        io::write_matrix(m, out.path, fmt);
    } else if (fmt == io::MatrixFormat::csv) {
        std::cout << io::format_csv_matrix(m);
        std::cout.flush();
    } else {
        const auto bytes = io::encode_binary_matrix(m);
        std::fwrite(bytes.data(), 1, bytes.size(), stdout);
        std::fflush(stdout);
    }
}

Matrix load_matrix(const std::string& path, const char* what) {
    Matrix m = io::read_matrix(path, io::format_for_path(path));
    if (m.rows() == 0) fail_data(std::string(what) + " '" + path + "' has no rows");
    return m;
}

SoftLabels load_scores(const std::string& path) {
    return SoftLabels::normalized(load_matrix(path, "score matrix"), kScoreTolerance);
}

struct ClassCount {
    std::optional<std::size_t> num_classes;
    bool infer = false;
};

void add_class_count(CLI::App* cmd, ClassCount& cc) {
    auto* n = cmd->add_option("--num-classes,-C", cc.num_classes, "Number of classes")->check(CLI::PositiveNumber);
    auto* i = cmd->add_flag("--infer-classes", cc.infer, "Use max(label) + 1 as the number of classes");
    n->excludes(i);
}

LabelSet load_labels(const std::string& path, const ClassCount& cc) {
    if (!cc.num_classes && !cc.infer) fail_usage("pass --num-classes or --infer-classes");
    LabelSet labels = io::read_labels(path, cc.num_classes);
    if (labels.size() == 0) fail_data("label file '" + path + "' is empty");
    return labels;
}

void require_rows(std::size_t a, std::size_t b, const std::string& what) {
    if (a != b) fail_data(what + ": " + std::to_string(a) + " vs " + std::to_string(b) + " rows");
}

CLI::Validator non_negative(const std::string& symbol) {
    return CLI::Validator(
        [symbol](std::string& s) -> std::string {
            double v = 0.0;
            if (!CLI::detail::lexical_cast(s, v)) return "expected a number";
            if (!(v >= 0.0)) return "constraint " + symbol + " >= 0 violated by " + s;
            return {};
        },
        symbol + " >= 0", "NONNEGATIVE");
}

CLI::Validator unit_interval(const std::string& symbol) {
    return CLI::Validator(
        [symbol](std::string& s) -> std::string {
            double v = 0.0;
            if (!CLI::detail::lexical_cast(s, v)) return "expected a number";
            if (!(v >= 0.0 && v <= 1.0)) return "constraint 0 <= " + symbol + " <= 1 violated by " + s;
            return {};
        },
        "0 <= " + symbol + " <= 1", "UNIT");
}

PrototypeSet prototypes_from_matrix(Matrix protos, const LabelSet& labels) {
    if (protos.rows() != labels.num_classes()) {
        fail_data("prototype matrix has " + std::to_string(protos.rows()) + " rows but there are " +
                  std::to_string(labels.num_classes()) + " classes");
    }
    PrototypeSet set;
    set.counts.assign(labels.counts().begin(), labels.counts().end());
    set.valid.resize(protos.rows());
    for (std::size_t c = 0; c < protos.rows(); ++c) {
        bool nonzero = false;
        for (double v : protos.row(c)) nonzero = nonzero || v != 0.0;
        set.valid[c] = nonzero && set.counts[c] > 0;
    }
    set.prototypes = std::move(protos);
    return set;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Class-similarity label smoothing, calibration-corrected pseudo-labels and a distillation simulator.\n"
                 "Matrices are CSV (one row per line) or binary when the path ends in .bin.\n"
                 "Environment: CSLS_LOG=1 prints progress notes to standard error (default 0, silent).\n"
                 "Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.",
                 "csls"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("csls ") + kVersion);
    app.fallthrough();

    auto add_version = [](CLI::App* cmd) { cmd->set_version_flag("--version", std::string("csls ") + kVersion); };

    // prototypes
    std::string emb_path, labels_path;
    ClassCount cc;
    Output out;
    auto* cmd_proto = app.add_subcommand("prototypes", "Mean embedding per class (C x D matrix)");
    cmd_proto->add_option("--embeddings,-e", emb_path, "N x D embedding matrix")->required();
    cmd_proto->add_option("--labels,-l", labels_path, "Label file, one class index per line")->required();
    add_class_count(cmd_proto, cc);
    add_output(cmd_proto, out, true);
    add_version(cmd_proto);

    // similarity
    std::string proto_path;
    double gamma = 1.5;
    bool raw = false;
    auto* cmd_sim = app.add_subcommand("similarity", "Prototype cosine similarity, modulated by class counts");
    auto* sim_proto = cmd_sim->add_option("--prototypes,-p", proto_path, "C x D prototype matrix");
    auto* sim_emb = cmd_sim->add_option("--embeddings,-e", emb_path, "N x D embeddings (prototypes computed here)");
    sim_proto->excludes(sim_emb);
    cmd_sim->add_option("--labels,-l", labels_path, "Label file; supplies the class counts")->required();
    cmd_sim->add_option("--gamma", gamma, "Rare-class boost exponent (gamma >= 0)")
        ->check(non_negative("gamma"))
        ->capture_default_str();
    cmd_sim->add_flag("--raw", raw, "Write the plain cosine matrix instead of the modulated one");
    add_class_count(cmd_sim, cc);
    add_output(cmd_sim, out, true);
    add_version(cmd_sim);

    // smooth
    std::string sim_path, targets_path, orientation = "row";
    double epsilon = 0.1;
    bool uniform = false;
    auto* cmd_smooth = app.add_subcommand("smooth", "Smoothed soft targets from labels and a similarity matrix");
    auto* sm_labels = cmd_smooth->add_option("--labels,-l", labels_path, "Label file, one class index per line");
    auto* sm_targets = cmd_smooth->add_option("--targets,-t", targets_path, "N x C one-hot target matrix");
    sm_labels->excludes(sm_targets);
    cmd_smooth->add_option("--similarity,-s", sim_path, "C x C modulated similarity (row-stochastic)");
    cmd_smooth->add_option("--epsilon", epsilon, "Smoothing weight (0 <= epsilon <= 1)")
        ->check(unit_interval("epsilon"))
        ->capture_default_str();
    cmd_smooth->add_option("--orientation", orientation, "Which slice of the similarity matrix to use")
        ->check(CLI::IsMember({"row", "column-renormalized"}))
        ->capture_default_str();
    cmd_smooth->add_flag("--uniform", uniform, "Uniform smoothing; --similarity is not needed");
    add_class_count(cmd_smooth, cc);
    add_output(cmd_smooth, out, true);
    add_version(cmd_smooth);

    // calibrate
    std::string scores_path, grouping = "predicted-class";
    std::size_t bins = 10;
    auto* cmd_cal = app.add_subcommand("calibrate", "Per-class calibration report (JSON)");
    cmd_cal->add_option("--scores,-s", scores_path, "N x C predicted probabilities")->required();
    cmd_cal->add_option("--labels,-l", labels_path, "True labels, one per line")->required();
    cmd_cal->add_option("--bins", bins, "Number of confidence bins")->check(CLI::PositiveNumber)->capture_default_str();
    cmd_cal->add_option("--grouping", grouping, "Which class each sample counts toward")
        ->check(CLI::IsMember({"predicted-class", "true-class"}))
        ->capture_default_str();
    add_output(cmd_cal, out, false);
    add_version(cmd_cal);

    // correct
    std::string report_path, repair = "clamp-renormalize";
    double lambda = 2.0;
    auto* cmd_corr = app.add_subcommand("correct", "Add lambda * delta to teacher scores");
    cmd_corr->add_option("--scores,-s", scores_path, "N x C teacher probabilities")->required();
    cmd_corr->add_option("--report,-r", report_path, "Calibration report from `calibrate`")->required();
    cmd_corr->add_option("--lambda", lambda, "Correction strength (lambda >= 0)")
        ->check(non_negative("lambda"))
        ->capture_default_str();
    cmd_corr->add_option("--repair", repair, "clamp-renormalize, or none for raw values")
        ->check(CLI::IsMember({"clamp-renormalize", "none"}))
        ->capture_default_str();
    add_output(cmd_corr, out, true);
    add_version(cmd_corr);

    // filter
    double threshold = 0.5;
    std::string kept_path;
    auto* cmd_filter = app.add_subcommand("filter", "Keep rows whose top score reaches the threshold");
    cmd_filter->add_option("--scores,-s", scores_path, "N x C pseudo-label matrix")->required();
    cmd_filter->add_option("--threshold", threshold, "Confidence threshold tau")
        ->check(unit_interval("threshold"))
        ->capture_default_str();
    cmd_filter->add_option("--kept", kept_path, "Also write the kept row indices here");
    add_output(cmd_filter, out, true);
    add_version(cmd_filter);

    // retrieve
    std::string pool_path, queries_path;
    std::size_t k = 64;
    auto* cmd_ret = app.add_subcommand("retrieve", "Exact cosine k-NN of queries in a pool, deduplicated");
    cmd_ret->add_option("--pool,-p", pool_path, "P x D pool embeddings")->required();
    cmd_ret->add_option("--queries,-q", queries_path, "Q x D query embeddings")->required();
    cmd_ret->add_option("--k", k, "Neighbors per query")->check(CLI::PositiveNumber)->capture_default_str();
    add_output(cmd_ret, out, false);
    add_version(cmd_ret);

    // simulate
    std::string config_path, seeds, fractions, variants, csv_path;
    std::optional<Seed> seed;
    std::vector<std::string> settings;
    auto* cmd_simu = app.add_subcommand("simulate", "Run the synthetic teacher-student ablation (JSON)");
    cmd_simu->add_option("--config,-c", config_path, "key=value file; flags below override it");
    cmd_simu->add_option("--set", settings, "Extra key=value setting (repeatable)");
    auto* simu_seed = cmd_simu->add_option("--seed", seed, "Single seed");
    auto* simu_seeds = cmd_simu->add_option("--seeds", seeds, "Comma-separated seeds (default 1,2,3,4,5)");
    simu_seed->excludes(simu_seeds);
    cmd_simu->add_option("--fractions", fractions, "Comma-separated label fractions (default 0.05,0.25,1)");
    cmd_simu->add_option("--variants", variants, "Comma-separated variant names (default all)");
    cmd_simu->add_option("--epsilon", epsilon, "Smoothing weight")->check(unit_interval("epsilon"));
    cmd_simu->add_option("--gamma", gamma, "Rare-class boost exponent")->check(non_negative("gamma"));
    cmd_simu->add_option("--lambda", lambda, "Correction strength")->check(non_negative("lambda"));
    cmd_simu->add_option("--bins", bins, "Calibration bins")->check(CLI::PositiveNumber);
    cmd_simu->add_option("--threshold", threshold, "Pseudo-label threshold")->check(unit_interval("threshold"));
    cmd_simu->add_option("--k", k, "Retrieval neighbors per rare-class query (0 = whole pool)");
    cmd_simu->add_option("--csv", csv_path, "Also write one CSV line per run here");
    add_output(cmd_simu, out, false);
    add_version(cmd_simu);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_proto->parsed()) {
            const Matrix emb = load_matrix(emb_path, "embedding matrix");
            const LabelSet labels = load_labels(labels_path, cc);
            require_rows(emb.rows(), labels.size(), "embeddings and labels differ in length");
            const PrototypeSet protos = compute_prototypes(emb, labels);
            for (std::size_t c = 0; c < protos.num_classes(); ++c) {
                if (!protos.valid[c]) std::cerr << "csls: warning: class " << c << " has no usable prototype\n";
            }
            emit_matrix(out, protos.prototypes);
        } else if (cmd_sim->parsed()) {
            if (proto_path.empty() == emb_path.empty()) fail_usage("pass exactly one of --prototypes or --embeddings");
            const LabelSet labels = load_labels(labels_path, cc);
            PrototypeSet protos;
            if (!emb_path.empty()) {
                const Matrix emb = load_matrix(emb_path, "embedding matrix");
                require_rows(emb.rows(), labels.size(), "embeddings and labels differ in length");
                protos = compute_prototypes(emb, labels);
            } else {
                protos = prototypes_from_matrix(load_matrix(proto_path, "prototype matrix"), labels);
            }
            SimilarityMatrix sim = cosine_similarity(protos);
            if (raw) {
                emit_matrix(out, sim.raw);
            } else {
                sim = modulate_similarity(std::move(sim), protos.counts, gamma);
                emit_matrix(out, *sim.modulated);
            }
        } else if (cmd_smooth->parsed()) {
            if (labels_path.empty() == targets_path.empty()) fail_usage("pass exactly one of --labels or --targets");
            SoftLabels targets;
            if (!labels_path.empty()) {
                targets = one_hot(load_labels(labels_path, cc));
            } else {
                targets = SoftLabels(load_matrix(targets_path, "target matrix"));
            }
            SmoothingConfig scfg;
            scfg.epsilon = epsilon;
            scfg.mode = uniform ? SmoothingMode::uniform : SmoothingMode::similarity;
            scfg.orientation = orientation == "row" ? Orientation::row : Orientation::column_renormalized;
            std::optional<SimilarityMatrix> sim;
            if (!uniform) {
                if (sim_path.empty()) fail_usage("--similarity is required unless --uniform is given");
                Matrix s = load_matrix(sim_path, "similarity matrix");
                // Rows were row-stochastic before being written out.
                Matrix s_norm = SoftLabels::normalized(std::move(s), kScoreTolerance).matrix();
                sim = SimilarityMatrix{Matrix(s_norm.rows(), s_norm.cols()), std::move(s_norm), 0.0};
            }
            emit_matrix(out, smooth(targets, sim ? &*sim : nullptr, scfg).matrix());
        } else if (cmd_cal->parsed()) {
            const SoftLabels scores = load_scores(scores_path);
            const LabelSet labels = io::read_labels(labels_path, scores.cols());
            require_rows(scores.rows(), labels.size(), "scores and labels differ in length");
            const CalibrationReport report =
                calibrate(scores, labels, BinningConfig{bins}, grouping_from_string(grouping));
            info("ece " + io::format_double(report.ece));
            emit_text(out, dump_json(report_to_json(report)));
        } else if (cmd_corr->parsed()) {
            const SoftLabels scores = load_scores(scores_path);
            Json doc;
            try {
                doc = Json::parse(io::read_text(report_path));
            } catch (const Json::exception& e) {
                fail_data("calibration report '" + report_path + "' is not valid JSON: " + e.what());
            }
            const CalibrationReport report = report_from_json(doc);
            if (repair == "none") {
                emit_matrix(out, correct_pseudo_labels_raw(scores, report.delta, lambda));
            } else {
                const CorrectedLabels corrected = correct_pseudo_labels(scores, report.delta, lambda);
                if (!corrected.fallback_rows.empty()) {
                    std::cerr << "csls: warning: " << corrected.fallback_rows.size()
                              << " rows clamped to zero and kept the teacher scores\n";
                }
                emit_matrix(out, corrected.labels.matrix());
            }
        } else if (cmd_filter->parsed()) {
            const PseudoLabelBatch batch = filter_by_confidence(load_scores(scores_path), threshold);
            const auto kept = batch.kept_indices();
            info("kept " + std::to_string(kept.size()) + " of " + std::to_string(batch.corrected.rows()) + " rows");
            Matrix rows(kept.size(), batch.corrected.cols());
            for (std::size_t r = 0; r < kept.size(); ++r) {
                const auto src = batch.corrected.row(kept[r]);
                std::copy(src.begin(), src.end(), rows.row(r).begin());
            }
            emit_matrix(out, rows);
            if (!kept_path.empty()) io::write_indices(kept, kept_path);
        } else if (cmd_ret->parsed()) {
            const Matrix pool = load_matrix(pool_path, "pool matrix");
            const Matrix queries = load_matrix(queries_path, "query matrix");
            const auto idx = retrieve_unlabeled(pool, queries, k);
            std::string text;
            for (std::size_t i : idx) text += std::to_string(i) + '\n';
            emit_text(out, text);
        } else if (cmd_simu->parsed()) {
            AblationConfig cfg;
            if (!config_path.empty()) apply_config_file(cfg, io::read_text(config_path));
            for (const std::string& kv : settings) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) fail_usage("--set expects key=value, got '" + kv + "'");
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (seed) cfg.set("seed", std::to_string(*seed));
            if (!seeds.empty()) cfg.set("seeds", seeds);
            if (!fractions.empty()) cfg.set("label_fractions", fractions);
            if (!variants.empty()) cfg.set("variants", variants);
            if (cmd_simu->count("--epsilon")) cfg.epsilon = epsilon;
            if (cmd_simu->count("--gamma")) cfg.gamma = gamma;
            if (cmd_simu->count("--lambda")) cfg.lambda = lambda;
            if (cmd_simu->count("--bins")) cfg.num_bins = bins;
            if (cmd_simu->count("--threshold")) cfg.train.threshold = threshold;
            if (cmd_simu->count("--k")) cfg.retrieval_k = k;
            cfg.validate();
            info("running " + std::to_string(cfg.seeds.size() * cfg.label_fractions.size() * cfg.variants.size()) +
                 " trainings");
            const ExperimentResult result = run_ablation(cfg);
            emit_text(out, dump_json(result_to_json(result)));
            if (!csv_path.empty()) io::write_text(csv_path, result_to_csv(result));
        }
    } catch (const Error& e) {
        std::cerr << "csls: error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::bad_alloc&) {
        std::cerr << "csls: error: out of memory\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "csls: error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
