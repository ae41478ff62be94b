#include "csls/ablation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <sstream>

#include "csls/error.hpp"
#include "csls/io.hpp"
#include "csls/pseudo_label.hpp"
#include "csls/prototypes.hpp"

namespace csls {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::supervised_onehot: return "supervised-onehot";
        case Variant::supervised_uniform_smooth: return "supervised-uniform-smooth";
        case Variant::supervised_similarity_smooth: return "supervised-similarity-smooth";
        case Variant::supervised_similarity_smooth_gamma: return "supervised-similarity-smooth+γ";
        case Variant::semisup_onehot: return "semisup-onehot";
        case Variant::semisup_soft: return "semisup-soft";
        case Variant::semisup_soft_correction: return "semisup-soft+correction";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == s) return v;
    }
    if (s == "supervised-similarity-smooth+gamma") return Variant::supervised_similarity_smooth_gamma;
    fail_usage("unknown variant '" + s + "'");
}

bool is_semisupervised(Variant v) {
    return v == Variant::semisup_onehot || v == Variant::semisup_soft || v == Variant::semisup_soft_correction;
}

void AblationConfig::validate() const {
    spec.validate();
    train.validate();
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail_usage("epsilon must lie in [0, 1]");
    if (!(gamma >= 0.0)) fail_usage("gamma must be >= 0");
    if (!(lambda >= 0.0)) fail_usage("lambda must be >= 0");
    if (num_bins == 0) fail_usage("num_bins must be positive");
    if (label_fractions.empty()) fail_usage("at least one label fraction is required");
    for (double f : label_fractions) {
        if (!(f > 0.0 && f <= 1.0)) fail_usage("label fractions must lie in (0, 1]");
    }
    if (seeds.empty()) fail_usage("at least one seed is required");
    if (variants.empty()) fail_usage("at least one variant is required");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const std::string t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        fail_usage("config key '" + key + "': cannot parse '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    fail_usage("config key '" + key + "': expected true or false, got '" + text + "'");
}

Orientation orientation_from_string(const std::string& s) {
    if (s == "row") return Orientation::row;
    if (s == "column-renormalized" || s == "column") return Orientation::column_renormalized;
    fail_usage("unknown orientation '" + s + "' (expected row or column-renormalized)");
}

std::string to_string(Orientation o) { return o == Orientation::row ? "row" : "column-renormalized"; }

}  // namespace

void AblationConfig::set(const std::string& key, const std::string& value) {
    using Setter = std::function<void(const std::string&)>;
    auto size = [&](std::size_t& field) { return Setter([&field, key](const std::string& v) { field = parse_number<std::size_t>(key, v); }); };
    auto real = [&](double& field) { return Setter([&field, key](const std::string& v) { field = parse_number<double>(key, v); }); };
    auto flag = [&](bool& field) { return Setter([&field, key](const std::string& v) { field = parse_bool(key, v); }); };

    const std::map<std::string, Setter> setters = {
        {"num_classes", size(spec.num_classes)},
        {"zipf_exponent", real(spec.zipf_exponent)},
        {"total_labeled", size(spec.total_labeled)},
        {"total_unlabeled", size(spec.total_unlabeled)},
        {"dim", size(spec.dim)},
        {"cluster_spread", real(spec.cluster_spread)},
        {"class_center_scale", real(spec.class_center_scale)},
        {"group_size", size(spec.group_size)},
        {"sibling_similarity", real(spec.sibling_similarity)},
        {"test_per_class", size(spec.test_per_class)},
        {"validation_fraction", real(spec.validation_fraction)},
        {"rare_threshold", size(spec.rare_threshold)},
        {"seed", [this, key](const std::string& v) {
             spec.seed = parse_number<Seed>(key, v);
             seeds = {spec.seed};
         }},
        {"learning_rate", real(train.learning_rate)},
        {"epochs", size(train.epochs)},
        {"l2_weight", real(train.l2_weight)},
        {"unsup_loss_weight", real(train.unsup_loss_weight)},
        {"ema_decay", real(train.ema_decay)},
        {"weak_noise_sigma", real(train.weak_noise_sigma)},
        {"strong_noise_sigma", real(train.strong_noise_sigma)},
        {"threshold", real(train.threshold)},
        {"cosine_schedule", flag(train.cosine_schedule)},
        {"recompute_delta", flag(train.recompute_delta)},
        {"epsilon", real(epsilon)},
        {"gamma", real(gamma)},
        {"lambda", real(lambda)},
        {"orientation", [this](const std::string& v) { orientation = orientation_from_string(trim(v)); }},
        {"num_bins", size(num_bins)},
        {"retrieval_k", size(retrieval_k)},
        {"label_fractions", [this, key](const std::string& v) {
             label_fractions.clear();
             for (const auto& item : split_list(v)) label_fractions.push_back(parse_number<double>(key, item));
         }},
        {"seeds", [this, key](const std::string& v) {
             seeds.clear();
             for (const auto& item : split_list(v)) seeds.push_back(parse_number<Seed>(key, item));
         }},
        {"variants", [this](const std::string& v) {
             variants.clear();
             for (const auto& item : split_list(v)) variants.push_back(variant_from_string(item));
         }},
    };
    const auto it = setters.find(trim(key));
    if (it == setters.end()) fail_usage("unknown config key '" + key + "'");
    it->second(value);
}

void apply_config_file(AblationConfig& cfg, const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail_usage("config line " + std::to_string(line_no) + ": expected key=value");
        }
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

namespace {

// All variants for one seed, fraction-major.
std::vector<RunRecord> run_seed(const AblationConfig& cfg, Seed seed, std::vector<std::size_t>& rare_out) {
    SyntheticDatasetSpec spec = cfg.spec;
    spec.seed = seed;
    const SyntheticData data = generate_synthetic(spec);
    const std::vector<std::size_t> rare = rare_classes(data.train.y, spec.rare_threshold);
    rare_out = rare;

    TrainConfig train = cfg.train;
    train.seed = seed;
    const BinningConfig bins{cfg.num_bins};

    bool need_teacher = false;
    for (Variant v : cfg.variants) {
        need_teacher = need_teacher || is_semisupervised(v) || v == Variant::supervised_similarity_smooth_gamma;
    }

    std::vector<RunRecord> out;
    for (double fraction : cfg.label_fractions) {
        const LabeledSplit split = label_fraction_subset(data.train, fraction);
        const SoftLabels hot = one_hot(split.y);

        auto record = [&](Variant v, const LinearClassifier& model) {
            RunRecord r;
            r.variant = v;
            r.label_fraction = fraction;
            r.seed = seed;
            r.metrics = evaluate(model, data.test.x, data.test.y, rare, bins);
            r.ece_teacher = r.metrics.ece;
            return r;
        };
        auto similarity_targets = [&](double gamma) {
            const SimilarityMatrix sim = class_similarity(split.x, split.y, gamma);
            return smooth_similarity(hot, sim, SmoothingConfig{cfg.epsilon, SmoothingMode::similarity, cfg.orientation});
        };

        std::optional<LinearClassifier> teacher;
        std::optional<SoftLabels> teacher_targets;
        if (need_teacher) {
            teacher_targets = similarity_targets(cfg.gamma);
            teacher = train_supervised(split.x, *teacher_targets, train).model;
        }

        std::optional<std::vector<double>> delta;
        std::optional<Matrix> unlabeled;
        double teacher_ece = 0.0;

        for (Variant v : cfg.variants) {
            switch (v) {
                case Variant::supervised_onehot:
                    out.push_back(record(v, train_supervised(split.x, hot, train).model));
                    break;
                case Variant::supervised_uniform_smooth:
                    out.push_back(record(v, train_supervised(split.x, smooth_uniform(hot, cfg.epsilon), train).model));
                    break;
                case Variant::supervised_similarity_smooth:
                    out.push_back(record(v, train_supervised(split.x, similarity_targets(0.0), train).model));
                    break;
                case Variant::supervised_similarity_smooth_gamma:
                    out.push_back(record(v, *teacher));
                    break;
                case Variant::semisup_onehot:
                case Variant::semisup_soft:
                case Variant::semisup_soft_correction: {
                    if (!delta) {
                        const SoftLabels val_scores = softmax_forward(*teacher, data.validation.x);
                        delta = calibrate(val_scores, data.validation.y, bins).delta;
                        teacher_ece = evaluate(*teacher, data.test.x, data.test.y, rare, bins).ece;
                        if (cfg.retrieval_k > 0 && data.unlabeled.rows() > 0) {
                            std::vector<std::size_t> query_rows;
                            for (std::size_t n = 0; n < split.y.size(); ++n) {
                                if (std::find(rare.begin(), rare.end(), split.y[n]) != rare.end()) query_rows.push_back(n);
                            }
                            Matrix queries(query_rows.size(), split.x.cols());
                            for (std::size_t i = 0; i < query_rows.size(); ++i) {
                                std::copy_n(split.x.row(query_rows[i]).begin(), split.x.cols(), queries.row(i).begin());
                            }
                            const std::size_t k = std::min(cfg.retrieval_k, data.unlabeled.rows());
                            const auto picked = retrieve_unlabeled(data.unlabeled, queries, k);
                            Matrix sub(picked.size(), data.unlabeled.cols());
                            for (std::size_t i = 0; i < picked.size(); ++i) {
                                std::copy_n(data.unlabeled.row(picked[i]).begin(), data.unlabeled.cols(), sub.row(i).begin());
                            }
                            unlabeled = std::move(sub);
                        } else {
                            unlabeled = data.unlabeled;
                        }
                    }
                    const PseudoLabelMode mode = v == Variant::semisup_onehot ? PseudoLabelMode::onehot
                                                 : v == Variant::semisup_soft ? PseudoLabelMode::soft
                                                                              : PseudoLabelMode::soft_corrected;
                    const DeltaSource refresh{&data.validation.x, &data.validation.y, bins, cfg.lambda};
                    const SemiSupervisedResult res = train_semisupervised(split.x, *teacher_targets, *unlabeled, *teacher,
                                                                          mode, *delta, cfg.lambda, train, &refresh);
                    RunRecord r = record(v, res.student);
                    r.ece_teacher = teacher_ece;
                    r.pseudo_labels_kept = res.total_kept();
                    out.push_back(std::move(r));
                    break;
                }
            }
        }
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for fewer than two values.
double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentResult run_ablation(const AblationConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.seeds.size();
    std::vector<std::vector<RunRecord>> per_seed(n);
    std::vector<std::vector<std::size_t>> rare(n);
    std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            per_seed[i] = run_seed(cfg, cfg.seeds[i], rare[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ExperimentResult result;
    result.config = cfg;
    result.rare_classes = rare.front();
    for (auto& runs : per_seed) {
        for (auto& r : runs) result.runs.push_back(std::move(r));
    }
    return result;
}

std::vector<SummaryRow> ExperimentResult::summary() const {
    std::vector<SummaryRow> rows;
    for (double f : config.label_fractions) {
        for (Variant v : config.variants) {
            std::vector<double> acc, rare, ece_t, ece_s;
            for (const RunRecord& r : runs) {
                if (r.variant != v || r.label_fraction != f) continue;
                acc.push_back(r.metrics.accuracy);
                if (r.metrics.rare_accuracy) rare.push_back(*r.metrics.rare_accuracy);
                ece_t.push_back(r.ece_teacher);
                ece_s.push_back(r.metrics.ece);
            }
            SummaryRow s;
            s.variant = v;
            s.label_fraction = f;
            s.runs = acc.size();
            s.accuracy_mean = mean_of(acc);
            s.accuracy_std = std_of(acc);
            if (!rare.empty()) {
                s.rare_accuracy_mean = mean_of(rare);
                s.rare_accuracy_std = std_of(rare);
            }
            s.ece_teacher_mean = mean_of(ece_t);
            s.ece_student_mean = mean_of(ece_s);
            s.ece_student_std = std_of(ece_s);
            rows.push_back(s);
        }
    }
    return rows;
}

const SummaryRow* ExperimentResult::find(const std::vector<SummaryRow>& rows, Variant v, double fraction) const {
    for (const SummaryRow& r : rows) {
        if (r.variant == v && r.label_fraction == fraction) return &r;
    }
    return nullptr;
}

Json config_to_json(const AblationConfig& cfg) {
    Json spec;
    spec["num_classes"] = cfg.spec.num_classes;
    spec["zipf_exponent"] = cfg.spec.zipf_exponent;
    spec["total_labeled"] = cfg.spec.total_labeled;
    spec["total_unlabeled"] = cfg.spec.total_unlabeled;
    spec["dim"] = cfg.spec.dim;
    spec["cluster_spread"] = cfg.spec.cluster_spread;
    spec["class_center_scale"] = cfg.spec.class_center_scale;
    spec["group_size"] = cfg.spec.group_size;
    spec["sibling_similarity"] = cfg.spec.sibling_similarity;
    spec["test_per_class"] = cfg.spec.test_per_class;
    spec["validation_fraction"] = cfg.spec.validation_fraction;
    spec["rare_threshold"] = cfg.spec.rare_threshold;
    spec["seed"] = cfg.spec.seed;

    Json c;
    c["learning_rate"] = cfg.train.learning_rate;
    c["epochs"] = cfg.train.epochs;
    c["l2_weight"] = cfg.train.l2_weight;
    c["unsup_loss_weight"] = cfg.train.unsup_loss_weight;
    c["ema_decay"] = cfg.train.ema_decay;
    c["weak_noise_sigma"] = cfg.train.weak_noise_sigma;
    c["strong_noise_sigma"] = cfg.train.strong_noise_sigma;
    c["threshold"] = cfg.train.threshold;
    c["cosine_schedule"] = cfg.train.cosine_schedule;
    c["recompute_delta"] = cfg.train.recompute_delta;
    c["epsilon"] = cfg.epsilon;
    c["gamma"] = cfg.gamma;
    c["lambda"] = cfg.lambda;
    c["orientation"] = to_string(cfg.orientation);
    c["num_bins"] = cfg.num_bins;
    c["retrieval_k"] = cfg.retrieval_k;
    c["label_fractions"] = cfg.label_fractions;
    c["seeds"] = cfg.seeds;
    Json variants = Json::array();
    for (Variant v : cfg.variants) variants.push_back(to_string(v));
    c["variants"] = std::move(variants);

    Json doc;
    doc["spec"] = std::move(spec);
    doc["config"] = std::move(c);
    return doc;
}

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json result_to_json(const ExperimentResult& result) {
    Json doc = config_to_json(result.config);
    Json runs = Json::array();
    for (const RunRecord& r : result.runs) {
        Json j;
        j["variant"] = to_string(r.variant);
        j["label_fraction"] = r.label_fraction;
        j["seed"] = r.seed;
        j["accuracy"] = r.metrics.accuracy;
        j["rare_accuracy"] = optional_json(r.metrics.rare_accuracy);
        j["ece_teacher"] = r.ece_teacher;
        j["ece_student"] = r.metrics.ece;
        j["per_class_accuracy"] = r.metrics.per_class_accuracy;
        j["pseudo_labels_kept"] = r.pseudo_labels_kept;
        runs.push_back(std::move(j));
    }
    doc["results"] = std::move(runs);

    Json summary = Json::array();
    for (const SummaryRow& s : result.summary()) {
        Json j;
        j["variant"] = to_string(s.variant);
        j["label_fraction"] = s.label_fraction;
        j["runs"] = s.runs;
        j["accuracy_mean"] = s.accuracy_mean;
        j["accuracy_std"] = s.accuracy_std;
        j["rare_accuracy_mean"] = optional_json(s.rare_accuracy_mean);
        j["rare_accuracy_std"] = optional_json(s.rare_accuracy_std);
        j["ece_teacher_mean"] = s.ece_teacher_mean;
        j["ece_student_mean"] = s.ece_student_mean;
        j["ece_student_std"] = s.ece_student_std;
        summary.push_back(std::move(j));
    }
    doc["summary"] = std::move(summary);
    doc["rare_classes"] = result.rare_classes;
    return doc;
}

std::string result_to_csv(const ExperimentResult& result) {
    std::string out = "variant,label_fraction,seed,accuracy,rare_accuracy,ece_teacher,ece_student,pseudo_labels_kept\n";
    for (const RunRecord& r : result.runs) {
        out += to_string(r.variant) + "," + io::format_double(r.label_fraction) + "," + std::to_string(r.seed) + "," +
               io::format_double(r.metrics.accuracy) + "," +
               (r.metrics.rare_accuracy ? io::format_double(*r.metrics.rare_accuracy) : std::string()) + "," +
               io::format_double(r.ece_teacher) + "," + io::format_double(r.metrics.ece) + "," +
               std::to_string(r.pseudo_labels_kept) + "\n";
    }
    return out;
}

}  // namespace csls
