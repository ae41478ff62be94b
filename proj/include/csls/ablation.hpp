#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "csls/classifier.hpp"
#include "csls/json.hpp"
#include "csls/smoothing.hpp"
#include "csls/synthetic.hpp"

namespace csls {

enum class Variant {
    supervised_onehot,
    supervised_uniform_smooth,
    supervised_similarity_smooth,        // gamma = 0
    supervised_similarity_smooth_gamma,  // gamma = AblationConfig::gamma; also the distillation teacher
    semisup_onehot,
    semisup_soft,
    semisup_soft_correction,
};

inline constexpr Variant kAllVariants[] = {
    Variant::supervised_onehot,  Variant::supervised_uniform_smooth, Variant::supervised_similarity_smooth,
    Variant::supervised_similarity_smooth_gamma, Variant::semisup_onehot, Variant::semisup_soft,
    Variant::semisup_soft_correction,
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
bool is_semisupervised(Variant v);

struct AblationConfig {
    SyntheticDatasetSpec spec;
    TrainConfig train;
    double epsilon = 0.1;
    double gamma = 1.5;
    double lambda = 2.0;
    Orientation orientation = Orientation::row;
    std::size_t num_bins = 10;
    /// When > 0, distill only on the pool rows retrieved as the k cosine
    /// nearest neighbors of rare-class training instances; 0 uses the pool.
    std::size_t retrieval_k = 64;
    std::vector<double> label_fractions{0.05, 0.25, 1.0};
    std::vector<Seed> seeds{1, 2, 3, 4, 5};
    std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};

    void validate() const;

    /// Applies one `key=value` setting (same keys as the JSON "spec" and
    /// "config" objects). Throws a usage error for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
};

/// Parses a flat `key=value` file; blank lines and `#` comments are ignored.
void apply_config_file(AblationConfig& cfg, const std::string& text);

struct RunRecord {
    Variant variant{};
    double label_fraction = 1.0;
    Seed seed = 0;
    Metrics metrics;          // the trained model (student for semisup variants)
    double ece_teacher = 0.0; // the pretrained teacher; equals metrics.ece for supervised variants
    std::size_t pseudo_labels_kept = 0;
};

struct SummaryRow {
    Variant variant{};
    double label_fraction = 1.0;
    std::size_t runs = 0;
    double accuracy_mean = 0.0, accuracy_std = 0.0;
    std::optional<double> rare_accuracy_mean, rare_accuracy_std;
    double ece_teacher_mean = 0.0;
    double ece_student_mean = 0.0, ece_student_std = 0.0;
};

struct ExperimentResult {
    AblationConfig config;
    std::vector<std::size_t> rare_classes;
    std::vector<RunRecord> runs;  // seed-major, then fraction, then variant order

    std::vector<SummaryRow> summary() const;
    const SummaryRow* find(const std::vector<SummaryRow>& rows, Variant v, double fraction) const;
};

/// Trains and evaluates every configured variant at every label fraction for
/// every seed. Seeds run in parallel; results are merged in declared order.
ExperimentResult run_ablation(const AblationConfig& cfg);

Json config_to_json(const AblationConfig& cfg);
Json result_to_json(const ExperimentResult& result);
/// One line per run: variant,label_fraction,seed,accuracy,rare_accuracy,ece_teacher,ece_student,pseudo_labels_kept
std::string result_to_csv(const ExperimentResult& result);

}  // namespace csls
