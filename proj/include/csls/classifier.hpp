#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csls/calibration.hpp"
#include "csls/labels.hpp"
#include "csls/matrix.hpp"
#include "csls/rng.hpp"

namespace csls {

/// Softmax regression head: p(x) = softmax(W x + b).
struct LinearClassifier {
    Matrix weights;            // C x D
    std::vector<double> bias;  // C

    static LinearClassifier zeros(std::size_t num_classes, std::size_t dim);

    std::size_t num_classes() const noexcept { return weights.rows(); }
    std::size_t dim() const noexcept { return weights.cols(); }

    friend bool operator==(const LinearClassifier&, const LinearClassifier&) = default;
};

Matrix logits(const LinearClassifier& clf, const Matrix& x);
SoftLabels softmax_forward(const LinearClassifier& clf, const Matrix& x);

/// Probabilities are floored here before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over rows of -sum_c target * log(pred).
double cross_entropy_soft(const SoftLabels& pred, const SoftLabels& target);

/// d(cross_entropy_soft) / d(logits) = (pred - target) / N.
Matrix cross_entropy_logit_grad(const SoftLabels& pred, const SoftLabels& target);

struct TrainConfig {
    double learning_rate = 1.0;
    std::size_t epochs = 150;
    double l2_weight = 1e-3;
    double unsup_loss_weight = 1.0;
    double ema_decay = 0.999;  // 0 disables the teacher update
    double weak_noise_sigma = 0.05;
    double strong_noise_sigma = 0.3;
    double threshold = 0.5;      // pseudo-label confidence threshold
    bool cosine_schedule = false;
    bool recompute_delta = false;  // refresh the correction vector every epoch
    Seed seed = 0;

    void validate() const;
    double rate_at(std::size_t epoch) const;
};

struct TrainResult {
    LinearClassifier model;
    std::vector<double> loss_curve;  // objective before each epoch's step
};

/// Full-batch gradient descent on mean soft cross-entropy plus
/// (l2_weight / 2) * |W|^2, from `init` or from zeros.
TrainResult train_supervised(const Matrix& x, const SoftLabels& targets, const TrainConfig& cfg,
                             const LinearClassifier* init = nullptr);

enum class PseudoLabelMode { onehot, soft, soft_corrected };

std::string to_string(PseudoLabelMode m);

/// Held-out data used to refresh the correction vector when
/// TrainConfig::recompute_delta is set.
struct DeltaSource {
    const Matrix* x = nullptr;
    const LabelSet* y = nullptr;
    BinningConfig bins{};
    double lambda = 2.0;
};

struct SemiSupervisedResult {
    LinearClassifier student;
    LinearClassifier teacher;  // after EMA updates
    std::vector<double> loss_curve;
    std::vector<std::size_t> kept_per_epoch;

    std::size_t total_kept() const noexcept;
};

/// Teacher-student distillation. Per epoch:
///   1. the teacher scores the unlabeled rows plus weak Gaussian noise;
///   2. pseudo-labels: argmax one-hot, raw soft scores, or soft scores
///      corrected by lambda * delta (clamped and renormalized);
///   3. rows whose confidence is below cfg.threshold are dropped: the
///      teacher's top score for one-hot and soft, the corrected top score
///      for soft_corrected;
///   4. the student takes one step on the supervised loss plus
///      unsup_loss_weight times the pseudo-label loss on the unlabeled rows
///      plus strong noise;
///   5. teacher <- decay * teacher + (1 - decay) * student.
/// The student starts from zeros, so with nothing kept it reproduces
/// train_supervised bit for bit.
SemiSupervisedResult train_semisupervised(const Matrix& labeled_x, const SoftLabels& labeled_targets,
                                          const Matrix& unlabeled_x, const LinearClassifier& teacher,
                                          PseudoLabelMode mode, std::span<const double> delta, double lambda,
                                          const TrainConfig& cfg, const DeltaSource* refresh = nullptr);

/// teacher <- decay * teacher + (1 - decay) * student, elementwise.
void ema_update(LinearClassifier& teacher, const LinearClassifier& student, double decay);

struct Metrics {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;  // NaN for classes absent from the test set
    std::optional<double> rare_accuracy;     // absent when there are no rare classes
    double ece = 0.0;
};

Metrics evaluate(const LinearClassifier& clf, const Matrix& x, const LabelSet& y,
                 std::span<const std::size_t> rare, const BinningConfig& bins);

}  // namespace csls
