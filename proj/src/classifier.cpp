#include "csls/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "csls/error.hpp"
#include "csls/kernels.hpp"
#include "csls/pseudo_label.hpp"

namespace csls {

LinearClassifier LinearClassifier::zeros(std::size_t num_classes, std::size_t dim) {
    return LinearClassifier{Matrix(num_classes, dim), std::vector<double>(num_classes, 0.0)};
}

Matrix logits(const LinearClassifier& clf, const Matrix& x) {
    if (x.cols() != clf.dim()) {
        fail_data("features have dimension " + std::to_string(x.cols()) + " but the classifier expects " +
                  std::to_string(clf.dim()));
    }
    return kernels::affine_nt(x, clf.weights, clf.bias);
}

SoftLabels softmax_forward(const LinearClassifier& clf, const Matrix& x) {
    Matrix z = logits(clf, x);
    kernels::softmax_rows(z);
    return SoftLabels(std::move(z));
}

namespace {

void check_same_shape(const SoftLabels& a, const SoftLabels& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail_data("prediction is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " but target is " +
                  std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

// Sum over rows of -sum_c t log max(p, floor).
double summed_cross_entropy(const Matrix& pred, const Matrix& target) {
    double total = 0.0;
    for (std::size_t n = 0; n < pred.rows(); ++n) {
        const auto p = pred.row(n);
        const auto t = target.row(n);
        for (std::size_t c = 0; c < p.size(); ++c) {
            if (t[c] != 0.0) total -= t[c] * std::log(std::max(p[c], kProbabilityFloor));
        }
    }
    return total;
}

double l2_penalty(const LinearClassifier& m, double l2) {
    double sq = 0.0;
    for (double w : m.weights.values()) sq += w * w;
    return 0.5 * l2 * sq;
}

// In place: pred <- weight * (pred - target).
void scaled_residual(Matrix& pred, const Matrix& target, double weight) {
    auto p = pred.values();
    const auto t = target.values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = weight * (p[i] - t[i]);
}

struct Gradient {
    Matrix w;
    std::vector<double> b;
};

// Gradient of weight * sum_rows CE(softmax(x W^T + b), target) given probabilities.
Gradient data_gradient(Matrix probs, const Matrix& target, const Matrix& x, double weight) {
    scaled_residual(probs, target, weight);
    return Gradient{kernels::matmul_tn(probs, x), kernels::column_sums(probs)};
}

void add_into(Gradient& acc, const Gradient& g) {
    auto a = acc.w.values();
    const auto b = g.w.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    for (std::size_t c = 0; c < acc.b.size(); ++c) acc.b[c] += g.b[c];
}

void descend(LinearClassifier& m, const Gradient& g, double rate, double l2) {
    auto w = m.weights.values();
    const auto gw = g.w.values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * (gw[i] + l2 * w[i]);
    for (std::size_t c = 0; c < m.bias.size(); ++c) m.bias[c] -= rate * g.b[c];
}

Matrix probabilities(const LinearClassifier& m, const Matrix& x) {
    Matrix z = kernels::affine_nt(x, m.weights, m.bias);
    kernels::softmax_rows(z);
    return z;
}

void check_finite_loss(double loss, std::size_t epoch) {
    if (!std::isfinite(loss)) {
        fail_numerical("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
}

Matrix with_noise(const Matrix& x, double sigma, Rng& rng) {
    Matrix out = x;
    if (sigma == 0.0) return out;
    for (double& v : out.values()) v += sigma * rng.normal();
    return out;
}

}  // namespace

double cross_entropy_soft(const SoftLabels& pred, const SoftLabels& target) {
    check_same_shape(pred, target);
    if (pred.rows() == 0) return 0.0;
    return summed_cross_entropy(pred.matrix(), target.matrix()) / static_cast<double>(pred.rows());
}

Matrix cross_entropy_logit_grad(const SoftLabels& pred, const SoftLabels& target) {
    check_same_shape(pred, target);
    Matrix g = pred.matrix();
    if (pred.rows() > 0) scaled_residual(g, target.matrix(), 1.0 / static_cast<double>(pred.rows()));
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail_usage("learning_rate must be > 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail_usage("ema_decay must lie in [0, 1)");
    if (!(l2_weight >= 0.0)) fail_usage("l2_weight must be >= 0");
    if (!(unsup_loss_weight >= 0.0)) fail_usage("unsup_loss_weight must be >= 0");
    if (!(weak_noise_sigma >= 0.0) || !(strong_noise_sigma >= 0.0)) fail_usage("noise sigmas must be >= 0");
    if (!(threshold >= 0.0 && threshold <= 1.0)) fail_usage("threshold must lie in [0, 1]");
}

double TrainConfig::rate_at(std::size_t epoch) const {
    if (!cosine_schedule || epochs == 0) return learning_rate;
    const double t = static_cast<double>(epoch) / static_cast<double>(epochs);
    return 0.5 * learning_rate * (1.0 + std::cos(std::numbers::pi * t));
}

TrainResult train_supervised(const Matrix& x, const SoftLabels& targets, const TrainConfig& cfg,
                             const LinearClassifier* init) {
    cfg.validate();
    if (x.rows() != targets.rows()) {
        fail_data("features have " + std::to_string(x.rows()) + " rows but targets have " +
                  std::to_string(targets.rows()));
    }
    TrainResult out{init ? *init : LinearClassifier::zeros(targets.cols(), x.cols()), {}};
    if (out.model.dim() != x.cols() || out.model.num_classes() != targets.cols()) {
        fail_data("initial classifier shape does not match the data");
    }
    if (x.rows() == 0) fail_data("no training rows");
    const double inv_n = 1.0 / static_cast<double>(x.rows());

    out.loss_curve.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Matrix p = probabilities(out.model, x);
        const double loss = summed_cross_entropy(p, targets.matrix()) * inv_n + l2_penalty(out.model, cfg.l2_weight);
        check_finite_loss(loss, epoch);
        out.loss_curve.push_back(loss);
        const Gradient g = data_gradient(std::move(p), targets.matrix(), x, inv_n);
        descend(out.model, g, cfg.rate_at(epoch), cfg.l2_weight);
    }
    return out;
}

std::string to_string(PseudoLabelMode m) {
    switch (m) {
        case PseudoLabelMode::onehot: return "onehot";
        case PseudoLabelMode::soft: return "soft";
        case PseudoLabelMode::soft_corrected: return "soft+correction";
    }
    return "?";
}

void ema_update(LinearClassifier& teacher, const LinearClassifier& student, double decay) {
    auto tw = teacher.weights.values();
    const auto sw = student.weights.values();
    for (std::size_t i = 0; i < tw.size(); ++i) tw[i] = decay * tw[i] + (1.0 - decay) * sw[i];
    for (std::size_t c = 0; c < teacher.bias.size(); ++c) {
        teacher.bias[c] = decay * teacher.bias[c] + (1.0 - decay) * student.bias[c];
    }
}

std::size_t SemiSupervisedResult::total_kept() const noexcept {
    std::size_t total = 0;
    for (std::size_t k : kept_per_epoch) total += k;
    return total;
}

SemiSupervisedResult train_semisupervised(const Matrix& labeled_x, const SoftLabels& labeled_targets,
                                          const Matrix& unlabeled_x, const LinearClassifier& teacher,
                                          PseudoLabelMode mode, std::span<const double> delta, double lambda,
                                          const TrainConfig& cfg, const DeltaSource* refresh) {
    cfg.validate();
    if (labeled_x.rows() != labeled_targets.rows()) fail_data("labeled features and targets differ in length");
    if (labeled_x.rows() == 0) fail_data("no labeled training rows");
    const std::size_t classes = labeled_targets.cols();
    if (teacher.num_classes() != classes || teacher.dim() != labeled_x.cols()) {
        fail_data("teacher shape does not match the labeled data");
    }
    if (unlabeled_x.rows() > 0 && unlabeled_x.cols() != labeled_x.cols()) {
        fail_data("unlabeled features have a different dimension");
    }
    std::vector<double> correction(delta.begin(), delta.end());
    if (mode == PseudoLabelMode::soft_corrected && correction.size() != classes) {
        fail_data("calibration correction needs a delta vector with one entry per class");
    }
    if (!(lambda >= 0.0)) fail_usage("lambda must be >= 0");

    SemiSupervisedResult out{LinearClassifier::zeros(classes, labeled_x.cols()), teacher, {}, {}};
    const double inv_n = 1.0 / static_cast<double>(labeled_x.rows());
    Rng noise = Rng::stream(cfg.seed, 0x5EED);

    out.loss_curve.reserve(cfg.epochs);
    out.kept_per_epoch.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Matrix p = probabilities(out.student, labeled_x);
        double loss = summed_cross_entropy(p, labeled_targets.matrix()) * inv_n;
        Gradient g = data_gradient(std::move(p), labeled_targets.matrix(), labeled_x, inv_n);

        std::size_t kept = 0;
        if (unlabeled_x.rows() > 0) {
            if (mode == PseudoLabelMode::soft_corrected && cfg.recompute_delta && refresh && refresh->x) {
                const SoftLabels val_scores = softmax_forward(out.teacher, *refresh->x);
                correction = calibrate(val_scores, *refresh->y, refresh->bins).delta;
            }

            // One-hot and raw soft targets are filtered on the teacher's top
            // score; corrected targets on their own top score, after correction.
            const SoftLabels scores(probabilities(out.teacher, with_noise(unlabeled_x, cfg.weak_noise_sigma, noise)));
            SoftLabels pseudo;
            switch (mode) {
                case PseudoLabelMode::onehot: {
                    Matrix hot(scores.rows(), classes);
                    for (std::size_t m = 0; m < scores.rows(); ++m) hot(m, argmax(scores.row(m))) = 1.0;
                    pseudo = SoftLabels(std::move(hot));
                    break;
                }
                case PseudoLabelMode::soft:
                    pseudo = scores;
                    break;
                case PseudoLabelMode::soft_corrected:
                    pseudo = correct_pseudo_labels(scores, correction, lambda).labels;
                    break;
            }
            const SoftLabels& gate = mode == PseudoLabelMode::soft_corrected ? pseudo : scores;
            const std::vector<bool> keep = filter_by_confidence(gate, cfg.threshold).keep_mask;
            for (bool k : keep) kept += k ? 1 : 0;

            if (kept > 0) {
                Matrix ux(kept, unlabeled_x.cols());
                Matrix ut(kept, classes);
                for (std::size_t m = 0, r = 0; m < keep.size(); ++m) {
                    if (!keep[m]) continue;
                    const auto src = unlabeled_x.row(m);
                    auto dst = ux.row(r);
                    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = src[d] + cfg.strong_noise_sigma * noise.normal();
                    std::copy_n(pseudo.row(m).begin(), classes, ut.row(r).begin());
                    ++r;
                }
                const double weight = cfg.unsup_loss_weight / static_cast<double>(kept);
                Matrix pu = probabilities(out.student, ux);
                loss += weight * summed_cross_entropy(pu, ut);
                add_into(g, data_gradient(std::move(pu), ut, ux, weight));
            }
        }

        loss += l2_penalty(out.student, cfg.l2_weight);
        check_finite_loss(loss, epoch);
        out.loss_curve.push_back(loss);
        out.kept_per_epoch.push_back(kept);
        descend(out.student, g, cfg.rate_at(epoch), cfg.l2_weight);
        if (cfg.ema_decay > 0.0) ema_update(out.teacher, out.student, cfg.ema_decay);
    }
    return out;
}

Metrics evaluate(const LinearClassifier& clf, const Matrix& x, const LabelSet& y,
                 std::span<const std::size_t> rare, const BinningConfig& bins) {
    const SoftLabels scores = softmax_forward(clf, x);
    const std::size_t classes = y.num_classes();
    std::vector<std::size_t> hits(classes, 0);
    std::size_t total_hits = 0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        if (argmax(scores.row(n)) == y[n]) {
            ++hits[y[n]];
            ++total_hits;
        }
    }
    Metrics m;
    m.accuracy = y.size() ? static_cast<double>(total_hits) / static_cast<double>(y.size()) : 0.0;
    m.per_class_accuracy.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t n = y.counts()[c];
        m.per_class_accuracy[c] = n ? static_cast<double>(hits[c]) / static_cast<double>(n)
                                    : std::numeric_limits<double>::quiet_NaN();
    }
    double rare_sum = 0.0;
    std::size_t rare_n = 0;
    for (std::size_t c : rare) {
        if (c < classes && y.counts()[c] > 0) {
            rare_sum += m.per_class_accuracy[c];
            ++rare_n;
        }
    }
    if (rare_n > 0) m.rare_accuracy = rare_sum / static_cast<double>(rare_n);
    m.ece = ece(scores, y, bins);
    return m;
}

}  // namespace csls
