#include "csls/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csls/error.hpp"

namespace csls {

namespace {

enum Stream : std::uint64_t { kCenters = 1, kLabeled = 2, kUnlabeled = 3, kTest = 4 };

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

// Zig-zag assignment: with G groups, class c sits in layer c / G; odd layers
// run backwards so the head of the distribution pairs with the tail.
std::size_t group_of(std::size_t c, std::size_t groups) {
    const std::size_t layer = c / groups;
    const std::size_t pos = c % groups;
    return (layer % 2 == 0) ? pos : groups - 1 - pos;
}

Matrix make_centers(const SyntheticDatasetSpec& spec) {
    Rng rng = Rng::stream(spec.seed, kCenters);
    const std::size_t groups = (spec.num_classes + spec.group_size - 1) / spec.group_size;
    std::vector<std::vector<double>> group_dirs;
    for (std::size_t g = 0; g < groups; ++g) group_dirs.push_back(random_unit(rng, spec.dim));

    // Each class direction = sqrt(rho) * u_g + sqrt(1 - rho) * v_c with v_c
    // orthogonal to u_g, so every member has cosine sqrt(rho) to its group
    // axis and siblings have cosine close to rho.
    const double rho = spec.sibling_similarity;
    Matrix centers(spec.num_classes, spec.dim);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        const auto& u = group_dirs[group_of(c, groups)];
        auto v = random_unit(rng, spec.dim);
        double proj = 0.0;
        for (std::size_t d = 0; d < spec.dim; ++d) proj += v[d] * u[d];
        double norm = 0.0;
        for (std::size_t d = 0; d < spec.dim; ++d) {
            v[d] -= proj * u[d];
            norm += v[d] * v[d];
        }
        norm = std::sqrt(norm);
        for (std::size_t d = 0; d < spec.dim; ++d) {
            const double ortho = norm > 0.0 ? v[d] / norm : 0.0;
            centers(c, d) = spec.class_center_scale * (std::sqrt(rho) * u[d] + std::sqrt(1.0 - rho) * ortho);
        }
    }
    return centers;
}

void sample_class(Rng& rng, const Matrix& centers, std::size_t cls, double spread, std::span<double> out) {
    const auto center = centers.row(cls);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = center[d] + spread * rng.normal();
}

// Class-major draw of sizes[c] instances per class.
LabeledSplit draw(Rng& rng, const Matrix& centers, std::span<const std::size_t> sizes, double spread) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    Matrix x(total, centers.cols());
    std::vector<std::size_t> y;
    y.reserve(total);
    std::size_t n = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        for (std::size_t k = 0; k < sizes[c]; ++k, ++n) {
            sample_class(rng, centers, c, spread, x.row(n));
            y.push_back(c);
        }
    }
    return {std::move(x), LabelSet(std::move(y), sizes.size())};
}

LabeledSplit take_rows(const LabeledSplit& s, std::span<const std::size_t> rows) {
    Matrix x(rows.size(), s.x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = s.x.row(rows[i]);
        std::copy(src.begin(), src.end(), x.row(i).begin());
    }
    return {std::move(x), s.y.subset(rows)};
}

}  // namespace

void SyntheticDatasetSpec::validate() const {
    if (num_classes < 2) fail_usage("num_classes must be at least 2");
    if (total_labeled < num_classes) {
        fail_usage("infeasible spec: total_labeled (" + std::to_string(total_labeled) +
                   ") must be at least num_classes (" + std::to_string(num_classes) + ")");
    }
    if (dim == 0) fail_usage("dim must be positive");
    if (rare_threshold < 1) fail_usage("rare_threshold must be at least 1");
    if (group_size < 1) fail_usage("group_size must be at least 1");
    if (!(zipf_exponent >= 0.0)) fail_usage("zipf_exponent must be >= 0");
    if (!(cluster_spread >= 0.0)) fail_usage("cluster_spread must be >= 0");
    if (!(class_center_scale > 0.0)) fail_usage("class_center_scale must be > 0");
    if (!(sibling_similarity >= 0.0 && sibling_similarity <= 1.0)) fail_usage("sibling_similarity must lie in [0, 1]");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail_usage("validation_fraction must lie in [0, 1)");
}

std::vector<std::size_t> zipf_class_sizes(std::size_t num_classes, double exponent, std::size_t total) {
    if (num_classes == 0 || total < num_classes) fail_usage("cannot give every class at least one instance");
    std::vector<double> w(num_classes);
    for (std::size_t i = 0; i < num_classes; ++i) w[i] = std::pow(static_cast<double>(i + 1), -exponent);
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    std::vector<std::size_t> sizes(num_classes);
    std::vector<double> frac(num_classes);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < num_classes; ++i) {
        const double exact = static_cast<double>(total) * w[i] / wsum;
        sizes[i] = static_cast<std::size_t>(std::floor(exact));
        frac[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::vector<std::size_t> order(num_classes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++sizes[order[k % num_classes]];

    // Empty classes borrow from the currently largest class.
    for (std::size_t i = 0; i < num_classes; ++i) {
        while (sizes[i] == 0) {
            auto big = std::max_element(sizes.begin(), sizes.end());
            --*big;
            ++sizes[i];
        }
    }
    return sizes;
}

SyntheticData generate_synthetic(const SyntheticDatasetSpec& spec) {
    spec.validate();
    SyntheticData data;
    data.centers = make_centers(spec);
    data.class_sizes = zipf_class_sizes(spec.num_classes, spec.zipf_exponent, spec.total_labeled);

    Rng labeled_rng = Rng::stream(spec.seed, kLabeled);
    const LabeledSplit labeled = draw(labeled_rng, data.centers, data.class_sizes, spec.cluster_spread);

    // Per class: the first round(f * N_i) instances go to validation, at
    // least one stays in training.
    std::vector<std::size_t> train_rows, val_rows;
    std::size_t offset = 0;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        const std::size_t n = data.class_sizes[c];
        const auto want = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(n)));
        const std::size_t nval = std::min(want, n - 1);
        for (std::size_t k = 0; k < n; ++k) (k < nval ? val_rows : train_rows).push_back(offset + k);
        offset += n;
    }
    data.train = take_rows(labeled, train_rows);
    data.validation = take_rows(labeled, val_rows);

    if (spec.total_unlabeled > 0) {
        // Same long-tailed mixture, shuffled so pool order carries no label.
        const auto pool_sizes = spec.total_unlabeled >= spec.num_classes
                                    ? zipf_class_sizes(spec.num_classes, spec.zipf_exponent, spec.total_unlabeled)
                                    : std::vector<std::size_t>(spec.num_classes, 0);
        Rng pool_rng = Rng::stream(spec.seed, kUnlabeled);
        LabeledSplit pool = draw(pool_rng, data.centers, pool_sizes, spec.cluster_spread);
        std::vector<std::size_t> perm(pool.x.rows());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        pool_rng.shuffle(std::span<std::size_t>(perm));
        pool = take_rows(pool, perm);
        data.unlabeled = std::move(pool.x);
        data.unlabeled_truth = std::move(pool.y);
    } else {
        data.unlabeled = Matrix(0, spec.dim);
        data.unlabeled_truth = LabelSet({}, spec.num_classes);
    }

    Rng test_rng = Rng::stream(spec.seed, kTest);
    const std::vector<std::size_t> test_sizes(spec.num_classes, spec.test_per_class);
    data.test = draw(test_rng, data.centers, test_sizes, spec.cluster_spread);
    return data;
}

LabeledSplit label_fraction_subset(const LabeledSplit& split, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) fail_usage("label fraction must lie in (0, 1]");
    const std::size_t classes = split.y.num_classes();
    std::vector<std::size_t> keep(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t n = split.y.counts()[c];
        const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
        keep[c] = std::min(n, std::max<std::size_t>(1, k));
    }
    std::vector<std::size_t> seen(classes, 0);
    std::vector<std::size_t> rows;
    for (std::size_t n = 0; n < split.y.size(); ++n) {
        const std::size_t c = split.y[n];
        if (seen[c]++ < keep[c]) rows.push_back(n);
    }
    return take_rows(split, rows);
}

std::vector<std::size_t> rare_classes(const LabelSet& labels, std::size_t threshold) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < labels.num_classes(); ++c) {
        if (labels.counts()[c] <= threshold) out.push_back(c);
    }
    return out;
}

}  // namespace csls
