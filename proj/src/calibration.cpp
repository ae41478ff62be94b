#include "csls/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "csls/error.hpp"

namespace csls {

std::size_t BinningConfig::bin_of(double confidence) const {
    const double b = static_cast<double>(num_bins);
    auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(confidence * b) - 1.0));
    idx = std::min(idx, num_bins - 1);
    // Settle floating-point rounding in confidence * B against the edges idx / B.
    while (idx > 0 && confidence <= static_cast<double>(idx) / b) --idx;
    while (idx + 1 < num_bins && confidence > static_cast<double>(idx + 1) / b) ++idx;
    return idx + 1;
}

std::string to_string(Grouping g) {
    return g == Grouping::predicted_class ? "predicted-class" : "true-class";
}

Grouping grouping_from_string(const std::string& s) {
    if (s == "predicted-class" || s == "predicted") return Grouping::predicted_class;
    if (s == "true-class" || s == "true") return Grouping::true_class;
    fail_usage("unknown grouping '" + s + "' (expected predicted-class or true-class)");
}

namespace {

void check_inputs(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg) {
    if (cfg.num_bins == 0) fail_usage("number of bins must be positive");
    if (scores.rows() != labels.size()) {
        fail_data("scores have " + std::to_string(scores.rows()) + " rows but " + std::to_string(labels.size()) +
                  " labels were given");
    }
    if (scores.cols() != labels.num_classes()) {
        fail_data("scores have " + std::to_string(scores.cols()) + " columns for " +
                  std::to_string(labels.num_classes()) + " classes");
    }
}

}  // namespace

CalibrationReport reliability_bins(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg,
                                   Grouping grouping) {
    check_inputs(scores, labels, cfg);
    const std::size_t classes = labels.num_classes();
    const std::size_t nb = cfg.num_bins;

    std::vector<std::size_t> count(classes * nb, 0);
    std::vector<double> correct(classes * nb, 0.0);
    std::vector<double> conf_sum(classes * nb, 0.0);

    for (std::size_t n = 0; n < scores.rows(); ++n) {
        const auto row = scores.row(n);
        const std::size_t pred = argmax(row);
        std::size_t cls;
        double conf;
        if (grouping == Grouping::predicted_class) {
            cls = pred;
            conf = row[pred];
        } else {
            cls = labels[n];
            conf = row[cls];
        }
        const std::size_t slot = cls * nb + (cfg.bin_of(conf) - 1);
        ++count[slot];
        correct[slot] += (pred == labels[n]) ? 1.0 : 0.0;
        conf_sum[slot] += conf;
    }

    CalibrationReport report;
    report.grouping = grouping;
    report.num_bins = nb;
    report.num_classes = classes;
    report.class_counts.assign(classes, 0);
    report.bins.reserve(classes * nb);
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t slot = i * nb + b;
            BinStat s{i, b + 1, count[slot], std::nullopt, std::nullopt};
            if (count[slot] > 0) {
                const auto k = static_cast<double>(count[slot]);
                s.acc = correct[slot] / k;
                s.conf = conf_sum[slot] / k;
            }
            report.class_counts[i] += count[slot];
            report.bins.push_back(s);
        }
    }
    return report;
}

namespace {

template <typename Gap>
std::vector<double> weighted_gap(const CalibrationReport& r, Gap gap) {
    std::vector<double> out(r.num_classes, 0.0);
    for (std::size_t i = 0; i < r.num_classes; ++i) {
        if (r.class_counts[i] == 0) continue;
        const auto total = static_cast<double>(r.class_counts[i]);
        double acc = 0.0;
        for (std::size_t b = 1; b <= r.num_bins; ++b) {
            const BinStat& s = r.at(i, b);
            if (s.count == 0) continue;
            acc += (static_cast<double>(s.count) / total) * gap(*s.acc - *s.conf);
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace

std::vector<double> ccece(const CalibrationReport& bins) {
    return weighted_gap(bins, [](double d) { return d; });
}

std::vector<double> class_ece(const CalibrationReport& bins) {
    return weighted_gap(bins, [](double d) { return std::abs(d); });
}

double ece(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg) {
    check_inputs(scores, labels, cfg);
    const std::size_t nb = cfg.num_bins;
    std::vector<std::size_t> count(nb, 0);
    std::vector<double> correct(nb, 0.0), conf_sum(nb, 0.0);
    for (std::size_t n = 0; n < scores.rows(); ++n) {
        const auto row = scores.row(n);
        const std::size_t pred = argmax(row);
        const std::size_t b = cfg.bin_of(row[pred]) - 1;
        ++count[b];
        correct[b] += (pred == labels[n]) ? 1.0 : 0.0;
        conf_sum[b] += row[pred];
    }
    if (scores.rows() == 0) return 0.0;
    const auto total = static_cast<double>(scores.rows());
    double out = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        if (count[b] == 0) continue;
        const auto k = static_cast<double>(count[b]);
        out += (k / total) * std::abs(correct[b] / k - conf_sum[b] / k);
    }
    return out;
}

CalibrationReport calibrate(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg,
                            Grouping grouping) {
    CalibrationReport report = reliability_bins(scores, labels, cfg, grouping);
    report.delta = ccece(report);
    report.class_ece = class_ece(report);
    for (std::size_t i = 0; i < report.num_classes; ++i) {
        if (report.class_counts[i] == 0) report.unobserved.push_back(i);
    }
    report.ece = ece(scores, labels, cfg);
    return report;
}

Json report_to_json(const CalibrationReport& report) {
    Json doc;
    doc["grouping"] = to_string(report.grouping);
    doc["num_bins"] = report.num_bins;
    doc["ece"] = report.ece;
    doc["delta"] = report.delta;
    doc["unobserved"] = report.unobserved;
    Json bins = Json::array();
    for (const BinStat& s : report.bins) {
        Json b;
        b["class"] = s.cls;
        b["bin"] = s.bin;
        b["count"] = s.count;
        b["acc"] = s.acc ? Json(*s.acc) : Json(nullptr);
        b["conf"] = s.conf ? Json(*s.conf) : Json(nullptr);
        bins.push_back(std::move(b));
    }
    doc["bins"] = std::move(bins);
    return doc;
}

CalibrationReport report_from_json(const Json& doc) {
    try {
        CalibrationReport r;
        r.grouping = grouping_from_string(doc.at("grouping").get<std::string>());
        r.num_bins = doc.at("num_bins").get<std::size_t>();
        r.ece = doc.at("ece").get<double>();
        r.delta = doc.at("delta").get<std::vector<double>>();
        r.unobserved = doc.at("unobserved").get<std::vector<std::size_t>>();
        r.num_classes = r.delta.size();
        r.class_counts.assign(r.num_classes, 0);
        for (const auto& b : doc.at("bins")) {
            BinStat s;
            s.cls = b.at("class").get<std::size_t>();
            s.bin = b.at("bin").get<std::size_t>();
            s.count = b.at("count").get<std::size_t>();
            if (!b.at("acc").is_null()) s.acc = b.at("acc").get<double>();
            if (!b.at("conf").is_null()) s.conf = b.at("conf").get<double>();
            if (s.cls >= r.num_classes) fail_data("calibration report: bin for unknown class " + std::to_string(s.cls));
            r.class_counts[s.cls] += s.count;
            r.bins.push_back(s);
        }
        for (double d : r.delta) {
            if (!std::isfinite(d)) fail_data("calibration report: non-finite delta");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail_data(std::string("calibration report: ") + e.what());
    }
}

}  // namespace csls
