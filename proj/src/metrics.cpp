#include "otflow/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace otflow {

MetricReport evaluate(const FlowField& pred, const FlowField& gt,
                      const std::vector<std::uint8_t>* mask) {
    const std::size_t n = pred.vectors.size();
    if (gt.vectors.size() != n)
        throw std::invalid_argument("evaluate: prediction and ground truth lengths differ");
    if (mask && mask->size() != n)
        throw std::invalid_argument("evaluate: mask length differs from flow length");

    std::size_t count = 0, as = 0, ar = 0, out = 0;
    double err_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && (*mask)[i] == 0) continue;
        const double e = (pred.vectors[i] - gt.vectors[i]).norm();
        const double r = e / std::max(gt.vectors[i].norm(), 1e-8);
        ++count;
        err_sum += e;
        if (e < 0.05 || r < 0.05) ++as;
        if (e < 0.1 || r < 0.1) ++ar;
        if (e > 0.3 || r > 0.1) ++out;
    }
    if (count == 0) throw std::invalid_argument("evaluate: empty evaluation set");

    MetricReport rep;
    rep.point_count = count;
    rep.epe = err_sum / static_cast<double>(count);
    const double denom = static_cast<double>(count);
    rep.as_pct = 100.0 * static_cast<double>(as) / denom;
    rep.ar_pct = 100.0 * static_cast<double>(ar) / denom;
    rep.out_pct = 100.0 * static_cast<double>(out) / denom;
    return rep;
}

MetricReport label_quality(const PseudoLabelSet& labels, const FlowField& gt) {
    FlowField pred;
    pred.vectors = labels.labels;
    return evaluate(pred, gt, &labels.valid);
}

MetricReport label_coverage_quality(const PseudoLabelSet& labels, const FlowField& gt) {
    const std::size_t n = labels.labels.size();
    if (gt.vectors.size() != n || labels.valid.size() != n)
        throw std::invalid_argument("label_coverage_quality: length mismatch");
    if (n == 0) throw std::invalid_argument("label_coverage_quality: empty evaluation set");

    std::size_t valid = 0, as = 0, ar = 0, out = 0;
    double err_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels.valid[i] == 0) {
            ++out;  // missed point: never accurate, always an outlier
            continue;
        }
        const double e = (labels.labels[i] - gt.vectors[i]).norm();
        const double r = e / std::max(gt.vectors[i].norm(), 1e-8);
        ++valid;
        err_sum += e;
        if (e < 0.05 || r < 0.05) ++as;
        if (e < 0.1 || r < 0.1) ++ar;
        if (e > 0.3 || r > 0.1) ++out;
    }
    MetricReport rep;
    rep.point_count = n;
    rep.epe = valid ? err_sum / static_cast<double>(valid) : 0.0;
    const double denom = static_cast<double>(n);
    rep.as_pct = 100.0 * static_cast<double>(as) / denom;
    rep.ar_pct = 100.0 * static_cast<double>(ar) / denom;
    rep.out_pct = 100.0 * static_cast<double>(out) / denom;
    return rep;
}

}  // namespace otflow
