#pragma once

#include "otflow/core.hpp"

namespace otflow {

struct MetricReport {
    double epe = 0.0;      // mean endpoint error, meters
    double as_pct = 0.0;   // strict accuracy: e < 0.05 or rel < 5%
    double ar_pct = 0.0;   // relaxed accuracy: e < 0.1 or rel < 10%
    double out_pct = 0.0;  // outliers: e > 0.3 or rel > 10%
    std::size_t point_count = 0;
};

/// Standard flow metrics; relative error uses max(|gt|, 1e-8) as the
/// denominator, thresholds are strict inequalities. `mask` (optional)
/// restricts evaluation to nonzero entries. Throws std::invalid_argument on
/// length mismatch or an empty evaluation set.
MetricReport evaluate(const FlowField& pred, const FlowField& gt,
                      const std::vector<std::uint8_t>* mask = nullptr);

/// evaluate() over the valid labels only; point_count reports how many
/// labels were valid so coverage stays visible next to accuracy.
MetricReport label_quality(const PseudoLabelSet& labels, const FlowField& gt);

/// Coverage-weighted variant: accuracy percentages are taken over ALL points
/// (an invalid label can never count as accurate and always counts as an
/// outlier); EPE still averages the valid subset. Rewards labeling more
/// points only when the labels are right.
MetricReport label_coverage_quality(const PseudoLabelSet& labels, const FlowField& gt);

}  // namespace otflow
