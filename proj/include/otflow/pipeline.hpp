#pragma once

#include "otflow/core.hpp"
#include "otflow/cost.hpp"
#include "otflow/random_walk.hpp"
#include "otflow/sinkhorn.hpp"

#include <utility>

namespace otflow {

enum class MatchStrategy { hard, soft };
enum class SourceMode { raw, prewarped };
enum class Refinement { off, naive_smooth, undirected_only, full };
enum class Matcher { optimal_transport, greedy };

struct PipelineConfig {
    CostParams cost;
    SinkhornParams sinkhorn;
    RandomWalkParams walk;
    double max_displacement = 3.5;  // meters; labels longer than this are dropped
    MatchStrategy strategy = MatchStrategy::hard;
    SourceMode source = SourceMode::raw;
    Refinement refinement = Refinement::full;
    Matcher matcher = Matcher::optimal_transport;
    std::size_t naive_k = 16;  // neighbor count for the naive-smoothing baseline
};

struct StageTimings {
    double prewarp_ms = 0.0;
    double cost_ms = 0.0;
    double transport_ms = 0.0;
    double match_ms = 0.0;
    double refine_ms = 0.0;
    double propagate_ms = 0.0;
    double total_ms = 0.0;
};

struct LabelReport {
    PseudoLabelSet labels;           // final labels over every first-frame point
    std::size_t labeled_count = 0;   // points surviving the displacement filter (n_m)
    std::size_t unlabeled_count = 0; // n_s; labeled + unlabeled = n
    double transport_cost_total = 0.0;
    StageTimings timings;
    bool refinement_downgraded = false;  // fewer than 2 filtered labels: walk skipped
};

struct LossReport {
    double value = 0.0;
    std::size_t valid_count = 0;  // 0 means the loss carries no signal
};

/// End-to-end label generation: optional pre-warp by `predicted`, pairwise
/// cost, transport (or the greedy baseline), hard/soft matching, the
/// displacement filter (always against the un-warped first cloud), then the
/// configured refinement. With refinement `full`, every point ends up with a
/// valid label as long as at least two survived the filter; other modes
/// leave filtered-out points invalid.
LabelReport generate_labels(const PointCloud& p, const PointCloud& q, const FlowField* predicted,
                            const PipelineConfig& config);

/// Mean Euclidean distance between valid labels and the prediction.
LossReport training_loss(const PseudoLabelSet& labels, const FlowField& predicted);

/// One self-supervision round: labels generated with `predicted` as the
/// pre-warp, then scored against that same prediction.
std::pair<LabelReport, LossReport> self_label_round(const PointCloud& p, const PointCloud& q,
                                                    const FlowField& predicted,
                                                    const PipelineConfig& config);

}  // namespace otflow
