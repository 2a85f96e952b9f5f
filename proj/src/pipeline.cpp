#include "otflow/pipeline.hpp"

#include <chrono>
#include <stdexcept>

namespace otflow {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

FlowField refine_labeled(const std::vector<Vec3>& positions, const FlowField& labels,
                         const RandomWalkParams& walk) {
    const Matrix w1 = affinity(positions, positions, walk.theta_r);
    const TransitionMatrix a1 = transition_undirected(w1);
    return walk.steps < 0 ? refine_closed_form(a1, labels, walk.alpha)
                          : refine_iterative(a1, labels, walk.alpha, walk.steps);
}

}  // namespace

LabelReport generate_labels(const PointCloud& p, const PointCloud& q, const FlowField* predicted,
                            const PipelineConfig& config) {
    if (config.max_displacement <= 0.0)
        throw std::invalid_argument("generate_labels: max_displacement must be positive");
    if (config.source == SourceMode::prewarped && predicted == nullptr)
        throw std::invalid_argument("generate_labels: prewarped mode needs a predicted flow");
    if (config.matcher == Matcher::greedy && config.strategy == MatchStrategy::soft)
        throw std::invalid_argument(
            "generate_labels: soft matching needs a transport plan; greedy produces none");

    const auto total_start = Clock::now();
    LabelReport report;

    auto stage_start = Clock::now();
    const PointCloud matched_source =
        config.source == SourceMode::prewarped ? prewarp(p, *predicted) : p;
    report.timings.prewarp_ms = ms_since(stage_start);

    stage_start = Clock::now();
    const CostMatrix cost = build_cost_matrix(matched_source, q, config.cost);
    report.timings.cost_ms = ms_since(stage_start);

    // Transport + matching. The displacement filter always measures against
    // the original first cloud, not the pre-warped copy.
    PseudoLabelSet filtered;
    if (config.matcher == Matcher::optimal_transport) {
        stage_start = Clock::now();
        const TransportPlan plan = sinkhorn(cost, config.sinkhorn);
        report.transport_cost_total = cost.cwiseProduct(plan.entries).sum();
        report.timings.transport_ms = ms_since(stage_start);

        stage_start = Clock::now();
        if (config.strategy == MatchStrategy::hard) {
            filtered = extract_labels(p, q, harden(plan), config.max_displacement);
        } else {
            const std::vector<Vec3> targets = soft_match(plan, q);
            filtered.labels.resize(p.size());
            filtered.valid.resize(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                filtered.labels[i] = targets[i] - p.positions[i];
                filtered.valid[i] = filtered.labels[i].norm() <= config.max_displacement ? 1 : 0;
            }
        }
        report.timings.match_ms = ms_since(stage_start);
    } else {
        stage_start = Clock::now();
        const CorrespondenceSet corr = greedy_search(cost);
        for (std::size_t i = 0; i < p.size(); ++i)
            report.transport_cost_total +=
                cost(static_cast<Eigen::Index>(i), corr.target_index[i]);
        filtered = extract_labels(p, q, corr, config.max_displacement);
        report.timings.match_ms = ms_since(stage_start);
    }

    std::vector<std::size_t> labeled_idx, unlabeled_idx;
    for (std::size_t i = 0; i < p.size(); ++i)
        (filtered.valid[i] ? labeled_idx : unlabeled_idx).push_back(i);
    report.labeled_count = labeled_idx.size();
    report.unlabeled_count = unlabeled_idx.size();

    Refinement mode = config.refinement;
    if (mode != Refinement::off && labeled_idx.size() < 2) {
        mode = Refinement::off;
        report.refinement_downgraded = true;
    }

    report.labels = filtered;
    if (mode != Refinement::off) {
        std::vector<Vec3> labeled_pos(labeled_idx.size());
        FlowField labeled_flow;
        labeled_flow.vectors.resize(labeled_idx.size());
        for (std::size_t m = 0; m < labeled_idx.size(); ++m) {
            labeled_pos[m] = p.positions[labeled_idx[m]];
            labeled_flow.vectors[m] = filtered.labels[labeled_idx[m]];
        }

        stage_start = Clock::now();
        FlowField refined;
        if (mode == Refinement::naive_smooth) {
            const std::size_t k = std::min(config.naive_k, labeled_idx.size());
            refined = naive_smooth(labeled_pos, labeled_flow, k);
        } else {
            refined = refine_labeled(labeled_pos, labeled_flow, config.walk);
        }
        for (std::size_t m = 0; m < labeled_idx.size(); ++m)
            report.labels.labels[labeled_idx[m]] = refined.vectors[m];
        report.timings.refine_ms = ms_since(stage_start);

        if (mode == Refinement::full && !unlabeled_idx.empty()) {
            stage_start = Clock::now();
            std::vector<Vec3> unlabeled_pos(unlabeled_idx.size());
            for (std::size_t s = 0; s < unlabeled_idx.size(); ++s)
                unlabeled_pos[s] = p.positions[unlabeled_idx[s]];
            const TransitionMatrix a2 =
                transition_directed(affinity(unlabeled_pos, labeled_pos, config.walk.theta_r));
            const FlowField propagated = propagate_directed(a2, refined);
            for (std::size_t s = 0; s < unlabeled_idx.size(); ++s) {
                report.labels.labels[unlabeled_idx[s]] = propagated.vectors[s];
                report.labels.valid[unlabeled_idx[s]] = 1;
            }
            report.timings.propagate_ms = ms_since(stage_start);
        }
    }

    report.timings.total_ms = ms_since(total_start);
    return report;
}

LossReport training_loss(const PseudoLabelSet& labels, const FlowField& predicted) {
    if (labels.labels.size() != predicted.vectors.size() ||
        labels.valid.size() != labels.labels.size())
        throw std::invalid_argument("training_loss: length mismatch");
    LossReport loss;
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (labels.valid[i] == 0) continue;
        sum += (labels.labels[i] - predicted.vectors[i]).norm();
        ++loss.valid_count;
    }
    loss.value = loss.valid_count ? sum / static_cast<double>(loss.valid_count) : 0.0;
    return loss;
}

std::pair<LabelReport, LossReport> self_label_round(const PointCloud& p, const PointCloud& q,
                                                    const FlowField& predicted,
                                                    const PipelineConfig& config) {
    PipelineConfig warped = config;
    warped.source = SourceMode::prewarped;
    LabelReport report = generate_labels(p, q, &predicted, warped);
    LossReport loss = training_loss(report.labels, predicted);
    return {std::move(report), loss};
}

}  // namespace otflow
