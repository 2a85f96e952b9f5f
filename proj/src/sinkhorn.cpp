#include "otflow/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace otflow {

namespace {

constexpr double kUnderflowExponent = 700.0;  // exp(-700) is near the double floor

Vector resolve_marginal(const Vector& given, Eigen::Index n, const char* which) {
    if (given.size() == 0) return Vector::Constant(n, 1.0 / static_cast<double>(n));
    if (given.size() != n)
        throw std::invalid_argument(std::string("sinkhorn: ") + which + " marginal length mismatch");
    if ((given.array() <= 0.0).any())
        throw std::invalid_argument(std::string("sinkhorn: ") + which +
                                    " marginal must be strictly positive");
    if (std::abs(given.sum() - 1.0) > 1e-9)
        throw std::invalid_argument(std::string("sinkhorn: ") + which + " marginal must sum to 1");
    return given;
}

void check_denominator(const Vector& v, const char* stage) {
    if ((v.array() == 0.0).any())
        throw std::runtime_error(std::string("sinkhorn: zero denominator in ") + stage +
                                 " scaling update; epsilon is likely too small for the cost scale");
    if (!v.allFinite())
        throw std::runtime_error(std::string("sinkhorn: non-finite scaling vector in ") + stage +
                                 " update; epsilon is likely too small for the cost scale");
}

// Terms this far below the row max add less than an ulp to log(s) (the max
// term contributes exp(0) = 1); skipping them also avoids the libm slow path
// that extreme negative exponents take, which dominates at small epsilon.
constexpr double kLseCutoff = -40.0;

// out(j) = log sum_i exp(lK(i,j) + la(i))
void lse_over_rows(const Matrix& lK, const Vector& la, Vector& out) {
#pragma omp parallel for schedule(static) if (lK.size() > 4096)
    for (Eigen::Index j = 0; j < lK.cols(); ++j) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < lK.rows(); ++i) m = std::max(m, lK(i, j) + la(i));
        double s = 0.0;
        for (Eigen::Index i = 0; i < lK.rows(); ++i) {
            const double t = lK(i, j) + la(i) - m;
            if (t > kLseCutoff) s += std::exp(t);
        }
        out(j) = m + std::log(s);
    }
}

// out(i) = log sum_j exp(lK(i,j) + lb(j))
void lse_over_cols(const Matrix& lK, const Vector& lb, Vector& out) {
#pragma omp parallel for schedule(static) if (lK.size() > 4096)
    for (Eigen::Index i = 0; i < lK.rows(); ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < lK.cols(); ++j) m = std::max(m, lK(i, j) + lb(j));
        double s = 0.0;
        for (Eigen::Index j = 0; j < lK.cols(); ++j) {
            const double t = lK(i, j) + lb(j) - m;
            if (t > kLseCutoff) s += std::exp(t);
        }
        out(i) = m + std::log(s);
    }
}

TransportPlan run_direct(const CostMatrix& cost, const SinkhornParams& params,
                         const Vector& mu_row, const Vector& mu_col) {
    const Eigen::Index nr = cost.rows();
    const Eigen::Index nc = cost.cols();
    // Eigen's vectorized exp clamps its argument rather than underflowing to
    // zero, which would let the zero-row checks below pass on kernels that are
    // numerically unusable; snap sub-floor entries to an honest zero first.
    const double kernel_floor = std::exp(-kUnderflowExponent);
    Matrix K = (-cost / params.epsilon).array().exp();
    K = (K.array() < kernel_floor).select(0.0, K);
    for (Eigen::Index i = 0; i < nr; ++i)
        if (K.row(i).maxCoeff() == 0.0)
            throw std::runtime_error(
                "sinkhorn: exp(-C/epsilon) underflowed to an all-zero row; epsilon is too small "
                "for the cost scale (use the log-domain mode)");
    for (Eigen::Index j = 0; j < nc; ++j)
        if (K.col(j).maxCoeff() == 0.0)
            throw std::runtime_error(
                "sinkhorn: exp(-C/epsilon) underflowed to an all-zero column; epsilon is too "
                "small for the cost scale (use the log-domain mode)");

    Vector a = Vector::Constant(nr, 1.0 / static_cast<double>(nr));
    Vector b = Vector::Zero(nc);
    Vector kta = K.transpose() * a;
    TransportPlan plan;
    for (int it = 1; it <= params.max_iterations; ++it) {
        check_denominator(kta, "column");
        b = mu_col.cwiseQuotient(kta);
        const Vector kb = K * b;
        check_denominator(kb, "row");
        a = mu_row.cwiseQuotient(kb);
        kta = K.transpose() * a;
        plan.iterations = it;
        plan.row_residual = (a.cwiseProduct(kb) - mu_row).cwiseAbs().maxCoeff();
        plan.col_residual = (b.cwiseProduct(kta) - mu_col).cwiseAbs().maxCoeff();
        if (plan.row_residual < params.marginal_tolerance &&
            plan.col_residual < params.marginal_tolerance)
            break;
    }
    plan.entries = a.asDiagonal() * K * b.asDiagonal();
    plan.row_scaling = a;
    plan.col_scaling = b;
    return plan;
}

TransportPlan run_log(const CostMatrix& cost, const SinkhornParams& params, const Vector& mu_row,
                      const Vector& mu_col) {
    const Eigen::Index nr = cost.rows();
    const Eigen::Index nc = cost.cols();
    const Matrix lk = -cost / params.epsilon;
    const Vector lmu_row = mu_row.array().log();
    const Vector lmu_col = mu_col.array().log();

    Vector la = Vector::Constant(nr, -std::log(static_cast<double>(nr)));
    Vector lb(nc), lkta(nc), lkb(nr);
    lse_over_rows(lk, la, lkta);
    TransportPlan plan;
    plan.used_log_domain = true;
    for (int it = 1; it <= params.max_iterations; ++it) {
        lb = lmu_col - lkta;
        lse_over_cols(lk, lb, lkb);
        la = lmu_row - lkb;
        if (!la.allFinite() || !lb.allFinite())
            throw std::runtime_error("sinkhorn: non-finite log-domain potentials");
        lse_over_rows(lk, la, lkta);
        plan.iterations = it;
        plan.row_residual = ((la + lkb).array().exp() - mu_row.array()).abs().maxCoeff();
        plan.col_residual = ((lb + lkta).array().exp() - mu_col.array()).abs().maxCoeff();
        if (plan.row_residual < params.marginal_tolerance &&
            plan.col_residual < params.marginal_tolerance)
            break;
    }
    Matrix le = lk;
    le.colwise() += la;
    le.rowwise() += lb.transpose();
    plan.entries = le.array().exp();
    plan.row_scaling = la.array().exp();
    plan.col_scaling = lb.array().exp();
    return plan;
}

}  // namespace

TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornParams& params, const Vector& mu_row,
                       const Vector& mu_col) {
    if (cost.rows() == 0 || cost.cols() == 0)
        throw std::invalid_argument("sinkhorn: empty cost matrix");
    if (!cost.allFinite()) throw std::invalid_argument("sinkhorn: cost entries must be finite");
    if (params.epsilon <= 0.0) throw std::invalid_argument("sinkhorn: epsilon must be positive");
    if (params.max_iterations < 1)
        throw std::invalid_argument("sinkhorn: max_iterations must be at least 1");
    if (params.marginal_tolerance < 0.0)
        throw std::invalid_argument("sinkhorn: marginal_tolerance must be nonnegative");

    const Vector row = resolve_marginal(mu_row, cost.rows(), "row");
    const Vector col = resolve_marginal(mu_col, cost.cols(), "column");

    bool log_domain = false;
    switch (params.mode) {
        case SinkhornParams::Mode::direct: log_domain = false; break;
        case SinkhornParams::Mode::log_domain: log_domain = true; break;
        case SinkhornParams::Mode::automatic:
            log_domain = params.epsilon < 0.01 ||
                         cost.maxCoeff() / params.epsilon > kUnderflowExponent;
            break;
    }
    return log_domain ? run_log(cost, params, row, col) : run_direct(cost, params, row, col);
}

CorrespondenceSet harden(const TransportPlan& plan) {
    if (plan.entries.cols() < 1) throw std::invalid_argument("harden: plan has no columns");
    CorrespondenceSet corr;
    const std::size_t n = static_cast<std::size_t>(plan.entries.rows());
    corr.target_index.resize(n);
    corr.is_valid.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < plan.entries.cols(); ++j)
            if (plan.entries(static_cast<Eigen::Index>(i), j) >
                plan.entries(static_cast<Eigen::Index>(i), best))
                best = j;  // strict: ties keep the lowest column
        corr.target_index[i] = best;
    }
    return corr;
}

std::vector<Vec3> soft_match(const TransportPlan& plan, const PointCloud& target) {
    if (plan.entries.cols() != static_cast<Eigen::Index>(target.size()))
        throw std::invalid_argument("soft_match: plan column count does not match target size");
    std::vector<Vec3> out(static_cast<std::size_t>(plan.entries.rows()));
    for (Eigen::Index i = 0; i < plan.entries.rows(); ++i) {
        const double row_sum = plan.entries.row(i).sum();
        if (row_sum == 0.0)
            throw std::runtime_error("soft_match: zero row sum in transport plan");
        Vec3 p = Vec3::Zero();
        for (Eigen::Index j = 0; j < plan.entries.cols(); ++j)
            p += (plan.entries(i, j) / row_sum) * target.positions[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = p;
    }
    return out;
}

PseudoLabelSet extract_labels(const PointCloud& source, const PointCloud& target,
                              const CorrespondenceSet& corr, double max_displacement) {
    if (corr.target_index.size() != source.size() || corr.is_valid.size() != source.size())
        throw std::invalid_argument("extract_labels: correspondence length does not match source");
    PseudoLabelSet out;
    out.labels.resize(source.size());
    out.valid.resize(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Eigen::Index j = corr.target_index[i];
        if (j < 0 || j >= static_cast<Eigen::Index>(target.size()))
            throw std::out_of_range("extract_labels: correspondence index out of range");
        out.labels[i] = target.positions[static_cast<std::size_t>(j)] - source.positions[i];
        out.valid[i] =
            (corr.is_valid[i] != 0 && out.labels[i].norm() <= max_displacement) ? 1 : 0;
    }
    return out;
}

CorrespondenceSet greedy_search(const CostMatrix& cost) {
    CorrespondenceSet corr;
    const std::size_t n = static_cast<std::size_t>(cost.rows());
    corr.target_index.resize(n);
    corr.is_valid.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < cost.cols(); ++j)
            if (cost(static_cast<Eigen::Index>(i), j) < cost(static_cast<Eigen::Index>(i), best))
                best = j;
        corr.target_index[i] = best;
    }
    return corr;
}

}  // namespace otflow
