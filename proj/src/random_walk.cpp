#include "otflow/random_walk.hpp"

#include "otflow/normals.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace otflow {

namespace {

constexpr Eigen::Index kMaxClosedFormSize = 8192;  // dense O(n^3) solve budget

double affinity_entry(const Vec3& a, const Vec3& b, double theta_r) {
    return std::exp(-(a - b).squaredNorm() / (2.0 * theta_r * theta_r));
}

Matrix to_matrix(const FlowField& f) {
    Matrix m(static_cast<Eigen::Index>(f.vectors.size()), 3);
    for (std::size_t i = 0; i < f.vectors.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = f.vectors[i].transpose();
    return m;
}

FlowField from_matrix(const Matrix& m) {
    FlowField f;
    f.vectors.resize(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) f.vectors[static_cast<std::size_t>(i)] = m.row(i);
    return f;
}

}  // namespace

Matrix affinity(const std::vector<Vec3>& points_a, const std::vector<Vec3>& points_b,
                double theta_r) {
    if (theta_r <= 0.0) throw std::invalid_argument("affinity: theta_r must be positive");
    Matrix w(static_cast<Eigen::Index>(points_a.size()), static_cast<Eigen::Index>(points_b.size()));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points_a.size()); ++i)
        for (std::size_t j = 0; j < points_b.size(); ++j)
            w(i, static_cast<Eigen::Index>(j)) =
                affinity_entry(points_a[static_cast<std::size_t>(i)], points_b[j], theta_r);
    return w;
}

TransitionMatrix transition_undirected(const Matrix& affinity_matrix) {
    if (affinity_matrix.rows() != affinity_matrix.cols())
        throw std::invalid_argument("transition_undirected: affinity matrix must be square");
    const Eigen::Index n = affinity_matrix.rows();
    TransitionMatrix a = affinity_matrix;
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 0.0;
        const double off_sum = a.row(i).sum();
        if (off_sum <= 0.0)
            throw std::runtime_error(
                "transition_undirected: isolated node (zero off-diagonal row sum); needs at "
                "least two labeled points and a sane theta_r");
        a.row(i) /= off_sum;
        a(i, i) = 0.0;
    }
    return a;
}

TransitionMatrix transition_directed(const Matrix& affinity_matrix) {
    TransitionMatrix a = affinity_matrix;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double row_sum = a.row(i).sum();
        if (row_sum <= 0.0)
            throw std::runtime_error("transition_directed: zero affinity row sum");
        a.row(i) /= row_sum;
    }
    return a;
}

FlowField refine_iterative(const TransitionMatrix& a1, const FlowField& d0, double alpha, int t) {
    if (a1.rows() != a1.cols() || a1.rows() != static_cast<Eigen::Index>(d0.vectors.size()))
        throw std::invalid_argument("refine_iterative: dimension mismatch");
    if (t < 0) throw std::invalid_argument("refine_iterative: step count must be nonnegative");
    const Matrix d0m = to_matrix(d0);
    Matrix d = d0m;
    for (int s = 0; s < t; ++s) d = alpha * (a1 * d) + (1.0 - alpha) * d0m;
    return from_matrix(d);
}

FlowField refine_closed_form(const TransitionMatrix& a1, const FlowField& d0, double alpha) {
    if (a1.rows() != a1.cols() || a1.rows() != static_cast<Eigen::Index>(d0.vectors.size()))
        throw std::invalid_argument("refine_closed_form: dimension mismatch");
    if (alpha < 0.0 || alpha >= 1.0)
        throw std::invalid_argument("refine_closed_form: alpha must lie in [0, 1)");
    const Eigen::Index n = a1.rows();
    if (n > kMaxClosedFormSize)
        throw std::invalid_argument("refine_closed_form: system too large for a dense solve");
    // I - alpha*A is strictly diagonally dominant for alpha < 1, so the
    // partially pivoted factorization is safe.
    const Matrix system = Matrix::Identity(n, n) - alpha * a1;
    const Matrix solution = Eigen::PartialPivLU<Matrix>(system).solve((1.0 - alpha) * to_matrix(d0));
    if (!solution.allFinite())
        throw std::runtime_error("refine_closed_form: singular system");
    return from_matrix(solution);
}

FlowField propagate_directed(const TransitionMatrix& a2, const FlowField& refined) {
    if (a2.cols() != static_cast<Eigen::Index>(refined.vectors.size()))
        throw std::invalid_argument("propagate_directed: dimension mismatch");
    return from_matrix(a2 * to_matrix(refined));
}

FlowField naive_smooth(const std::vector<Vec3>& points, const FlowField& labels, std::size_t k) {
    if (labels.vectors.size() != points.size())
        throw std::invalid_argument("naive_smooth: label count does not match point count");
    if (k == 0 || k > points.size())
        throw std::invalid_argument("naive_smooth: k must lie in [1, point count]");
    FlowField out;
    out.vectors.resize(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i) {
        const auto nbrs = knn_indices(points, points[static_cast<std::size_t>(i)], k);
        Vec3 mean = Vec3::Zero();
        for (std::size_t j : nbrs) mean += labels.vectors[j];
        out.vectors[static_cast<std::size_t>(i)] = mean / static_cast<double>(nbrs.size());
    }
    return out;
}

namespace serial {

Matrix affinity(const std::vector<Vec3>& points_a, const std::vector<Vec3>& points_b,
                double theta_r) {
    if (theta_r <= 0.0) throw std::invalid_argument("affinity: theta_r must be positive");
    Matrix w(static_cast<Eigen::Index>(points_a.size()), static_cast<Eigen::Index>(points_b.size()));
    for (std::size_t i = 0; i < points_a.size(); ++i)
        for (std::size_t j = 0; j < points_b.size(); ++j)
            w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                affinity_entry(points_a[i], points_b[j], theta_r);
    return w;
}

FlowField naive_smooth(const std::vector<Vec3>& points, const FlowField& labels, std::size_t k) {
    if (labels.vectors.size() != points.size())
        throw std::invalid_argument("naive_smooth: label count does not match point count");
    if (k == 0 || k > points.size())
        throw std::invalid_argument("naive_smooth: k must lie in [1, point count]");
    FlowField out;
    out.vectors.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto nbrs = knn_indices(points, points[i], k);
        Vec3 mean = Vec3::Zero();
        for (std::size_t j : nbrs) mean += labels.vectors[j];
        out.vectors[i] = mean / static_cast<double>(nbrs.size());
    }
    return out;
}

}  // namespace serial

}  // namespace otflow
