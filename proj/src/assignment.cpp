#include "otflow/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace otflow {

// Hungarian method, potentials formulation (Kuhn-Munkres). 1-indexed
// internals; p[j] = row matched to column j.
AssignmentResult exact_assignment(const CostMatrix& cost) {
    const Eigen::Index n = cost.rows();
    if (cost.cols() != n)
        throw std::invalid_argument("exact_assignment: cost matrix must be square");
    if (n < 1 || n > 64)
        throw std::invalid_argument("exact_assignment: oracle limited to 1 <= n <= 64");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Eigen::Index> p(n + 1, 0), way(n + 1, 0);
    for (Eigen::Index i = 1; i <= n; ++i) {
        p[0] = i;
        Eigen::Index j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const Eigen::Index i0 = p[j0];
            Eigen::Index j1 = 0;
            double delta = kInf;
            for (Eigen::Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Eigen::Index j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    AssignmentResult res;
    res.correspondence.target_index.assign(static_cast<std::size_t>(n), 0);
    res.correspondence.is_valid.assign(static_cast<std::size_t>(n), 1);
    for (Eigen::Index j = 1; j <= n; ++j)
        res.correspondence.target_index[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    for (Eigen::Index i = 0; i < n; ++i)
        res.total_cost += cost(i, res.correspondence.target_index[static_cast<std::size_t>(i)]);
    return res;
}

AssignmentResult exhaustive_assignment(const CostMatrix& cost) {
    const Eigen::Index n = cost.rows();
    if (cost.cols() != n)
        throw std::invalid_argument("exhaustive_assignment: cost matrix must be square");
    if (n < 1 || n > 8)
        throw std::invalid_argument("exhaustive_assignment: limited to 1 <= n <= 8");

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::vector<Eigen::Index> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
        if (c < best_cost) {  // strict: keeps the lexicographically smallest optimum
            best_cost = c;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    AssignmentResult res;
    res.correspondence.target_index = std::move(best);
    res.correspondence.is_valid.assign(static_cast<std::size_t>(n), 1);
    res.total_cost = best_cost;
    return res;
}

}  // namespace otflow
