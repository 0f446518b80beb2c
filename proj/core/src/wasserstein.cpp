#include "lsvpm/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lsvpm/errors.hpp"

namespace lsvpm {

namespace {

double sq_dist(const Point2& a, const Point2& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorCode::Validation, "W2 oracle needs equal atom counts");
    if (a == 0) throw Error(ErrorCode::Validation, "W2 oracle needs at least one atom");
}

// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with potentials).
double hungarian_min_cost(const std::vector<double>& cost, std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), way_min(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t row = 1; row <= n; ++row) {
        match[0] = row;
        std::size_t col0 = 0;
        std::fill(way_min.begin(), way_min.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[col0] = 1;
            const std::size_t r0 = match[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t c = 1; c <= n; ++c) {
                if (used[c]) continue;
                const double cur = cost[(r0 - 1) * n + (c - 1)] - u[r0] - v[c];
                if (cur < way_min[c]) {
                    way_min[c] = cur;
                    way[c] = col0;
                }
                if (way_min[c] < delta) {
                    delta = way_min[c];
                    col1 = c;
                }
            }
            for (std::size_t c = 0; c <= n; ++c) {
                if (used[c]) {
                    u[match[c]] += delta;
                    v[c] -= delta;
                } else {
                    way_min[c] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0 != 0);
    }
    double total = 0.0;
    for (std::size_t c = 1; c <= n; ++c) total += cost[(match[c] - 1) * n + (c - 1)];
    return total;
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::from_ensemble(const ParticleEnsemble& e) {
    check_ensemble(e);
    EmpiricalMeasure m;
    for (std::size_t i = 0; i < e.size(); ++i) m.atoms.push_back({e.xs[i], e.ys[i]});
    return m;
}

double w2_1d(std::span<const double> mu, std::span<const double> nu) {
    require_same_size(mu.size(), nu.size());
    std::vector<double> a(mu.begin(), mu.end());
    std::vector<double> b(nu.begin(), nu.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double w2_2d_small(const EmpiricalMeasure& mu_in, const EmpiricalMeasure& nu_in, AssignmentMethod method) {
    const std::size_t n = mu_in.atoms.size();
    require_same_size(n, nu_in.atoms.size());
    // fixed argument order keeps W2(mu, nu) == W2(nu, mu) bit for bit
    const bool swap = nu_in.atoms < mu_in.atoms;
    const auto& mu = swap ? nu_in : mu_in;
    const auto& nu = swap ? mu_in : nu_in;
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = sq_dist(mu.atoms[i], nu.atoms[j]);
    }
    double best = 0.0;
    if (method == AssignmentMethod::Hungarian) {
        best = hungarian_min_cost(cost, n);
    } else {
        if (n > 8) throw Error(ErrorCode::TooLarge, "exhaustive W2 limited to 8 atoms; use the Hungarian path");
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        best = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return std::sqrt(std::max(best, 0.0) / static_cast<double>(n));
}

double index_coupling_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require_same_size(mu.atoms.size(), nu.atoms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) acc += sq_dist(mu.atoms[i], nu.atoms[i]);
    return std::sqrt(acc / static_cast<double>(mu.atoms.size()));
}

}  // namespace lsvpm
