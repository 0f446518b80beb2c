#pragma once

#include <array>
#include <span>
#include <vector>

#include "lsvpm/kernel.hpp"

namespace lsvpm {

using Point2 = std::array<double, 2>;

/// Equal-weight empirical measure on R^2.
struct EmpiricalMeasure {
    std::vector<Point2> atoms;

    static EmpiricalMeasure from_ensemble(const ParticleEnsemble& e);
};

/// Exact W2 between equal-weight measures on R with the same atom count (sorted coupling).
double w2_1d(std::span<const double> mu, std::span<const double> nu);

enum class AssignmentMethod { Exhaustive, Hungarian };

/// Exact W2 between equal-weight measures on R^2 with the same atom count, via optimal
/// assignment. The exhaustive path is limited to n <= 8 (TooLarge otherwise).
double w2_2d_small(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   AssignmentMethod method = AssignmentMethod::Exhaustive);

/// sqrt of the mean squared distance under the index coupling i <-> i; an upper bound on W2.
double index_coupling_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace lsvpm
