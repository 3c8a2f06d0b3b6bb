#pragma once

// Random feasible, bounded conic programs: a strictly feasible primal point
// and a strictly feasible dual point are planted, so an optimum exists.

#include "dpconic/conic.hpp"

#include <random>

namespace testing_support {

using dpconic::ConeKind;
using dpconic::Index;
using dpconic::Matrix;
using dpconic::Vector;

inline Vector interior_point(ConeKind kind, Index dim, std::mt19937_64& gen) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    Vector v(dim);
    switch (kind) {
        case ConeKind::Zero: v.setZero(); break;
        case ConeKind::NonNeg:
            for (Index i = 0; i < dim; ++i) v(i) = unif(gen);
            break;
        case ConeKind::SecondOrder:
            for (Index i = 1; i < dim; ++i) v(i) = normal(gen);
            v(0) = v.tail(dim - 1).norm() + unif(gen);
            break;
        case ConeKind::RotatedSecondOrder: {
            for (Index i = 2; i < dim; ++i) v(i) = normal(gen);
            v(0) = unif(gen);
            v(1) = (v.tail(dim - 2).squaredNorm() + unif(gen)) / (2.0 * v(0));
            break;
        }
    }
    return v;
}

// LP when soc is false; otherwise a mix of all four cone kinds.
inline dpconic::ConicProgram random_program(std::mt19937_64& gen, bool soc) {
    std::uniform_int_distribution<int> n_dist(1, 30);
    std::normal_distribution<double> normal;
    const Index n = n_dist(gen);
    const Index max_m = 30;

    dpconic::ConeSpec cones;
    Index m = 0;
    std::uniform_int_distribution<int> zero_dist(0, static_cast<int>(std::min<Index>(n - 1, 3)));
    const Index zeros = zero_dist(gen);
    if (zeros > 0) {
        cones.push_back({ConeKind::Zero, zeros});
        m += zeros;
    }
    std::uniform_int_distribution<int> kind_dist(0, soc ? 2 : 0);
    std::uniform_int_distribution<int> dim_dist(2, 6);
    std::uniform_int_distribution<int> target_dist(static_cast<int>(std::max<Index>(m + 1, n)), static_cast<int>(max_m));
    const Index target = target_dist(gen);
    while (m < target) {
        const int kind = kind_dist(gen);
        Index dim = (kind == 0) ? 1 + (dim_dist(gen) - 2) : dim_dist(gen);
        dim = std::min(dim, target - m);
        if (kind == 2 && dim < 2) dim = 1;
        ConeKind k = ConeKind::NonNeg;
        if (kind == 1) k = ConeKind::SecondOrder;
        if (kind == 2 && dim >= 2) k = ConeKind::RotatedSecondOrder;
        if (kind == 2 && dim < 2) k = ConeKind::NonNeg;
        cones.push_back({k, dim});
        m += dim;
    }

    dpconic::ConicProgram p;
    p.A = Matrix(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) p.A(i, j) = normal(gen);
    Vector x0(n);
    for (Index j = 0; j < n; ++j) x0(j) = normal(gen);
    Vector s0(m), y0(m);
    Index row = 0;
    for (const auto& block : cones.blocks()) {
        s0.segment(row, block.dim) = interior_point(block.kind, block.dim, gen);
        if (block.kind == ConeKind::Zero) {
            for (Index i = 0; i < block.dim; ++i) y0(row + i) = normal(gen);
        } else {
            y0.segment(row, block.dim) = interior_point(block.kind, block.dim, gen);
        }
        row += block.dim;
    }
    p.b = p.A * x0 + s0;
    p.c = -p.A.transpose() * y0;
    p.cones = cones;
    return p;
}

}  // namespace testing_support
