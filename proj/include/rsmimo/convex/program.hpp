// SPDX-License-Identifier: Apache-2.0
//
// rsmimo: spectral-efficiency simulation of rate-splitting in TDD massive MIMO
// Copyright (C) 2026 the rsmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "rsmimo/common.hpp"

#include <limits>
#include <vector>

namespace rsmimo::convex {

/// The four constraint shapes this artifact needs. All are of the form
/// g(x) <= 0 with g smooth convex:
///   affine:           a'x + b
///   convex_quadratic: 0.5 x'Px + a'x + b,  P PSD
///   exponential_2pow: exp(k'x + d) + a'x + b
///   posynomial_log:   log sum_t exp(K.row(t) x + d_t)
enum class ConstraintKind { affine, convex_quadratic, exponential_2pow, posynomial_log };

struct Constraint {
    ConstraintKind kind = ConstraintKind::affine;
    RVec a;        // linear part (affine / quadratic / exponential)
    double b = 0.0;
    RMat P;        // quadratic
    RVec k;        // exponential
    double d = 0.0;
    RMat terms_k;  // posynomial_log, one row per term
    RVec terms_d;

    double value(const RVec& x) const {
        switch (kind) {
            case ConstraintKind::affine:
                return a.dot(x) + b;
            case ConstraintKind::convex_quadratic:
                return 0.5 * x.dot(P * x) + a.dot(x) + b;
            case ConstraintKind::exponential_2pow:
                return std::exp(k.dot(x) + d) + a.dot(x) + b;
            case ConstraintKind::posynomial_log: {
                const RVec z = terms_k * x + terms_d;
                const double zmax = z.maxCoeff();
                return zmax + std::log((z.array() - zmax).exp().sum());
            }
        }
        return 0.0;
    }

    RVec gradient(const RVec& x) const {
        switch (kind) {
            case ConstraintKind::affine:
                return a;
            case ConstraintKind::convex_quadratic:
                return P * x + a;
            case ConstraintKind::exponential_2pow:
                return std::exp(k.dot(x) + d) * k + a;
            case ConstraintKind::posynomial_log: {
                const RVec w = softmax(x);
                return terms_k.transpose() * w;
            }
        }
        return RVec::Zero(x.size());
    }

    /// Accumulates scale * hessian(g) into h.
    void add_hessian(const RVec& x, double scale, RMat& h) const {
        switch (kind) {
            case ConstraintKind::affine:
                return;
            case ConstraintKind::convex_quadratic:
                h.noalias() += scale * P;
                return;
            case ConstraintKind::exponential_2pow:
                h.noalias() += (scale * std::exp(k.dot(x) + d)) * (k * k.transpose());
                return;
            case ConstraintKind::posynomial_log: {
                const RVec w = softmax(x);
                const RVec mean = terms_k.transpose() * w;
                h.noalias() += scale * (terms_k.transpose() * w.asDiagonal() * terms_k);
                h.noalias() -= scale * (mean * mean.transpose());
                return;
            }
        }
    }

  private:
    RVec softmax(const RVec& x) const {
        RVec z = terms_k * x + terms_d;
        z.array() -= z.maxCoeff();
        RVec w = z.array().exp();
        return w / w.sum();
    }
};

inline Constraint affine_constraint(RVec a, double b) {
    Constraint c;
    c.kind = ConstraintKind::affine;
    c.a = std::move(a);
    c.b = b;
    return c;
}

inline Constraint quadratic_constraint(RMat p, RVec a, double b) {
    Constraint c;
    c.kind = ConstraintKind::convex_quadratic;
    c.P = std::move(p);
    c.a = std::move(a);
    c.b = b;
    return c;
}

inline Constraint exponential_constraint(RVec k, double d, RVec a, double b) {
    Constraint c;
    c.kind = ConstraintKind::exponential_2pow;
    c.k = std::move(k);
    c.d = d;
    c.a = std::move(a);
    c.b = b;
    return c;
}

inline Constraint log_sum_exp_constraint(RMat terms_k, RVec terms_d) {
    Constraint c;
    c.kind = ConstraintKind::posynomial_log;
    c.terms_k = std::move(terms_k);
    c.terms_d = std::move(terms_d);
    return c;
}

/// Linear objective (maximize) over smooth convex constraints g_i(x) <= 0.
struct SmoothConvexProgram {
    int num_vars = 0;
    RVec objective;  // maximize objective' x
    std::vector<Constraint> constraints;

    void add(Constraint c) { constraints.push_back(std::move(c)); }
    /// x(index) >= bound as an affine constraint.
    void add_lower_bound(int index, double bound) {
        RVec a = RVec::Zero(num_vars);
        a(index) = -1.0;
        add(affine_constraint(std::move(a), bound));
    }
    /// x(index) <= bound as an affine constraint.
    void add_upper_bound(int index, double bound) {
        RVec a = RVec::Zero(num_vars);
        a(index) = 1.0;
        add(affine_constraint(std::move(a), -bound));
    }
};

enum class SolveStatus { optimal, max_iter, infeasible };

struct SolverReport {
    SolveStatus status = SolveStatus::max_iter;
    int iterations = 0;        // total Newton iterations
    double kkt_residual = std::numeric_limits<double>::infinity();
    double objective = 0.0;
    double barrier_t = 0.0;    // final barrier weight (for warm re-solves)
};

/// Self-test hook: worst relative mismatch between analytic constraint
/// gradients and central finite differences at x.
inline double max_gradient_error(const SmoothConvexProgram& prog, const RVec& x, double h = 1e-6) {
    double worst = 0.0;
    for (const auto& c : prog.constraints) {
        const RVec grad = c.gradient(x);
        const double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
        for (int j = 0; j < prog.num_vars; ++j) {
            RVec xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            const double fd = (c.value(xp) - c.value(xm)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - grad(j)) / scale);
        }
    }
    return worst;
}

}  // namespace rsmimo::convex
