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

#include "rsmimo/convex/solver.hpp"

#include <utility>
#include <vector>

namespace rsmimo::convex {

/// c * prod_j y_j^e_j with c > 0, over positive variables y.
struct Monomial {
    double coeff = 1.0;
    RVec exponents;
};

/// Sum of monomials.
struct Posynomial {
    std::vector<Monomial> terms;
};

/// maximize a monomial objective subject to posynomial constraints <= 1.
struct PosynomialProgram {
    int num_vars = 0;
    Monomial objective;
    std::vector<Posynomial> constraints_le_1;
};

/// Log-variable transform: variables become their logs, each posynomial
/// constraint becomes log-sum-exp <= 0 (affine when it is a monomial),
/// and the objective becomes linear. The dropped objective constant is
/// log(objective.coeff).
inline SmoothConvexProgram gp_log_transform(const PosynomialProgram& gp) {
    if (gp.num_vars < 1) throw ConfigError("gp_log_transform: empty program");
    if (!(gp.objective.coeff > 0.0))
        throw ConfigError("gp_log_transform: objective coefficient must be positive");
    if (gp.objective.exponents.size() != gp.num_vars)
        throw ConfigError("gp_log_transform: objective exponent size mismatch");

    SmoothConvexProgram prog;
    prog.num_vars = gp.num_vars;
    prog.objective = gp.objective.exponents;
    for (const auto& pos : gp.constraints_le_1) {
        if (pos.terms.empty()) throw ConfigError("gp_log_transform: empty posynomial");
        for (const auto& t : pos.terms) {
            if (!(t.coeff > 0.0))
                throw ConfigError("gp_log_transform: posynomial coefficients must be positive");
            if (t.exponents.size() != gp.num_vars)
                throw ConfigError("gp_log_transform: exponent size mismatch");
        }
        if (pos.terms.size() == 1) {
            prog.add(affine_constraint(pos.terms[0].exponents, std::log(pos.terms[0].coeff)));
        } else {
            RMat tk(static_cast<int>(pos.terms.size()), gp.num_vars);
            RVec td(static_cast<int>(pos.terms.size()));
            for (int t = 0; t < static_cast<int>(pos.terms.size()); ++t) {
                tk.row(t) = pos.terms[t].exponents.transpose();
                td(t) = std::log(pos.terms[t].coeff);
            }
            prog.add(log_sum_exp_constraint(std::move(tk), std::move(td)));
        }
    }
    return prog;
}

struct GpSolution {
    RVec y;            // positive optimizer in the original variables
    double objective;  // original-domain objective value
    SolverReport report;
};

/// Solves the GP via the log transform. y0, when given, must be positive
/// (it seeds the interior method; strict feasibility is handled by the
/// solver's phase I otherwise).
inline GpSolution solve_gp(const PosynomialProgram& gp, std::optional<RVec> y0 = std::nullopt,
                           double tolerance = 1e-9, int max_iter = 20000) {
    SmoothConvexProgram prog = gp_log_transform(gp);
    SolveOptions opts;
    opts.tolerance = tolerance;
    opts.max_newton = max_iter;
    if (y0) {
        if (y0->size() != gp.num_vars || (y0->array() <= 0.0).any())
            throw ConfigError("solve_gp: starting point must be positive");
        opts.x0 = RVec(y0->array().log());
    }
    auto [x, report] = solve(prog, opts);
    GpSolution sol;
    sol.y = x.array().exp();
    sol.report = report;
    sol.objective = gp.objective.coeff * std::exp(prog.objective.dot(x));
    sol.report.objective = sol.objective;
    return sol;
}

}  // namespace rsmimo::convex
