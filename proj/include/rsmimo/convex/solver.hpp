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

#include "rsmimo/convex/program.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace rsmimo::convex {

struct SolveOptions {
    double tolerance = 1e-8;   // target duality gap, scaled by max(1, |objective|)
    int max_newton = 5000;     // total Newton iteration budget
    double mu = 20.0;          // barrier weight growth factor
    std::optional<RVec> x0;    // strictly feasible start, if available
    std::optional<double> t0;  // initial barrier weight
    double feasibility_margin = 1e-8;  // phase-I strictness slack
    // Internal early-exit hook (used by phase I); returns true to stop.
    std::function<bool(const RVec&)> early_stop;
};

namespace detail {

inline bool strictly_feasible(const SmoothConvexProgram& prog, const RVec& x, double margin = 0.0) {
    for (const auto& c : prog.constraints) {
        const double v = c.value(x);
        if (!std::isfinite(v) || v >= -margin) return false;
    }
    return true;
}

/// Nonzero-gradient variable indices of a constraint; the Newton loop
/// accumulates curvature only over these.
inline std::vector<int> constraint_support(const Constraint& c, int n) {
    std::vector<char> mark(n, 0);
    auto mark_vec = [&](const RVec& v) {
        for (int i = 0; i < v.size(); ++i)
            if (v(i) != 0.0) mark[i] = 1;
    };
    if (c.a.size()) mark_vec(c.a);
    if (c.kind == ConstraintKind::exponential_2pow && c.k.size()) mark_vec(c.k);
    if (c.kind == ConstraintKind::convex_quadratic && c.P.size())
        for (int i = 0; i < c.P.rows(); ++i)
            for (int j = 0; j < c.P.cols(); ++j)
                if (c.P(i, j) != 0.0) mark[i] = mark[j] = 1;
    if (c.kind == ConstraintKind::posynomial_log && c.terms_k.size())
        for (int t = 0; t < c.terms_k.rows(); ++t)
            for (int j = 0; j < c.terms_k.cols(); ++j)
                if (c.terms_k(t, j) != 0.0) mark[j] = 1;
    std::vector<int> support;
    for (int i = 0; i < n; ++i)
        if (mark[i]) support.push_back(i);
    return support;
}

/// Barrier value t*(-obj'x) - sum log(-g_i); +inf outside the domain.
inline double barrier_value(const SmoothConvexProgram& prog, const RVec& x, double t) {
    double val = -t * prog.objective.dot(x);
    for (const auto& c : prog.constraints) {
        const double g = c.value(x);
        if (!std::isfinite(g) || g >= 0.0) return std::numeric_limits<double>::infinity();
        val -= std::log(-g);
    }
    return val;
}

/// Barrier change from x to x + step, computed without the catastrophic
/// cancellation of differencing two O(t)-sized values: the objective part
/// is a product, the log parts are O(1) each. +inf if the trial point
/// leaves the domain.
inline double barrier_delta(const SmoothConvexProgram& prog, const RVec& x, const RVec& trial,
                            const RVec& step_scaled, double t) {
    double delta = -t * prog.objective.dot(step_scaled);
    for (const auto& c : prog.constraints) {
        const double g_new = c.value(trial);
        if (!std::isfinite(g_new) || g_new >= 0.0) return std::numeric_limits<double>::infinity();
        delta += std::log(-c.value(x)) - std::log(-g_new);
    }
    return delta;
}

struct CenterResult {
    int newton_iters = 0;
    bool hit_budget = false;
};

/// Newton centering for a fixed barrier weight t.
inline CenterResult center(const SmoothConvexProgram& prog, const std::vector<std::vector<int>>& supports,
                           RVec& x, double t, int budget,
                           const std::function<bool(const RVec&)>& early_stop) {
    const int n = prog.num_vars;
    CenterResult res;
    RVec grad(n), cg(n);
    RMat hess(n, n);
    for (int it = 0; it < budget; ++it) {
        grad = -t * prog.objective;
        hess.setZero();
        for (size_t ci = 0; ci < prog.constraints.size(); ++ci) {
            const Constraint& c = prog.constraints[ci];
            const auto& sup = supports[ci];
            const double g = c.value(x);
            const double inv = 1.0 / (-g);
            cg = c.gradient(x);
            for (int i : sup) grad(i) += inv * cg(i);
            for (int i : sup) {
                const double gi = inv * inv * cg(i);
                for (int j : sup) hess(i, j) += gi * cg(j);
            }
            switch (c.kind) {
                case ConstraintKind::affine:
                    break;
                case ConstraintKind::convex_quadratic:
                    for (int i : sup)
                        for (int j : sup) hess(i, j) += inv * c.P(i, j);
                    break;
                case ConstraintKind::exponential_2pow: {
                    const double e = inv * std::exp(c.k.dot(x) + c.d);
                    for (int i : sup)
                        for (int j : sup) hess(i, j) += e * c.k(i) * c.k(j);
                    break;
                }
                case ConstraintKind::posynomial_log: {
                    RVec z = c.terms_k * x + c.terms_d;
                    z.array() -= z.maxCoeff();
                    RVec w = z.array().exp();
                    w /= w.sum();
                    const RVec mean = c.terms_k.transpose() * w;
                    for (int tt = 0; tt < c.terms_k.rows(); ++tt)
                        for (int i : sup)
                            for (int j : sup)
                                hess(i, j) += inv * w(tt) * c.terms_k(tt, i) * c.terms_k(tt, j);
                    for (int i : sup)
                        for (int j : sup) hess(i, j) -= inv * mean(i) * mean(j);
                    break;
                }
            }
        }

        Eigen::LDLT<RMat> ldlt(hess);
        RVec step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = ldlt.solve(-grad);
        } else {
            RMat ridged = hess;
            ridged.diagonal().array() += 1e-10 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
            step = ridged.ldlt().solve(-grad);
        }
        // The (dimensionless) Newton decrement; lambda^2 <= 1e-6 is far
        // inside the quadratic convergence region, which is all that path
        // following needs.
        const double decrement_sq = -grad.dot(step);
        if (!std::isfinite(decrement_sq) || decrement_sq <= 1e-6) return res;

        // Backtracking line search on the stable barrier delta; the
        // infinite value outside the domain rejects boundary crossings.
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const RVec cand = x + alpha * step;
            const double delta = barrier_delta(prog, x, cand, alpha * step, t);
            if (delta <= -1e-4 * alpha * decrement_sq) {
                x = cand;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        ++res.newton_iters;
        if (!moved) return res;
        if (early_stop && early_stop(x)) return res;
        if (res.newton_iters >= 150) return res;  // approximate centering suffices
    }
    res.hit_budget = true;
    return res;
}

}  // namespace detail

inline std::pair<RVec, SolverReport> solve(const SmoothConvexProgram& prog, const SolveOptions& opts);

namespace detail {

/// Phase I: minimize s subject to g_i(x) - s <= 0. Every constraint kind
/// stays within the supported shapes after the extension (for
/// posynomial_log the slack enters each term's exponent with weight -1).
inline std::optional<RVec> phase_one(const SmoothConvexProgram& prog, const SolveOptions& opts,
                                     int& newton_used) {
    const int n = prog.num_vars;
    SmoothConvexProgram ext;
    ext.num_vars = n + 1;
    ext.objective = RVec::Zero(n + 1);
    ext.objective(n) = -1.0;  // maximize -s
    for (const auto& c : prog.constraints) {
        Constraint e = c;
        switch (c.kind) {
            case ConstraintKind::affine:
            case ConstraintKind::convex_quadratic:
            case ConstraintKind::exponential_2pow: {
                RVec a = RVec::Zero(n + 1);
                if (c.a.size()) a.head(n) = c.a;
                a(n) = -1.0;
                e.a = a;
                if (c.kind == ConstraintKind::convex_quadratic) {
                    RMat p = RMat::Zero(n + 1, n + 1);
                    p.topLeftCorner(n, n) = c.P;
                    e.P = p;
                }
                if (c.kind == ConstraintKind::exponential_2pow) {
                    RVec k = RVec::Zero(n + 1);
                    k.head(n) = c.k;
                    e.k = k;
                }
                break;
            }
            case ConstraintKind::posynomial_log: {
                RMat tk = RMat::Zero(c.terms_k.rows(), n + 1);
                tk.leftCols(n) = c.terms_k;
                tk.col(n).setConstant(-1.0);
                e.terms_k = tk;
                break;
            }
        }
        ext.add(std::move(e));
    }

    RVec x0 = RVec::Zero(n + 1);
    if (opts.x0 && opts.x0->size() == n) x0.head(n) = *opts.x0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& c : prog.constraints) {
        const double v = c.value(x0.head(n));
        worst = std::max(worst, std::isfinite(v) ? v : 1.0);
    }
    x0(n) = worst + std::max(1.0, std::abs(worst));

    SolveOptions ext_opts;
    ext_opts.tolerance = 1e-9;
    ext_opts.max_newton = std::max(200, opts.max_newton - newton_used);
    ext_opts.x0 = x0;
    const double margin = opts.feasibility_margin;
    ext_opts.early_stop = [margin, n](const RVec& x) { return x(n) < -10.0 * margin; };
    auto [xe, rep] = solve(ext, ext_opts);
    newton_used += rep.iterations;
    if (xe(n) < -margin) return RVec(xe.head(n));
    return std::nullopt;
}

}  // namespace detail

/// Log-barrier interior-point solve of a SmoothConvexProgram.
inline std::pair<RVec, SolverReport> solve(const SmoothConvexProgram& prog, const SolveOptions& opts) {
    const int n = prog.num_vars;
    const int m = static_cast<int>(prog.constraints.size());
    SolverReport report;
    if (n <= 0) throw ConfigError("convex::solve: empty program");
    if (m == 0) throw ConfigError("convex::solve: a linear objective needs at least one constraint");

    RVec x;
    int newton_used = 0;
    if (opts.x0 && opts.x0->size() == n && detail::strictly_feasible(prog, *opts.x0)) {
        x = *opts.x0;
    } else {
        auto feasible = detail::phase_one(prog, opts, newton_used);
        if (!feasible) {
            report.status = SolveStatus::infeasible;
            report.iterations = newton_used;
            return {RVec::Zero(n), report};
        }
        x = *feasible;
    }

    std::vector<std::vector<int>> supports;
    supports.reserve(prog.constraints.size());
    for (const auto& c : prog.constraints) supports.push_back(detail::constraint_support(c, n));

    double t = opts.t0.value_or(1.0);
    const int max_stages = 200;
    bool converged = false;
    for (int stage = 0; stage < max_stages; ++stage) {
        const int budget = opts.max_newton - newton_used;
        if (budget <= 0) break;
        auto cr = detail::center(prog, supports, x, t, budget, opts.early_stop);
        newton_used += cr.newton_iters;
        if (opts.early_stop && opts.early_stop(x)) {
            converged = true;
            break;
        }
        if (cr.hit_budget) break;
        const double scale = std::max(1.0, std::abs(prog.objective.dot(x)));
        if (static_cast<double>(m) / t <= opts.tolerance * scale) {
            converged = true;
            break;
        }
        t *= opts.mu;
    }

    report.iterations = newton_used;
    report.objective = prog.objective.dot(x);
    report.barrier_t = t;

    // KKT residuals with the barrier multiplier estimates lambda_i = 1/(t*(-g_i));
    // stationarity is scaled by the size of the terms entering it.
    RVec stationarity = -prog.objective;
    double primal = 0.0;
    double term_scale = prog.objective.cwiseAbs().maxCoeff();
    for (const auto& c : prog.constraints) {
        const double g = c.value(x);
        primal = std::max(primal, g);
        const double lambda = 1.0 / (t * (-g));
        const RVec cg = c.gradient(x);
        stationarity.noalias() += lambda * cg;
        term_scale = std::max(term_scale, lambda * cg.cwiseAbs().maxCoeff());
    }
    const double gap = static_cast<double>(m) / t / std::max(1.0, std::abs(report.objective));
    report.kkt_residual = std::max(
        {stationarity.cwiseAbs().maxCoeff() / std::max(1.0, term_scale), std::max(primal, 0.0), gap});
    report.status = (converged && report.kkt_residual <= 1e-6) ? SolveStatus::optimal : SolveStatus::max_iter;
    return {x, report};
}

inline std::pair<RVec, SolverReport> solve(const SmoothConvexProgram& prog, double tolerance,
                                           int max_iter) {
    SolveOptions opts;
    opts.tolerance = tolerance;
    opts.max_newton = max_iter;
    return solve(prog, opts);
}

}  // namespace rsmimo::convex
