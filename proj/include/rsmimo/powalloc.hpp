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

#include "rsmimo/convex/gp.hpp"
#include "rsmimo/se_eval.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace rsmimo {

/// Power-allocation schemes, selectable by name from the harness config.
enum class SchemeId {
    rs_maxsum_grid,
    rs_maxsinr_gp,
    rs_maxmin_sca,
    rs_maxsumse_sca,
    rs_maxsinr_sca,
    nors_maxsum,
    nors_gp,
    nors_sca,
    nors_bisection,
};

inline const char* to_string(SchemeId s) {
    switch (s) {
        case SchemeId::rs_maxsum_grid: return "rs_maxsum_grid";
        case SchemeId::rs_maxsinr_gp: return "rs_maxsinr_gp";
        case SchemeId::rs_maxmin_sca: return "rs_maxmin_sca";
        case SchemeId::rs_maxsumse_sca: return "rs_maxsumse_sca";
        case SchemeId::rs_maxsinr_sca: return "rs_maxsinr_sca";
        case SchemeId::nors_maxsum: return "nors_maxsum";
        case SchemeId::nors_gp: return "nors_gp";
        case SchemeId::nors_sca: return "nors_sca";
        case SchemeId::nors_bisection: return "nors_bisection";
    }
    return "?";
}

inline SchemeId scheme_from_string(const std::string& s) {
    for (SchemeId id : {SchemeId::rs_maxsum_grid, SchemeId::rs_maxsinr_gp, SchemeId::rs_maxmin_sca,
                        SchemeId::rs_maxsumse_sca, SchemeId::rs_maxsinr_sca, SchemeId::nors_maxsum,
                        SchemeId::nors_gp, SchemeId::nors_sca, SchemeId::nors_bisection})
        if (s == to_string(id)) return id;
    throw ConfigError("unknown power-allocation scheme: " + s);
}

struct ScaOptions {
    double epsilon = 1e-4;  // stop when |t[n]-t[n-1]| < epsilon
    int max_outer = 100;
    double subproblem_tolerance = 1e-8;
    // MaxMin multi-start over the common-power fraction rho_c/rho_dl.
    std::vector<double> common_fraction_inits = {0.0, 0.1, 0.3, 0.5};
};

struct AllocationResult {
    PowerAllocation alloc;
    RateResult rates;
    /// Objective as the optimizer itself claims it, computed in its
    /// scaled domain; se_eval::evaluate must reproduce it.
    double claimed_objective = 0.0;
    std::vector<double> objective_history;  // per SCA iteration / grid point
    long solver_iterations = 0;             // total Newton steps
    int sca_iterations = 0;
    std::string note;
};

namespace detail {

/// Noise- and budget-normalized coefficients: powers become fractions of
/// rho_dl, the noise term becomes 1, SINRs are unchanged.
struct ScaledCoeffs {
    int num_ues = 0;
    RVec a_c, a_p, I_c;
    RMat B_c, B_p;
    double prelog = 1.0;
};

inline ScaledCoeffs scale_coefficients(const SECoefficients& c, double rho_dl_mw) {
    if (!(rho_dl_mw > 0.0)) throw ConfigError("power allocation: budget must be positive");
    const double s = rho_dl_mw / c.sigma_n_sq_mw;
    ScaledCoeffs sc;
    sc.num_ues = c.num_ues;
    sc.a_c = c.a_c * s;
    sc.a_p = c.a_p * s;
    sc.I_c = c.I_c * s;
    sc.B_c = c.B_c * s;
    sc.B_p = c.B_p * s;
    sc.prelog = c.prelog;
    return sc;
}

/// SINRs for fractional powers p (p_c + sum p_k <= 1).
inline void scaled_sinrs(const ScaledCoeffs& sc, double p_c, const RVec& p, RVec& gamma_c, RVec& gamma_p) {
    const int num_ues = sc.num_ues;
    gamma_c.resize(num_ues);
    gamma_p.resize(num_ues);
    for (int k = 0; k < num_ues; ++k) {
        const double leak = p_c * sc.I_c(k) + 1.0;
        gamma_c(k) = p_c * sc.a_c(k) / (sc.B_c.row(k).dot(p) + leak);
        gamma_p(k) = p(k) * sc.a_p(k) / (sc.B_p.row(k).dot(p) + leak);
    }
}

inline double scaled_sum_se(const ScaledCoeffs& sc, double p_c, const RVec& p) {
    RVec gc, gp;
    scaled_sinrs(sc, p_c, p, gc, gp);
    double se = sc.prelog * log2_1p(gc.minCoeff());
    for (int k = 0; k < sc.num_ues; ++k) se += sc.prelog * log2_1p(gp(k));
    return se;
}

inline PowerAllocation make_allocation(double rho_dl_mw, double p_c, const RVec& p, RVec c_shares) {
    PowerAllocation alloc;
    alloc.budget_mw = rho_dl_mw;
    alloc.rho_c_mw = p_c * rho_dl_mw;
    alloc.rho_mw = p * rho_dl_mw;
    alloc.c_shares = std::move(c_shares);
    return alloc;
}

/// Equal split of the common SE; schemes that do not optimize shares use
/// this default (sum-SE and product-of-SINRs are share-invariant).
inline RVec equal_shares(const ScaledCoeffs& sc, double p_c, const RVec& p) {
    RVec gc, gp;
    scaled_sinrs(sc, p_c, p, gc, gp);
    const double se_c = sc.prelog * log2_1p(gc.minCoeff());
    return RVec::Constant(sc.num_ues, se_c / sc.num_ues);
}

}  // namespace detail

// ---------------------------------------------------------------------
// MaxSum-SE exhaustive grid (Algorithm-1 style). zeta is the fraction of
// the budget given to the private streams: rho_c = (1 - zeta) rho_dl,
// rho_k = zeta rho_dl / K. Ties break toward the smallest zeta.
// ---------------------------------------------------------------------

inline AllocationResult maxsum_grid(const SECoefficients& coeffs, double rho_dl_mw, double delta = 0.05) {
    if (!(delta > 0.0) || delta > 1.0) throw ConfigError("maxsum_grid: delta must lie in (0, 1]");
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    const int num_ues = sc.num_ues;

    std::vector<double> grid;
    for (double z = 0.0; z < 1.0 - 1e-12; z += delta) grid.push_back(std::min(z, 1.0));
    grid.push_back(1.0);  // the NoRS point is always on the grid

    AllocationResult best;
    double best_se = -1.0;
    double best_zeta = 0.0;
    for (double zeta : grid) {
        const double p_c = 1.0 - zeta;
        const RVec p = RVec::Constant(num_ues, zeta / num_ues);
        const double se = detail::scaled_sum_se(sc, p_c, p);
        best.objective_history.push_back(se);
        if (se > best_se) {
            best_se = se;
            best_zeta = zeta;
        }
    }
    const double p_c = 1.0 - best_zeta;
    const RVec p = RVec::Constant(num_ues, best_zeta / num_ues);
    best.alloc = detail::make_allocation(rho_dl_mw, p_c, p, detail::equal_shares(sc, p_c, p));
    best.rates = evaluate(coeffs, best.alloc);
    best.claimed_objective = best_se;
    best.note = "zeta=" + std::to_string(best_zeta);
    return best;
}

/// NoRS baseline of MaxSum-SE: the zeta = 1 grid point (uniform private
/// powers, common stream off).
inline AllocationResult nors_maxsum(const SECoefficients& coeffs, double rho_dl_mw) {
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    const RVec p = RVec::Constant(sc.num_ues, 1.0 / sc.num_ues);
    AllocationResult res;
    res.alloc = detail::make_allocation(rho_dl_mw, 0.0, p, RVec::Zero(sc.num_ues));
    res.rates = evaluate(coeffs, res.alloc);
    res.claimed_objective = detail::scaled_sum_se(sc, 0.0, p);
    res.objective_history.push_back(res.claimed_objective);
    return res;
}

// ---------------------------------------------------------------------
// MaxSINR geometric programs (product of SINRs; globally optimal).
// ---------------------------------------------------------------------

namespace detail {

inline AllocationResult solve_sinr_gp(const SECoefficients& coeffs, double rho_dl_mw, bool with_common) {
    const auto sc = scale_coefficients(coeffs, rho_dl_mw);
    const int num_ues = sc.num_ues;
    if ((sc.a_p.array() <= 0.0).any())
        throw ConfigError("maxsinr_gp: every a_p must be positive");
    if (with_common && (sc.a_c.array() <= 0.0).any())
        throw ConfigError("maxsinr_gp: every a_c must be positive");

    // Variables: [p_1..p_K, o_p1..o_pK, (p_c, o_c)].
    const int idx_p = 0;
    const int idx_op = num_ues;
    const int idx_pc = 2 * num_ues;
    const int idx_oc = 2 * num_ues + 1;
    const int num_vars = with_common ? 2 * num_ues + 2 : 2 * num_ues;

    convex::PosynomialProgram gp;
    gp.num_vars = num_vars;
    gp.objective.coeff = 1.0;
    gp.objective.exponents = RVec::Zero(num_vars);
    for (int k = 0; k < num_ues; ++k) gp.objective.exponents(idx_op + k) = 1.0;
    if (with_common) gp.objective.exponents(idx_oc) = 1.0;

    auto monomial = [&](double coeff, std::initializer_list<std::pair<int, double>> powers) {
        convex::Monomial m;
        m.coeff = coeff;
        m.exponents = RVec::Zero(num_vars);
        for (auto [i, e] : powers) m.exponents(i) += e;
        return m;
    };

    // Private SINR constraints: o_pk * (sum_i p_i Bp(k,i) + p_c I_k + 1) / (p_k a_pk) <= 1.
    for (int k = 0; k < num_ues; ++k) {
        convex::Posynomial pos;
        const double inv_a = 1.0 / sc.a_p(k);
        for (int i = 0; i < num_ues; ++i)
            if (sc.B_p(k, i) > 0.0)
                pos.terms.push_back(monomial(sc.B_p(k, i) * inv_a,
                                             {{idx_op + k, 1.0}, {idx_p + i, 1.0}, {idx_p + k, -1.0}}));
        if (with_common && sc.I_c(k) > 0.0)
            pos.terms.push_back(
                monomial(sc.I_c(k) * inv_a, {{idx_op + k, 1.0}, {idx_pc, 1.0}, {idx_p + k, -1.0}}));
        pos.terms.push_back(monomial(inv_a, {{idx_op + k, 1.0}, {idx_p + k, -1.0}}));
        gp.constraints_le_1.push_back(std::move(pos));
    }

    // Common SINR constraints: o_c * (sum_i p_i Bc(k,i) + p_c I_k + 1) / (p_c a_ck) <= 1.
    if (with_common) {
        for (int k = 0; k < num_ues; ++k) {
            convex::Posynomial pos;
            const double inv_a = 1.0 / sc.a_c(k);
            for (int i = 0; i < num_ues; ++i)
                if (sc.B_c(k, i) > 0.0)
                    pos.terms.push_back(monomial(sc.B_c(k, i) * inv_a,
                                                 {{idx_oc, 1.0}, {idx_p + i, 1.0}, {idx_pc, -1.0}}));
            if (sc.I_c(k) > 0.0)
                pos.terms.push_back(monomial(sc.I_c(k) * inv_a, {{idx_oc, 1.0}}));
            pos.terms.push_back(monomial(inv_a, {{idx_oc, 1.0}, {idx_pc, -1.0}}));
            gp.constraints_le_1.push_back(std::move(pos));
        }
    }

    // Budget: sum_i p_i (+ p_c) <= 1.
    {
        convex::Posynomial pos;
        for (int i = 0; i < num_ues; ++i) pos.terms.push_back(monomial(1.0, {{idx_p + i, 1.0}}));
        if (with_common) pos.terms.push_back(monomial(1.0, {{idx_pc, 1.0}}));
        gp.constraints_le_1.push_back(std::move(pos));
    }

    // Interior start: equal powers at half budget, SINR slacks at 90%.
    RVec y0 = RVec::Ones(num_vars);
    const int streams = with_common ? num_ues + 1 : num_ues;
    const double p0 = 0.5 / streams;
    RVec p_init = RVec::Constant(num_ues, p0);
    for (int i = 0; i < num_ues; ++i) y0(idx_p + i) = p0;
    if (with_common) y0(idx_pc) = p0;
    RVec gc, gpri;
    scaled_sinrs(sc, with_common ? p0 : 0.0, p_init, gc, gpri);
    for (int k = 0; k < num_ues; ++k) y0(idx_op + k) = 0.9 * gpri(k);
    if (with_common) y0(idx_oc) = 0.9 * gc.minCoeff();

    auto sol = convex::solve_gp(gp, y0, 1e-9);
    if (sol.report.status == convex::SolveStatus::infeasible)
        throw NumericalError("maxsinr_gp: solver reported infeasible");

    AllocationResult res;
    RVec p(num_ues);
    for (int i = 0; i < num_ues; ++i) p(i) = sol.y(idx_p + i);
    const double p_c = with_common ? sol.y(idx_pc) : 0.0;
    res.alloc = make_allocation(rho_dl_mw, p_c, p,
                                with_common ? equal_shares(sc, p_c, p) : RVec::Zero(num_ues));
    res.rates = evaluate(coeffs, res.alloc);
    res.claimed_objective = sol.objective;  // product of SINR auxiliaries
    res.solver_iterations = sol.report.iterations;
    return res;
}

}  // namespace detail

inline AllocationResult maxsinr_gp(const SECoefficients& coeffs, double rho_dl_mw) {
    return detail::solve_sinr_gp(coeffs, rho_dl_mw, /*with_common=*/true);
}

inline AllocationResult nors_gp(const SECoefficients& coeffs, double rho_dl_mw) {
    return detail::solve_sinr_gp(coeffs, rho_dl_mw, /*with_common=*/false);
}

// ---------------------------------------------------------------------
// SCA family. The nonconvex SINR constraints nu^2 a / chi >= r - 1 are
// linearized by the first-order expansion of the (jointly convex)
// quadratic-over-linear left side, which is a global under-estimator:
//   Psi(nu, chi) = a (2 nubar/chibar nu - (nubar/chibar)^2 chi).
// ---------------------------------------------------------------------

namespace detail {

enum class ScaVariant { rs_maxmin, rs_maxsumse, rs_maxsinr, nors_maxmin };

struct ScaLayout {
    ScaVariant variant;
    int num_ues = 0;
    bool has_common = false;
    int nu_c = -1, nu0 = -1, c0 = -1, alpha_p0 = -1, alpha_c0 = -1, alpha_c_count = 0;
    int r_p0 = -1, r_c0 = -1, chi_p0 = -1, chi_c0 = -1, t = -1;
    int total = 0;
};

inline ScaLayout make_layout(ScaVariant variant, int num_ues) {
    ScaLayout l;
    l.variant = variant;
    l.num_ues = num_ues;
    const int k = num_ues;
    switch (variant) {
        case ScaVariant::rs_maxmin:
            l.has_common = true;
            l.nu_c = 0;
            l.nu0 = 1;
            l.c0 = 1 + k;
            l.alpha_p0 = 1 + 2 * k;
            l.alpha_c0 = 1 + 3 * k;
            l.alpha_c_count = k;
            l.r_p0 = 1 + 4 * k;
            l.r_c0 = 1 + 5 * k;
            l.chi_p0 = 1 + 6 * k;
            l.chi_c0 = 1 + 7 * k;
            l.t = 1 + 8 * k;
            l.total = 8 * k + 2;
            break;
        case ScaVariant::rs_maxsumse:
        case ScaVariant::rs_maxsinr:
            l.has_common = true;
            l.nu_c = 0;
            l.nu0 = 1;
            l.alpha_p0 = 1 + k;
            l.alpha_c0 = 1 + 2 * k;
            l.alpha_c_count = 1;
            l.r_p0 = 2 + 2 * k;
            l.r_c0 = 2 + 3 * k;
            l.chi_p0 = 2 + 4 * k;
            l.chi_c0 = 2 + 5 * k;
            l.total = 6 * k + 2;
            break;
        case ScaVariant::nors_maxmin:
            l.has_common = false;
            l.nu0 = 0;
            l.alpha_p0 = k;
            l.r_p0 = 2 * k;
            l.chi_p0 = 3 * k;
            l.t = 4 * k;
            l.total = 4 * k + 1;
            break;
    }
    return l;
}

struct ScaState {
    RVec nu;     // [nu_c, nu_1..nu_K] (or [nu_1..nu_K] without common)
    RVec chi_p;  // expansion points
    RVec chi_c;
    RVec c_shares;  // carried across iterations for warm starts (maxmin)
};

inline double chi_rhs(const ScaledCoeffs& sc, const ScaLayout& l, const ScaState& st, int k, bool common) {
    double v = 1.0;  // scaled noise
    const int off = l.has_common ? 1 : 0;
    for (int i = 0; i < l.num_ues; ++i) {
        const double nui = st.nu(off + i);
        v += (common ? sc.B_c(k, i) : sc.B_p(k, i)) * nui * nui;
    }
    if (l.has_common) v += sc.I_c(k) * st.nu(0) * st.nu(0);
    return v;
}

inline convex::SmoothConvexProgram build_sca_subproblem(const ScaledCoeffs& sc, const ScaLayout& l,
                                                        const ScaState& st) {
    const int k_count = l.num_ues;
    const double tau_ratio = 1.0 / sc.prelog;  // tau / tau_d
    const double ln2 = std::log(2.0);
    const bool sinr_mode = l.variant == ScaVariant::rs_maxsinr;

    convex::SmoothConvexProgram prog;
    prog.num_vars = l.total;
    prog.objective = RVec::Zero(l.total);
    if (l.t >= 0) {
        prog.objective(l.t) = 1.0;
    } else {
        prog.objective(l.alpha_c0) = 1.0;
        for (int k = 0; k < k_count; ++k) prog.objective(l.alpha_p0 + k) = 1.0;
    }

    // Power budget and nonnegative amplitudes.
    {
        RMat p = RMat::Zero(l.total, l.total);
        const int nu_lo = l.has_common ? l.nu_c : l.nu0;
        for (int j = 0; j < k_count + (l.has_common ? 1 : 0); ++j) p(nu_lo + j, nu_lo + j) = 2.0;
        prog.add(convex::quadratic_constraint(std::move(p), RVec::Zero(l.total), -1.0));
        for (int j = 0; j < k_count + (l.has_common ? 1 : 0); ++j) prog.add_lower_bound(nu_lo + j, 0.0);
    }

    // chi >= interference + noise (quadratic in nu).
    auto add_chi = [&](int k, bool common) {
        RMat p = RMat::Zero(l.total, l.total);
        for (int i = 0; i < k_count; ++i)
            p(l.nu0 + i, l.nu0 + i) = 2.0 * (common ? sc.B_c(k, i) : sc.B_p(k, i));
        if (l.has_common) p(l.nu_c, l.nu_c) = 2.0 * sc.I_c(k);
        RVec a = RVec::Zero(l.total);
        a((common ? l.chi_c0 : l.chi_p0) + k) = -1.0;
        prog.add(convex::quadratic_constraint(std::move(p), std::move(a), 1.0));
    };
    for (int k = 0; k < k_count; ++k) add_chi(k, false);
    if (l.has_common)
        for (int k = 0; k < k_count; ++k) add_chi(k, true);

    // r - (1) - Psi(nu, chi) <= 0 around the expansion point.
    auto add_sca = [&](int k, bool common) {
        const double a_coef = common ? sc.a_c(k) : sc.a_p(k);
        const double nubar = common ? st.nu(l.nu_c) : st.nu(l.nu0 + k);
        const double chibar = common ? st.chi_c(k) : st.chi_p(k);
        RVec a = RVec::Zero(l.total);
        a((common ? l.r_c0 : l.r_p0) + k) = 1.0;
        a(common ? l.nu_c : l.nu0 + k) = -a_coef * 2.0 * nubar / chibar;
        a((common ? l.chi_c0 : l.chi_p0) + k) = a_coef * (nubar / chibar) * (nubar / chibar);
        prog.add(convex::affine_constraint(std::move(a), sinr_mode ? 0.0 : -1.0));
    };
    for (int k = 0; k < k_count; ++k) add_sca(k, false);
    if (l.has_common)
        for (int k = 0; k < k_count; ++k) add_sca(k, true);

    // 2^{tau_ratio * alpha} <= r.
    auto add_exp = [&](int alpha_idx, int r_idx) {
        RVec kv = RVec::Zero(l.total);
        kv(alpha_idx) = ln2 * tau_ratio;
        RVec a = RVec::Zero(l.total);
        a(r_idx) = -1.0;
        prog.add(convex::exponential_constraint(std::move(kv), 0.0, std::move(a), 0.0));
    };
    for (int k = 0; k < k_count; ++k) add_exp(l.alpha_p0 + k, l.r_p0 + k);
    if (l.has_common)
        for (int k = 0; k < k_count; ++k)
            add_exp(l.alpha_c_count == 1 ? l.alpha_c0 : l.alpha_c0 + k, l.r_c0 + k);

    switch (l.variant) {
        case ScaVariant::rs_maxmin:
            for (int k = 0; k < k_count; ++k) {
                // t - alpha_pk - C_k <= 0.
                RVec a = RVec::Zero(l.total);
                a(l.t) = 1.0;
                a(l.alpha_p0 + k) = -1.0;
                a(l.c0 + k) = -1.0;
                prog.add(convex::affine_constraint(std::move(a), 0.0));
                // sum C - alpha_ck <= 0.
                RVec b = RVec::Zero(l.total);
                for (int i = 0; i < k_count; ++i) b(l.c0 + i) = 1.0;
                b(l.alpha_c0 + k) = -1.0;
                prog.add(convex::affine_constraint(std::move(b), 0.0));
            }
            for (int k = 0; k < k_count; ++k) prog.add_lower_bound(l.c0 + k, 0.0);
            break;
        case ScaVariant::rs_maxsumse:
        case ScaVariant::rs_maxsinr:
            prog.add_lower_bound(l.alpha_c0, 0.0);
            break;
        case ScaVariant::nors_maxmin:
            for (int k = 0; k < k_count; ++k) {
                RVec a = RVec::Zero(l.total);
                a(l.t) = 1.0;
                a(l.alpha_p0 + k) = -1.0;
                prog.add(convex::affine_constraint(std::move(a), 0.0));
            }
            break;
    }
    return prog;
}

/// Strictly feasible warm start for the subproblem built at (st.nu, st.chi).
inline RVec sca_feasible_start(const ScaledCoeffs& sc, const ScaLayout& l, const ScaState& st) {
    const int k_count = l.num_ues;
    const bool sinr_mode = l.variant == ScaVariant::rs_maxsinr;
    RVec x = RVec::Zero(l.total);

    // Start amplitudes: near the expansion point but lifted off the zero
    // boundary far enough that the SINR slacks stay representable. The
    // subproblem is convex, so the start does not bias its optimum.
    RVec nu = st.nu;
    for (int j = 0; j < nu.size(); ++j) nu(j) = std::max(nu(j), 1e-3);
    if (l.has_common) nu(l.nu_c) = std::max(nu(l.nu_c), 1e-2);
    const double power = nu.squaredNorm();
    if (power > 1.0 - 1e-6) nu *= std::sqrt((1.0 - 1e-6) / power);
    const int nu_lo = l.has_common ? l.nu_c : l.nu0;
    for (int j = 0; j < nu.size(); ++j) x(nu_lo + j) = nu(j);

    ScaState at;
    at.nu = nu;
    auto psi = [&](int k, bool common) {
        const double a_coef = common ? sc.a_c(k) : sc.a_p(k);
        const double nubar = common ? st.nu(l.nu_c) : st.nu(l.nu0 + k);
        const double chibar = common ? st.chi_c(k) : st.chi_p(k);
        const double nu_now = common ? nu(l.nu_c) : nu(l.nu0 + k);
        const double chi_now = x((common ? l.chi_c0 : l.chi_p0) + k);
        return a_coef * (2.0 * nubar / chibar * nu_now - (nubar / chibar) * (nubar / chibar) * chi_now);
    };

    for (int k = 0; k < k_count; ++k)
        x(l.chi_p0 + k) = chi_rhs(sc, l, at, k, false) * (1.0 + 1e-9) + 1e-12;
    if (l.has_common)
        for (int k = 0; k < k_count; ++k)
            x(l.chi_c0 + k) = chi_rhs(sc, l, at, k, true) * (1.0 + 1e-9) + 1e-12;

    const double base = sinr_mode ? 0.0 : 1.0;
    // Slack floors must beat the representational granularity of the
    // constraint arithmetic around r ~ 1.
    auto r_from_psi = [&](double p) {
        if (p > 0.0) return base + p - std::max(p * 1e-7, std::min(1e-12, 0.5 * p));
        return base + p * (1.0 + 1e-7) - 1e-12;
    };
    auto alpha_from_r = [&](double r) {
        // Strictly below prelog*log2(r), positive whenever r > 1.
        const double lr = std::log2(r);
        const double gap = std::max(std::abs(lr) * 1e-7, std::min(1e-12, 0.5 * std::abs(lr)));
        return sc.prelog * (lr - std::max(gap, 1e-300));
    };
    RVec alpha_c_candidates(k_count);
    for (int k = 0; k < k_count; ++k) {
        const double r = r_from_psi(psi(k, false));
        if (!(r > 0.0)) return RVec();  // defer to phase I
        x(l.r_p0 + k) = r;
        x(l.alpha_p0 + k) = alpha_from_r(r);
    }
    if (l.has_common) {
        for (int k = 0; k < k_count; ++k) {
            const double r = r_from_psi(psi(k, true));
            if (!(r > 0.0)) return RVec();
            x(l.r_c0 + k) = r;
            alpha_c_candidates(k) = alpha_from_r(r);
        }
    }

    switch (l.variant) {
        case ScaVariant::rs_maxmin: {
            for (int k = 0; k < k_count; ++k) x(l.alpha_c0 + k) = alpha_c_candidates(k);
            const double cap = alpha_c_candidates.minCoeff();
            if (!(cap > 0.0)) return RVec();
            RVec c = st.c_shares.size() == k_count ? st.c_shares : RVec::Constant(k_count, cap / (2 * k_count));
            for (int k = 0; k < k_count; ++k) c(k) = std::max(c(k) * (1.0 - 1e-7), cap * 1e-9 / k_count);
            if (c.sum() > 0.5 * cap) c *= 0.5 * cap / c.sum();  // strictly inside sum(C) < min alpha_c
            for (int k = 0; k < k_count; ++k) x(l.c0 + k) = c(k);
            double tmin = std::numeric_limits<double>::infinity();
            for (int k = 0; k < k_count; ++k) tmin = std::min(tmin, x(l.alpha_p0 + k) + c(k));
            x(l.t) = tmin - 1e-7 * std::max(1.0, std::abs(tmin));
            break;
        }
        case ScaVariant::rs_maxsumse:
        case ScaVariant::rs_maxsinr: {
            const double cap = alpha_c_candidates.minCoeff();
            if (!(cap > 0.0)) return RVec();
            x(l.alpha_c0) = cap / 2.0;
            break;
        }
        case ScaVariant::nors_maxmin: {
            double tmin = std::numeric_limits<double>::infinity();
            for (int k = 0; k < k_count; ++k) tmin = std::min(tmin, x(l.alpha_p0 + k));
            x(l.t) = tmin - 1e-7 * std::max(1.0, std::abs(tmin));
            break;
        }
    }
    return x;
}

struct ScaRun {
    ScaState state;
    RVec c_shares;
    double objective = 0.0;
    std::vector<double> history;
    long newton = 0;
    int outer = 0;
};

inline ScaRun run_sca(const ScaledCoeffs& sc, ScaVariant variant, const RVec& nu0,
                      const ScaOptions& opts) {
    if (!(opts.epsilon > 0.0)) throw ConfigError("SCA: epsilon must be positive");
    if (opts.max_outer < 1) throw ConfigError("SCA: need at least one outer iteration");
    const ScaLayout l = make_layout(variant, sc.num_ues);
    ScaRun run;
    run.state.nu = nu0;
    // Initialization floor: a zero expansion amplitude would pin Psi at 0;
    // the linearization stays a global under-estimator at any positive point.
    for (int j = 0; j < run.state.nu.size(); ++j) run.state.nu(j) = std::max(run.state.nu(j), 1e-6);
    run.state.chi_p.resize(sc.num_ues);
    run.state.chi_c.resize(sc.num_ues);
    for (int k = 0; k < sc.num_ues; ++k) {
        run.state.chi_p(k) = chi_rhs(sc, l, run.state, k, false);
        if (l.has_common) run.state.chi_c(k) = chi_rhs(sc, l, run.state, k, true);
    }

    double prev = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < opts.max_outer; ++n) {
        const auto prog = build_sca_subproblem(sc, l, run.state);
        convex::SolveOptions sopts;
        sopts.tolerance = opts.subproblem_tolerance;
        const RVec x0 = sca_feasible_start(sc, l, run.state);
        if (x0.size() == l.total) sopts.x0 = x0;
        auto [x, report] = convex::solve(prog, sopts);
        run.newton += report.iterations;
        if (report.status == convex::SolveStatus::infeasible) {
            std::ostringstream oss;
            oss << "SCA subproblem infeasible at iteration " << n << "; nu = [";
            for (int j = 0; j < run.state.nu.size(); ++j) oss << (j ? ", " : "") << run.state.nu(j);
            oss << "]";
            throw NumericalError(oss.str());
        }
        const double obj = report.objective;
        if (obj < prev) break;  // converged up to solver tolerance; keep the previous iterate
        ++run.outer;
        run.history.push_back(obj);

        const int nu_lo = l.has_common ? l.nu_c : l.nu0;
        // Keep expansion amplitudes away from zero; the linearization is a
        // valid under-estimator at any positive anchor, and near-zero
        // anchors make the next subproblem needlessly ill-conditioned.
        for (int j = 0; j < run.state.nu.size(); ++j)
            run.state.nu(j) = std::max(x(nu_lo + j), 1e-6);
        for (int k = 0; k < sc.num_ues; ++k) {
            run.state.chi_p(k) = x(l.chi_p0 + k);
            if (l.has_common) run.state.chi_c(k) = x(l.chi_c0 + k);
        }
        if (variant == ScaVariant::rs_maxmin) {
            run.state.c_shares.resize(sc.num_ues);
            for (int k = 0; k < sc.num_ues; ++k) run.state.c_shares(k) = x(l.c0 + k);
        }
        run.objective = obj;
        if (std::abs(obj - prev) < opts.epsilon) break;
        prev = obj;
    }
    run.c_shares = run.state.c_shares.size() ? run.state.c_shares : RVec::Zero(sc.num_ues);
    return run;
}

/// Claimed objective recomputed from the returned allocation in the
/// scaled domain (checked against se_eval's milliwatt-domain evaluation).
inline double sca_claimed_objective(const ScaledCoeffs& sc, ScaVariant variant, double p_c, const RVec& p,
                                    const RVec& c_shares) {
    RVec gc, gp;
    scaled_sinrs(sc, p_c, p, gc, gp);
    switch (variant) {
        case ScaVariant::rs_maxmin: {
            double worst = std::numeric_limits<double>::infinity();
            for (int k = 0; k < sc.num_ues; ++k)
                worst = std::min(worst, sc.prelog * log2_1p(gp(k)) + c_shares(k));
            return worst;
        }
        case ScaVariant::rs_maxsumse:
            return scaled_sum_se(sc, p_c, p);
        case ScaVariant::rs_maxsinr: {
            double prod = gc.minCoeff();
            for (int k = 0; k < sc.num_ues; ++k) prod *= gp(k);
            return prod;
        }
        case ScaVariant::nors_maxmin: {
            double worst = std::numeric_limits<double>::infinity();
            for (int k = 0; k < sc.num_ues; ++k) worst = std::min(worst, sc.prelog * log2_1p(gp(k)));
            return worst;
        }
    }
    return 0.0;
}

inline AllocationResult finish_sca(const SECoefficients& coeffs, const ScaledCoeffs& sc,
                                   ScaVariant variant, double rho_dl_mw, const ScaRun& run) {
    const ScaLayout l = make_layout(variant, sc.num_ues);
    const int off = l.has_common ? 1 : 0;
    const double p_c = l.has_common ? run.state.nu(0) * run.state.nu(0) : 0.0;
    RVec p(sc.num_ues);
    for (int k = 0; k < sc.num_ues; ++k) p(k) = run.state.nu(off + k) * run.state.nu(off + k);

    RVec shares;
    if (variant == ScaVariant::rs_maxmin) {
        shares = run.c_shares;
        // The linearization under-estimates the true SINR, so sum(C) stays
        // below the achievable common SE; rescale only against rounding.
        RVec gc, gp;
        scaled_sinrs(sc, p_c, p, gc, gp);
        const double se_c = sc.prelog * log2_1p(gc.minCoeff());
        if (shares.sum() > se_c && shares.sum() > 0.0) shares *= se_c / shares.sum();
    } else if (l.has_common) {
        shares = equal_shares(sc, p_c, p);
    } else {
        shares = RVec::Zero(sc.num_ues);
    }

    AllocationResult res;
    res.alloc = make_allocation(rho_dl_mw, p_c, p, shares);
    res.rates = evaluate(coeffs, res.alloc);
    res.claimed_objective = sca_claimed_objective(sc, variant, p_c, p, shares);
    res.objective_history = run.history;
    res.solver_iterations = run.newton;
    res.sca_iterations = run.outer;
    return res;
}

inline RVec nu_from_common_fraction(const ScaledCoeffs& sc, double common_fraction, bool with_common) {
    if (common_fraction < 0.0 || common_fraction > 1.0)
        throw ConfigError("SCA initialization: common fraction must lie in [0, 1]");
    if (!with_common) return RVec::Constant(sc.num_ues, std::sqrt(1.0 / sc.num_ues));
    RVec nu(sc.num_ues + 1);
    nu(0) = std::sqrt(common_fraction);
    const double per_ue = (1.0 - common_fraction) / sc.num_ues;
    for (int k = 0; k < sc.num_ues; ++k) nu(1 + k) = std::sqrt(per_ue);
    return nu;
}

}  // namespace detail

/// RS MaxMin (SCA, Algorithm-3 style) with multi-start over the common
/// power fraction. Ties in the achieved objective break toward the
/// smaller common power.
inline AllocationResult maxmin_sca(const SECoefficients& coeffs, double rho_dl_mw,
                                   const ScaOptions& opts = {}) {
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    if (opts.common_fraction_inits.empty()) throw ConfigError("maxmin_sca: empty initialization set");
    std::optional<AllocationResult> best;
    long newton_total = 0;
    int outer_total = 0;
    for (double frac : opts.common_fraction_inits) {
        const auto run = detail::run_sca(sc, detail::ScaVariant::rs_maxmin,
                                         detail::nu_from_common_fraction(sc, frac, true), opts);
        auto res = detail::finish_sca(coeffs, sc, detail::ScaVariant::rs_maxmin, rho_dl_mw, run);
        newton_total += run.newton;
        outer_total += run.outer;
        res.note = "init_common_fraction=" + std::to_string(frac);
        const double tie = 1e-9 * std::max(1.0, std::abs(res.claimed_objective));
        if (!best || res.claimed_objective > best->claimed_objective + tie ||
            (res.claimed_objective > best->claimed_objective - tie &&
             res.alloc.rho_c_mw < best->alloc.rho_c_mw))
            best = std::move(res);
    }
    best->solver_iterations = newton_total;
    best->sca_iterations = outer_total;
    return *best;
}

/// NoRS MaxMin via the same SCA with the common stream removed; uniform
/// power initialization.
inline AllocationResult nors_sca(const SECoefficients& coeffs, double rho_dl_mw,
                                 const ScaOptions& opts = {}) {
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    const auto run = detail::run_sca(sc, detail::ScaVariant::nors_maxmin,
                                     detail::nu_from_common_fraction(sc, 0.0, false), opts);
    return detail::finish_sca(coeffs, sc, detail::ScaVariant::nors_maxmin, rho_dl_mw, run);
}

/// SCA-based MaxSum-SE; initialization rho_c = 0.1 rho_dl, rho_k = 0.9 rho_dl / K.
inline AllocationResult maxsumse_sca(const SECoefficients& coeffs, double rho_dl_mw,
                                     const ScaOptions& opts = {}) {
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    const auto run = detail::run_sca(sc, detail::ScaVariant::rs_maxsumse,
                                     detail::nu_from_common_fraction(sc, 0.1, true), opts);
    return detail::finish_sca(coeffs, sc, detail::ScaVariant::rs_maxsumse, rho_dl_mw, run);
}

/// SCA-based MaxSINR (local counterpart of the GP); same initialization
/// as maxsumse_sca.
inline AllocationResult maxsinr_sca(const SECoefficients& coeffs, double rho_dl_mw,
                                    const ScaOptions& opts = {}) {
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    const auto run = detail::run_sca(sc, detail::ScaVariant::rs_maxsinr,
                                     detail::nu_from_common_fraction(sc, 0.1, true), opts);
    return detail::finish_sca(coeffs, sc, detail::ScaVariant::rs_maxsinr, rho_dl_mw, run);
}

// ---------------------------------------------------------------------
// NoRS max-min via bisection (globally optimal baseline).
// ---------------------------------------------------------------------

namespace detail {

/// Feasibility of a target SINR gamma for all UEs within the unit budget.
/// The componentwise-minimal power satisfying every SINR constraint with
/// equality solves (diag(a_p) - gamma B_p) rho = gamma * sigma; any other
/// feasible point dominates it, so checking it is exact.
inline bool bisection_feasible(const ScaledCoeffs& sc, double gamma, RVec& rho_out) {
    const int num_ues = sc.num_ues;
    RMat m = RMat::Zero(num_ues, num_ues);
    for (int k = 0; k < num_ues; ++k)
        for (int i = 0; i < num_ues; ++i) m(k, i) = (k == i ? sc.a_p(k) : 0.0) - gamma * sc.B_p(k, i);
    const RVec rhs = RVec::Constant(num_ues, gamma);
    Eigen::PartialPivLU<RMat> lu(m);
    const RVec rho = lu.solve(rhs);
    if (!rho.allFinite()) return false;
    if ((m * rho - rhs).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
        return false;
    if ((rho.array() < -1e-12).any()) return false;
    if (rho.sum() > 1.0) return false;
    rho_out = rho.cwiseMax(0.0);
    return true;
}

}  // namespace detail

inline AllocationResult nors_maxmin_bisection(const SECoefficients& coeffs, double rho_dl_mw,
                                              double tolerance = 1e-6) {
    if (!(tolerance > 0.0)) throw ConfigError("nors_maxmin_bisection: tolerance must be positive");
    const auto sc = detail::scale_coefficients(coeffs, rho_dl_mw);
    const int num_ues = sc.num_ues;

    double lo = 0.0;
    double hi = sc.a_p.maxCoeff();  // single-UE full-budget SINR ceiling
    RVec rho_best = RVec::Constant(num_ues, 1.0 / num_ues);
    RVec scratch(num_ues);
    int iterations = 0;
    while (hi - lo > tolerance * std::max(1.0, hi) && iterations < 200) {
        const double gamma = 0.5 * (lo + hi);
        if (detail::bisection_feasible(sc, gamma, scratch)) {
            lo = gamma;
            rho_best = scratch;
        } else {
            hi = gamma;
        }
        ++iterations;
    }
    // Spend the remaining budget proportionally; uniform scaling can only
    // raise every SINR.
    const double total = rho_best.sum();
    if (total > 0.0) rho_best /= total;

    AllocationResult res;
    res.alloc = detail::make_allocation(rho_dl_mw, 0.0, rho_best, RVec::Zero(num_ues));
    res.rates = evaluate(coeffs, res.alloc);
    res.claimed_objective =
        detail::sca_claimed_objective(sc, detail::ScaVariant::nors_maxmin, 0.0, rho_best, RVec());
    res.solver_iterations = iterations;
    res.note = "gamma=" + std::to_string(lo);
    return res;
}

/// Dispatch by scheme name.
inline AllocationResult run_scheme(SchemeId scheme, const SECoefficients& coeffs, double rho_dl_mw,
                                   const ScaOptions& sca, double grid_delta = 0.05,
                                   double bisection_tol = 1e-6) {
    switch (scheme) {
        case SchemeId::rs_maxsum_grid: return maxsum_grid(coeffs, rho_dl_mw, grid_delta);
        case SchemeId::rs_maxsinr_gp: return maxsinr_gp(coeffs, rho_dl_mw);
        case SchemeId::rs_maxmin_sca: return maxmin_sca(coeffs, rho_dl_mw, sca);
        case SchemeId::rs_maxsumse_sca: return maxsumse_sca(coeffs, rho_dl_mw, sca);
        case SchemeId::rs_maxsinr_sca: return maxsinr_sca(coeffs, rho_dl_mw, sca);
        case SchemeId::nors_maxsum: return nors_maxsum(coeffs, rho_dl_mw);
        case SchemeId::nors_gp: return nors_gp(coeffs, rho_dl_mw);
        case SchemeId::nors_sca: return nors_sca(coeffs, rho_dl_mw, sca);
        case SchemeId::nors_bisection: return nors_maxmin_bisection(coeffs, rho_dl_mw, bisection_tol);
    }
    throw ConfigError("run_scheme: unhandled scheme");
}

}  // namespace rsmimo
