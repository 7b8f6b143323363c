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

#include "rsmimo/chanstat.hpp"
#include "rsmimo/convex/solver.hpp"

#include <string>
#include <vector>

namespace rsmimo {

/// MR precoder for the private stream: w_k = g_hat_k / sqrt(tr(Phi_k)),
/// so that E{||w_k||^2} = 1 exactly.
inline CVec mr_private_precoder(const CVec& g_hat_k, const CMat& phi_k, int ue_index = -1) {
    const double tr_phi = phi_k.trace().real();
    if (!(tr_phi > 0.0))
        throw NumericalError("mr_private_precoder: tr(Phi) is zero for UE " + std::to_string(ue_index));
    return g_hat_k / std::sqrt(tr_phi);
}

/// Closed-form private-stream expectations under MR precoding:
///   a_p(k)     = tr(Phi_k) = |E{g_k^H w_k}|^2
///   cross(k,i) = E{|g_k^H w_i|^2} = (tr(R_k Phi_i) + U(i,k)^2) / tr(Phi_i)
/// The U-based form serves both pilot modes (U is diagonal when pilots
/// are orthogonal).
struct PrivateExpectations {
    RVec a_p;
    RMat cross;
};

inline PrivateExpectations private_expectations(const std::vector<SpatialCorrelation>& correlations,
                                                const EstimationStatistics& stats) {
    const int num_ues = stats.num_ues;
    PrivateExpectations out;
    out.a_p = stats.tr_phi;
    out.cross.resize(num_ues, num_ues);
    for (int k = 0; k < num_ues; ++k) {
        for (int i = 0; i < num_ues; ++i) {
            const double tr_rk_phi_i = trace_of_product(correlations[k].R, stats.phi[i]).real();
            const double u_ik = stats.U(i, k);
            out.cross(k, i) = (tr_rk_phi_i + u_ik * u_ik) / stats.tr_phi(i);
        }
    }
    return out;
}

/// Optimized weights of the common precoder w_c = sum_i a_i g_hat_i.
///
/// Solves   max t  s.t.  a'U(:,k) >= t for all k,   a'Ua <= 1,
/// i.e. the statistics-only max-min design with the unit-average-power
/// normalization E{||w_c||^2} <= 1 made explicit. The returned weights are
/// rescaled so that a'Ua = 1 exactly.
struct CommonWeights {
    RVec a;
    double t_star = 0.0;
    double normalization = 1.0;  // sqrt(a'Ua) before the final rescale
    convex::SolverReport report;
};

inline CommonWeights common_weights(const RMat& u, double tolerance = 1e-9) {
    const int num_ues = static_cast<int>(u.rows());
    if (num_ues < 1 || u.cols() != num_ues) throw ConfigError("common_weights: U must be square");
    const double u_scale = u.cwiseAbs().maxCoeff();
    if (!(u_scale > 0.0)) throw ConfigError("common_weights: U is zero; program infeasible");
    const RMat us = u / u_scale;

    convex::SmoothConvexProgram prog;
    prog.num_vars = num_ues + 1;  // (a, t)
    prog.objective = RVec::Zero(num_ues + 1);
    prog.objective(num_ues) = 1.0;
    for (int k = 0; k < num_ues; ++k) {
        RVec a = RVec::Zero(num_ues + 1);
        a.head(num_ues) = -us.col(k);
        a(num_ues) = 1.0;
        prog.add(convex::affine_constraint(std::move(a), 0.0));
    }
    RMat p = RMat::Zero(num_ues + 1, num_ues + 1);
    p.topLeftCorner(num_ues, num_ues) = 2.0 * us;
    prog.add(convex::quadratic_constraint(std::move(p), RVec::Zero(num_ues + 1), -1.0));

    // Interior start: a small positive multiple of the equal-weight vector.
    RVec x0 = RVec::Zero(num_ues + 1);
    const RVec ones = RVec::Ones(num_ues);
    const double quad = ones.dot(us * ones);
    x0.head(num_ues) = (quad > 0.0 ? 0.1 / std::sqrt(quad) : 0.1) * ones;
    x0(num_ues) = (us * x0.head(num_ues)).minCoeff() - 1.0;

    convex::SolveOptions opts;
    opts.tolerance = tolerance;
    opts.x0 = x0;
    auto [x, report] = convex::solve(prog, opts);
    if (report.status == convex::SolveStatus::infeasible)
        throw NumericalError("common_weights: solver reported infeasible");

    CommonWeights w;
    w.a = x.head(num_ues) / std::sqrt(u_scale);
    const double norm_sq = w.a.dot(u * w.a);
    if (!(norm_sq > 0.0)) throw NumericalError("common_weights: degenerate weights");
    w.normalization = std::sqrt(norm_sq);
    w.a /= w.normalization;
    w.t_star = (u * w.a).minCoeff();
    w.report = report;
    return w;
}

/// Per-realization common precoder, Eq-form w_c = sum a_i g_hat_i / sqrt(a'Ua).
inline CVec common_precoder_vector(const CommonWeights& weights, const std::vector<CVec>& g_hats,
                                   const RMat& u) {
    const int num_ues = static_cast<int>(g_hats.size());
    CVec wc = CVec::Zero(g_hats[0].size());
    for (int i = 0; i < num_ues; ++i) wc += weights.a(i) * g_hats[i];
    return wc / std::sqrt(weights.a.dot(u * weights.a));
}

enum class CommonClosedFormPath { appendix_inverse, fourth_moment, orthogonal_independence };

inline const char* to_string(CommonClosedFormPath p) {
    switch (p) {
        case CommonClosedFormPath::appendix_inverse: return "appendix_inverse";
        case CommonClosedFormPath::fourth_moment: return "fourth_moment";
        case CommonClosedFormPath::orthogonal_independence: return "orthogonal_independence";
    }
    return "?";
}

/// Closed-form common-stream expectations:
///   a_c(k)           = |E{g_k^H w_c}|^2
///   second_moment(k) = E{|g_k^H w_c|^2}
///   I_c(k)           = second_moment(k) - a_c(k)
struct CommonExpectations {
    RVec a_c;
    RVec second_moment;
    RVec I_c;
    CommonClosedFormPath path = CommonClosedFormPath::fourth_moment;
};

namespace detail {

/// E{g_k^H ghat_i ghat_j^H g_k} for every (i,j) at fixed k, shared pilots,
/// via the Gaussian fourth-moment identity (no R_i inverses):
///   tr(R_i Q^-1 R_j R_k) + tr(R_i Q^-1 R_k) tr(R_k Q^-1 R_j).
inline RMat quad_form_fourth_moment(int k, const std::vector<SpatialCorrelation>& correlations,
                                    const EstimationStatistics& stats) {
    const int num_ues = stats.num_ues;
    RMat e(num_ues, num_ues);
    std::vector<CMat> rj_rk(num_ues);
    for (int j = 0; j < num_ues; ++j) rj_rk[j] = correlations[j].R * correlations[k].R;
    for (int i = 0; i < num_ues; ++i) {
        const CMat wi_adj = stats.w[i].adjoint();  // R_i Q^-1
        for (int j = 0; j < num_ues; ++j) {
            const double t = trace_of_product(wi_adj, rj_rk[j]).real();
            e(i, j) = t + stats.U(i, k) * stats.U(k, j);
        }
    }
    return e;
}

/// Same quantity through the R_i^-1 reduction (requires invertible R_i):
///   tr(R_i^-1 R_j [ Phi_k Phi_i + U(i,k) R_k Q^-1 R_i + (R_k - Phi_k) Phi_i ]).
inline RMat quad_form_appendix(int k, const std::vector<SpatialCorrelation>& correlations,
                               const EstimationStatistics& stats,
                               const std::vector<CMat>& r_inverse) {
    const int num_ues = stats.num_ues;
    RMat e(num_ues, num_ues);
    for (int i = 0; i < num_ues; ++i) {
        const CMat rk_qinv_ri = stats.w[k].adjoint() * correlations[i].R;  // R_k Q^-1 R_i
        const CMat inner = stats.phi[k] * stats.phi[i] + stats.U(i, k) * rk_qinv_ri +
                           stats.error_cov[k] * stats.phi[i];
        for (int j = 0; j < num_ues; ++j)
            e(i, j) = trace_of_product(r_inverse[i] * correlations[j].R, inner).real();
    }
    return e;
}

inline bool all_well_conditioned(const std::vector<SpatialCorrelation>& correlations,
                                 std::vector<CMat>& r_inverse, double condition_limit) {
    r_inverse.clear();
    for (const auto& c : correlations) {
        Eigen::SelfAdjointEigenSolver<CMat> eig(c.R);
        if (eig.info() != Eigen::Success) return false;
        const double lmin = eig.eigenvalues().minCoeff();
        const double lmax = eig.eigenvalues().maxCoeff();
        if (!(lmin > 0.0) || lmax / lmin >= condition_limit) return false;
        r_inverse.push_back(eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                            eig.eigenvectors().adjoint());
    }
    return true;
}

}  // namespace detail

inline CommonExpectations common_precoder_expectations(
    const std::vector<SpatialCorrelation>& correlations, const EstimationStatistics& stats,
    const CommonWeights& weights, double condition_limit = 1e10) {
    const int num_ues = stats.num_ues;
    const RVec& a = weights.a;
    const double denom = a.dot(stats.U * a);
    if (!(denom > 0.0)) throw NumericalError("common_precoder_expectations: zero normalization");

    CommonExpectations out;
    out.a_c.resize(num_ues);
    out.second_moment.resize(num_ues);
    out.I_c.resize(num_ues);

    std::vector<CMat> r_inverse;
    if (stats.mode == PilotMode::orthogonal) {
        out.path = CommonClosedFormPath::orthogonal_independence;
    } else if (detail::all_well_conditioned(correlations, r_inverse, condition_limit)) {
        out.path = CommonClosedFormPath::appendix_inverse;
    } else {
        out.path = CommonClosedFormPath::fourth_moment;
    }

    for (int k = 0; k < num_ues; ++k) {
        const double mean_k = a.dot(stats.U.col(k));  // E{g_k^H w_c} * sqrt(denom)
        out.a_c(k) = mean_k * mean_k / denom;

        RMat e;
        switch (out.path) {
            case CommonClosedFormPath::appendix_inverse:
                e = detail::quad_form_appendix(k, correlations, stats, r_inverse);
                break;
            case CommonClosedFormPath::fourth_moment:
                e = detail::quad_form_fourth_moment(k, correlations, stats);
                break;
            case CommonClosedFormPath::orthogonal_independence: {
                // Independent zero-mean estimates: only i == j terms survive,
                // plus the coherent part through the diagonal U.
                e = RMat::Zero(num_ues, num_ues);
                for (int i = 0; i < num_ues; ++i)
                    e(i, i) = trace_of_product(correlations[k].R, stats.phi[i]).real();
                e(k, k) += stats.tr_phi(k) * stats.tr_phi(k);
                break;
            }
        }
        out.second_moment(k) = a.dot(e * a) / denom;
        out.I_c(k) = out.second_moment(k) - out.a_c(k);
    }
    return out;
}

}  // namespace rsmimo
