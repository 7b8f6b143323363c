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

#include "rsmimo/precoding.hpp"

#include <vector>

namespace rsmimo {

/// SINR coefficients of the hardening bound, all in linear milliwatt
/// units:
///   gamma_c(k) = rho_c a_c(k) / (sum_i rho_i B_c(k,i) + rho_c I_c(k) + sigma_n^2)
///   gamma_p(k) = rho_k a_p(k) / (sum_i rho_i B_p(k,i) + rho_c I_c(k) + sigma_n^2)
struct SECoefficients {
    int num_ues = 0;
    RVec a_c;
    RVec a_p;
    RMat B_c;   // B_c(k,i) = E{|g_k^H w_i|^2}
    RMat B_p;   // off-diag as B_c; diagonal is the beamforming-gain uncertainty
    RVec I_c;
    double sigma_n_sq_mw = 1.0;
    double prelog = 1.0;  // tau_d / tau
};

namespace detail {

/// Clips small negative numerical dust to zero; anything below
/// -1e-6*scale indicates an upstream bug when strict.
inline double clip_dust(double v, double scale, bool strict) {
    if (v >= 0.0) return v;
    if (strict && v < -1e-6 * scale)
        throw NumericalError("SE coefficient significantly negative; upstream bug");
    return 0.0;
}

inline SECoefficients assemble_coefficients(const PrivateExpectations& priv, const RVec& a_c,
                                            const RVec& common_second_moment, double sigma_n_sq_mw,
                                            double prelog, bool strict) {
    const int num_ues = static_cast<int>(priv.a_p.size());
    if (!(prelog > 0.0) || prelog > 1.0) throw ConfigError("SE coefficients: prelog must lie in (0,1]");
    if (!(sigma_n_sq_mw > 0.0)) throw ConfigError("SE coefficients: noise power must be positive");

    SECoefficients c;
    c.num_ues = num_ues;
    c.sigma_n_sq_mw = sigma_n_sq_mw;
    c.prelog = prelog;
    c.B_c = priv.cross;
    c.B_p = priv.cross;
    c.a_p = priv.a_p;
    c.a_c = a_c;
    c.I_c.resize(num_ues);

    double scale = sigma_n_sq_mw;
    scale = std::max(scale, priv.cross.cwiseAbs().maxCoeff());
    scale = std::max(scale, priv.a_p.cwiseAbs().maxCoeff());
    scale = std::max(scale, a_c.cwiseAbs().maxCoeff());

    for (int k = 0; k < num_ues; ++k) {
        c.B_p(k, k) = priv.cross(k, k) - priv.a_p(k);
        c.I_c(k) = common_second_moment(k) - a_c(k);
    }
    for (int k = 0; k < num_ues; ++k) {
        c.a_p(k) = clip_dust(c.a_p(k), scale, strict);
        c.a_c(k) = clip_dust(c.a_c(k), scale, strict);
        c.I_c(k) = clip_dust(c.I_c(k), scale, strict);
        for (int i = 0; i < num_ues; ++i) {
            c.B_c(k, i) = clip_dust(c.B_c(k, i), scale, strict);
            c.B_p(k, i) = clip_dust(c.B_p(k, i), scale, strict);
        }
    }
    return c;
}

}  // namespace detail

inline SECoefficients build_coefficients(const PrivateExpectations& priv,
                                         const CommonExpectations& common, double sigma_n_sq_mw,
                                         double prelog) {
    return detail::assemble_coefficients(priv, common.a_c, common.second_moment, sigma_n_sq_mw, prelog,
                                         /*strict=*/true);
}

/// Power split plus the per-UE shares of the common-stream SE.
struct PowerAllocation {
    double rho_c_mw = 0.0;
    RVec rho_mw;
    double budget_mw = 0.0;
    RVec c_shares;  // C_k, bits/s/Hz

    double total_power() const { return rho_c_mw + rho_mw.sum(); }

    void validate() const {
        if (!(budget_mw > 0.0)) throw ConfigError("PowerAllocation: budget must be positive");
        if (rho_c_mw < 0.0 || (rho_mw.array() < 0.0).any())
            throw ConfigError("PowerAllocation: powers must be nonnegative");
        if (total_power() > budget_mw * (1.0 + 1e-8))
            throw ConfigError("PowerAllocation: budget exceeded");
        if (c_shares.size() && (c_shares.array() < 0.0).any())
            throw ConfigError("PowerAllocation: common shares must be nonnegative");
    }
};

struct RateResult {
    double se_c = 0.0;   // common-stream SE, prelog*log2(1+min_k gamma_c)
    RVec se_p;           // private SEs
    RVec se_total;       // SE_k = SE_p,k + C_k
    double sum_se = 0.0; // se_c + sum(se_p)
    double min_se = 0.0; // min_k se_total
    RVec gamma_c;
    RVec gamma_p;
};

inline RateResult evaluate(const SECoefficients& c, const PowerAllocation& alloc) {
    alloc.validate();
    const int num_ues = c.num_ues;
    if (alloc.rho_mw.size() != num_ues) throw ConfigError("evaluate: allocation size mismatch");

    RateResult r;
    r.gamma_c.resize(num_ues);
    r.gamma_p.resize(num_ues);
    r.se_p.resize(num_ues);
    r.se_total.resize(num_ues);
    for (int k = 0; k < num_ues; ++k) {
        const double common_leak = alloc.rho_c_mw * c.I_c(k) + c.sigma_n_sq_mw;
        const double denom_c = c.B_c.row(k).dot(alloc.rho_mw) + common_leak;
        const double denom_p = c.B_p.row(k).dot(alloc.rho_mw) + common_leak;
        r.gamma_c(k) = alloc.rho_c_mw * c.a_c(k) / denom_c;
        r.gamma_p(k) = alloc.rho_mw(k) * c.a_p(k) / denom_p;
        r.se_p(k) = c.prelog * log2_1p(r.gamma_p(k));
    }
    r.se_c = c.prelog * log2_1p(r.gamma_c.minCoeff());
    const RVec shares = alloc.c_shares.size() ? alloc.c_shares : RVec::Zero(num_ues);
    if (shares.sum() > r.se_c * (1.0 + 1e-8) + 1e-12)
        throw ConfigError("evaluate: common shares exceed the common-stream SE");
    r.se_total = r.se_p + shares;
    r.sum_se = r.se_c + r.se_p.sum();
    r.min_se = r.se_total.minCoeff();
    return r;
}

/// Empirical counterpart of build_coefficients: samples channels and
/// estimates, forms the MR and weighted-MR precoders per realization and
/// averages every expectation in the SINR bounds. This is the oracle the
/// closed forms are validated against.
inline SECoefficients monte_carlo_coefficients(const std::vector<SpatialCorrelation>& correlations,
                                               const EstimationStatistics& stats,
                                               const PilotAssignment& pilots,
                                               const CommonWeights& weights, long n_samples, Rng& rng,
                                               double sigma_n_sq_mw, double prelog) {
    if (n_samples < 1) throw ConfigError("monte_carlo_coefficients: need n_samples >= 1");
    const int num_ues = stats.num_ues;
    ChannelSampler sampler(correlations, stats, pilots);

    const RVec inv_sqrt_tr_phi = stats.tr_phi.cwiseSqrt().cwiseInverse();
    const double wc_norm = std::sqrt(weights.a.dot(stats.U * weights.a));

    std::vector<Complex> mean_private(num_ues, Complex(0, 0));
    std::vector<Complex> mean_common(num_ues, Complex(0, 0));
    RMat second_cross = RMat::Zero(num_ues, num_ues);
    RVec second_common = RVec::Zero(num_ues);

    for (long s = 0; s < n_samples; ++s) {
        const ChannelSample sample = sampler.draw(rng);
        CVec wc = CVec::Zero(stats.num_antennas);
        for (int i = 0; i < num_ues; ++i) wc += weights.a(i) * sample.g_hat[i];
        wc /= wc_norm;
        for (int k = 0; k < num_ues; ++k) {
            for (int i = 0; i < num_ues; ++i) {
                const Complex dot = sample.g[k].dot(sample.g_hat[i]) * inv_sqrt_tr_phi(i);
                if (i == k) mean_private[k] += dot;
                second_cross(k, i) += std::norm(dot);
            }
            const Complex dot_c = sample.g[k].dot(wc);
            mean_common[k] += dot_c;
            second_common(k) += std::norm(dot_c);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n_samples);
    PrivateExpectations priv;
    priv.a_p.resize(num_ues);
    priv.cross = second_cross * inv_n;
    RVec a_c(num_ues);
    for (int k = 0; k < num_ues; ++k) {
        priv.a_p(k) = std::norm(mean_private[k] * inv_n);
        a_c(k) = std::norm(mean_common[k] * inv_n);
    }
    // Lenient clipping: at small sample counts the empirical variance
    // identities can go slightly negative.
    return detail::assemble_coefficients(priv, a_c, second_common * inv_n, sigma_n_sq_mw, prelog,
                                         /*strict=*/false);
}

}  // namespace rsmimo
