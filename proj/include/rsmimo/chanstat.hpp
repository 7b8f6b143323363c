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
#include "rsmimo/geometry.hpp"

#include <utility>
#include <vector>

namespace rsmimo {

enum class PilotMode { shared_single_pilot, orthogonal };

/// UL training configuration. Pilot sequences are never materialized:
/// with unit-norm pilots the despread observation is exactly the
/// sufficient statistic used in estimation_statistics / sample_channels.
struct PilotAssignment {
    PilotMode mode = PilotMode::shared_single_pilot;
    int tau_p = 10;
    double rho_ul_mw = 10.0;
    double sigma_ul_sq_mw = 1.0;

    void validate(int num_ues) const {
        if (tau_p < 1) throw ConfigError("PilotAssignment: tau_p must be >= 1");
        if (!(rho_ul_mw > 0.0)) throw ConfigError("PilotAssignment: rho_ul must be positive");
        if (!(sigma_ul_sq_mw > 0.0)) throw ConfigError("PilotAssignment: sigma_ul^2 must be positive");
        if (mode == PilotMode::orthogonal && tau_p < num_ues)
            throw ConfigError("PilotAssignment: orthogonal mode needs tau_p >= K");
    }
};

/// MMSE estimation statistics. Everything downstream (precoders, SE
/// coefficients) is a function of these.
///
/// Shared mode:      Q = sum_i R_i + (sigma^2/rho) I,  Phi_k = R_k Q^-1 R_k,
///                   U(i,k) = tr(R_i Q^-1 R_k).
/// Orthogonal mode:  Q_k = R_k + (sigma^2/rho) I,      Phi_k = R_k Q_k^-1 R_k,
///                   U diagonal with U(k,k) = tr(Phi_k).
struct EstimationStatistics {
    PilotMode mode;
    int num_antennas = 0;
    int num_ues = 0;
    CMat Q;                       // shared mode only
    std::vector<CMat> Q_k;        // orthogonal mode only
    std::vector<CMat> phi;        // estimate covariances Phi_k
    std::vector<CMat> error_cov;  // R_k - Phi_k
    std::vector<CMat> w;          // W_k = Q^-1 R_k (or Q_k^-1 R_k); estimator A_k = W_k^H
    RMat U;                       // estimate Gram matrix, real after the imag check
    RVec tr_phi;

    const CMat& estimator_weight(int k) const { return w[k]; }
};

inline EstimationStatistics estimation_statistics(const std::vector<SpatialCorrelation>& correlations,
                                                  const PilotAssignment& pilots) {
    const int num_ues = static_cast<int>(correlations.size());
    if (num_ues < 1) throw ConfigError("estimation_statistics: need at least one UE");
    pilots.validate(num_ues);
    const int m = static_cast<int>(correlations[0].R.rows());
    for (const auto& c : correlations)
        if (c.R.rows() != m || c.R.cols() != m)
            throw ConfigError("estimation_statistics: correlation matrices must share dimensions");

    EstimationStatistics stats;
    stats.mode = pilots.mode;
    stats.num_antennas = m;
    stats.num_ues = num_ues;
    stats.phi.resize(num_ues);
    stats.error_cov.resize(num_ues);
    stats.w.resize(num_ues);
    stats.tr_phi.resize(num_ues);

    const double noise_over_power = pilots.sigma_ul_sq_mw / pilots.rho_ul_mw;
    CMat u_complex = CMat::Zero(num_ues, num_ues);

    auto hermitize = [](CMat& a) { a = 0.5 * (a + a.adjoint()).eval(); };

    if (pilots.mode == PilotMode::shared_single_pilot) {
        stats.Q = noise_over_power * CMat::Identity(m, m);
        for (const auto& c : correlations) stats.Q += c.R;
        hermitize(stats.Q);
        Eigen::LLT<CMat> llt(stats.Q);
        if (llt.info() != Eigen::Success)
            throw NumericalError("estimation_statistics: Q factorization failed");
        for (int k = 0; k < num_ues; ++k) {
            stats.w[k] = llt.solve(correlations[k].R);  // Q^-1 R_k
            stats.phi[k] = correlations[k].R * stats.w[k];
            hermitize(stats.phi[k]);
            stats.error_cov[k] = correlations[k].R - stats.phi[k];
            stats.tr_phi(k) = stats.phi[k].trace().real();
        }
        for (int k = 0; k < num_ues; ++k)
            for (int i = 0; i < num_ues; ++i)
                u_complex(i, k) = trace_of_product(correlations[i].R, stats.w[k]);
    } else {
        stats.Q_k.resize(num_ues);
        for (int k = 0; k < num_ues; ++k) {
            stats.Q_k[k] = correlations[k].R + noise_over_power * CMat::Identity(m, m);
            hermitize(stats.Q_k[k]);
            Eigen::LLT<CMat> llt(stats.Q_k[k]);
            if (llt.info() != Eigen::Success)
                throw NumericalError("estimation_statistics: Q_k factorization failed");
            stats.w[k] = llt.solve(correlations[k].R);
            stats.phi[k] = correlations[k].R * stats.w[k];
            hermitize(stats.phi[k]);
            stats.error_cov[k] = correlations[k].R - stats.phi[k];
            stats.tr_phi(k) = stats.phi[k].trace().real();
            u_complex(k, k) = stats.tr_phi(k);
        }
    }

    // U is mathematically real for ULA (Toeplitz) and diagonal correlation
    // models; the common-weight program is posed over real weights.
    const double u_scale = u_complex.cwiseAbs().maxCoeff();
    const double max_imag = u_complex.imag().cwiseAbs().maxCoeff();
    if (u_scale > 0.0 && max_imag > 1e-8 * u_scale)
        throw NumericalError("estimation_statistics: estimate Gram matrix has non-negligible imaginary part");
    stats.U = 0.5 * (u_complex.real() + u_complex.real().transpose());
    return stats;
}

/// One block-fading realization for all UEs: g = g_hat + g_tilde exactly.
struct ChannelSample {
    std::vector<CVec> g;
    std::vector<CVec> g_hat;
    std::vector<CVec> g_tilde;
};

/// Precomputed factors for drawing channel realizations and their MMSE
/// estimates. Immutable after construction; sampling uses caller streams.
class ChannelSampler {
  public:
    ChannelSampler(const std::vector<SpatialCorrelation>& correlations, const EstimationStatistics& stats,
                   const PilotAssignment& pilots)
        : mode_(pilots.mode), noise_scale_(std::sqrt(pilots.sigma_ul_sq_mw / pilots.rho_ul_mw)) {
        pilots.validate(static_cast<int>(correlations.size()));
        if (stats.num_ues != static_cast<int>(correlations.size()))
            throw ConfigError("ChannelSampler: statistics/correlations mismatch");
        num_antennas_ = stats.num_antennas;
        for (const auto& c : correlations) chol_.push_back(psd_factor(c.R));
        for (const auto& w : stats.w) estimator_.push_back(w.adjoint());  // A_k = R_k Q^-1
    }

    ChannelSample draw(Rng& rng) const {
        const int num_ues = static_cast<int>(chol_.size());
        ChannelSample sample;
        sample.g.resize(num_ues);
        sample.g_hat.resize(num_ues);
        sample.g_tilde.resize(num_ues);
        for (int k = 0; k < num_ues; ++k)
            sample.g[k] = chol_[k] * standard_complex_gaussian(num_antennas_, rng);
        if (mode_ == PilotMode::shared_single_pilot) {
            CVec observed = noise_scale_ * standard_complex_gaussian(num_antennas_, rng);
            for (int k = 0; k < num_ues; ++k) observed += sample.g[k];
            for (int k = 0; k < num_ues; ++k) sample.g_hat[k] = estimator_[k] * observed;
        } else {
            for (int k = 0; k < num_ues; ++k) {
                const CVec observed =
                    sample.g[k] + noise_scale_ * standard_complex_gaussian(num_antennas_, rng);
                sample.g_hat[k] = estimator_[k] * observed;
            }
        }
        for (int k = 0; k < num_ues; ++k) sample.g_tilde[k] = sample.g[k] - sample.g_hat[k];
        return sample;
    }

  private:
    PilotMode mode_;
    double noise_scale_;
    int num_antennas_ = 0;
    std::vector<CMat> chol_;
    std::vector<CMat> estimator_;
};

inline ChannelSample sample_channels(const std::vector<SpatialCorrelation>& correlations,
                                     const EstimationStatistics& stats, const PilotAssignment& pilots,
                                     Rng& rng) {
    return ChannelSampler(correlations, stats, pilots).draw(rng);
}

struct DependenceResidual {
    double max_residual = 0.0;
    std::vector<std::pair<int, int>> skipped_pairs;  // (i, k) pairs not checked
};

/// Checks the shared-pilot identity g_hat_k = R_k R_i^-1 g_hat_i on a
/// sampled realization. Ill-conditioned R_i (condition number >= 1e10)
/// are skipped and reported.
inline DependenceResidual verify_estimate_dependence(const ChannelSample& sample,
                                                     const std::vector<SpatialCorrelation>& correlations,
                                                     PilotMode mode,
                                                     double condition_limit = 1e10) {
    if (mode != PilotMode::shared_single_pilot)
        throw ConfigError("verify_estimate_dependence: identity only applies to shared pilots");
    const int num_ues = static_cast<int>(correlations.size());
    DependenceResidual out;
    for (int i = 0; i < num_ues; ++i) {
        Eigen::SelfAdjointEigenSolver<CMat> eig(correlations[i].R);
        if (eig.info() != Eigen::Success) throw NumericalError("verify_estimate_dependence: eig failed");
        const double lmin = eig.eigenvalues().minCoeff();
        const double lmax = eig.eigenvalues().maxCoeff();
        if (!(lmin > 0.0) || lmax / lmin >= condition_limit) {
            for (int k = 0; k < num_ues; ++k)
                if (k != i) out.skipped_pairs.emplace_back(i, k);
            continue;
        }
        const CVec inv_g_hat_i =
            eig.eigenvectors() *
            (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().adjoint() * sample.g_hat[i]));
        for (int k = 0; k < num_ues; ++k) {
            if (k == i) continue;
            const double denom = sample.g_hat[k].norm();
            if (denom == 0.0) continue;
            const double resid = (sample.g_hat[k] - correlations[k].R * inv_g_hat_i).norm() / denom;
            out.max_residual = std::max(out.max_residual, resid);
        }
    }
    return out;
}

}  // namespace rsmimo
