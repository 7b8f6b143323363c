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

#include "rsmimo/harness/config.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace rsmimo {

struct ResultRecord {
    int setup = 0;
    SchemeId scheme = SchemeId::nors_maxsum;
    std::uint64_t setup_seed = 0;
    double se_c = 0.0;
    RVec se_total;           // per-UE SE_k
    double sum_se = 0.0;
    double min_se = 0.0;
    double rho_c_mw = 0.0;
    double rho_c_fraction = 0.0;
    long solver_iterations = 0;
    double wallclock_ms = 0.0;
    double mc_max_rel_err = std::numeric_limits<double>::quiet_NaN();  // validation runs only
};

struct SchemeAggregate {
    SchemeId scheme;
    int n_setups = 0;
    double mean_sum_se = 0.0;
    double mean_min_se = 0.0;
    double mean_per_ue_se = 0.0;
    double mean_se_c = 0.0;
    double mean_rho_c_fraction = 0.0;
    double mean_wallclock_ms = 0.0;
};

struct GainEntry {
    SchemeId rs_scheme;
    SchemeId nors_scheme;
    double gain_mean_per_ue = 0.0;  // (RS - NoRS)/RS on mean per-UE SE
    double gain_min_se = 0.0;
    double gain_sum_se = 0.0;
};

struct CampaignResult {
    std::vector<ResultRecord> records;  // ordered by (setup, scheme position)
    std::vector<SchemeAggregate> aggregates;
    std::vector<GainEntry> gains;
    double total_wallclock_ms = 0.0;
};

/// Everything derived from one random setup's statistics, reusable by all
/// schemes.
struct SetupModel {
    NetworkGeometry geometry;
    LargeScaleFading fading;
    std::vector<SpatialCorrelation> correlations;
    EstimationStatistics stats;
    CommonWeights weights;
    PrivateExpectations priv;
    CommonExpectations common;
    SECoefficients coeffs;
};

inline SetupModel build_setup_model(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    SetupModel m;
    m.geometry = generate_topology(cfg.topology_params(), rng);
    m.fading = large_scale_fading(m.geometry.distances_km, cfg.pathloss_gamma_db, cfg.pathloss_exponent,
                                  cfg.shadow_var_db2, rng);
    const ScatteringParams scat = cfg.scattering_params();
    m.correlations.reserve(cfg.num_ues);
    for (int k = 0; k < cfg.num_ues; ++k)
        m.correlations.push_back(correlation_matrix(m.fading.beta_linear(k), m.geometry.angles_rad(k),
                                                    cfg.num_antennas, scat, rng));
    m.stats = estimation_statistics(m.correlations, cfg.pilot_assignment());
    m.weights = common_weights(m.stats.U);
    m.priv = private_expectations(m.correlations, m.stats);
    m.common = common_precoder_expectations(m.correlations, m.stats, m.weights);
    m.coeffs = build_coefficients(m.priv, m.common, cfg.sigma_n_sq_mw(), cfg.prelog());
    return m;
}

namespace detail {

inline double max_relative_coefficient_error(const SECoefficients& closed, const SECoefficients& mc) {
    // Entrywise on the raw hardening-bound expectations: the coherent
    // gains, the cross moments E{|g^H w|^2}, and the common second moment.
    double worst = 0.0;
    auto cmp = [&worst](double ref, double est) {
        if (ref == 0.0) return;
        worst = std::max(worst, std::abs(est - ref) / std::abs(ref));
    };
    for (int k = 0; k < closed.num_ues; ++k) {
        cmp(closed.a_p(k), mc.a_p(k));
        cmp(closed.a_c(k), mc.a_c(k));
        cmp(closed.a_c(k) + closed.I_c(k), mc.a_c(k) + mc.I_c(k));
        for (int i = 0; i < closed.num_ues; ++i) {
            cmp(closed.B_c(k, i), mc.B_c(k, i));
            if (i != k) cmp(closed.B_p(k, i), mc.B_p(k, i));
        }
    }
    return worst;
}

}  // namespace detail

/// Runs every configured scheme on one setup. `validate` additionally
/// estimates the coefficients by Monte Carlo and records the worst
/// relative deviation of the closed forms.
inline std::vector<ResultRecord> run_setup(const ExperimentConfig& cfg, int setup_index, bool validate) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(setup_index));
    const SetupModel model = build_setup_model(cfg, seed);

    double mc_err = std::numeric_limits<double>::quiet_NaN();
    if (validate) {
        Rng mc_rng(splitmix64(seed ^ 0x6d6f6e7465636172ull));
        const SECoefficients mc = monte_carlo_coefficients(model.correlations, model.stats,
                                                           cfg.pilot_assignment(), model.weights,
                                                           cfg.n_mc_samples, mc_rng, cfg.sigma_n_sq_mw(),
                                                           cfg.prelog());
        mc_err = detail::max_relative_coefficient_error(model.coeffs, mc);
    }

    std::vector<ResultRecord> records;
    records.reserve(cfg.schemes.size());
    for (SchemeId scheme : cfg.schemes) {
        const auto start = std::chrono::steady_clock::now();
        const AllocationResult res =
            run_scheme(scheme, model.coeffs, cfg.rho_dl_mw(), cfg.sca_options(), cfg.grid_delta);
        const auto stop = std::chrono::steady_clock::now();

        ResultRecord rec;
        rec.setup = setup_index;
        rec.scheme = scheme;
        rec.setup_seed = seed;
        rec.se_c = res.rates.se_c;
        rec.se_total = res.rates.se_total;
        rec.sum_se = res.rates.sum_se;
        rec.min_se = res.rates.min_se;
        rec.rho_c_mw = res.alloc.rho_c_mw;
        rec.rho_c_fraction = res.alloc.rho_c_mw / cfg.rho_dl_mw();
        rec.solver_iterations = res.solver_iterations;
        rec.wallclock_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        rec.mc_max_rel_err = mc_err;
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<SchemeAggregate> aggregate_records(const ExperimentConfig& cfg,
                                                      const std::vector<ResultRecord>& records) {
    std::vector<SchemeAggregate> aggregates;
    for (SchemeId scheme : cfg.schemes) {
        SchemeAggregate agg;
        agg.scheme = scheme;
        for (const auto& rec : records) {
            if (rec.scheme != scheme) continue;
            ++agg.n_setups;
            agg.mean_sum_se += rec.sum_se;
            agg.mean_min_se += rec.min_se;
            agg.mean_per_ue_se += rec.se_total.mean();
            agg.mean_se_c += rec.se_c;
            agg.mean_rho_c_fraction += rec.rho_c_fraction;
            agg.mean_wallclock_ms += rec.wallclock_ms;
        }
        if (agg.n_setups > 0) {
            agg.mean_sum_se /= agg.n_setups;
            agg.mean_min_se /= agg.n_setups;
            agg.mean_per_ue_se /= agg.n_setups;
            agg.mean_se_c /= agg.n_setups;
            agg.mean_rho_c_fraction /= agg.n_setups;
            agg.mean_wallclock_ms /= agg.n_setups;
        }
        aggregates.push_back(agg);
    }
    return aggregates;
}

/// Relative RS-over-NoRS gain, (SE_RS - SE_NoRS) / SE_RS, for the
/// canonical scheme pairings present in the campaign.
inline std::vector<GainEntry> compute_gains(const std::vector<SchemeAggregate>& aggregates) {
    auto find = [&](SchemeId id) -> const SchemeAggregate* {
        for (const auto& a : aggregates)
            if (a.scheme == id && a.n_setups > 0) return &a;
        return nullptr;
    };
    const std::pair<SchemeId, SchemeId> pairs[] = {
        {SchemeId::rs_maxmin_sca, SchemeId::nors_sca},
        {SchemeId::rs_maxmin_sca, SchemeId::nors_bisection},
        {SchemeId::rs_maxsum_grid, SchemeId::nors_maxsum},
        {SchemeId::rs_maxsumse_sca, SchemeId::nors_maxsum},
        {SchemeId::rs_maxsinr_gp, SchemeId::nors_gp},
    };
    std::vector<GainEntry> gains;
    for (const auto& [rs, nors] : pairs) {
        const auto* a = find(rs);
        const auto* b = find(nors);
        if (!a || !b) continue;
        GainEntry g;
        g.rs_scheme = rs;
        g.nors_scheme = nors;
        if (a->mean_per_ue_se > 0.0) g.gain_mean_per_ue = (a->mean_per_ue_se - b->mean_per_ue_se) / a->mean_per_ue_se;
        if (a->mean_min_se > 0.0) g.gain_min_se = (a->mean_min_se - b->mean_min_se) / a->mean_min_se;
        if (a->mean_sum_se > 0.0) g.gain_sum_se = (a->mean_sum_se - b->mean_sum_se) / a->mean_sum_se;
        gains.push_back(g);
    }
    return gains;
}

/// Runs the full campaign. Setups execute concurrently up to the
/// configured worker count; record order is by setup index regardless of
/// completion order. Any setup failure aborts with its seed recorded.
inline CampaignResult run_campaign(const ExperimentConfig& cfg, bool validate = false) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const int n = cfg.n_setups;
    std::vector<std::vector<ResultRecord>> per_setup(n);

    int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, n));

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string error_message;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                per_setup[i] = run_setup(cfg, i, validate);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error_message.empty())
                    error_message = "setup " + std::to_string(i) + " (seed " +
                                    std::to_string(derive_seed(cfg.master_seed, i)) + ") failed: " + e.what();
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (!error_message.empty()) throw NumericalError(error_message);

    CampaignResult out;
    for (int i = 0; i < n; ++i)
        for (auto& rec : per_setup[i]) out.records.push_back(std::move(rec));
    out.aggregates = aggregate_records(cfg, out.records);
    out.gains = compute_gains(out.aggregates);
    out.total_wallclock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace rsmimo
