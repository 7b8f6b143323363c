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

#include <vector>

namespace rsmimo {

enum class TopologyKind { rectangular, circular };
enum class CorrelationModel { gaussian_scattering, uncorrelated };
enum class BsPlacement { automatic, center, corner };

/// UE drop geometry relative to the BS at the origin.
///
/// Rectangular drops are uniform over a square box (BS at the box center
/// for full-sector runs, at a box corner with diagonal boresight for
/// sector-restricted runs). Circular drops put every UE at the same
/// distance, uniform in angle over the sector.
struct TopologyParams {
    TopologyKind kind = TopologyKind::circular;
    int num_ues = 1;
    double sector_width_rad = 2.0 * kPi;      // theta
    double box_size_m = 250.0;
    double circle_radius_m = 125.0;
    double min_distance_m = 10.0;             // floor; the dB path loss diverges at d=0
    BsPlacement bs_placement = BsPlacement::automatic;
};

struct NetworkGeometry {
    TopologyKind kind;
    double sector_width_rad;
    double sector_center_rad;
    int num_ues;
    std::vector<Eigen::Vector2d> positions_m;  // relative to the BS
    RVec distances_km;
    RVec angles_rad;
    // Box bounds in the BS frame (rectangular only), for invariant checks.
    Eigen::Vector2d box_min_m = Eigen::Vector2d::Zero();
    Eigen::Vector2d box_max_m = Eigen::Vector2d::Zero();
};

namespace detail {

inline double wrap_to_pi(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0) a += 2.0 * kPi;
    return a - kPi;
}

inline bool angle_in_sector(double angle, double center, double width) {
    if (width >= 2.0 * kPi - 1e-12) return true;
    return std::abs(wrap_to_pi(angle - center)) <= width / 2.0 + 1e-12;
}

}  // namespace detail

inline NetworkGeometry generate_topology(const TopologyParams& params, Rng& rng) {
    if (params.num_ues < 1) throw ConfigError("generate_topology: K must be >= 1");
    if (!(params.sector_width_rad > 0.0) || params.sector_width_rad > 2.0 * kPi + 1e-12)
        throw ConfigError("generate_topology: sector width must lie in (0, 2*pi]");
    if (params.min_distance_m <= 0.0) throw ConfigError("generate_topology: min distance must be positive");

    const bool full_sector = params.sector_width_rad >= 2.0 * kPi - 1e-12;
    BsPlacement placement = params.bs_placement;
    if (placement == BsPlacement::automatic)
        placement = full_sector ? BsPlacement::center : BsPlacement::corner;

    NetworkGeometry geo;
    geo.kind = params.kind;
    geo.sector_width_rad = params.sector_width_rad;
    geo.num_ues = params.num_ues;
    geo.positions_m.resize(params.num_ues);
    geo.distances_km.resize(params.num_ues);
    geo.angles_rad.resize(params.num_ues);

    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    if (params.kind == TopologyKind::circular) {
        geo.sector_center_rad = 0.0;
        if (params.circle_radius_m < params.min_distance_m)
            throw ConfigError("generate_topology: circle radius below the minimum BS-UE distance");
        for (int k = 0; k < params.num_ues; ++k) {
            const double half = params.sector_width_rad / 2.0;
            const double phi = geo.sector_center_rad + (2.0 * unif01(rng) - 1.0) * half;
            geo.angles_rad(k) = phi;
            geo.distances_km(k) = params.circle_radius_m / 1000.0;
            geo.positions_m[k] = params.circle_radius_m * Eigen::Vector2d(std::cos(phi), std::sin(phi));
        }
        return geo;
    }

    // Rectangular. BS frame: centered box for full sector, first-quadrant
    // box with diagonal boresight when UEs are confined to a sector.
    if (placement == BsPlacement::center) {
        geo.sector_center_rad = 0.0;
        geo.box_min_m = Eigen::Vector2d(-params.box_size_m / 2.0, -params.box_size_m / 2.0);
        geo.box_max_m = Eigen::Vector2d(params.box_size_m / 2.0, params.box_size_m / 2.0);
    } else {
        geo.sector_center_rad = kPi / 4.0;
        geo.box_min_m = Eigen::Vector2d(0.0, 0.0);
        geo.box_max_m = Eigen::Vector2d(params.box_size_m, params.box_size_m);
    }

    for (int k = 0; k < params.num_ues; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 100000; ++attempt) {
            Eigen::Vector2d p(geo.box_min_m.x() + unif01(rng) * (geo.box_max_m.x() - geo.box_min_m.x()),
                              geo.box_min_m.y() + unif01(rng) * (geo.box_max_m.y() - geo.box_min_m.y()));
            const double d = p.norm();
            if (d < params.min_distance_m) continue;
            const double phi = std::atan2(p.y(), p.x());
            if (!detail::angle_in_sector(phi, geo.sector_center_rad, params.sector_width_rad)) continue;
            geo.positions_m[k] = p;
            geo.distances_km(k) = d / 1000.0;
            geo.angles_rad(k) = phi;
            placed = true;
            break;
        }
        if (!placed)
            throw ConfigError("generate_topology: sector does not intersect the drop area");
    }
    return geo;
}

/// Distance-dependent channel gain in dB:
///   beta_dB = Gamma - 10*eta*log10(d/1km) + S
inline double path_loss_db(double d_km, double shadowing_db, double gamma_db, double eta) {
    if (!(d_km > 0.0)) throw ConfigError("path_loss_db: distance must be positive");
    return gamma_db - 10.0 * eta * std::log10(d_km) + shadowing_db;
}

struct LargeScaleFading {
    RVec beta_db;
    RVec beta_linear;
    RVec shadowing_db;
    double gamma_db;
    double eta;
    double shadow_var_db2;  // sigma_s^2
};

/// Per-UE gains from distances; shadowing drawn i.i.d. N(0, sigma_s^2).
inline LargeScaleFading large_scale_fading(const RVec& distances_km, double gamma_db, double eta,
                                           double shadow_var_db2, Rng& rng) {
    if (shadow_var_db2 < 0.0) throw ConfigError("large_scale_fading: shadow variance must be >= 0");
    LargeScaleFading lsf;
    const int k_count = static_cast<int>(distances_km.size());
    lsf.beta_db.resize(k_count);
    lsf.beta_linear.resize(k_count);
    lsf.shadowing_db.resize(k_count);
    lsf.gamma_db = gamma_db;
    lsf.eta = eta;
    lsf.shadow_var_db2 = shadow_var_db2;
    std::normal_distribution<double> shadow(0.0, std::sqrt(shadow_var_db2));
    for (int k = 0; k < k_count; ++k) {
        lsf.shadowing_db(k) = shadow_var_db2 > 0.0 ? shadow(rng) : 0.0;
        lsf.beta_db(k) = path_loss_db(distances_km(k), lsf.shadowing_db(k), gamma_db, eta);
        lsf.beta_linear(k) = db_to_linear(lsf.beta_db(k));
    }
    return lsf;
}

struct ScatteringParams {
    CorrelationModel model = CorrelationModel::gaussian_scattering;
    int cluster_count = 10;                       // S
    double angular_std_rad = deg_to_rad(15.0);    // sigma_phi
    double nominal_spread_rad = deg_to_rad(40.0); // nominal angles ~ U(phi +/- spread)
};

struct SpatialCorrelation {
    CMat R;
    CorrelationModel model;
    double beta_linear;
    int cluster_count;
    double angular_std_rad;
    RVec nominal_angles_rad;  // empty for uncorrelated
};

/// Correlation matrix for explicitly given cluster nominal angles.
/// Entries follow the local-scattering closed form for a half-wavelength
/// ULA; the matrix is Hermitian Toeplitz with diagonal exactly beta.
inline SpatialCorrelation correlation_matrix_from_angles(double beta_linear, int num_antennas,
                                                         const RVec& nominal_angles_rad,
                                                         double angular_std_rad) {
    if (num_antennas < 1) throw ConfigError("correlation_matrix: M must be >= 1");
    if (angular_std_rad < 0.0) throw ConfigError("correlation_matrix: angular std must be >= 0");
    if (nominal_angles_rad.size() < 1) throw ConfigError("correlation_matrix: need at least one cluster");

    const int cluster_count = static_cast<int>(nominal_angles_rad.size());
    CVec first_col(num_antennas);
    for (int d = 0; d < num_antennas; ++d) {
        Complex acc(0.0, 0.0);
        for (int s = 0; s < cluster_count; ++s) {
            const double phase = kPi * d * std::sin(nominal_angles_rad(s));
            const double spread = kPi * d * std::cos(nominal_angles_rad(s));
            const double damp = std::exp(-0.5 * angular_std_rad * angular_std_rad * spread * spread);
            acc += damp * Complex(std::cos(phase), std::sin(phase));
        }
        first_col(d) = beta_linear * acc / static_cast<double>(cluster_count);
    }

    SpatialCorrelation corr;
    corr.model = CorrelationModel::gaussian_scattering;
    corr.beta_linear = beta_linear;
    corr.cluster_count = cluster_count;
    corr.angular_std_rad = angular_std_rad;
    corr.nominal_angles_rad = nominal_angles_rad;
    corr.R.resize(num_antennas, num_antennas);
    for (int m1 = 0; m1 < num_antennas; ++m1)
        for (int m2 = 0; m2 < num_antennas; ++m2)
            corr.R(m1, m2) = m1 >= m2 ? first_col(m1 - m2) : std::conj(first_col(m2 - m1));
    return corr;
}

/// Spatial correlation for one UE at geographical angle phi_k.
inline SpatialCorrelation correlation_matrix(double beta_linear, double angle_rad, int num_antennas,
                                             const ScatteringParams& params, Rng& rng) {
    if (num_antennas < 1) throw ConfigError("correlation_matrix: M must be >= 1");
    if (params.model == CorrelationModel::uncorrelated) {
        SpatialCorrelation corr;
        corr.model = CorrelationModel::uncorrelated;
        corr.beta_linear = beta_linear;
        corr.cluster_count = 0;
        corr.angular_std_rad = 0.0;
        corr.R = beta_linear * CMat::Identity(num_antennas, num_antennas);
        return corr;
    }
    if (params.cluster_count < 1) throw ConfigError("correlation_matrix: cluster count must be >= 1");
    std::uniform_real_distribution<double> unif(-params.nominal_spread_rad, params.nominal_spread_rad);
    RVec nominal(params.cluster_count);
    for (int s = 0; s < params.cluster_count; ++s) nominal(s) = angle_rad + unif(rng);
    return correlation_matrix_from_angles(beta_linear, num_antennas, nominal, params.angular_std_rad);
}

/// Factor L with R = L L^H for sampling. Eigenvalues below zero are
/// clipped after asserting they stay above -1e-10 * tr(R)/M.
inline CMat psd_factor(const CMat& r) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(r);
    if (eig.info() != Eigen::Success) throw NumericalError("psd_factor: eigendecomposition failed");
    const double floor = -1e-10 * std::abs(r.trace().real()) / static_cast<double>(r.rows());
    RVec lambda = eig.eigenvalues();
    for (int i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < floor)
            throw NumericalError("psd_factor: eigenvalue below the PSD tolerance floor");
        if (lambda(i) < 0.0) lambda(i) = 0.0;
    }
    return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

}  // namespace rsmimo
