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

#include "rsmimo/powalloc.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace rsmimo {

/// Experiment campaign configuration. The on-disk format is flat
/// `key = value` text with explicit units in the key names, for bit-exact
/// reproducibility and diff-ability.
struct ExperimentConfig {
    int num_antennas = 100;              // M
    int num_ues = 8;                     // K
    TopologyKind topology = TopologyKind::circular;
    double sector_theta_rad = 2.0 * kPi;
    BsPlacement bs_placement = BsPlacement::automatic;
    CorrelationModel correlation = CorrelationModel::gaussian_scattering;
    PilotMode pilot_mode = PilotMode::shared_single_pilot;
    std::vector<SchemeId> schemes = {SchemeId::rs_maxmin_sca, SchemeId::nors_sca};

    // Physics (Table-style parameters).
    double pathloss_gamma_db = -148.1;
    double pathloss_exponent = 3.76;
    double shadow_var_db2 = 16.0;
    int tau = 200;
    int tau_p = 10;
    int tau_d = 190;
    double rho_ul_dbm = 10.0;
    double rho_dl_dbm = 20.0;
    double sigma_ul_dbm = -94.0;
    double sigma_n_dbm = -94.0;
    int cluster_count = 10;
    double angular_std_deg = 15.0;
    double nominal_angle_spread_deg = 40.0;
    double circle_radius_m = 125.0;
    double box_size_m = 250.0;
    double min_distance_m = 10.0;

    // Campaign controls.
    int n_setups = 50;
    long n_mc_samples = 20000;
    std::uint64_t master_seed = 1;
    int workers = 0;  // 0 = hardware concurrency
    double grid_delta = 0.05;
    double sca_epsilon = 1e-4;
    int sca_max_iter = 100;
    std::vector<double> maxmin_common_fraction_inits = {0.0, 0.1, 0.3, 0.5};
    double mc_tolerance = 0.03;
    std::string out_dir = "out";

    double rho_ul_mw() const { return dbm_to_mw(rho_ul_dbm); }
    double rho_dl_mw() const { return dbm_to_mw(rho_dl_dbm); }
    double sigma_ul_sq_mw() const { return dbm_to_mw(sigma_ul_dbm); }
    double sigma_n_sq_mw() const { return dbm_to_mw(sigma_n_dbm); }
    double prelog() const { return static_cast<double>(tau_d) / static_cast<double>(tau); }

    void validate() const {
        if (num_antennas < 1) throw ConfigError("config: M must be >= 1");
        if (num_ues < 1) throw ConfigError("config: K must be >= 1");
        if (!(sector_theta_rad > 0.0) || sector_theta_rad > 2.0 * kPi + 1e-12)
            throw ConfigError("config: sector_theta_rad must lie in (0, 2*pi]");
        if (tau < 1 || tau_p < 1 || tau_d < 1) throw ConfigError("config: tau values must be >= 1");
        if (tau_p + tau_d > tau) throw ConfigError("config: tau_p + tau_d must not exceed tau");
        if (pilot_mode == PilotMode::orthogonal && tau_p < num_ues)
            throw ConfigError("config: orthogonal pilots need tau_p >= K");
        if (schemes.empty()) throw ConfigError("config: no schemes selected");
        if (n_setups < 1) throw ConfigError("config: n_setups must be >= 1");
        if (n_mc_samples < 1) throw ConfigError("config: n_mc_samples must be >= 1");
        if (!(rho_ul_mw() > 0.0) || !(rho_dl_mw() > 0.0) || !(sigma_ul_sq_mw() > 0.0) ||
            !(sigma_n_sq_mw() > 0.0))
            throw ConfigError("config: powers must be positive after dBm conversion");
        if (shadow_var_db2 < 0.0) throw ConfigError("config: shadow variance must be >= 0");
        if (cluster_count < 1) throw ConfigError("config: cluster_count must be >= 1");
        if (!(grid_delta > 0.0) || grid_delta > 1.0)
            throw ConfigError("config: grid_delta must lie in (0, 1]");
        if (!(sca_epsilon > 0.0)) throw ConfigError("config: sca_epsilon must be positive");
        if (sca_max_iter < 1) throw ConfigError("config: sca_max_iter must be >= 1");
        if (maxmin_common_fraction_inits.empty())
            throw ConfigError("config: maxmin_common_fraction_inits must be nonempty");
        for (double f : maxmin_common_fraction_inits)
            if (f < 0.0 || f > 1.0)
                throw ConfigError("config: maxmin common fractions must lie in [0, 1]");
    }

    TopologyParams topology_params() const {
        TopologyParams t;
        t.kind = topology;
        t.num_ues = num_ues;
        t.sector_width_rad = sector_theta_rad;
        t.box_size_m = box_size_m;
        t.circle_radius_m = circle_radius_m;
        t.min_distance_m = min_distance_m;
        t.bs_placement = bs_placement;
        return t;
    }

    ScatteringParams scattering_params() const {
        ScatteringParams s;
        s.model = correlation;
        s.cluster_count = cluster_count;
        s.angular_std_rad = deg_to_rad(angular_std_deg);
        s.nominal_spread_rad = deg_to_rad(nominal_angle_spread_deg);
        return s;
    }

    PilotAssignment pilot_assignment() const {
        PilotAssignment p;
        p.mode = pilot_mode;
        p.tau_p = tau_p;
        p.rho_ul_mw = rho_ul_mw();
        p.sigma_ul_sq_mw = sigma_ul_sq_mw();
        return p;
    }

    ScaOptions sca_options() const {
        ScaOptions o;
        o.epsilon = sca_epsilon;
        o.max_outer = sca_max_iter;
        o.common_fraction_inits = maxmin_common_fraction_inits;
        return o;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

/// Key/value view of a config (kept verbatim for echoing into outputs).
using RawConfig = std::map<std::string, std::string>;

inline RawConfig parse_raw_config(std::istream& in) {
    RawConfig raw;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        raw[key] = value;
    }
    return raw;
}

inline ExperimentConfig config_from_raw(const RawConfig& raw) {
    ExperimentConfig cfg;
    auto geti = [](const std::string& v) { return std::stoi(v); };
    auto getl = [](const std::string& v) { return std::stol(v); };
    auto getd = [](const std::string& v) { return std::stod(v); };
    for (const auto& [key, value] : raw) {
        if (key == "M") cfg.num_antennas = geti(value);
        else if (key == "K") cfg.num_ues = geti(value);
        else if (key == "topology") {
            if (value == "circular") cfg.topology = TopologyKind::circular;
            else if (value == "rectangular") cfg.topology = TopologyKind::rectangular;
            else throw ConfigError("config: unknown topology " + value);
        } else if (key == "sector_theta_rad") cfg.sector_theta_rad = getd(value);
        else if (key == "bs_placement") {
            if (value == "auto") cfg.bs_placement = BsPlacement::automatic;
            else if (value == "center") cfg.bs_placement = BsPlacement::center;
            else if (value == "corner") cfg.bs_placement = BsPlacement::corner;
            else throw ConfigError("config: unknown bs_placement " + value);
        } else if (key == "correlation") {
            if (value == "gaussian_scattering") cfg.correlation = CorrelationModel::gaussian_scattering;
            else if (value == "uncorrelated") cfg.correlation = CorrelationModel::uncorrelated;
            else throw ConfigError("config: unknown correlation model " + value);
        } else if (key == "pilot_mode") {
            if (value == "shared") cfg.pilot_mode = PilotMode::shared_single_pilot;
            else if (value == "orthogonal") cfg.pilot_mode = PilotMode::orthogonal;
            else throw ConfigError("config: unknown pilot_mode " + value);
        } else if (key == "schemes") {
            cfg.schemes.clear();
            for (const auto& name : detail::split_list(value)) cfg.schemes.push_back(scheme_from_string(name));
        } else if (key == "pathloss_gamma_db") cfg.pathloss_gamma_db = getd(value);
        else if (key == "pathloss_exponent") cfg.pathloss_exponent = getd(value);
        else if (key == "shadow_var_db2") cfg.shadow_var_db2 = getd(value);
        else if (key == "tau") cfg.tau = geti(value);
        else if (key == "tau_p") cfg.tau_p = geti(value);
        else if (key == "tau_d") cfg.tau_d = geti(value);
        else if (key == "rho_ul_dbm") cfg.rho_ul_dbm = getd(value);
        else if (key == "rho_dl_dbm") cfg.rho_dl_dbm = getd(value);
        else if (key == "sigma_ul_dbm") cfg.sigma_ul_dbm = getd(value);
        else if (key == "sigma_n_dbm") cfg.sigma_n_dbm = getd(value);
        else if (key == "cluster_count") cfg.cluster_count = geti(value);
        else if (key == "angular_std_deg") cfg.angular_std_deg = getd(value);
        else if (key == "nominal_angle_spread_deg") cfg.nominal_angle_spread_deg = getd(value);
        else if (key == "circle_radius_m") cfg.circle_radius_m = getd(value);
        else if (key == "box_size_m") cfg.box_size_m = getd(value);
        else if (key == "min_distance_m") cfg.min_distance_m = getd(value);
        else if (key == "n_setups") cfg.n_setups = geti(value);
        else if (key == "n_mc_samples") cfg.n_mc_samples = getl(value);
        else if (key == "master_seed") cfg.master_seed = std::stoull(value);
        else if (key == "workers") cfg.workers = geti(value);
        else if (key == "grid_delta") cfg.grid_delta = getd(value);
        else if (key == "sca_epsilon") cfg.sca_epsilon = getd(value);
        else if (key == "sca_max_iter") cfg.sca_max_iter = geti(value);
        else if (key == "maxmin_common_fraction_inits") {
            cfg.maxmin_common_fraction_inits.clear();
            for (const auto& item : detail::split_list(value))
                cfg.maxmin_common_fraction_inits.push_back(getd(item));
        } else if (key == "mc_tolerance") cfg.mc_tolerance = getd(value);
        else if (key == "out_dir") cfg.out_dir = value;
        else throw ConfigError("config: unknown key " + key);
    }
    cfg.validate();
    return cfg;
}

inline std::pair<ExperimentConfig, RawConfig> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RawConfig raw = parse_raw_config(in);
    return {config_from_raw(raw), raw};
}

}  // namespace rsmimo
