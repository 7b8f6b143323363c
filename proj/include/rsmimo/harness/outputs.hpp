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

#include "rsmimo/harness/campaign.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>

#ifndef RSMIMO_VERSION
#define RSMIMO_VERSION "0.1.0-unknown"
#endif

namespace rsmimo {

inline const char* csv_header() {
    return "setup,scheme,pilot_mode,topology,M,K,sum_se,min_se,se_c,ue_index,se_ue,rho_c,wallclock_ms";
}

inline const char* to_string(PilotMode m) {
    return m == PilotMode::shared_single_pilot ? "shared" : "orthogonal";
}

inline const char* to_string(TopologyKind t) {
    return t == TopologyKind::circular ? "circular" : "rectangular";
}

/// One CSV row per (setup, scheme, UE). Doubles are printed with 17
/// significant digits so parsing them back is bit exact.
inline void write_csv(std::ostream& os, const ExperimentConfig& cfg,
                      const std::vector<ResultRecord>& records, bool header = true) {
    if (header) os << csv_header() << '\n';
    os << std::setprecision(17);
    for (const auto& rec : records) {
        for (int ue = 0; ue < rec.se_total.size(); ++ue) {
            os << rec.setup << ',' << to_string(rec.scheme) << ',' << to_string(cfg.pilot_mode) << ','
               << to_string(cfg.topology) << ',' << cfg.num_antennas << ',' << cfg.num_ues << ','
               << rec.sum_se << ',' << rec.min_se << ',' << rec.se_c << ',' << ue << ','
               << rec.se_total(ue) << ',' << rec.rho_c_mw << ',' << rec.wallclock_ms << '\n';
        }
    }
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const RawConfig& raw,
                                   const CampaignResult& result) {
    nlohmann::json j;
    j["version"] = RSMIMO_VERSION;
    j["config"] = nlohmann::json::object();
    for (const auto& [key, value] : raw) j["config"][key] = value;
    j["n_setups"] = cfg.n_setups;
    j["total_wallclock_ms"] = result.total_wallclock_ms;

    nlohmann::json aggs = nlohmann::json::object();
    for (const auto& a : result.aggregates) {
        nlohmann::json ja;
        ja["n_setups"] = a.n_setups;
        ja["mean_sum_se"] = a.mean_sum_se;
        ja["mean_min_se"] = a.mean_min_se;
        ja["mean_per_ue_se"] = a.mean_per_ue_se;
        ja["mean_se_c"] = a.mean_se_c;
        ja["mean_rho_c_fraction"] = a.mean_rho_c_fraction;
        ja["mean_wallclock_ms"] = a.mean_wallclock_ms;
        aggs[to_string(a.scheme)] = ja;
    }
    j["aggregates"] = aggs;

    nlohmann::json gains = nlohmann::json::array();
    for (const auto& g : result.gains) {
        nlohmann::json jg;
        jg["rs_scheme"] = to_string(g.rs_scheme);
        jg["nors_scheme"] = to_string(g.nors_scheme);
        jg["gain_mean_per_ue"] = g.gain_mean_per_ue;
        jg["gain_min_se"] = g.gain_min_se;
        jg["gain_sum_se"] = g.gain_sum_se;
        gains.push_back(jg);
    }
    j["gains"] = gains;

    bool any_validation = false;
    double worst = 0.0;
    for (const auto& rec : result.records) {
        if (std::isnan(rec.mc_max_rel_err)) continue;
        any_validation = true;
        worst = std::max(worst, rec.mc_max_rel_err);
    }
    if (any_validation) j["validation_max_rel_err"] = worst;
    return j;
}

/// Writes results.csv and summary.json under out_dir.
inline void emit_outputs(const ExperimentConfig& cfg, const RawConfig& raw, const CampaignResult& result,
                         const std::string& out_dir) {
    if (result.records.empty()) throw ConfigError("emit_outputs: no records");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const fs::path csv_path = fs::path(out_dir) / "results.csv";
    const fs::path json_path = fs::path(out_dir) / "summary.json";

    std::ofstream csv(csv_path);
    if (!csv) throw std::ios_base::failure("cannot write " + csv_path.string());
    write_csv(csv, cfg, result.records);
    if (!csv.good()) throw std::ios_base::failure("write failed: " + csv_path.string());

    std::ofstream js(json_path);
    if (!js) throw std::ios_base::failure("cannot write " + json_path.string());
    js << summary_json(cfg, raw, result).dump(2) << '\n';
    if (!js.good()) throw std::ios_base::failure("write failed: " + json_path.string());
}

}  // namespace rsmimo
