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

#include <rsmimo.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
};

rsmimo::ExperimentConfig apply_overrides(rsmimo::ExperimentConfig cfg, rsmimo::RawConfig& raw,
                                         const CommonArgs& args) {
    if (args.seed_set) {
        cfg.master_seed = args.seed;
        raw["master_seed"] = std::to_string(args.seed);
    }
    if (!args.out_dir.empty()) {
        cfg.out_dir = args.out_dir;
        raw["out_dir"] = args.out_dir;
    }
    if (args.workers >= 0) {
        cfg.workers = args.workers;
        raw["workers"] = std::to_string(args.workers);
    }
    return cfg;
}

void print_aggregates(const rsmimo::CampaignResult& result) {
    for (const auto& a : result.aggregates) {
        std::cout << "  " << rsmimo::to_string(a.scheme) << ": mean sum-SE " << a.mean_sum_se
                  << " bps/Hz, mean min-SE " << a.mean_min_se << " bps/Hz, mean per-UE SE "
                  << a.mean_per_ue_se << " bps/Hz, rho_c fraction " << a.mean_rho_c_fraction << '\n';
    }
    for (const auto& g : result.gains) {
        std::cout << "  gain " << rsmimo::to_string(g.rs_scheme) << " over "
                  << rsmimo::to_string(g.nors_scheme) << ": per-UE " << 100.0 * g.gain_mean_per_ue
                  << "%, min-SE " << 100.0 * g.gain_min_se << "%, sum-SE " << 100.0 * g.gain_sum_se
                  << "%\n";
    }
}

int run_command(const CommonArgs& args, bool validate) {
    auto [cfg, raw] = rsmimo::load_config(args.config_path);
    cfg = apply_overrides(cfg, raw, args);
    const auto result = rsmimo::run_campaign(cfg, validate);
    rsmimo::emit_outputs(cfg, raw, result, cfg.out_dir);
    std::cout << (validate ? "validate" : "run") << ": " << cfg.n_setups << " setups, "
              << result.records.size() << " records -> " << cfg.out_dir << '\n';
    print_aggregates(result);
    if (validate) {
        double worst = 0.0;
        for (const auto& rec : result.records)
            if (!std::isnan(rec.mc_max_rel_err)) worst = std::max(worst, rec.mc_max_rel_err);
        std::cout << "  closed-form vs Monte Carlo worst relative error: " << worst << " (tolerance "
                  << cfg.mc_tolerance << ")\n";
        if (worst > cfg.mc_tolerance) {
            nlohmann::json err;
            err["error"] = "validation_tolerance_exceeded";
            err["max_rel_err"] = worst;
            err["tolerance"] = cfg.mc_tolerance;
            std::cerr << err.dump() << '\n';
            return 2;
        }
    }
    return 0;
}

int sweep_command(const CommonArgs& args, const std::string& param,
                  const std::vector<std::string>& values) {
    auto [base_cfg, base_raw] = rsmimo::load_config(args.config_path);
    base_cfg = apply_overrides(base_cfg, base_raw, args);
    if (values.empty()) throw rsmimo::ConfigError("sweep: no values given");

    namespace fs = std::filesystem;
    fs::create_directories(base_cfg.out_dir);
    std::ofstream csv(fs::path(base_cfg.out_dir) / "sweep_results.csv");
    if (!csv) throw std::ios_base::failure("cannot write sweep_results.csv");
    csv << rsmimo::csv_header() << '\n';

    nlohmann::json sweep_summary = nlohmann::json::array();
    for (const auto& value : values) {
        rsmimo::RawConfig raw = base_raw;
        raw[param] = value;
        rsmimo::ExperimentConfig cfg = rsmimo::config_from_raw(raw);
        const auto result = rsmimo::run_campaign(cfg, false);
        rsmimo::write_csv(csv, cfg, result.records, /*header=*/false);
        nlohmann::json point = rsmimo::summary_json(cfg, raw, result);
        point["sweep_param"] = param;
        point["sweep_value"] = value;
        sweep_summary.push_back(point);
        std::cout << "sweep " << param << " = " << value << ":\n";
        print_aggregates(result);
    }
    std::ofstream js(fs::path(base_cfg.out_dir) / "sweep_summary.json");
    if (!js) throw std::ios_base::failure("cannot write sweep_summary.json");
    js << sweep_summary.dump(2) << '\n';
    std::cout << "sweep outputs -> " << base_cfg.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rsmimo: rate-splitting vs linear precoding SE campaigns"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string sweep_param = "M";
    std::vector<std::string> sweep_values;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", args.config_path, "experiment config file")->required();
        cmd->add_option("--out", args.out_dir, "output directory override");
        cmd->add_option("--seed", args.seed, "master seed override")->each([&](const std::string&) {
            args.seed_set = true;
        });
        cmd->add_option("--workers", args.workers, "worker thread count override");
    };

    CLI::App* run = app.add_subcommand("run", "run a campaign and emit CSV/JSON results");
    add_common(run);
    CLI::App* validate = app.add_subcommand("validate", "run with closed-form vs Monte Carlo checks");
    add_common(validate);
    CLI::App* sweep = app.add_subcommand("sweep", "run the campaign over a parameter sweep");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "config key to sweep (e.g. M)")->required();
    sweep->add_option("--values", sweep_values, "comma separated values")->required()->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(args, false);
        if (validate->parsed()) return run_command(args, true);
        if (sweep->parsed()) return sweep_command(args, sweep_param, sweep_values);
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << '\n';
        return 1;
    }
    return 0;
}
