// Command-line front end for the Monte-Carlo detection harness.
//
//   detect --system 128x8 --mod bpsk --snr -2:1:10 --tmax 3 --trials 10000
//          --detectors taser,mmse,ml --seed 42 --out run.csv
//
// writes run.csv plus a run.meta.json sidecar with the configuration echo,
// the build id and the systolic-array cost report. `detect export-lut FILE`
// dumps the inverse-square-root table as 2048 hex words.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "taser/taser.hpp"

#ifndef TASER_GIT_DESCRIBE
#define TASER_GIT_DESCRIBE "unknown"
#endif

namespace {

using nlohmann::json;

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

std::vector<double> parse_snr(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        double start = 0.0, step = 0.0, stop = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(spec);
        if (!(ss >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' ||
            step <= 0.0) {
            throw CLI::ValidationError("--snr", "expected start:step:stop with step > 0");
        }
        for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
    } else {
        for (const std::string& item : split_commas(spec)) out.push_back(std::stod(item));
    }
    if (out.empty()) throw CLI::ValidationError("--snr", "empty SNR list");
    return out;
}

std::pair<int, int> parse_system(const std::string& spec) {
    const auto x = spec.find('x');
    if (x == std::string::npos) {
        throw CLI::ValidationError("--system", "expected BxU (e.g. 128x8)");
    }
    const int b = std::stoi(spec.substr(0, x));
    const int u = std::stoi(spec.substr(x + 1));
    if (b < 1 || u < 1) throw CLI::ValidationError("--system", "dimensions must be positive");
    return {b, u};
}

int run_export_lut(const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        std::cerr << "error: cannot open " << path << " for writing\n";
        return 1;
    }
    taser::write_lut_hex(os, taser::InvSqrtLut::standard());
    std::cout << "wrote 2048 LUT words to " << path << "\n";
    return 0;
}

json cost_model_json(const taser::SweepConfig& cfg) {
    json arr = json::array();
    const int n = taser::problem_dim(cfg.mode, cfg.constellation, cfg.u_or_k);
    for (const int t : cfg.t_max_list) {
        const taser::CostReport r = taser::cycle_model(n, t);
        arr.push_back({{"n_dim", n},
                       {"pe_count", taser::ArrayGeometry::for_dim(n).pe_count},
                       {"t_max", t},
                       {"cycles_per_iteration", r.cycles_per_iteration},
                       {"total_latency_cycles", r.total_latency_cycles},
                       {"real_multiplications", r.real_multiplications}});
    }
    return arr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TASER detection harness: error-rate sweeps for large MU-MIMO "
                 "and SIMO joint channel estimation and detection"};
    app.require_subcommand(0, 1);

    std::string lut_path;
    CLI::App* export_lut = app.add_subcommand("export-lut", "write the inverse square "
                                              "root table as one 14-bit hex word per line");
    export_lut->add_option("file", lut_path, "output path")->required();

    std::string system_spec, mod = "bpsk", mode = "coherent", snr_spec, tmax_spec = "20";
    std::string detectors_spec, out_path, arithmetic = "float";
    double alpha = 0.99;
    int trials = 10000;
    std::uint64_t seed = 0;

    app.add_option("--system", system_spec, "BxU (coherent) or BxK (JED), e.g. 128x8");
    app.add_option("--mod", mod, "bpsk or qpsk")->check(CLI::IsMember({"bpsk", "qpsk"}));
    app.add_option("--mode", mode, "coherent or jed")
        ->check(CLI::IsMember({"coherent", "jed"}));
    app.add_option("--snr", snr_spec, "SNR grid in dB: start:step:stop or comma list");
    app.add_option("--tmax", tmax_spec, "iteration budgets, comma list");
    app.add_option("--alpha", alpha, "step-size tuning parameter in (0,1)");
    app.add_option("--trials", trials, "Monte-Carlo trials per cell");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--detectors", detectors_spec,
                   "comma list: taser,ml,mmse,simo (coherent) / "
                   "taser,ml-jed,chest-mrc,mrc-csir (jed)");
    app.add_option("--arithmetic", arithmetic, "float or fixed (TASER only)")
        ->check(CLI::IsMember({"float", "fixed"}));
    app.add_option("--out", out_path, "output CSV path; sidecar written next to it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (export_lut->parsed()) {
        return run_export_lut(lut_path);
    }

    try {
        if (system_spec.empty() || snr_spec.empty() || detectors_spec.empty() ||
            out_path.empty()) {
            std::cerr << "usage error: --system, --snr, --detectors and --out are required "
                         "(see --help)\n";
            return 2;
        }

        taser::SweepConfig cfg;
        std::tie(cfg.b, cfg.u_or_k) = parse_system(system_spec);
        cfg.mode = mode == "jed" ? taser::ProblemMode::jed : taser::ProblemMode::coherent;
        cfg.constellation = mod == "qpsk" ? taser::Constellation::qpsk()
                                          : taser::Constellation::bpsk();
        cfg.snr_db = parse_snr(snr_spec);
        cfg.t_max_list.clear();
        for (const std::string& t : split_commas(tmax_spec)) {
            cfg.t_max_list.push_back(std::stoi(t));
        }
        cfg.alpha = alpha;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.detectors = split_commas(detectors_spec);
        cfg.arithmetic = arithmetic == "fixed" ? taser::Arithmetic::fixed
                                               : taser::Arithmetic::floating;

        const std::vector<taser::SweepRow> rows = taser::run_sweep(cfg);

        std::ofstream csv(out_path);
        if (!csv) {
            std::cerr << "error: cannot open " << out_path << " for writing\n";
            return 1;
        }
        taser::write_csv(csv, rows);

        json meta;
        meta["config"] = {{"system", system_spec},
                          {"B", cfg.b},
                          {"U_or_K", cfg.u_or_k},
                          {"mode", mode},
                          {"modulation", mod},
                          {"snr_db", cfg.snr_db},
                          {"t_max", cfg.t_max_list},
                          {"alpha", cfg.alpha},
                          {"trials", cfg.trials},
                          {"seed", cfg.seed},
                          {"detectors", cfg.detectors},
                          {"arithmetic", arithmetic}};
        meta["snr_definition"] =
            "per-receive-antenna average SNR = E||Hs||^2 / E||n||^2; "
            "N0 = U / snr_linear (coherent), 1 / snr_linear (jed)";
        meta["git_describe"] = TASER_GIT_DESCRIBE;
        meta["cost_model"] = cost_model_json(cfg);

        std::string meta_path = out_path;
        const auto dot = meta_path.rfind(".csv");
        if (dot != std::string::npos && dot == meta_path.size() - 4) {
            meta_path = meta_path.substr(0, dot);
        }
        meta_path += ".meta.json";
        std::ofstream meta_os(meta_path);
        if (!meta_os) {
            std::cerr << "error: cannot open " << meta_path << " for writing\n";
            return 1;
        }
        meta_os << meta.dump(2) << "\n";

        std::cout << "wrote " << rows.size() << " rows to " << out_path << " (sidecar "
                  << meta_path << ")\n";
        return 0;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
