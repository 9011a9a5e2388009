// Command-line front end for disturbance-rejection analysis of
// multi-inverter networks.
//
// Subcommands:
//   reduce     network file -> grounded Laplacian, eigenvalues, gSCR
//   sweep      sensitivity sweep of one kind assignment
//   casestudy  three assignments x two line-length scenarios, with reports
//   sibs       single-inverter kappa_p versus SCR for both controllers
//   lemmas     randomized eigenvalue-inequality harness

#include "drp/casecli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void add_grid_flags(CLI::App* cmd, drp::GridSpec& grid) {
    cmd->add_option("--fmin", grid.f_min_hz, "grid lower edge, Hz");
    cmd->add_option("--fmax", grid.f_max_hz, "grid upper edge, Hz");
    cmd->add_option("--points", grid.points, "grid point count");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"disturbance rejection analysis of GFL/GFM inverter networks"};
    app.require_subcommand(1);

    std::string network, params, assign = "gfl", out_dir = ".";
    double k_override = -1.0;
    drp::GridSpec grid;
    std::uint64_t seed = 7;

    auto* reduce = app.add_subcommand("reduce", "grounded Laplacian and grid strength");
    reduce->add_option("--network", network, "network JSON file")->required();
    reduce->add_option("--k", k_override, "override the line-length scaling factor");

    auto* sweep_cmd = app.add_subcommand("sweep", "sensitivity sweep of one assignment");
    sweep_cmd->add_option("--network", network)->required();
    sweep_cmd->add_option("--params", params, "inverter parameter JSON")->required();
    sweep_cmd->add_option("--assign", assign, "gfl | gfm | comma list per node");
    sweep_cmd->add_option("--k", k_override);
    sweep_cmd->add_option("--out", out_dir, "output directory");
    sweep_cmd->add_option("--seed", seed);
    add_grid_flags(sweep_cmd, grid);

    auto* cs = app.add_subcommand("casestudy", "run the three-inverter case study");
    std::string acceptance;
    double beq_fhz = 5.0;
    cs->add_option("--network", network)->required();
    cs->add_option("--params", params)->required();
    cs->add_option("--acceptance", acceptance, "published numbers JSON");
    cs->add_option("--out", out_dir);
    cs->add_option("--beq-fhz", beq_fhz, "equivalent-susceptance frequency, Hz");
    cs->add_option("--seed", seed);
    add_grid_flags(cs, grid);

    auto* sibs = app.add_subcommand("sibs", "kappa_p versus SCR for both controllers");
    double scr_min = 3.0, scr_max = 7.0;
    int steps = 9;
    sibs->add_option("--params", params)->required();
    sibs->add_option("--scr-min", scr_min);
    sibs->add_option("--scr-max", scr_max);
    sibs->add_option("--steps", steps);
    sibs->add_option("--out", out_dir);
    add_grid_flags(sibs, grid);

    auto* lem = app.add_subcommand("lemmas", "randomized eigenvalue-inequality harness");
    int trials = 100;
    lem->add_option("--trials", trials);
    lem->add_option("--seed", seed);
    lem->add_option("--out", out_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);

        if (reduce->parsed()) {
            drp::NetworkSpec spec = drp::load_network(network);
            if (k_override > 0) spec.k = k_override;
            const auto b = drp::grounded_laplacian(spec);
            const auto ed = drp::eig_sym(b.b);
            nlohmann::json j;
            j["node_order"] = b.node_order;
            j["b"] = nlohmann::json::array();
            for (Eigen::Index i = 0; i < b.size(); ++i) {
                nlohmann::json row = nlohmann::json::array();
                for (Eigen::Index c = 0; c < b.size(); ++c) row.push_back(b.b(i, c));
                j["b"].push_back(row);
            }
            j["eigenvalues"] = std::vector<double>(
                ed.lambdas.data(), ed.lambdas.data() + ed.lambdas.size());
            j["gscr"] = drp::gscr(b);
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (sweep_cmd->parsed()) {
            drp::NetworkSpec spec = drp::load_network(network);
            if (k_override > 0) spec.k = k_override;
            const auto b = drp::grounded_laplacian(spec);
            const auto ps = drp::load_inverter_params(params);
            const auto gfl = drp::build_gfl_model(ps.filter, ps.gfl);
            const auto gfm = drp::build_gfm_model(ps.filter, ps.gfm);
            drp::SystemAssignment sys(b, drp::parse_assignment(assign, b.size()), gfl,
                                      gfm, ps.filter.omega0);
            const auto res = drp::sweep(sys, grid);
            drp::emit_sweep_csv({{assign == "gfl" || assign == "gfm" ? assign : "custom",
                                  res}},
                                std::filesystem::path(out_dir) / "sweep_custom.csv");
            std::cout << "kappa_p_db " << drp::format_double(res.kappa_p_db)
                      << " at " << drp::format_double(res.omega_peak / kTwoPi)
                      << " Hz\n";
            return 0;
        }

        if (cs->parsed()) {
            drp::CaseStudyConfig cfg;
            cfg.network_path = network;
            cfg.params_path = params;
            cfg.acceptance_path = acceptance;
            cfg.grid = grid;
            cfg.beq_f_hz = beq_fhz;
            const auto rep = drp::run_case_study(cfg);
            const std::filesystem::path out(out_dir);
            drp::emit_sweep_csv(rep.sweeps_scenario1, out / "sweep_scenario1.csv");
            drp::emit_sweep_csv(rep.sweeps_scenario2, out / "sweep_scenario2.csv");
            drp::write_summary_json(rep, out / "summary.json");
            drp::write_report_md(rep, out / "report.md");
            for (const auto& row : rep.rows)
                std::cout << row.scenario << ": " << drp::format_double(row.kappa_p_db)
                          << " dB (published " << drp::format_double(row.published_db)
                          << ", delta " << drp::format_double(row.delta_db) << ")\n";
            std::cout << "eq21 scenario1 " << (rep.eq21_scenario1 ? "holds" : "FAILS")
                      << ", scenario2 " << (rep.eq21_scenario2 ? "holds" : "FAILS")
                      << "\n";
            return rep.eq21_scenario1 && rep.eq21_scenario2 ? 0 : 1;
        }

        if (sibs->parsed()) {
            const auto fig = drp::run_sibs_figure(params, scr_min, scr_max, steps, grid);
            std::ofstream csv(std::filesystem::path(out_dir) / "sibs.csv",
                              std::ios::binary);
            csv << "scr,kappa_gfl_db,kappa_gfm_db\n";
            for (const auto& row : fig.rows)
                csv << drp::format_double(row.scr) << ","
                    << drp::format_double(row.gfl_db) << ","
                    << drp::format_double(row.gfm_db) << "\n";
            if (fig.has_verdict)
                std::cout << "gfl_decreasing " << (fig.gfl_decreasing ? "yes" : "NO")
                          << ", gfm_increasing " << (fig.gfm_increasing ? "yes" : "NO")
                          << "\n";
            else
                std::cout << "single-point run, no monotonicity verdict\n";
            return 0;
        }

        if (lem->parsed()) {
            const auto rep = drp::run_lemma_suite(trials, seed);
            std::ofstream out(std::filesystem::path(out_dir) / "lemmas.json",
                              std::ios::binary);
            out << drp::lemma_suite_json(rep) << "\n";
            std::cout << "lemma trials " << rep.trials << ": passed " << rep.passed
                      << ", inconclusive " << rep.inconclusive << ", failed "
                      << rep.failed << "\n";
            return rep.failed == 0 && rep.inconclusive == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
