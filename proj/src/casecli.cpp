#include "drp/casecli.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace drp {

namespace {

using nlohmann::json;

struct PublishedNumbers {
    // kappa_p per scenario, ordered G1, G2, G3
    std::array<double, 3> k1{25.2, 10.8, 9.6};
    std::array<double, 3> k01{3.2, 16.2, 13.7};
    double tol_db = 3.0;
    std::string citation_k1 = "Table I, scenario 1 (k=1)";
    std::string citation_k01 = "Table I, scenario 2 (k=0.1)";
};

PublishedNumbers load_published(const std::filesystem::path& path) {
    PublishedNumbers p;
    if (path.empty()) return p;
    std::ifstream in(path);
    if (!in) throw NetworkError("cannot open acceptance file " + path.string());
    json j = json::parse(in);
    const auto& t = j.at("table1");
    for (int i = 0; i < 3; ++i) {
        p.k1[static_cast<size_t>(i)] = t.at("k1").at(static_cast<size_t>(i)).get<double>();
        p.k01[static_cast<size_t>(i)] = t.at("k01").at(static_cast<size_t>(i)).get<double>();
    }
    p.tol_db = t.at("tol_db").get<double>();
    p.citation_k1 = t.value("citation_k1", p.citation_k1);
    p.citation_k01 = t.value("citation_k01", p.citation_k01);
    return p;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<InverterKind> parse_assignment(const std::string& assign, Eigen::Index n) {
    std::vector<InverterKind> kinds;
    if (assign == "gfl") {
        kinds.assign(static_cast<size_t>(n), InverterKind::Gfl);
        return kinds;
    }
    if (assign == "gfm") {
        kinds.assign(static_cast<size_t>(n), InverterKind::Gfm);
        return kinds;
    }
    std::stringstream ss(assign);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "gfl")
            kinds.push_back(InverterKind::Gfl);
        else if (tok == "gfm")
            kinds.push_back(InverterKind::Gfm);
        else
            throw NetworkError("assignment token '" + tok + "' is not gfl/gfm");
    }
    if (static_cast<Eigen::Index>(kinds.size()) != n)
        throw NetworkError("assignment covers " + std::to_string(kinds.size()) +
                           " nodes, network has " + std::to_string(n));
    return kinds;
}

ComparisonReport run_case_study(const CaseStudyConfig& cfg) {
    const auto published = load_published(cfg.acceptance_path);
    const NetworkSpec base_spec = load_network(cfg.network_path);
    const InverterParamSet params = load_inverter_params(cfg.params_path);
    const double w0 = params.filter.omega0;
    const AdmittanceModel gfl = build_gfl_model(params.filter, params.gfl);
    const AdmittanceModel gfm = build_gfm_model(params.filter, params.gfm);

    ComparisonReport rep;

    const std::array<std::pair<double, const std::array<double, 3>*>, 2> scenarios{
        std::make_pair(1.0, &published.k1), std::make_pair(0.1, &published.k01)};
    const std::array<std::string, 3> names{"gamma1_gfl", "gamma2_gfm", "gamma3_hybrid"};
    const std::array<std::string, 3> assigns{"gfl", "gfm", "gfm,gfl,gfm"};

    for (size_t s = 0; s < scenarios.size(); ++s) {
        NetworkSpec spec = base_spec;
        spec.k = scenarios[s].first;
        const GroundedLaplacian b = grounded_laplacian(spec);
        auto& sweeps = s == 0 ? rep.sweeps_scenario1 : rep.sweeps_scenario2;
        std::array<double, 3> kappas{};
        for (size_t c = 0; c < 3; ++c) {
            SystemAssignment sys(b, parse_assignment(assigns[c], b.size()), gfl, gfm, w0);
            SweepResult sw = sweep(sys, cfg.grid);
            kappas[c] = sw.kappa_p_db;
            ScenarioRow row;
            row.scenario = names[c] + (s == 0 ? "_k1" : "_k0.1");
            row.kappa_p_db = sw.kappa_p_db;
            row.freq_peak_hz = sw.omega_peak / (2.0 * 3.14159265358979323846);
            row.has_published = true;
            row.published_db = (*scenarios[s].second)[c];
            row.delta_db = row.kappa_p_db - row.published_db;
            row.citation = s == 0 ? published.citation_k1 : published.citation_k01;
            rep.rows.push_back(row);
            sweeps.emplace_back(names[c], std::move(sw));
        }
        const double margin = std::max(kappas[0], kappas[1]) - kappas[2];
        if (s == 0) {
            rep.eq21_scenario1 = margin > 0.0;
            rep.margin1_db = margin;
        } else {
            rep.eq21_scenario2 = margin > 0.0;
            rep.margin2_db = margin;
        }

        SystemAssignment hybrid(b, parse_assignment(assigns[2], b.size()), gfl, gfm, w0);
        auto& r1 = s == 0 ? rep.remark1_scenario1 : rep.remark1_scenario2;
        r1 = verify_remark1_equality(hybrid, cfg.grid);
    }

    // equivalent susceptance and the lemma checks on the k=1 network
    NetworkSpec spec1 = base_spec;
    spec1.k = 1.0;
    const GroundedLaplacian b1 = grounded_laplacian(spec1);
    Partition part;
    const auto kinds = parse_assignment(assigns[2], b1.size());
    for (Eigen::Index i = 0; i < b1.size(); ++i) {
        if (kinds[static_cast<size_t>(i)] == InverterKind::Gfl)
            part.gfl_idx.push_back(i);
        else
            part.gfm_idx.push_back(i);
    }
    rep.beq.f_hz = cfg.beq_f_hz;
    try {
        const auto est =
            estimate_beq(gfm, 2.0 * 3.14159265358979323846 * cfg.beq_f_hz, w0);
        rep.beq.valid = true;
        rep.beq.b_eq = est.b_eq;
        rep.beq.fit_error = est.fit_error;
        rep.lemma1_estimated = lemma1_check(b1, part, est.b_eq);
        rep.lemma1_estimated_valid = true;
    } catch (const ModelError& e) {
        rep.beq.note = e.what();
    }
    rep.lemma2_case = lemma2_check(b1, part);
    return rep;
}

SibsFigure run_sibs_figure(const std::filesystem::path& params_path, double scr_min,
                           double scr_max, int steps, const GridSpec& grid) {
    if (!(scr_min > 0.0) || scr_max < scr_min || steps < 1)
        throw NetworkError("invalid SIBS sweep range");
    const InverterParamSet params = load_inverter_params(params_path);
    const AdmittanceModel gfl = build_gfl_model(params.filter, params.gfl);
    const AdmittanceModel gfm = build_gfm_model(params.filter, params.gfm);

    SibsFigure fig;
    const bool single = scr_min == scr_max || steps == 1;
    const int n = single ? 1 : steps;
    for (int i = 0; i < n; ++i) {
        SibsFigureRow row;
        row.scr = single ? scr_min
                         : scr_min + (scr_max - scr_min) * i / (steps - 1);
        SibsConfig cl{row.scr, gfl, params.filter.omega0};
        SibsConfig cm{row.scr, gfm, params.filter.omega0};
        row.gfl_db = sibs_sweep(cl, grid).kappa_p_db;
        row.gfm_db = sibs_sweep(cm, grid).kappa_p_db;
        fig.rows.push_back(row);
    }
    if (!single) {
        fig.has_verdict = true;
        fig.gfl_decreasing = true;
        fig.gfm_increasing = true;
        for (size_t i = 1; i < fig.rows.size(); ++i) {
            if (!(fig.rows[i].gfl_db < fig.rows[i - 1].gfl_db)) fig.gfl_decreasing = false;
            if (!(fig.rows[i].gfm_db > fig.rows[i - 1].gfm_db)) fig.gfm_increasing = false;
        }
    }
    return fig;
}

LemmaSuiteReport run_lemma_suite(int trials, std::uint64_t seed) {
    if (trials < 1) throw NetworkError("lemma suite needs at least one trial");
    LemmaSuiteReport rep;
    rep.trials = trials;
    rep.min_margin1 = std::numeric_limits<double>::infinity();
    rep.min_margin2 = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        // one child engine per trial keeps trials independent of ordering
        const std::uint64_t trial_seed = seed * 1000003ull + static_cast<std::uint64_t>(t);
        std::mt19937_64 rng(trial_seed);
        const GroundedLaplacian b = random_grounded_laplacian(rng);
        const Partition p = random_partition(rng, b.size());
        const double b_eq = uniform_real(rng, 1e-3, 5.0);

        LemmaTrial rec;
        rec.seed = trial_seed;
        rec.n = static_cast<int>(b.size());
        rec.gfl_idx = p.gfl_idx;
        rec.gfm_idx = p.gfm_idx;
        rec.b_eq = b_eq;
        const LemmaResult l1 = lemma1_check(b, p, b_eq);
        const LemmaResult l2 = lemma2_check(b, p);
        rec.lemma1_lhs = l1.lhs;
        rec.lemma1_rhs = l1.rhs;
        rec.lemma1_margin = l1.margin;
        rec.lemma2_lhs = l2.lhs;
        rec.lemma2_rhs = l2.rhs;
        rec.lemma2_margin = l2.margin;
        rec.inconclusive = l1.inconclusive || l2.inconclusive;
        rec.pass = l1.holds && l2.holds;
        rep.min_margin1 = std::min(rep.min_margin1, l1.margin);
        rep.min_margin2 = std::min(rep.min_margin2, l2.margin);
        if (rec.pass)
            ++rep.passed;
        else if (rec.inconclusive)
            ++rep.inconclusive;
        else
            ++rep.failed;
        rep.records.push_back(std::move(rec));
    }
    return rep;
}

void emit_sweep_csv(const std::vector<std::pair<std::string, SweepResult>>& results,
                    const std::filesystem::path& path) {
    if (results.empty()) throw NetworkError("emit_sweep_csv: no results");
    const auto& grid = results.front().second.omegas;
    for (const auto& [name, res] : results) {
        if (res.omegas.size() != grid.size())
            throw NetworkError("emit_sweep_csv: result '" + name +
                               "' is on a different frequency grid");
        for (size_t i = 0; i < grid.size(); ++i)
            if (res.omegas[i] != grid[i])
                throw NetworkError("emit_sweep_csv: result '" + name +
                                   "' is on a different frequency grid");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NetworkError("cannot write " + path.string());
    out << "freq_hz";
    for (const auto& [name, res] : results) out << ",sigma_max_db_" << name;
    out << "\n";
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    for (size_t i = 0; i < grid.size(); ++i) {
        out << format_double(grid[i] / two_pi);
        for (const auto& [name, res] : results)
            out << "," << format_double(to_db(res.sigma_max[i]));
        out << "\n";
    }
}

void write_summary_json(const ComparisonReport& rep, const std::filesystem::path& path) {
    json j;
    j["scenarios"] = json::array();
    for (const auto& row : rep.rows) {
        json r;
        r["scenario"] = row.scenario;
        r["kappa_p_db"] = row.kappa_p_db;
        r["freq_peak_hz"] = row.freq_peak_hz;
        r["holds_eq21"] = row.scenario.find("_k1") != std::string::npos
                              ? rep.eq21_scenario1
                              : rep.eq21_scenario2;
        if (row.has_published) {
            r["published_db"] = row.published_db;
            r["delta_db"] = row.delta_db;
            r["citation"] = row.citation;
        }
        j["scenarios"].push_back(r);
    }
    j["eq21"] = {{"scenario1_holds", rep.eq21_scenario1},
                 {"scenario1_margin_db", rep.margin1_db},
                 {"scenario2_holds", rep.eq21_scenario2},
                 {"scenario2_margin_db", rep.margin2_db}};
    j["remark1"] = {
        {"scenario1",
         {{"max_rel_deviation", rep.remark1_scenario1.max_rel_deviation},
          {"kappa_eq15_db", rep.remark1_scenario1.kappa_eq15_db},
          {"kappa_direct_db", rep.remark1_scenario1.kappa_direct_db},
          {"gap_db", rep.remark1_scenario1.gap_db}}},
        {"scenario2",
         {{"max_rel_deviation", rep.remark1_scenario2.max_rel_deviation},
          {"kappa_eq15_db", rep.remark1_scenario2.kappa_eq15_db},
          {"kappa_direct_db", rep.remark1_scenario2.kappa_direct_db},
          {"gap_db", rep.remark1_scenario2.gap_db}}}};
    json beq;
    beq["f_hz"] = rep.beq.f_hz;
    beq["valid"] = rep.beq.valid;
    if (rep.beq.valid) {
        beq["b_eq"] = rep.beq.b_eq;
        beq["fit_error"] = rep.beq.fit_error;
    } else {
        beq["note"] = rep.beq.note;
    }
    j["b_eq"] = beq;
    if (rep.lemma1_estimated_valid)
        j["lemma1_estimated"] = {{"lhs", rep.lemma1_estimated.lhs},
                                 {"rhs", rep.lemma1_estimated.rhs},
                                 {"margin", rep.lemma1_estimated.margin},
                                 {"holds", rep.lemma1_estimated.holds}};
    j["lemma2_case"] = {{"lhs", rep.lemma2_case.lhs},
                        {"rhs", rep.lemma2_case.rhs},
                        {"margin", rep.lemma2_case.margin},
                        {"holds", rep.lemma2_case.holds}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NetworkError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_report_md(const ComparisonReport& rep, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NetworkError("cannot write " + path.string());
    auto db1 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        return std::string(buf);
    };
    out << "# Disturbance rejection comparison\n\n";
    out << "| scenario | computed kappa_p (dB) | published (dB) | delta (dB) | source |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& row : rep.rows) {
        out << "| " << row.scenario << " | " << db1(row.kappa_p_db) << " | ";
        if (row.has_published)
            out << db1(row.published_db) << " | " << db1(row.delta_db) << " | "
                << row.citation;
        else
            out << "- | - | -";
        out << " |\n";
    }
    out << "\n";
    out << "Headline inequality kappa_G3 < max(kappa_G1, kappa_G2):\n\n";
    out << "- scenario 1 (k=1): " << (rep.eq21_scenario1 ? "holds" : "fails")
        << ", margin " << db1(rep.margin1_db) << " dB\n";
    out << "- scenario 2 (k=0.1): " << (rep.eq21_scenario2 ? "holds" : "fails")
        << ", margin " << db1(rep.margin2_db) << " dB\n\n";
    out << "Subsystem-decoupling measurement (smallest-singular-value match):\n\n";
    out << "- scenario 1: max relative deviation "
        << format_double(rep.remark1_scenario1.max_rel_deviation) << ", peak gap "
        << db1(rep.remark1_scenario1.gap_db) << " dB\n";
    out << "- scenario 2: max relative deviation "
        << format_double(rep.remark1_scenario2.max_rel_deviation) << ", peak gap "
        << db1(rep.remark1_scenario2.gap_db) << " dB\n\n";
    if (rep.beq.valid) {
        out << "GFM equivalent susceptance at " << format_double(rep.beq.f_hz)
            << " Hz: b_eq = " << format_double(rep.beq.b_eq) << " (fit error "
            << format_double(rep.beq.fit_error) << ")\n";
        if (rep.lemma1_estimated_valid)
            out << "Lemma 1 with estimated b_eq: margin "
                << format_double(rep.lemma1_estimated.margin) << " ("
                << (rep.lemma1_estimated.holds ? "holds" : "fails") << ")\n";
    } else {
        out << "GFM equivalent susceptance at " << format_double(rep.beq.f_hz)
            << " Hz: not positive (" << rep.beq.note << ")\n";
    }
    out << "Lemma 2 on the case network: margin "
        << format_double(rep.lemma2_case.margin) << " ("
        << (rep.lemma2_case.holds ? "holds" : "fails") << ")\n";
}

std::string lemma_suite_json(const LemmaSuiteReport& rep) {
    json j;
    j["trials"] = rep.trials;
    j["passed"] = rep.passed;
    j["inconclusive"] = rep.inconclusive;
    j["failed"] = rep.failed;
    j["min_margin_lemma1"] = rep.min_margin1;
    j["min_margin_lemma2"] = rep.min_margin2;
    j["records"] = json::array();
    for (const auto& r : rep.records) {
        json rec;
        rec["seed"] = r.seed;
        rec["n"] = r.n;
        rec["partition"] = {{"gfl", r.gfl_idx}, {"gfm", r.gfm_idx}};
        rec["b_eq"] = r.b_eq;
        rec["lemma1"] = {{"lhs", r.lemma1_lhs}, {"rhs", r.lemma1_rhs},
                         {"margin", r.lemma1_margin}};
        rec["lemma2"] = {{"lhs", r.lemma2_lhs}, {"rhs", r.lemma2_rhs},
                         {"margin", r.lemma2_margin}};
        rec["pass"] = r.pass;
        j["records"].push_back(rec);
    }
    return j.dump(2);
}

}  // namespace drp
