#pragma once

// Case-study front end: scenario execution, the SIBS-vs-SCR figure, the
// randomized lemma harness, and CSV/JSON/markdown report emission.

#include "drp/sensitivity.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace drp {

struct ScenarioConfig {
    std::filesystem::path network_path;
    std::filesystem::path params_path;
    std::string assign = "gfl";  // "gfl" | "gfm" | comma list, e.g. "gfm,gfl,gfm"
    std::optional<double> k_override;
    GridSpec grid;
    std::uint64_t seed = 7;
    double beq_f_hz = 5.0;
};

/// Parses an assignment string against the inverter node count.
std::vector<InverterKind> parse_assignment(const std::string& assign, Eigen::Index n);

struct ScenarioRow {
    std::string scenario;
    double kappa_p_db = 0.0;
    double freq_peak_hz = 0.0;
    bool has_published = false;
    double published_db = 0.0;  // valid when has_published
    double delta_db = 0.0;      // computed - published
    std::string citation;
};

struct BeqReport {
    bool valid = false;
    double f_hz = 0.0;
    double b_eq = 0.0;
    double fit_error = 0.0;
    std::string note;  // failure reason when not valid
};

struct ComparisonReport {
    std::vector<ScenarioRow> rows;          // six rows: G1..G3 x two scenarios
    bool eq21_scenario1 = false;            // k = 1
    bool eq21_scenario2 = false;            // k = 0.1
    double margin1_db = 0.0;
    double margin2_db = 0.0;
    Remark1Report remark1_scenario1;
    Remark1Report remark1_scenario2;
    BeqReport beq;
    LemmaResult lemma1_estimated;           // lemma 1 with the estimated b_eq
    bool lemma1_estimated_valid = false;
    LemmaResult lemma2_case;
    std::vector<std::pair<std::string, SweepResult>> sweeps_scenario1;
    std::vector<std::pair<std::string, SweepResult>> sweeps_scenario2;
};

struct CaseStudyConfig {
    std::filesystem::path network_path;
    std::filesystem::path params_path;
    std::filesystem::path acceptance_path;  // published numbers + tolerances
    GridSpec grid;
    double beq_f_hz = 5.0;
};

ComparisonReport run_case_study(const CaseStudyConfig& cfg);

struct SibsFigureRow {
    double scr = 0.0;
    double gfl_db = 0.0;
    double gfm_db = 0.0;
};

struct SibsFigure {
    std::vector<SibsFigureRow> rows;
    bool has_verdict = false;  // false for a single-point run
    bool gfl_decreasing = false;
    bool gfm_increasing = false;
};

SibsFigure run_sibs_figure(const std::filesystem::path& params_path, double scr_min,
                           double scr_max, int steps, const GridSpec& grid);

struct LemmaTrial {
    std::uint64_t seed = 0;
    int n = 0;
    std::vector<Eigen::Index> gfl_idx, gfm_idx;
    double b_eq = 0.0;
    double lemma1_lhs = 0.0, lemma1_rhs = 0.0, lemma1_margin = 0.0;
    double lemma2_lhs = 0.0, lemma2_rhs = 0.0, lemma2_margin = 0.0;
    bool pass = false;
    bool inconclusive = false;
};

struct LemmaSuiteReport {
    int trials = 0;
    int passed = 0;
    int inconclusive = 0;
    int failed = 0;
    double min_margin1 = 0.0;
    double min_margin2 = 0.0;
    std::vector<LemmaTrial> records;
};

/// Randomized lemma harness; deterministic per seed. Throws if trials < 1.
LemmaSuiteReport run_lemma_suite(int trials, std::uint64_t seed);

/// CSV per the sweep interface: header `freq_hz,sigma_max_db_<scenario>...`,
/// one row per declared grid point. All results must share the grid.
void emit_sweep_csv(const std::vector<std::pair<std::string, SweepResult>>& results,
                    const std::filesystem::path& path);

void write_summary_json(const ComparisonReport& rep, const std::filesystem::path& path);
void write_report_md(const ComparisonReport& rep, const std::filesystem::path& path);
std::string lemma_suite_json(const LemmaSuiteReport& rep);

/// Stable shortest-roundtrip formatting used for all emitted numbers.
std::string format_double(double v);

}  // namespace drp
