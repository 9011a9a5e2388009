#pragma once

// Open-loop and sensitivity operators of multi-inverter systems, maximum
// singular-value sweeps and sensitivity peaks, the modal decomposition of
// homogeneous systems, and the hybrid-system decoupling checks.

#include "drp/gridstrength.hpp"
#include "drp/inverters.hpp"
#include "drp/netgraph.hpp"

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

namespace drp {

/// Log-spaced frequency grid in dq-frame hertz.
struct GridSpec {
    double f_min_hz = 0.1;
    double f_max_hz = 1000.0;
    int points = 2000;
};

/// Ascending angular frequencies (rad/s) for a grid spec.
std::vector<double> make_grid(const GridSpec& spec);

/// A network plus the per-node inverter kind assignment and the two shared
/// admittance models.
class SystemAssignment {
public:
    SystemAssignment(GroundedLaplacian b, std::vector<InverterKind> kinds,
                     AdmittanceModel gfl, AdmittanceModel gfm, double omega0);

    const GroundedLaplacian& laplacian() const { return b_; }
    const std::vector<InverterKind>& kinds() const { return kinds_; }
    const AdmittanceModel& gfl() const { return gfl_; }
    const AdmittanceModel& gfm() const { return gfm_; }
    const Partition& partition() const { return partition_; }
    const Eigen::MatrixXd& b_inverse() const { return b_inv_; }
    double omega0() const { return omega0_; }
    Eigen::Index n() const { return b_.size(); }

    const AdmittanceModel& model_at(Eigen::Index node) const {
        return kinds_[static_cast<size_t>(node)] == InverterKind::Gfl ? gfl_ : gfm_;
    }

private:
    GroundedLaplacian b_;
    std::vector<InverterKind> kinds_;
    AdmittanceModel gfl_, gfm_;
    Partition partition_;
    Eigen::MatrixXd b_inv_;
    double omega0_;
};

/// L(jw) = (B^{-1} (x) F^{-1}(jw)) blockdiag(Y_i(jw)); the closed-form
/// F^{-1} keeps the F-pole at omega0 benign.
Eigen::MatrixXcd open_loop_at(const SystemAssignment& sys, double omega);

/// sigma_max(S) = 1 / sigma_min(I + L); computed from the SVD of I + L,
/// never by explicit inversion. Returns +inf when sigma_min < 1e-13.
double sensitivity_sigma_max(const SystemAssignment& sys, double omega);

inline constexpr double kMarginalSigmaMin = 1e-13;

struct SweepResult {
    std::vector<double> omegas;      // declared grid, ascending
    std::vector<double> sigma_max;   // per grid point
    std::vector<double> refined_omegas;  // extra points from peak refinement
    std::vector<double> refined_sigma;
    double kappa_p_db = -std::numeric_limits<double>::infinity();
    double omega_peak = 0.0;
    std::vector<double> marginal_omegas;  // sigma_min below threshold
};

/// Sweep with golden-section refinement of the peak (relative frequency
/// tolerance 1e-3).
SweepResult sweep(const SystemAssignment& sys, const GridSpec& grid);

struct SibsConfig {
    double scr = 0.0;
    AdmittanceModel model;
    double omega0 = 0.0;
};

/// Single-inverter system: 1/sigma_min(I_2 + scr^{-1} F^{-1} Y(jw)).
SweepResult sibs_sweep(const SibsConfig& cfg, const GridSpec& grid);

struct ModalResult {
    std::vector<SweepResult> per_mode;  // one SIBS sweep per eigenvalue
    std::vector<double> combined_sigma; // max over modes, per grid point
    double kappa_p_db = 0.0;
    double omega_peak = 0.0;
    int argmax_mode = 0;  // 0-based index into ascending eigenvalues
};

/// Homogeneous-system decomposition: per-eigenvalue SIBS sweeps combined
/// by a per-frequency max. Exact for one shared model on all nodes.
ModalResult modal_kappa(const GroundedLaplacian& b, const AdmittanceModel& model,
                        const GridSpec& grid, double omega0);

/// Subsystem network admittances of a hybrid system at one frequency:
/// y_sub1 embeds the GFM admittance behind the GFL nodes, y_sub2 is
/// (B/n1) (x) F. Rows/cols ordered GFL-first / GFM-first respectively,
/// preserving the original relative node order within each class.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>
hybrid_subsystem_networks(const SystemAssignment& sys, double omega);

/// |det(I + L_G3) - det(I + L_sub1) det(I + L_sub2)| / |det(I + L_G3)|
/// per grid point. Frequencies within the F-pole guard are skipped.
std::vector<double> verify_det_factorization(const SystemAssignment& sys,
                                             const GridSpec& grid);

struct Remark1Report {
    double max_rel_deviation = 0.0;  // of min-subsystem sigma_min vs direct
    double kappa_eq15_db = 0.0;      // max of subsystem peaks
    double kappa_direct_db = 0.0;
    double gap_db = 0.0;
};

Remark1Report verify_remark1_equality(const SystemAssignment& sys,
                                      const GridSpec& grid);

struct MainInequalityResult {
    double kappa_g1_db = 0.0;
    double kappa_g2_db = 0.0;
    double kappa_g3_db = 0.0;
    bool holds = false;
    bool degenerate = false;  // hybrid partition empty on one side
};

/// kappa_p of the homogeneous GFL, homogeneous GFM, and hybrid systems on
/// the same network, all computed directly on the full 2n loop.
MainInequalityResult verify_main_inequality(const GroundedLaplacian& b,
                                            const AdmittanceModel& gfl,
                                            const AdmittanceModel& gfm,
                                            const GridSpec& grid,
                                            const Partition& hybrid, double omega0);

inline double to_db(double x) { return 20.0 * std::log10(x); }

}  // namespace drp
