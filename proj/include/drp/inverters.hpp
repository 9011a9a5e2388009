#pragma once

// Linearized 2x2 dq-frame admittance models of grid-following and
// grid-forming inverters, the network dynamic factor F and its closed-form
// inverse, and the GFM equivalent-susceptance estimate.
//
// Conventions (fixed for the whole library):
//  - global synchronous dq frame rotating at omega0; quantities per-unit
//  - Y maps a terminal-voltage deviation to the current drawn from the
//    network, so the closed loop is I + Y_N^{-1} Y_G
//  - operating point: rated injection (p0, q0) at terminal voltage u0

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace drp {

class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

struct FilterParams {
    double l_f = 0.0;    // inverter-side inductance, pu
    double c_f = 0.0;    // filter capacitance, pu
    double l_g = 0.0;    // grid-side inductance, pu
    double tau = 0.0;    // R/L ratio of grid impedance (stored, unused here)
    double omega0 = 0.0; // fundamental, rad/s
};

struct OperatingPoint {
    double p0 = 1.0;
    double q0 = 0.0;
    double u0 = 1.0;
};

struct GflParams {
    double cc_kp = 0.0, cc_ki = 0.0;   // current-loop PI
    double k_vf = 0.0, t_vf_s = 0.0;   // voltage feedforward gain / lag
    double pq_kp = 0.0, pq_ki = 0.0;   // power-loop PI
    double pll_kp = 0.0, pll_ki = 0.0; // PLL PI (output in rad/s)
    OperatingPoint op;
};

struct GfmParams {
    double cc_kp = 0.0, cc_ki = 0.0;
    double k_vf = 0.0, t_vf_s = 0.0;
    double vc_kp = 0.0, vc_ki = 0.0;   // voltage-loop PI
    double j_vsg = 0.0, d_vsg = 0.0;   // swing inertia / damping
    OperatingPoint op;
};

enum class InverterKind { Gfl, Gfm, PassiveBranch };

/// Real state-space realization whose frequency response is the 2x2
/// dq-frame admittance Y(jw) = c_out (jwI - a)^{-1} b_in + d.
struct AdmittanceModel {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b_in;   // n_x x 2
    Eigen::MatrixXd c_out;  // 2 x n_x
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    InverterKind kind = InverterKind::PassiveBranch;

    Eigen::Index order() const { return a.rows(); }
};

/// F(jw) = [jw, w0; -w0, jw] / ((jw)^2/w0 + w0). Throws near the
/// |w| = w0 pole (|w -+ w0| < 1e-6 w0).
Eigen::Matrix2cd network_factor(double omega, double omega0);

/// Closed form F^{-1}(jw) = [jw, -w0; w0, jw] / w0; entire, no pole.
Eigen::Matrix2cd network_factor_inverse(double omega, double omega0);

void validate(const FilterParams& f);
void validate(const FilterParams& f, const GflParams& g);
void validate(const FilterParams& f, const GfmParams& g);

/// GFL: LCL filter, converter-current PI with +jw0*Lf decoupling,
/// first-order K_VF feedforward of the capacitor voltage, P/Q PI loops on
/// terminal power generating current references, SRF-PLL on the terminal
/// q-axis voltage. Linearized at the operating point.
AdmittanceModel build_gfl_model(const FilterParams& f, const GflParams& g);

/// GFM: same LCL and current loop; cascaded capacitor-voltage PI in the
/// swing frame; swing dynamics J dw = P* - p_f - D w with the terminal
/// power measured through the first-order T_VF lag.
AdmittanceModel build_gfm_model(const FilterParams& f, const GfmParams& g);

/// Shunt inductor of l_pu to ground: Y = (1/l) F.
AdmittanceModel build_passive_branch(double l_pu, double omega0);

/// c_out (jwI - a)^{-1} b_in + d. Throws if jwI - a is singular
/// (undamped resonance exactly at omega).
Eigen::Matrix2cd eval_admittance(const AdmittanceModel& m, double omega);

struct BeqEstimate {
    double b_eq = 0.0;
    double fit_error = 0.0;  // ||b_eq F - Y||_F / ||Y||_F
};

/// Frobenius projection of Y(jw*) onto F(jw*):
/// b_eq = Re<F, Y> / ||F||_F^2. Throws if the projection is not positive
/// (lemma-1 hypothesis B_eq > 0 fails at this frequency).
BeqEstimate estimate_beq(const AdmittanceModel& m, double omega_star, double omega0);

/// Default estimation frequency for the grid-strength interpretation.
inline constexpr double kDefaultBeqOmega = 2.0 * 3.14159265358979323846 * 5.0;

struct InverterParamSet {
    FilterParams filter;
    GflParams gfl;
    GfmParams gfm;
};

InverterParamSet parse_inverter_params(const std::string& json_text);
InverterParamSet load_inverter_params(const std::filesystem::path& path);

}  // namespace drp
