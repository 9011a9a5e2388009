#include "drp/inverters.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <sstream>

namespace drp {

namespace {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;

// 90-degree rotation; multiplication by j in the complex dq embedding.
const Matrix2d kJ2 = (Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();

Matrix2d rot(double th) {
    Matrix2d r;
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return r;
}

// Shared electrical equilibrium: terminal voltage on the global d-axis,
// rated injection, then back through the LCL chain.
struct ElectricalEq {
    Vector2d vt, i2, vc, i1, vm;
};

ElectricalEq electrical_equilibrium(const FilterParams& f, const OperatingPoint& op) {
    ElectricalEq e;
    e.vt = Vector2d(op.u0, 0.0);
    e.i2 = Vector2d(op.p0 / op.u0, -op.q0 / op.u0);
    e.vc = e.vt + f.l_g * (kJ2 * e.i2);
    e.i1 = e.i2 + f.c_f * (kJ2 * e.vc);
    e.vm = e.vc + f.l_f * (kJ2 * e.i1);
    return e;
}

void set2(MatrixXd& m, Eigen::Index r, Eigen::Index c, const Matrix2d& blk) {
    m.block<2, 2>(r, c) = blk;
}

}  // namespace

Eigen::Matrix2cd network_factor(double omega, double omega0) {
    if (std::abs(std::abs(omega) - omega0) < 1e-6 * omega0)
        throw ModelError("network factor F has a pole at |omega| = omega0 (omega=" +
                         std::to_string(omega) + ")");
    const std::complex<double> s(0.0, omega);
    const std::complex<double> den = s * s / omega0 + omega0;
    Eigen::Matrix2cd f;
    f << s, std::complex<double>(omega0, 0.0), std::complex<double>(-omega0, 0.0), s;
    return f / den;
}

Eigen::Matrix2cd network_factor_inverse(double omega, double omega0) {
    const std::complex<double> s(0.0, omega);
    Eigen::Matrix2cd f;
    f << s, std::complex<double>(-omega0, 0.0), std::complex<double>(omega0, 0.0), s;
    return f / omega0;
}

void validate(const FilterParams& f) {
    if (!(f.l_f > 0.0 && f.c_f > 0.0 && f.l_g > 0.0))
        throw ModelError("filter inductances and capacitance must be positive");
    if (!(f.omega0 > 0.0)) throw ModelError("omega0 must be positive");
}

namespace {
void validate_common(const FilterParams& f, double cc_kp, double cc_ki, double k_vf,
                     double t_vf_s, const OperatingPoint& op) {
    validate(f);
    if (cc_kp < 0 || cc_ki < 0 || k_vf < 0)
        throw ModelError("controller gains must be non-negative");
    if (!(t_vf_s > 0.0)) throw ModelError("feedforward time constant must be positive");
    if (!(op.u0 > 0.0)) throw ModelError("operating-point voltage must be positive");
}
}  // namespace

void validate(const FilterParams& f, const GflParams& g) {
    validate_common(f, g.cc_kp, g.cc_ki, g.k_vf, g.t_vf_s, g.op);
    if (g.pq_kp < 0 || g.pq_ki < 0 || g.pll_kp < 0 || g.pll_ki < 0)
        throw ModelError("GFL loop gains must be non-negative");
}

void validate(const FilterParams& f, const GfmParams& g) {
    validate_common(f, g.cc_kp, g.cc_ki, g.k_vf, g.t_vf_s, g.op);
    if (g.vc_kp < 0 || g.vc_ki < 0)
        throw ModelError("GFM voltage-loop gains must be non-negative");
    if (!(g.j_vsg > 0.0 && g.d_vsg > 0.0))
        throw ModelError("swing inertia and damping must be positive");
}

// State layout: i1(0,1) vc(2,3) i2(4,5) gc(6,7) xvf(8,9) gp(10) gq(11)
// xpll(12) th(13). The PLL aligns the controller frame with the terminal
// voltage, so theta0 = 0 and the frame-rotation terms reduce to the
// equilibrium-vector couplings on the theta column.
AdmittanceModel build_gfl_model(const FilterParams& f, const GflParams& g) {
    validate(f, g);
    const int nx = 14;
    const auto eq = electrical_equilibrium(f, g.op);
    const double w0 = f.omega0;

    // decoupling belongs to the current regulator; inactive loop emits nothing
    const double dec = (g.cc_kp != 0.0 || g.cc_ki != 0.0) ? 1.0 : 0.0;

    // power linearization rows: dp = pu*dvt + px*di2, dq = qu*dvt + qx*di2
    const Eigen::RowVector2d pu(eq.i2(0), eq.i2(1));
    const Eigen::RowVector2d px(eq.vt(0), eq.vt(1));
    const Eigen::RowVector2d qu(-eq.i2(1), eq.i2(0));
    const Eigen::RowVector2d qx(eq.vt(1), -eq.vt(0));

    // current-reference sensitivities: diref = Mu*dvt + Mi2*di2 + Mg*[dgp;dgq]
    Matrix2d mref_u, mref_i2, mref_g;
    mref_u.row(0) = -g.pq_kp * pu;
    mref_u.row(1) = g.pq_kp * qu;
    mref_i2.row(0) = -g.pq_kp * px;
    mref_i2.row(1) = g.pq_kp * qx;
    mref_g << g.pq_ki, 0.0, 0.0, -g.pq_ki;

    const Matrix2d I2 = Matrix2d::Identity();
    const Matrix2d k1 = dec * f.l_f * kJ2 - g.cc_kp * I2;  // acts on di1c

    MatrixXd a = MatrixXd::Zero(nx, nx);
    MatrixXd b = MatrixXd::Zero(nx, 2);

    // d(i1)/dt = (w0/lf) (dvm - dvc - lf J2 di1)
    // dvm = kp_cc(mref_u dvt + mref_i2 di2 + mref_g dg) + k1 di1c
    //       + ki_cc dgc + kvf dxvf + J2 vm0 dth,  di1c = di1 - J2 i10 dth
    {
        const double s = w0 / f.l_f;
        set2(a, 0, 0, s * (k1 - f.l_f * kJ2));
        set2(a, 0, 2, s * (-I2));
        set2(a, 0, 4, s * (g.cc_kp * mref_i2));
        set2(a, 0, 6, s * (g.cc_ki * I2));
        set2(a, 0, 8, s * (g.k_vf * I2));
        a.block<2, 2>(0, 10) = s * (g.cc_kp * mref_g);
        a.block<2, 1>(0, 13) = s * (-k1 * (kJ2 * eq.i1) + kJ2 * eq.vm);
        b.block<2, 2>(0, 0) = s * (g.cc_kp * mref_u);
    }
    // d(vc)/dt = (w0/cf) (di1 - di2 - cf J2 dvc)
    {
        const double s = w0 / f.c_f;
        set2(a, 2, 0, s * I2);
        set2(a, 2, 2, -w0 * kJ2);
        set2(a, 2, 4, -s * I2);
    }
    // d(i2)/dt = (w0/lg) (dvc - dvt - lg J2 di2)
    {
        const double s = w0 / f.l_g;
        set2(a, 4, 2, s * I2);
        set2(a, 4, 4, -w0 * kJ2);
        b.block<2, 2>(4, 0) = -s * I2;
    }
    // d(gc)/dt = diref - di1c
    {
        set2(a, 6, 0, -I2);
        set2(a, 6, 4, mref_i2);
        a.block<2, 2>(6, 10) = mref_g;
        a.block<2, 1>(6, 13) = kJ2 * eq.i1;
        b.block<2, 2>(6, 0) = mref_u;
    }
    // d(xvf)/dt = (dvcc - dxvf)/tvf, dvcc = dvc - J2 vc0 dth
    {
        set2(a, 8, 2, I2 / g.t_vf_s);
        set2(a, 8, 8, -I2 / g.t_vf_s);
        a.block<2, 1>(8, 13) = -(kJ2 * eq.vc) / g.t_vf_s;
    }
    // d(gp)/dt = -dp ; d(gq)/dt = -dq
    a.block<1, 2>(10, 4) = -px;
    b.block<1, 2>(10, 0) = -pu;
    a.block<1, 2>(11, 4) = -qx;
    b.block<1, 2>(11, 0) = -qu;
    // d(xpll)/dt = dvtc_q = dvt_q - vt0_d dth
    b(12, 1) = 1.0;
    a(12, 13) = -eq.vt(0);
    // d(th)/dt = kp_pll dvtc_q + ki_pll dxpll   (rad/s)
    b(13, 1) = g.pll_kp;
    a(13, 13) = -g.pll_kp * eq.vt(0);
    a(13, 12) = g.pll_ki;

    AdmittanceModel m;
    m.a = std::move(a);
    m.b_in = std::move(b);
    m.c_out = MatrixXd::Zero(2, nx);
    m.c_out(0, 4) = -1.0;  // current drawn from the network is -i2
    m.c_out(1, 5) = -1.0;
    m.kind = InverterKind::Gfl;
    return m;
}

// State layout: i1(0,1) vc(2,3) i2(4,5) gc(6,7) xvf(8,9) pf(10) gv(11,12)
// dw(13) th(14). The swing frame sits on the capacitor voltage, so
// theta0 = angle(vc0) and the rotation matrices stay explicit.
AdmittanceModel build_gfm_model(const FilterParams& f, const GfmParams& g) {
    validate(f, g);
    const int nx = 15;
    const auto eq = electrical_equilibrium(f, g.op);
    const double w0 = f.omega0;

    const double th0 = std::atan2(eq.vc(1), eq.vc(0));
    const Matrix2d r0 = rot(th0);
    const Matrix2d r0t = r0.transpose();
    const Vector2d i1c0 = r0t * eq.i1;
    const Vector2d vcc0 = r0t * eq.vc;

    const double dec = (g.cc_kp != 0.0 || g.cc_ki != 0.0) ? 1.0 : 0.0;
    const Matrix2d I2 = Matrix2d::Identity();
    const Matrix2d k1 = dec * f.l_f * kJ2 - g.cc_kp * I2;

    const Eigen::RowVector2d pu(eq.i2(0), eq.i2(1));
    const Eigen::RowVector2d px(eq.vt(0), eq.vt(1));

    MatrixXd a = MatrixXd::Zero(nx, nx);
    MatrixXd b = MatrixXd::Zero(nx, 2);

    // d(i1)/dt: dvm = r0 dvmc + J2 vm0 dth with
    // dvmc = -kp_cc kp_vc dvcc + kp_cc ki_vc dgv + k1 di1c + ki_cc dgc + kvf dxvf
    {
        const double s = w0 / f.l_f;
        set2(a, 0, 0, s * (r0 * k1 * r0t - f.l_f * kJ2));
        set2(a, 0, 2, s * (-g.cc_kp * g.vc_kp * I2 - I2));
        set2(a, 0, 6, s * (g.cc_ki * r0));
        set2(a, 0, 8, s * (g.k_vf * r0));
        a.block<2, 2>(0, 11) = s * (g.cc_kp * g.vc_ki * r0);
        a.block<2, 1>(0, 14) =
            s * (r0 * (g.cc_kp * g.vc_kp * (kJ2 * vcc0) - k1 * (kJ2 * i1c0)) +
                 kJ2 * eq.vm);
    }
    {
        const double s = w0 / f.c_f;
        set2(a, 2, 0, s * I2);
        set2(a, 2, 2, -w0 * kJ2);
        set2(a, 2, 4, -s * I2);
    }
    {
        const double s = w0 / f.l_g;
        set2(a, 4, 2, s * I2);
        set2(a, 4, 4, -w0 * kJ2);
        b.block<2, 2>(4, 0) = -s * I2;
    }
    // d(gc)/dt = diref - di1c = -kp_vc dvcc + ki_vc dgv - di1c
    {
        set2(a, 6, 0, -r0t);
        set2(a, 6, 2, -g.vc_kp * r0t);
        a.block<2, 2>(6, 11) = g.vc_ki * I2;
        a.block<2, 1>(6, 14) = g.vc_kp * (kJ2 * vcc0) + kJ2 * i1c0;
    }
    // d(xvf)/dt = (dvcc - dxvf)/tvf
    {
        set2(a, 8, 2, r0t / g.t_vf_s);
        set2(a, 8, 8, -I2 / g.t_vf_s);
        a.block<2, 1>(8, 14) = -(kJ2 * vcc0) / g.t_vf_s;
    }
    // d(pf)/dt = (dp - dpf)/tvf, terminal power through the measurement lag
    a.block<1, 2>(10, 4) = px / g.t_vf_s;
    a(10, 10) = -1.0 / g.t_vf_s;
    b.block<1, 2>(10, 0) = pu / g.t_vf_s;
    // d(gv)/dt = -dvcc
    set2(a, 11, 2, -r0t);
    a.block<2, 1>(11, 14) = kJ2 * vcc0;
    // swing: J d(dw)/dt = -dpf - D dw ; d(th)/dt = w0 dw
    a(13, 10) = -1.0 / g.j_vsg;
    a(13, 13) = -g.d_vsg / g.j_vsg;
    a(14, 13) = w0;

    AdmittanceModel m;
    m.a = std::move(a);
    m.b_in = std::move(b);
    m.c_out = MatrixXd::Zero(2, nx);
    m.c_out(0, 4) = -1.0;
    m.c_out(1, 5) = -1.0;
    m.kind = InverterKind::Gfm;
    return m;
}

AdmittanceModel build_passive_branch(double l_pu, double omega0) {
    if (!(l_pu > 0.0) || !(omega0 > 0.0))
        throw ModelError("passive branch needs positive inductance and omega0");
    AdmittanceModel m;
    m.a = -omega0 * kJ2;
    m.b_in = (omega0 / l_pu) * Eigen::Matrix2d::Identity();
    m.c_out = Eigen::Matrix2d::Identity();
    m.kind = InverterKind::PassiveBranch;
    return m;
}

Eigen::Matrix2cd eval_admittance(const AdmittanceModel& m, double omega) {
    Eigen::MatrixXcd sys = -m.a.cast<std::complex<double>>();
    sys.diagonal().array() += std::complex<double>(0.0, omega);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(sys);
    if (!lu.isInvertible())
        throw ModelError("admittance evaluation hit an undamped resonance at omega=" +
                         std::to_string(omega));
    return m.c_out * lu.solve(Eigen::MatrixXcd(m.b_in)) +
           m.d.cast<std::complex<double>>();
}

BeqEstimate estimate_beq(const AdmittanceModel& m, double omega_star, double omega0) {
    if (m.kind != InverterKind::Gfm && m.kind != InverterKind::PassiveBranch)
        throw ModelError("estimate_beq expects a GFM (or passive) model");
    const Eigen::Matrix2cd f = network_factor(omega_star, omega0);
    const Eigen::Matrix2cd y = eval_admittance(m, omega_star);
    const double ff = std::real((f.conjugate().cwiseProduct(f)).sum());
    const double fy = std::real((f.conjugate().cwiseProduct(y)).sum());
    const double b = fy / ff;
    if (!(b > 0.0))
        throw ModelError("equivalent-susceptance projection is not positive (b_eq=" +
                         std::to_string(b) + " at omega=" + std::to_string(omega_star) +
                         "); B_eq > 0 hypothesis fails at this frequency");
    BeqEstimate out;
    out.b_eq = b;
    out.fit_error = (b * f - y).norm() / y.norm();
    return out;
}

InverterParamSet parse_inverter_params(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("inverter parameter parse failure: ") + e.what());
    }
    InverterParamSet p;
    try {
        const auto& base = j.at("base");
        const double f_base = base.at("f_base_hz").get<double>();
        p.filter.omega0 = 2.0 * 3.14159265358979323846 * f_base;
        const auto& jf = j.at("filter");
        p.filter.l_f = jf.at("l_f").get<double>();
        p.filter.c_f = jf.at("c_f").get<double>();
        p.filter.l_g = jf.at("l_g").get<double>();
        p.filter.tau = jf.at("tau").get<double>();

        OperatingPoint op;
        if (j.contains("operating_point")) {
            const auto& jo = j.at("operating_point");
            op.p0 = jo.at("p0").get<double>();
            op.q0 = jo.at("q0").get<double>();
            op.u0 = jo.at("u0").get<double>();
        }

        const auto& jl = j.at("gfl");
        p.gfl.cc_kp = jl.at("cc_kp").get<double>();
        p.gfl.cc_ki = jl.at("cc_ki").get<double>();
        p.gfl.k_vf = jl.at("k_vf").get<double>();
        p.gfl.t_vf_s = jl.at("t_vf_s").get<double>();
        p.gfl.pq_kp = jl.at("pq_kp").get<double>();
        p.gfl.pq_ki = jl.at("pq_ki").get<double>();
        p.gfl.pll_kp = jl.at("pll_kp").get<double>();
        p.gfl.pll_ki = jl.at("pll_ki").get<double>();
        p.gfl.op = op;

        const auto& jm = j.at("gfm");
        p.gfm.cc_kp = jm.at("cc_kp").get<double>();
        p.gfm.cc_ki = jm.at("cc_ki").get<double>();
        p.gfm.k_vf = jm.at("k_vf").get<double>();
        p.gfm.t_vf_s = jm.at("t_vf_s").get<double>();
        p.gfm.vc_kp = jm.at("vc_kp").get<double>();
        p.gfm.vc_ki = jm.at("vc_ki").get<double>();
        p.gfm.j_vsg = jm.at("j_vsg").get<double>();
        p.gfm.d_vsg = jm.at("d_vsg").get<double>();
        p.gfm.op = op;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("inverter parameter schema violation: ") + e.what());
    }
    validate(p.filter, p.gfl);
    validate(p.filter, p.gfm);
    return p;
}

InverterParamSet load_inverter_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open inverter parameter file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_inverter_params(ss.str());
}

}  // namespace drp
