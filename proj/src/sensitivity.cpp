#include "drp/sensitivity.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace drp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRefineRelTol = 1e-3;
constexpr double kGolden = 0.6180339887498949;

double sigma_min(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues().minCoeff();
}

Eigen::MatrixXcd kron2(const Eigen::MatrixXd& b, const Eigen::Matrix2cd& f) {
    const Eigen::Index n = b.rows();
    Eigen::MatrixXcd out(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            out.block<2, 2>(2 * i, 2 * j) = b(i, j) * f;
    return out;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& b,
                          const std::vector<Eigen::Index>& rows,
                          const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                b(rows[r], cols[c]);
    return out;
}

bool near_f_pole(double omega, double omega0) {
    return std::abs(std::abs(omega) - omega0) < 1e-6 * omega0;
}

// Golden-section maximization of fn on [lo, hi]; returns (omega, value)
// samples evaluated along the way via the out parameters.
template <typename Fn>
void refine_peak(Fn&& fn, double lo, double hi, std::vector<double>& omegas,
                 std::vector<double>& values) {
    double a = lo, b = hi;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    omegas.push_back(x1);
    values.push_back(f1);
    omegas.push_back(x2);
    values.push_back(f2);
    while ((b - a) > kRefineRelTol * std::abs(0.5 * (a + b))) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = fn(x2);
            omegas.push_back(x2);
            values.push_back(f2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = fn(x1);
            omegas.push_back(x1);
            values.push_back(f1);
        }
    }
}

// Shared sweep driver over an arbitrary sigma_max(omega) evaluator.
template <typename Fn>
SweepResult sweep_impl(Fn&& fn, const GridSpec& grid) {
    SweepResult res;
    res.omegas = make_grid(grid);
    res.sigma_max.reserve(res.omegas.size());
    size_t argmax = 0;
    double best = -1.0;
    for (size_t i = 0; i < res.omegas.size(); ++i) {
        const double v = fn(res.omegas[i]);
        res.sigma_max.push_back(v);
        if (!std::isfinite(v)) res.marginal_omegas.push_back(res.omegas[i]);
        if (v > best) {
            best = v;
            argmax = i;
        }
    }
    res.omega_peak = res.omegas[argmax];
    if (std::isfinite(best) && res.omegas.size() >= 2) {
        const double lo = argmax > 0 ? res.omegas[argmax - 1] : res.omegas[argmax];
        const double hi = argmax + 1 < res.omegas.size() ? res.omegas[argmax + 1]
                                                         : res.omegas[argmax];
        if (hi > lo) {
            refine_peak(fn, lo, hi, res.refined_omegas, res.refined_sigma);
            for (size_t i = 0; i < res.refined_omegas.size(); ++i) {
                if (res.refined_sigma[i] > best) {
                    best = res.refined_sigma[i];
                    res.omega_peak = res.refined_omegas[i];
                }
            }
        }
    }
    res.kappa_p_db = to_db(best);
    return res;
}

}  // namespace

std::vector<double> make_grid(const GridSpec& spec) {
    if (!(spec.f_min_hz > 0.0) || !(spec.f_max_hz > spec.f_min_hz) || spec.points < 2)
        throw NetworkError("invalid frequency grid specification");
    std::vector<double> w(static_cast<size_t>(spec.points));
    const double l0 = std::log10(spec.f_min_hz);
    const double l1 = std::log10(spec.f_max_hz);
    for (int i = 0; i < spec.points; ++i) {
        const double f = std::pow(10.0, l0 + (l1 - l0) * i / (spec.points - 1));
        w[static_cast<size_t>(i)] = 2.0 * kPi * f;
    }
    return w;
}

SystemAssignment::SystemAssignment(GroundedLaplacian b, std::vector<InverterKind> kinds,
                                   AdmittanceModel gfl, AdmittanceModel gfm,
                                   double omega0)
    : b_(std::move(b)),
      kinds_(std::move(kinds)),
      gfl_(std::move(gfl)),
      gfm_(std::move(gfm)),
      omega0_(omega0) {
    check_grounded_laplacian(b_.b);
    if (static_cast<Eigen::Index>(kinds_.size()) != b_.size())
        throw NetworkError("kind list length does not match the network size");
    if (gfl_.kind == InverterKind::Gfm || gfm_.kind == InverterKind::Gfl)
        throw NetworkError("admittance models bound to the wrong slots");
    for (Eigen::Index i = 0; i < b_.size(); ++i) {
        if (kinds_[static_cast<size_t>(i)] == InverterKind::Gfl)
            partition_.gfl_idx.push_back(i);
        else if (kinds_[static_cast<size_t>(i)] == InverterKind::Gfm)
            partition_.gfm_idx.push_back(i);
        else
            throw NetworkError("node kind must be GFL or GFM");
    }
    b_inv_ = b_.b.llt().solve(Eigen::MatrixXd::Identity(b_.size(), b_.size()));
}

Eigen::MatrixXcd open_loop_at(const SystemAssignment& sys, double omega) {
    const Eigen::Index n = sys.n();
    const Eigen::Matrix2cd fi = network_factor_inverse(omega, sys.omega0());
    Eigen::MatrixXcd l = kron2(sys.b_inverse(), fi);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Matrix2cd y = eval_admittance(sys.model_at(j), omega);
        // right-multiplying by blockdiag(Y_j) scales block-columns
        for (Eigen::Index i = 0; i < n; ++i)
            l.block<2, 2>(2 * i, 2 * j) = l.block<2, 2>(2 * i, 2 * j) * y;
    }
    return l;
}

double sensitivity_sigma_max(const SystemAssignment& sys, double omega) {
    Eigen::MatrixXcd m = open_loop_at(sys, omega);
    m.diagonal().array() += 1.0;
    const double smin = sigma_min(m);
    if (smin < kMarginalSigmaMin) return std::numeric_limits<double>::infinity();
    return 1.0 / smin;
}

SweepResult sweep(const SystemAssignment& sys, const GridSpec& grid) {
    return sweep_impl([&](double w) { return sensitivity_sigma_max(sys, w); }, grid);
}

SweepResult sibs_sweep(const SibsConfig& cfg, const GridSpec& grid) {
    if (!(cfg.scr > 0.0)) throw NetworkError("SIBS requires scr > 0");
    auto fn = [&](double w) {
        const Eigen::Matrix2cd l = (1.0 / cfg.scr) *
                                   network_factor_inverse(w, cfg.omega0) *
                                   eval_admittance(cfg.model, w);
        const double smin = sigma_min(Eigen::Matrix2cd(Eigen::Matrix2cd::Identity() + l));
        if (smin < kMarginalSigmaMin) return std::numeric_limits<double>::infinity();
        return 1.0 / smin;
    };
    return sweep_impl(fn, grid);
}

ModalResult modal_kappa(const GroundedLaplacian& b, const AdmittanceModel& model,
                        const GridSpec& grid, double omega0) {
    const auto ed = eig_sym(b.b);
    ModalResult res;
    res.kappa_p_db = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ed.lambdas.size(); ++i) {
        SibsConfig cfg;
        cfg.scr = ed.lambdas(i);
        cfg.model = model;
        cfg.omega0 = omega0;
        res.per_mode.push_back(sibs_sweep(cfg, grid));
        if (res.per_mode.back().kappa_p_db > res.kappa_p_db) {
            res.kappa_p_db = res.per_mode.back().kappa_p_db;
            res.omega_peak = res.per_mode.back().omega_peak;
            res.argmax_mode = static_cast<int>(i);
        }
    }
    const size_t np = res.per_mode.front().sigma_max.size();
    res.combined_sigma.assign(np, 0.0);
    for (const auto& mode : res.per_mode)
        for (size_t k = 0; k < np; ++k)
            res.combined_sigma[k] = std::max(res.combined_sigma[k], mode.sigma_max[k]);
    return res;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd>
hybrid_subsystem_networks(const SystemAssignment& sys, double omega) {
    const auto& p = sys.partition();
    if (near_f_pole(omega, sys.omega0()))
        throw ModelError("subsystem networks need F(jw); omega too close to omega0");
    const Eigen::Matrix2cd f = network_factor(omega, sys.omega0());
    const auto& idx1 = p.gfl_idx;
    const auto& idx2 = p.gfm_idx;
    const auto n1 = static_cast<Eigen::Index>(idx1.size());
    const auto n2 = static_cast<Eigen::Index>(idx2.size());

    const Eigen::MatrixXd b11 = submatrix(sys.laplacian().b, idx1, idx1);
    const Eigen::MatrixXd b12 = submatrix(sys.laplacian().b, idx1, idx2);
    const Eigen::MatrixXd b21 = submatrix(sys.laplacian().b, idx2, idx1);
    const Eigen::MatrixXd b22 = submatrix(sys.laplacian().b, idx2, idx2);

    Eigen::MatrixXcd y_sub1;
    if (n2 == 0) {
        y_sub1 = kron2(b11, f);
    } else {
        const Eigen::Matrix2cd y_gfm = eval_admittance(sys.gfm(), omega);
        Eigen::MatrixXcd inner = kron2(b22, f);
        for (Eigen::Index i = 0; i < n2; ++i)
            inner.block<2, 2>(2 * i, 2 * i) += y_gfm;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(inner);
        if (!lu.isInvertible())
            throw ModelError("singular GFM-side block at omega=" + std::to_string(omega));
        y_sub1 = kron2(b11, f) - kron2(b12, f) * lu.solve(kron2(b21, f));
    }

    Eigen::MatrixXcd y_sub2;
    if (n1 == 0) {
        y_sub2 = kron2(b22, f);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(b11);
        if (!lu.isInvertible())
            throw ModelError("singular GFL-side principal block");
        y_sub2 = kron2(Eigen::MatrixXd(b22 - b21 * lu.solve(b12)), f);
    }
    return {y_sub1, y_sub2};
}

std::vector<double> verify_det_factorization(const SystemAssignment& sys,
                                             const GridSpec& grid) {
    const auto omegas = make_grid(grid);
    const auto& p = sys.partition();
    const auto n1 = static_cast<Eigen::Index>(p.gfl_idx.size());
    const auto n2 = static_cast<Eigen::Index>(p.gfm_idx.size());
    std::vector<double> errs;
    errs.reserve(omegas.size());
    for (double w : omegas) {
        if (near_f_pole(w, sys.omega0())) continue;
        // Eq. 12 ordering Y_G Y_N^{-1}; the determinant does not care.
        const Eigen::Matrix2cd f = network_factor(w, sys.omega0());
        const Eigen::MatrixXcd yn = kron2(sys.laplacian().b, f);
        Eigen::MatrixXcd yg = Eigen::MatrixXcd::Zero(2 * sys.n(), 2 * sys.n());
        for (Eigen::Index i = 0; i < sys.n(); ++i)
            yg.block<2, 2>(2 * i, 2 * i) = eval_admittance(sys.model_at(i), w);
        const Eigen::MatrixXcd l_full =
            yg * yn.fullPivLu().solve(
                     Eigen::MatrixXcd::Identity(2 * sys.n(), 2 * sys.n()));
        const std::complex<double> det_full =
            (Eigen::MatrixXcd::Identity(2 * sys.n(), 2 * sys.n()) + l_full)
                .determinant();

        const auto [y1, y2] = hybrid_subsystem_networks(sys, w);
        const Eigen::Matrix2cd ygfl = eval_admittance(sys.gfl(), w);
        const Eigen::Matrix2cd ygfm = eval_admittance(sys.gfm(), w);
        Eigen::MatrixXcd yg1 = Eigen::MatrixXcd::Zero(2 * n1, 2 * n1);
        for (Eigen::Index i = 0; i < n1; ++i) yg1.block<2, 2>(2 * i, 2 * i) = ygfl;
        Eigen::MatrixXcd yg2 = Eigen::MatrixXcd::Zero(2 * n2, 2 * n2);
        for (Eigen::Index i = 0; i < n2; ++i) yg2.block<2, 2>(2 * i, 2 * i) = ygfm;
        std::complex<double> det1(1.0, 0.0), det2(1.0, 0.0);
        if (n1 > 0)
            det1 = (Eigen::MatrixXcd::Identity(2 * n1, 2 * n1) +
                    yg1 * y1.fullPivLu().solve(
                              Eigen::MatrixXcd::Identity(2 * n1, 2 * n1)))
                       .determinant();
        if (n2 > 0)
            det2 = (Eigen::MatrixXcd::Identity(2 * n2, 2 * n2) +
                    yg2 * y2.fullPivLu().solve(
                              Eigen::MatrixXcd::Identity(2 * n2, 2 * n2)))
                       .determinant();
        errs.push_back(std::abs(det_full - det1 * det2) / std::abs(det_full));
    }
    return errs;
}

namespace {

// sigma_min of I + (Y_N^sub)^{-1} Y_G^sub (Eq. 2 ordering).
double subsystem_sigma_min(const Eigen::MatrixXcd& yn_sub,
                           const Eigen::Matrix2cd& y_model) {
    const Eigen::Index m = yn_sub.rows();
    if (m == 0) return std::numeric_limits<double>::infinity();
    Eigen::MatrixXcd yg = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index i = 0; i < m / 2; ++i) yg.block<2, 2>(2 * i, 2 * i) = y_model;
    const Eigen::MatrixXcd l = yn_sub.fullPivLu().solve(yg);
    return sigma_min(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(m, m) + l));
}

}  // namespace

Remark1Report verify_remark1_equality(const SystemAssignment& sys,
                                      const GridSpec& grid) {
    const auto omegas = make_grid(grid);
    Remark1Report rep;
    double best_direct = 0.0, best_sub = 0.0;
    for (double w : omegas) {
        if (near_f_pole(w, sys.omega0())) continue;
        Eigen::MatrixXcd m = open_loop_at(sys, w);
        m.diagonal().array() += 1.0;
        const double s_direct = sigma_min(m);

        const auto [y1, y2] = hybrid_subsystem_networks(sys, w);
        const double s1 = subsystem_sigma_min(y1, eval_admittance(sys.gfl(), w));
        const double s2 = subsystem_sigma_min(y2, eval_admittance(sys.gfm(), w));
        const double s_sub = std::min(s1, s2);

        rep.max_rel_deviation =
            std::max(rep.max_rel_deviation, std::abs(s_direct - s_sub) / s_direct);
        best_direct = std::max(best_direct, 1.0 / s_direct);
        best_sub = std::max(best_sub, 1.0 / s_sub);
    }
    rep.kappa_direct_db = to_db(best_direct);
    rep.kappa_eq15_db = to_db(best_sub);
    rep.gap_db = rep.kappa_eq15_db - rep.kappa_direct_db;
    return rep;
}

MainInequalityResult verify_main_inequality(const GroundedLaplacian& b,
                                            const AdmittanceModel& gfl,
                                            const AdmittanceModel& gfm,
                                            const GridSpec& grid,
                                            const Partition& hybrid, double omega0) {
    validate(hybrid, b.size());
    const auto n = static_cast<size_t>(b.size());
    std::vector<InverterKind> all_gfl(n, InverterKind::Gfl);
    std::vector<InverterKind> all_gfm(n, InverterKind::Gfm);
    std::vector<InverterKind> mix(n, InverterKind::Gfl);
    for (Eigen::Index i : hybrid.gfm_idx) mix[static_cast<size_t>(i)] = InverterKind::Gfm;

    MainInequalityResult res;
    res.kappa_g1_db = sweep(SystemAssignment(b, all_gfl, gfl, gfm, omega0), grid).kappa_p_db;
    res.kappa_g2_db = sweep(SystemAssignment(b, all_gfm, gfl, gfm, omega0), grid).kappa_p_db;
    res.kappa_g3_db = sweep(SystemAssignment(b, mix, gfl, gfm, omega0), grid).kappa_p_db;
    res.degenerate = hybrid.gfl_idx.empty() || hybrid.gfm_idx.empty();
    res.holds = !res.degenerate &&
                res.kappa_g3_db < std::max(res.kappa_g1_db, res.kappa_g2_db);
    return res;
}

}  // namespace drp
