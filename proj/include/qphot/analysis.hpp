// Fringe fitting, phase-voltage calibration, HOM visibility, the
// standard-quantum-limit contrast test and average state fidelity.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qphot/detection.hpp"
#include "qphot/levmar.hpp"

namespace qphot {

// ---------------------------------------------------------------------------
// Data

enum class SettingKind { voltage, phase, delay, reflectivity };

struct FringePoint {
    double setting = 0.0;
    double counts = 0.0;  // event counts; non-integer only for ideal-probability data
    double error = 0.0;   // one-sigma; <= 0 means unweighted
};

struct FringeData {
    SettingKind kind = SettingKind::phase;
    std::vector<FringePoint> points;

    /// Poissonian points: error = sqrt(counts).
    static FringeData poissonian(SettingKind kind, std::span<const double> settings, std::span<const long long> counts) {
        if (settings.size() != counts.size()) throw std::invalid_argument("FringeData: size mismatch");
        FringeData d{kind, {}};
        for (std::size_t i = 0; i < settings.size(); ++i) {
            if (counts[i] < 0) throw std::invalid_argument("FringeData: negative counts");
            const auto c = static_cast<double>(counts[i]);
            d.points.push_back({settings[i], c, std::sqrt(c)});
        }
        return d;
    }
};

namespace detail {

/// Zero-count Poisson points get unit sigma so their weight stays finite.
inline double sigma_of(const FringePoint& p) { return p.error > 0.0 ? p.error : 1.0; }

inline bool all_weighted(const FringeData& d) {
    return std::all_of(d.points.begin(), d.points.end(), [](const FringePoint& p) { return p.error > 0.0; });
}

/// Weighted linear least squares; returns coefficients, covariance, chi^2.
struct LinearFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;
    double chi2 = 0.0;
};

inline LinearFit weighted_linear_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& sigma) {
    const Eigen::VectorXd w = sigma.cwiseInverse();
    const Eigen::MatrixXd a = w.asDiagonal() * design;
    const Eigen::VectorXd b = w.cwiseProduct(y);
    LinearFit f;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    f.coef = qr.solve(b);
    f.chi2 = (a * f.coef - b).squaredNorm();
    const Eigen::MatrixXd ata = a.transpose() * a;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
    f.cov = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse())
                              : Eigen::MatrixXd::Constant(ata.rows(), ata.cols(), std::numeric_limits<double>::quiet_NaN());
    return f;
}

}  // namespace detail

/// (max - min) / (max + min) of a sampled curve.
inline double fringe_contrast(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("fringe_contrast: no values");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*hi + *lo <= 0.0) return 0.0;
    return (*hi - *lo) / (*hi + *lo);
}

// ---------------------------------------------------------------------------
// Fringes

/// counts = A [1 + C cos(k phi + phi0)]
struct FringeFit {
    double amplitude = 0.0;
    double contrast = 0.0;
    double phase_offset = 0.0;
    int harmonic = 1;
    double amplitude_error = 0.0;
    double contrast_error = 0.0;
    double phase_offset_error = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    bool contrast_clamped = false;

    double period() const { return 2.0 * std::numbers::pi / harmonic; }
    double reduced_chi2() const { return dof > 0 ? chi2 / dof : std::numeric_limits<double>::quiet_NaN(); }
    double evaluate(double phi) const { return amplitude * (1.0 + contrast * std::cos(harmonic * phi + phase_offset)); }
};

inline void check_harmonic(int k) {
    if (k != 1 && k != 2 && k != 4) throw std::invalid_argument("harmonic must be 1, 2 or 4");
}

/// Least-squares sinusoid at fixed harmonic, linear in (A, A C cos phi0, A C sin phi0).
/// Covariance is scaled by chi^2/dof when the data carry no errors.
inline FringeFit fit_fringe(const FringeData& data, int k) {
    check_harmonic(k);
    const auto n = static_cast<Eigen::Index>(data.points.size());
    if (n < 4) throw std::invalid_argument("fit_fringe: need at least 4 points");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : data.points) {
        lo = std::min(lo, p.setting);
        hi = std::max(hi, p.setting);
    }
    const double period = 2.0 * std::numbers::pi / k;
    if (hi - lo < period * (1.0 - 1e-9)) throw std::invalid_argument("fit_fringe: points span less than one period");

    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = data.points[static_cast<std::size_t>(i)];
        x(i, 0) = 1.0;
        x(i, 1) = std::cos(k * p.setting);
        x(i, 2) = std::sin(k * p.setting);
        y(i) = p.counts;
        s(i) = detail::sigma_of(p);
    }
    auto lf = detail::weighted_linear_fit(x, y, s);
    const double a = lf.coef(0), b = lf.coef(1), c = lf.coef(2);
    if (!(a > 0.0)) throw std::invalid_argument("fit_fringe: degenerate data (non-positive mean)");

    FringeFit f;
    f.harmonic = k;
    f.chi2 = lf.chi2;
    f.dof = static_cast<int>(n) - 3;
    Eigen::MatrixXd cov = lf.cov;
    if (!detail::all_weighted(data) && f.dof > 0) cov *= f.chi2 / f.dof;

    const double amp = std::hypot(b, c);
    f.amplitude = a;
    f.contrast = amp / a;
    f.phase_offset = std::atan2(-c, b);
    if (f.contrast > 1.0) {
        f.contrast = 1.0;
        f.contrast_clamped = true;
    }
    f.amplitude_error = std::sqrt(std::max(0.0, cov(0, 0)));
    if (amp > 0.0) {
        Eigen::Vector3d g(-amp / (a * a), b / (amp * a), c / (amp * a));
        f.contrast_error = std::sqrt(std::max(0.0, g.dot(cov * g)));
        Eigen::Vector3d h(0.0, c / (amp * amp), -b / (amp * amp));
        f.phase_offset_error = std::sqrt(std::max(0.0, h.dot(cov * h)));
    }
    return f;
}

// ---------------------------------------------------------------------------
// Phase-voltage calibration

inline constexpr double kCalibratedVoltageMin = 0.0;
inline constexpr double kCalibratedVoltageMax = 5.0;

/// phi(V) = alpha + beta V^2 + gamma V^3 + delta V^4
struct PhaseVoltageModel {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    std::optional<std::array<double, 4>> uncertainties;

    double evaluate(double v) const {
        const double v2 = v * v;
        return alpha + v2 * (beta + v * (gamma + v * delta));
    }
    double derivative(double v) const { return v * (2.0 * beta + v * (3.0 * gamma + 4.0 * delta * v)); }
    std::array<double, 4> coefficients() const { return {alpha, beta, gamma, delta}; }
};

/// Reference heater calibration with one-sigma errors, used for synthetic data.
inline PhaseVoltageModel reference_phase_voltage_model() {
    return {-1.887, 0.157, 0.0045, -0.001, std::array<double, 4>{0.006, 0.005, 0.002, 0.0002}};
}

struct PhaseAtVoltage {
    double phase = 0.0;
    bool extrapolated = false;  // V outside the calibrated [0, 5] V range
};

inline PhaseAtVoltage phase_of_voltage(const PhaseVoltageModel& model, double volts) {
    if (!std::isfinite(volts)) throw std::invalid_argument("phase_of_voltage: non-finite voltage");
    return {model.evaluate(volts), volts < kCalibratedVoltageMin || volts > kCalibratedVoltageMax};
}

/// Which way the fringe swings: +1 for A[1 + C cos(k phi)] (two-photon
/// coincidences), -1 for A[1 - C cos(k phi)] (single photons at output g).
enum class FringeSign { plus = 1, minus = -1 };

struct CalibrationFit {
    PhaseVoltageModel model;
    int harmonic = 2;
    FringeSign sign = FringeSign::plus;
    double amplitude = 0.0;
    double contrast = 0.0;
    double amplitude_error = 0.0;
    double contrast_error = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    int iterations = 0;
    bool converged = false;
    std::string message;
    /// True while phi(V) is only known modulo 2 pi / harmonic.
    bool phase_ambiguous = false;

    double reduced_chi2() const { return dof > 0 ? chi2 / dof : std::numeric_limits<double>::quiet_NaN(); }
};

namespace detail {

struct ScanCandidate {
    double chi2;
    double beta;
    Eigen::Vector3d coef;
};

/// Linear fit of counts ~ a + b cos(k beta V^2) + c sin(k beta V^2) over a
/// grid of beta; returns local minima of chi^2, best first.
inline std::vector<ScanCandidate> scan_quadratic_phase(const FringeData& data, int k) {
    const auto n = static_cast<Eigen::Index>(data.points.size());
    double v2max = 0.0;
    for (const auto& p : data.points) v2max = std::max(v2max, p.setting * p.setting);
    if (!(v2max > 0.0)) throw std::invalid_argument("fit_phase_voltage: voltages must not all be zero");
    const double beta_hi = std::numbers::pi * static_cast<double>(n) / (2.0 * k * v2max);
    constexpr int kGrid = 4000;

    Eigen::VectorXd y(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = data.points[static_cast<std::size_t>(i)].counts;
        s(i) = sigma_of(data.points[static_cast<std::size_t>(i)]);
    }
    std::vector<ScanCandidate> grid;
    grid.reserve(kGrid);
    Eigen::MatrixXd x(n, 3);
    for (int g = 1; g <= kGrid; ++g) {
        const double beta = beta_hi * g / kGrid;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = data.points[static_cast<std::size_t>(i)].setting;
            const double psi = k * beta * v * v;
            x(i, 0) = 1.0;
            x(i, 1) = std::cos(psi);
            x(i, 2) = std::sin(psi);
        }
        auto lf = weighted_linear_fit(x, y, s);
        grid.push_back({lf.chi2, beta, lf.coef});
    }
    std::vector<ScanCandidate> minima;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool left = i == 0 || grid[i].chi2 <= grid[i - 1].chi2;
        const bool right = i + 1 == grid.size() || grid[i].chi2 <= grid[i + 1].chi2;
        if (left && right) minima.push_back(grid[i]);
    }
    std::sort(minima.begin(), minima.end(), [](const auto& a, const auto& b) { return a.chi2 < b.chi2; });
    return minima;
}

/// alpha reduced to [-pi/k, pi/k).
inline double reduce_offset(double alpha, int k) {
    const double p = 2.0 * std::numbers::pi / k;
    double r = std::fmod(alpha + 0.5 * p, p);
    if (r < 0.0) r += p;
    return r - 0.5 * p;
}

}  // namespace detail

/// Weighted nonlinear least squares of counts against
/// A [1 + s C cos(k phi(V))] with the constant phase offset absorbed into alpha.
///
/// Start: a scan over beta with gamma = delta = 0, where each grid point is a
/// linear fit that also yields A, C and alpha; the three best local minima are
/// refined by Levenberg-Marquardt and the lowest chi^2 kept. The result uses
/// beta >= 0 and alpha in [-pi/k, pi/k), which leaves phi(V) determined modulo
/// 2 pi / k (see resolve_phase_branch).
inline CalibrationFit fit_phase_voltage(const FringeData& data, int k = 2, FringeSign sign = FringeSign::plus,
                                        int max_iterations = 500) {
    check_harmonic(k);
    const auto n = static_cast<Eigen::Index>(data.points.size());
    if (n < 12) throw std::invalid_argument("fit_phase_voltage: need at least 12 points");
    double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin;
    for (const auto& p : data.points) {
        if (p.counts < 0.0) throw std::invalid_argument("fit_phase_voltage: negative counts");
        cmin = std::min(cmin, p.counts);
        cmax = std::max(cmax, p.counts);
    }
    if (!(cmax > cmin)) throw std::invalid_argument("fit_phase_voltage: degenerate data (constant counts)");

    const double s_val = static_cast<double>(static_cast<int>(sign));
    auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
        r.resize(n);
        j.resize(n, 6);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& pt = data.points[static_cast<std::size_t>(i)];
            const double v = pt.setting, v2 = v * v;
            const double phi = p(2) + v2 * (p(3) + v * (p(4) + v * p(5)));
            const double cs = std::cos(k * phi), sn = std::sin(k * phi);
            const double sig = detail::sigma_of(pt);
            const double f = p(0) * (1.0 + s_val * p(1) * cs);
            r(i) = (f - pt.counts) / sig;
            const double dphi = -p(0) * s_val * p(1) * sn * k / sig;
            j(i, 0) = (1.0 + s_val * p(1) * cs) / sig;
            j(i, 1) = p(0) * s_val * cs / sig;
            j(i, 2) = dphi;
            j(i, 3) = dphi * v2;
            j(i, 4) = dphi * v2 * v;
            j(i, 5) = dphi * v2 * v2;
        }
    };

    LevMarOptions opt;
    opt.max_iterations = max_iterations;
    Eigen::VectorXd lower = Eigen::VectorXd::Constant(6, -std::numeric_limits<double>::infinity());
    Eigen::VectorXd upper = Eigen::VectorXd::Constant(6, std::numeric_limits<double>::infinity());
    lower(0) = 0.0;
    lower(1) = 0.0;
    upper(1) = 1.0;
    opt.lower = lower;
    opt.upper = upper;

    const auto candidates = detail::scan_quadratic_phase(data, k);
    std::optional<LevMarResult> best;
    for (std::size_t c = 0; c < std::min<std::size_t>(3, candidates.size()); ++c) {
        const auto& cand = candidates[c];
        const double a = cand.coef(0), b = cand.coef(1), cc = cand.coef(2);
        Eigen::VectorXd p0(6);
        p0 << std::max(a, 1e-12), std::clamp(std::hypot(b, cc) / std::max(a, 1e-12), 0.0, 0.99),
            std::atan2(-cc * s_val, b * s_val) / k, cand.beta, 0.0, 0.0;
        auto res = levenberg_marquardt(model, p0, opt);
        if (!best || res.chi2 < best->chi2) best = std::move(res);
    }
    if (!best) throw std::invalid_argument("fit_phase_voltage: frequency scan found no candidate");

    Eigen::VectorXd p = best->params;
    Eigen::MatrixXd cov = best->covariance;
    if (p(3) < 0.0) {
        // cos is even: negating every phase coefficient describes the same counts.
        p.segment(2, 4) *= -1.0;
    }
    p(2) = detail::reduce_offset(p(2), k);

    CalibrationFit fit;
    fit.harmonic = k;
    fit.sign = sign;
    fit.model = {p(2), p(3), p(4), p(5), std::nullopt};
    std::array<double, 4> unc{};
    for (int i = 0; i < 4; ++i) unc[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov(i + 2, i + 2)));
    fit.model.uncertainties = unc;
    fit.amplitude = p(0);
    fit.contrast = p(1);
    fit.amplitude_error = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.contrast_error = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.chi2 = best->chi2;
    fit.dof = static_cast<int>(n) - 6;
    fit.iterations = best->iterations;
    fit.converged = best->converged;
    fit.message = best->message;
    fit.phase_ambiguous = k > 1;
    return fit;
}

struct BranchResolution {
    PhaseVoltageModel model;
    int branch = 0;  // multiples of 2 pi / k added to alpha
    std::vector<double> branch_chi2;
    bool ambiguous = false;
};

/// Picks the offset branch alpha + j 2 pi / k (j = 0..k-1) whose phases best
/// explain a one-photon dataset taken at output g, A[1 - C cos phi] with
/// C in [0, 1]. The chosen alpha is reported in [-pi, pi). Branches within delta-chi^2 < 1 of each other are reported as
/// ambiguous and the default branch j = 0 is kept.
inline BranchResolution resolve_phase_branch(const CalibrationFit& fit, const FringeData& one_photon,
                                             FringeSign one_photon_sign = FringeSign::minus) {
    const auto n = static_cast<Eigen::Index>(one_photon.points.size());
    if (n < 3) throw std::invalid_argument("resolve_phase_branch: need at least 3 one-photon points");
    const int k = fit.harmonic;
    const double s_val = static_cast<double>(static_cast<int>(one_photon_sign));

    Eigen::VectorXd y(n), sg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = one_photon.points[static_cast<std::size_t>(i)].counts;
        sg(i) = detail::sigma_of(one_photon.points[static_cast<std::size_t>(i)]);
    }
    BranchResolution out;
    for (int j = 0; j < k; ++j) {
        PhaseVoltageModel m = fit.model;
        m.alpha += j * 2.0 * std::numbers::pi / k;
        Eigen::MatrixXd x(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = std::cos(m.evaluate(one_photon.points[static_cast<std::size_t>(i)].setting));
        }
        auto lf = detail::weighted_linear_fit(x, y, sg);
        // Swing in the wrong direction means C < 0; the constrained optimum is then C = 0.
        if (lf.coef(1) * s_val < 0.0) lf = detail::weighted_linear_fit(x.leftCols(1), y, sg);
        out.branch_chi2.push_back(lf.chi2);
    }
    const auto best = std::min_element(out.branch_chi2.begin(), out.branch_chi2.end()) - out.branch_chi2.begin();
    for (int j = 0; j < k; ++j) {
        if (j != best && out.branch_chi2[static_cast<std::size_t>(j)] - out.branch_chi2[static_cast<std::size_t>(best)] < 1.0) {
            out.ambiguous = true;
        }
    }
    out.branch = out.ambiguous ? 0 : static_cast<int>(best);
    out.model = fit.model;
    out.model.alpha = detail::reduce_offset(out.model.alpha + out.branch * 2.0 * std::numbers::pi / k, 1);
    return out;
}

// ---------------------------------------------------------------------------
// Hong-Ou-Mandel

/// 2 eta (1 - eta) / (1 - 2 eta + 2 eta^2)
inline double ideal_hom_visibility(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("ideal_hom_visibility: eta outside [0, 1]");
    return 2.0 * eta * (1.0 - eta) / (1.0 - 2.0 * eta + 2.0 * eta * eta);
}

struct HomVisibility {
    double visibility = 0.0;  // (N_max - N_min) / N_max
    double visibility_error = 0.0;
    double baseline = 0.0;    // N_max, fitted far-from-zero-delay level
    double floor = 0.0;       // N_min, fitted dip bottom
    double center = 0.0;
    double width = 0.0;
    bool flagged = false;     // dip not resolved from baseline, or baseline not sampled
    std::string message;
};

/// Fits N(tau) = B [1 - V g((tau - tau0) / w)] to a delay scan, with g the
/// overlap shape (gaussian or sinc^2), and returns V = (N_max - N_min) / N_max.
inline HomVisibility hom_visibility(const FringeData& dip, FilterShape shape = FilterShape::gaussian) {
    std::vector<FringePoint> pts = dip.points;
    if (pts.size() < 5) throw std::invalid_argument("hom_visibility: need at least 5 points");
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.setting < b.setting; });
    const std::size_t edge = std::max<std::size_t>(1, (pts.size() + 4) / 5);
    double base0 = 0.0;
    for (std::size_t i = 0; i < edge; ++i) base0 += pts[i].counts + pts[pts.size() - 1 - i].counts;
    base0 /= 2.0 * static_cast<double>(edge);
    if (!(base0 > 0.0)) throw std::invalid_argument("hom_visibility: baseline has no counts");
    const auto min_it = std::min_element(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.counts < b.counts; });
    const double depth0 = base0 - min_it->counts;

    HomVisibility out;
    out.baseline = base0;
    out.floor = min_it->counts;
    out.center = min_it->setting;
    if (!(depth0 > 1e-12 * base0)) {
        out.visibility = 0.0;
        out.floor = base0;
        out.flagged = true;
        out.message = "no dip below baseline";
        return out;
    }

    const double range = pts.back().setting - pts.front().setting;
    double left = min_it->setting, right = min_it->setting;
    for (const auto& p : pts) {
        if (p.counts <= base0 - 0.5 * depth0) {
            left = std::min(left, p.setting);
            right = std::max(right, p.setting);
        }
    }
    const double hwhm = std::max(0.5 * (right - left), range / (2.0 * static_cast<double>(pts.size())));
    // gaussian: half depth at |x| = w sqrt(2 ln 2 / pi); sinc^2: at |x| ~ 0.443 w
    const double w0 = shape == FilterShape::gaussian ? hwhm / std::sqrt(2.0 * std::numbers::ln2 / std::numbers::pi)
                                                     : hwhm / 0.443;

    auto g = [shape](double x) {
        if (shape == FilterShape::gaussian) return std::exp(-0.5 * std::numbers::pi * x * x);
        if (x == 0.0) return 1.0;
        const double s = std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        return s * s;
    };
    const auto n = static_cast<Eigen::Index>(pts.size());
    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& pt = pts[static_cast<std::size_t>(i)];
            r(i) = (p(0) * (1.0 - p(1) * g((pt.setting - p(2)) / p(3))) - pt.counts) / detail::sigma_of(pt);
        }
    };
    auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
        residual(p, r);
        j.resize(n, 4);
        Eigen::VectorXd rp, rm;
        for (int c = 0; c < 4; ++c) {
            const double h = 1e-6 * std::max(std::abs(p(c)), c == 2 ? range * 1e-3 : 1e-3);
            Eigen::VectorXd q = p;
            q(c) += h;
            residual(q, rp);
            q(c) -= 2.0 * h;
            residual(q, rm);
            j.col(c) = (rp - rm) / (2.0 * h);
        }
    };
    LevMarOptions opt;
    Eigen::VectorXd lower(4), upper(4);
    lower << 0.0, 0.0, pts.front().setting, 1e-9 * std::max(range, 1.0);
    upper << std::numeric_limits<double>::infinity(), 1.0, pts.back().setting, std::numeric_limits<double>::infinity();
    opt.lower = lower;
    opt.upper = upper;
    Eigen::VectorXd p0(4);
    p0 << base0, std::clamp(depth0 / base0, 0.0, 1.0), min_it->setting, w0;
    const auto res = levenberg_marquardt(model, p0, opt);

    const Eigen::VectorXd& p = res.params;
    out.baseline = p(0);
    out.visibility = p(1);
    out.floor = p(0) * (1.0 - p(1));
    out.center = p(2);
    out.width = p(3);
    double var = res.covariance(1, 1);
    const int dof = static_cast<int>(n) - 4;
    if (!detail::all_weighted(dip) && dof > 0) var *= res.chi2 / dof;
    out.visibility_error = std::sqrt(std::max(0.0, var));
    if (!res.converged) {
        out.flagged = true;
        out.message = "fit did not converge: " + res.message;
    } else if (std::min(p(2) - pts.front().setting, pts.back().setting - p(2)) < 2.0 * p(3)) {
        out.flagged = true;
        out.message = "scan does not reach the baseline on both sides of the dip";
    } else if (out.visibility_error > 0.0 && out.visibility < 2.0 * out.visibility_error) {
        out.flagged = true;
        out.message = "dip not resolved from baseline";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrology figures of merit

struct SqlCheck {
    bool beats = false;
    double margin = 0.0;     // C - threshold
    double threshold = 0.0;  // 1 / sqrt(2)
};

/// Fringe contrast needed for an N-photon interference fringe to beat the
/// standard quantum limit, taken here as 1/sqrt(2) for every N.
inline SqlCheck contrast_beats_sql(double contrast, int photon_number) {
    if (!(contrast >= 0.0 && contrast <= 1.0)) throw std::invalid_argument("contrast_beats_sql: contrast outside [0, 1]");
    if (photon_number < 1) throw std::invalid_argument("contrast_beats_sql: photon number must be >= 1");
    SqlCheck c;
    c.threshold = 1.0 / std::numbers::sqrt2;
    c.margin = contrast - c.threshold;
    c.beats = contrast > c.threshold;
    return c;
}

inline constexpr int kFidelityQuadraturePoints = 2001;

namespace detail {

/// Bloch angle of the pure state whose output-g probability is
/// (1 - C cos phi) / 2, carrying the sign of phi.
inline double contrast_state_angle(double contrast, double phi) {
    const double c = std::clamp(contrast * std::cos(phi), -1.0, 1.0);
    return std::copysign(std::acos(c), phi);
}

template <class F>
double trapezoid_over_half_range(F&& f) {
    const double a = -0.5 * std::numbers::pi, b = 0.5 * std::numbers::pi;
    const int n = kFidelityQuadraturePoints;
    const double h = (b - a) / (n - 1);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc += w * f(a + i * h);
    }
    return acc * h / (b - a);
}

}  // namespace detail

/// Mean over phi in [-pi/2, pi/2] of |<psi_ideal(phi)|psi_C(phi)>|^2 where
/// psi_ideal = cos(phi/2)|0> + i sin(phi/2)|1> and psi_C is the pure state
/// with the same relative phase whose probabilities follow the contrast-C
/// fringe. 2001-point trapezoid.
inline double average_squared_overlap(double contrast) {
    if (!(contrast >= 0.0 && contrast <= 1.0)) throw std::invalid_argument("average_squared_overlap: contrast outside [0, 1]");
    return detail::trapezoid_over_half_range([contrast](double phi) {
        const double delta = detail::contrast_state_angle(contrast, phi) - phi;
        const double c = std::cos(0.5 * delta);
        return c * c;
    });
}

/// Average fidelity between ideal and contrast-C output states over
/// phi in [-pi/2, pi/2], with per-phase fidelity (1 + |<psi_ideal|psi_C>|) / 2
/// = cos^2(delta / 4), delta the Bloch-angle error. 2001-point trapezoid.
inline double average_fidelity(double contrast) {
    if (!(contrast >= 0.0 && contrast <= 1.0)) throw std::invalid_argument("average_fidelity: contrast outside [0, 1]");
    return detail::trapezoid_over_half_range([contrast](double phi) {
        const double delta = detail::contrast_state_angle(contrast, phi) - phi;
        const double c = std::cos(0.25 * delta);
        return c * c;
    });
}

}  // namespace qphot
