// Linear-optical circuits: directional couplers and phase shifters acting on
// mode creation operators, their composition, and the lift to Fock space.
//
// Conventions
//   coupler(eta) on modes (a, b):  [[sqrt(1-eta), i sqrt(eta)],
//                                   [i sqrt(eta),  sqrt(1-eta)]]
//   phase(phi) on mode k:          e^{i phi} on k, 1 elsewhere
//   An input creation operator a_i^dag maps to sum_j U(j, i) b_j^dag.
//
// With these conventions the Mach-Zehnder matrix differs from the textbook
// [[s, c], [c, -s]] form only by a global phase, so only magnitudes and output
// probabilities are convention independent.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qphot/fock.hpp"
#include "qphot/permanent.hpp"

namespace qphot {

inline constexpr double kUnitarityTolerance = 1e-10;

/// An m x m unitary acting on mode creation operators. Unitarity is checked
/// on construction.
class ModeUnitary {
public:
    explicit ModeUnitary(Eigen::MatrixXcd matrix, double tol = kUnitarityTolerance)
        : matrix_(std::move(matrix)) {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
            throw std::invalid_argument("ModeUnitary: matrix must be square and non-empty");
        }
        if (!matrix_.allFinite()) throw std::invalid_argument("ModeUnitary: non-finite entry");
        const auto n = matrix_.rows();
        const double dev = (matrix_ * matrix_.adjoint() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
        if (dev > tol) {
            throw std::invalid_argument("ModeUnitary: matrix is not unitary (deviation " + std::to_string(dev) + ")");
        }
    }

    static ModeUnitary identity(std::size_t mode_count) {
        const auto m = static_cast<Eigen::Index>(mode_count);
        return ModeUnitary(Eigen::MatrixXcd::Identity(m, m));
    }

    std::size_t mode_count() const { return static_cast<std::size_t>(matrix_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    Complex operator()(std::size_t out_mode, std::size_t in_mode) const {
        return matrix_(static_cast<Eigen::Index>(out_mode), static_cast<Eigen::Index>(in_mode));
    }

    /// `later * earlier`: apply `earlier` first.
    friend ModeUnitary operator*(const ModeUnitary& later, const ModeUnitary& earlier) {
        if (later.mode_count() != earlier.mode_count()) {
            throw std::invalid_argument("ModeUnitary: mode-count mismatch in product");
        }
        return ModeUnitary(later.matrix_ * earlier.matrix_);
    }

private:
    Eigen::MatrixXcd matrix_;
};

struct Coupler {
    double reflectivity = 0.5;  // cross-coupling probability eta
    std::size_t mode_a = 0;
    std::size_t mode_b = 1;
};

struct PhaseShift {
    double phase = 0.0;  // radians, stored as given
    std::size_t mode = 1;
};

using CircuitElement = std::variant<Coupler, PhaseShift>;

inline ModeUnitary coupler_unitary(double eta, std::size_t mode_a, std::size_t mode_b, std::size_t mode_count) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("coupler: reflectivity outside [0, 1]");
    if (mode_a >= mode_count || mode_b >= mode_count) throw std::invalid_argument("coupler: mode index out of range");
    if (mode_a == mode_b) throw std::invalid_argument("coupler: modes must be distinct");
    const auto m = static_cast<Eigen::Index>(mode_count);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(m, m);
    const double t = std::sqrt(1.0 - eta);
    const Complex r(0.0, std::sqrt(eta));
    const auto a = static_cast<Eigen::Index>(mode_a);
    const auto b = static_cast<Eigen::Index>(mode_b);
    u(a, a) = t;
    u(b, b) = t;
    u(a, b) = r;
    u(b, a) = r;
    return ModeUnitary(std::move(u));
}

inline ModeUnitary phase_unitary(double phi, std::size_t mode, std::size_t mode_count) {
    if (!std::isfinite(phi)) throw std::invalid_argument("phase: non-finite phase");
    if (mode >= mode_count) throw std::invalid_argument("phase: mode index out of range");
    const auto m = static_cast<Eigen::Index>(mode_count);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(m, m);
    const auto k = static_cast<Eigen::Index>(mode);
    u(k, k) = std::polar(1.0, phi);
    return ModeUnitary(std::move(u));
}

inline ModeUnitary element_unitary(const CircuitElement& e, std::size_t mode_count) {
    return std::visit(
        [&](const auto& el) -> ModeUnitary {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, Coupler>) {
                return coupler_unitary(el.reflectivity, el.mode_a, el.mode_b, mode_count);
            } else {
                return phase_unitary(el.phase, el.mode, mode_count);
            }
        },
        e);
}

/// Phase reduced to (-pi, pi], for reporting only.
inline double wrap_phase(double phi) {
    double r = std::remainder(phi, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

/// An ordered element list on a fixed number of modes; the first element acts first.
class Circuit {
public:
    explicit Circuit(std::size_t mode_count) : mode_count_(mode_count) {
        if (mode_count == 0) throw std::invalid_argument("Circuit: mode_count must be >= 1");
    }

    Circuit& add(CircuitElement e) {
        // Building the element's unitary validates its parameters and indices.
        (void)element_unitary(e, mode_count_);
        elements_.push_back(std::move(e));
        return *this;
    }
    Circuit& coupler(double eta, std::size_t a = 0, std::size_t b = 1) { return add(Coupler{eta, a, b}); }
    Circuit& phase(double phi, std::size_t mode = 1) { return add(PhaseShift{phi, mode}); }

    std::size_t mode_count() const { return mode_count_; }
    const std::vector<CircuitElement>& elements() const { return elements_; }

private:
    std::size_t mode_count_;
    std::vector<CircuitElement> elements_;
};

inline ModeUnitary compose(const Circuit& c) {
    ModeUnitary u = ModeUnitary::identity(c.mode_count());
    for (const auto& e : c.elements()) u = element_unitary(e, c.mode_count()) * u;
    return u;
}

/// coupler(1/2), phase(phi) on the lower arm, coupler(1/2).
inline Circuit mz_interferometer(double phi) {
    Circuit c(2);
    c.coupler(0.5).phase(phi, 1).coupler(0.5);
    return c;
}

/// |U(0,0)|^2 of a two-mode unitary. For mz_interferometer(phi) this is
/// sin^2(phi/2), the reflectivity of the equivalent single coupler.
inline double effective_reflectivity(const ModeUnitary& u) {
    if (u.mode_count() != 2) throw std::invalid_argument("effective_reflectivity: two-mode unitary required");
    return std::norm(u(0, 0));
}

/// <out| U_F |in> for basis states: perm(U_{out,in}) / sqrt(prod in! prod out!).
inline Complex transition_amplitude(const ModeUnitary& u, const FockState& in, const FockState& out) {
    if (in.mode_count() != u.mode_count() || out.mode_count() != u.mode_count()) {
        throw std::invalid_argument("transition_amplitude: dimension mismatch");
    }
    if (in.photon_count() != out.photon_count()) return 0.0;
    const auto sub = repeat_rows_cols(u.matrix(), out.occupations(), in.occupations());
    return permanent(sub) / std::sqrt(in.factorial_product() * out.factorial_product());
}

/// Applies the Fock-space representation of `u` to `input`. Every output basis
/// state of each occupied photon-number sector is present in the result.
inline FockVector evolve(const FockVector& input, const ModeUnitary& u) {
    if (input.mode_count() != u.mode_count()) throw std::invalid_argument("evolve: dimension mismatch");
    FockVector out(input.mode_count());
    std::map<int, std::vector<FockState>> bases;
    for (const auto& [in_state, amp] : input.terms()) {
        const int n = in_state.photon_count();
        auto it = bases.find(n);
        if (it == bases.end()) it = bases.emplace(n, enumerate_basis(input.mode_count(), n)).first;
        for (const auto& out_state : it->second) {
            out.add(out_state, amp * transition_amplitude(u, in_state, out_state));
        }
    }
    return out;
}

inline FockVector evolve(const FockVector& input, const Circuit& c) { return evolve(input, compose(c)); }

}  // namespace qphot
