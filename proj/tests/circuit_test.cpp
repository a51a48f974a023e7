#include "qphot/circuit.hpp"

#include <numbers>
#include <random>

#include "gtest/gtest.h"

#include "oracles.hpp"

using namespace qphot;
using std::numbers::pi;

namespace {

double unitarity_defect(const ModeUnitary& u) {
    const auto n = static_cast<Eigen::Index>(u.mode_count());
    return (u.matrix() * u.matrix().adjoint() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(circuit, coupler_examples) {
    auto out = evolve(FockVector::basis({1, 0}), coupler_unitary(0.5, 0, 1, 2));
    ASSERT_NEAR(std::abs(out.amplitude({1, 0}) - Complex(1 / std::sqrt(2.0), 0)), 0.0, 1e-12);
    ASSERT_NEAR(std::abs(out.amplitude({0, 1}) - Complex(0, 1 / std::sqrt(2.0))), 0.0, 1e-12);

    ASSERT_TRUE(coupler_unitary(0.0, 0, 1, 2).matrix().isApprox(Eigen::MatrixXcd::Identity(2, 2)));
    auto full = coupler_unitary(1.0, 0, 1, 2);
    ASSERT_NEAR(std::abs(full(0, 1)), 1.0, 1e-15);
    ASSERT_NEAR(std::abs(full(1, 0)), 1.0, 1e-15);

    ASSERT_THROW(coupler_unitary(-0.1, 0, 1, 2), std::invalid_argument);
    ASSERT_THROW(coupler_unitary(1.1, 0, 1, 2), std::invalid_argument);
    ASSERT_THROW(coupler_unitary(0.5, 0, 2, 2), std::invalid_argument);
}

TEST(circuit, coupler_embeds_in_larger_space) {
    auto u = coupler_unitary(0.3, 1, 3, 4);
    ASSERT_EQ(u(0, 0), Complex(1.0));
    ASSERT_EQ(u(2, 2), Complex(1.0));
    ASSERT_NEAR(std::norm(u(3, 1)), 0.3, 1e-15);
}

TEST(circuit, phase_examples) {
    ASSERT_TRUE(phase_unitary(0.0, 1, 2).matrix().isApprox(Eigen::MatrixXcd::Identity(2, 2)));
    const double phi = 0.731;
    auto one = evolve(FockVector::basis({0, 1}), phase_unitary(phi, 1, 2));
    ASSERT_NEAR(std::abs(one.amplitude({0, 1}) - std::polar(1.0, phi)), 0.0, 1e-12);
    auto two = evolve(FockVector::basis({0, 2}), phase_unitary(phi, 1, 2));
    ASSERT_NEAR(std::abs(two.amplitude({0, 2}) - std::polar(1.0, 2 * phi)), 0.0, 1e-12);
    ASSERT_THROW(phase_unitary(0.1, 2, 2), std::invalid_argument);
    ASSERT_THROW(phase_unitary(std::nan(""), 0, 2), std::invalid_argument);
}

TEST(circuit, non_unitary_rejected) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(2, 2) * 1.01;
    ASSERT_THROW(ModeUnitary{m}, std::invalid_argument);
    ASSERT_THROW(Circuit(2).coupler(0.5, 0, 5), std::invalid_argument);
}

TEST(circuit, compose_examples) {
    ASSERT_TRUE(compose(Circuit(3)).matrix().isApprox(Eigen::MatrixXcd::Identity(3, 3)));
    for (double phi : {-2.0, -0.49, 0.3, 1.1, 2.9}) {
        auto u = compose(mz_interferometer(phi));
        ASSERT_NEAR(std::norm(u(0, 0)), std::pow(std::sin(phi / 2), 2), 1e-12);
        ASSERT_NEAR(std::norm(u(0, 1)), std::pow(std::cos(phi / 2), 2), 1e-12);
    }
    ASSERT_NEAR(effective_reflectivity(compose(mz_interferometer(pi))), 1.0, 1e-12);
    ASSERT_NEAR(effective_reflectivity(compose(mz_interferometer(0.0))), 0.0, 1e-12);
    ASSERT_NEAR(effective_reflectivity(compose(mz_interferometer(pi / 2))), 0.5, 1e-12);
}

TEST(circuit, compose_order_first_element_acts_first) {
    Circuit c(2);
    c.phase(0.4, 1).coupler(0.2);
    const Eigen::MatrixXcd expected = coupler_unitary(0.2, 0, 1, 2).matrix() * phase_unitary(0.4, 1, 2).matrix();
    ASSERT_TRUE(compose(c).matrix().isApprox(expected, 1e-14));
}

TEST(circuit, mz_matches_textbook_matrix_up_to_global_phase) {
    for (double phi : {-1.3, 0.2, 2.2}) {
        auto u = compose(mz_interferometer(phi)).matrix();
        Eigen::Matrix2cd ref;
        ref << std::sin(phi / 2), -std::cos(phi / 2), -std::cos(phi / 2), -std::sin(phi / 2);
        const Complex g = Complex(0, -1) * std::polar(1.0, phi / 2);
        ASSERT_TRUE(u.isApprox(g * ref, 1e-12));
    }
}

TEST(circuit, compose_is_unitary_over_parameter_grid) {
    for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
            Circuit c(3);
            c.coupler(i / 20.0, 0, 1).phase(-pi + j * 0.3, 1).coupler(1 - i / 20.0, 1, 2).phase(j * 0.1, 2);
            ASSERT_LE(unitarity_defect(compose(c)), 1e-10);
        }
    }
}

TEST(circuit, effective_reflectivity_law_on_grid) {
    for (int i = 0; i <= 100; ++i) {
        const double phi = -pi + 2 * pi * i / 100;
        ASSERT_NEAR(effective_reflectivity(compose(mz_interferometer(phi))), std::pow(std::sin(phi / 2), 2), 1e-12);
    }
}

TEST(circuit, hong_ou_mandel_noon_state) {
    auto out = evolve(FockVector::basis({1, 1}), coupler_unitary(0.5, 0, 1, 2));
    ASSERT_LT(out.probability({1, 1}), 1e-20);
    ASSERT_NEAR(out.probability({2, 0}), 0.5, 1e-12);
    ASSERT_NEAR(out.probability({0, 2}), 0.5, 1e-12);
}

TEST(circuit, four_photon_state_after_first_coupler) {
    auto out = evolve(FockVector::basis({2, 2}), coupler_unitary(0.5, 0, 1, 2));
    ASSERT_NEAR(out.probability({4, 0}), 0.375, 1e-12);
    ASSERT_NEAR(out.probability({0, 4}), 0.375, 1e-12);
    ASSERT_NEAR(out.probability({2, 2}), 0.25, 1e-12);
    ASSERT_LT(out.probability({3, 1}) + out.probability({1, 3}), 1e-24);
}

TEST(circuit, middle_term_never_reaches_three_one) {
    // |2,2> alone through a balanced coupler has no |3,1> or |1,3> component,
    // so those outputs of the interferometer come only from the |4,0>, |0,4> part.
    for (double phi : {0.0, 0.3, 1.7}) {
        auto mid = evolve(FockVector::basis({2, 2}), phase_unitary(phi, 1, 2));
        auto out = evolve(mid, coupler_unitary(0.5, 0, 1, 2));
        ASSERT_LT(std::abs(out.amplitude({3, 1})), 1e-12);
        ASSERT_LT(std::abs(out.amplitude({1, 3})), 1e-12);
    }
}

TEST(circuit, identity_evolution) {
    auto out = evolve(FockVector::basis({1, 0}), ModeUnitary::identity(2));
    ASSERT_NEAR(std::abs(out.amplitude({1, 0}) - 1.0), 0.0, 1e-15);
    ASSERT_NEAR(out.probability({0, 1}), 0.0, 1e-30);
    ASSERT_THROW(evolve(FockVector::basis({1, 0, 0}), ModeUnitary::identity(2)), std::invalid_argument);
}

TEST(circuit, evolve_conserves_photon_number_and_norm) {
    std::mt19937_64 rng(5);
    for (int m = 1; m <= 4; ++m) {
        ModeUnitary u(oracle::random_unitary(m, rng));
        FockVector in(static_cast<std::size_t>(m));
        in.add(enumerate_basis(static_cast<std::size_t>(m), 3).front(), Complex(0.6, 0.0));
        in.add(enumerate_basis(static_cast<std::size_t>(m), 3).back(), Complex(0.0, 0.8));
        auto out = evolve(in, u);
        ASSERT_NEAR(out.norm_squared(), in.norm_squared(), 1e-10);
        for (const auto& [s, c] : out.terms()) ASSERT_EQ(s.photon_count(), 3);
    }
}

TEST(circuit, permanent_lift_matches_operator_expansion) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        for (int m = 1; m <= 4; ++m) {
            const Eigen::MatrixXcd raw = oracle::random_unitary(m, rng);
            ModeUnitary u(raw);
            for (int n = 0; n <= 4; ++n) {
                for (const auto& s : enumerate_basis(static_cast<std::size_t>(m), n)) {
                    auto ref = oracle::expand_creation_operators(raw, s.occupations());
                    auto got = evolve(FockVector::basis(s), u);
                    for (const auto& t : enumerate_basis(static_cast<std::size_t>(m), n)) {
                        ASSERT_NEAR(std::abs(got.amplitude(t) - ref[t.occupations()]), 0.0, 1e-10);
                    }
                }
            }
        }
    }
}
