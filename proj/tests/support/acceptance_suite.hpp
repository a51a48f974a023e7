// The ten acceptance criteria, shared by the `acceptance` binary and
// `qphot self-test`. Each check prints one PASS/FAIL line.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "qphot/analysis.hpp"
#include "qphot/circuit.hpp"
#include "qphot/detection.hpp"
#include "qphot/harness.hpp"
#include "qphot/scenario.hpp"

namespace qphot::acceptance {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

namespace detail {

using std::numbers::pi;

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Probability of `out` after `in` goes through `u`, computed by the
/// operator-expansion oracle.
inline double oracle_probability(const Eigen::MatrixXcd& u, const std::vector<int>& in, const std::vector<int>& out) {
    const auto amps = oracle::expand_creation_operators(u, in);
    const auto it = amps.find(out);
    return it == amps.end() ? 0.0 : std::norm(it->second);
}

inline Eigen::MatrixXcd hand_coupler(double eta) {
    const std::complex<double> i(0, 1);
    Eigen::MatrixXcd b(2, 2);
    b << std::sqrt(1 - eta), i * std::sqrt(eta), i * std::sqrt(eta), std::sqrt(1 - eta);
    return b;
}

inline Eigen::MatrixXcd hand_mz(double phi) {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(2, 2);
    p(1, 1) = std::polar(1.0, phi);
    return hand_coupler(0.5) * p * hand_coupler(0.5);
}

inline Outcome noon_generation() {
    const auto out = evolve(FockVector::basis(FockState{1, 1}), coupler_unitary(0.5, 0, 1, 2));
    const double p11 = out.probability(FockState{1, 1});
    const double p20 = out.probability(FockState{2, 0});
    const double p02 = out.probability(FockState{0, 2});
    const auto u = hand_coupler(0.5);
    const double o20 = oracle_probability(u, {1, 1}, {2, 0});
    const bool ok = p11 < 1e-20 && std::abs(p20 - 0.5) <= 1e-12 && std::abs(p02 - 0.5) <= 1e-12 &&
                    std::abs(p20 - o20) <= 1e-12;
    return {ok, fmt::format("|<1,1|out>|^2 = {:.3g}, P(2,0) = {:.15f}, P(0,2) = {:.15f}", p11, p20, p02)};
}

inline Outcome four_photon_weights() {
    const auto out = evolve(FockVector::basis(FockState{2, 2}), coupler_unitary(0.5, 0, 1, 2));
    const double p40 = out.probability(FockState{4, 0});
    const double p04 = out.probability(FockState{0, 4});
    const double p22 = out.probability(FockState{2, 2});
    const auto u = hand_coupler(0.5);
    const double o40 = oracle_probability(u, {2, 2}, {4, 0});
    const double o22 = oracle_probability(u, {2, 2}, {2, 2});
    const bool ok = std::abs(p40 + p04 - 0.75) <= 1e-10 && std::abs(p40 - p04) <= 1e-10 &&
                    std::abs(p22 - 0.25) <= 1e-10 && std::abs(p40 - o40) <= 1e-10 && std::abs(p22 - o22) <= 1e-10;
    return {ok, fmt::format("P(4,0) + P(0,4) = {:.12f} (split {:.12f}/{:.12f}), P(2,2) = {:.12f}", p40 + p04, p40, p04,
                            p22)};
}

/// Counts ~ Poisson(peak * (1 + s C cos(k phi)) / 2) on n points over one full turn.
inline FringeData synth_fringe(double contrast, int k, double s, double peak, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FringeData d{SettingKind::phase, {}};
    for (int i = 0; i < n; ++i) {
        const double phi = -pi + 2 * pi * i / (n - 1);
        const double mean = peak * 0.5 * (1 + s * contrast * std::cos(k * phi));
        const auto c = static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
        d.points.push_back({phi, c, std::sqrt(c)});
    }
    return d;
}

inline Outcome fringe_laws() {
    double worst = 0.0;
    FringeData one{SettingKind::phase, {}}, two{SettingKind::phase, {}}, four{SettingKind::phase, {}};
    const DetectionPattern g{{0, 1}}, gh{{0, 1}, {1, 1}}, p31{{0, 3}, {1, 1}}, p13{{0, 1}, {1, 3}};
    for (int i = 0; i <= 200; ++i) {
        const double phi = -pi + 2 * pi * i / 200;
        const auto u = compose(mz_interferometer(phi));
        const auto hand = hand_mz(phi);
        const double a = outcome_probability(evolve(FockVector::basis(FockState{1, 0}), u), g);
        const double b = outcome_probability(evolve(FockVector::basis(FockState{1, 1}), u), gh);
        const auto out4 = evolve(FockVector::basis(FockState{2, 2}), u);
        const double c31 = outcome_probability(out4, p31), c13 = outcome_probability(out4, p13);
        const double law1 = 0.5 * (1 - std::cos(phi)), law2 = 0.5 * (1 + std::cos(2 * phi));
        const double law4 = 3.0 / 16 * (1 - std::cos(4 * phi));
        for (double e : {a - law1, b - law2, c31 - law4, c13 - law4, c31 + c13 - 3.0 / 8 * (1 - std::cos(4 * phi)),
                         a - oracle_probability(hand, {1, 0}, {1, 0}), c31 - oracle_probability(hand, {2, 2}, {3, 1})}) {
            worst = std::max(worst, std::abs(e));
        }
        one.points.push_back({phi, a, 0.0});
        two.points.push_back({phi, b, 0.0});
        four.points.push_back({phi, c31, 0.0});
    }
    const auto f1 = fit_fringe(one, 1), f2 = fit_fringe(two, 2), f4 = fit_fringe(four, 4);
    const double ideal_dev = std::max({std::abs(f1.contrast - 1), std::abs(f2.contrast - 1), std::abs(f4.contrast - 1)});
    const bool periods = std::abs(f1.period() - 2 * pi) < 1e-15 && std::abs(f2.period() - pi) < 1e-15 &&
                         std::abs(f4.period() - pi / 2) < 1e-15;

    struct Measured {
        double c;
        int k;
        double s;
        double tol;
        double peak;
    };
    // Count levels follow the built-in fringe scenarios.
    const Measured measured[] = {{0.982, 1, -1, 0.003, 20000}, {0.972, 2, +1, 0.004, 4000}, {0.92, 4, -1, 0.04, 750}};
    bool round_trip = true;
    std::string rt;
    std::uint64_t seed = 2024;
    for (const auto& m : measured) {
        const auto f = fit_fringe(synth_fringe(m.c, m.k, m.s, m.peak, 201, seed++), m.k);
        const bool ok = std::abs(f.contrast - m.c) <= m.tol;
        round_trip = round_trip && ok;
        rt += fmt::format(" {}->{:.4f}", m.c, f.contrast);
    }
    const bool ok = worst <= 1e-10 && ideal_dev <= 1e-6 && periods && round_trip;
    return {ok, fmt::format("max law deviation {:.2g}, ideal contrast deviation {:.2g}, round trips{}", worst, ideal_dev,
                            rt)};
}

inline Outcome hom_visibility_law() {
    std::vector<double> etas{0.01};
    for (int i = 1; i <= 19; ++i) etas.push_back(0.05 * i);
    etas.push_back(0.99);
    const DetectionPattern gh{{0, 1}, {1, 1}};
    double worst = 0.0;
    for (double eta : etas) {
        const double v_ideal = 2 * eta * (1 - eta) / (1 - 2 * eta + 2 * eta * eta);
        // The same eta realised by a bare coupler and by the interferometer.
        const double phi = -2 * std::asin(std::sqrt(eta));
        for (const auto& u : {coupler_unitary(eta, 0, 1, 2), compose(mz_interferometer(phi))}) {
            const double p_ind = distinguishable_mixture_probability(u, {1, 1}, gh, 1.0);
            const double p_dis = distinguishable_mixture_probability(u, {1, 1}, gh, 0.0);
            worst = std::max(worst, std::abs((p_dis - p_ind) / p_dis - v_ideal));
        }
    }
    const double eta = effective_reflectivity(compose(mz_interferometer(-0.49)));
    const auto u = compose(mz_interferometer(-0.49));
    const double v049 = 1 - distinguishable_mixture_probability(u, {1, 1}, gh, 1.0) /
                                distinguishable_mixture_probability(u, {1, 1}, gh, 0.0);
    const bool ok = worst <= 1e-9 && std::abs(v049 - 0.129) <= 0.009;
    return {ok, fmt::format("max deviation {:.2g} over {} reflectivities; phi = -0.49: eta = {:.5f}, V = {:.4f} "
                            "(measured 0.129 +- 0.009)",
                            worst, etas.size(), eta, v049)};
}

inline Outcome permanent_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240);
    double worst = 0.0;
    long long pairs = 0;
    for (int t = 0; t < 25; ++t) {
        const int m = 1 + t % 4;
        const auto u = oracle::random_unitary(m, rng);
        const ModeUnitary mu(u);
        for (int n = 0; n <= 4; ++n) {
            for (const auto& in : enumerate_basis(static_cast<std::size_t>(m), n)) {
                const auto amps = oracle::expand_creation_operators(u, in.occupations());
                for (const auto& out : enumerate_basis(static_cast<std::size_t>(m), n)) {
                    const auto it = amps.find(out.occupations());
                    const Complex ref = it == amps.end() ? Complex(0.0) : it->second;
                    worst = std::max(worst, std::abs(transition_amplitude(mu, in, out) - ref));
                    ++pairs;
                }
            }
        }
    }
    const double dt = seconds_since(t0);
    return {worst <= 1e-10 && dt < 10.0,
            fmt::format("{} amplitude pairs, max deviation {:.2g}, {:.2f} s", pairs, worst, dt)};
}

/// Counts ~ Poisson(peak * P(phi(V))) on 50 points over [0, 5] V.
inline FringeData synth_voltage(const PhaseVoltageModel& m, int photons, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FringeData d{SettingKind::voltage, {}};
    for (int i = 0; i < 50; ++i) {
        const double v = 5.0 * i / 49;
        const double phi = m.alpha + m.beta * v * v + m.gamma * v * v * v + m.delta * v * v * v * v;
        const double p = photons == 2 ? std::pow(std::cos(phi), 2) : std::pow(std::sin(phi / 2), 2);
        const auto c = static_cast<double>(std::poisson_distribution<long long>(2000.0 * p + 1e-300)(rng));
        d.points.push_back({v, c, std::sqrt(c)});
    }
    return d;
}

inline Outcome calibration_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    const PhaseVoltageModel truth{-1.887, 0.157, 0.0045, -0.001, std::nullopt};
    int good = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto rep = run_calibration(synth_voltage(truth, 2, 7000 + t), synth_voltage(truth, 1, 9000 + t));
        double acc = 0.0;
        for (int i = 0; i <= 500; ++i) {
            const double v = 5.0 * i / 500;
            acc += std::pow(rep.model.evaluate(v) - truth.evaluate(v), 2);
        }
        const double rms = std::sqrt(acc / 501);
        worst = std::max(worst, rms);
        good += rms <= 0.05 && rep.fit.converged;
    }
    const double dt = seconds_since(t0);
    return {good >= 95 && dt < 30.0,
            fmt::format("{}/100 trials within 0.05 rad RMS (worst {:.4f}), {:.2f} s", good, worst, dt)};
}

inline Outcome fidelity() {
    const double f = average_fidelity(0.982), f1 = average_fidelity(1.0);
    return {std::abs(f - 0.99984) <= 5e-5 && f1 == 1.0,
            fmt::format("F(0.982) = {:.6f}, F(1) = {:.17g}", f, f1)};
}

inline Outcome sql_threshold() {
    const auto a = contrast_beats_sql(0.972, 2), b = contrast_beats_sql(0.92, 4), c = contrast_beats_sql(0.70, 2);
    const bool ok = a.beats && b.beats && !c.beats && std::abs(a.threshold - 1 / std::sqrt(2.0)) < 1e-15;
    return {ok, fmt::format("0.972: {} ({:+.4f}), 0.92: {} ({:+.4f}), 0.70: {} ({:+.4f})", a.beats, a.margin, b.beats,
                            b.margin, c.beats, c.margin)};
}

inline Outcome contamination() {
    std::vector<double> lambdas{0.001};
    for (int i = 1; i <= 9; ++i) lambdas.push_back(0.1 * i);
    ContaminationSettings cfg;
    cfg.loss = 0.4;
    const auto rows = run_contamination_sweep(lambdas, cfg);
    bool monotone = true, bracket = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].contrast > rows[i - 1].contrast) monotone = false;
        if (rows[i].contrast >= 0.80 && rows[i].contrast <= 0.95) bracket = true;
    }
    const double limit = contamination_contrast(0.0, cfg).contrast;
    const bool to_one = std::abs(rows.front().contrast - 1.0) <= 1e-3 && std::abs(limit - 1.0) <= 1e-12;
    std::string table;
    for (const auto& r : rows) table += fmt::format(" {:.3g}:{:.3f}", r.lambda, r.contrast);
    return {monotone && bracket && to_one,
            fmt::format("loss 0.4, lambda:contrast{}; non-increasing {}, limit {}, bracket [0.80, 0.95] {}", table,
                        monotone, to_one, bracket)};
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Outcome determinism() {
    const auto base = std::filesystem::temp_directory_path() /
                      fmt::format("qphot-determinism-{}", std::chrono::steady_clock::now().time_since_epoch().count());
    std::size_t files = 0;
    bool same = true;
    std::string first_diff;
    for (const auto& name : builtin_scenario_names()) {
        std::vector<std::vector<std::filesystem::path>> runs;
        for (int run = 0; run < 2; ++run) {
            auto s = builtin_scenario(name);
            s.output.directory = (base / std::to_string(run)).string();
            runs.push_back(write_outputs(run_scenario(s)));
        }
        if (runs[0].size() != runs[1].size()) same = false;
        for (std::size_t i = 0; i < std::min(runs[0].size(), runs[1].size()); ++i) {
            ++files;
            if (slurp(runs[0][i]) != slurp(runs[1][i])) {
                same = false;
                if (first_diff.empty()) first_diff = runs[0][i].filename().string();
            }
        }
    }
    std::error_code ec;
    std::filesystem::remove_all(base, ec);
    return {same && files > 0, fmt::format("{} built-in scenarios, {} file pairs compared{}",
                                           builtin_scenario_names().size(), files,
                                           same ? ", all byte-identical" : ", first mismatch " + first_diff)};
}

}  // namespace detail

inline std::vector<Criterion> criteria() {
    return {
        {1, "NOON generation", detail::noon_generation},
        {2, "four-photon state weights", detail::four_photon_weights},
        {3, "fringe laws and contrast round trips", detail::fringe_laws},
        {4, "HOM visibility law", detail::hom_visibility_law},
        {5, "permanent against operator expansion", detail::permanent_oracle},
        {6, "calibration round trip", detail::calibration_round_trip},
        {7, "average fidelity", detail::fidelity},
        {8, "SQL threshold", detail::sql_threshold},
        {9, "multi-pair contamination", detail::contamination},
        {10, "determinism", detail::determinism},
    };
}

/// Runs every criterion, printing one line each. Returns the failure count.
inline int run_all(std::FILE* out = stdout) {
    int failures = 0;
    for (const auto& c : criteria()) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.passed;
        fmt::print(out, "AC{:<2} {}  {}: {}\n", c.id, o.passed ? "PASS" : "FAIL", c.title, o.detail);
    }
    fmt::print(out, "{} of {} criteria passed\n", criteria().size() - static_cast<std::size_t>(failures),
               criteria().size());
    return failures;
}

}  // namespace qphot::acceptance
