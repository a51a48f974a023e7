// qphot: run built-in or user scenarios, calibrate a heater, study multi-pair
// contamination and run the acceptance checks.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "acceptance_suite.hpp"
#include "qphot/harness.hpp"
#include "qphot/scenario.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<long long> trials;
    std::optional<std::string> format;

    void apply(qphot::Scenario& s) const {
        if (seed) s.seed = *seed;
        if (out) s.output.directory = *out;
        if (trials) s.trials_per_point = *trials;
        if (format) s.output.format = *format;
    }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "RNG seed (overrides the config)");
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
    cmd->add_option("--trials", o.trials, "Trials per sweep point (overrides the config)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--format", o.format, "Sweep table format")->check(CLI::IsMember({"csv", "json"}));
}

int run_one(qphot::Scenario s, const Overrides& o) {
    o.apply(s);
    const auto res = qphot::run_scenario(s);
    const auto files = qphot::write_outputs(res);
    for (const auto& f : files) fmt::print("wrote {}\n", f.string());
    const auto& a = res.summary["analysis"];
    if (a.contains("error")) fmt::print("{}: analysis failed: {}\n", s.name, a["error"].get<std::string>());
    for (const auto& c : res.summary["checks"]) {
        fmt::print("{}: {} {}\n", s.name, c["passed"].get<bool>() ? "PASS" : "FAIL", c["name"].get<std::string>());
    }
    return res.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrated-optics quantum interference simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a built-in scenario (or 'all'), or a config file given with --config");
    std::string run_name;
    std::string run_config;
    Overrides run_over;
    run->add_option("scenario", run_name, "Built-in scenario name or 'all'");
    run->add_option("--config", run_config, "Scenario config file")->check(CLI::ExistingFile);
    add_overrides(run, run_over);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Fit the heater phase-voltage model and write a model file");
    std::string cal_two, cal_one, cal_config;
    Overrides cal_over;
    cal->add_option("--two-photon", cal_two, "CSV of two-photon coincidences versus voltage")->check(CLI::ExistingFile);
    cal->add_option("--one-photon", cal_one, "CSV of one-photon counts versus voltage")->check(CLI::ExistingFile);
    cal->add_option("--config", cal_config, "Calibration scenario used to synthesise data (default: fig3)")
        ->check(CLI::ExistingFile);
    add_overrides(cal, cal_over);

    // export-scenario
    auto* exp = app.add_subcommand("export-scenario", "Print a built-in scenario config with every field explicit");
    std::string exp_name;
    std::string exp_out;
    exp->add_option("name", exp_name, "Built-in scenario name")->required();
    exp->add_option("--out", exp_out, "Write <out>/<name>.json instead of printing");

    // sweep-contamination
    auto* con = app.add_subcommand("sweep-contamination", "Four-fold fringe contrast versus pair amplitude");
    double con_loss = 0.4, con_max = 0.9;
    int con_points = 10, con_pairs = 3;
    std::string con_out;
    con->add_option("--loss", con_loss, "Photon loss per detector")->check(CLI::Range(0.0, 0.999999));
    con->add_option("--lambda-max", con_max, "Largest pair amplitude")->check(CLI::Range(0.0, 0.999999));
    con->add_option("--points", con_points, "Grid points from 0 to lambda-max")->check(CLI::Range(2, 100000));
    con->add_option("--max-pairs", con_pairs, "Pair-number truncation")->check(CLI::Range(2, 6));
    con->add_option("--out", con_out, "Write <out>/contamination.csv");

    // self-test
    auto* self = app.add_subcommand("self-test", "Run the acceptance checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (!run_config.empty()) {
                if (!run_name.empty()) throw CLI::ValidationError("give either a scenario name or --config");
                return run_one(qphot::load_scenario_file(run_config), run_over);
            }
            if (run_name.empty()) throw CLI::ValidationError("scenario name or --config required");
            if (run_name == "all") {
                int rc = 0;
                for (const auto& n : qphot::builtin_scenario_names()) rc |= run_one(qphot::builtin_scenario(n), run_over);
                return rc;
            }
            return run_one(qphot::builtin_scenario(run_name), run_over);
        }

        if (*cal) {
            qphot::Scenario s = cal_config.empty() ? qphot::builtin_scenario("fig3") : qphot::load_scenario_file(cal_config);
            cal_over.apply(s);
            qphot::CalibrationReport rep;
            if (!cal_two.empty()) {
                std::optional<qphot::FringeData> one;
                if (!cal_one.empty()) one = qphot::read_fringe_csv_file(cal_one, qphot::SettingKind::voltage);
                rep = qphot::run_calibration(qphot::read_fringe_csv_file(cal_two, qphot::SettingKind::voltage), one);
            } else {
                if (!cal_one.empty()) throw CLI::ValidationError("--one-photon needs --two-photon");
                if (s.analysis.kind != qphot::AnalysisKind::calibration) {
                    throw qphot::ConfigError("analysis.kind", "calibrate needs a calibration scenario");
                }
                const auto res = qphot::run_scenario(s);
                for (const auto& f : qphot::write_outputs(res)) fmt::print("wrote {}\n", f.string());
                const auto& a = res.summary["analysis"];
                if (!a.contains("calibration")) {
                    fmt::print(stderr, "calibration failed: {}\n", a.value("error", std::string("unknown")));
                    return 1;
                }
                const auto& c = a["calibration"];
                fmt::print("alpha {} beta {} gamma {} delta {}; reduced chi2 {}; {}\n", c["model"]["alpha"].dump(),
                           c["model"]["beta"].dump(), c["model"]["gamma"].dump(), c["model"]["delta"].dump(),
                           c["reduced_chi2"].dump(), c["note"].get<std::string>());
                return c["converged"].get<bool>() ? 0 : 1;
            }
            const std::filesystem::path dir(s.output.directory);
            std::filesystem::create_directories(dir);
            const auto path = dir / "phase_model.json";
            qphot::write_text_file(path, qphot::calibration_report_json(rep).dump(2) + "\n");
            fmt::print("wrote {}\n", path.string());
            fmt::print("alpha {} beta {} gamma {} delta {}; reduced chi2 {}; {}\n", rep.model.alpha, rep.model.beta,
                       rep.model.gamma, rep.model.delta, rep.fit.reduced_chi2(), rep.note);
            return rep.fit.converged ? 0 : 1;
        }

        if (*exp) {
            const auto text = qphot::serialize_scenario(qphot::builtin_scenario(exp_name));
            if (exp_out.empty()) {
                std::cout << text;
            } else {
                std::filesystem::create_directories(exp_out);
                const auto path = std::filesystem::path(exp_out) / (exp_name + ".json");
                qphot::write_text_file(path, text);
                fmt::print("wrote {}\n", path.string());
            }
            return 0;
        }

        if (*con) {
            qphot::ContaminationSettings cfg;
            cfg.loss = con_loss;
            cfg.max_pairs = con_pairs;
            std::vector<double> lambdas;
            for (int i = 0; i < con_points; ++i) lambdas.push_back(con_max * i / (con_points - 1));
            const auto rows = qphot::run_contamination_sweep(lambdas, cfg);
            const auto text = qphot::contamination_csv(rows, cfg);
            if (con_out.empty()) {
                std::cout << text;
            } else {
                std::filesystem::create_directories(con_out);
                const auto path = std::filesystem::path(con_out) / "contamination.csv";
                qphot::write_text_file(path, text);
                fmt::print("wrote {}\n", path.string());
            }
            bool monotone = true;
            for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].contrast <= rows[i - 1].contrast;
            fmt::print(stderr, "contrast non-increasing in lambda: {}\n", monotone ? "yes" : "NO");
            return monotone ? 0 : 1;
        }

        if (*self) return qphot::acceptance::run_all() == 0 ? 0 : 1;
    } catch (const qphot::ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 2;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
