// Scenario runner: sweeps, sampled counts, fits, calibration and the
// multi-pair contamination study, plus the CSV/JSON files they exchange.
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "qphot/analysis.hpp"
#include "qphot/circuit.hpp"
#include "qphot/detection.hpp"
#include "qphot/scenario.hpp"
#include "qphot/source.hpp"

namespace qphot {

inline constexpr const char* kSweepHeader = "# qphot-sweep v1";
inline constexpr const char* kVisibilityHeader = "# qphot-visibility v1";
inline constexpr const char* kContaminationHeader = "# qphot-contamination v1";
inline constexpr const char* kSummarySchema = "qphot-summary/1";
inline constexpr double kLawTolerance = 1e-10;

struct SweepRow {
    double setting = 0.0;
    double ideal_probability = 0.0;
    long long counts = 0;
    double poisson_error = 0.0;
};

struct VisibilityRow {
    double phi = 0.0;
    double eta = 0.0;
    double visibility_ideal = 0.0;
    double visibility_fit = 0.0;
    double error = 0.0;
    bool flagged = false;
};

struct ScenarioResult {
    Scenario scenario;
    std::vector<SweepRow> rows;
    std::vector<VisibilityRow> visibility;  // hom_vs_phase only
    std::optional<PhaseVoltageModel> calibrated_model;
    ojson summary;
    bool passed = true;
};

/// Formats a double so that it reads back bit for bit.
inline std::string format_number(double x) { return fmt::format("{:.17g}", x); }

// ---------------------------------------------------------------------------
// Probabilities at a sweep point

namespace detail {

inline Circuit build_circuit(const CircuitSpec& spec, double swept) {
    Circuit c(spec.modes);
    for (const auto& el : spec.elements) {
        const double v = el.value.value_or(swept);
        if (el.type == ElementSpec::Type::coupler) c.coupler(v, el.mode_a, el.mode_b);
        else c.phase(v, el.mode_a);
    }
    return c;
}

inline FockVector build_input(const InputSpec& in) {
    if (in.kind == InputSpec::Kind::fock) return FockVector::basis(FockState(in.occupations));
    return spdc_state(SpdcSource{in.pair_amplitude, in.max_pairs, {}});
}

}  // namespace detail

/// Everything needed to turn a sweep setting into an event probability.
class SweepModel {
public:
    explicit SweepModel(const Scenario& s) : s_(s), input_(detail::build_input(s.input)) {
        pattern_ = s.detection.detection_pattern();
        detector_ = s.detection.detector();
        if (s.sweep.axis == SweepAxis::voltage) {
            model_ = s.calibration.model_file ? load_phase_model_file(*s.calibration.model_file) : *s.calibration.model;
        }
    }

    /// Phase applied by the swept elements (voltage sweeps go through the model).
    double phase_at(double setting) const {
        if (s_.sweep.axis == SweepAxis::voltage) return phase_of_voltage(model_, setting).phase;
        return setting;
    }

    double probability(double setting) const {
        switch (s_.sweep.axis) {
            case SweepAxis::delay: {
                const auto u = compose(detail::build_circuit(s_.circuit, 0.0));
                const double x = overlap(s_.detection.filter, setting);
                return mixture(u, x);
            }
            case SweepAxis::reflectivity: return probability_for(detail::build_circuit(s_.circuit, setting));
            case SweepAxis::phase:
            case SweepAxis::voltage: return probability_for(detail::build_circuit(s_.circuit, phase_at(setting)));
        }
        return 0.0;
    }

    /// Delay scan of a two-photon dip through `c` at the given delays.
    std::vector<double> dip(const Circuit& c, const std::vector<double>& delays) const {
        const auto u = compose(c);
        std::vector<double> p;
        for (double tau : delays) p.push_back(mixture(u, overlap(s_.detection.filter, tau)));
        return p;
    }

    const PhaseVoltageModel& phase_model() const { return model_; }

private:
    double probability_for(const Circuit& c) const {
        if (s_.detection.overlap < 1.0) return mixture(compose(c), s_.detection.overlap);
        const auto out = evolve(input_, c);
        if (s_.detection.loss_model == LossModel::thinning) return detected_probability_thinned(out, pattern_, detector_);
        return detected_probability_scaled(std::clamp(outcome_probability(out, pattern_), 0.0, 1.0), pattern_, detector_);
    }

    double mixture(const ModeUnitary& u, double x) const {
        const double p = distinguishable_mixture_probability(u, FockState(s_.input.occupations), pattern_, x);
        return detected_probability_scaled(std::clamp(p, 0.0, 1.0), pattern_, detector_);
    }

    const Scenario& s_;
    FockVector input_;
    DetectionPattern pattern_;
    DetectorModel detector_;
    PhaseVoltageModel model_;
};

/// Ideal probability, sampled counts and Poisson error for every sweep point.
/// Point i draws from point_rng(seed, i) only.
inline std::vector<SweepRow> simulate_sweep(const Scenario& s) {
    const SweepModel model(s);
    std::vector<SweepRow> rows;
    const auto settings = s.sweep.values();
    for (std::size_t i = 0; i < settings.size(); ++i) {
        SweepRow r;
        r.setting = settings[i];
        r.ideal_probability = model.probability(settings[i]);
        auto rng = point_rng(s.seed, i);
        r.counts = sample_counts(r.ideal_probability, s.trials_per_point, rng);
        r.poisson_error = std::sqrt(static_cast<double>(r.counts));
        rows.push_back(r);
    }
    return rows;
}

inline FringeData to_fringe_data(const std::vector<SweepRow>& rows, SettingKind kind) {
    FringeData d{kind, {}};
    for (const auto& r : rows) d.points.push_back({r.setting, static_cast<double>(r.counts), r.poisson_error});
    return d;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationReport {
    CalibrationFit fit;
    std::optional<BranchResolution> branch;
    PhaseVoltageModel model;   // after branch resolution when one-photon data are given
    bool modulo_pi_only = true;  // phase known modulo 2 pi / k only
    std::string note;
};

/// Fits the two-photon voltage fringe and, given one-photon data, picks the
/// offset branch. Without one-photon data the model is reported modulo pi
/// with the ambiguity flag set; an inconclusive comparison keeps branch 0.
inline CalibrationReport run_calibration(const FringeData& two_photon, const std::optional<FringeData>& one_photon,
                                         int harmonic = 2, FringeSign sign = FringeSign::plus) {
    CalibrationReport rep;
    rep.fit = fit_phase_voltage(two_photon, harmonic, sign);
    rep.model = rep.fit.model;
    if (harmonic == 1) {
        rep.modulo_pi_only = false;
        rep.note = "single-photon fit: phase known modulo 2 pi";
    } else if (!one_photon) {
        rep.note = "no one-photon data: offset known modulo 2 pi / k only";
    } else {
        rep.branch = resolve_phase_branch(rep.fit, *one_photon);
        rep.model = rep.branch->model;
        rep.model.uncertainties = rep.fit.model.uncertainties;
        rep.modulo_pi_only = rep.branch->ambiguous;
        rep.note = rep.branch->ambiguous ? "one-photon data do not separate the branches; kept branch 0"
                                         : "branch fixed by one-photon data";
    }
    if (!rep.fit.converged) rep.note += "; fit did not converge: " + rep.fit.message;
    return rep;
}

inline ojson calibration_report_json(const CalibrationReport& rep) {
    ojson j;
    j["schema"] = kPhaseModelSchema;
    j["model"] = phase_model_to_json(rep.model);
    j["harmonic"] = rep.fit.harmonic;
    j["ambiguous"] = rep.modulo_pi_only;
    j["branch"] = rep.branch ? rep.branch->branch : 0;
    if (rep.branch) j["branch_chi2"] = rep.branch->branch_chi2;
    j["amplitude"] = rep.fit.amplitude;
    j["contrast"] = rep.fit.contrast;
    j["chi2"] = rep.fit.chi2;
    j["dof"] = rep.fit.dof;
    j["reduced_chi2"] = rep.fit.reduced_chi2();
    j["iterations"] = rep.fit.iterations;
    j["converged"] = rep.fit.converged;
    j["message"] = rep.fit.message;
    j["note"] = rep.note;
    return j;
}

// ---------------------------------------------------------------------------
// Multi-pair contamination

struct ContaminationSettings {
    int max_pairs = 3;
    double loss = 0.4;         // per-detector photon loss, efficiency = 1 - loss
    int phase_points = 721;    // grid over [-pi, pi]
    DetectionPattern pattern{{0, 3}, {1, 1}};
    std::map<std::size_t, CascadeTree> cascades{{0, CascadeTree::two_level()}};
};

struct ContaminationRow {
    double lambda = 0.0;
    double contrast = 0.0;
    double max_probability = 0.0;
    double min_probability = 0.0;
};

/// Four-fold fringe contrast (max - min)/(max + min) of the exact detection
/// probability over phi for the pair-source input, with binomial thinning and
/// click detectors. lambda = 0 is taken as its limit: the |2,2> term alone.
inline ContaminationRow contamination_contrast(double lambda, const ContaminationSettings& cfg) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("contamination_contrast: lambda outside [0, 1)");
    if (!(cfg.loss >= 0.0 && cfg.loss < 1.0)) throw std::invalid_argument("contamination_contrast: loss outside [0, 1)");
    if (cfg.phase_points < 3) throw std::invalid_argument("contamination_contrast: need at least 3 phase points");
    const SpdcSource src{lambda, cfg.max_pairs, {}};
    const FockVector input = lambda == 0.0 ? post_selected_input(src, 2) : spdc_state(src);
    DetectorModel det;
    det.efficiency = 1.0 - cfg.loss;
    det.number_resolving = false;
    det.cascades = cfg.cascades;
    ContaminationRow row{lambda, 0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (int i = 0; i < cfg.phase_points; ++i) {
        const double phi = -std::numbers::pi + 2.0 * std::numbers::pi * i / (cfg.phase_points - 1);
        const double p = detected_probability_thinned(evolve(input, mz_interferometer(phi)), cfg.pattern, det);
        row.max_probability = std::max(row.max_probability, p);
        row.min_probability = std::min(row.min_probability, p);
    }
    const double sum = row.max_probability + row.min_probability;
    row.contrast = sum > 0.0 ? (row.max_probability - row.min_probability) / sum : 0.0;
    return row;
}

inline std::vector<ContaminationRow> run_contamination_sweep(const std::vector<double>& lambdas,
                                                             const ContaminationSettings& cfg = {}) {
    std::vector<ContaminationRow> out;
    for (double l : lambdas) out.push_back(contamination_contrast(l, cfg));
    return out;
}

inline std::string contamination_csv(const std::vector<ContaminationRow>& rows, const ContaminationSettings& cfg) {
    std::string s = std::string(kContaminationHeader) + "\n";
    s += fmt::format("# loss: {}\n# max_pairs: {}\n", format_number(cfg.loss), cfg.max_pairs);
    s += "lambda,contrast,max_probability,min_probability\n";
    for (const auto& r : rows) {
        s += fmt::format("{},{},{},{}\n", format_number(r.lambda), format_number(r.contrast),
                         format_number(r.max_probability), format_number(r.min_probability));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Running a scenario

namespace detail {

inline ojson fringe_json(const FringeFit& f) {
    ojson j;
    j["harmonic"] = f.harmonic;
    j["period"] = f.period();
    j["amplitude"] = f.amplitude;
    j["amplitude_error"] = f.amplitude_error;
    j["contrast"] = f.contrast;
    j["contrast_error"] = f.contrast_error;
    j["contrast_clamped"] = f.contrast_clamped;
    j["phase_offset"] = f.phase_offset;
    j["phase_offset_error"] = f.phase_offset_error;
    j["chi2"] = f.chi2;
    j["dof"] = f.dof;
    j["reduced_chi2"] = f.reduced_chi2();
    return j;
}

inline ojson hom_json(const HomVisibility& h) {
    ojson j;
    j["visibility"] = h.visibility;
    j["visibility_error"] = h.visibility_error;
    j["baseline"] = h.baseline;
    j["floor"] = h.floor;
    j["center"] = h.center;
    j["width"] = h.width;
    j["flagged"] = h.flagged;
    j["message"] = h.message;
    return j;
}

/// Ideal HOM visibility of the circuit at delay 0 for the scenario's pattern.
inline double ideal_dip_visibility(const SweepModel& m, const Circuit& c) {
    const auto far = m.dip(c, {1e12});
    const auto centre = m.dip(c, {0.0});
    return far[0] > 0.0 ? (far[0] - centre[0]) / far[0] : 0.0;
}

}  // namespace detail

/// Runs every sweep point, samples counts, applies the configured analysis and
/// collects checks. Fit failures are reported in the summary; only closed-form
/// law mismatches fail the run.
inline ScenarioResult run_scenario(const Scenario& s) {
    ScenarioResult res;
    res.scenario = s;
    const SweepModel model(s);
    res.rows = simulate_sweep(s);

    ojson summary;
    summary["schema"] = kSummarySchema;
    summary["scenario"] = s.name;
    summary["seed"] = s.seed;
    summary["rng"] = kRngName;
    summary["trials_per_point"] = s.trials_per_point;
    summary["points"] = res.rows.size();
    ojson checks = ojson::array();
    ojson warnings = ojson::array();

    if (s.sweep.axis == SweepAxis::voltage) {
        for (const auto& r : res.rows) {
            if (phase_of_voltage(model.phase_model(), r.setting).extrapolated) {
                warnings.push_back(fmt::format("voltage {} outside the calibrated range", format_number(r.setting)));
            }
        }
    }

    if (s.analysis.law != ExpectedLaw::none) {
        double worst = 0.0;
        for (const auto& r : res.rows) {
            const double law = expected_law_probability(s.analysis.law, model.phase_at(r.setting));
            worst = std::max(worst, std::abs(r.ideal_probability - law));
        }
        const bool ok = worst <= kLawTolerance;
        checks.push_back({{"name", std::string("ideal_law:") + enum_name(s.analysis.law)},
                          {"passed", ok},
                          {"max_deviation", worst},
                          {"tolerance", kLawTolerance}});
        res.passed = res.passed && ok;
    }

    ojson analysis;
    analysis["kind"] = enum_name(s.analysis.kind);
    try {
        switch (s.analysis.kind) {
            case AnalysisKind::none: break;
            case AnalysisKind::fringe: {
                FringeData d = to_fringe_data(res.rows, SettingKind::phase);
                for (auto& p : d.points) p.setting = model.phase_at(p.setting);
                const auto f = fit_fringe(d, s.analysis.harmonic);
                analysis["fit"] = detail::fringe_json(f);
                const auto sql = contrast_beats_sql(f.contrast, s.analysis.harmonic);
                analysis["beats_sql"] = sql.beats;
                analysis["sql_threshold"] = sql.threshold;
                analysis["sql_margin"] = sql.margin;
                break;
            }
            case AnalysisKind::calibration: {
                std::optional<FringeData> one;
                if (s.analysis.one_photon_companion) {
                    Scenario c = s;
                    c.name = s.name + "-one-photon";
                    c.input.occupations.assign(s.circuit.modes, 0);
                    c.input.occupations[0] = 1;
                    c.detection.pattern = {{0, 1}};
                    c.seed = s.seed + 1;
                    one = to_fringe_data(simulate_sweep(c), SettingKind::voltage);
                }
                const auto rep = run_calibration(to_fringe_data(res.rows, SettingKind::voltage), one,
                                                 s.analysis.harmonic, s.analysis.sign);
                analysis["calibration"] = calibration_report_json(rep);
                double acc = 0.0;
                for (const auto& r : res.rows) acc += std::pow(rep.model.evaluate(r.setting) - model.phase_at(r.setting), 2);
                analysis["rms_phase_error_vs_generator"] = std::sqrt(acc / static_cast<double>(res.rows.size()));
                res.calibrated_model = rep.model;
                break;
            }
            case AnalysisKind::hom: {
                const auto h = hom_visibility(to_fringe_data(res.rows, SettingKind::delay), s.detection.filter.shape);
                analysis["fit"] = detail::hom_json(h);
                const auto c = detail::build_circuit(s.circuit, 0.0);
                analysis["eta"] = effective_reflectivity(compose(c));
                analysis["visibility_ideal"] = detail::ideal_dip_visibility(model, c);
                break;
            }
            case AnalysisKind::hom_vs_phase: {
                const auto delays = s.analysis.dip.values();
                double worst = 0.0;
                int flagged = 0;
                for (std::size_t i = 0; i < res.rows.size(); ++i) {
                    const double phi = res.rows[i].setting;
                    const auto c = detail::build_circuit(s.circuit, phi);
                    const auto p = model.dip(c, delays);
                    FringeData dip{SettingKind::delay, {}};
                    for (std::size_t j = 0; j < delays.size(); ++j) {
                        auto rng = point_rng(s.seed, res.rows.size() + i * delays.size() + j);
                        const auto n = sample_counts(p[j], s.trials_per_point, rng);
                        dip.points.push_back({delays[j], static_cast<double>(n), std::sqrt(static_cast<double>(n))});
                    }
                    VisibilityRow v;
                    v.phi = phi;
                    v.eta = effective_reflectivity(compose(c));
                    v.visibility_ideal = detail::ideal_dip_visibility(model, c);
                    const auto h = hom_visibility(dip, s.detection.filter.shape);
                    v.visibility_fit = h.visibility;
                    v.error = h.visibility_error;
                    v.flagged = h.flagged;
                    flagged += h.flagged;
                    worst = std::max(worst, std::abs(v.visibility_fit - v.visibility_ideal));
                    res.visibility.push_back(v);
                }
                analysis["dips"] = res.visibility.size();
                analysis["flagged_dips"] = flagged;
                analysis["max_abs_visibility_deviation"] = worst;
                break;
            }
        }
    } catch (const std::exception& e) {
        analysis["error"] = e.what();
    }
    summary["analysis"] = analysis;
    summary["checks"] = checks;
    summary["warnings"] = warnings;
    summary["passed"] = res.passed;
    res.summary = summary;
    return res;
}

// ---------------------------------------------------------------------------
// Files

inline std::string sweep_csv(const ScenarioResult& r) {
    std::string s = std::string(kSweepHeader) + "\n";
    s += fmt::format("# scenario: {}\n# seed: {}\n# rng: {}\n# axis: {}\n", r.scenario.name, r.scenario.seed, kRngName,
                     enum_name(r.scenario.sweep.axis));
    s += "setting,ideal_probability,counts,poisson_error\n";
    for (const auto& row : r.rows) {
        s += fmt::format("{},{},{},{}\n", format_number(row.setting), format_number(row.ideal_probability), row.counts,
                         format_number(row.poisson_error));
    }
    return s;
}

inline std::string sweep_json(const ScenarioResult& r) {
    ojson j;
    j["schema"] = "qphot-sweep/1";
    j["scenario"] = r.scenario.name;
    j["seed"] = r.scenario.seed;
    j["rng"] = kRngName;
    j["axis"] = enum_name(r.scenario.sweep.axis);
    j["columns"] = {"setting", "ideal_probability", "counts", "poisson_error"};
    j["rows"] = ojson::array();
    for (const auto& row : r.rows) j["rows"].push_back({row.setting, row.ideal_probability, row.counts, row.poisson_error});
    return j.dump(2) + "\n";
}

inline std::string visibility_csv(const ScenarioResult& r) {
    std::string s = std::string(kVisibilityHeader) + "\n";
    s += fmt::format("# scenario: {}\n# seed: {}\n# rng: {}\n", r.scenario.name, r.scenario.seed, kRngName);
    s += "phi,eta,visibility_ideal,visibility_fit,error,flagged\n";
    for (const auto& v : r.visibility) {
        s += fmt::format("{},{},{},{},{},{}\n", format_number(v.phi), format_number(v.eta),
                         format_number(v.visibility_ideal), format_number(v.visibility_fit), format_number(v.error),
                         v.flagged ? 1 : 0);
    }
    return s;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

/// Writes the sweep table, the summary and any side tables into
/// `r.scenario.output.directory`. Returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(const ScenarioResult& r) {
    const std::filesystem::path dir(r.scenario.output.directory);
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto& name = r.scenario.name;
    if (r.scenario.output.format == "json") {
        written.push_back(dir / (name + ".sweep.json"));
        write_text_file(written.back(), sweep_json(r));
    } else {
        written.push_back(dir / (name + ".csv"));
        write_text_file(written.back(), sweep_csv(r));
    }
    written.push_back(dir / (name + ".summary.json"));
    write_text_file(written.back(), r.summary.dump(2) + "\n");
    if (!r.visibility.empty()) {
        written.push_back(dir / (name + ".visibility.csv"));
        write_text_file(written.back(), visibility_csv(r));
    }
    if (r.scenario.analysis.kind == AnalysisKind::calibration && r.summary["analysis"].contains("calibration")) {
        written.push_back(dir / (name + ".model.json"));
        write_text_file(written.back(), r.summary["analysis"]["calibration"].dump(2) + "\n");
    }
    return written;
}

/// Reads a sweep CSV (or any CSV with "setting" and "counts" columns and an
/// optional "poisson_error" or "error" column). Lines starting with '#' are
/// header comments.
inline FringeData read_fringe_csv(std::istream& in, SettingKind kind) {
    FringeData d{kind, {}};
    std::string line;
    std::vector<std::string> columns;
    int setting_col = -1, counts_col = -1, error_col = -1;
    int line_no = 0;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            out.push_back(cell);
        }
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line == "\r") continue;
        auto cells = split(line);
        if (columns.empty()) {
            columns = cells;
            for (int i = 0; i < static_cast<int>(columns.size()); ++i) {
                const auto& c = columns[static_cast<std::size_t>(i)];
                if (c == "setting") setting_col = i;
                if (c == "counts") counts_col = i;
                if (c == "poisson_error" || c == "error") error_col = i;
            }
            if (setting_col < 0 || counts_col < 0) {
                throw std::invalid_argument("read_fringe_csv: header needs setting and counts columns");
            }
            continue;
        }
        if (cells.size() != columns.size()) {
            throw std::invalid_argument(fmt::format("read_fringe_csv: line {} has {} cells, expected {}", line_no,
                                                    cells.size(), columns.size()));
        }
        auto num = [&](int col) {
            const auto& c = cells[static_cast<std::size_t>(col)];
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(c, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != c.size() || c.empty()) {
                throw std::invalid_argument(fmt::format("read_fringe_csv: line {}: \"{}\" is not a number", line_no, c));
            }
            return v;
        };
        FringePoint p{num(setting_col), num(counts_col), 0.0};
        if (p.counts < 0.0) throw std::invalid_argument(fmt::format("read_fringe_csv: line {}: negative counts", line_no));
        p.error = error_col >= 0 ? num(error_col) : std::sqrt(p.counts);
        d.points.push_back(p);
    }
    if (columns.empty()) throw std::invalid_argument("read_fringe_csv: no header line");
    return d;
}

inline FringeData read_fringe_csv_file(const std::string& path, SettingKind kind) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return read_fringe_csv(in, kind);
}

}  // namespace qphot
