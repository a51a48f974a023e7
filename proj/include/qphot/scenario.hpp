// Declarative scenario configs: JSON text with one nested section per stage
// (input, circuit, sweep, detection, analysis, calibration, output).
//
// Schema "qphot-scenario/1":
//
//   name, description            strings
//   input.kind                   "fock" (occupations: [int...]) or
//                                "spdc" (pair_amplitude, max_pairs)
//   circuit.modes                mode count
//   circuit.elements[]           {"type": "coupler", "reflectivity": r | "sweep", "modes": [a, b]}
//                                {"type": "phase", "phase": phi | "sweep", "mode": m}
//   sweep.axis                   "phase" | "voltage" | "delay" | "reflectivity"
//   sweep.start/stop/points      even grid, or sweep.values: explicit increasing list
//   detection.pattern[]          {"mode": m, "count": n}
//   detection.efficiency         default 1, detection.mode_efficiency {"m": e}
//   detection.number_resolving   default true; cascades {"m": [branch probabilities]}
//   detection.loss_model         "scale" | "thinning"
//   detection.overlap            fixed pair overlap x for non-delay sweeps, default 1
//   detection.filter             {center_nm, bandwidth_nm, shape: "gaussian" | "sinc2"}
//   analysis.kind                "none" | "fringe" | "calibration" | "hom" | "hom_vs_phase"
//   analysis.harmonic, sign      fringe/calibration model, sign "plus" | "minus"
//   analysis.law                 closed form checked against the ideal column:
//                                "none" | "one_photon_g" | "two_photon_coincidence" |
//                                "four_photon_31" | "hom_coincidence"
//   analysis.dip                 {start, stop, points} delay grid (um) for hom_vs_phase
//   analysis.one_photon_companion  calibration: also simulate a one-photon sweep
//   calibration                  {"alpha", "beta", "gamma", "delta"} or {"model_file": path}
//   trials_per_point, seed
//   output.directory, output.format ("csv" | "json")
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qphot/analysis.hpp"
#include "qphot/circuit.hpp"
#include "qphot/detection.hpp"

namespace qphot {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kScenarioSchema = "qphot-scenario/1";
inline constexpr const char* kPhaseModelSchema = "qphot-phase-model/1";

/// Validation failure naming the offending field, e.g. "sweep.points".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class SweepAxis { phase, voltage, delay, reflectivity };
enum class AnalysisKind { none, fringe, calibration, hom, hom_vs_phase };
enum class ExpectedLaw { none, one_photon_g, two_photon_coincidence, four_photon_31, hom_coincidence };

struct InputSpec {
    enum class Kind { fock, spdc } kind = Kind::fock;
    std::vector<int> occupations;
    double pair_amplitude = 0.0;
    int max_pairs = 3;
};

struct ElementSpec {
    enum class Type { coupler, phase } type = Type::coupler;
    std::optional<double> value;  // empty: takes the sweep setting
    std::size_t mode_a = 0;
    std::size_t mode_b = 1;  // coupler only
};

struct CircuitSpec {
    std::size_t modes = 2;
    std::vector<ElementSpec> elements;
};

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    int points = 0;

    std::vector<double> values() const {
        if (points == 1) return {start};
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = start + (stop - start) * i / (points - 1);
        return v;
    }
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::phase;
    std::variant<GridSpec, std::vector<double>> grid = GridSpec{};

    std::vector<double> values() const {
        if (const auto* g = std::get_if<GridSpec>(&grid)) return g->values();
        return std::get<std::vector<double>>(grid);
    }
};

struct DetectionSpec {
    std::vector<ModeCount> pattern;
    double efficiency = 1.0;
    std::map<std::size_t, double> mode_efficiency;
    bool number_resolving = true;
    std::map<std::size_t, std::vector<double>> cascades;
    LossModel loss_model = LossModel::scale;
    double overlap = 1.0;
    OverlapModel filter;

    DetectionPattern detection_pattern() const { return DetectionPattern(pattern); }

    DetectorModel detector() const {
        DetectorModel d;
        d.efficiency = efficiency;
        d.mode_efficiency = mode_efficiency;
        d.number_resolving = number_resolving;
        for (const auto& [mode, b] : cascades) d.cascades.emplace(mode, CascadeTree(b));
        return d;
    }
};

struct AnalysisSpec {
    AnalysisKind kind = AnalysisKind::none;
    int harmonic = 1;
    FringeSign sign = FringeSign::plus;
    ExpectedLaw law = ExpectedLaw::none;
    GridSpec dip{-600.0, 600.0, 61};
    bool one_photon_companion = false;
};

struct CalibrationSpec {
    std::optional<PhaseVoltageModel> model;
    std::optional<std::string> model_file;
};

struct OutputSpec {
    std::string directory = ".";
    std::string format = "csv";
};

struct Scenario {
    std::string name;
    std::string description;
    InputSpec input;
    CircuitSpec circuit;
    SweepSpec sweep;
    DetectionSpec detection;
    AnalysisSpec analysis;
    CalibrationSpec calibration;
    long long trials_per_point = 10000;
    std::uint64_t seed = 1;
    OutputSpec output;
};

// ---------------------------------------------------------------------------
// Enum names

namespace detail {

template <class E>
struct EnumNames;

template <>
struct EnumNames<SweepAxis> {
    static constexpr std::pair<SweepAxis, const char*> table[] = {
        {SweepAxis::phase, "phase"}, {SweepAxis::voltage, "voltage"},
        {SweepAxis::delay, "delay"}, {SweepAxis::reflectivity, "reflectivity"}};
};
template <>
struct EnumNames<AnalysisKind> {
    static constexpr std::pair<AnalysisKind, const char*> table[] = {
        {AnalysisKind::none, "none"},
        {AnalysisKind::fringe, "fringe"},
        {AnalysisKind::calibration, "calibration"},
        {AnalysisKind::hom, "hom"},
        {AnalysisKind::hom_vs_phase, "hom_vs_phase"}};
};
template <>
struct EnumNames<ExpectedLaw> {
    static constexpr std::pair<ExpectedLaw, const char*> table[] = {
        {ExpectedLaw::none, "none"},
        {ExpectedLaw::one_photon_g, "one_photon_g"},
        {ExpectedLaw::two_photon_coincidence, "two_photon_coincidence"},
        {ExpectedLaw::four_photon_31, "four_photon_31"},
        {ExpectedLaw::hom_coincidence, "hom_coincidence"}};
};
template <>
struct EnumNames<LossModel> {
    static constexpr std::pair<LossModel, const char*> table[] = {{LossModel::scale, "scale"},
                                                                   {LossModel::thinning, "thinning"}};
};
template <>
struct EnumNames<FilterShape> {
    static constexpr std::pair<FilterShape, const char*> table[] = {{FilterShape::gaussian, "gaussian"},
                                                                     {FilterShape::sinc2, "sinc2"}};
};
template <>
struct EnumNames<FringeSign> {
    static constexpr std::pair<FringeSign, const char*> table[] = {{FringeSign::plus, "plus"},
                                                                    {FringeSign::minus, "minus"}};
};

}  // namespace detail

template <class E>
const char* enum_name(E e) {
    for (const auto& [v, n] : detail::EnumNames<E>::table)
        if (v == e) return n;
    return "?";
}

template <class E>
E enum_from_name(const std::string& field, const std::string& s) {
    std::string allowed;
    for (const auto& [v, n] : detail::EnumNames<E>::table) {
        if (s == n) return v;
        allowed += allowed.empty() ? n : std::string(", ") + n;
    }
    throw ConfigError(field, "unknown value \"" + s + "\" (expected one of " + allowed + ")");
}

// ---------------------------------------------------------------------------
// Closed-form laws

/// Ideal probability of the named law at phase phi.
inline double expected_law_probability(ExpectedLaw law, double phi) {
    switch (law) {
        case ExpectedLaw::one_photon_g: return 0.5 * (1.0 - std::cos(phi));
        case ExpectedLaw::two_photon_coincidence: return 0.5 * (1.0 + std::cos(2.0 * phi));
        case ExpectedLaw::four_photon_31: return 3.0 / 16.0 * (1.0 - std::cos(4.0 * phi));
        case ExpectedLaw::hom_coincidence: return std::pow(std::cos(phi), 2);
        case ExpectedLaw::none: break;
    }
    throw std::invalid_argument("expected_law_probability: no law");
}

// ---------------------------------------------------------------------------
// Phase-voltage model files

inline ojson phase_model_to_json(const PhaseVoltageModel& m) {
    ojson j;
    j["alpha"] = m.alpha;
    j["beta"] = m.beta;
    j["gamma"] = m.gamma;
    j["delta"] = m.delta;
    if (m.uncertainties) j["uncertainties"] = *m.uncertainties;
    return j;
}

inline PhaseVoltageModel phase_model_from_json(const ojson& j, const std::string& where) {
    PhaseVoltageModel m;
    auto coef = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError(where + "." + key, "missing or not a number");
        return j.at(key).get<double>();
    };
    m.alpha = coef("alpha");
    m.beta = coef("beta");
    m.gamma = coef("gamma");
    m.delta = coef("delta");
    if (j.contains("uncertainties")) {
        const auto& u = j.at("uncertainties");
        if (!u.is_array() || u.size() != 4) throw ConfigError(where + ".uncertainties", "expected 4 numbers");
        m.uncertainties = u.get<std::array<double, 4>>();
    }
    return m;
}

/// Reads a model file written by `calibrate`; the coefficients sit under "model".
inline PhaseVoltageModel load_phase_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("calibration.model_file", "cannot open " + path);
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const ojson::parse_error& e) {
        throw ConfigError("calibration.model_file", path + ": " + e.what());
    }
    if (j.value("schema", "") != kPhaseModelSchema) {
        throw ConfigError("calibration.model_file", path + ": expected schema " + kPhaseModelSchema);
    }
    if (!j.contains("model")) throw ConfigError("calibration.model_file", path + ": no model section");
    return phase_model_from_json(j.at("model"), "model");
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Reader {
public:
    Reader(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }
    const ojson& raw(const std::string& key) const {
        if (!has(key)) throw ConfigError(field(key), "missing");
        return j_.at(key);
    }
    Reader section(const std::string& key) const { return Reader(raw(key), field(key)); }

    double number(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(field(key), "not finite");
        return d;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    long long integer(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

    std::string string(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& fallback) const {
        return has(key) ? string(key) : fallback;
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::size_t mode(const std::string& key, std::size_t mode_count) const {
        const long long m = integer(key);
        if (m < 0 || static_cast<std::size_t>(m) >= mode_count) {
            throw ConfigError(field(key), "mode " + std::to_string(m) + " outside [0, " +
                                              std::to_string(mode_count - 1) + "]");
        }
        return static_cast<std::size_t>(m);
    }

    const ojson& json() const { return j_; }
    const std::string& path() const { return path_; }

private:
    const ojson& j_;
    std::string path_;
};

inline std::size_t parse_mode_key(const std::string& field, const std::string& key, std::size_t mode_count) {
    std::size_t pos = 0;
    long long m = -1;
    try {
        m = std::stoll(key, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != key.size() || m < 0 || static_cast<std::size_t>(m) >= mode_count) {
        throw ConfigError(field + "." + key, "key must be a mode index below " + std::to_string(mode_count));
    }
    return static_cast<std::size_t>(m);
}

inline GridSpec parse_grid(const Reader& r) {
    GridSpec g;
    g.start = r.number("start");
    g.stop = r.number("stop");
    const long long n = r.integer("points");
    if (n < 1 || n > 1000000) throw ConfigError(r.field("points"), "must lie in [1, 1000000]");
    g.points = static_cast<int>(n);
    if (g.points > 1 && !(g.stop > g.start)) throw ConfigError(r.field("stop"), "must exceed start");
    return g;
}

}  // namespace detail

inline Scenario parse_scenario(const ojson& root) {
    using detail::Reader;
    const Reader r(root, "");
    if (r.string("schema") != kScenarioSchema) {
        throw ConfigError("schema", std::string("expected \"") + kScenarioSchema + "\"");
    }
    Scenario s;
    s.name = r.string("name");
    if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos) {
        throw ConfigError("name", "must be non-empty without spaces or path separators");
    }
    s.description = r.string("description", "");

    // circuit
    const Reader c = r.section("circuit");
    const long long modes = c.integer("modes");
    if (modes < 1 || modes > 16) throw ConfigError(c.field("modes"), "must lie in [1, 16]");
    s.circuit.modes = static_cast<std::size_t>(modes);
    const auto& elems = c.raw("elements");
    if (!elems.is_array()) throw ConfigError(c.field("elements"), "expected an array");
    for (std::size_t i = 0; i < elems.size(); ++i) {
        const Reader e(elems[i], c.field("elements") + "[" + std::to_string(i) + "]");
        ElementSpec el;
        const std::string type = e.string("type");
        const char* key = nullptr;
        if (type == "coupler") {
            el.type = ElementSpec::Type::coupler;
            key = "reflectivity";
            const auto& m = e.raw("modes");
            if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number_integer()) {
                throw ConfigError(e.field("modes"), "expected two mode indices");
            }
            const long long a = m[0].get<long long>(), b = m[1].get<long long>();
            if (a < 0 || b < 0 || a >= modes || b >= modes || a == b) {
                throw ConfigError(e.field("modes"), "need two distinct modes below " + std::to_string(modes));
            }
            el.mode_a = static_cast<std::size_t>(a);
            el.mode_b = static_cast<std::size_t>(b);
        } else if (type == "phase") {
            el.type = ElementSpec::Type::phase;
            key = "phase";
            el.mode_a = e.mode("mode", s.circuit.modes);
        } else {
            throw ConfigError(e.field("type"), "unknown element type \"" + type + "\" (expected coupler or phase)");
        }
        const auto& v = e.raw(key);
        if (v.is_string() && v.get<std::string>() == "sweep") {
            el.value.reset();
        } else {
            el.value = e.number(key);
            if (el.type == ElementSpec::Type::coupler && !(*el.value >= 0.0 && *el.value <= 1.0)) {
                throw ConfigError(e.field(key), "reflectivity outside [0, 1]");
            }
        }
        s.circuit.elements.push_back(el);
    }

    // input
    const Reader in = r.section("input");
    const std::string kind = in.string("kind");
    if (kind == "fock") {
        s.input.kind = InputSpec::Kind::fock;
        const auto& occ = in.raw("occupations");
        if (!occ.is_array()) throw ConfigError(in.field("occupations"), "expected an array of integers");
        for (std::size_t i = 0; i < occ.size(); ++i) {
            if (!occ[i].is_number_integer() || occ[i].get<long long>() < 0) {
                throw ConfigError(in.field("occupations") + "[" + std::to_string(i) + "]", "expected an integer >= 0");
            }
            s.input.occupations.push_back(occ[i].get<int>());
        }
        if (s.input.occupations.size() != s.circuit.modes) {
            throw ConfigError(in.field("occupations"), "length must equal circuit.modes");
        }
        int total = 0;
        for (int n : s.input.occupations) total += n;
        if (total > 12) throw ConfigError(in.field("occupations"), "at most 12 photons supported");
    } else if (kind == "spdc") {
        s.input.kind = InputSpec::Kind::spdc;
        s.input.pair_amplitude = in.number("pair_amplitude");
        if (!(s.input.pair_amplitude >= 0.0 && s.input.pair_amplitude < 1.0)) {
            throw ConfigError(in.field("pair_amplitude"), "must lie in [0, 1)");
        }
        const long long nmax = in.integer("max_pairs", 3);
        if (nmax < 1 || nmax > 6) throw ConfigError(in.field("max_pairs"), "must lie in [1, 6]");
        s.input.max_pairs = static_cast<int>(nmax);
        if (s.circuit.modes != 2) throw ConfigError("circuit.modes", "an spdc input needs a two-mode circuit");
    } else {
        throw ConfigError(in.field("kind"), "unknown input kind \"" + kind + "\" (expected fock or spdc)");
    }

    // sweep
    const Reader sw = r.section("sweep");
    s.sweep.axis = enum_from_name<SweepAxis>(sw.field("axis"), sw.string("axis"));
    if (sw.has("values")) {
        if (sw.has("start") || sw.has("stop") || sw.has("points")) {
            throw ConfigError(sw.field("values"), "give either values or start/stop/points");
        }
        auto v = sw.numbers("values");
        if (v.empty()) throw ConfigError(sw.field("values"), "must be non-empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i])) throw ConfigError(sw.field("values"), "not finite");
            if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(sw.field("values"), "must be strictly increasing");
        }
        s.sweep.grid = std::move(v);
    } else {
        s.sweep.grid = detail::parse_grid(sw);
    }
    int sweep_phases = 0, sweep_couplers = 0;
    for (const auto& el : s.circuit.elements) {
        if (el.value) continue;
        (el.type == ElementSpec::Type::phase ? sweep_phases : sweep_couplers)++;
    }
    switch (s.sweep.axis) {
        case SweepAxis::phase:
        case SweepAxis::voltage:
            if (sweep_phases == 0 || sweep_couplers > 0) {
                throw ConfigError("circuit.elements", "a phase or voltage sweep needs phase elements set to \"sweep\" "
                                                      "and no swept couplers");
            }
            break;
        case SweepAxis::reflectivity: {
            if (sweep_couplers == 0 || sweep_phases > 0) {
                throw ConfigError("circuit.elements", "a reflectivity sweep needs coupler elements set to \"sweep\" "
                                                      "and no swept phases");
            }
            for (double v : s.sweep.values()) {
                if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("sweep", "reflectivity values must lie in [0, 1]");
            }
            break;
        }
        case SweepAxis::delay:
            if (sweep_phases + sweep_couplers > 0) {
                throw ConfigError("circuit.elements", "a delay sweep takes no \"sweep\" elements");
            }
            break;
    }

    // detection
    const Reader d = r.section("detection");
    const auto& pat = d.raw("pattern");
    if (!pat.is_array() || pat.empty()) throw ConfigError(d.field("pattern"), "expected a non-empty array");
    for (std::size_t i = 0; i < pat.size(); ++i) {
        const Reader p(pat[i], d.field("pattern") + "[" + std::to_string(i) + "]");
        ModeCount mc;
        mc.mode = p.mode("mode", s.circuit.modes);
        const long long n = p.integer("count");
        if (n < 0 || n > 12) throw ConfigError(p.field("count"), "must lie in [0, 12]");
        mc.count = static_cast<int>(n);
        s.detection.pattern.push_back(mc);
    }
    try {
        (void)s.detection.detection_pattern();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(d.field("pattern"), e.what());
    }
    s.detection.efficiency = d.number("efficiency", 1.0);
    if (!(s.detection.efficiency >= 0.0 && s.detection.efficiency <= 1.0)) {
        throw ConfigError(d.field("efficiency"), "must lie in [0, 1]");
    }
    if (d.has("mode_efficiency")) {
        const Reader me = d.section("mode_efficiency");
        for (const auto& [key, val] : me.json().items()) {
            const auto mode = detail::parse_mode_key(me.path(), key, s.circuit.modes);
            const double e = me.number(key);
            if (!(e >= 0.0 && e <= 1.0)) throw ConfigError(me.field(key), "must lie in [0, 1]");
            s.detection.mode_efficiency[mode] = e;
        }
    }
    s.detection.number_resolving = d.boolean("number_resolving", true);
    if (d.has("cascades")) {
        const Reader cs = d.section("cascades");
        for (const auto& [key, val] : cs.json().items()) {
            const auto mode = detail::parse_mode_key(cs.path(), key, s.circuit.modes);
            auto b = cs.numbers(key);
            try {
                (void)CascadeTree(b);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(cs.field(key), e.what());
            }
            s.detection.cascades[mode] = std::move(b);
        }
    }
    s.detection.loss_model = enum_from_name<LossModel>(d.field("loss_model"), d.string("loss_model", "scale"));
    s.detection.overlap = d.number("overlap", 1.0);
    if (!(s.detection.overlap >= 0.0 && s.detection.overlap <= 1.0)) {
        throw ConfigError(d.field("overlap"), "must lie in [0, 1]");
    }
    if (d.has("filter")) {
        const Reader f = d.section("filter");
        s.detection.filter.center_nm = f.number("center_nm", 780.0);
        s.detection.filter.bandwidth_nm = f.number("bandwidth_nm", 3.0);
        s.detection.filter.shape = enum_from_name<FilterShape>(f.field("shape"), f.string("shape", "gaussian"));
        if (!(s.detection.filter.center_nm > 0.0)) throw ConfigError(f.field("center_nm"), "must be positive");
        if (!(s.detection.filter.bandwidth_nm > 0.0)) throw ConfigError(f.field("bandwidth_nm"), "must be positive");
    }
    const bool mixture = s.sweep.axis == SweepAxis::delay || s.detection.overlap < 1.0;
    if (mixture) {
        const auto& occ = s.input.occupations;
        int photons = 0, occupied = 0;
        for (int n : occ) {
            photons += n;
            occupied += n > 0;
        }
        if (s.input.kind != InputSpec::Kind::fock || photons != 2 || occupied != 2) {
            throw ConfigError("input", "partial distinguishability needs a fock input with two photons in distinct modes");
        }
        if (s.detection.loss_model != LossModel::scale) {
            throw ConfigError(d.field("loss_model"), "partial distinguishability supports the scale loss model only");
        }
    }

    // analysis
    if (r.has("analysis")) {
        const Reader a = r.section("analysis");
        s.analysis.kind = enum_from_name<AnalysisKind>(a.field("kind"), a.string("kind", "none"));
        const long long k = a.integer("harmonic", 1);
        if (k != 1 && k != 2 && k != 4) throw ConfigError(a.field("harmonic"), "must be 1, 2 or 4");
        s.analysis.harmonic = static_cast<int>(k);
        s.analysis.sign = enum_from_name<FringeSign>(a.field("sign"), a.string("sign", "plus"));
        s.analysis.law = enum_from_name<ExpectedLaw>(a.field("law"), a.string("law", "none"));
        if (a.has("dip")) s.analysis.dip = detail::parse_grid(a.section("dip"));
        s.analysis.one_photon_companion = a.boolean("one_photon_companion", false);
    }
    const auto axis = s.sweep.axis;
    const auto akind = s.analysis.kind;
    if (s.analysis.law != ExpectedLaw::none && axis != SweepAxis::phase && axis != SweepAxis::voltage) {
        throw ConfigError("analysis.law", "closed-form laws apply to phase or voltage sweeps");
    }
    if ((akind == AnalysisKind::hom) != (axis == SweepAxis::delay) && (akind == AnalysisKind::hom || axis == SweepAxis::delay) &&
        akind != AnalysisKind::none) {
        throw ConfigError("analysis.kind", "hom analysis goes with a delay sweep");
    }
    if (akind == AnalysisKind::calibration && axis != SweepAxis::voltage) {
        throw ConfigError("analysis.kind", "calibration needs a voltage sweep");
    }
    if (akind == AnalysisKind::fringe && axis != SweepAxis::phase && axis != SweepAxis::voltage) {
        throw ConfigError("analysis.kind", "fringe fits need a phase or voltage sweep");
    }
    if (akind == AnalysisKind::hom_vs_phase) {
        if (axis != SweepAxis::phase) throw ConfigError("analysis.kind", "hom_vs_phase needs a phase sweep");
        const auto& occ = s.input.occupations;
        if (s.input.kind != InputSpec::Kind::fock || s.circuit.modes != 2 || occ[0] != 1 || occ[1] != 1) {
            throw ConfigError("input", "hom_vs_phase needs the fock input [1, 1]");
        }
    }

    // calibration
    if (r.has("calibration")) {
        const Reader cal = r.section("calibration");
        if (cal.has("model_file")) {
            s.calibration.model_file = cal.string("model_file");
        } else {
            s.calibration.model = phase_model_from_json(cal.json(), "calibration");
        }
    }
    if (axis == SweepAxis::voltage && !s.calibration.model && !s.calibration.model_file) {
        throw ConfigError("calibration", "a voltage sweep needs a phase-voltage model or model_file");
    }

    s.trials_per_point = r.integer("trials_per_point", 10000);
    if (s.trials_per_point < 0) throw ConfigError("trials_per_point", "must be >= 0");
    const long long seed = r.integer("seed", 1);
    if (seed < 0) throw ConfigError("seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);

    if (r.has("output")) {
        const Reader o = r.section("output");
        s.output.directory = o.string("directory", ".");
        s.output.format = o.string("format", "csv");
        if (s.output.format != "csv" && s.output.format != "json") {
            throw ConfigError(o.field("format"), "must be csv or json");
        }
    }
    return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(j);
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

// ---------------------------------------------------------------------------
// Serialisation: every field is written, defaults included.

inline ojson grid_to_json(const GridSpec& g) {
    ojson j;
    j["start"] = g.start;
    j["stop"] = g.stop;
    j["points"] = g.points;
    return j;
}

inline ojson to_json(const Scenario& s) {
    ojson j;
    j["schema"] = kScenarioSchema;
    j["name"] = s.name;
    j["description"] = s.description;

    ojson in;
    if (s.input.kind == InputSpec::Kind::fock) {
        in["kind"] = "fock";
        in["occupations"] = s.input.occupations;
    } else {
        in["kind"] = "spdc";
        in["pair_amplitude"] = s.input.pair_amplitude;
        in["max_pairs"] = s.input.max_pairs;
    }
    j["input"] = in;

    ojson c;
    c["modes"] = s.circuit.modes;
    c["elements"] = ojson::array();
    for (const auto& el : s.circuit.elements) {
        ojson e;
        const bool coupler = el.type == ElementSpec::Type::coupler;
        e["type"] = coupler ? "coupler" : "phase";
        const char* key = coupler ? "reflectivity" : "phase";
        if (el.value) e[key] = *el.value;
        else e[key] = "sweep";
        if (coupler) e["modes"] = {el.mode_a, el.mode_b};
        else e["mode"] = el.mode_a;
        c["elements"].push_back(e);
    }
    j["circuit"] = c;

    ojson sw;
    sw["axis"] = enum_name(s.sweep.axis);
    if (const auto* g = std::get_if<GridSpec>(&s.sweep.grid)) {
        const ojson grid = grid_to_json(*g);
        for (const auto& [k, v] : grid.items()) sw[k] = v;
    } else {
        sw["values"] = std::get<std::vector<double>>(s.sweep.grid);
    }
    j["sweep"] = sw;

    ojson d;
    d["pattern"] = ojson::array();
    for (const auto& p : s.detection.pattern) d["pattern"].push_back({{"mode", p.mode}, {"count", p.count}});
    d["efficiency"] = s.detection.efficiency;
    d["mode_efficiency"] = ojson::object();
    for (const auto& [m, e] : s.detection.mode_efficiency) d["mode_efficiency"][std::to_string(m)] = e;
    d["number_resolving"] = s.detection.number_resolving;
    d["cascades"] = ojson::object();
    for (const auto& [m, b] : s.detection.cascades) d["cascades"][std::to_string(m)] = b;
    d["loss_model"] = enum_name(s.detection.loss_model);
    d["overlap"] = s.detection.overlap;
    d["filter"] = {{"center_nm", s.detection.filter.center_nm},
                   {"bandwidth_nm", s.detection.filter.bandwidth_nm},
                   {"shape", enum_name(s.detection.filter.shape)}};
    j["detection"] = d;

    ojson a;
    a["kind"] = enum_name(s.analysis.kind);
    a["harmonic"] = s.analysis.harmonic;
    a["sign"] = enum_name(s.analysis.sign);
    a["law"] = enum_name(s.analysis.law);
    a["dip"] = grid_to_json(s.analysis.dip);
    a["one_photon_companion"] = s.analysis.one_photon_companion;
    j["analysis"] = a;

    if (s.calibration.model_file) {
        j["calibration"] = {{"model_file", *s.calibration.model_file}};
    } else if (s.calibration.model) {
        j["calibration"] = phase_model_to_json(*s.calibration.model);
    }

    j["trials_per_point"] = s.trials_per_point;
    j["seed"] = s.seed;
    j["output"] = {{"directory", s.output.directory}, {"format", s.output.format}};
    return j;
}

inline std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Built-in scenarios. Trial counts per point are artifact choices: they set
// the count scale of each synthetic dataset, not a measured integration time.

namespace detail {

inline std::string mz_elements(const std::string& phase) {
    return R"([
      {"type": "coupler", "reflectivity": 0.5, "modes": [0, 1]},
      {"type": "phase", "phase": )" + phase + R"(, "mode": 1},
      {"type": "coupler", "reflectivity": 0.5, "modes": [0, 1]}
    ])";
}

struct BuiltinText {
    const char* name;
    std::string text;
};

inline std::string mz_scenario(const std::string& head, const std::string& tail,
                               const std::string& phase = "\"sweep\"") {
    return "{\n  \"schema\": \"qphot-scenario/1\",\n" + head + ",\n  \"circuit\": {\"modes\": 2, \"elements\": " +
           mz_elements(phase) + "},\n" + tail + "\n}\n";
}

inline const std::vector<BuiltinText>& builtin_texts() {
    static const std::vector<BuiltinText> texts = {
        {"fig3", mz_scenario(R"(  "name": "fig3",
  "description": "Two-photon coincidences versus heater voltage; the data behind the phase-voltage calibration",
  "input": {"kind": "fock", "occupations": [1, 1]})",
                             R"(  "sweep": {"axis": "voltage", "start": 0.0, "stop": 5.0, "points": 50},
  "detection": {"pattern": [{"mode": 0, "count": 1}, {"mode": 1, "count": 1}]},
  "analysis": {"kind": "calibration", "harmonic": 2, "sign": "plus", "law": "two_photon_coincidence",
               "one_photon_companion": true},
  "calibration": {"alpha": -1.887, "beta": 0.157, "gamma": 0.0045, "delta": -0.001,
                  "uncertainties": [0.006, 0.005, 0.002, 0.0002]},
  "trials_per_point": 2000,
  "seed": 3)")},
        {"fig4a", mz_scenario(R"(  "name": "fig4a",
  "description": "One-photon fringe at output g",
  "input": {"kind": "fock", "occupations": [1, 0]})",
                              R"(  "sweep": {"axis": "phase", "start": -3.141592653589793, "stop": 3.141592653589793, "points": 201},
  "detection": {"pattern": [{"mode": 0, "count": 1}]},
  "analysis": {"kind": "fringe", "harmonic": 1, "sign": "minus", "law": "one_photon_g"},
  "trials_per_point": 20000,
  "seed": 41)")},
        {"fig4b", mz_scenario(R"(  "name": "fig4b",
  "description": "Two-photon coincidence fringe with half the one-photon period",
  "input": {"kind": "fock", "occupations": [1, 1]})",
                              R"(  "sweep": {"axis": "phase", "start": -3.141592653589793, "stop": 3.141592653589793, "points": 201},
  "detection": {"pattern": [{"mode": 0, "count": 1}, {"mode": 1, "count": 1}]},
  "analysis": {"kind": "fringe", "harmonic": 2, "sign": "plus", "law": "two_photon_coincidence"},
  "trials_per_point": 4000,
  "seed": 42)")},
        {"fig4c", mz_scenario(R"(  "name": "fig4c",
  "description": "Four-photon fringe on the |3,1> outcome with a quarter of the one-photon period",
  "input": {"kind": "fock", "occupations": [2, 2]})",
                              R"(  "sweep": {"axis": "phase", "start": -3.141592653589793, "stop": 3.141592653589793, "points": 201},
  "detection": {"pattern": [{"mode": 0, "count": 3}, {"mode": 1, "count": 1}]},
  "analysis": {"kind": "fringe", "harmonic": 4, "sign": "minus", "law": "four_photon_31"},
  "trials_per_point": 1000,
  "seed": 43)")},
        {"fig5", mz_scenario(R"(  "name": "fig5",
  "description": "HOM visibility versus interferometer phase, eta = sin^2(phi/2); one simulated dip per phase",
  "input": {"kind": "fock", "occupations": [1, 1]})",
                             R"(  "sweep": {"axis": "phase", "start": -3.0, "stop": -0.2, "points": 29},
  "detection": {"pattern": [{"mode": 0, "count": 1}, {"mode": 1, "count": 1}],
                "filter": {"center_nm": 780.0, "bandwidth_nm": 3.0, "shape": "gaussian"}},
  "analysis": {"kind": "hom_vs_phase", "law": "hom_coincidence",
               "dip": {"start": -600.0, "stop": 600.0, "points": 61}},
  "trials_per_point": 20000,
  "seed": 5)")},
        {"fig5a", mz_scenario(R"(  "name": "fig5a",
  "description": "Low-visibility HOM dip at phi = -0.49 rad",
  "input": {"kind": "fock", "occupations": [1, 1]})",
                              R"(  "sweep": {"axis": "delay", "start": -600.0, "stop": 600.0, "points": 61},
  "detection": {"pattern": [{"mode": 0, "count": 1}, {"mode": 1, "count": 1}],
                "filter": {"center_nm": 780.0, "bandwidth_nm": 3.0, "shape": "gaussian"}},
  "analysis": {"kind": "hom"},
  "trials_per_point": 20000,
  "seed": 51)",
                              "-0.49")},
        {"fig5b", mz_scenario(R"(  "name": "fig5b",
  "description": "High-visibility HOM dip at phi = -1.602 rad",
  "input": {"kind": "fock", "occupations": [1, 1]})",
                              R"(  "sweep": {"axis": "delay", "start": -600.0, "stop": 600.0, "points": 61},
  "detection": {"pattern": [{"mode": 0, "count": 1}, {"mode": 1, "count": 1}],
                "filter": {"center_nm": 780.0, "bandwidth_nm": 3.0, "shape": "gaussian"}},
  "analysis": {"kind": "hom"},
  "trials_per_point": 20000,
  "seed": 52)",
                              "-1.602")},
        {"figS4", mz_scenario(R"(  "name": "figS4",
  "description": "Four-photon fringe at high pump power: pair-source input, lossy click detectors, binomial thinning",
  "input": {"kind": "spdc", "pair_amplitude": 0.2, "max_pairs": 3})",
                              R"(  "sweep": {"axis": "phase", "start": -3.141592653589793, "stop": 3.141592653589793, "points": 201},
  "detection": {"pattern": [{"mode": 0, "count": 3}, {"mode": 1, "count": 1}],
                "efficiency": 0.6, "number_resolving": false, "cascades": {"0": [0.5, 0.25, 0.25]},
                "loss_model": "thinning"},
  "analysis": {"kind": "fringe", "harmonic": 4, "sign": "minus"},
  "trials_per_point": 2000000,
  "seed": 44)")},
    };
    return texts;
}

}  // namespace detail

inline std::vector<std::string> builtin_scenario_names() {
    std::vector<std::string> out;
    for (const auto& b : detail::builtin_texts()) out.emplace_back(b.name);
    return out;
}

/// Embedded config text of a built-in scenario, as shipped.
inline std::string builtin_scenario_text(const std::string& name) {
    for (const auto& b : detail::builtin_texts())
        if (name == b.name) return b.text;
    std::string known;
    for (const auto& n : builtin_scenario_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown built-in scenario \"" + name + "\" (known: " + known + ")");
}

inline Scenario builtin_scenario(const std::string& name) { return parse_scenario_text(builtin_scenario_text(name)); }

}  // namespace qphot
