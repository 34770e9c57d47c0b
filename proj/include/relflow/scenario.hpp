#pragma once

// JSON-configured scenarios: parsing with strict key checking, canonical
// serialization, dotted-path overrides, and the run pipelines behind the CLI.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "relflow/clebsch.hpp"
#include "relflow/errors.hpp"
#include "relflow/euler_validate.hpp"
#include "relflow/fisher.hpp"
#include "relflow/io.hpp"
#include "relflow/particles.hpp"
#include "relflow/presets.hpp"
#include "relflow/snapshot.hpp"
#include "relflow/spacetime.hpp"
#include "relflow/thermo.hpp"

namespace relflow {

using nlohmann::json;

enum class ScenarioKind { particle, fluid, euler_check, convergence, fisher };

inline constexpr std::pair<ScenarioKind, std::string_view> scenario_kind_names[] = {
    {ScenarioKind::particle, "particle"},       {ScenarioKind::fluid, "fluid"},
    {ScenarioKind::euler_check, "euler_check"}, {ScenarioKind::convergence, "convergence"},
    {ScenarioKind::fisher, "fisher"},
};

inline std::string_view to_string(ScenarioKind k) {
    for (const auto& [id, name] : scenario_kind_names)
        if (id == k) return name;
    return "unknown";
}

struct ParticleSpec {
    Vec3 x;
    std::optional<Vec3> v; ///< coordinate velocity, or
    std::optional<Vec3> u; ///< reduced momentum gamma v (exactly one of v, u)
    double m = 1.0;
    double e = 1.0;

    ParticleState state(double c) const {
        return v ? particle_from_velocity(x, *v, m, e, c) : ParticleState{x, u.value_or(Vec3{}), m, e};
    }
    friend bool operator==(const ParticleSpec&, const ParticleSpec&) = default;
};

struct GridSpec {
    int dim = 1;
    std::size_t n = 64;
    double L = 1.0;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct InitialSpec {
    Preset preset = Preset::static_fluid;
    PresetParams params;
    friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct IntegratorSpec {
    double dt = 1e-3;
    std::size_t n_steps = 1000;
    double cfl = 0.4;
    PushScheme scheme = PushScheme::boris;
    friend bool operator==(const IntegratorSpec&, const IntegratorSpec&) = default;
};

/// Residual studies: resolutions (empty = n/4, n/2, n), dt = dt_coefficient h,
/// residual centred at `time`.
struct ConvergenceSpec {
    std::vector<std::size_t> resolutions;
    double dt_coefficient = 0.25;
    double time = 0.25;
    ResidualForm form = ResidualForm::velocity;
    double rho_floor = 1e-12;
    friend bool operator==(const ConvergenceSpec&, const ConvergenceSpec&) = default;
};

struct QuantumSpec {
    double hbar = 1.0;
    InternalEnergyMode mode = InternalEnergyMode::fisher_only;
    friend bool operator==(const QuantumSpec&, const QuantumSpec&) = default;
};

struct OutputSpec {
    std::string dir = "out";
    std::size_t stride = 1;
    friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

/// Upper bounds (min_order: lower bound). Only the keys that are set are gated.
struct Tolerances {
    std::map<std::string, double> limits;
    friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::particle;
    double c = 1.0;
    double k = 0.0; ///< fluid charge-to-mass ratio
    FieldConfiguration field;
    BarotropicEOS eos;
    GridSpec grid;
    InitialSpec initial;
    std::vector<ParticleSpec> particles;
    IntegratorSpec integrator;
    ConvergenceSpec convergence;
    QuantumSpec quantum;
    OutputSpec output;
    Tolerances tolerances;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Tolerance keys understood by each scenario kind.
inline const std::set<std::string>& tolerance_keys(ScenarioKind k) {
    static const std::map<ScenarioKind, std::set<std::string>> keys = {
        {ScenarioKind::particle, {"period", "speed_drift"}},
        {ScenarioKind::fluid, {"mass_drift", "exact_error"}},
        {ScenarioKind::euler_check, {"l2", "linf", "min_order"}},
        {ScenarioKind::convergence, {"l2", "linf", "min_order"}},
        {ScenarioKind::fisher, {"fisher_integral"}},
    };
    return keys.at(k);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

/// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string child(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
    bool has(std::string_view key) const { return j_.contains(key); }

    const json* get(std::string_view key) {
        seen_.insert(std::string(key));
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(std::string_view key, double fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(child(key), "expected a number");
        const double x = v->get<double>();
        if (!std::isfinite(x)) throw ConfigError(child(key), "must be finite");
        return x;
    }

    std::size_t count(std::string_view key, std::size_t fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer() || v->get<std::int64_t>() < 0) throw ConfigError(child(key), "expected a non-negative integer");
        return v->get<std::size_t>();
    }

    std::string text(std::string_view key, std::string fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(child(key), "expected a string");
        return v->get<std::string>();
    }

    std::string required_text(std::string_view key) {
        if (!has(key)) throw ConfigError(child(key), "is required");
        return text(key, "");
    }

    Vec3 vec3(std::string_view key, Vec3 fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        return to_vec3(*v, child(key));
    }

    std::optional<Vec3> optional_vec3(std::string_view key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        return to_vec3(*v, child(key));
    }

    static Vec3 to_vec3(const json& v, const std::string& path) {
        if (!v.is_array() || v.size() < 1 || v.size() > 3) throw ConfigError(path, "expected an array of 1 to 3 numbers");
        Vec3 out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(path + "." + std::to_string(i), "expected a number");
            out[i] = v[i].get<double>();
        }
        return out;
    }

    /// Rejects keys that were never asked for.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(child(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class E, std::size_t N>
E parse_enum(const std::pair<E, std::string_view> (&table)[N], const std::string& value, const std::string& path) {
    for (const auto& [id, name] : table)
        if (name == value) return id;
    std::string allowed;
    for (const auto& [id, name] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(path, "unknown value '" + value + "' (expected one of: " + allowed + ")");
}

inline constexpr std::pair<FieldKind, std::string_view> field_kind_names[] = {
    {FieldKind::zero, "zero"},
    {FieldKind::uniform_e, "uniform_e"},
    {FieldKind::uniform_b, "uniform_b"},
    {FieldKind::crossed_eb, "crossed_eb"},
    {FieldKind::harmonic_wave, "harmonic_wave"},
    {FieldKind::electrostatic, "electrostatic"},
};
inline constexpr std::pair<ElectricGauge, std::string_view> electric_gauge_names[] = {
    {ElectricGauge::scalar, "scalar"}, {ElectricGauge::temporal, "temporal"}};
inline constexpr std::pair<MagneticGauge, std::string_view> magnetic_gauge_names[] = {
    {MagneticGauge::symmetric, "symmetric"}, {MagneticGauge::landau, "landau"}};
inline constexpr std::pair<PotentialProfile, std::string_view> profile_names[] = {
    {PotentialProfile::polynomial, "polynomial"}, {PotentialProfile::cosine, "cosine"}};
inline constexpr std::pair<EosKind, std::string_view> eos_kind_names[] = {
    {EosKind::dust, "dust"}, {EosKind::power_law, "power_law"}};
inline constexpr std::pair<PushScheme, std::string_view> scheme_names[] = {
    {PushScheme::boris, "boris"}, {PushScheme::rk4, "rk4"}};
inline constexpr std::pair<ResidualForm, std::string_view> form_names[] = {
    {ResidualForm::velocity, "velocity"}, {ResidualForm::enthalpy, "enthalpy"}};
inline constexpr std::pair<InternalEnergyMode, std::string_view> mode_names[] = {
    {InternalEnergyMode::fisher_only, "fisher_only"}, {InternalEnergyMode::fisher_plus_eos, "fisher_plus_eos"}};

template <class E, std::size_t N>
std::string enum_name(const std::pair<E, std::string_view> (&table)[N], E value) {
    for (const auto& [id, name] : table)
        if (id == value) return std::string(name);
    return "unknown";
}

inline FieldConfiguration parse_field(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const FieldKind kind = parse_enum(field_kind_names, r.required_text("kind"), r.child("kind"));
    auto egauge = [&](std::string_view key) {
        return parse_enum(electric_gauge_names, r.text(key, "scalar"), r.child(key));
    };
    auto bgauge = [&](std::string_view key) {
        return parse_enum(magnetic_gauge_names, r.text(key, "symmetric"), r.child(key));
    };
    FieldConfiguration::Variant v;
    switch (kind) {
    case FieldKind::zero: v = ZeroField{}; break;
    case FieldKind::uniform_e: v = UniformE{r.vec3("E", {}), egauge("gauge")}; break;
    case FieldKind::uniform_b: v = UniformB{r.vec3("B", {}), bgauge("gauge")}; break;
    case FieldKind::crossed_eb:
        v = CrossedEB{r.vec3("E", {}), r.vec3("B", {}), egauge("e_gauge"), bgauge("b_gauge")};
        break;
    case FieldKind::harmonic_wave: {
        HarmonicWave w;
        w.amplitude = r.number("amplitude", w.amplitude);
        w.polarization = r.vec3("polarization", w.polarization);
        w.wave_vector = r.vec3("wave_vector", w.wave_vector);
        w.omega = r.number("omega", w.omega);
        w.phase = r.number("phase", w.phase);
        v = w;
        break;
    }
    case FieldKind::electrostatic: {
        Electrostatic es;
        es.direction = r.vec3("direction", es.direction);
        es.profile = parse_enum(profile_names, r.text("profile", "polynomial"), r.child("profile"));
        if (const json* c = r.get("coefficients")) {
            if (!c->is_array()) throw ConfigError(r.child("coefficients"), "expected an array of numbers");
            for (std::size_t i = 0; i < c->size(); ++i) {
                if (!(*c)[i].is_number())
                    throw ConfigError(r.child("coefficients") + "." + std::to_string(i), "expected a number");
                es.coefficients.push_back((*c)[i].get<double>());
            }
        }
        es.wavenumber = r.number("wavenumber", es.wavenumber);
        es.phase = r.number("phase", es.phase);
        v = es;
        break;
    }
    }
    r.finish();
    try {
        return FieldConfiguration(std::move(v));
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

inline BarotropicEOS parse_eos(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const EosKind kind = parse_enum(eos_kind_names, r.required_text("kind"), r.child("kind"));
    if (kind == EosKind::dust) {
        r.finish();
        return BarotropicEOS::dust();
    }
    const double K = r.number("K", 1.0);
    const double G = r.number("Gamma", 2.0);
    r.finish();
    if (!(K > 0.0)) throw ConfigError(r.child("K"), "K must be > 0");
    if (!(G > 1.0)) throw ConfigError(r.child("Gamma"), "Gamma must be > 1");
    return BarotropicEOS::power_law(K, G);
}

inline GridSpec parse_grid(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    GridSpec g;
    g.dim = static_cast<int>(r.count("dim", 1));
    g.n = r.count("n", g.n);
    g.L = r.number("L", g.L);
    r.finish();
    if (g.dim != 1 && g.dim != 2) throw ConfigError(r.child("dim"), "dim must be 1 or 2");
    if (g.n < 8) throw ConfigError(r.child("n"), "n must be >= 8");
    if (!(g.L > 0.0)) throw ConfigError(r.child("L"), "L must be > 0");
    return g;
}

inline InitialSpec parse_initial(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    InitialSpec s;
    const std::string name = r.text("preset", "static");
    const auto preset = preset_from_name(name);
    if (!preset) throw ConfigError(r.child("preset"), "unknown preset '" + name + "'");
    s.preset = *preset;
    PresetParams& p = s.params;
    p.rho = r.number("rho", p.rho);
    p.amplitude = r.number("amplitude", p.amplitude);
    p.velocity = r.number("velocity", p.velocity);
    p.phi0 = r.number("phi0", p.phi0);
    p.sigma = r.number("sigma", p.sigma);
    p.mass = r.number("mass", p.mass);
    r.finish();
    if (!(p.rho >= 0.0)) throw ConfigError(r.child("rho"), "rho must be >= 0");
    if (!(std::abs(p.velocity) < 1.0)) throw ConfigError(r.child("velocity"), "|velocity| must be < 1 (units of c)");
    if (!(p.sigma > 0.0)) throw ConfigError(r.child("sigma"), "sigma must be > 0");
    if (!(p.mass > 0.0)) throw ConfigError(r.child("mass"), "mass must be > 0");
    return s;
}

inline ParticleSpec parse_particle(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    ParticleSpec p;
    p.x = r.vec3("x", {});
    p.v = r.optional_vec3("v");
    p.u = r.optional_vec3("u");
    p.m = r.number("m", p.m);
    p.e = r.number("e", p.e);
    r.finish();
    if (p.v && p.u) throw ConfigError(path, "give either v or u, not both");
    if (!p.v && !p.u) p.u = Vec3{};
    if (!(p.m > 0.0)) throw ConfigError(r.child("m"), "m must be > 0");
    return p;
}

inline IntegratorSpec parse_integrator(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    IntegratorSpec s;
    s.dt = r.number("dt", s.dt);
    s.n_steps = r.count("n_steps", s.n_steps);
    s.cfl = r.number("cfl", s.cfl);
    s.scheme = parse_enum(scheme_names, r.text("scheme", "boris"), r.child("scheme"));
    r.finish();
    if (!(s.dt > 0.0)) throw ConfigError(r.child("dt"), "dt must be > 0");
    if (!(s.cfl > 0.0)) throw ConfigError(r.child("cfl"), "cfl must be > 0");
    return s;
}

inline ConvergenceSpec parse_convergence(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    ConvergenceSpec s;
    if (const json* res = r.get("resolutions")) {
        if (!res->is_array()) throw ConfigError(r.child("resolutions"), "expected an array of integers");
        for (std::size_t i = 0; i < res->size(); ++i) {
            if (!(*res)[i].is_number_integer() || (*res)[i].get<std::int64_t>() < 0)
                throw ConfigError(r.child("resolutions") + "." + std::to_string(i), "expected a non-negative integer");
            s.resolutions.push_back((*res)[i].get<std::size_t>());
        }
    }
    s.dt_coefficient = r.number("dt_coefficient", s.dt_coefficient);
    s.time = r.number("time", s.time);
    s.form = parse_enum(form_names, r.text("form", "velocity"), r.child("form"));
    s.rho_floor = r.number("rho_floor", s.rho_floor);
    r.finish();
    if (!(s.dt_coefficient > 0.0)) throw ConfigError(r.child("dt_coefficient"), "dt_coefficient must be > 0");
    if (!(s.time >= 0.0)) throw ConfigError(r.child("time"), "time must be >= 0");
    if (!(s.rho_floor >= 0.0)) throw ConfigError(r.child("rho_floor"), "rho_floor must be >= 0");
    for (std::size_t n : s.resolutions)
        if (n < 8) throw ConfigError(r.child("resolutions"), "every resolution must be >= 8");
    return s;
}

inline QuantumSpec parse_quantum(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    QuantumSpec s;
    s.hbar = r.number("hbar", s.hbar);
    s.mode = parse_enum(mode_names, r.text("mode", "fisher_only"), r.child("mode"));
    r.finish();
    if (!(s.hbar >= 0.0)) throw ConfigError(r.child("hbar"), "hbar must be >= 0");
    return s;
}

inline OutputSpec parse_output(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    OutputSpec s;
    s.dir = r.text("dir", s.dir);
    s.stride = r.count("stride", s.stride);
    r.finish();
    if (s.stride == 0) throw ConfigError(r.child("stride"), "stride must be >= 1");
    if (s.dir.empty()) throw ConfigError(r.child("dir"), "dir must not be empty");
    return s;
}

inline Tolerances parse_tolerances(const json& j, const std::string& path, ScenarioKind kind) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    Tolerances t;
    const auto& allowed = tolerance_keys(kind);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string p = path + "." + it.key();
        if (!allowed.count(it.key()))
            throw ConfigError(p, "unknown key for scenario kind '" + std::string(to_string(kind)) + "'");
        if (!it->is_number() || !std::isfinite(it->get<double>())) throw ConfigError(p, "expected a finite number");
        t.limits[it.key()] = it->get<double>();
    }
    return t;
}

} // namespace detail

/// Builds a validated Scenario from a parsed JSON document.
inline Scenario parse_config(const json& j) {
    detail::ObjectReader r(j, "");
    Scenario s;
    s.kind = detail::parse_enum(scenario_kind_names, r.required_text("kind"), "kind");
    if (const json* u = r.get("units")) {
        detail::ObjectReader ur(*u, "units");
        s.c = ur.number("c", s.c);
        ur.finish();
        if (!(s.c > 0.0)) throw ConfigError("units.c", "c must be > 0");
    }
    s.k = r.number("k", s.k);
    if (const json* v = r.get("field")) s.field = detail::parse_field(*v, "field");
    if (const json* v = r.get("eos")) s.eos = detail::parse_eos(*v, "eos");
    if (const json* v = r.get("grid")) s.grid = detail::parse_grid(*v, "grid");
    if (const json* v = r.get("initial")) s.initial = detail::parse_initial(*v, "initial");
    if (const json* v = r.get("particles")) {
        if (!v->is_array()) throw ConfigError("particles", "expected an array");
        for (std::size_t i = 0; i < v->size(); ++i)
            s.particles.push_back(detail::parse_particle((*v)[i], "particles." + std::to_string(i)));
    }
    if (const json* v = r.get("integrator")) s.integrator = detail::parse_integrator(*v, "integrator");
    if (const json* v = r.get("convergence")) s.convergence = detail::parse_convergence(*v, "convergence");
    if (const json* v = r.get("quantum")) s.quantum = detail::parse_quantum(*v, "quantum");
    if (const json* v = r.get("output")) s.output = detail::parse_output(*v, "output");
    if (const json* v = r.get("tolerances")) s.tolerances = detail::parse_tolerances(*v, "tolerances", s.kind);
    r.finish();

    for (const auto& p : s.particles)
        if (p.v && !(norm(*p.v) < s.c)) throw ConfigError("particles", "particle speed must be < c");
    if (s.kind == ScenarioKind::convergence && !s.convergence.resolutions.empty() &&
        s.convergence.resolutions.size() < 3)
        throw ConfigError("convergence.resolutions", "at least three resolutions are required");
    if (s.kind == ScenarioKind::convergence && s.convergence.form == ResidualForm::enthalpy && s.k != 0.0)
        throw ConfigError("convergence.form", "the enthalpy form requires k = 0");
    return s;
}

/// Parses JSON text; syntax errors report the position.
inline Scenario parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<json>", e.what());
    }
    return parse_config(j);
}

inline Scenario parse_config(const char* text) { return parse_config(std::string_view(text)); }

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline json field_json(const FieldConfiguration& f) {
    json j{{"kind", enum_name(field_kind_names, f.kind())}};
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, UniformE>) {
                j["E"] = vec_json(p.E);
                j["gauge"] = enum_name(electric_gauge_names, p.gauge);
            } else if constexpr (std::is_same_v<T, UniformB>) {
                j["B"] = vec_json(p.B);
                j["gauge"] = enum_name(magnetic_gauge_names, p.gauge);
            } else if constexpr (std::is_same_v<T, CrossedEB>) {
                j["E"] = vec_json(p.E);
                j["B"] = vec_json(p.B);
                j["e_gauge"] = enum_name(electric_gauge_names, p.e_gauge);
                j["b_gauge"] = enum_name(magnetic_gauge_names, p.b_gauge);
            } else if constexpr (std::is_same_v<T, HarmonicWave>) {
                j["amplitude"] = p.amplitude;
                j["polarization"] = vec_json(p.polarization);
                j["wave_vector"] = vec_json(p.wave_vector);
                j["omega"] = p.omega;
                j["phase"] = p.phase;
            } else if constexpr (std::is_same_v<T, Electrostatic>) {
                j["direction"] = vec_json(p.direction);
                j["profile"] = enum_name(profile_names, p.profile);
                j["coefficients"] = p.coefficients;
                j["wavenumber"] = p.wavenumber;
                j["phase"] = p.phase;
            }
        },
        f.variant());
    return j;
}

inline json eos_json(const BarotropicEOS& eos) {
    json j{{"kind", enum_name(eos_kind_names, eos.kind())}};
    if (!eos.is_dust()) {
        j["K"] = eos.K();
        j["Gamma"] = eos.Gamma();
    }
    return j;
}

} // namespace detail

/// Canonical form with every default written out.
inline json to_json(const Scenario& s) {
    using namespace detail;
    json particles = json::array();
    for (const auto& p : s.particles) {
        json jp{{"x", vec_json(p.x)}, {"m", p.m}, {"e", p.e}};
        if (p.v) jp["v"] = vec_json(*p.v);
        else jp["u"] = vec_json(p.u.value_or(Vec3{}));
        particles.push_back(std::move(jp));
    }
    const PresetParams& pp = s.initial.params;
    json tol = json::object();
    for (const auto& [key, value] : s.tolerances.limits) tol[key] = value;
    return {
        {"kind", std::string(to_string(s.kind))},
        {"units", {{"c", s.c}}},
        {"k", s.k},
        {"field", field_json(s.field)},
        {"eos", eos_json(s.eos)},
        {"grid", {{"dim", s.grid.dim}, {"n", s.grid.n}, {"L", s.grid.L}}},
        {"initial",
         {{"preset", std::string(preset_name(s.initial.preset))},
          {"rho", pp.rho},
          {"amplitude", pp.amplitude},
          {"velocity", pp.velocity},
          {"phi0", pp.phi0},
          {"sigma", pp.sigma},
          {"mass", pp.mass}}},
        {"particles", particles},
        {"integrator",
         {{"dt", s.integrator.dt},
          {"n_steps", s.integrator.n_steps},
          {"cfl", s.integrator.cfl},
          {"scheme", enum_name(scheme_names, s.integrator.scheme)}}},
        {"convergence",
         {{"resolutions", s.convergence.resolutions},
          {"dt_coefficient", s.convergence.dt_coefficient},
          {"time", s.convergence.time},
          {"form", enum_name(form_names, s.convergence.form)},
          {"rho_floor", s.convergence.rho_floor}}},
        {"quantum", {{"hbar", s.quantum.hbar}, {"mode", enum_name(mode_names, s.quantum.mode)}}},
        {"output", {{"dir", s.output.dir}, {"stride", s.output.stride}}},
        {"tolerances", tol},
    };
}

// ---------------------------------------------------------------------------
// Overrides

/// Applies `key=value` with a dotted key path; numeric segments index arrays.
/// The value is read as JSON when it parses, otherwise as a plain string.
inline void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError(std::string(assignment), "override must be key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (seg.empty()) throw ConfigError(key, "empty path segment");
        const bool last = dot == std::string::npos;
        if (node->is_array()) {
            if (!std::all_of(seg.begin(), seg.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
                throw ConfigError(key, "array index expected at '" + seg + "'");
            const std::size_t idx = std::stoul(seg);
            if (idx >= node->size()) throw ConfigError(key, "array index out of range");
            node = &(*node)[idx];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) throw ConfigError(key, "cannot descend into a scalar at '" + seg + "'");
            node = &(*node)[seg];
        }
        if (last) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

// ---------------------------------------------------------------------------
// Running

/// Outcome of one run. `summary` is also written to summary.json.
struct RunResult {
    bool pass = true;
    json summary;
    std::vector<std::filesystem::path> files;
};

namespace detail {

/// Collects outputs in memory and commits them together; on a failed write
/// every file already committed by this run is removed again.
class OutputBundle {
public:
    explicit OutputBundle(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::ostringstream& file(const std::string& name) {
        for (auto& [n, os] : pending_)
            if (n == name) return os;
        pending_.emplace_back(name, std::ostringstream{});
        return pending_.back().second;
    }

    std::vector<std::filesystem::path> commit() {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw Error("cannot create output directory '" + dir_.string() + "': " + ec.message());
        std::vector<std::filesystem::path> written;
        try {
            for (const auto& [name, os] : pending_) {
                const std::filesystem::path p = dir_ / name;
                const std::string body = os.str();
                write_file_atomically(p, [&](std::ostream& out) { out << body; });
                written.push_back(p);
            }
        } catch (...) {
            for (const auto& p : written) std::filesystem::remove(p, ec);
            throw;
        }
        return written;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::ostringstream>> pending_;
};

struct Gate {
    json norms = json::object();
    json orders = json::object();
    json checks = json::object();
    bool pass = true;

    /// value <= limit (or >= for min_order); a missing value fails the check.
    void check(const Tolerances& tol, const std::string& key, std::optional<double> value) {
        auto it = tol.limits.find(key);
        if (it == tol.limits.end()) return;
        const bool lower = key == "min_order";
        const bool ok = value && std::isfinite(*value) && (lower ? *value >= it->second : *value <= it->second);
        checks[key] = {{"limit", it->second}, {"value", value ? json(*value) : json(nullptr)}, {"pass", ok}};
        pass = pass && ok;
    }
};

inline Grid make_grid(const GridSpec& g) { return Grid(g.dim, g.n, g.L); }

inline ClebschFieldState fluid_initial(const Scenario& s, const Grid& g) {
    ClebschFieldState st = make_fluid_preset(s.initial.preset, g, s.eos, s.k, s.c, s.initial.params);
    if (s.initial.preset != Preset::charged_equilibrium) {
        st.field = s.field;
        st.k = s.k;
    }
    st.validate();
    return st;
}

/// Exact state at time t for presets that have one.
inline std::optional<ClebschFieldState> fluid_exact(const Scenario& s, const Grid& g, double t) {
    switch (s.initial.preset) {
    case Preset::uniform_flow:
        if (s.k != 0.0 || s.field.kind() != FieldKind::zero) return std::nullopt;
        return uniform_flow_exact(g, s.eos, s.c, s.initial.params, t);
    case Preset::charged_equilibrium: return charged_equilibrium_exact(g, s.eos, s.k, s.c, s.initial.params, t);
    case Preset::static_fluid:
        if (s.k != 0.0 || s.field.kind() != FieldKind::zero) return std::nullopt;
        {
            ClebschFieldState st = fluid_initial(s, g);
            const double w0 = enthalpy(s.eos, s.initial.params.rho);
            for (double& nu : st.nu) nu = -(s.c * s.c + w0) * t;
            st.t = t;
            return st;
        }
    default: return std::nullopt;
    }
}

/// Three consecutive states centred at `time` (states at time - dt, time, time + dt).
inline ConvergenceCase centred_case(const Scenario& s, std::size_t n) {
    GridSpec gs = s.grid;
    gs.n = n;
    const Grid g = make_grid(gs);
    const double dt = s.convergence.dt_coefficient * g.h();
    const auto steps = static_cast<std::size_t>(std::llround(s.convergence.time / dt));
    if (steps < 1) throw DomainError("convergence.time must cover at least one step of dt");
    EvolveOptions opt;
    opt.cfl = s.integrator.cfl;
    ConvergenceCase cs;
    cs.dt = dt;
    cs.spacing = g.h();
    cs.states[0] = evolve(fluid_initial(s, g), dt, steps - 1, opt);
    cs.states[1] = evolve(cs.states[0], dt, 1, opt);
    cs.states[2] = evolve(cs.states[1], dt, 1, opt);
    return cs;
}

inline std::vector<std::size_t> study_resolutions(const Scenario& s) {
    if (!s.convergence.resolutions.empty()) return s.convergence.resolutions;
    return {s.grid.n / 4, s.grid.n / 2, s.grid.n};
}

inline RunResult run_particle(const Scenario& s, OutputBundle& out) {
    ParticleSystem sys;
    sys.field = s.field;
    for (const auto& p : s.particles) sys.particles.push_back(p.state(s.c));
    if (sys.particles.empty()) throw ConfigError("particles", "particle scenarios need at least one particle");
    SimulationOptions opt;
    opt.dt = s.integrator.dt;
    opt.n_steps = s.integrator.n_steps;
    opt.scheme = s.integrator.scheme;
    opt.stride = s.output.stride;
    opt.c = s.c;
    const Trajectory traj = simulate_system(sys, opt);
    write_trajectory_csv(out.file("trajectory.csv"), traj);

    Gate gate;
    double drift = 0.0;
    for (std::size_t id = 0; id < traj.n_particles; ++id) {
        const auto series = traj.of(id);
        const double u0 = norm(series.front().u);
        for (const auto& smp : series)
            drift = std::max(drift, u0 > 0.0 ? std::abs(norm(smp.u) - u0) / u0 : norm(smp.u));
    }
    gate.norms["speed_drift"] = drift;

    std::optional<double> period_error;
    if (s.field.kind() == FieldKind::uniform_b) {
        const Vec3 B = std::get<UniformB>(s.field.variant()).B;
        json periods = json::array();
        double worst = 0.0;
        try {
            for (std::size_t id = 0; id < traj.n_particles; ++id) {
                const auto series = traj.of(id);
                const double expected = gyration_period(sys.particles[id], B, s.c);
                const double measured = measure_gyration_period(series, B);
                const double rel = std::abs(measured - expected) / expected;
                worst = std::max(worst, rel);
                periods.push_back({{"particle_id", id}, {"expected", expected}, {"measured", measured}, {"rel_error", rel}});
            }
            period_error = worst;
            gate.norms["period_rel_error"] = worst;
            gate.norms["periods"] = periods;
        } catch (const InsufficientData& e) {
            gate.norms["period_note"] = e.what();
        }
    }
    gate.check(s.tolerances, "speed_drift", drift);
    gate.check(s.tolerances, "period", period_error);
    RunResult r;
    r.pass = gate.pass;
    r.summary = {{"norms", gate.norms}, {"orders", gate.orders}, {"checks", gate.checks}};
    return r;
}

inline RunResult run_fluid(const Scenario& s, OutputBundle& out) {
    const Grid g = make_grid(s.grid);
    ClebschFieldState st = fluid_initial(s, g);
    EvolveOptions opt;
    opt.cfl = s.integrator.cfl;
    const double t0 = st.t;
    const double m0 = total_mass(st);

    std::ostringstream& csv = out.file("fields.csv");
    write_snapshot_header(csv, g);
    write_snapshot_rows(csv, st, compute_kinematics(st));
    for (std::size_t i = 0; i < s.integrator.n_steps; ++i) {
        st = evolve_step(st, s.integrator.dt, opt);
        st.t = t0 + static_cast<double>(i + 1) * s.integrator.dt;
        if ((i + 1) % s.output.stride == 0 || i + 1 == s.integrator.n_steps)
            write_snapshot_rows(csv, st, compute_kinematics(st));
    }
    out.file("fields.json") << snapshot_sidecar(st).dump(2) << '\n';

    Gate gate;
    const double m1 = total_mass(st);
    const double drift = m0 != 0.0 ? std::abs(m1 - m0) / std::abs(m0) : std::abs(m1 - m0);
    gate.norms["mass_initial"] = m0;
    gate.norms["mass_final"] = m1;
    gate.norms["mass_drift"] = drift;
    std::optional<double> exact_error;
    if (const auto ex = fluid_exact(s, g, st.t)) {
        const Kinematics ka = compute_kinematics(st);
        const Kinematics kb = compute_kinematics(*ex);
        double e = 0.0;
        for (std::size_t c = 0; c < g.cells(); ++c) {
            e = std::max(e, std::abs(st.rho[c] - ex->rho[c]));
            e = std::max(e, norm(ka.v[c] - kb.v[c]));
            e = std::max(e, std::abs(st.alpha[c] - ex->alpha[c]));
            e = std::max(e, std::abs(st.beta[c] - ex->beta[c]));
        }
        exact_error = e;
        gate.norms["exact_error"] = e;
    }
    gate.check(s.tolerances, "mass_drift", drift);
    gate.check(s.tolerances, "exact_error", exact_error);
    RunResult r;
    r.pass = gate.pass;
    r.summary = {{"norms", gate.norms}, {"orders", gate.orders}, {"checks", gate.checks}};
    return r;
}

inline RunResult run_residual_study(const Scenario& s, OutputBundle& out) {
    const std::vector<std::size_t> ns = study_resolutions(s);
    ResidualOptions ropt;
    ropt.rho_floor = s.convergence.rho_floor;
    const ConvergenceResult res =
        convergence_study([&](std::size_t n) { return centred_case(s, n); }, ns, s.convergence.form, ropt);
    write_residual_csv(out.file("residuals.csv"), res);
    write_residual_text(out.file("residuals.txt"), res);

    Gate gate;
    const ResidualReport& fine = res.reports.back();
    gate.norms["n"] = res.resolutions.back();
    gate.norms["l2"] = fine.l2;
    gate.norms["linf"] = fine.linf;
    gate.norms["masked_cells"] = fine.masked_cells;
    gate.norms["terms"] = {{"inertia", fine.terms.inertia},
                           {"pressure", fine.terms.pressure},
                           {"electric", fine.terms.electric},
                           {"magnetic", fine.terms.magnetic}};
    json per = json::array();
    for (std::size_t i = 0; i < res.reports.size(); ++i)
        per.push_back({{"n", res.resolutions[i]}, {"dt", res.reports[i].dt}, {"l2", res.reports[i].l2},
                       {"linf", res.reports[i].linf}});
    gate.norms["resolutions"] = per;
    gate.orders["monotone"] = res.monotone;
    gate.orders["l2"] = res.order_l2 ? json(*res.order_l2) : json(nullptr);
    gate.orders["linf"] = res.order_linf ? json(*res.order_linf) : json(nullptr);
    gate.check(s.tolerances, "l2", fine.l2);
    gate.check(s.tolerances, "linf", fine.linf);
    gate.check(s.tolerances, "min_order", res.order_l2);
    RunResult r;
    r.pass = gate.pass;
    r.summary = {{"norms", gate.norms}, {"orders", gate.orders}, {"checks", gate.checks}};
    return r;
}

inline RunResult run_fisher(const Scenario& s, OutputBundle& out) {
    const Grid g = make_grid(s.grid);
    QuantumFieldState q;
    if (s.initial.preset == Preset::gaussian_packet) {
        q = make_gaussian_packet(g, s.initial.params, s.quantum.hbar);
    } else {
        const ClebschFieldState cs = fluid_initial(s, g);
        const Kinematics kin = compute_kinematics(cs);
        q.grid = g;
        q.rho0 = kin.rho0;
        q.alpha = cs.alpha;
        q.beta = cs.beta;
        q.nu = cs.nu;
        q.m = s.initial.params.mass;
        q.hbar = s.quantum.hbar;
    }
    QuantumLagrangianOptions opt;
    opt.mode = s.quantum.mode;
    opt.eos = s.eos;
    // Static states need a time level for d_t nu: nu(t) = -c^2 t at rest.
    QuantumFieldState prev = q, next = q;
    const double dt = s.integrator.dt;
    prev.t = q.t - dt;
    next.t = q.t + dt;
    const ClebschFieldState probe = to_clebsch_state(q, s.field, s.k, s.c, opt.mode == InternalEnergyMode::fisher_only
                                                                             ? BarotropicEOS::dust()
                                                                             : s.eos);
    const ClebschRates rates = clebsch_rates(probe);
    for (std::size_t c = 0; c < g.cells(); ++c) {
        prev.nu[c] = q.nu[c] - dt * rates.nu[c];
        next.nu[c] = q.nu[c] + dt * rates.nu[c];
        prev.alpha[c] = q.alpha[c] - dt * rates.alpha[c];
        next.alpha[c] = q.alpha[c] + dt * rates.alpha[c];
        prev.beta[c] = q.beta[c] - dt * rates.beta[c];
        next.beta[c] = q.beta[c] + dt * rates.beta[c];
    }
    opt.levels = QuantumTimeLevels{&prev, &next, dt};
    const ScalarField fisher = fisher_density(q, s.c);
    const ScalarField lag = quantum_lagrangian_density(q, s.field, s.k, s.c, opt);

    ClebschFieldState snap = probe;
    const Kinematics kin = compute_kinematics(snap);
    const ExtraColumn extra[] = {{"fisher_density", fisher}, {"lagrangian_density", lag}};
    std::ostringstream& csv = out.file("fields.csv");
    write_snapshot_header(csv, g, extra);
    write_snapshot_rows(csv, snap, kin, extra);
    out.file("fields.json") << snapshot_sidecar(snap).dump(2) << '\n';

    Gate gate;
    const double scale = s.quantum.hbar > 0.0 ? 2.0 * q.m / (s.quantum.hbar * s.quantum.hbar) : 0.0;
    const double integral = integrate(g, fisher) * scale;
    gate.norms["fisher_integral"] = integral;
    gate.norms["lagrangian_integral"] = integrate(g, lag);
    std::optional<double> rel;
    if (s.initial.preset == Preset::gaussian_packet && s.quantum.hbar > 0.0) {
        const double sigma = s.initial.params.sigma;
        const double expected = static_cast<double>(g.dim) / (2.0 * sigma * sigma);
        rel = std::abs(integral - expected) / expected;
        gate.norms["fisher_integral_expected"] = expected;
        gate.norms["fisher_integral_rel_error"] = *rel;
    }
    gate.check(s.tolerances, "fisher_integral", rel);
    RunResult r;
    r.pass = gate.pass;
    r.summary = {{"norms", gate.norms}, {"orders", gate.orders}, {"checks", gate.checks}};
    return r;
}

} // namespace detail

/// Runs the scenario and writes its artifacts into `out_dir` (the scenario's
/// own output.dir when empty). Module errors propagate; nothing is written
/// unless the run completes.
inline RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir = {}) {
    detail::OutputBundle out(out_dir.empty() ? std::filesystem::path(s.output.dir) : out_dir);
    RunResult r;
    switch (s.kind) {
    case ScenarioKind::particle: r = detail::run_particle(s, out); break;
    case ScenarioKind::fluid: r = detail::run_fluid(s, out); break;
    case ScenarioKind::euler_check:
    case ScenarioKind::convergence: r = detail::run_residual_study(s, out); break;
    case ScenarioKind::fisher: r = detail::run_fisher(s, out); break;
    }
    json tol = json::object();
    for (const auto& [key, value] : s.tolerances.limits) tol[key] = value;
    json summary{{"scenario_kind", std::string(to_string(s.kind))},
                 {"norms", r.summary["norms"]},
                 {"orders", r.summary["orders"]},
                 {"tolerances", tol},
                 {"checks", r.summary["checks"]},
                 {"pass", r.pass},
                 {"config", to_json(s)}};
    r.summary = summary;
    out.file("summary.json") << summary.dump(2) << '\n';
    r.files = out.commit();
    return r;
}

} // namespace relflow
