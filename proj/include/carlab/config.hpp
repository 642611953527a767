#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "carlab/errors.hpp"
#include "carlab/geometry.hpp"
#include "carlab/io.hpp"
#include "carlab/riemannian.hpp"
#include "carlab/solvers.hpp"
#include "carlab/stability.hpp"

namespace carlab {

namespace detail {

/// Strict JSON object view: every key must be consumed, unknown keys fail
/// validation instead of being silently absorbed.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigInvalid(path_ + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T require(const std::string& key) {
        if (!j_.contains(key)) throw ConfigInvalid(path_ + " is missing key '" + key + "'");
        seen_.insert(key);
        return get_as<T>(key);
    }

    template <typename T>
    T value_or(const std::string& key, T fallback) {
        if (!j_.contains(key)) return fallback;
        seen_.insert(key);
        return get_as<T>(key);
    }

    nlohmann::json take(const std::string& key) {
        if (!j_.contains(key)) throw ConfigInvalid(path_ + " is missing key '" + key + "'");
        seen_.insert(key);
        return j_.at(key);
    }

    std::optional<nlohmann::json> take_optional(const std::string& key) {
        if (!j_.contains(key)) return std::nullopt;
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (seen_.count(it.key()) == 0)
                throw ConfigInvalid(path_ + " has unknown key '" + it.key() + "'");
        }
    }

private:
    template <typename T>
    T get_as(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigInvalid(path_ + "." + key + " has the wrong type");
        }
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline BoundaryRole parse_role(const std::string& s, const std::string& path) {
    if (s == "S") return BoundaryRole::S;
    if (s == "Gamma") return BoundaryRole::Gamma;
    if (s == "artificial") return BoundaryRole::artificial;
    throw ConfigInvalid(path + ": unknown boundary role '" + s + "'");
}

inline BoundaryId parse_boundary_id(const std::string& s, const std::string& path) {
    if (s == "inner") return BoundaryId::inner;
    if (s == "outer") return BoundaryId::outer;
    throw ConfigInvalid(path + ": unknown boundary id '" + s + "'");
}

}  // namespace detail

/// Geometric parameter sequence {start, factor, count}.
struct GeometricGrid {
    double start = 1.0;
    double factor = 2.0;
    int count = 1;

    std::vector<double> values() const {
        std::vector<double> out;
        double v = start;
        for (int i = 0; i < count; ++i) {
            out.push_back(v);
            v *= factor;
        }
        return out;
    }
};

struct GeometryConfig {
    std::string kind = "annulus";
    double r_inner = 1.0;
    double r_outer = 2.0;
    int n_r = 64;
    int n_theta = 128;
    BoundaryRole inner_role = BoundaryRole::S;
    BoundaryRole outer_role = BoundaryRole::Gamma;

    DomainPtr build() const {
        if (kind == "disk") return build_disk(r_outer, n_r, n_theta, outer_role);
        return build_annulus(r_inner, r_outer, n_r, n_theta,
                             {{BoundaryId::inner, inner_role}, {BoundaryId::outer, outer_role}});
    }

    GeometryConfig refined() const {
        GeometryConfig g = *this;
        g.n_r *= 2;
        g.n_theta *= 2;
        return g;
    }
};

struct WeightConfig {
    BoundaryId upsilon = BoundaryId::inner;
    double delta_min = 1e-3;
    GeometricGrid gamma_grid{3.0, 2.0, 1};
    GeometricGrid s_grid{5.0, 2.0, 6};
};

struct SolverConfig {
    double tol = 1e-10;
    double truncation_tol = 1e-8;
    double r_infinity = 0.0;
};

struct ParabolicConfig {
    double T = 1.0;
    int n_t = 128;
    double eps_over_T = 0.25;
};

struct ProblemConfig {
    std::string kind = "interior";  // interior | exterior | parabolic
    double r_S = 1.0;
    double gamma_radius = 0.5;
    int n_r = 64;
    int n_theta = 128;
    FourierTrace data;  // boundary datum for `solve`
};

struct AdmissibleConfig {
    double alpha = 1.0;
    double beta = 2.0;
    int fourier_degree = 4;
    int time_degree = 2;
    std::uint64_t seed = 0;
    HarmonicProfile u0;
    bool separable = false;
    double ramp = 1.0;
};

struct StudyConfig {
    int count = 100;
    bool refine_worst = true;
    bool refine_sweep = false;
    int scale_check_count = 0;
};

struct ExperimentConfig {
    std::optional<GeometryConfig> geometry;
    MetricSpec metric;
    double potential_value = 0.0;
    double potential_eta = 0.0;
    WeightConfig weight;
    SolverConfig solver;
    ParabolicConfig parabolic;
    std::optional<ProblemConfig> problem;
    AdmissibleConfig admissible;
    StudyConfig study;
    int threads = 0;
    std::filesystem::path output_dir = "out";
    ordered_json echo;  // the parsed config, for provenance in reports
};

namespace detail {

inline GeometricGrid parse_grid(const nlohmann::json& j, const std::string& path) {
    StrictObject o(j, path);
    GeometricGrid g;
    g.start = o.require<double>("start");
    g.factor = o.value_or<double>("factor", 2.0);
    g.count = o.require<int>("count");
    o.finish();
    if (g.count < 1 || !(g.start > 0.0) || !(g.factor > 0.0))
        throw ConfigInvalid(path + ": grid needs start > 0, factor > 0, count >= 1");
    return g;
}

inline FourierTrace parse_trace(const nlohmann::json& j, const std::string& path) {
    StrictObject o(j, path);
    FourierTrace t;
    t.c0 = o.require<double>("c0");
    if (auto h = o.take_optional("harmonics")) {
        if (!h->is_array()) throw ConfigInvalid(path + ".harmonics must be an array");
        for (const auto& pair : *h) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigInvalid(path + ".harmonics entries must be [cos, sin] pairs");
            t.ck.push_back(pair[0].get<double>());
            t.dk.push_back(pair[1].get<double>());
        }
    }
    o.finish();
    return t;
}

inline HarmonicProfile parse_profile(const nlohmann::json& j, const std::string& path) {
    StrictObject o(j, path);
    HarmonicProfile p;
    p.c0 = o.require<double>("c0");
    if (auto h = o.take_optional("harmonics")) {
        if (!h->is_array()) throw ConfigInvalid(path + ".harmonics must be an array");
        for (const auto& pair : *h) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigInvalid(path + ".harmonics entries must be [cos, sin] pairs");
            p.harmonics.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
    }
    o.finish();
    return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
    detail::StrictObject top(root, "config");
    ExperimentConfig cfg;
    cfg.echo = root;

    if (auto g = top.take_optional("geometry")) {
        detail::StrictObject o(*g, "geometry");
        GeometryConfig geo;
        geo.kind = o.value_or<std::string>("kind", "annulus");
        if (geo.kind != "annulus" && geo.kind != "disk")
            throw ConfigInvalid("geometry.kind must be 'annulus' or 'disk'");
        geo.r_inner = o.value_or<double>("r_inner", 0.0);
        geo.r_outer = o.require<double>("r_outer");
        geo.n_r = o.require<int>("n_r");
        geo.n_theta = o.require<int>("n_theta");
        if (auto tags = o.take_optional("tags")) {
            detail::StrictObject t(*tags, "geometry.tags");
            if (geo.kind == "annulus")
                geo.inner_role =
                    detail::parse_role(t.require<std::string>("inner"), "geometry.tags.inner");
            geo.outer_role =
                detail::parse_role(t.require<std::string>("outer"), "geometry.tags.outer");
            t.finish();
        }
        o.finish();
        cfg.geometry = geo;
    }

    if (auto m = top.take_optional("metric")) {
        detail::StrictObject o(*m, "metric");
        cfg.metric.preset = o.value_or<std::string>("preset", "euclidean");
        cfg.metric.conformal_factor = o.value_or<double>("conformal_factor", 1.0);
        cfg.metric.amplitude = o.value_or<double>("amplitude", 0.5);
        cfg.metric.bump_center = o.value_or<double>("bump_center", 0.0);
        cfg.metric.bump_width = o.value_or<double>("bump_width", 0.0);
        o.finish();
        if (cfg.metric.preset != "euclidean" && cfg.metric.preset != "conformal" &&
            cfg.metric.preset != "anisotropic")
            throw ConfigInvalid("metric.preset must be euclidean, conformal or anisotropic");
    }

    if (auto p = top.take_optional("potential")) {
        detail::StrictObject o(*p, "potential");
        cfg.potential_value = o.value_or<double>("value", 0.0);
        cfg.potential_eta = o.value_or<double>("eta", 0.0);
        o.finish();
    }

    if (auto w = top.take_optional("weight")) {
        detail::StrictObject o(*w, "weight");
        cfg.weight.upsilon = detail::parse_boundary_id(
            o.value_or<std::string>("upsilon", "inner"), "weight.upsilon");
        cfg.weight.delta_min = o.value_or<double>("delta_min", 1e-3);
        if (auto gg = o.take_optional("gamma_grid"))
            cfg.weight.gamma_grid = detail::parse_grid(*gg, "weight.gamma_grid");
        if (auto sg = o.take_optional("s_grid"))
            cfg.weight.s_grid = detail::parse_grid(*sg, "weight.s_grid");
        o.finish();
    }

    if (auto s = top.take_optional("solver")) {
        detail::StrictObject o(*s, "solver");
        cfg.solver.tol = o.value_or<double>("tol", 1e-10);
        cfg.solver.truncation_tol = o.value_or<double>("truncation_tol", 1e-8);
        cfg.solver.r_infinity = o.value_or<double>("r_infinity", 0.0);
        o.finish();
    }

    if (auto s = top.take_optional("parabolic")) {
        detail::StrictObject o(*s, "parabolic");
        cfg.parabolic.T = o.value_or<double>("T", 1.0);
        cfg.parabolic.n_t = o.value_or<int>("n_t", 128);
        cfg.parabolic.eps_over_T = o.value_or<double>("eps_over_T", 0.25);
        o.finish();
        if (!(cfg.parabolic.eps_over_T > 0.0) || !(cfg.parabolic.eps_over_T < 0.5))
            throw ConfigInvalid("parabolic.eps_over_T must lie in (0, 1/2)");
    }

    if (auto pr = top.take_optional("problem")) {
        detail::StrictObject o(*pr, "problem");
        ProblemConfig p;
        p.kind = o.require<std::string>("kind");
        if (p.kind != "interior" && p.kind != "exterior" && p.kind != "parabolic")
            throw ConfigInvalid("problem.kind must be interior, exterior or parabolic");
        p.r_S = o.require<double>("r_S");
        p.gamma_radius = o.require<double>("gamma_radius");
        p.n_r = o.require<int>("n_r");
        p.n_theta = o.require<int>("n_theta");
        if (auto d = o.take_optional("data"))
            p.data = detail::parse_trace(*d, "problem.data");
        else
            p.data.c0 = 1.0;
        o.finish();
        cfg.problem = p;
    }

    if (auto a = top.take_optional("admissible")) {
        detail::StrictObject o(*a, "admissible");
        cfg.admissible.alpha = o.require<double>("alpha");
        cfg.admissible.beta = o.require<double>("beta");
        cfg.admissible.fourier_degree = o.value_or<int>("fourier_degree", 4);
        cfg.admissible.time_degree = o.value_or<int>("time_degree", 2);
        cfg.admissible.seed = o.value_or<std::uint64_t>("seed", 0);
        if (auto u0 = o.take_optional("u0"))
            cfg.admissible.u0 = detail::parse_profile(*u0, "admissible.u0");
        cfg.admissible.separable = o.value_or<bool>("separable", false);
        cfg.admissible.ramp = o.value_or<double>("ramp", 1.0);
        o.finish();
    }

    if (auto s = top.take_optional("study")) {
        detail::StrictObject o(*s, "study");
        cfg.study.count = o.value_or<int>("count", 100);
        cfg.study.refine_worst = o.value_or<bool>("refine_worst", true);
        cfg.study.refine_sweep = o.value_or<bool>("refine_sweep", false);
        cfg.study.scale_check_count = o.value_or<int>("scale_check_count", 0);
        o.finish();
    }

    cfg.threads = top.value_or<int>("threads", 0);

    if (auto out = top.take_optional("output")) {
        detail::StrictObject o(*out, "output");
        cfg.output_dir = o.require<std::string>("dir");
        o.finish();
    }

    top.finish();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot read config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace carlab
