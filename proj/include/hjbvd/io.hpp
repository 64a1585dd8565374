#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hjbvd/ergodic.hpp"

namespace hjbvd::io {

using json = nlohmann::json;

/// Shortest round-trip formatting; artifacts must be byte-identical across runs.
inline std::string num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    return f;
}

/// Columns `x,value` (1D) or `x,y,value` (2D), one row per node.
inline void write_field_csv(std::ostream& os, const Grid& g, const std::vector<double>& values) {
    os << (g.dim() == 2 ? "x,y,value\n" : "x,value\n");
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vector p = g.point(i);
        os << num(p[0]);
        if (g.dim() == 2) os << ',' << num(p[1]);
        os << ',' << num(values[i]) << '\n';
    }
}

inline void write_field_csv(const std::filesystem::path& path, const ValueFunction& v) {
    auto f = open_out(path);
    write_field_csv(f, v.grid, v.values);
}

/// Columns `node,control,weight`; only nonzero weights. Boundary mass rows
/// carry control `boundary`.
inline void write_measure_csv(std::ostream& os, const DiscreteOperator& op, const MeasurePair& mp) {
    const std::size_t K = op.n_controls();
    os << "node,control,weight\n";
    for (std::size_t r = 0; r < mp.mu1.size(); ++r) {
        if (mp.mu1[r] == 0.0) continue;
        os << r / K << ',' << r % K << ',' << num(mp.mu1[r]) << '\n';
    }
    for (std::size_t i = 0; i < mp.mu2.size(); ++i) {
        if (mp.mu2[i] == 0.0) continue;
        os << i << ",boundary," << num(mp.mu2[i]) << '\n';
    }
}

inline void write_measure_csv(const std::filesystem::path& path, const DiscreteOperator& op, const MeasurePair& mp) {
    auto f = open_out(path);
    write_measure_csv(f, op, mp);
}

/// gnuplot layout: `x value` (1D) or `x y value` with a blank line between
/// grid rows (2D, for splot).
inline void write_profile_dat(const std::filesystem::path& path, const ValueFunction& v, const std::string& title) {
    auto f = open_out(path);
    f << "# " << title << '\n';
    const Grid& g = v.grid;
    if (g.dim() == 1) {
        for (std::size_t i = 0; i < g.size(); ++i) f << num(g.point(i)[0]) << ' ' << num(v.values[i]) << '\n';
        return;
    }
    for (std::size_t i0 = 0; i0 < g.shape()[0]; ++i0) {
        for (std::size_t i1 = 0; i1 < g.shape()[1]; ++i1) {
            const std::size_t n = g.index(i0, i1);
            const Vector p = g.point(n);
            f << num(p[0]) << ' ' << num(p[1]) << ' ' << num(v.values[n]) << '\n';
        }
        f << '\n';
    }
}

/// File-name label for a discount value, e.g. 0.001 -> "0.001".
inline std::string lambda_label(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", lambda);
    return buf;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

/// Finite doubles as numbers, the rest as strings ("nan", "inf").
inline json jnum(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline json to_json(const Grid& g) {
    json j;
    j["dim"] = g.dim();
    j["shape"] = g.shape();
    j["h"] = std::vector<double>(g.h().data(), g.h().data() + g.h().size());
    return j;
}

/// Stencils as (row, column, weight) triplets over Bellman rows r = node * K + control.
inline json to_json(const DiscreteOperator& op) {
    json j;
    j["name"] = op.name;
    j["boundary"] = to_string(op.kind);
    j["grid"] = to_json(op.grid);
    j["nodes"] = op.n_nodes();
    j["controls"] = op.n_controls();
    json roles = json::array();
    for (NodeRole r : op.role) roles.push_back(to_string(r));
    j["roles"] = std::move(roles);
    json trip = json::array();
    json cost = json::array();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        if (!op.has_bellman(i)) continue;
        for (std::size_t a = 0; a < op.n_controls(); ++a) {
            const std::size_t r = op.row_index(i, a);
            for (const auto& e : op.row(r)) trip.push_back({r, e.col, e.w});
            cost.push_back({r, op.cost[r]});
        }
    }
    j["stencil"] = std::move(trip);
    j["cost"] = std::move(cost);
    json btrip = json::array();
    for (std::size_t i = 0; i < op.n_nodes(); ++i) {
        for (const auto& e : op.boundary_row(i)) btrip.push_back({i, e.col, e.w});
    }
    j["boundary_stencil"] = std::move(btrip);
    j["datum"] = op.datum;
    return j;
}

inline json to_json(const ValueFunction& v, bool with_values = true) {
    json j;
    j["method"] = v.method;
    j["lambda"] = v.lambda;
    j["residual"] = jnum(v.residual);
    j["tol"] = v.tol;
    j["iterations"] = v.iterations;
    j["contraction"] = jnum(v.contraction);
    j["grid"] = to_json(v.grid);
    if (with_values) j["values"] = v.values;
    return j;
}

inline json to_json(const ErgodicResult& r) {
    json j;
    j["method"] = to_string(r.method);
    j["c"] = jnum(r.c);
    j["c_unclamped"] = jnum(r.c_unclamped);
    j["dichotomy"] = to_string(r.dichotomy);
    json res = json::object();
    for (const auto& [k, v] : r.residuals) res[k] = jnum(v);
    j["residuals"] = std::move(res);
    j["warnings"] = r.warnings;
    if (!r.schedule.empty()) {
        j["schedule"] = r.schedule;
        j["lambda_v_reference"] = r.lambda_v_ref;
        j["reference_node"] = r.reference_node;
    }
    return j;
}

inline json to_json(const RouteComparison& rc) {
    json j;
    j["vanishing_discount"] = to_json(rc.vanishing);
    j["subsolution_lp"] = to_json(rc.subsolution);
    j["measure_lp"] = to_json(rc.measure);
    j["vanishing_vs_subsolution"] = rc.vanishing_vs_subsolution;
    j["subsolution_vs_measure"] = rc.subsolution_vs_measure;
    j["dichotomy_consistent"] = rc.dichotomy_consistent;
    return j;
}

inline json to_json(const MembershipReport& m) {
    json j;
    j["samples"] = m.samples;
    j["min_pairing"] = jnum(m.min_pairing);
    j["canonical_slack"] = m.canonical_slack;
    j["violations"] = m.violations.size();
    j["seed"] = m.seed;
    return j;
}

inline json to_json(const ValidationReport& rep) {
    json j = json::array();
    for (const auto& c : rep.checks) {
        j.push_back({{"name", c.name},
                     {"passed", c.passed},
                     {"fatal", c.fatal},
                     {"worst_value", jnum(c.worst_value)},
                     {"detail", c.detail}});
    }
    return j;
}

}  // namespace hjbvd::io
