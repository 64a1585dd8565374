#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "hjbvd/problem.hpp"

namespace hjbvd {

/// Coefficient tabulated as values[node][control] on a uniform grid over the
/// domain; evaluated by multilinear interpolation in x. A one-node table is
/// constant in x, a one-column row is shared by every control.
struct CoefficientTable {
    std::vector<std::size_t> shape;
    std::vector<std::vector<double>> values;

    double eval(const Box& box, const Vector& x, std::size_t control) const {
        const auto at = [&](std::size_t node) {
            const auto& row = values[node];
            return row.size() == 1 ? row[0] : row[control];
        };
        if (values.size() == 1) return at(0);
        std::array<std::size_t, 2> i0{0, 0};
        std::array<double, 2> t{0.0, 0.0};
        for (std::size_t k = 0; k < shape.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            const double n = static_cast<double>(shape[k] - 1);
            const double s = std::clamp((x[kk] - box.lo[kk]) / (box.hi[kk] - box.lo[kk]), 0.0, 1.0) * n;
            i0[k] = std::min(static_cast<std::size_t>(s), shape[k] - 2);
            t[k] = s - static_cast<double>(i0[k]);
        }
        if (shape.size() == 1) return (1.0 - t[0]) * at(i0[0]) + t[0] * at(i0[0] + 1);
        const auto idx = [&](std::size_t a, std::size_t b) { return a + shape[0] * b; };
        return (1.0 - t[0]) * (1.0 - t[1]) * at(idx(i0[0], i0[1])) + t[0] * (1.0 - t[1]) * at(idx(i0[0] + 1, i0[1])) +
               (1.0 - t[0]) * t[1] * at(idx(i0[0], i0[1] + 1)) + t[0] * t[1] * at(idx(i0[0] + 1, i0[1] + 1));
    }
};

namespace detail {

class ConfigReader {
public:
    ConfigReader(std::string source, std::filesystem::path base) : source_(std::move(source)), base_(std::move(base)) {}

    [[noreturn]] void fail(const toml::node* node, const std::string& field, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        if (node && node->source().begin.line) os << ':' << node->source().begin.line;
        os << ": " << field << ": " << msg;
        throw ConfigError(os.str());
    }

    const toml::table& section(const toml::table& root, const char* name, bool required = true) const {
        static const toml::table empty;
        const toml::node* n = root.get(name);
        if (!n) {
            if (required) fail(&root, std::string("[") + name + "]", "missing section");
            return empty;
        }
        if (!n->is_table()) fail(n, std::string("[") + name + "]", "expected a table");
        return *n->as_table();
    }

    double number(const toml::node* n, const std::string& field) const {
        if (auto v = n->value<double>()) return *v;
        fail(n, field, "expected a number");
    }

    double number_or(const toml::table& t, const char* key, double dflt, const std::string& sec) const {
        const toml::node* n = t.get(key);
        return n ? number(n, sec + "." + key) : dflt;
    }

    std::size_t count(const toml::node* n, const std::string& field) const {
        auto v = n->value<std::int64_t>();
        if (!v || *v <= 0) fail(n, field, "expected a positive integer");
        return static_cast<std::size_t>(*v);
    }

    std::vector<double> numbers(const toml::node* n, const std::string& field) const {
        const toml::array* a = n->as_array();
        if (!a) fail(n, field, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *a) out.push_back(number(&e, field));
        return out;
    }

    Box domain(const toml::table& root) const {
        const auto& d = section(root, "domain");
        const toml::node* lo = d.get("lo");
        const toml::node* hi = d.get("hi");
        if (!lo || !hi) fail(&d, "[domain]", "needs lo and hi");
        const auto read = [&](const toml::node* n, const char* key) {
            if (n->is_array()) return numbers(n, std::string("domain.") + key);
            return std::vector<double>{number(n, std::string("domain.") + key)};
        };
        const auto l = read(lo, "lo"), h = read(hi, "hi");
        if (l.size() != h.size() || l.empty() || l.size() > 2) fail(lo, "domain", "lo and hi need 1 or 2 matching entries");
        for (std::size_t k = 0; k < l.size(); ++k) {
            if (!(h[k] > l[k])) fail(hi, "domain.hi", "must exceed domain.lo on every axis");
        }
        return l.size() == 1 ? interval(l[0], h[0]) : rectangle(l[0], h[0], l[1], h[1]);
    }

    ControlSet controls(const toml::table& root, std::size_t dim) const {
        const auto& c = section(root, "controls");
        const toml::node* kn = c.get("kind");
        const std::string kind = kn ? kn->value_or<std::string>("") : (dim == 1 ? "uniform" : "disk");
        ControlSet cs;
        if (kind == "uniform") {
            const toml::node* cnt = c.get("count");
            cs = uniform_controls_1d(number_or(c, "radius", 1.0, "controls"),
                                     cnt ? count(cnt, "controls.count") : defaults::control_samples);
        } else if (kind == "disk") {
            const toml::node* dn = c.get("directions");
            cs = disk_controls(dn ? count(dn, "controls.directions") : 16);
        } else if (kind == "list") {
            const toml::node* vn = c.get("values");
            if (!vn || !vn->is_array()) fail(vn ? vn : &c, "controls.values", "expected an array");
            for (const auto& e : *vn->as_array()) {
                const auto v = e.is_array() ? numbers(&e, "controls.values") : std::vector<double>{number(&e, "controls.values")};
                cs.samples.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
            }
            if (cs.samples.empty()) fail(vn, "controls.values", "needs at least one control");
        } else {
            fail(kn, "controls.kind", "expected uniform, disk or list, got '" + kind + "'");
        }
        if (const toml::node* tr = c.get("truncation_radius")) cs.truncation_radius = number(tr, "controls.truncation_radius");
        if (const toml::node* lb = c.get("label")) cs.label = lb->value_or<std::string>("");
        return cs;
    }

    std::vector<std::vector<double>> read_csv(const toml::node* n, const std::string& field, const std::string& rel) const {
        const auto path = base_ / rel;
        std::ifstream f(path);
        if (!f) fail(n, field, "cannot read " + path.string());
        std::vector<std::vector<double>> rows;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                try {
                    std::size_t used = 0;
                    row.push_back(std::stod(cell, &used));
                } catch (const std::exception&) {
                    fail(n, field, path.filename().string() + " line " + std::to_string(lineno) + ": not a number '" + cell + "'");
                }
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }

    /// number | [per control] | [[per control] per node] | "file.csv"
    CoefficientTable table(const toml::table& t, const char* key, std::size_t n_controls,
                           const std::vector<std::size_t>& tab_shape, bool required) const {
        const std::string field = std::string("coefficients.") + key;
        const toml::node* n = t.get(key);
        CoefficientTable out;
        out.shape = tab_shape;
        if (!n) {
            if (required) fail(&t, field, "missing");
            out.values = {{0.0}};
            return out;
        }
        std::vector<std::vector<double>> rows;
        if (n->is_string()) {
            rows = read_csv(n, field, n->value_or<std::string>(""));
        } else if (n->is_array()) {
            const toml::array& a = *n->as_array();
            if (!a.empty() && a[0].is_array()) {
                for (const auto& e : a) rows.push_back(numbers(&e, field));
            } else {
                rows.push_back(numbers(n, field));
            }
        } else {
            rows.push_back({number(n, field)});
        }
        std::size_t nodes = 1;
        for (std::size_t s : tab_shape) nodes *= s;
        if (rows.size() != 1 && rows.size() != nodes) {
            fail(n, field, std::to_string(rows.size()) + " node rows, expected 1 or " + std::to_string(nodes) +
                               " (coefficients.nodes)");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != 1 && rows[i].size() != n_controls) {
                fail(n, field, "row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                   " entries, expected 1 or " + std::to_string(n_controls) + " (one per control)");
            }
            for (double v : rows[i]) {
                if (!std::isfinite(v)) fail(n, field, "non-finite entry in row " + std::to_string(i));
            }
        }
        out.values = std::move(rows);
        return out;
    }

    Coefficients coefficients(const toml::table& root, const Box& box, const ControlSet& cs) const {
        const auto& c = section(root, "coefficients");
        const std::size_t dim = box.dim();
        std::vector<std::size_t> tab(dim, 1);
        if (const toml::node* nn = c.get("nodes")) {
            if (nn->is_array()) {
                const auto v = numbers(nn, "coefficients.nodes");
                if (v.size() != dim) fail(nn, "coefficients.nodes", "needs one entry per axis");
                for (std::size_t k = 0; k < dim; ++k) tab[k] = static_cast<std::size_t>(v[k]);
            } else {
                tab.assign(dim, count(nn, "coefficients.nodes"));
            }
            for (std::size_t s : tab) {
                if (s < 2) fail(nn, "coefficients.nodes", "need at least 2 nodes per axis to interpolate");
            }
        }
        const std::size_t K = cs.size();
        // Tables are looked up by control index; samples are matched exactly.
        auto index_of = [samples = cs.samples](const Vector& a) {
            for (std::size_t k = 0; k < samples.size(); ++k) {
                if (samples[k].size() == a.size() && samples[k] == a) return k;
            }
            throw DomainError("control not in the configured sample set");
        };
        Coefficients out;
        out.cost = [box, idx = index_of, T = table(c, "cost", K, tab, true)](const Vector& x, const Vector& a) {
            return T.eval(box, x, idx(a));
        };
        if (dim == 1) {
            auto A = table(c, "diffusion", K, tab, false);
            auto B = table(c, "drift", K, tab, false);
            out.diffusion = [box, idx = index_of, A](const Vector& x, const Vector& a) {
                return Matrix::Constant(1, 1, A.eval(box, x, idx(a)));
            };
            out.drift = [box, idx = index_of, B](const Vector& x, const Vector& a) {
                return Vector::Constant(1, B.eval(box, x, idx(a)));
            };
        } else {
            auto axx = table(c, "diffusion_xx", K, tab, false);
            auto axy = table(c, "diffusion_xy", K, tab, false);
            auto ayy = table(c, "diffusion_yy", K, tab, false);
            auto bx = table(c, "drift_x", K, tab, false);
            auto by = table(c, "drift_y", K, tab, false);
            out.diffusion = [box, idx = index_of, axx, axy, ayy](const Vector& x, const Vector& a) {
                const std::size_t k = idx(a);
                Matrix m(2, 2);
                m << axx.eval(box, x, k), axy.eval(box, x, k), axy.eval(box, x, k), ayy.eval(box, x, k);
                return m;
            };
            out.drift = [box, idx = index_of, bx, by](const Vector& x, const Vector& a) {
                const std::size_t k = idx(a);
                Vector v(2);
                v << bx.eval(box, x, k), by.eval(box, x, k);
                return v;
            };
        }
        return out;
    }

    BoundaryCondition boundary(const toml::table& root, std::size_t dim) const {
        const auto& b = section(root, "boundary");
        const toml::node* kn = b.get("kind");
        if (!kn || !kn->is_string()) fail(kn ? kn : &b, "boundary.kind", "expected a string");
        BoundaryKind kind;
        try {
            kind = parse_boundary_kind(kn->value_or<std::string>(""));
        } catch (const ConfigError& e) {
            fail(kn, "boundary.kind", e.what());
        }
        const double g = number_or(b, "datum", 0.0, "boundary");
        switch (kind) {
            case BoundaryKind::StateConstraint: return BoundaryCondition::state_constraint();
            case BoundaryKind::Dirichlet: return BoundaryCondition::dirichlet(BoundaryCondition::constant(g));
            case BoundaryKind::Neumann: break;
        }
        // gamma = normal_weight * n + tangential_weight * tau, tau = n rotated by +90 degrees.
        double wn = 1.0, wt = 0.0;
        if (const toml::node* dn = b.get("direction")) {
            if (dn->is_string()) {
                if (dn->value_or<std::string>("") != "normal") fail(dn, "boundary.direction", "expected \"normal\" or a table");
            } else if (const toml::table* dt = dn->as_table()) {
                wn = number_or(*dt, "normal", 1.0, "boundary.direction");
                wt = number_or(*dt, "tangential", 0.0, "boundary.direction");
                if (dim == 1 && wt != 0.0) fail(dn, "boundary.direction.tangential", "has no meaning in 1D");
            } else {
                fail(dn, "boundary.direction", "expected \"normal\" or a table");
            }
        }
        DirectionFn gamma = [wn, wt](const Vector&, const Vector& n) {
            Vector v = wn * n;
            if (n.size() == 2) {
                v[0] -= wt * n[1];
                v[1] += wt * n[0];
            }
            return v;
        };
        return BoundaryCondition::neumann(BoundaryCondition::constant(g), std::move(gamma));
    }

private:
    std::string source_;
    std::filesystem::path base_;
};

}  // namespace detail

/// Parses a problem config. `source` names the input in diagnostics and
/// relative CSV paths resolve against `base`.
inline ProblemSpec parse_config(std::string_view text, const std::string& source = "<config>",
                                const std::filesystem::path& base = ".") {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
    }
    detail::ConfigReader rd(source, base);
    ProblemSpec spec;
    spec.name = root["name"].value_or<std::string>(std::filesystem::path(source).stem().string());
    spec.domain = rd.domain(root);
    spec.controls = rd.controls(root, spec.domain.dim());
    spec.coeffs = rd.coefficients(root, spec.domain, spec.controls);
    spec.bc = rd.boundary(root, spec.domain.dim());
    return spec;
}

inline ProblemSpec load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string(), path.parent_path());
}

}  // namespace hjbvd
