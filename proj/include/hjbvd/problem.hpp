#pragma once

// Continuous control problem: Bellman operator of sup-over-controls form,
// boundary data and the built-in catalog of test instances.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hjbvd/constants.hpp"
#include "hjbvd/errors.hpp"

namespace hjbvd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed interval or axis-aligned rectangle.
struct Box {
    Vector lo;
    Vector hi;

    std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }
    Vector center() const { return 0.5 * (lo + hi); }
    bool contains(const Vector& x, double slack = 1e-12) const {
        for (Eigen::Index k = 0; k < lo.size(); ++k) {
            if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
        }
        return true;
    }
};

inline Box interval(double lo, double hi) {
    Box b{Vector(1), Vector(1)};
    b.lo[0] = lo;
    b.hi[0] = hi;
    return b;
}

inline Box rectangle(double x_lo, double x_hi, double y_lo, double y_hi) {
    Box b{Vector(2), Vector(2)};
    b.lo << x_lo, y_lo;
    b.hi << x_hi, y_hi;
    return b;
}

/// Finite sample of the control region.
struct ControlSet {
    std::vector<Vector> samples;
    /// Set when the natural control region is unbounded and was truncated.
    std::optional<double> truncation_radius;
    std::string label;

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const { return samples.empty() ? 0 : static_cast<std::size_t>(samples.front().size()); }
};

/// Uniform samples of [-radius, radius] (scalar controls).
inline ControlSet uniform_controls_1d(double radius, std::size_t count, std::string label = {}) {
    if (count == 0) throw DomainError("control sample count must be positive");
    ControlSet cs;
    cs.label = std::move(label);
    for (std::size_t k = 0; k < count; ++k) {
        Vector a(1);
        a[0] = count == 1 ? 0.0 : -radius + 2.0 * radius * static_cast<double>(k) / static_cast<double>(count - 1);
        cs.samples.push_back(a);
    }
    return cs;
}

/// `directions` unit vectors plus the origin (planar controls).
inline ControlSet disk_controls(std::size_t directions, std::string label = {}) {
    ControlSet cs;
    cs.label = std::move(label);
    cs.samples.push_back(Vector::Zero(2));
    for (std::size_t k = 0; k < directions; ++k) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(directions);
        Vector a(2);
        a << std::cos(th), std::sin(th);
        // Snap the axis directions so that upwind stencils are exact on them.
        for (Eigen::Index i = 0; i < 2; ++i) {
            if (std::abs(a[i]) < 1e-15) a[i] = 0.0;
        }
        cs.samples.push_back(a);
    }
    return cs;
}

using DiffusionFn = std::function<Matrix(const Vector& x, const Vector& control)>;
using DriftFn = std::function<Vector(const Vector& x, const Vector& control)>;
using CostFn = std::function<double(const Vector& x, const Vector& control)>;

/// a (diffusion, symmetric PSD), b (drift) and L (running cost).
struct Coefficients {
    DiffusionFn diffusion;
    DriftFn drift;
    CostFn cost;
};

enum class BoundaryKind { StateConstraint, Dirichlet, Neumann };

inline const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::StateConstraint: return "state_constraint";
        case BoundaryKind::Dirichlet: return "dirichlet";
        case BoundaryKind::Neumann: return "neumann";
    }
    return "?";
}

inline BoundaryKind parse_boundary_kind(const std::string& s) {
    if (s == "state_constraint" || s == "state-constraint" || s == "sc" || s == "state") {
        return BoundaryKind::StateConstraint;
    }
    if (s == "dirichlet" || s == "d") return BoundaryKind::Dirichlet;
    if (s == "neumann" || s == "n") return BoundaryKind::Neumann;
    throw ConfigError("unknown boundary kind '" + s + "' (expected state_constraint, dirichlet or neumann)");
}

using DatumFn = std::function<double(const Vector& x)>;
/// Oblique direction at a boundary point; receives the outward unit normal there.
using DirectionFn = std::function<Vector(const Vector& x, const Vector& normal)>;

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::StateConstraint;
    DatumFn datum;         // Dirichlet value or Neumann datum
    DirectionFn direction; // Neumann only

    static BoundaryCondition state_constraint() { return {BoundaryKind::StateConstraint, {}, {}}; }
    static BoundaryCondition dirichlet(DatumFn g) { return {BoundaryKind::Dirichlet, std::move(g), {}}; }
    static BoundaryCondition neumann(DatumFn g, DirectionFn gamma) {
        return {BoundaryKind::Neumann, std::move(g), std::move(gamma)};
    }
    /// gamma equal to the outward normal.
    static DirectionFn normal_direction() {
        return [](const Vector&, const Vector& n) { return n; };
    }
    static DatumFn constant(double value) {
        return [value](const Vector&) { return value; };
    }

    double g(const Vector& x) const { return datum ? datum(x) : 0.0; }
};

struct ProblemSpec {
    std::string name;
    Box domain;
    ControlSet controls;
    Coefficients coeffs;
    BoundaryCondition bc;

    std::size_t dim() const { return domain.dim(); }
};

// ---------------------------------------------------------------------------
// Bellman operator

/// sup over sampled controls of (-tr a X - b.p - L). Ties go to the first
/// maximizer in sample order; `argmax` receives its index when non-null.
inline double bellman_f(const ProblemSpec& spec, const Vector& x, const Vector& p, const Matrix& X,
                        std::size_t* argmax = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < spec.controls.size(); ++k) {
        const Vector& a = spec.controls.samples[k];
        const Matrix diff = spec.coeffs.diffusion(x, a);
        const double tr = (diff.array() * X.transpose().array()).sum();
        const double v = -tr - spec.coeffs.drift(x, a).dot(p) - spec.coeffs.cost(x, a);
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    if (argmax) *argmax = best_k;
    return best;
}

/// Rescaled operator t F(x, p/t, X/t) - chi(x), i.e. the Bellman operator
/// with running cost t L + chi.
inline double f_phi(const ProblemSpec& spec, double t, const std::function<double(const Vector&)>& chi,
                    const Vector& x, const Vector& p, const Matrix& X) {
    if (!(t > 0.0)) throw DomainError("f_phi: scale t must be positive");
    const double shift = chi ? chi(x) : 0.0;
    return t * bellman_f(spec, x, p / t, X / t) - shift;
}

// ---------------------------------------------------------------------------
// Catalog

namespace detail {

inline Coefficients first_order(std::function<Vector(const Vector&, const Vector&)> drift, CostFn cost,
                                std::size_t dim) {
    return Coefficients{
        [dim](const Vector&, const Vector&) { return Matrix::Zero(dim, dim).eval(); },
        std::move(drift),
        std::move(cost),
    };
}

inline BoundaryCondition homogeneous(BoundaryKind kind) {
    switch (kind) {
        case BoundaryKind::StateConstraint: return BoundaryCondition::state_constraint();
        case BoundaryKind::Dirichlet: return BoundaryCondition::dirichlet(BoundaryCondition::constant(0.0));
        case BoundaryKind::Neumann:
            return BoundaryCondition::neumann(BoundaryCondition::constant(0.0), BoundaryCondition::normal_direction());
    }
    return BoundaryCondition::state_constraint();
}

inline std::string fmt_param(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace detail

/// F(x, p) = |p| + m on (-1, 1).
///
/// Encoded as b(x, a) = -a, L(x, a) = -m with a sampled uniformly on [-1, 1]:
/// sup_a (a p) = |p| because the endpoints are samples, and -L = m. The
/// negative-cost sign convention keeps c = -lim lambda v^lambda consistent.
inline ProblemSpec eikonal_1d(double m, BoundaryKind kind, std::size_t control_samples = defaults::control_samples) {
    ProblemSpec spec;
    spec.name = "eikonal_1d(m=" + detail::fmt_param(m) + "," + to_string(kind) + ")";
    spec.domain = interval(-1.0, 1.0);
    spec.controls = uniform_controls_1d(1.0, control_samples < 3 ? 3 : control_samples | 1U, "unit interval");
    spec.coeffs = detail::first_order([](const Vector&, const Vector& a) { return Vector(-a); },
                                      [m](const Vector&, const Vector&) { return -m; }, 1);
    spec.bc = detail::homogeneous(kind);
    return spec;
}

/// Planar analogue of eikonal_1d on the square (-1, 1)^2 with `directions`
/// unit controls plus the origin.
inline ProblemSpec eikonal_2d(double m, BoundaryKind kind, std::size_t directions = 16) {
    ProblemSpec spec;
    spec.name = "eikonal_2d(m=" + detail::fmt_param(m) + "," + to_string(kind) + ")";
    spec.domain = rectangle(-1.0, 1.0, -1.0, 1.0);
    spec.controls = disk_controls(directions, "unit disk directions");
    spec.coeffs = detail::first_order([](const Vector&, const Vector& a) { return Vector(-a); },
                                      [m](const Vector&, const Vector&) { return -m; }, 2);
    spec.bc = detail::homogeneous(kind);
    return spec;
}

struct ViscousQuadraticParams {
    double epsilon = 0.05;    // constant diffusion
    double amplitude = 0.5;   // f(x) = -amplitude cos(pi x)
    double radius = 2.0;      // control truncation |q| <= radius
    std::size_t samples = defaults::control_samples;
};

/// F(x, p, X) = -eps X + p^2/2 - f(x) with f(x) = -A cos(pi x), realized
/// through b(x, q) = q, L(x, q) = q^2/2 + f(x) over |q| <= radius.
inline ProblemSpec viscous_quadratic_1d(BoundaryKind kind, ViscousQuadraticParams prm = {}) {
    if (!(prm.epsilon >= 0.0)) throw DomainError("viscous_quadratic_1d: epsilon must be >= 0");
    ProblemSpec spec;
    spec.name = "viscous_quadratic_1d(eps=" + detail::fmt_param(prm.epsilon) + ",A=" + detail::fmt_param(prm.amplitude) +
                "," + to_string(kind) + ")";
    spec.domain = interval(-1.0, 1.0);
    spec.controls = uniform_controls_1d(prm.radius, prm.samples < 3 ? 3 : prm.samples | 1U, "truncated line");
    spec.controls.truncation_radius = prm.radius;
    const double eps = prm.epsilon;
    const double amp = prm.amplitude;
    spec.coeffs = Coefficients{
        [eps](const Vector&, const Vector&) { return Matrix::Constant(1, 1, eps).eval(); },
        [](const Vector&, const Vector& q) { return Vector(q); },
        [amp](const Vector& x, const Vector& q) {
            return 0.5 * q.squaredNorm() - amp * std::cos(std::numbers::pi * x[0]);
        },
    };
    spec.bc = detail::homogeneous(kind);
    return spec;
}

/// a = 0, b = 0, L = ell on (-1, 1) with a single control.
inline ProblemSpec constant_cost(double ell, BoundaryKind kind = BoundaryKind::StateConstraint) {
    ProblemSpec spec;
    spec.name = "constant_cost(l=" + detail::fmt_param(ell) + "," + to_string(kind) + ")";
    spec.domain = interval(-1.0, 1.0);
    spec.controls = uniform_controls_1d(0.0, 1, "single");
    spec.coeffs = detail::first_order([](const Vector&, const Vector&) { return Vector::Zero(1).eval(); },
                                      [ell](const Vector&, const Vector&) { return ell; }, 1);
    spec.bc = detail::homogeneous(kind);
    return spec;
}

/// Default instances: eikonal_1d(m) for m in {-1, 0, 1}, viscous_quadratic_1d
/// and constant_cost(3), each under every boundary regime the theory covers.
/// constant_cost has no Dirichlet instance: with a = b = 0 the boundary value
/// is unreachable and the discounted Dirichlet problem has no continuous solution.
inline std::vector<ProblemSpec> catalog(std::size_t control_samples = defaults::control_samples) {
    std::vector<ProblemSpec> out;
    const BoundaryKind kinds[] = {BoundaryKind::StateConstraint, BoundaryKind::Dirichlet, BoundaryKind::Neumann};
    for (double m : {-1.0, 0.0, 1.0}) {
        for (auto k : kinds) out.push_back(eikonal_1d(m, k, control_samples));
    }
    ViscousQuadraticParams vq;
    vq.samples = control_samples;
    for (auto k : kinds) out.push_back(viscous_quadratic_1d(k, vq));
    out.push_back(constant_cost(3.0, BoundaryKind::StateConstraint));
    out.push_back(constant_cost(3.0, BoundaryKind::Neumann));
    return out;
}

/// Returns a copy of `spec` with running cost L + shift.
inline ProblemSpec shift_cost(const ProblemSpec& spec, double shift) {
    ProblemSpec out = spec;
    out.coeffs.cost = [base = spec.coeffs.cost, shift](const Vector& x, const Vector& a) { return base(x, a) + shift; };
    return out;
}

// ---------------------------------------------------------------------------
// Hypothesis checks

struct CheckResult {
    std::string name;
    bool passed = true;
    bool fatal = true;  // advisory items never fail the report
    double worst_value = 0.0;
    Vector worst_point;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed || !c.fatal; });
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }
};

namespace detail {

/// Sample points of the closed box: `per_axis` per axis, endpoints included.
inline std::vector<Vector> sample_box(const Box& box, std::size_t per_axis) {
    std::vector<Vector> pts;
    const std::size_t d = box.dim();
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) total *= per_axis;
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vector x(d);
        std::size_t rem = idx;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t i = rem % per_axis;
            rem /= per_axis;
            x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * static_cast<double>(i) / static_cast<double>(per_axis - 1);
        }
        pts.push_back(x);
    }
    return pts;
}

/// Outward normal at a boundary sample; zero in the interior. Corners get
/// the normalized sum of the adjacent face normals.
inline Vector box_normal(const Box& box, const Vector& x, double tol = 1e-12) {
    Vector n = Vector::Zero(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) {
        if (std::abs(x[k] - box.lo[k]) <= tol) n[k] -= 1.0;
        if (std::abs(x[k] - box.hi[k]) <= tol) n[k] += 1.0;
    }
    const double nn = n.norm();
    return nn > 0 ? Vector(n / nn) : n;
}

inline std::string point_str(const Vector& x) {
    std::ostringstream os;
    os << "(";
    for (Eigen::Index k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << ")";
    return os.str();
}

}  // namespace detail

/// Numerical probes of the structural hypotheses on the problem data: PSD
/// diffusion, cost bounded below and coercive on truncated control sets,
/// obliqueness of the Neumann direction, and continuity of the coefficients.
inline ValidationReport validate_spec(const ProblemSpec& spec, std::size_t per_axis = 21) {
    ValidationReport rep;
    const std::size_t d = spec.dim();

    {
        CheckResult c{"domain", true, true, 0.0, Vector(), ""};
        if (d == 0 || d > 2 || spec.domain.hi.size() != spec.domain.lo.size()) {
            c.passed = false;
            c.detail = "domain must be an interval or a rectangle";
        } else {
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < d; ++k) worst = std::min(worst, spec.domain.hi[k] - spec.domain.lo[k]);
            c.worst_value = worst;
            c.passed = worst > 0.0;
            if (!c.passed) c.detail = "x_lo must be < x_hi componentwise";
        }
        rep.checks.push_back(c);
        if (!c.passed) return rep;
    }

    {
        CheckResult c{"controls", true, true, 0.0, Vector(), ""};
        const auto& s = spec.controls.samples;
        if (s.empty()) {
            c.passed = false;
            c.detail = "control sample set is empty";
        }
        for (std::size_t i = 0; i < s.size() && c.passed; ++i) {
            for (std::size_t j = i + 1; j < s.size(); ++j) {
                if (s[i].size() == s[j].size() && (s[i] - s[j]).norm() == 0.0) {
                    c.passed = false;
                    c.detail = "duplicate control sample " + std::to_string(j);
                    c.worst_point = s[j];
                    break;
                }
            }
            if (spec.controls.truncation_radius && s[i].norm() > *spec.controls.truncation_radius * (1 + 1e-12)) {
                c.passed = false;
                c.detail = "sample " + std::to_string(i) + " exceeds the truncation radius";
                c.worst_point = s[i];
            }
        }
        rep.checks.push_back(c);
        if (!c.passed) return rep;
    }

    const auto pts = detail::sample_box(spec.domain, std::max<std::size_t>(per_axis, 2));

    CheckResult psd{"psd_diffusion", true, true, std::numeric_limits<double>::infinity(), Vector(), ""};
    CheckResult finite{"finite_coefficients", true, true, 0.0, Vector(), ""};
    double cost_min = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
        for (const auto& a : spec.controls.samples) {
            const Matrix A = spec.coeffs.diffusion(x, a);
            const Vector b = spec.coeffs.drift(x, a);
            const double L = spec.coeffs.cost(x, a);
            if (static_cast<std::size_t>(A.rows()) != d || static_cast<std::size_t>(A.cols()) != d ||
                static_cast<std::size_t>(b.size()) != d) {
                finite.passed = false;
                finite.detail = "coefficient dimensions do not match the domain";
                finite.worst_point = x;
                continue;
            }
            if (!A.allFinite() || !b.allFinite() || !std::isfinite(L)) {
                finite.passed = false;
                finite.detail = "non-finite coefficient value";
                finite.worst_point = x;
                continue;
            }
            cost_min = std::min(cost_min, L);
            const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
            Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff() - asym;
            if (lo < psd.worst_value) {
                psd.worst_value = lo;
                psd.worst_point = x;
            }
        }
    }
    psd.passed = psd.worst_value >= defaults::psd_floor;
    if (!psd.passed) psd.detail = "diffusion has eigenvalue " + std::to_string(psd.worst_value) + " at " + detail::point_str(psd.worst_point);
    rep.checks.push_back(finite);
    rep.checks.push_back(psd);

    {
        CheckResult c{"coercive_cost", true, true, cost_min, Vector(), ""};
        if (!std::isfinite(cost_min)) {
            c.passed = false;
            c.detail = "running cost not bounded below on the samples";
        } else if (spec.controls.truncation_radius) {
            // Extreme samples must cost more than the cheapest control anywhere.
            const double radius = *spec.controls.truncation_radius;
            double extreme_min = std::numeric_limits<double>::infinity();
            double cheapest_max = -std::numeric_limits<double>::infinity();
            for (const auto& x : pts) {
                double cheapest = std::numeric_limits<double>::infinity();
                for (const auto& a : spec.controls.samples) {
                    const double L = spec.coeffs.cost(x, a);
                    cheapest = std::min(cheapest, L);
                    if (a.norm() >= 0.9 * radius) extreme_min = std::min(extreme_min, L);
                }
                cheapest_max = std::max(cheapest_max, cheapest);
            }
            c.worst_value = extreme_min - cheapest_max;
            c.passed = extreme_min > cheapest_max;
            if (!c.passed) c.detail = "cost at the truncation radius does not exceed the cheapest control cost";
        }
        rep.checks.push_back(c);
    }

    {
        // Continuity probe: coefficient jumps across a tiny displacement.
        CheckResult c{"continuity", true, true, 0.0, Vector(), ""};
        const double scale = (spec.domain.hi - spec.domain.lo).maxCoeff();
        const double delta = 1e-7 * scale;
        for (const auto& x : pts) {
            for (std::size_t k = 0; k < d; ++k) {
                Vector y = x;
                y[k] += (x[k] + delta <= spec.domain.hi[k]) ? delta : -delta;
                for (const auto& a : spec.controls.samples) {
                    const double jump = (spec.coeffs.diffusion(x, a) - spec.coeffs.diffusion(y, a)).cwiseAbs().maxCoeff() +
                                        (spec.coeffs.drift(x, a) - spec.coeffs.drift(y, a)).cwiseAbs().maxCoeff() +
                                        std::abs(spec.coeffs.cost(x, a) - spec.coeffs.cost(y, a));
                    const double mag = 1.0 + spec.coeffs.diffusion(x, a).cwiseAbs().maxCoeff() +
                                       spec.coeffs.drift(x, a).cwiseAbs().maxCoeff() + std::abs(spec.coeffs.cost(x, a));
                    const double rel = jump / mag;
                    if (rel > c.worst_value) {
                        c.worst_value = rel;
                        c.worst_point = x;
                    }
                }
            }
        }
        c.passed = c.worst_value <= 1e-3;
        if (!c.passed) c.detail = "coefficient jump of relative size " + std::to_string(c.worst_value) + " near " + detail::point_str(c.worst_point);
        rep.checks.push_back(c);
    }

    std::vector<Vector> boundary_pts;
    for (const auto& x : pts) {
        if (detail::box_normal(spec.domain, x).norm() > 0) boundary_pts.push_back(x);
    }

    if (spec.bc.kind == BoundaryKind::Neumann) {
        CheckResult c{"oblique_direction", true, true, std::numeric_limits<double>::infinity(), Vector(), ""};
        if (!spec.bc.direction) {
            c.passed = false;
            c.detail = "Neumann condition without a direction field";
        } else {
            for (const auto& x : boundary_pts) {
                const Vector n = detail::box_normal(spec.domain, x);
                // Only face points: corners have no unique normal.
                if ((n.array() != 0.0).count() > 1) continue;
                const double gn = spec.bc.direction(x, n).dot(n);
                if (gn < c.worst_value) {
                    c.worst_value = gn;
                    c.worst_point = x;
                }
            }
            c.passed = c.worst_value > 0.0;
            if (!c.passed) c.detail = "gamma.n = " + std::to_string(c.worst_value) + " at boundary point " + detail::point_str(c.worst_point);
        }
        rep.checks.push_back(c);
    }

    if (spec.bc.kind == BoundaryKind::StateConstraint) {
        // Advisory: the constrained chain reflects diffusion at the boundary.
        CheckResult c{"normal_diffusion_at_boundary", true, false, 0.0, Vector(), ""};
        for (const auto& x : boundary_pts) {
            const Vector n = detail::box_normal(spec.domain, x);
            for (const auto& a : spec.controls.samples) {
                const double ann = n.dot(spec.coeffs.diffusion(x, a) * n);
                if (ann > c.worst_value) {
                    c.worst_value = ann;
                    c.worst_point = x;
                }
            }
        }
        c.passed = c.worst_value <= 1e-12;
        if (!c.passed) c.detail = "normal diffusion does not vanish on the boundary; outward jumps are suppressed";
        rep.checks.push_back(c);
    }

    if (spec.bc.kind != BoundaryKind::StateConstraint) {
        CheckResult c{"boundary_datum", true, true, 0.0, Vector(), ""};
        if (!spec.bc.datum) {
            c.passed = false;
            c.detail = "missing boundary datum";
        } else {
            for (const auto& x : boundary_pts) {
                if (!std::isfinite(spec.bc.datum(x))) {
                    c.passed = false;
                    c.worst_point = x;
                    c.detail = "non-finite boundary datum";
                }
            }
        }
        rep.checks.push_back(c);
    }
    return rep;
}

}  // namespace hjbvd
