#pragma once

// Tensor-product grid on the closed box, nodes enumerated with axis 0 fastest.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "hjbvd/problem.hpp"

namespace hjbvd {

class Grid {
public:
    Grid() = default;

    Grid(const Box& box, std::vector<std::size_t> shape) : box_(box), shape_(std::move(shape)) {
        if (shape_.size() != box.dim() || shape_.empty() || shape_.size() > 2) {
            throw DomainError("grid shape must have one entry per domain axis (1 or 2 axes)");
        }
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            if (shape_[k] < 3) throw DomainError("grid too coarse: need at least 3 nodes per axis");
            if (!(box.hi[k] > box.lo[k])) throw DomainError("degenerate domain axis");
        }
        h_ = Vector(shape_.size());
        size_ = 1;
        for (std::size_t k = 0; k < shape_.size(); ++k) {
            h_[k] = (box.hi[k] - box.lo[k]) / static_cast<double>(shape_[k] - 1);
            size_ *= shape_[k];
        }
    }

    std::size_t dim() const { return shape_.size(); }
    std::size_t size() const { return size_; }
    const std::vector<std::size_t>& shape() const { return shape_; }
    const Vector& h() const { return h_; }
    double h_max() const { return h_.maxCoeff(); }
    const Box& box() const { return box_; }

    std::array<std::size_t, 2> multi(std::size_t node) const {
        std::array<std::size_t, 2> m{node % shape_[0], 0};
        if (dim() == 2) m[1] = node / shape_[0];
        return m;
    }

    std::size_t index(std::size_t i0, std::size_t i1 = 0) const { return i0 + shape_[0] * i1; }

    Vector point(std::size_t node) const {
        const auto m = multi(node);
        Vector x(dim());
        for (std::size_t k = 0; k < dim(); ++k) {
            // Pin the last node to hi so boundary coordinates are exact.
            x[k] = m[k] + 1 == shape_[k] ? box_.hi[k] : box_.lo[k] + static_cast<double>(m[k]) * h_[k];
        }
        return x;
    }

    bool is_boundary(std::size_t node) const {
        const auto m = multi(node);
        for (std::size_t k = 0; k < dim(); ++k) {
            if (m[k] == 0 || m[k] + 1 == shape_[k]) return true;
        }
        return false;
    }

    /// Number of axes on which the node sits at an end (2 for rectangle corners).
    std::size_t boundary_axes(std::size_t node) const {
        const auto m = multi(node);
        std::size_t c = 0;
        for (std::size_t k = 0; k < dim(); ++k) c += (m[k] == 0 || m[k] + 1 == shape_[k]) ? 1 : 0;
        return c;
    }

    /// Outward unit normal; corners get the normalized sum of face normals,
    /// interior nodes get zero.
    Vector outward_normal(std::size_t node) const {
        Vector n = Vector::Zero(dim());
        const auto m = multi(node);
        for (std::size_t k = 0; k < dim(); ++k) {
            if (m[k] == 0) n[k] -= 1.0;
            if (m[k] + 1 == shape_[k]) n[k] += 1.0;
        }
        const double nn = n.norm();
        return nn > 0 ? Vector(n / nn) : n;
    }

    /// Neighbor at integer offset, or nothing if it leaves the closed domain.
    std::optional<std::size_t> neighbor(std::size_t node, int d0, int d1 = 0) const {
        const auto m = multi(node);
        const long j0 = static_cast<long>(m[0]) + d0;
        const long j1 = static_cast<long>(m[1]) + d1;
        if (j0 < 0 || j0 >= static_cast<long>(shape_[0])) return std::nullopt;
        if (dim() == 1) {
            if (d1 != 0) return std::nullopt;
            return static_cast<std::size_t>(j0);
        }
        if (j1 < 0 || j1 >= static_cast<long>(shape_[1])) return std::nullopt;
        return index(static_cast<std::size_t>(j0), static_cast<std::size_t>(j1));
    }

    std::size_t center_node() const {
        std::size_t i1 = dim() == 2 ? shape_[1] / 2 : 0;
        return index(shape_[0] / 2, i1);
    }

    std::vector<std::size_t> boundary_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < size_; ++i) {
            if (is_boundary(i)) out.push_back(i);
        }
        return out;
    }

    /// Nodes at least `collar` cells away from every corner (used to keep
    /// corner conventions out of sup-norm comparisons).
    bool outside_corner_collar(std::size_t node, std::size_t collar) const {
        if (dim() < 2) return true;
        const auto m = multi(node);
        bool near0 = m[0] < collar || m[0] + collar >= shape_[0];
        bool near1 = m[1] < collar || m[1] + collar >= shape_[1];
        return !(near0 && near1);
    }

private:
    Box box_;
    std::vector<std::size_t> shape_;
    Vector h_;
    std::size_t size_ = 0;
};

}  // namespace hjbvd
