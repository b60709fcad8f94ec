#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <span>

namespace greenmap {

// A point (or vector) in the plane or in space. The dimension is fixed at
// construction; arithmetic between points of different dimension is a bug.
class Point {
public:
    Point() = default;
    Point(double x, double y) : v_{x, y, 0.0}, dim_(2) {}
    Point(double x, double y, double z) : v_{x, y, z}, dim_(3) {}

    static Point zero(int dim) { return dim == 3 ? Point(0.0, 0.0, 0.0) : Point(0.0, 0.0); }
    static Point unit(int dim, int axis)
    {
        Point p = zero(dim);
        p[axis] = 1.0;
        return p;
    }

    int dim() const { return dim_; }
    double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return v_[static_cast<std::size_t>(i)]; }
    std::span<const double> coords() const { return {v_.data(), static_cast<std::size_t>(dim_)}; }

    double norm_sq() const { return v_[0] * v_[0] + v_[1] * v_[1] + v_[2] * v_[2]; }
    double norm() const { return std::sqrt(norm_sq()); }
    Point normalized() const
    {
        const double n = norm();
        return n > 0.0 ? *this / n : *this;
    }
    bool is_finite() const
    {
        return std::isfinite(v_[0]) && std::isfinite(v_[1]) && std::isfinite(v_[2]);
    }

    Point& operator+=(const Point& o)
    {
        assert(dim_ == o.dim_);
        for (std::size_t i = 0; i < 3; ++i) v_[i] += o.v_[i];
        return *this;
    }
    Point& operator-=(const Point& o)
    {
        assert(dim_ == o.dim_);
        for (std::size_t i = 0; i < 3; ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Point& operator*=(double s)
    {
        for (auto& c : v_) c *= s;
        return *this;
    }
    Point& operator/=(double s)
    {
        for (auto& c : v_) c /= s;
        return *this;
    }

    friend Point operator+(Point a, const Point& b) { return a += b; }
    friend Point operator-(Point a, const Point& b) { return a -= b; }
    friend Point operator-(Point a) { return a *= -1.0; }
    friend Point operator*(Point a, double s) { return a *= s; }
    friend Point operator*(double s, Point a) { return a *= s; }
    friend Point operator/(Point a, double s) { return a /= s; }
    friend bool operator==(const Point& a, const Point& b) = default;

private:
    std::array<double, 3> v_{};
    int dim_ = 2;
};

inline double dot(const Point& a, const Point& b)
{
    assert(a.dim() == b.dim());
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

inline Point cross(const Point& a, const Point& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Angle between two nonzero vectors, accurate for nearly parallel inputs.
inline double angle_between(const Point& a, const Point& b)
{
    const Point ua = a.normalized();
    const Point ub = b.normalized();
    return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

} // namespace greenmap
