#pragma once

#include <span>
#include <vector>

namespace evtraj {

/// C² piecewise cubic through (t_k, y_k) with zero second derivative at both ends.
class NaturalCubicSpline
{
public:
    NaturalCubicSpline() = default;
    /// Requires at least two strictly increasing knots.
    NaturalCubicSpline(std::span<const double> knots, std::span<const double> values);

    /// Throws std::out_of_range outside [t_0, t_{K−1}]. Returns y_k exactly at knots.
    double operator()(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    /// Second derivatives at the knots (the tridiagonal solution).
    const std::vector<double>& moments() const { return moments_; }

private:
    std::size_t segment(double t) const;

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> moments_;
};

} // namespace evtraj
