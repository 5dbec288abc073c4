#include "evtraj/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace evtraj {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots, std::span<const double> values)
    : knots_(knots.begin(), knots.end()), values_(values.begin(), values.end())
{
    const std::size_t k = knots_.size();
    if(k < 2 || values_.size() != k) throw std::invalid_argument("spline: need >= 2 knots with matching values");
    for(std::size_t i = 1; i < k; ++i)
        if(!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("spline: knots must be strictly increasing");

    moments_.assign(k, 0.0);
    if(k == 2) return;

    // Interior moments: h_{i-1} M_{i-1} + 2(h_{i-1} + h_i) M_i + h_i M_{i+1} = 6 (s_i − s_{i−1}); Thomas sweep.
    const std::size_t n = k - 2;
    std::vector<double> diag(n), upper(n), rhs(n);
    for(std::size_t r = 0; r < n; ++r) {
        const std::size_t i = r + 1;
        const double h0 = knots_[i] - knots_[i - 1];
        const double h1 = knots_[i + 1] - knots_[i];
        diag[r] = 2.0 * (h0 + h1);
        upper[r] = h1;
        rhs[r] = 6.0 * ((values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0);
    }
    for(std::size_t r = 1; r < n; ++r) {
        const double lower = knots_[r + 1] - knots_[r]; // h_{i-1} for row r
        const double factor = lower / diag[r - 1];
        diag[r] -= factor * upper[r - 1];
        rhs[r] -= factor * rhs[r - 1];
    }
    moments_[n] = rhs[n - 1] / diag[n - 1];
    for(std::size_t r = n - 1; r-- > 0;) moments_[r + 1] = (rhs[r] - upper[r] * moments_[r + 2]) / diag[r];
}

std::size_t NaturalCubicSpline::segment(double t) const
{
    if(knots_.empty()) throw std::logic_error("spline: not initialized");
    if(t < knots_.front() || t > knots_.back()) throw std::out_of_range("spline: t outside the knot range");
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    return std::min(i == 0 ? 0 : i - 1, knots_.size() - 2);
}

double NaturalCubicSpline::operator()(double t) const
{
    const std::size_t i = segment(t);
    if(t == knots_[i]) return values_[i];
    if(t == knots_[i + 1]) return values_[i + 1];
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - t) / h;
    const double b = (t - knots_[i]) / h;
    // y_i + b·Δy keeps constant data exactly constant (a + b is not exactly 1 in floating point).
    return values_[i] + b * (values_[i + 1] - values_[i]) +
           ((a * a * a - a) * moments_[i] + (b * b * b - b) * moments_[i + 1]) * h * h / 6.0;
}

double NaturalCubicSpline::derivative(double t) const
{
    const std::size_t i = segment(t);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - t) / h;
    const double b = (t - knots_[i]) / h;
    return (values_[i + 1] - values_[i]) / h -
           (3.0 * a * a - 1.0) / 6.0 * h * moments_[i] + (3.0 * b * b - 1.0) / 6.0 * h * moments_[i + 1];
}

double NaturalCubicSpline::second_derivative(double t) const
{
    const std::size_t i = segment(t);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - t) / h;
    const double b = (t - knots_[i]) / h;
    return a * moments_[i] + b * moments_[i + 1];
}

} // namespace evtraj
