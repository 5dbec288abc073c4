#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace evtraj {

/// Pixel displacement or image-plane position, (x, y) with y pointing down.
struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(const Vec2& o)
    {
        x += o.x;
        y += o.y;
        return *this;
    }
    Vec2& operator-=(const Vec2& o)
    {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
    friend Vec2 operator*(const Vec2& v, double s) { return {s * v.x, s * v.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    double norm() const { return std::hypot(x, y); }
};

/// Selects the serial reference loop or the OpenMP kernel for data-parallel operations.
enum class Exec
{
    serial,
    parallel
};

/// Number of OpenMP threads used by parallel kernels (1 when built without OpenMP).
int thread_count();
void set_thread_count(int threads);

/// Thrown by readers/writers. `kind` lets callers tell format problems apart.
class IoError : public std::runtime_error
{
public:
    enum class Kind
    {
        open_failed,
        write_failed,
        bad_magic,
        truncated,
        unsorted,
        out_of_bounds,
        format
    };

    IoError(Kind kind, const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), kind_(kind), path_(path)
    {
    }

    Kind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }

private:
    Kind kind_;
    std::string path_;
};

/// Default cap for a single large allocation (voxel grid, correlation volume).
inline constexpr std::size_t default_memory_budget = std::size_t{3} << 30;

} // namespace evtraj
