#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hdf {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Matrix/vector shapes that do not conform.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Design cannot proceed (e.g. the two hypotheses have identical means).
class DesignError : public Error {
public:
    using Error::Error;
};

/// Refusal to run an exponential-cost computation past its configured cap.
class ComplexityError : public Error {
public:
    using Error::Error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Wraps an angle into [0, 2pi).
inline double wrap_phase(double phi)
{
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

// ---------------------------------------------------------------------------
// Random streams
//
// Every random draw in the library comes from an engine seeded by hashing a
// master seed together with the logical coordinates of the draw (channel
// index, hypothesis, trial index, ...). Results therefore do not depend on
// how work is split across threads.

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0, std::uint64_t d = 0)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x632BE59BD9B4E019ULL));
    h = splitmix64(h ^ (c + 0x85157AF5ULL));
    h = splitmix64(h ^ (d + 0x2545F4914F6CDD1DULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                    std::uint64_t c = 0, std::uint64_t d = 0)
{
    return Rng(stream_seed(seed, a, b, c, d));
}

// Stream tags, kept stable so seeds stay portable between releases.
namespace stream {
inline constexpr std::uint64_t kSensors = 1;
inline constexpr std::uint64_t kChannel = 2;
inline constexpr std::uint64_t kInitPhases = 3;
inline constexpr std::uint64_t kTrial = 4;
} // namespace stream

/// Uniform draw in [0,1) that is identical across standard library vendors.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; deterministic and vendor independent.
inline double standard_normal(Rng& rng)
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Circularly-symmetric complex normal with E|z|^2 = variance.
inline cplx complex_normal(Rng& rng, double variance)
{
    const double s = std::sqrt(variance / 2.0);
    const double re = standard_normal(rng);
    const double im = standard_normal(rng);
    return {s * re, s * im};
}

} // namespace hdf
