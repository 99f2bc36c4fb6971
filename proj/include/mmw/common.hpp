// SPDX-License-Identifier: Apache-2.0
//
// Shared constants, angle helpers, error types and seed derivation.

#ifndef MMW_COMMON_HPP
#define MMW_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mmw
{

using Point2 = Eigen::Vector2d;
using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLightMPerNs = 0.299792458;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;
inline constexpr double kThermalNoiseDbmPerHz = -174.0;

template <typename T>
constexpr T deg2rad(T deg) { return deg * static_cast<T>(kPi) / static_cast<T>(180); }

template <typename T>
constexpr T rad2deg(T rad) { return rad * static_cast<T>(180) / static_cast<T>(kPi); }

/// Wraps an angle into [-180, 180).
double wrap_deg(double deg);

/// Absolute angular distance in degrees, in [0, 180].
double angle_diff_deg(double a, double b);

/// Azimuth of the vector (to - from) in degrees, [-180, 180).
double azimuth_deg(const Point2 &from, const Point2 &to);

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// ------------------------------------------------------------------------
// Errors. Every failure the pipeline can signal derives from mmw::Error so
// the CLI can map it to the data-error exit status.

struct Error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

#define MMW_DEFINE_ERROR(Name) \
    struct Name : Error        \
    {                          \
        using Error::Error;    \
    }

MMW_DEFINE_ERROR(GenerationFailed);
MMW_DEFINE_ERROR(PlacementFailed);
MMW_DEFINE_ERROR(InvalidEnvironment);
MMW_DEFINE_ERROR(MisalignedInput);
MMW_DEFINE_ERROR(DegenerateTensor);
MMW_DEFINE_ERROR(DimensionMismatch);
MMW_DEFINE_ERROR(EmptyDataset);
MMW_DEFINE_ERROR(NoFrontier);
MMW_DEFINE_ERROR(InvalidStart);
MMW_DEFINE_ERROR(KeyMismatch);
MMW_DEFINE_ERROR(DataError);

#undef MMW_DEFINE_ERROR

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string &path, const std::string &content);
std::string read_file(const std::string &path);

/// Deterministic seed mixing (splitmix64 finalizer over the inputs).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0);

} // namespace mmw

#endif
