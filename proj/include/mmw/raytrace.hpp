// SPDX-License-Identifier: Apache-2.0
//
// Image-method 2D ray tracer with specular reflection, first-order corner
// diffraction and optional wall transmission, plus link-state labeling.

#ifndef MMW_RAYTRACE_HPP
#define MMW_RAYTRACE_HPP

#include "mmw/geometry.hpp"

#include <functional>
#include <vector>

namespace mmw
{

enum class InteractionKind : std::uint8_t
{
    Reflection,
    Diffraction,
    Transmission
};

struct Interaction
{
    InteractionKind kind;
    int id; // wall index for reflection/transmission, corner index for diffraction
    Point2 point;
};

struct PathComponent
{
    cplx gain{0.0, 0.0}; // linear amplitude, isotropic antennas
    double aoa_deg = 0.0;
    double aod_deg = 0.0;
    double delay_ns = 0.0;
    std::vector<Interaction> interactions;
    /// Only populated for paths read back from a path-map file, where the
    /// interaction list is not persisted.
    int stored_order = -1;

    int order() const { return interactions.empty() && stored_order >= 0 ? stored_order : static_cast<int>(interactions.size()); }
    double gain_db() const { return 20.0 * std::log10(std::abs(gain)); }
    double power_dbm(double tx_power_dbm) const { return tx_power_dbm + gain_db(); }
    double length_m() const { return delay_ns * kSpeedOfLightMPerNs; }
};

enum class LinkState : std::uint8_t
{
    LOS = 0,
    FirstOrderNLOS = 1,
    HigherOrderNLOS = 2,
    Outage = 3
};

inline constexpr int kNumLinkStates = 4;
const char *to_string(LinkState s);
LinkState link_state_from_string(const std::string &s);

struct TraceConfig
{
    int max_reflections = 3;
    bool enable_diffraction = true;
    bool enable_transmission = false;
    /// Reflections plus diffractions plus transmissions on one path.
    int max_order = 3;
    double diffraction_loss_db = 20.0;
    double transmission_loss_db = 10.0;
    double carrier_hz = 28e9;
    std::size_t max_paths = 25;
};

/// TE Fresnel reflection coefficient; incidence measured from the surface normal.
template <typename Scalar>
std::complex<Scalar> fresnel_reflection(const Material &m, Scalar incidence_deg)
{
    using C = std::complex<Scalar>;
    const Scalar eps0 = static_cast<Scalar>(kVacuumPermittivity);
    const C eps(static_cast<Scalar>(m.permittivity_rel),
                -static_cast<Scalar>(m.conductivity) / (static_cast<Scalar>(2 * kPi * m.frequency_hz) * eps0));
    const Scalar th = deg2rad(incidence_deg);
    const Scalar c = std::cos(th);
    const Scalar s = std::sin(th);
    const C root = std::sqrt(eps - C(s * s, 0));
    return (C(c, 0) - root) / (C(c, 0) + root);
}

/// Convex wall corners (free angular wedge wider than 180 degrees).
struct Corner
{
    Point2 point;
    /// The reflex free wedge spans [wedge_start_deg, wedge_start_deg + wedge_width_deg].
    double wedge_start_deg;
    double wedge_width_deg;

    bool in_wedge(double az_deg) const;
};

std::vector<Corner> find_corners(const Environment &env);

/// Precomputed per-transmitter state so tracing many receivers is cheap.
class Tracer
{
  public:
    Tracer(const Environment &env, const Point2 &tx, const TraceConfig &cfg = {});

    /// All paths to rx, sorted by descending |gain| and truncated to max_paths.
    std::vector<PathComponent> trace(const Point2 &rx) const;

    const std::vector<Corner> &corners() const { return corners_; }

  private:
    struct Image
    {
        Point2 point;
        int wall;
        int parent; // -1 for the source itself
        int depth;
    };

    // Reflection-only chains between a fixed source and an arbitrary target.
    struct ImageTree
    {
        Point2 source;
        std::vector<Image> images;
    };

    struct Leg
    {
        std::vector<Point2> points; // source, reflection points..., target
        std::vector<int> walls;
        cplx coeff;
        int crossings;
    };

    ImageTree build_tree(const Point2 &source, int max_depth) const;
    // Validates every chain of the tree against target.
    void legs_to(const ImageTree &tree, const Point2 &target, int max_depth, std::vector<Leg> &out) const;
    bool leg_clear(const Point2 &p, const Point2 &q, int &crossings) const;
    cplx reflection_coeff(int wall, const Point2 &incoming_from, const Point2 &at) const;
    PathComponent make_path(const Leg &first, const Leg *second, int corner) const;

    const Environment &env_;
    Point2 tx_;
    TraceConfig cfg_;
    double wavelength_;
    std::vector<Corner> corners_;
    ImageTree tx_tree_;
    std::vector<ImageTree> corner_trees_;
    std::vector<std::vector<Leg>> tx_to_corner_;
};

std::vector<PathComponent> trace_link(const Environment &env, const Point2 &tx, const Point2 &rx,
                                      int max_reflections = 3, bool enable_diffraction = true);

/// Link-state rule over per-path SNRs: LOS if an order-0 path clears the
/// threshold, else first-order NLOS if an order-1 path does, else
/// higher-order NLOS if any does, else outage.
LinkState label_link(const std::vector<PathComponent> &paths, const std::vector<double> &snr_db,
                     double threshold_db = 5.0);

/// Best-beamformed per-path SNR, supplied by the array model.
using PathSnrFn = std::function<double(const PathComponent &)>;

struct LinkRecord
{
    int tx_id = 0;
    int cell_ix = 0;
    int cell_iy = 0;
    std::vector<PathComponent> paths;
    LinkState true_state = LinkState::Outage;
};

std::vector<LinkRecord> trace_map(const Environment &env, int tx_id, const RxGrid &grid, const PathSnrFn &snr_db,
                                  const TraceConfig &cfg = {}, double threshold_db = 5.0);

} // namespace mmw

#endif
