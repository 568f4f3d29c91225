#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dimer/model.hpp"
#include "dimer/phasespace.hpp"

// Mean-field flow, classical ensembles (method of characteristics for the
// Liouville equation), separatrix geometry and lobe areas, Kruskal return
// probability, coarse-grained density and entropy.

namespace dimer {

double mean_field_energy(const PhasePoint& pt, const DimerParams& params, double delta);

// Hamilton's equations (dq/dt, dp/dt); rejects chart poles.
std::pair<double, double> flow_rhs(const PhasePoint& pt, const DimerParams& params,
                                   double delta);

struct TrajectoryOptions {
    double tolerance = 1e-11; // relative/absolute error control
    double initial_step = 1e-2;
};

// States at the requested times (strictly increasing, times.front() is the
// start time).  Integrated on the Cartesian Bloch sphere, which is regular
// at the chart poles.
std::vector<PhasePoint> integrate_trajectory(const PhasePoint& start,
                                             const DimerParams& params,
                                             const SweepProtocol& protocol,
                                             const std::vector<double>& times,
                                             const TrajectoryOptions& opts = {});

PhasePoint integrate_to(const PhasePoint& start, const DimerParams& params,
                        const SweepProtocol& protocol, double t_start, double t_end,
                        const TrajectoryOptions& opts = {});

struct WeightedPoint {
    double weight = 0.0;
    PhasePoint pt;
};

struct Ensemble {
    std::vector<WeightedPoint> points;
    std::string provenance;
    std::uint64_t seed = 0;

    double total_weight() const;
    void validate(const DimerParams& params, double tol = 1e-12) const;
};

struct SampleOptions {
    double min_acceptance = 1e-4; // abort below this acceptance rate
};

// Rejection sampling against the grid with bilinear interpolation; equal
// weights 1/count, deterministic for a fixed seed.
Ensemble sample_from_husimi(const HusimiGrid& grid, const DimerParams& params,
                            int count, std::uint64_t seed,
                            const SampleOptions& opts = {});

struct EnsembleEvolution {
    std::vector<double> times;
    std::vector<Ensemble> snapshots;       // one per checkpoint time
    std::vector<int> failed_points;        // indices that lost their trajectory
};

EnsembleEvolution evolve_ensemble(const Ensemble& ens, const DimerParams& params,
                                  const SweepProtocol& protocol,
                                  const std::vector<double>& checkpoint_times,
                                  const TrajectoryOptions& opts = {});

enum class Stability { Center, Saddle };

struct FixedPointInfo {
    PhasePoint pt;
    Stability stability = Stability::Center;
};

std::vector<FixedPointInfo> fixed_points(const DimerParams& params, double delta);

enum class Region { UpperLobe, LowerLobe, Outside };

struct SeparatrixInfo {
    PhasePoint saddle;
    double separatrix_energy = 0.0;
    double area_upper = 0.0;
    double area_lower = 0.0;
    double area_outer = 0.0;
};

struct AreaOptions {
    int q_nodes = 512;  // periodic trapezoid nodes in q
    int p_scan = 1024;  // sign-change scan resolution in p
};

// std::nullopt when no saddle exists at this detuning (no separatrix).
std::optional<SeparatrixInfo> separatrix_info(const DimerParams& params, double delta,
                                              const AreaOptions& opts = {});

Region classify_region(const PhasePoint& pt, const DimerParams& params, double delta,
                       const SeparatrixInfo& sep);

// Area coordinate: phase-space area enclosed by the energy contour within a
// region (measured from the region's center; adiabatic invariant of orbits).
double region_area_below(const DimerParams& params, double delta,
                         const SeparatrixInfo& sep, Region region, double energy,
                         const AreaOptions& opts = {});

// Detuning interval (intersected with [lo, hi]) over which a saddle exists.
std::optional<std::pair<double, double>> separatrix_delta_range(const DimerParams& params,
                                                                double lo, double hi);

struct KruskalPrediction {
    double crossing_delta_forward = 0.0;
    double crossing_delta_backward = 0.0;
    double return_probability = 1.0;
    bool crossed = false; // false: no separatrix crossing, probability one
    double area_rate_upper = 0.0; // dA_u/dt at the backward crossing
    double area_rate_lower = 0.0;
    double area_rate_outer = 0.0;
};

struct KruskalOptions {
    double delta_step = 1e-3;     // centered-difference step for area rates
    AreaOptions area;
};

// Kruskal's theorem for an initial band at `band_energy` (mean-field energy
// of the band's central contour at Delta_I, inside the upper lobe).
KruskalPrediction kruskal_prediction(double band_energy, const DimerParams& params,
                                     const SweepProtocol& protocol,
                                     const KruskalOptions& opts = {});

// Weight of ensemble members whose mean-field energy at `delta` falls inside
// the window.
double classical_return_probability(const Ensemble& final_ensemble,
                                    const DimerParams& params, double delta,
                                    const EnergyWindow& band);

struct CoarseGrainedDensity {
    struct Cell {
        Region region;
        double area_lo = 0.0;  // band edges in the area coordinate
        double area_hi = 0.0;
        double weight = 0.0;
        double volume = 0.0;   // phase-space volume of the cell
    };
    std::vector<Cell> cells;
    double delta = 0.0;
};

// Realizes the infinite-time average at frozen Delta by angle-averaging:
// histogram over (area-coordinate band x region) cells.  band_count counts
// bands across the full phase-space area 2 pi N.
CoarseGrainedDensity coarse_grain(const Ensemble& ens, const DimerParams& params,
                                  double delta, int band_count = 400,
                                  const AreaOptions& opts = {});

double classical_entropy(const CoarseGrainedDensity& cg);

} // namespace dimer
