#pragma once

#include <string>
#include <vector>

#include "dimer/model.hpp"
#include "dimer/quantum.hpp"

// SU(2) coherent states, Husimi function evaluation on grids in the rotated
// chart, Wehrl entropy, and the numerical check of the Husimi evolution
// equation (Liouville transport plus the 1/N mixed-derivative correction).

namespace dimer {

struct CoherentParams {
    double theta = 0.0; // polar [0, pi]
    double phi = 0.0;   // azimuth [-pi, pi)
};

struct GridSpec {
    int n_q = 256;
    int n_p = 256;
};

// Cell-centered rectangular grid over the rotated chart,
// q' in (-pi, pi], p' in [-p0, p0].
struct HusimiGrid {
    int n_q = 0;
    int n_p = 0;
    double p0 = 0.0;
    double cell_area = 0.0;
    double raw_integral = 0.0;        // Riemann sum before rescaling
    std::vector<double> values;       // row-major, [iq * n_p + ip], normalized

    double q_center(int iq) const;
    double p_center(int ip) const;
    double& at(int iq, int ip) { return values[static_cast<std::size_t>(iq) * n_p + ip]; }
    double at(int iq, int ip) const { return values[static_cast<std::size_t>(iq) * n_p + ip]; }
    double integral() const; // Riemann sum of the stored values
};

FockVector coherent_state(const CoherentParams& cp, int total_particles);

double husimi_point(const FockVector& state, const CoherentParams& cp);
double husimi_point(const MixedState& state, const CoherentParams& cp);

HusimiGrid husimi_grid(const FockVector& state, const DimerParams& params,
                       const GridSpec& spec = {});
HusimiGrid husimi_grid(const MixedState& state, const DimerParams& params,
                       const GridSpec& spec = {});

struct WehrlResult {
    double entropy = 0.0;
    std::string grid_spec; // provenance of the quadrature
};

WehrlResult wehrl_entropy(const HusimiGrid& grid);

// Mean-field energy window; membership of a grid node is decided by
// evaluating the mean-field Hamiltonian at the node.
struct EnergyWindow {
    double e_min = -1e300;
    double e_max = 1e300;
};

struct RegionIntegralResult {
    double probability = 0.0;
    bool empty_region = false;
};

RegionIntegralResult region_integral(const HusimiGrid& grid, const EnergyWindow& window,
                                     const DimerParams& params, double delta);

struct PdeResidualOptions {
    GridSpec grid{192, 192};
    double p_cut_fraction = 0.92; // exclude |p| > fraction * p0 (chart poles)
    bool include_correction = true;
};

struct PdeResidualReport {
    double relative_residual = 0.0; // ||dQ/dt - RHS||_2 / ||RHS||_2
    double residual_norm = 0.0;
    double rhs_norm = 0.0;
    double transport_q_norm = 0.0;  // -(2Up + Delta + ...) dQ/dq term
    double transport_p_norm = 0.0;  // Omega sqrt(..) sin q dQ/dp term
    double correction_norm = 0.0;   // -UN (p0/N - p^2/(p0 N)) d2Q/dqdp term
    int excluded_cells = 0;         // pole-adjacent cells left out
};

// Finite-difference verification of the Husimi evolution equation in the
// unrotated (q,p) chart: dQ/dt from the two states against the transport
// terms plus the mixed-derivative quantum correction, central differences.
PdeResidualReport husimi_pde_residual(const FockVector& state_before,
                                      const FockVector& state_after, double dt,
                                      const DimerParams& params, double delta,
                                      const PdeResidualOptions& opts = {});

} // namespace dimer
