#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dimer/model.hpp"

// Exact N-particle dynamics in the Fock basis |n, N-n>, n = 0..N particles
// in mode 1.  The Hamiltonian is real symmetric tridiagonal; propagation is
// adaptive Magnus (4th order, commutator free) with Lanczos exponentials.

namespace dimer {

using Complex = std::complex<double>;

struct FockVector {
    std::vector<Complex> amplitudes; // length N+1, entry n multiplies |n, N-n>

    FockVector() = default;
    explicit FockVector(std::size_t dim) : amplitudes(dim, Complex(0.0)) {}

    std::size_t dim() const { return amplitudes.size(); }
    int particles() const { return static_cast<int>(amplitudes.size()) - 1; }
    double norm() const;
    void normalize();
};

Complex inner_product(const FockVector& a, const FockVector& b); // <a|b>

struct MixedState {
    struct Member {
        double weight;
        FockVector state;
    };
    std::vector<Member> members;

    void validate(double tol = 1e-12) const; // weights >= 0, sum to 1
};

// H = tridiag(diag, offdiag); diag(n) = (U/2)(n^2 + (N-n)^2) + (Delta/2)(2n - N),
// offdiag(n) = -(Omega/2) sqrt((n+1)(N-n)) coupling n <-> n+1.
struct TridiagonalMatrix {
    std::vector<double> diag;
    std::vector<double> offdiag; // size dim-1
};

TridiagonalMatrix hamiltonian_matrix(const DimerParams& params, double delta);

// Detuning-independent split H = base + delta * imbalance; imbalance(n) = n - N/2.
struct HamiltonianTerms {
    std::vector<double> base_diag;
    std::vector<double> imbalance; // diagonal factor multiplying Delta
    std::vector<double> offdiag;

    explicit HamiltonianTerms(const DimerParams& params);
    std::size_t dim() const { return base_diag.size(); }
    // y = (base + delta * imbalance + offdiag) x
    void apply(double delta, const Complex* x, Complex* y) const;
};

struct Spectrum {
    std::vector<double> eigenvalues;          // ascending
    std::vector<std::vector<double>> eigenvectors; // eigenvectors[k][n], orthonormal

    std::size_t dim() const { return eigenvalues.size(); }
    FockVector eigenstate(int index_one_based) const;
};

// Full eigendecomposition, gauge fixed: largest-magnitude component of each
// vector is real positive.  Throws on eigensolver failure.
Spectrum spectrum(const DimerParams& params, double delta);

struct PropagationOptions {
    double tolerance = 1e-10;      // local error per unit time (state norm)
    double norm_tolerance = 1e-12; // allowed norm drift per unit time
    double initial_step = 1e-2;
    double max_step = 50.0;
    int max_krylov = 220;
};

FockVector propagate(const FockVector& state, const DimerParams& params,
                     const SweepProtocol& protocol, double t_start, double t_end,
                     const PropagationOptions& opts = {});

// Snapshot propagation: returns the state at each requested time (ascending,
// first >= t_start).  Shares the integration pass across checkpoints.
std::vector<FockVector> propagate_checkpoints(const FockVector& state,
                                              const DimerParams& params,
                                              const SweepProtocol& protocol,
                                              double t_start,
                                              const std::vector<double>& times,
                                              const PropagationOptions& opts = {});

struct AdiabaticFrameOptions {
    double tolerance = 1e-10;  // ODE tolerance on frame coefficients
    // rotating-wave filter: couplings whose estimated transfer amplitude
    // |dDelta/dt * <k|D|m>| / (E_m - E_k)^2 stays below this are dropped
    double drop_threshold = 0.0; // 0 disables the filter
    int grid_points = 20000;     // base Delta-grid resolution for spectral data
    double max_step_fraction = 1e-4; // step cap as fraction of the span
};

// Same contract as propagate, integrated in the instantaneous eigenbasis so
// the step size is set by nonadiabatic coupling instead of the energy scale.
// Intended for small N and very slow sweeps.
FockVector propagate_adiabatic_frame(const FockVector& state,
                                     const DimerParams& params,
                                     const SweepProtocol& protocol,
                                     double t_start, double t_end,
                                     const AdiabaticFrameOptions& opts = {});

struct AdiabaticSweepReport {
    double min_ground_population = 0.0;   // smallest instantaneous-ground weight seen
    double final_ground_population = 0.0; // ground weight at t = +T
};

// Full cycle starting from the instantaneous ground state at Delta_I,
// monitoring the ground-state population at every accepted step.
AdiabaticSweepReport adiabatic_ground_sweep(const DimerParams& params,
                                            const SweepProtocol& protocol,
                                            const AdiabaticFrameOptions& opts = {});

std::vector<double> adiabatic_populations(const FockVector& state,
                                          const DimerParams& params, double delta);
std::vector<double> adiabatic_populations(const MixedState& state,
                                          const DimerParams& params, double delta);
std::vector<double> adiabatic_populations(const FockVector& state, const Spectrum& spec);

// Result of the two return-probability routes of the quantum definition.
struct QuantumReturnResult {
    double husimi_value = 0.0;     // primary: Husimi weight of the inner ring
    double population_value = 0.0; // cross-check: adiabatic weight below threshold
    double threshold_energy = 0.0;
    bool separated = false; // spectral gap between the two sub-ensembles found
    std::string diagnostic;
};

struct ReturnClassifierOptions {
    int grid_resolution = 256;        // Husimi grid for the primary route
    double population_floor = 1e-6;   // occupation threshold for clustering
    double gap_significance = 4.0;    // largest gap must exceed this x median
    // top of the initial energy band at delta_initial; used as the threshold
    // when the final populations show no significant gap (NaN = unset)
    double reference_energy = std::numeric_limits<double>::quiet_NaN();
};

QuantumReturnResult quantum_return_probability(const FockVector& final_state,
                                               const DimerParams& params,
                                               const SweepProtocol& protocol,
                                               const ReturnClassifierOptions& opts = {});
QuantumReturnResult quantum_return_probability(const MixedState& final_state,
                                               const DimerParams& params,
                                               const SweepProtocol& protocol,
                                               const ReturnClassifierOptions& opts = {});

// Largest-gap threshold for weighted 1-D energy data; std::nullopt when the
// two clusters are not separated.
std::optional<double> energy_gap_threshold(std::vector<std::pair<double, double>> energy_weight,
                                           double weight_floor = 1e-6,
                                           double gap_significance = 4.0);

} // namespace dimer
