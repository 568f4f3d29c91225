#include "dimer/classical.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dimer {

namespace {

template <class State>
QuantumReturnResult return_probability_impl(const State& final_state,
                                            const DimerParams& params,
                                            const SweepProtocol& protocol,
                                            const ReturnClassifierOptions& opts) {
    const double delta = protocol.delta_initial;
    const Spectrum spec = spectrum(params, delta);
    const std::vector<double> pops = adiabatic_populations(final_state, params, delta);

    std::vector<std::pair<double, double>> ew;
    ew.reserve(pops.size());
    for (std::size_t k = 0; k < pops.size(); ++k)
        ew.emplace_back(spec.eigenvalues[k], pops[k]);

    QuantumReturnResult res;
    const std::optional<double> gap =
        energy_gap_threshold(ew, opts.population_floor, opts.gap_significance);
    if (gap) {
        res.separated = true;
        res.threshold_energy = *gap;
        res.diagnostic = "threshold from the largest spectral gap of the occupied levels";
    } else if (std::isfinite(opts.reference_energy)) {
        // fully returned or fully escaped states have no gap to find; cut just
        // above the top of the initial band instead
        res.separated = false;
        double thr = opts.reference_energy;
        for (std::size_t k = 0; k + 1 < spec.eigenvalues.size(); ++k)
            if (spec.eigenvalues[k] <= opts.reference_energy &&
                spec.eigenvalues[k + 1] > opts.reference_energy) {
                thr = 0.5 * (spec.eigenvalues[k] + spec.eigenvalues[k + 1]);
                break;
            }
        res.threshold_energy = thr;
        res.diagnostic = "no significant spectral gap; threshold set just above the initial band";
    } else {
        // last resort: the separatrix energy at the initial detuning
        const std::optional<SeparatrixInfo> sep = separatrix_info(params, delta);
        if (!sep)
            throw std::runtime_error(
                "quantum_return_probability: no spectral gap, no reference energy, "
                "and no separatrix to fall back on");
        res.separated = false;
        res.threshold_energy = sep->separatrix_energy;
        res.diagnostic = "no significant spectral gap; threshold set to the separatrix energy";
    }

    double below = 0.0;
    for (std::size_t k = 0; k < pops.size(); ++k)
        if (spec.eigenvalues[k] <= res.threshold_energy) below += pops[k];
    res.population_value = below;

    const GridSpec grid_spec{opts.grid_resolution, opts.grid_resolution};
    const HusimiGrid grid = husimi_grid(final_state, params, grid_spec);
    EnergyWindow window;
    window.e_max = res.threshold_energy;
    const RegionIntegralResult ri = region_integral(grid, window, params, delta);
    if (ri.empty_region)
        throw std::runtime_error("quantum_return_probability: empty return region on the grid");
    res.husimi_value = ri.probability;
    return res;
}

} // namespace

QuantumReturnResult quantum_return_probability(const FockVector& final_state,
                                               const DimerParams& params,
                                               const SweepProtocol& protocol,
                                               const ReturnClassifierOptions& opts) {
    return return_probability_impl(final_state, params, protocol, opts);
}

QuantumReturnResult quantum_return_probability(const MixedState& final_state,
                                               const DimerParams& params,
                                               const SweepProtocol& protocol,
                                               const ReturnClassifierOptions& opts) {
    return return_probability_impl(final_state, params, protocol, opts);
}

} // namespace dimer
