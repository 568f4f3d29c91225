// Criterion 8: phase-space geometry invariants — area sum rule where the
// separatrix exists, no saddle anywhere for subcritical u, and subcritical
// full-cycle return probability of one.

#include <cmath>
#include <sstream>

#include "dimer/classical.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/quantum.hpp"
#include "dimer/rng.hpp"

#include "acceptance.hpp"

using namespace dimer;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

int main() {
    acceptance::Criterion c{8, "geometry invariants and subcritical behaviour"};

    // --- area sum rule, u = -3, N = 1000 -----------------------------------
    const DimerParams params = DimerParams::from_nonlinearity(-3.0, 1000);
    const double total = 2.0 * kPi * 1000.0;
    const auto range = separatrix_delta_range(params, -3.0, 3.0);
    c.require(range.has_value(), "no separatrix range found for u=-3");
    double worst_rel = 0.0;
    if (range) {
        const double lo = range->first, hi = range->second;
        for (int i = 0; i < 7; ++i) {
            const double delta = lo + (hi - lo) * (i + 0.5) / 7.0;
            const auto sep = separatrix_info(params, delta);
            if (!sep) {
                c.require(false, "separatrix vanished inside its range");
                continue;
            }
            // outer area computed by an independent quadrature on a grid
            // incommensurate with the one behind separatrix_info, so the sum
            // carries real discretization error instead of cancelling exactly
            AreaOptions alt;
            alt.q_nodes = 701;
            alt.p_scan = 1301;
            const double outer = region_area_below(params, delta, *sep,
                                                   Region::Outside,
                                                   sep->separatrix_energy, alt);
            const double sum = sep->area_upper + sep->area_lower + outer;
            worst_rel = std::max(worst_rel, std::abs(sum - total) / total);
        }
        c.require(worst_rel < 1e-3, "area sum rule violated beyond 1e-3 relative");
    }

    // --- no saddle for u = -0.5 at any delta -------------------------------
    const DimerParams sub = DimerParams::from_nonlinearity(-0.5, 1000);
    bool saddle_found = false;
    for (double delta = -3.0; delta <= 3.0 + 1e-12; delta += 0.01) {
        if (separatrix_info(sub, delta)) saddle_found = true;
        for (const FixedPointInfo& fp : fixed_points(sub, delta))
            if (fp.stability == Stability::Saddle) saddle_found = true;
    }
    c.require(!saddle_found, "found a saddle for subcritical u=-0.5");

    // --- subcritical full-cycle classical return probability = 1 -----------
    const SweepProtocol protocol(-2.0, 2.0, 200.0);
    const Spectrum spec = spectrum(sub, -2.0);
    const FockVector band = spec.eigenstate(37);
    const HusimiGrid grid = husimi_grid(band, sub, {128, 128});
    const Ensemble ens = sample_from_husimi(grid, sub, 2000, derive_seed(11, 0, 0));
    double shell_min = 1e300, shell_max = -1e300;
    for (const WeightedPoint& w : ens.points) {
        const double e = mean_field_energy(w.pt, sub, -2.0);
        shell_min = std::min(shell_min, e);
        shell_max = std::max(shell_max, e);
    }
    const double pad = 1e-3 * (shell_max - shell_min);
    int returned = 0;
    for (const WeightedPoint& w : ens.points) {
        const PhasePoint fin = integrate_to(w.pt, sub, protocol, -200.0, 200.0);
        const double e = mean_field_energy(fin, sub, -2.0);
        if (e >= shell_min - pad && e <= shell_max + pad) ++returned;
    }
    const double frac = returned / 2000.0;
    c.require(frac > 0.995, "subcritical return fraction below 0.995");

    // the quasi-static prediction agrees: no crossing, probability one
    const KruskalPrediction kp =
        kruskal_prediction(spec.eigenvalues[36], sub, protocol);
    c.require(!kp.crossed, "quasi-static prediction reports a crossing");
    c.require(kp.return_probability == 1.0, "quasi-static prediction not one");

    std::ostringstream d;
    d << "worst area-sum relative error " << worst_rel << ", subcritical return "
      << frac;
    c.note(d.str());
    return c.finish();
}
