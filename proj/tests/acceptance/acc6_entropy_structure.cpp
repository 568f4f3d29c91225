// Criterion 6: entropy structure of the 20-state ensemble scenario — all
// three aligned entropy curves start at log 20, the coarse-grained classical
// entropy rises in exactly two steps with plateaus between, and the
// single-state Wehrl trace oscillates after the return crossing with at least
// 5x the ensemble trace's amplitude.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "dimer/analysis.hpp"
#include "dimer/classical.hpp"
#include "dimer/quantum.hpp"

#include "acceptance.hpp"

using namespace dimer;

namespace {

double window_spread(const std::vector<double>& times,
                     const std::vector<double>& values, double t_from) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= t_from) {
            lo = std::min(lo, values[i]);
            hi = std::max(hi, values[i]);
        }
    return hi - lo;
}

// count maximal runs of consecutive increments above the threshold
int upward_steps(const std::vector<double>& v, double thresh) {
    int steps = 0;
    bool in_step = false;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const bool rising = v[i + 1] - v[i] > thresh;
        if (rising && !in_step) ++steps;
        in_step = rising;
    }
    return steps;
}

} // namespace

int main() {
    acceptance::Criterion c{6, "entropy structure of the ensemble scenario"};
    const DimerParams params = DimerParams::from_nonlinearity(-3.0, 1000);
    const double half_t = 500.0;
    const SweepProtocol prot(-2.0, 2.0, half_t);
    const Spectrum spec = spectrum(params, -2.0);

    MixedState ensemble;
    for (int k = 28; k <= 47; ++k)
        ensemble.members.push_back({1.0 / 20.0, spec.eigenstate(k)});

    std::vector<double> checkpoints;
    const int n_cp = 41;
    for (int i = 0; i < n_cp; ++i)
        checkpoints.push_back(-half_t + 2.0 * half_t * i / (n_cp - 1));

    EntropyTraceOptions opts;
    opts.grid = {192, 192};
    const EntropyTrace tr = entropy_trace(ensemble, params, prot, checkpoints, opts);

    // --- common aligned start at log 20 ------------------------------------
    const double log20 = std::log(20.0);
    c.require(std::abs(tr.diagonal.front() - log20) < 1e-6,
              "diagonal entropy does not start at log 20");
    c.require(std::abs(tr.wehrl.front() - log20) < 1e-9,
              "aligned Wehrl entropy does not start at log 20");
    c.require(std::abs(tr.classical_cg.front() - log20) < 1e-9,
              "aligned classical entropy does not start at log 20");

    // --- exactly two upward steps in the classical curve -------------------
    const double total_rise =
        *std::max_element(tr.classical_cg.begin(), tr.classical_cg.end()) - log20;
    c.require(total_rise > 0.2, "classical entropy shows no significant rise");
    const double step_thresh = 0.25 * total_rise; // an increment this large
                                                  // only happens inside a step
    const int steps = upward_steps(tr.classical_cg, step_thresh);
    c.require(steps == 2, "classical entropy does not rise in exactly two steps");
    // plateaus: outside the two crossing windows the curve stays level
    double plateau_wobble = 0.0;
    for (std::size_t i = 0; i + 1 < tr.classical_cg.size(); ++i) {
        const double d = std::abs(tr.classical_cg[i + 1] - tr.classical_cg[i]);
        if (d <= step_thresh) plateau_wobble = std::max(plateau_wobble, d);
    }
    c.require(plateau_wobble < 0.5 * step_thresh,
              "plateaus between the steps are not flat");

    // --- single-state Wehrl oscillates, ensemble Wehrl does not ------------
    MixedState single;
    single.members.push_back({1.0, spec.eigenstate(37)});
    EntropyTraceOptions wopts = opts;
    wopts.compute_classical = false;
    const EntropyTrace ts = entropy_trace(single, params, prot, checkpoints, wopts);

    // the band re-crosses the separatrix on the return leg near 0.3 T; compare
    // the traces after the crossing has completed
    const double t_from = 0.45 * half_t;
    const double amp_single = window_spread(ts.times, ts.wehrl, t_from);
    const double amp_ens = window_spread(tr.times, tr.wehrl, t_from);
    c.require(amp_single >= 5.0 * amp_ens,
              "single-state Wehrl amplitude below 5x the ensemble's");

    std::ostringstream d;
    d << "classical rise " << total_rise << " in " << steps
      << " steps (plateau wobble " << plateau_wobble << "), post-crossing Wehrl "
      << "amplitude single/ensemble " << amp_single << "/" << amp_ens;
    c.note(d.str());
    return c.finish();
}
