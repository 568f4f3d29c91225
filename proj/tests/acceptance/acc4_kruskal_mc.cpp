// Criterion 4: the quasi-static capture prediction for the band of the 37th
// eigenstate (u = -3, sweep -2 -> 2) agrees with direct Monte-Carlo transport
// of 10^4 band points within 3 sigma binomial error, and the classical return
// probability is flat across a 4x range of sweep times.

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "dimer/analysis.hpp"
#include "dimer/classical.hpp"
#include "dimer/quantum.hpp"
#include "dimer/rng.hpp"

#include "acceptance.hpp"

using namespace dimer;

namespace {

// Fraction of the ensemble that ends back in the initial energy shell,
// judged at the initial detuning with the spectral-gap threshold.
double return_fraction(const Ensemble& ens, const DimerParams& params,
                       const SweepProtocol& prot, double shell_min,
                       double shell_max) {
    const EnsembleEvolution evo =
        evolve_ensemble(ens, params, prot, {-prot.half_time, prot.half_time});
    std::vector<std::pair<double, double>> ew;
    for (const WeightedPoint& w : evo.snapshots.back().points)
        ew.emplace_back(mean_field_energy(w.pt, params, prot.delta_initial),
                        w.weight);
    const double thr = classical_return_threshold(ew, shell_min, shell_max);
    std::size_t below = 0;
    for (const auto& [e, w] : ew)
        if (e <= thr) ++below;
    return static_cast<double>(below) / static_cast<double>(ew.size());
}

} // namespace

int main() {
    acceptance::Criterion c{4, "quasi-static capture prediction vs Monte-Carlo"};
    const DimerParams params = DimerParams::from_nonlinearity(-3.0, 1000);
    const double d_i = -2.0;
    const Spectrum spec = spectrum(params, d_i);
    const double e37 = spec.eigenvalues[36]; // 37th, 1-based

    // the band of the 37th state: the action annulus between the midpoints to
    // the neighbouring eigenvalues, sampled Liouville-uniformly by rejection
    const double e_lo = 0.5 * (spec.eigenvalues[35] + e37);
    const double e_hi = 0.5 * (e37 + spec.eigenvalues[37]);
    std::mt19937_64 rng = make_engine(77, 0);
    std::uniform_real_distribution<double> uq(-3.14159265358979323846,
                                              3.14159265358979323846);
    std::uniform_real_distribution<double> up(-params.p0(), params.p0());
    const int n_main = 10000;
    Ensemble band;
    while (static_cast<int>(band.points.size()) < n_main) {
        const PhasePoint pt{uq(rng), up(rng)};
        const double e = mean_field_energy(pt, params, d_i);
        if (e >= e_lo && e <= e_hi) band.points.push_back({1.0 / n_main, pt});
    }

    // --- main comparison at T = 1000 ---------------------------------------
    const double t_main = 1000.0;
    const SweepProtocol prot(d_i, 2.0, t_main);
    const KruskalPrediction kp = kruskal_prediction(e37, params, prot);
    c.require(kp.crossed, "prediction reports no separatrix crossing");
    const double p_hat = return_fraction(band, params, prot, e_lo, e_hi);
    const double sigma =
        std::sqrt(kp.return_probability * (1.0 - kp.return_probability) / n_main);
    c.require(std::abs(p_hat - kp.return_probability) <= 3.0 * sigma,
              "Monte-Carlo outside 3 sigma of the prediction");

    // --- flatness across a 4x range of sweep times -------------------------
    const int n_flat = 8000;
    Ensemble sub;
    for (int i = 0; i < n_flat; ++i) {
        sub.points.push_back(band.points[static_cast<std::size_t>(i)]);
        sub.points.back().weight = 1.0 / n_flat;
    }
    std::vector<double> fractions{p_hat};
    std::vector<double> counts{static_cast<double>(n_main)};
    for (double t_half : {2000.0, 4000.0}) {
        fractions.push_back(return_fraction(sub, params,
                                            SweepProtocol(d_i, 2.0, t_half),
                                            e_lo, e_hi));
        counts.push_back(static_cast<double>(n_flat));
    }
    const double p_ref = kp.return_probability;
    bool flat = true;
    for (std::size_t a = 0; a < fractions.size(); ++a)
        for (std::size_t b = a + 1; b < fractions.size(); ++b) {
            const double s = std::sqrt(p_ref * (1.0 - p_ref) *
                                       (1.0 / counts[a] + 1.0 / counts[b]));
            if (std::abs(fractions[a] - fractions[b]) > 3.0 * s) flat = false;
        }
    c.require(flat, "classical return probability drifts with sweep time");

    std::ostringstream d;
    d << "prediction " << kp.return_probability << ", MC " << p_hat << " (3sigma "
      << 3.0 * sigma << "), fractions at T=1000/2000/4000: " << fractions[0]
      << "/" << fractions[1] << "/" << fractions[2];
    c.note(d.str());
    return c.finish();
}
