#include "dimer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dimer {

namespace {
constexpr double kPi = 3.14159265358979323846;

double shannon(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p)
        if (x > 0.0) s -= x * std::log(x);
    return s;
}
} // namespace

double diagonal_entropy(const FockVector& state, const DimerParams& params, double delta) {
    return shannon(adiabatic_populations(state, params, delta));
}

double diagonal_entropy(const MixedState& state, const DimerParams& params, double delta) {
    return shannon(adiabatic_populations(state, params, delta));
}

EntropyTrace entropy_trace(const MixedState& initial, const DimerParams& params,
                           const SweepProtocol& protocol,
                           const std::vector<double>& checkpoints,
                           const EntropyTraceOptions& opts) {
    initial.validate();
    if (checkpoints.size() < 2)
        throw std::invalid_argument("entropy_trace: need at least two checkpoints");
    for (std::size_t i = 1; i < checkpoints.size(); ++i)
        if (!(checkpoints[i] > checkpoints[i - 1]))
            throw std::invalid_argument("entropy_trace: checkpoints must be increasing");

    EntropyTrace tr;
    tr.times = checkpoints;
    const std::size_t n = checkpoints.size();

    // quantum side: propagate every member through all checkpoints
    std::vector<std::vector<FockVector>> member_states; // [member][checkpoint]
    member_states.reserve(initial.members.size());
    for (const MixedState::Member& m : initial.members)
        member_states.push_back(propagate_checkpoints(m.state, params, protocol,
                                                      checkpoints.front(), checkpoints,
                                                      opts.propagation));
    auto snapshot = [&](std::size_t i) {
        MixedState ms;
        for (std::size_t k = 0; k < initial.members.size(); ++k)
            ms.members.push_back({initial.members[k].weight, member_states[k][i]});
        return ms;
    };

    tr.diagonal.resize(n);
    if (opts.compute_wehrl) tr.wehrl.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const MixedState ms = snapshot(i);
        const double delta = detuning_at(protocol, checkpoints[i]);
        tr.diagonal[i] = diagonal_entropy(ms, params, delta);
        if (opts.compute_wehrl)
            tr.wehrl[i] = wehrl_entropy(husimi_grid(ms, params, opts.grid)).entropy;
    }

    if (opts.compute_classical) {
        const HusimiGrid g0 = husimi_grid(initial, params, opts.grid);
        const Ensemble ens =
            sample_from_husimi(g0, params, opts.classical_samples, opts.seed);
        const EnsembleEvolution evo =
            evolve_ensemble(ens, params, protocol, checkpoints, opts.trajectory);
        tr.classical_cg.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Ensemble snap = evo.snapshots[i];
            const double total = snap.total_weight();
            if (!(total > 0.0))
                throw std::runtime_error("entropy_trace: classical ensemble died out");
            for (WeightedPoint& w : snap.points) w.weight /= total;
            const double delta = detuning_at(protocol, checkpoints[i]);
            tr.classical_cg[i] = classical_entropy(
                coarse_grain(snap, params, delta, opts.band_count, opts.area));
        }
    }

    if (initial.members.size() > 1) {
        const double ref = tr.diagonal.front();
        if (!tr.wehrl.empty()) {
            tr.wehrl_offset = ref - tr.wehrl.front();
            for (double& v : tr.wehrl) v += tr.wehrl_offset;
        }
        if (!tr.classical_cg.empty()) {
            tr.classical_offset = ref - tr.classical_cg.front();
            for (double& v : tr.classical_cg) v += tr.classical_offset;
        }
    }
    return tr;
}

double classical_return_threshold(
    const std::vector<std::pair<double, double>>& energy_weight, double shell_min,
    double shell_max) {
    const std::optional<double> gap = energy_gap_threshold(
        std::vector<std::pair<double, double>>(energy_weight), 1e-12, 8.0);
    if (gap && *gap > shell_max) return *gap;
    const double width = shell_max - shell_min;
    return shell_max + 10.0 * width + 1e-6 * std::abs(shell_max) + 1e-9;
}

ReturnCurve return_curve(const MixedState& initial, const DimerParams& params,
                         const SweepProtocol& protocol_template,
                         const std::vector<double>& sweep_times,
                         const ReturnCurveOptions& opts) {
    initial.validate();
    if (sweep_times.empty())
        throw std::invalid_argument("return_curve: no sweep times");
    ReturnCurve rc;
    rc.sweep_times = sweep_times;
    rc.quantum.assign(sweep_times.size(), std::numeric_limits<double>::quiet_NaN());
    rc.classical.assign(sweep_times.size(), std::numeric_limits<double>::quiet_NaN());

    const double d_i = protocol_template.delta_initial;

    // one shared initial ensemble for every scan point
    const HusimiGrid g0 = husimi_grid(initial, params, opts.grid);
    const Ensemble ens = sample_from_husimi(g0, params, opts.classical_samples, opts.seed);
    double shell_min = 1e300, shell_max = -1e300;
    for (const WeightedPoint& w : ens.points) {
        const double e = mean_field_energy(w.pt, params, d_i);
        shell_min = std::min(shell_min, e);
        shell_max = std::max(shell_max, e);
    }

    // band energy for the Kruskal constant: mean quantum energy at Delta_I;
    // top of the band feeds the classifier's no-gap fallback
    double band_energy = 0.0;
    ReturnClassifierOptions classifier = opts.classifier;
    {
        const Spectrum spec = spectrum(params, d_i);
        const std::vector<double> pops = adiabatic_populations(initial, params, d_i);
        for (std::size_t k = 0; k < pops.size(); ++k) {
            band_energy += pops[k] * spec.eigenvalues[k];
            if (pops[k] > classifier.population_floor &&
                !(spec.eigenvalues[k] <= classifier.reference_energy))
                classifier.reference_energy = spec.eigenvalues[k];
        }
    }
    const KruskalPrediction kp =
        kruskal_prediction(band_energy, params, protocol_template, opts.kruskal);
    rc.kruskal = kp.return_probability;

    for (std::size_t i = 0; i < sweep_times.size(); ++i) {
        const double half = 0.5 * sweep_times[i];
        SweepProtocol protocol(protocol_template.delta_initial,
                               protocol_template.delta_turn, half);
        bool ok = true;
        try {
            MixedState finals;
            for (const MixedState::Member& m : initial.members)
                finals.members.push_back(
                    {m.weight,
                     propagate(m.state, params, protocol, -half, half, opts.propagation)});
            rc.quantum[i] =
                quantum_return_probability(finals, params, protocol, classifier)
                    .husimi_value;
        } catch (const std::exception&) {
            ok = false;
        }
        try {
            std::vector<std::pair<double, double>> ew;
            double total = 0.0;
            for (const WeightedPoint& w : ens.points) {
                const PhasePoint fin =
                    integrate_to(w.pt, params, protocol, -half, half, opts.trajectory);
                ew.emplace_back(mean_field_energy(fin, params, d_i), w.weight);
                total += w.weight;
            }
            const double thr = classical_return_threshold(ew, shell_min, shell_max);
            double below = 0.0;
            for (const auto& [e, w] : ew)
                if (e <= thr) below += w;
            rc.classical[i] = below / total;
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok) rc.failed.push_back(static_cast<int>(i));
    }
    return rc;
}

SimilarityReport similarity_metrics(const HusimiGrid& a, const HusimiGrid& b) {
    if (a.n_q != b.n_q || a.n_p != b.n_p ||
        std::abs(a.p0 - b.p0) > 1e-12 * (1.0 + std::abs(a.p0)))
        throw std::invalid_argument("similarity_metrics: grids do not share a binning");
    SimilarityReport rep;
    double l1 = 0.0, ov = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        l1 += std::abs(a.values[i] - b.values[i]);
        ov += std::sqrt(a.values[i] * b.values[i]);
    }
    rep.l1_distance = l1 * a.cell_area;
    rep.overlap = ov * a.cell_area;
    return rep;
}

SimilarityReport similarity_metrics(const HusimiGrid& grid, const Ensemble& ens,
                                    const DimerParams& params) {
    const double total = ens.total_weight();
    if (!(total > 0.0))
        throw std::invalid_argument("similarity_metrics: empty ensemble");
    HusimiGrid h = grid;
    std::fill(h.values.begin(), h.values.end(), 0.0);
    const double dq = 2.0 * kPi / grid.n_q;
    const double dp = 2.0 * grid.p0 / grid.n_p;
    for (const WeightedPoint& w : ens.points) {
        const RotatedPoint r = to_rotated(w.pt, params);
        int iq = static_cast<int>(std::floor((r.q_rot + kPi) / dq));
        int ip = static_cast<int>(std::floor((r.p_rot + grid.p0) / dp));
        iq = (iq % grid.n_q + grid.n_q) % grid.n_q;
        ip = std::clamp(ip, 0, grid.n_p - 1);
        h.at(iq, ip) += w.weight / total / grid.cell_area;
    }
    return similarity_metrics(grid, h);
}

} // namespace dimer
