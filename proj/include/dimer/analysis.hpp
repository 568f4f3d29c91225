#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dimer/classical.hpp"
#include "dimer/model.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/quantum.hpp"

// Cross-representation experiments: entropy traces along a sweep, return
// probability versus sweep time, and quantum-classical distribution metrics.

namespace dimer {

struct EntropyTrace {
    std::vector<double> times;
    std::vector<double> wehrl;     // empty when not requested
    std::vector<double> diagonal;
    std::vector<double> classical_cg; // coarse-grained classical, empty when not requested
    // additive constants applied so all curves agree at the first checkpoint
    double wehrl_offset = 0.0;
    double diagonal_offset = 0.0;
    double classical_offset = 0.0;
};

struct EntropyTraceOptions {
    GridSpec grid{256, 256};
    int classical_samples = 2000;
    std::uint64_t seed = 1;
    int band_count = 400;
    bool compute_wehrl = true;
    bool compute_classical = true;
    PropagationOptions propagation;
    TrajectoryOptions trajectory;
    AreaOptions area;
};

double diagonal_entropy(const FockVector& state, const DimerParams& params, double delta);
double diagonal_entropy(const MixedState& state, const DimerParams& params, double delta);

// Quantum state(s) and a Husimi-sampled classical ensemble evolved side by
// side; Wehrl, diagonal and coarse-grained classical entropy per checkpoint.
EntropyTrace entropy_trace(const MixedState& initial, const DimerParams& params,
                           const SweepProtocol& protocol,
                           const std::vector<double>& checkpoints,
                           const EntropyTraceOptions& opts = {});

struct ReturnCurve {
    std::vector<double> sweep_times; // full cycle durations 2T
    std::vector<double> quantum;     // NaN where the run failed
    std::vector<double> classical;   // NaN where the run failed
    double kruskal = 1.0;            // constant quasi-static prediction
    std::vector<int> failed;         // scan indices with a failed run
};

struct ReturnCurveOptions {
    int classical_samples = 2000;
    std::uint64_t seed = 1;
    GridSpec grid{256, 256};
    PropagationOptions propagation;
    TrajectoryOptions trajectory;
    ReturnClassifierOptions classifier;
    KruskalOptions kruskal;
};

// Full forward-and-back cycle for every sweep time, quantum and classical
// from the same Husimi-derived ensemble, plus the Kruskal constant.
ReturnCurve return_curve(const MixedState& initial, const DimerParams& params,
                         const SweepProtocol& protocol_template,
                         const std::vector<double>& sweep_times,
                         const ReturnCurveOptions& opts = {});

struct SimilarityReport {
    double l1_distance = 0.0; // in [0, 2]
    double overlap = 0.0;     // Bhattacharyya-type, in [0, 1]
};

// threshold between the returned and escaped clusters of final classical
// energies; if they are not separated, everything at or below the initial
// shell (with padding) counts as returned
double classical_return_threshold(
    const std::vector<std::pair<double, double>>& energy_weight, double shell_min,
    double shell_max);

SimilarityReport similarity_metrics(const HusimiGrid& a, const HusimiGrid& b);
// histogram the ensemble onto the grid's cells before comparing
SimilarityReport similarity_metrics(const HusimiGrid& grid, const Ensemble& ens,
                                    const DimerParams& params);

} // namespace dimer
