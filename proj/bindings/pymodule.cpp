// Python bindings for the driven two-mode model: spectra, propagation,
// Husimi grids, classical ensembles and the cross-representation analyses.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dimer/analysis.hpp"
#include "dimer/io.hpp"
#include "dimer/rng.hpp"

namespace py = pybind11;
using namespace dimer;

namespace {

FockVector state_from_array(const py::array_t<Complex>& arr) {
    if (arr.ndim() != 1) throw std::invalid_argument("state must be a 1-D array");
    FockVector st(arr.shape(0));
    auto r = arr.unchecked<1>();
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) st.amplitudes[i] = r(i);
    return st;
}

py::array_t<Complex> state_to_array(const FockVector& st) {
    py::array_t<Complex> out(st.dim());
    auto w = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < st.dim(); ++i) w(i) = st.amplitudes[i];
    return out;
}

MixedState mixed_from_list(const std::vector<std::pair<double, py::array_t<Complex>>>& members) {
    MixedState ms;
    for (const auto& [w, arr] : members) ms.members.push_back({w, state_from_array(arr)});
    ms.validate();
    return ms;
}

py::array_t<double> grid_to_array(const HusimiGrid& g) {
    py::array_t<double> out({g.n_q, g.n_p});
    auto w = out.mutable_unchecked<2>();
    for (int iq = 0; iq < g.n_q; ++iq)
        for (int ip = 0; ip < g.n_p; ++ip) w(iq, ip) = g.at(iq, ip);
    return out;
}

py::dict ensemble_to_dict(const Ensemble& ens) {
    const py::ssize_t n = static_cast<py::ssize_t>(ens.points.size());
    py::array_t<double> weight(n), q(n), p(n);
    auto ww = weight.mutable_unchecked<1>();
    auto wq = q.mutable_unchecked<1>();
    auto wp = p.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < n; ++i) {
        ww(i) = ens.points[i].weight;
        wq(i) = ens.points[i].pt.q;
        wp(i) = ens.points[i].pt.p;
    }
    py::dict d;
    d["weight"] = weight;
    d["q"] = q;
    d["p"] = p;
    d["seed"] = ens.seed;
    return d;
}

Ensemble ensemble_from_arrays(const py::array_t<double>& weight,
                              const py::array_t<double>& q,
                              const py::array_t<double>& p) {
    if (weight.ndim() != 1 || q.ndim() != 1 || p.ndim() != 1 ||
        weight.shape(0) != q.shape(0) || q.shape(0) != p.shape(0))
        throw std::invalid_argument("ensemble arrays must be 1-D and equally long");
    Ensemble ens;
    auto rw = weight.unchecked<1>();
    auto rq = q.unchecked<1>();
    auto rp = p.unchecked<1>();
    for (py::ssize_t i = 0; i < weight.shape(0); ++i)
        ens.points.push_back({rw(i), {rq(i), rp(i)}});
    return ens;
}

} // namespace

PYBIND11_MODULE(_dimer, m) {
    m.doc() = "Driven two-mode model: quantum and mean-field simulations";

    py::class_<DimerParams>(m, "DimerParams")
        .def(py::init<double, double, int>(), py::arg("omega"), py::arg("interaction"),
             py::arg("particles"))
        .def_static("from_nonlinearity", &DimerParams::from_nonlinearity, py::arg("u"),
                    py::arg("particles"), py::arg("omega") = 1.0)
        .def_readonly("omega", &DimerParams::omega)
        .def_readonly("interaction", &DimerParams::interaction)
        .def_readonly("particles", &DimerParams::total_particles)
        .def_property_readonly("p0", &DimerParams::p0)
        .def_property_readonly("nonlinearity", &DimerParams::effective_nonlinearity);

    py::class_<SweepProtocol>(m, "SweepProtocol")
        .def(py::init<double, double, double>(), py::arg("delta_initial"),
             py::arg("delta_turn"), py::arg("t_half"))
        .def_static("frozen", &SweepProtocol::frozen, py::arg("delta"),
                    py::arg("t_half") = 1e18)
        .def_readonly("delta_initial", &SweepProtocol::delta_initial)
        .def_readonly("delta_turn", &SweepProtocol::delta_turn)
        .def_readonly("t_half", &SweepProtocol::half_time);

    m.def("detuning_at", &detuning_at, py::arg("protocol"), py::arg("t"));

    m.def(
        "spectrum",
        [](const DimerParams& params, double delta) {
            const Spectrum spec = spectrum(params, delta);
            py::array_t<double> evals(static_cast<py::ssize_t>(spec.eigenvalues.size()));
            auto w = evals.mutable_unchecked<1>();
            for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i)
                w(i) = spec.eigenvalues[i];
            py::list evecs;
            for (std::size_t k = 0; k < spec.eigenvectors.size(); ++k)
                evecs.append(state_to_array(spec.eigenstate(static_cast<int>(k) + 1)));
            return py::make_tuple(evals, evecs);
        },
        py::arg("params"), py::arg("delta"),
        "eigenvalues (ascending) and eigenstates as complex arrays");

    m.def(
        "eigenstate",
        [](const DimerParams& params, double delta, int index) {
            return state_to_array(spectrum(params, delta).eigenstate(index));
        },
        py::arg("params"), py::arg("delta"), py::arg("index"),
        "k-th adiabatic eigenstate, 1-based ascending");

    m.def(
        "coherent_state",
        [](double theta, double phi, int particles) {
            return state_to_array(coherent_state({theta, phi}, particles));
        },
        py::arg("theta"), py::arg("phi"), py::arg("particles"));

    m.def(
        "propagate",
        [](const py::array_t<Complex>& state, const DimerParams& params,
           const SweepProtocol& protocol, double t_start, double t_end, double tolerance) {
            PropagationOptions opts;
            opts.tolerance = tolerance;
            return state_to_array(
                propagate(state_from_array(state), params, protocol, t_start, t_end, opts));
        },
        py::arg("state"), py::arg("params"), py::arg("protocol"), py::arg("t_start"),
        py::arg("t_end"), py::arg("tolerance") = 1e-10);

    m.def(
        "propagate_checkpoints",
        [](const py::array_t<Complex>& state, const DimerParams& params,
           const SweepProtocol& protocol, double t_start, const std::vector<double>& times) {
            py::list out;
            for (const FockVector& st : propagate_checkpoints(
                     state_from_array(state), params, protocol, t_start, times))
                out.append(state_to_array(st));
            return out;
        },
        py::arg("state"), py::arg("params"), py::arg("protocol"), py::arg("t_start"),
        py::arg("times"));

    m.def(
        "adiabatic_populations",
        [](const py::array_t<Complex>& state, const DimerParams& params, double delta) {
            const std::vector<double> pops =
                adiabatic_populations(state_from_array(state), params, delta);
            py::array_t<double> out(static_cast<py::ssize_t>(pops.size()));
            auto w = out.mutable_unchecked<1>();
            for (std::size_t i = 0; i < pops.size(); ++i) w(i) = pops[i];
            return out;
        },
        py::arg("state"), py::arg("params"), py::arg("delta"));

    m.def(
        "husimi_grid",
        [](const py::array_t<Complex>& state, const DimerParams& params, int n_q, int n_p) {
            const HusimiGrid g =
                husimi_grid(state_from_array(state), params, {n_q, n_p});
            py::dict d;
            d["values"] = grid_to_array(g);
            d["p0"] = g.p0;
            d["cell_area"] = g.cell_area;
            d["raw_integral"] = g.raw_integral;
            return d;
        },
        py::arg("state"), py::arg("params"), py::arg("n_q") = 256, py::arg("n_p") = 256,
        "normalized Husimi function on the rotated chart; values[iq, ip]");

    m.def(
        "wehrl_entropy",
        [](const py::array_t<Complex>& state, const DimerParams& params, int n_q, int n_p) {
            return wehrl_entropy(husimi_grid(state_from_array(state), params, {n_q, n_p}))
                .entropy;
        },
        py::arg("state"), py::arg("params"), py::arg("n_q") = 256, py::arg("n_p") = 256);

    m.def(
        "diagonal_entropy",
        [](const py::array_t<Complex>& state, const DimerParams& params, double delta) {
            return diagonal_entropy(state_from_array(state), params, delta);
        },
        py::arg("state"), py::arg("params"), py::arg("delta"));

    m.def(
        "quantum_return_probability",
        [](const std::vector<std::pair<double, py::array_t<Complex>>>& members,
           const DimerParams& params, const SweepProtocol& protocol,
           double reference_energy, int grid_resolution) {
            ReturnClassifierOptions opts;
            opts.grid_resolution = grid_resolution;
            opts.reference_energy = reference_energy;
            const QuantumReturnResult r = quantum_return_probability(
                mixed_from_list(members), params, protocol, opts);
            py::dict d;
            d["husimi_value"] = r.husimi_value;
            d["population_value"] = r.population_value;
            d["threshold_energy"] = r.threshold_energy;
            d["separated"] = r.separated;
            d["diagnostic"] = r.diagnostic;
            return d;
        },
        py::arg("members"), py::arg("params"), py::arg("protocol"),
        py::arg("reference_energy") = std::numeric_limits<double>::quiet_NaN(),
        py::arg("grid_resolution") = 256);

    m.def("mean_field_energy",
          [](double q, double p, const DimerParams& params, double delta) {
              return mean_field_energy({q, p}, params, delta);
          },
          py::arg("q"), py::arg("p"), py::arg("params"), py::arg("delta"));

    m.def(
        "integrate_to",
        [](double q, double p, const DimerParams& params, const SweepProtocol& protocol,
           double t_start, double t_end) {
            const PhasePoint end =
                integrate_to({q, p}, params, protocol, t_start, t_end);
            return py::make_tuple(end.q, end.p);
        },
        py::arg("q"), py::arg("p"), py::arg("params"), py::arg("protocol"),
        py::arg("t_start"), py::arg("t_end"));

    m.def(
        "sample_from_husimi",
        [](const py::array_t<Complex>& state, const DimerParams& params, int count,
           std::uint64_t seed, int n_q, int n_p) {
            return ensemble_to_dict(sample_from_husimi(
                husimi_grid(state_from_array(state), params, {n_q, n_p}), params, count,
                seed));
        },
        py::arg("state"), py::arg("params"), py::arg("count"), py::arg("seed"),
        py::arg("n_q") = 256, py::arg("n_p") = 256);

    m.def(
        "evolve_ensemble",
        [](const py::array_t<double>& weight, const py::array_t<double>& q,
           const py::array_t<double>& p, const DimerParams& params,
           const SweepProtocol& protocol, const std::vector<double>& times) {
            const EnsembleEvolution evo = evolve_ensemble(
                ensemble_from_arrays(weight, q, p), params, protocol, times);
            py::list snaps;
            for (const Ensemble& s : evo.snapshots) snaps.append(ensemble_to_dict(s));
            return snaps;
        },
        py::arg("weight"), py::arg("q"), py::arg("p"), py::arg("params"),
        py::arg("protocol"), py::arg("times"));

    m.def(
        "separatrix_info",
        [](const DimerParams& params, double delta) -> py::object {
            const std::optional<SeparatrixInfo> sep = separatrix_info(params, delta);
            if (!sep) return py::none();
            py::dict d;
            d["saddle_q"] = sep->saddle.q;
            d["saddle_p"] = sep->saddle.p;
            d["energy"] = sep->separatrix_energy;
            d["area_upper"] = sep->area_upper;
            d["area_lower"] = sep->area_lower;
            d["area_outer"] = sep->area_outer;
            return d;
        },
        py::arg("params"), py::arg("delta"));

    m.def(
        "kruskal_prediction",
        [](double band_energy, const DimerParams& params, const SweepProtocol& protocol) {
            const KruskalPrediction k = kruskal_prediction(band_energy, params, protocol);
            py::dict d;
            d["return_probability"] = k.return_probability;
            d["crossed"] = k.crossed;
            d["crossing_delta_forward"] = k.crossing_delta_forward;
            d["crossing_delta_backward"] = k.crossing_delta_backward;
            return d;
        },
        py::arg("band_energy"), py::arg("params"), py::arg("protocol"));

    m.def(
        "return_curve",
        [](const std::vector<std::pair<double, py::array_t<Complex>>>& members,
           const DimerParams& params, const SweepProtocol& protocol,
           const std::vector<double>& sweep_times, int samples, std::uint64_t seed) {
            ReturnCurveOptions opts;
            opts.classical_samples = samples;
            opts.seed = seed;
            const ReturnCurve rc = return_curve(mixed_from_list(members), params,
                                                protocol, sweep_times, opts);
            py::dict d;
            d["sweep_times"] = rc.sweep_times;
            d["quantum"] = rc.quantum;
            d["classical"] = rc.classical;
            d["kruskal"] = rc.kruskal;
            d["failed"] = rc.failed;
            return d;
        },
        py::arg("members"), py::arg("params"), py::arg("protocol"),
        py::arg("sweep_times"), py::arg("samples") = 2000, py::arg("seed") = 1);

    m.def(
        "entropy_trace",
        [](const std::vector<std::pair<double, py::array_t<Complex>>>& members,
           const DimerParams& params, const SweepProtocol& protocol,
           const std::vector<double>& checkpoints, int samples, std::uint64_t seed) {
            EntropyTraceOptions opts;
            opts.classical_samples = samples;
            opts.seed = seed;
            const EntropyTrace tr = entropy_trace(mixed_from_list(members), params,
                                                  protocol, checkpoints, opts);
            py::dict d;
            d["times"] = tr.times;
            d["wehrl"] = tr.wehrl;
            d["diagonal"] = tr.diagonal;
            d["classical"] = tr.classical_cg;
            return d;
        },
        py::arg("members"), py::arg("params"), py::arg("protocol"),
        py::arg("checkpoints"), py::arg("samples") = 2000, py::arg("seed") = 1);

    m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("stream"),
          py::arg("counter"));
}
