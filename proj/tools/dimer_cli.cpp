// Command-line front end: scenario execution, deterministic seeding and
// artifact emission (CSV/JSON/PNG) for the driven two-mode model.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dimer/analysis.hpp"
#include "dimer/io.hpp"
#include "dimer/rng.hpp"

using namespace dimer;
using nlohmann::json;

namespace fs = std::filesystem;

#ifndef DIMER_CODE_VERSION
#define DIMER_CODE_VERSION "unknown"
#endif

namespace {

struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<double> t_half;
    std::optional<int> checkpoints;
    std::optional<int> eigenstate;
    std::optional<int> grid;
    std::optional<int> particles;
    std::optional<double> nonlinearity;
};

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
    // flags win over the config file; the output-directory default may also
    // come from the environment
    if (const char* env = std::getenv("DIMER_OUTPUT_DIR"); env && cfg.output_dir == "out")
        cfg.output_dir = env;
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.samples) cfg.samples = *ov.samples;
    if (ov.checkpoints) cfg.checkpoints = *ov.checkpoints;
    if (ov.grid) cfg.grid = {*ov.grid, *ov.grid};
    if (ov.eigenstate) {
        cfg.initial.kind = InitialStateSpec::Kind::Eigenstate;
        cfg.initial.index = *ov.eigenstate;
    }
    if (ov.t_half || ov.particles || ov.nonlinearity) {
        const double t = ov.t_half ? *ov.t_half : cfg.protocol.half_time;
        if (cfg.protocol.is_frozen())
            cfg.protocol = SweepProtocol::frozen(cfg.protocol.delta_initial, t);
        else
            cfg.protocol =
                SweepProtocol(cfg.protocol.delta_initial, cfg.protocol.delta_turn, t);
        if (ov.particles || ov.nonlinearity) {
            const int n = ov.particles ? *ov.particles : cfg.params.total_particles;
            const double u = ov.nonlinearity ? *ov.nonlinearity
                                             : cfg.params.effective_nonlinearity();
            cfg.params = DimerParams::from_nonlinearity(u, n, cfg.params.omega);
        }
    }
}

int thread_cap() {
    if (const char* env = std::getenv("DIMER_MAX_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const RunConfig& cfg, const json& results,
                    const std::vector<std::string>& artifacts,
                    const std::string& status, const std::string& error = "") {
    json m;
    m["schema_version"] = 1;
    m["code_version"] = DIMER_CODE_VERSION;
    m["command"] = command;
    m["thread_cap"] = thread_cap();
    m["config"] = json::parse(config_to_json(cfg));
    m["tolerances"] = {{"propagation", PropagationOptions{}.tolerance},
                       {"trajectory", TrajectoryOptions{}.tolerance}};
    m["seed"] = cfg.seed;
    m["results"] = results;
    m["artifacts"] = artifacts;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string numbered(const char* stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_t%04zu.csv", stem, i);
    return buf;
}

// classifier fallback threshold: top of the initial band at delta_initial
ReturnClassifierOptions classifier_with_reference(const MixedState& initial,
                                                  const DimerParams& params,
                                                  double d_i, const GridSpec& grid) {
    ReturnClassifierOptions c;
    c.grid_resolution = grid.n_q;
    const Spectrum spec = spectrum(params, d_i);
    const std::vector<double> pops = adiabatic_populations(initial, params, d_i);
    for (std::size_t k = 0; k < pops.size(); ++k)
        if (pops[k] > c.population_floor &&
            !(spec.eigenvalues[k] <= c.reference_energy))
            c.reference_energy = spec.eigenvalues[k];
    return c;
}

double band_mean_energy(const MixedState& initial, const DimerParams& params,
                        double d_i) {
    const Spectrum spec = spectrum(params, d_i);
    const std::vector<double> pops = adiabatic_populations(initial, params, d_i);
    double e = 0.0;
    for (std::size_t k = 0; k < pops.size(); ++k) e += pops[k] * spec.eigenvalues[k];
    return e;
}

int cmd_run_quantum(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    std::vector<std::string> artifacts;
    const MixedState initial = build_initial_state(cfg);
    const std::vector<double> times = checkpoint_times(cfg.protocol, cfg.checkpoints);

    std::vector<std::vector<FockVector>> member_states;
    for (const MixedState::Member& m : initial.members)
        member_states.push_back(
            propagate_checkpoints(m.state, cfg.params, cfg.protocol, times.front(), times));

    std::vector<double> deltas;
    std::vector<std::vector<double>> pops;
    for (std::size_t i = 0; i < times.size(); ++i) {
        MixedState snap;
        for (std::size_t k = 0; k < initial.members.size(); ++k)
            snap.members.push_back({initial.members[k].weight, member_states[k][i]});
        const double delta = detuning_at(cfg.protocol, times[i]);
        deltas.push_back(delta);
        pops.push_back(adiabatic_populations(snap, cfg.params, delta));
        if (cfg.write_grids) {
            const std::string name = numbered("husimi", i);
            write_husimi_csv((dir / name).string(),
                             husimi_grid(snap, cfg.params, cfg.grid));
            artifacts.push_back(name);
        }
    }
    write_populations_csv((dir / "populations.csv").string(), times, deltas, pops);
    artifacts.push_back("populations.csv");

    MixedState finals;
    for (std::size_t k = 0; k < initial.members.size(); ++k)
        finals.members.push_back({initial.members[k].weight, member_states[k].back()});
    const ReturnClassifierOptions classifier = classifier_with_reference(
        initial, cfg.params, cfg.protocol.delta_initial, cfg.grid);
    const QuantumReturnResult ret =
        quantum_return_probability(finals, cfg.params, cfg.protocol, classifier);
    json rj = {{"husimi_value", ret.husimi_value},
               {"population_value", ret.population_value},
               {"threshold_energy", ret.threshold_energy},
               {"separated", ret.separated},
               {"diagnostic", ret.diagnostic},
               {"agreement", std::abs(ret.husimi_value - ret.population_value)}};
    write_text(dir / "return.json", rj.dump(2) + "\n");
    artifacts.push_back("return.json");
    write_manifest(dir, "run-quantum", cfg, rj, artifacts, "ok");
    return 0;
}

int cmd_run_classical(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    std::vector<std::string> artifacts;
    const MixedState initial = build_initial_state(cfg);
    const double d_i = cfg.protocol.delta_initial;
    const std::vector<double> times = checkpoint_times(cfg.protocol, cfg.checkpoints);

    const HusimiGrid g0 = husimi_grid(initial, cfg.params, cfg.grid);
    const Ensemble ens = sample_from_husimi(g0, cfg.params, cfg.samples,
                                            derive_seed(cfg.seed, 0, 0));
    const EnsembleEvolution evo =
        evolve_ensemble(ens, cfg.params, cfg.protocol, times);

    std::vector<double> deltas, entropies;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double delta = detuning_at(cfg.protocol, times[i]);
        deltas.push_back(delta);
        const std::string name = numbered("ensemble", i);
        write_ensemble_csv((dir / name).string(), evo.snapshots[i], cfg.params, delta);
        artifacts.push_back(name);
        Ensemble snap = evo.snapshots[i];
        const double total = snap.total_weight();
        for (WeightedPoint& w : snap.points) w.weight /= total;
        entropies.push_back(classical_entropy(
            coarse_grain(snap, cfg.params, delta, cfg.band_count)));
    }
    write_entropy_csv((dir / "entropy.csv").string(), times, deltas, {}, {}, entropies);
    artifacts.push_back("entropy.csv");

    // return probability from the final energies at the initial detuning
    double shell_min = 1e300, shell_max = -1e300;
    for (const WeightedPoint& w : ens.points) {
        const double e = mean_field_energy(w.pt, cfg.params, d_i);
        shell_min = std::min(shell_min, e);
        shell_max = std::max(shell_max, e);
    }
    std::vector<std::pair<double, double>> ew;
    double total = 0.0, below = 0.0;
    for (const WeightedPoint& w : evo.snapshots.back().points) {
        ew.emplace_back(mean_field_energy(w.pt, cfg.params, d_i), w.weight);
        total += w.weight;
    }
    const double thr = classical_return_threshold(ew, shell_min, shell_max);
    for (const auto& [e, w] : ew)
        if (e <= thr) below += w;
    json rj = {{"classical_return_probability", below / total},
               {"threshold_energy", thr},
               {"samples", cfg.samples},
               {"seed", cfg.seed},
               {"lost_trajectories", evo.failed_points.size()}};
    write_text(dir / "return.json", rj.dump(2) + "\n");
    artifacts.push_back("return.json");
    write_manifest(dir, "run-classical", cfg, rj, artifacts, "ok");
    return 0;
}

int cmd_scan(const RunConfig& cfg, const std::vector<double>& sweep_times) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const MixedState initial = build_initial_state(cfg);
    ReturnCurveOptions opts;
    opts.classical_samples = cfg.samples;
    opts.seed = derive_seed(cfg.seed, 0, 0);
    opts.grid = cfg.grid;
    const ReturnCurve rc =
        return_curve(initial, cfg.params, cfg.protocol, sweep_times, opts);
    json rj = {{"sweep_times", rc.sweep_times},
               {"quantum", rc.quantum},
               {"classical", rc.classical},
               {"kruskal", rc.kruskal},
               {"failed", rc.failed}};
    write_text(dir / "return.json", rj.dump(2) + "\n");
    write_manifest(dir, "scan", cfg, rj, {"return.json"}, "ok");
    return 0;
}

int cmd_entropy(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const MixedState initial = build_initial_state(cfg);
    const std::vector<double> times = checkpoint_times(cfg.protocol, cfg.checkpoints);
    EntropyTraceOptions opts;
    opts.grid = cfg.grid;
    opts.classical_samples = cfg.samples;
    opts.seed = derive_seed(cfg.seed, 0, 0);
    opts.band_count = cfg.band_count;
    const EntropyTrace tr = entropy_trace(initial, cfg.params, cfg.protocol, times, opts);
    std::vector<double> deltas;
    for (double t : times) deltas.push_back(detuning_at(cfg.protocol, t));
    write_entropy_csv((dir / "entropy.csv").string(), tr.times, deltas, tr.wehrl,
                      tr.diagonal, tr.classical_cg);
    json rj = {{"wehrl_offset", tr.wehrl_offset},
               {"diagonal_offset", tr.diagonal_offset},
               {"classical_offset", tr.classical_offset}};
    write_manifest(dir, "entropy", cfg, rj, {"entropy.csv"}, "ok");
    return 0;
}

int cmd_kruskal(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const MixedState initial = build_initial_state(cfg);
    const double band =
        band_mean_energy(initial, cfg.params, cfg.protocol.delta_initial);
    const KruskalPrediction kp = kruskal_prediction(band, cfg.params, cfg.protocol);
    json rj = {{"band_energy", band},
               {"return_probability", kp.return_probability},
               {"crossed", kp.crossed},
               {"crossing_delta_forward", kp.crossing_delta_forward},
               {"crossing_delta_backward", kp.crossing_delta_backward},
               {"area_rate_upper", kp.area_rate_upper},
               {"area_rate_lower", kp.area_rate_lower},
               {"area_rate_outer", kp.area_rate_outer}};
    write_text(dir / "kruskal.json", rj.dump(2) + "\n");
    write_manifest(dir, "kruskal", cfg, rj, {"kruskal.json"}, "ok");
    return 0;
}

int cmd_render(const std::string& input, const std::string& output,
               const std::string& style, bool bare, int zoom) {
    const HusimiGrid g = read_husimi_csv(input);
    double vmin = 1e300, vmax = -1e300;
    for (double v : g.values) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    const double span = vmax > vmin ? vmax - vmin : 1.0;
    // data block: q along x, p along y (top row = p_max), nearest-neighbor zoom
    cv::Mat data(g.n_p * zoom, g.n_q * zoom, CV_8UC1);
    for (int iq = 0; iq < g.n_q; ++iq)
        for (int ip = 0; ip < g.n_p; ++ip) {
            const int px = static_cast<int>(
                std::lround(255.0 * (g.at(iq, ip) - vmin) / span));
            for (int zy = 0; zy < zoom; ++zy)
                for (int zx = 0; zx < zoom; ++zx)
                    data.at<std::uint8_t>((g.n_p - 1 - ip) * zoom + zy,
                                          iq * zoom + zx) =
                        static_cast<std::uint8_t>(px);
        }
    cv::Mat img;
    if (style == "gray") img = data;
    else if (style == "viridis") cv::applyColorMap(data, img, cv::COLORMAP_VIRIDIS);
    else throw std::invalid_argument("render: style must be gray or viridis");

    if (!bare) {
        const int ml = 70, mb = 45, mt = 15, mr = 15;
        cv::Mat canvas(img.rows + mt + mb, img.cols + ml + mr, img.type(),
                       cv::Scalar::all(255));
        img.copyTo(canvas(cv::Rect(ml, mt, img.cols, img.rows)));
        const cv::Scalar black = cv::Scalar::all(0);
        cv::rectangle(canvas, {ml - 1, mt - 1},
                      {ml + img.cols, mt + img.rows}, black);
        auto label = [&](const std::string& s, int x, int y) {
            cv::putText(canvas, s, {x, y}, cv::FONT_HERSHEY_SIMPLEX, 0.35, black, 1);
        };
        label("-pi", ml - 10, mt + img.rows + 15);
        label("q'", ml + img.cols / 2, mt + img.rows + 30);
        label("pi", ml + img.cols - 10, mt + img.rows + 15);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", g.p0);
        label(buf, 5, mt + 10);
        label("p'", 5, mt + img.rows / 2);
        std::snprintf(buf, sizeof(buf), "-%g", g.p0);
        label(buf, 5, mt + img.rows - 2);
        img = canvas;
    }
    if (!cv::imwrite(output, img))
        throw std::runtime_error("render: cannot write " + output);
    std::cout << "rendered " << output << " (min " << vmin << ", max " << vmax
              << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven two-mode model: quantum and mean-field simulations"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    app.add_option("--config", config_path, "JSON run configuration (or a manifest)");
    app.add_option("--output", ov.output_dir, "output directory (overrides config)");
    app.add_option("--seed", ov.seed, "seed override");
    app.add_option("--samples", ov.samples, "classical sample count override");
    app.add_option("--t-half", ov.t_half, "sweep half time override");
    app.add_option("--checkpoints", ov.checkpoints, "checkpoint count override");
    app.add_option("--eigenstate", ov.eigenstate, "initial eigenstate index override");
    app.add_option("--grid", ov.grid, "square Husimi grid resolution override");
    app.add_option("--particles", ov.particles, "particle number override");
    app.add_option("--nonlinearity", ov.nonlinearity, "nonlinearity u override");

    auto* quantum = app.add_subcommand("run-quantum", "propagate the quantum state");
    auto* classical =
        app.add_subcommand("run-classical", "evolve a sampled classical ensemble");
    auto* scan = app.add_subcommand("scan", "return probability vs sweep time");
    std::vector<double> sweep_times;
    scan->add_option("--sweep-times", sweep_times, "full cycle durations 2T")
        ->required();
    auto* entropy = app.add_subcommand("entropy", "entropy measures along the sweep");
    auto* kruskal = app.add_subcommand("kruskal", "quasi-static return prediction");

    auto* render = app.add_subcommand("render", "heatmap PNG from a grid CSV");
    std::string render_in, render_out, style = "gray";
    bool bare = false;
    int zoom = 2;
    render->add_option("--input", render_in, "grid CSV")->required();
    render->add_option("--out", render_out, "PNG path")->required();
    render->add_option("--style", style, "gray|viridis");
    render->add_flag("--bare", bare, "data pixels only, no axes");
    render->add_option("--zoom", zoom, "pixels per cell")->check(CLI::Range(1, 16));

    CLI11_PARSE(app, argc, argv);

    try {
        if (render->parsed()) return cmd_render(render_in, render_out, style, bare, zoom);
        if (config_path.empty())
            throw std::invalid_argument("--config is required for this command");
        RunConfig cfg = load_config(config_path);
        apply_overrides(cfg, ov);
        validate_config(cfg); // reject bad indices before any computation
        try {
            if (quantum->parsed()) return cmd_run_quantum(cfg);
            if (classical->parsed()) return cmd_run_classical(cfg);
            if (scan->parsed()) return cmd_scan(cfg, sweep_times);
            if (entropy->parsed()) return cmd_entropy(cfg);
            if (kruskal->parsed()) return cmd_kruskal(cfg);
        } catch (const std::exception& e) {
            // diagnostic manifest, then nonzero exit
            try {
                fs::create_directories(cfg.output_dir);
                write_manifest(cfg.output_dir, app.get_subcommands().front()->get_name(),
                               cfg, json::object(), {}, "failed", e.what());
            } catch (...) {
            }
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
        throw std::logic_error("no subcommand dispatched");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
