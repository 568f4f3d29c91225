#include "dimer/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dimer {

using nlohmann::json;

namespace {

InitialStateSpec parse_initial(const json& j) {
    InitialStateSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "eigenstate") {
        s.kind = InitialStateSpec::Kind::Eigenstate;
        s.index = j.at("index").get<int>();
    } else if (kind == "eigenstate_range") {
        s.kind = InitialStateSpec::Kind::EigenstateRange;
        s.first = j.at("first").get<int>();
        s.last = j.at("last").get<int>();
    } else if (kind == "coherent") {
        s.kind = InitialStateSpec::Kind::Coherent;
        s.theta = j.at("theta").get<double>();
        s.phi = j.at("phi").get<double>();
    } else if (kind == "amplitudes_file") {
        s.kind = InitialStateSpec::Kind::AmplitudesFile;
        s.path = j.at("path").get<std::string>();
    } else {
        throw std::invalid_argument("config: unknown initial-state kind '" + kind + "'");
    }
    return s;
}

json initial_to_json(const InitialStateSpec& s) {
    switch (s.kind) {
    case InitialStateSpec::Kind::Eigenstate:
        return {{"kind", "eigenstate"}, {"index", s.index}};
    case InitialStateSpec::Kind::EigenstateRange:
        return {{"kind", "eigenstate_range"}, {"first", s.first}, {"last", s.last}};
    case InitialStateSpec::Kind::Coherent:
        return {{"kind", "coherent"}, {"theta", s.theta}, {"phi", s.phi}};
    case InitialStateSpec::Kind::AmplitudesFile:
        return {{"kind", "amplitudes_file"}, {"path", s.path}};
    }
    throw std::logic_error("initial_to_json: bad kind");
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j = json::parse(in);
    if (j.contains("config")) j = j.at("config"); // manifest replay
    RunConfig cfg;
    cfg.schema_version = j.value("schema_version", 1);
    if (cfg.schema_version != 1)
        throw std::invalid_argument("config: unsupported schema_version");

    const json& p = j.at("params");
    const double omega = p.value("omega", 1.0);
    const int n = p.at("particles").get<int>();
    if (p.contains("interaction"))
        cfg.params = DimerParams(omega, p.at("interaction").get<double>(), n);
    else
        cfg.params =
            DimerParams::from_nonlinearity(p.at("nonlinearity").get<double>(), n, omega);

    const json& pr = j.at("protocol");
    const double d_i = pr.at("delta_initial").get<double>();
    const double d_0 = pr.at("delta_turn").get<double>();
    const double t_half = pr.at("t_half").get<double>();
    if (d_0 == d_i) cfg.protocol = SweepProtocol::frozen(d_i, t_half);
    else cfg.protocol = SweepProtocol(d_i, d_0, t_half);

    cfg.initial = parse_initial(j.at("initial"));
    if (j.contains("grid")) {
        cfg.grid.n_q = j.at("grid").value("n_q", 256);
        cfg.grid.n_p = j.at("grid").value("n_p", 256);
    }
    if (j.contains("ensemble")) {
        cfg.samples = j.at("ensemble").value("samples", 2000);
        cfg.seed = j.at("ensemble").value("seed", std::uint64_t{1});
    }
    cfg.checkpoints = j.value("checkpoints", 9);
    cfg.band_count = j.value("band_count", 400);
    if (j.contains("output")) {
        cfg.output_dir = j.at("output").value("directory", std::string("out"));
        cfg.write_grids = j.at("output").value("write_grids", true);
    }
    return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["params"] = {{"omega", cfg.params.omega},
                   {"interaction", cfg.params.interaction},
                   {"particles", cfg.params.total_particles}};
    j["protocol"] = {{"delta_initial", cfg.protocol.delta_initial},
                     {"delta_turn", cfg.protocol.delta_turn},
                     {"t_half", cfg.protocol.half_time}};
    j["initial"] = initial_to_json(cfg.initial);
    j["grid"] = {{"n_q", cfg.grid.n_q}, {"n_p", cfg.grid.n_p}};
    j["ensemble"] = {{"samples", cfg.samples}, {"seed", cfg.seed}};
    j["checkpoints"] = cfg.checkpoints;
    j["band_count"] = cfg.band_count;
    j["output"] = {{"directory", cfg.output_dir}, {"write_grids", cfg.write_grids}};
    return j.dump(2);
}

void validate_config(const RunConfig& cfg) {
    const int dim = cfg.params.total_particles + 1;
    switch (cfg.initial.kind) {
    case InitialStateSpec::Kind::Eigenstate:
        if (cfg.initial.index < 1 || cfg.initial.index > dim)
            throw std::invalid_argument("config: eigenstate index out of [1, N+1]");
        break;
    case InitialStateSpec::Kind::EigenstateRange:
        if (cfg.initial.first < 1 || cfg.initial.last > dim ||
            cfg.initial.first > cfg.initial.last)
            throw std::invalid_argument("config: eigenstate range out of [1, N+1]");
        break;
    case InitialStateSpec::Kind::Coherent:
        if (!(cfg.initial.theta >= 0.0) || !(cfg.initial.theta <= 3.15))
            throw std::invalid_argument("config: coherent theta out of [0, pi]");
        break;
    case InitialStateSpec::Kind::AmplitudesFile:
        if (cfg.initial.path.empty())
            throw std::invalid_argument("config: amplitudes file path missing");
        break;
    }
    if (cfg.samples < 1) throw std::invalid_argument("config: samples must be positive");
    if (cfg.checkpoints < 2)
        throw std::invalid_argument("config: need at least two checkpoints");
    if (cfg.grid.n_q < 64 || cfg.grid.n_p < 64)
        throw std::invalid_argument("config: grid must be at least 64x64");
    if (cfg.band_count < 2)
        throw std::invalid_argument("config: band_count must be at least 2");
    if (cfg.output_dir.empty())
        throw std::invalid_argument("config: output directory missing");
}

MixedState build_initial_state(const RunConfig& cfg) {
    validate_config(cfg);
    MixedState ms;
    const double d_i = cfg.protocol.delta_initial;
    switch (cfg.initial.kind) {
    case InitialStateSpec::Kind::Eigenstate: {
        const Spectrum spec = spectrum(cfg.params, d_i);
        ms.members.push_back({1.0, spec.eigenstate(cfg.initial.index)});
        break;
    }
    case InitialStateSpec::Kind::EigenstateRange: {
        const Spectrum spec = spectrum(cfg.params, d_i);
        const int count = cfg.initial.last - cfg.initial.first + 1;
        for (int k = cfg.initial.first; k <= cfg.initial.last; ++k)
            ms.members.push_back({1.0 / count, spec.eigenstate(k)});
        break;
    }
    case InitialStateSpec::Kind::Coherent:
        ms.members.push_back(
            {1.0, coherent_state({cfg.initial.theta, cfg.initial.phi},
                                 cfg.params.total_particles)});
        break;
    case InitialStateSpec::Kind::AmplitudesFile: {
        std::ifstream in(cfg.initial.path);
        if (!in)
            throw std::runtime_error("config: cannot open " + cfg.initial.path);
        FockVector st(cfg.params.total_particles + 1);
        for (std::size_t n = 0; n < st.dim(); ++n) {
            double re = 0.0, im = 0.0;
            if (!(in >> re >> im))
                throw std::runtime_error("config: amplitudes file too short");
            st.amplitudes[n] = Complex(re, im);
        }
        if (!(st.norm() > 0.0))
            throw std::runtime_error("config: amplitudes file holds a null vector");
        st.normalize();
        ms.members.push_back({1.0, st});
        break;
    }
    }
    return ms;
}

std::vector<double> checkpoint_times(const SweepProtocol& protocol, int count) {
    if (count < 2) throw std::invalid_argument("checkpoint_times: need at least two");
    std::vector<double> times(count);
    const double T = protocol.half_time;
    for (int i = 0; i < count; ++i)
        times[i] = -T + 2.0 * T * i / (count - 1);
    times.front() = -T;
    times.back() = T;
    return times;
}

namespace {
std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(17);
    return out;
}
} // namespace

void write_populations_csv(const std::string& path, const std::vector<double>& times,
                           const std::vector<double>& deltas,
                           const std::vector<std::vector<double>>& populations) {
    if (times.size() != populations.size() || times.size() != deltas.size())
        throw std::invalid_argument("write_populations_csv: length mismatch");
    std::ofstream out = open_out(path);
    out << "time [1/Omega],delta [Omega],level [1-based],population [1]\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t k = 0; k < populations[i].size(); ++k)
            out << times[i] << ',' << deltas[i] << ',' << (k + 1) << ','
                << populations[i][k] << '\n';
}

void write_husimi_csv(const std::string& path, const HusimiGrid& grid) {
    std::ofstream out = open_out(path);
    out << "# n_q=" << grid.n_q << " n_p=" << grid.n_p << " p0=" << grid.p0
        << " cell_area=" << grid.cell_area << " raw_integral=" << grid.raw_integral
        << '\n';
    out << "q_rot_index [1],p_rot_index [1],value [1/area]\n";
    for (int iq = 0; iq < grid.n_q; ++iq)
        for (int ip = 0; ip < grid.n_p; ++ip)
            out << iq << ',' << ip << ',' << grid.at(iq, ip) << '\n';
}

HusimiGrid read_husimi_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("husimi csv: missing metadata line");
    HusimiGrid g;
    {
        std::istringstream meta(line.substr(2));
        std::string tok;
        while (meta >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq);
            const double val = std::stod(tok.substr(eq + 1));
            if (key == "n_q") g.n_q = static_cast<int>(val);
            else if (key == "n_p") g.n_p = static_cast<int>(val);
            else if (key == "p0") g.p0 = val;
            else if (key == "cell_area") g.cell_area = val;
            else if (key == "raw_integral") g.raw_integral = val;
        }
    }
    if (g.n_q < 1 || g.n_p < 1) throw std::runtime_error("husimi csv: bad metadata");
    std::getline(in, line); // header row
    g.values.assign(static_cast<std::size_t>(g.n_q) * g.n_p, 0.0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int iq = 0, ip = 0;
        double v = 0.0;
        char c = ',';
        if (!(row >> iq >> c >> ip >> c >> v))
            throw std::runtime_error("husimi csv: bad row '" + line + "'");
        if (iq < 0 || iq >= g.n_q || ip < 0 || ip >= g.n_p)
            throw std::runtime_error("husimi csv: index out of range");
        g.values[static_cast<std::size_t>(iq) * g.n_p + ip] = v;
    }
    return g;
}

void write_ensemble_csv(const std::string& path, const Ensemble& ens,
                        const DimerParams& params, double delta) {
    std::ofstream out = open_out(path);
    out << "weight [1],q [rad],p [1],q_rot [rad],p_rot [1],energy [Omega]\n";
    for (const WeightedPoint& w : ens.points) {
        const RotatedPoint r = to_rotated(w.pt, params);
        out << w.weight << ',' << w.pt.q << ',' << w.pt.p << ',' << r.q_rot << ','
            << r.p_rot << ',' << mean_field_energy(w.pt, params, delta) << '\n';
    }
}

void write_entropy_csv(const std::string& path, const std::vector<double>& times,
                       const std::vector<double>& deltas,
                       const std::vector<double>& wehrl,
                       const std::vector<double>& diagonal,
                       const std::vector<double>& classical_cg) {
    std::ofstream out = open_out(path);
    out << "time [1/Omega],delta [Omega],wehrl [nats],diagonal [nats],classical_cg [nats]\n";
    auto cell = [](const std::vector<double>& v, std::size_t i) -> std::string {
        if (i >= v.size()) return "";
        std::ostringstream s;
        s << std::setprecision(17) << v[i];
        return s.str();
    };
    for (std::size_t i = 0; i < times.size(); ++i)
        out << times[i] << ',' << deltas[i] << ',' << cell(wehrl, i) << ','
            << cell(diagonal, i) << ',' << cell(classical_cg, i) << '\n';
}

} // namespace dimer
