#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dimer/classical.hpp"
#include "dimer/model.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/quantum.hpp"

// Run configuration and file exchange: JSON configs, CSV artifacts.

namespace dimer {

struct InitialStateSpec {
    enum class Kind { Eigenstate, EigenstateRange, Coherent, AmplitudesFile };
    Kind kind = Kind::Eigenstate;
    int index = 1;          // Eigenstate, 1-based ascending
    int first = 1, last = 1; // EigenstateRange, inclusive, uniform weights
    double theta = 0.0, phi = 0.0; // Coherent
    std::string path;       // AmplitudesFile: lines "re im", N+1 of them
};

struct RunConfig {
    int schema_version = 1;
    DimerParams params;
    SweepProtocol protocol = SweepProtocol::frozen(0.0);
    InitialStateSpec initial;
    GridSpec grid{256, 256};
    int samples = 2000;
    std::uint64_t seed = 1;
    int checkpoints = 9;
    int band_count = 400;
    std::string output_dir = "out";
    bool write_grids = true;
};

// Parses a config file; also accepts a run manifest (its embedded "config"
// object is used), so a finished run can be replayed from its manifest.
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg); // pretty-printed

// Throws std::invalid_argument on any out-of-range field; called before any
// numeric work starts.
void validate_config(const RunConfig& cfg);

// Builds the initial state at protocol.delta_initial.
MixedState build_initial_state(const RunConfig& cfg);

// evenly spaced checkpoint times on [-T, +T]
std::vector<double> checkpoint_times(const SweepProtocol& protocol, int count);

// --- CSV artifacts ---------------------------------------------------------

void write_populations_csv(const std::string& path, const std::vector<double>& times,
                           const std::vector<double>& deltas,
                           const std::vector<std::vector<double>>& populations);

void write_husimi_csv(const std::string& path, const HusimiGrid& grid);
HusimiGrid read_husimi_csv(const std::string& path);

void write_ensemble_csv(const std::string& path, const Ensemble& ens,
                        const DimerParams& params, double delta);

void write_entropy_csv(const std::string& path, const std::vector<double>& times,
                       const std::vector<double>& deltas,
                       const std::vector<double>& wehrl,
                       const std::vector<double>& diagonal,
                       const std::vector<double>& classical_cg);

} // namespace dimer
