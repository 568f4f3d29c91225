#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "dimer/quantum.hpp"

// Propagation in the instantaneous eigenbasis.  Dynamical phases are taken
// out analytically (cumulative integrals of the eigenvalues over the
// detuning), so the remaining coefficients change only through nonadiabatic
// coupling and the integrator step is set by the coupling strength, not by
// the energy scale.  Intended for small N.

namespace dimer {

namespace {

struct SpectralTable {
    int dim = 0;
    std::vector<double> deltas;            // ascending
    std::vector<std::vector<double>> energy;    // [node][k]
    std::vector<std::vector<double>> denergy;   // Hellmann-Feynman dE_k/dDelta
    std::vector<std::vector<double>> coupling;  // [node][k*dim+m] = D_km/(E_m - E_k)
    std::vector<std::vector<double>> phase_int; // cumulative integral of E_k dDelta
    // continuation gauge relative to the deterministic (largest component
    // positive) gauge, so a fresh diagonalization can be matched to the table
    std::vector<std::vector<signed char>> gauge_sign;

    int interval(double d) const {
        auto it = std::upper_bound(deltas.begin(), deltas.end(), d);
        int i = static_cast<int>(it - deltas.begin()) - 1;
        return std::clamp(i, 0, static_cast<int>(deltas.size()) - 2);
    }
};

Eigen::MatrixXd dense_hamiltonian(const HamiltonianTerms& terms, double delta) {
    const int n = static_cast<int>(terms.dim());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = terms.base_diag[i] + delta * terms.imbalance[i];
    for (int i = 0; i + 1 < n; ++i) {
        h(i, i + 1) = terms.offdiag[i];
        h(i + 1, i) = terms.offdiag[i];
    }
    return h;
}

SpectralTable build_table(const DimerParams& params, double d_lo, double d_hi,
                          const AdiabaticFrameOptions& opts) {
    const HamiltonianTerms terms(params);
    const int dim = static_cast<int>(terms.dim());
    if (dim > 64)
        throw std::invalid_argument(
            "propagate_adiabatic_frame: intended for small particle numbers");

    // node placement: uniform base grid, refined where the spectrum has a
    // narrow avoided crossing (interval width kept below gap/4)
    std::vector<double> nodes;
    const int base = std::max(16, opts.grid_points);
    nodes.reserve(base + 1);
    for (int i = 0; i <= base; ++i)
        nodes.push_back(d_lo + (d_hi - d_lo) * i / base);
    auto min_gap = [&](double d) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(terms, d),
                                                          Eigen::EigenvaluesOnly);
        double g = 1e300;
        for (int k = 0; k + 1 < dim; ++k)
            g = std::min(g, es.eigenvalues()[k + 1] - es.eigenvalues()[k]);
        return g;
    };
    const std::size_t node_cap = 60000;
    for (int pass = 0; pass < 40; ++pass) {
        std::vector<double> refined;
        refined.reserve(nodes.size());
        bool changed = false;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            refined.push_back(nodes[i]);
            const double w = nodes[i + 1] - nodes[i];
            const double g = std::min(min_gap(nodes[i]), min_gap(nodes[i + 1]));
            if (w > 0.25 * g && w > 1e-10 && nodes.size() + refined.size() < node_cap) {
                refined.push_back(0.5 * (nodes[i] + nodes[i + 1]));
                changed = true;
            }
        }
        refined.push_back(nodes.back());
        nodes.swap(refined);
        if (!changed) break;
    }

    SpectralTable table;
    table.dim = dim;
    table.deltas = nodes;
    const std::size_t nn = nodes.size();
    table.energy.resize(nn);
    table.denergy.resize(nn);
    table.coupling.resize(nn);
    table.phase_int.assign(nn, std::vector<double>(dim, 0.0));

    table.gauge_sign.assign(nn, std::vector<signed char>(dim, 1));
    Eigen::MatrixXd prev_vec;
    for (std::size_t i = 0; i < nn; ++i) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            dense_hamiltonian(terms, nodes[i]));
        if (es.info() != Eigen::Success)
            throw std::runtime_error("propagate_adiabatic_frame: eigensolver failed");
        Eigen::MatrixXd vec = es.eigenvectors();
        if (i > 0) {
            // keep the eigenvector gauge continuous along the grid
            for (int k = 0; k < dim; ++k)
                if (prev_vec.col(k).dot(vec.col(k)) < 0.0) vec.col(k) *= -1.0;
        }
        for (int k = 0; k < dim; ++k) {
            int imax = 0;
            for (int n = 1; n < dim; ++n)
                if (std::abs(vec(n, k)) > std::abs(vec(imax, k))) imax = n;
            table.gauge_sign[i][k] = vec(imax, k) >= 0.0 ? 1 : -1;
        }
        table.energy[i].resize(dim);
        table.denergy[i].resize(dim);
        table.coupling[i].assign(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int k = 0; k < dim; ++k) {
            table.energy[i][k] = es.eigenvalues()[k];
            double de = 0.0;
            for (int n = 0; n < dim; ++n)
                de += terms.imbalance[n] * vec(n, k) * vec(n, k);
            table.denergy[i][k] = de;
        }
        for (int k = 0; k < dim; ++k)
            for (int m = 0; m < dim; ++m) {
                if (m == k) continue;
                double dkm = 0.0;
                for (int n = 0; n < dim; ++n)
                    dkm += vec(n, k) * terms.imbalance[n] * vec(n, m);
                table.coupling[i][static_cast<std::size_t>(k) * dim + m] =
                    dkm / (table.energy[i][m] - table.energy[i][k]);
            }
        prev_vec.swap(vec);
    }

    // cumulative phase integrals from cubic Hermite segments
    for (std::size_t i = 0; i + 1 < nn; ++i) {
        const double w = nodes[i + 1] - nodes[i];
        for (int k = 0; k < dim; ++k) {
            const double e0 = table.energy[i][k], e1 = table.energy[i + 1][k];
            const double s0 = w * table.denergy[i][k], s1 = w * table.denergy[i + 1][k];
            const double c2 = 3.0 * (e1 - e0) - 2.0 * s0 - s1;
            const double c3 = 2.0 * (e0 - e1) + s0 + s1;
            table.phase_int[i + 1][k] =
                table.phase_int[i][k] + w * (e0 + 0.5 * s0 + c2 / 3.0 + 0.25 * c3);
        }
    }
    return table;
}

void interp_energy(const SpectralTable& t, double d, std::vector<double>& e_out,
                   std::vector<double>& theta_out) {
    const int i = t.interval(d);
    const double w = t.deltas[i + 1] - t.deltas[i];
    const double s = (d - t.deltas[i]) / w;
    for (int k = 0; k < t.dim; ++k) {
        const double e0 = t.energy[i][k], e1 = t.energy[i + 1][k];
        const double s0 = w * t.denergy[i][k], s1 = w * t.denergy[i + 1][k];
        const double c2 = 3.0 * (e1 - e0) - 2.0 * s0 - s1;
        const double c3 = 2.0 * (e0 - e1) + s0 + s1;
        e_out[k] = e0 + s * (s0 + s * (c2 + s * c3));
        theta_out[k] = t.phase_int[i][k] +
                       w * s * (e0 + s * (0.5 * s0 + s * (c2 / 3.0 + 0.25 * c3 * s)));
    }
}

void interp_coupling(const SpectralTable& t, double d, std::vector<double>& g_out) {
    const int i = t.interval(d);
    const double s = (d - t.deltas[i]) / (t.deltas[i + 1] - t.deltas[i]);
    const std::vector<double>& a = t.coupling[i];
    const std::vector<double>& b = t.coupling[i + 1];
    for (std::size_t j = 0; j < a.size(); ++j) g_out[j] = (1.0 - s) * a[j] + s * b[j];
}

using State = std::vector<double>; // interleaved re/im of the frame coefficients

class FrameSystem {
  public:
    FrameSystem(const SpectralTable& table, double rate, double delta_at_t0,
                double t0, const std::vector<double>& theta_offset, double drop)
        : table_(table), rate_(rate), delta0_(delta_at_t0), t0_(t0),
          theta_offset_(theta_offset), drop_(drop), e_(table.dim), th_(table.dim),
          theta_(table.dim), g_(static_cast<std::size_t>(table.dim) * table.dim) {
        interp_energy(table_, delta0_, e_, th0_ref_);
    }

    void operator()(const State& y, State& dydt, double t) {
        const int dim = table_.dim;
        const double d = delta0_ + rate_ * (t - t0_);
        interp_energy(table_, d, e_, th_);
        interp_coupling(table_, d, g_);
        for (int k = 0; k < dim; ++k)
            theta_[k] = theta_offset_[k] + (th_[k] - th0_ref_[k]) / rate_;
        std::fill(dydt.begin(), dydt.end(), 0.0);
        for (int k = 0; k < dim; ++k) {
            for (int m = 0; m < dim; ++m) {
                if (m == k) continue;
                const double g = g_[static_cast<std::size_t>(k) * dim + m];
                const double omega = e_[m] - e_[k];
                if (drop_ > 0.0 &&
                    std::abs(rate_ * g) < drop_ * std::max(std::abs(omega), 1e-300))
                    continue;
                const double phi = theta_[k] - theta_[m];
                const double cr = std::cos(phi), ci = std::sin(phi);
                const double wr = -rate_ * g * cr, wi = -rate_ * g * ci;
                const double xr = y[2 * m], xi = y[2 * m + 1];
                dydt[2 * k] += wr * xr - wi * xi;
                dydt[2 * k + 1] += wr * xi + wi * xr;
            }
        }
    }

    // theta at leg time t, reusing the last interpolation arrays
    void thetas(double t, std::vector<double>& out) {
        const double d = delta0_ + rate_ * (t - t0_);
        interp_energy(table_, d, e_, th_);
        for (int k = 0; k < table_.dim; ++k)
            out[k] = theta_offset_[k] + (th_[k] - th0_ref_[k]) / rate_;
    }

  private:
    const SpectralTable& table_;
    double rate_, delta0_, t0_;
    std::vector<double> theta_offset_;
    double drop_;
    std::vector<double> e_, th_, theta_, g_;
    std::vector<double> th0_ref_ = std::vector<double>(table_.dim);
};

void integrate_leg(FrameSystem& sys, State& y, double t0, double t1, double tol,
                   double max_step,
                   const std::function<void(double, const State&)>& observer) {
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State>>(tol, tol);
    double t = t0;
    double dt = std::min(max_step, (t1 - t0) * 1e-6 + 1e-12);
    while (t < t1) {
        dt = std::min(dt, t1 - t);
        ode::controlled_step_result r = stepper.try_step(sys, y, t, dt);
        if (r == ode::success) {
            if (observer) observer(t, y);
            dt = std::min(dt, max_step);
        } else if (dt < 1e-13 * std::max(1.0, std::abs(t1))) {
            throw std::runtime_error("propagate_adiabatic_frame: step underflow");
        }
    }
}

struct FramePropagation {
    FockVector final_state;
    double min_ground_population = 1.0;
    double final_ground_population = 0.0;
};

FramePropagation run_frame(const FockVector& state, const DimerParams& params,
                           const SweepProtocol& protocol, double t_start, double t_end,
                           const AdiabaticFrameOptions& opts, bool monitor_ground) {
    if (!(t_start < t_end))
        throw std::invalid_argument("propagate_adiabatic_frame: need t_start < t_end");
    if (t_start < -protocol.half_time || t_end > protocol.half_time)
        throw std::invalid_argument("propagate_adiabatic_frame: outside sweep interval");
    if (std::abs(state.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("propagate_adiabatic_frame: state must be normalized");

    const int dim = state.particles() + 1;

    // frozen detuning: pure dynamical phases in the fixed eigenbasis
    if (protocol.is_frozen()) {
        const Spectrum spec = spectrum(params, protocol.delta_initial);
        FockVector out(dim);
        double pg_min = 1.0;
        Complex cg(0.0);
        for (int k = 0; k < dim; ++k) {
            Complex c(0.0);
            for (int n = 0; n < dim; ++n)
                c += spec.eigenvectors[k][n] * state.amplitudes[n];
            const Complex ph =
                std::exp(Complex(0.0, -spec.eigenvalues[k] * (t_end - t_start)));
            if (k == 0) cg = c * ph;
            for (int n = 0; n < dim; ++n)
                out.amplitudes[n] += c * ph * spec.eigenvectors[k][n];
        }
        pg_min = std::norm(cg);
        return {out, pg_min, pg_min};
    }

    const double d_lo = std::min(protocol.delta_initial, protocol.delta_turn);
    const double d_hi = std::max(protocol.delta_initial, protocol.delta_turn);
    const SpectralTable table = build_table(params, d_lo, d_hi, opts);

    // endpoint bases: fresh diagonalization brought into the table gauge via
    // the stored sign chain (deterministic gauge + nearest-node sign)
    const HamiltonianTerms terms(params);
    auto aligned_basis = [&](double d) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(terms, d));
        Eigen::MatrixXd vec = es.eigenvectors();
        const int i = table.interval(d);
        const int node = (d - table.deltas[i] < table.deltas[i + 1] - d) ? i : i + 1;
        for (int k = 0; k < dim; ++k) {
            int imax = 0;
            for (int n = 1; n < dim; ++n)
                if (std::abs(vec(n, k)) > std::abs(vec(imax, k))) imax = n;
            const int det_sign = vec(imax, k) >= 0.0 ? 1 : -1;
            if (det_sign != table.gauge_sign[node][k]) vec.col(k) *= -1.0;
        }
        return vec;
    };

    Eigen::MatrixXd vec_start = aligned_basis(detuning_at(protocol, t_start));

    State y(2 * dim, 0.0);
    for (int k = 0; k < dim; ++k) {
        Complex c(0.0);
        for (int n = 0; n < dim; ++n) c += vec_start(n, k) * state.amplitudes[n];
        y[2 * k] = c.real();
        y[2 * k + 1] = c.imag();
    }

    double min_pg = std::norm(Complex(y[0], y[1]));
    auto observer = [&](double, const State& s) {
        if (!monitor_ground) return;
        const double pg = s[0] * s[0] + s[1] * s[1];
        min_pg = std::min(min_pg, pg);
    };

    const double span = t_end - t_start;
    const double max_step = std::max(opts.max_step_fraction * span, 1e-12);
    std::vector<double> theta_offset(dim, 0.0);
    std::vector<double> theta_end(dim, 0.0);

    double t = t_start;
    while (t < t_end) {
        const double leg_end = (t < 0.0 && t_end > 0.0) ? 0.0 : t_end;
        const double rate = detuning_rate(protocol, 0.5 * (t + leg_end));
        FrameSystem sys(table, rate, detuning_at(protocol, t), t, theta_offset,
                        opts.drop_threshold);
        integrate_leg(sys, y, t, leg_end, opts.tolerance, max_step, observer);
        sys.thetas(leg_end, theta_end);
        theta_offset = theta_end;
        t = leg_end;
    }

    Eigen::MatrixXd vec_end = aligned_basis(detuning_at(protocol, t_end));
    FockVector out(dim);
    Complex cg_final(0.0);
    for (int k = 0; k < dim; ++k) {
        const Complex c(y[2 * k], y[2 * k + 1]);
        const Complex ph = std::exp(Complex(0.0, -theta_offset[k]));
        if (k == 0) cg_final = c;
        for (int n = 0; n < dim; ++n) out.amplitudes[n] += c * ph * vec_end(n, k);
    }
    return {out, min_pg, std::norm(cg_final)};
}

} // namespace

FockVector propagate_adiabatic_frame(const FockVector& state, const DimerParams& params,
                                     const SweepProtocol& protocol, double t_start,
                                     double t_end, const AdiabaticFrameOptions& opts) {
    return run_frame(state, params, protocol, t_start, t_end, opts, false).final_state;
}

AdiabaticSweepReport adiabatic_ground_sweep(const DimerParams& params,
                                            const SweepProtocol& protocol,
                                            const AdiabaticFrameOptions& opts) {
    const Spectrum spec = spectrum(params, detuning_at(protocol, -protocol.half_time));
    FockVector ground = spec.eigenstate(1);
    FramePropagation r = run_frame(ground, params, protocol, -protocol.half_time,
                                   protocol.half_time, opts, true);
    return {r.min_ground_population, r.final_ground_population};
}

} // namespace dimer
