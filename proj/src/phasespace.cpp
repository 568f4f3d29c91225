#include "dimer/phasespace.hpp"

#include "dimer/classical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dimer {

namespace {

constexpr double kPi = 3.14159265358979323846;

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// <Gamma(theta,phi)|psi>, stable for large N: magnitudes by recurrence from
// the peak Fock component outward, so only the occupied window is touched.
Complex coherent_overlap(const FockVector& state, double theta, double phi) {
    const int n_tot = state.particles();
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    if (s <= 0.0) return std::conj(Complex(1.0, 0.0)) * state.amplitudes[n_tot];
    if (c <= 0.0) {
        // only n = 0 survives; conj of e^{i N phi}
        return std::polar(1.0, -n_tot * phi) * state.amplitudes[0];
    }
    const double lc = std::log(c), ls = std::log(s);
    // peak of the binomial-weighted magnitude
    int n0 = static_cast<int>(std::lround(n_tot * c * c));
    n0 = std::clamp(n0, 0, n_tot);
    const double lm0 = 0.5 * log_binomial(n_tot, n0) + n0 * lc + (n_tot - n0) * ls;
    const double m0 = std::exp(lm0);
    const Complex step_up = std::polar(1.0, phi);   // f_{n+1} = f_n e^{+i phi}
    const Complex f0 = std::polar(1.0, -(n_tot - n0) * phi);

    Complex acc(0.0);
    // upward from the peak
    {
        double m = m0;
        Complex f = f0;
        for (int n = n0; n <= n_tot; ++n) {
            acc += m * f * state.amplitudes[n];
            if (m < 1e-18 && n > n0) break;
            if (n < n_tot) {
                m *= std::sqrt(double(n_tot - n) / double(n + 1)) * (c / s);
                f *= step_up;
            }
        }
    }
    // downward from just below the peak
    {
        double m = m0;
        Complex f = f0;
        for (int n = n0 - 1; n >= 0; --n) {
            m *= std::sqrt(double(n + 1) / double(n_tot - n)) * (s / c);
            f *= std::conj(step_up);
            if (m < 1e-18) break;
            acc += m * f * state.amplitudes[n];
        }
    }
    return acc;
}

} // namespace

FockVector coherent_state(const CoherentParams& cp, int total_particles) {
    if (total_particles < 1)
        throw std::invalid_argument("coherent_state: need at least one particle");
    FockVector state(total_particles + 1);
    double c = std::cos(0.5 * cp.theta);
    double s = std::sin(0.5 * cp.theta);
    // snap rounding residue at the poles so theta = 0, pi give exact indicators
    if (std::abs(c) < 1e-15) c = 0.0;
    if (std::abs(s) < 1e-15) s = 0.0;
    for (int n = 0; n <= total_particles; ++n) {
        if ((c == 0.0 && n > 0) || (s == 0.0 && n < total_particles)) continue;
        const double lm = 0.5 * log_binomial(total_particles, n) +
                          (c > 0.0 ? n * std::log(c) : 0.0) +
                          (s > 0.0 ? (total_particles - n) * std::log(s) : 0.0);
        state.amplitudes[n] = std::polar(std::exp(lm), (total_particles - n) * cp.phi);
    }
    state.normalize();
    return state;
}

double husimi_point(const FockVector& state, const CoherentParams& cp) {
    return std::norm(coherent_overlap(state, cp.theta, cp.phi));
}

double husimi_point(const MixedState& state, const CoherentParams& cp) {
    double q = 0.0;
    for (const MixedState::Member& m : state.members)
        q += m.weight * husimi_point(m.state, cp);
    return q;
}

double HusimiGrid::q_center(int iq) const { return -kPi + (iq + 0.5) * (2.0 * kPi / n_q); }
double HusimiGrid::p_center(int ip) const {
    return -p0 + (ip + 0.5) * (2.0 * p0 / n_p);
}
double HusimiGrid::integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_area;
}

namespace {

HusimiGrid make_grid_frame(const DimerParams& params, const GridSpec& spec) {
    if (spec.n_q < 64 || spec.n_p < 64)
        throw std::invalid_argument("husimi_grid: resolution must be at least 64x64");
    HusimiGrid g;
    g.n_q = spec.n_q;
    g.n_p = spec.n_p;
    g.p0 = params.p0();
    g.cell_area = (2.0 * kPi / g.n_q) * (2.0 * g.p0 / g.n_p);
    g.values.assign(static_cast<std::size_t>(g.n_q) * g.n_p, 0.0);
    return g;
}

void accumulate_raw(HusimiGrid& g, const FockVector& state, const DimerParams& params,
                    double weight) {
    for (int iq = 0; iq < g.n_q; ++iq) {
        const double qr = g.q_center(iq);
        for (int ip = 0; ip < g.n_p; ++ip) {
            const PhasePoint pt = from_rotated({qr, g.p_center(ip)}, params);
            const BlochPoint b = to_bloch(pt, params);
            g.values[static_cast<std::size_t>(iq) * g.n_p + ip] +=
                weight * std::norm(coherent_overlap(state, b.theta, b.phi));
        }
    }
}

void finalize_grid(HusimiGrid& g) {
    g.raw_integral = g.integral();
    if (g.raw_integral <= 0.0)
        throw std::runtime_error("husimi_grid: vanishing integral");
    for (double& v : g.values) v /= g.raw_integral;
}

} // namespace

HusimiGrid husimi_grid(const FockVector& state, const DimerParams& params,
                       const GridSpec& spec) {
    HusimiGrid g = make_grid_frame(params, spec);
    accumulate_raw(g, state, params, 1.0);
    finalize_grid(g);
    return g;
}

HusimiGrid husimi_grid(const MixedState& state, const DimerParams& params,
                       const GridSpec& spec) {
    state.validate();
    HusimiGrid g = make_grid_frame(params, spec);
    for (const MixedState::Member& m : state.members)
        accumulate_raw(g, m.state, params, m.weight);
    finalize_grid(g);
    return g;
}

WehrlResult wehrl_entropy(const HusimiGrid& grid) {
    double s = 0.0;
    for (double v : grid.values)
        if (v > 0.0) s -= v * std::log(v);
    WehrlResult r;
    r.entropy = s * grid.cell_area;
    r.grid_spec = std::to_string(grid.n_q) + "x" + std::to_string(grid.n_p) +
                  " rotated chart, cell " + std::to_string(grid.cell_area);
    return r;
}

RegionIntegralResult region_integral(const HusimiGrid& grid, const EnergyWindow& window,
                                     const DimerParams& params, double delta) {
    RegionIntegralResult r;
    double sum = 0.0;
    bool any = false;
    for (int iq = 0; iq < grid.n_q; ++iq) {
        const double qr = grid.q_center(iq);
        for (int ip = 0; ip < grid.n_p; ++ip) {
            const PhasePoint pt = from_rotated({qr, grid.p_center(ip)}, params);
            const double e = mean_field_energy(pt, params, delta);
            if (e >= window.e_min && e <= window.e_max) {
                sum += grid.at(iq, ip);
                any = true;
            }
        }
    }
    r.probability = sum * grid.cell_area;
    r.empty_region = !any;
    return r;
}

PdeResidualReport husimi_pde_residual(const FockVector& state_before,
                                      const FockVector& state_after, double dt,
                                      const DimerParams& params, double delta,
                                      const PdeResidualOptions& opts) {
    if (!(dt > 0.0) || dt > 1e-2 * 1.0001)
        throw std::invalid_argument("husimi_pde_residual: dt must be in (0, 1e-2]");
    const int nq = opts.grid.n_q;
    const int np = opts.grid.n_p;
    const double p0 = params.p0();
    const double u = params.interaction;
    const double omega = params.omega;
    const double pc = opts.p_cut_fraction * p0;
    const double dq = 2.0 * kPi / nq;
    const double dp = 2.0 * pc / np;

    // raw (unnormalized) Husimi values on the unrotated chart
    auto eval = [&](const FockVector& st, std::vector<double>& out) {
        out.assign(static_cast<std::size_t>(nq) * np, 0.0);
        for (int i = 0; i < nq; ++i) {
            const double q = -kPi + (i + 0.5) * dq;
            for (int j = 0; j < np; ++j) {
                const double p = -pc + (j + 0.5) * dp;
                const BlochPoint b = to_bloch({q, p}, params);
                out[static_cast<std::size_t>(i) * np + j] =
                    std::norm(coherent_overlap(st, b.theta, b.phi));
            }
        }
    };
    std::vector<double> qb, qa;
    eval(state_before, qb);
    eval(state_after, qa);

    auto idx = [&](int i, int j) {
        i = (i % nq + nq) % nq; // q is periodic
        return static_cast<std::size_t>(i) * np + j;
    };

    PdeResidualReport rep;
    double res2 = 0.0, rhs2 = 0.0, tq2 = 0.0, tp2 = 0.0, corr2 = 0.0;
    for (int i = 0; i < nq; ++i) {
        const double q = -kPi + (i + 0.5) * dq;
        for (int j = 1; j + 1 < np; ++j) {
            const double p = -pc + (j + 0.5) * dp;
            const double root = std::sqrt(p0 * p0 - p * p);
            const double qdot_mid = (qa[idx(i, j)] - qb[idx(i, j)]) / dt;
            auto qm = [&](int ii, int jj) {
                return 0.5 * (qa[idx(ii, jj)] + qb[idx(ii, jj)]);
            };
            const double dQdq = (qm(i + 1, j) - qm(i - 1, j)) / (2.0 * dq);
            const double dQdp = (qm(i, j + 1) - qm(i, j - 1)) / (2.0 * dp);
            const double d2Qdqdp = (qm(i + 1, j + 1) - qm(i + 1, j - 1) -
                                    qm(i - 1, j + 1) + qm(i - 1, j - 1)) /
                                   (4.0 * dq * dp);
            const double tp = omega * root * std::sin(q) * dQdp;
            const double tq =
                -(2.0 * u * p + delta + omega * p * std::cos(q) / root) * dQdq;
            const double corr = -u * (p0 - p * p / p0) * d2Qdqdp;
            const double rhs = tq + tp + (opts.include_correction ? corr : 0.0);
            const double r = qdot_mid - rhs;
            res2 += r * r;
            rhs2 += rhs * rhs;
            tq2 += tq * tq;
            tp2 += tp * tp;
            corr2 += corr * corr;
        }
    }
    rep.residual_norm = std::sqrt(res2);
    rep.rhs_norm = std::sqrt(rhs2);
    rep.transport_q_norm = std::sqrt(tq2);
    rep.transport_p_norm = std::sqrt(tp2);
    rep.correction_norm = std::sqrt(corr2);
    rep.relative_residual = rep.rhs_norm > 0.0 ? rep.residual_norm / rep.rhs_norm : 0.0;
    rep.excluded_cells = 2 * nq; // p-boundary rows next to the chart poles
    return rep;
}

} // namespace dimer
