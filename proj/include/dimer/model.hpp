#pragma once

#include <cmath>
#include <stdexcept>

// Physical parameters, sweep schedule and the coordinate charts of the
// two-mode Bose-Hubbard phase space.  Units: hbar = 1, energies and times
// in units of the tunneling rate Omega.

namespace dimer {

struct DimerParams {
    double omega = 1.0;      // tunneling rate, sets the unit scale
    double interaction = 0.0; // on-site interaction U (negative: attractive)
    int total_particles = 1; // N

    DimerParams() = default;
    DimerParams(double omega_, double u_int, int n)
        : omega(omega_), interaction(u_int), total_particles(n) {
        if (omega <= 0.0)
            throw std::invalid_argument("DimerParams: omega must be positive");
        if (total_particles < 1)
            throw std::invalid_argument("DimerParams: need at least one particle");
    }

    // characteristic nonlinearity u = U N / Omega; |u| > 1 is supercritical
    double effective_nonlinearity() const {
        return interaction * total_particles / omega;
    }
    // radius of the flat phase-space chart, p0 = N/2
    double p0() const { return 0.5 * total_particles; }

    static DimerParams from_nonlinearity(double u, int n, double omega_ = 1.0) {
        return DimerParams(omega_, u * omega_ / n, n);
    }
};

struct SweepProtocol {
    double delta_initial = 0.0; // Delta_I, value at t = -T and t = +T
    double delta_turn = 0.0;    // Delta_0, value at t = 0
    double half_time = 1.0;     // T; the sweep runs on [-T, +T]

    SweepProtocol() = default;
    SweepProtocol(double d_init, double d_turn, double t_half)
        : delta_initial(d_init), delta_turn(d_turn), half_time(t_half) {
        if (!(delta_turn > delta_initial))
            throw std::invalid_argument("SweepProtocol: delta_turn must exceed delta_initial");
        if (!(half_time > 0.0))
            throw std::invalid_argument("SweepProtocol: half_time must be positive");
    }

    // frozen protocol: Delta(t) == delta for all t, half_time large
    static SweepProtocol frozen(double delta, double t_half = 1e18) {
        SweepProtocol p;
        p.delta_initial = delta;
        p.delta_turn = delta;
        p.half_time = t_half;
        return p;
    }

    bool is_frozen() const { return delta_initial == delta_turn; }
};

// Triangular detuning schedule, piecewise linear and even in t.
inline double detuning_at(const SweepProtocol& protocol, double t) {
    const double T = protocol.half_time;
    if (t < -T || t > T)
        throw std::invalid_argument("detuning_at: t outside [-T, +T]");
    const double s = std::abs(t) / T;
    return protocol.delta_initial * s + protocol.delta_turn * (1.0 - s);
}

// d Delta / dt at time t (sign of t selects the sweep leg; t = 0 is the turn)
inline double detuning_rate(const SweepProtocol& protocol, double t) {
    const double slope =
        (protocol.delta_initial - protocol.delta_turn) / protocol.half_time;
    return t >= 0.0 ? slope : -slope;
}

// Flat canonical chart: relative phase q (period 2 pi) and imbalance p, |p| <= p0.
struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

// Bloch sphere angles; q = phi, p = (N/2) cos(theta).
struct BlochPoint {
    double theta = 0.0; // polar, [0, pi]
    double phi = 0.0;   // azimuth, [-pi, pi)
};

// Rotated canonical chart (q', p'); a rigid rotation of the Bloch sphere
// that moves the chart poles to (q = +-pi/2, p = 0).
struct RotatedPoint {
    double q_rot = 0.0;
    double p_rot = 0.0;
};

inline BlochPoint to_bloch(const PhasePoint& pt, const DimerParams& params) {
    const double p0 = params.p0();
    double c = pt.p / p0;
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return BlochPoint{std::acos(c), pt.q};
}

inline PhasePoint from_bloch(const BlochPoint& b, const DimerParams& params) {
    return PhasePoint{b.phi, params.p0() * std::cos(b.theta)};
}

// Cartesian embedding of the sphere x^2 + y^2 + z^2 = p0^2 with
// x = sqrt(p0^2 - p^2) cos q, y = sqrt(p0^2 - p^2) sin q, z = p.
struct SpherePoint {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline SpherePoint to_sphere(const PhasePoint& pt, const DimerParams& params) {
    const double p0 = params.p0();
    const double r2 = p0 * p0 - pt.p * pt.p;
    const double r = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    return SpherePoint{r * std::cos(pt.q), r * std::sin(pt.q), pt.p};
}

inline PhasePoint sphere_to_phase(const SpherePoint& s) {
    return PhasePoint{std::atan2(s.y, s.x), s.z};
}

// q' = atan2(p, sqrt(p0^2 - p^2) cos q), p' = -sqrt(p0^2 - p^2) sin q.
// The two-argument arctangent covers the full rotated azimuth (-pi, pi].
inline RotatedPoint to_rotated(const PhasePoint& pt, const DimerParams& params) {
    const SpherePoint s = to_sphere(pt, params);
    return RotatedPoint{std::atan2(s.z, s.x), -s.y};
}

inline PhasePoint from_rotated(const RotatedPoint& pt, const DimerParams& params) {
    const double p0 = params.p0();
    const double r2 = p0 * p0 - pt.p_rot * pt.p_rot;
    const double r = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    // rotated frame axes: x_r = x, y_r = z, z_r = -y
    const SpherePoint s{r * std::cos(pt.q_rot), -pt.p_rot, r * std::sin(pt.q_rot)};
    return sphere_to_phase(s);
}

// Chart poles carry no azimuth information; flag points close enough that
// derivative-based operations must switch charts.
inline bool near_chart_pole(const PhasePoint& pt, const DimerParams& params,
                            double rel_margin = 1e-9) {
    return std::abs(pt.p) >= params.p0() * (1.0 - rel_margin);
}

} // namespace dimer
