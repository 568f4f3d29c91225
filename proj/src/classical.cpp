#include "dimer/classical.hpp"
#include "dimer/rng.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dimer {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double mean_field_energy(const PhasePoint& pt, const DimerParams& params, double delta) {
    const double p0 = params.p0();
    const double r2 = p0 * p0 - pt.p * pt.p;
    const double root = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    // same absolute scale as the quantum diagonal: U(p0^2 + p^2) keeps the
    // constant (U/2)(n^2 + (N-n)^2) would contribute
    return -params.omega * root * std::cos(pt.q) +
           params.interaction * (p0 * p0 + pt.p * pt.p) + delta * pt.p;
}

std::pair<double, double> flow_rhs(const PhasePoint& pt, const DimerParams& params,
                                   double delta) {
    if (near_chart_pole(pt, params, 1e-12))
        throw std::domain_error("flow_rhs: chart pole, derivative undefined");
    const double p0 = params.p0();
    const double root = std::sqrt(p0 * p0 - pt.p * pt.p);
    const double dq = params.omega * pt.p * std::cos(pt.q) / root +
                      2.0 * params.interaction * pt.p + delta;
    const double dp = -params.omega * root * std::sin(pt.q);
    return {dq, dp};
}

namespace {

using Vec3 = std::array<double, 3>;

// dL/dt = grad H x L with grad H = (-Omega, 0, 2Uz + Delta); regular
// everywhere on the sphere, unlike the chart equations.
struct SphereFlow {
    const DimerParams* params;
    const SweepProtocol* protocol;

    void operator()(const Vec3& l, Vec3& dl, double t) const {
        const double delta = detuning_at(*protocol, t);
        const double gx = -params->omega;
        const double gz = 2.0 * params->interaction * l[2] + delta;
        dl[0] = -gz * l[1];
        dl[1] = gz * l[0] - gx * l[2];
        dl[2] = gx * l[1];
    }
};

Vec3 to_vec3(const PhasePoint& pt, const DimerParams& params) {
    const SpherePoint s = to_sphere(pt, params);
    return {s.x, s.y, s.z};
}

PhasePoint from_vec3(const Vec3& l, const DimerParams& params) {
    // project back onto the sphere so radius error cannot accumulate
    const double r = std::sqrt(l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
    const double scale = r > 0.0 ? params.p0() / r : 0.0;
    return sphere_to_phase(SpherePoint{l[0] * scale, l[1] * scale, l[2] * scale});
}

// advance l from t0 to t1 (t0 < t1), splitting at the sweep turn at t = 0
void advance(Vec3& l, const DimerParams& params, const SweepProtocol& protocol,
             double t0, double t1, const TrajectoryOptions& opts) {
    namespace ode = boost::numeric::odeint;
    using Stepper = ode::runge_kutta_fehlberg78<Vec3>;
    SphereFlow flow{&params, &protocol};
    auto stepper = ode::make_controlled<Stepper>(opts.tolerance, opts.tolerance);
    auto leg = [&](double a, double b) {
        if (b - a <= 0.0) return;
        double h = std::min(opts.initial_step, b - a);
        ode::integrate_adaptive(stepper, flow, l, a, b, h);
    };
    if (t0 < 0.0 && t1 > 0.0) {
        leg(t0, 0.0);
        leg(0.0, t1);
    } else {
        leg(t0, t1);
    }
}

} // namespace

std::vector<PhasePoint> integrate_trajectory(const PhasePoint& start,
                                             const DimerParams& params,
                                             const SweepProtocol& protocol,
                                             const std::vector<double>& times,
                                             const TrajectoryOptions& opts) {
    if (times.size() < 2)
        throw std::invalid_argument("integrate_trajectory: need at least start and end time");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("integrate_trajectory: times must be strictly increasing");
    if (std::abs(start.p) > params.p0())
        throw std::invalid_argument("integrate_trajectory: |p| exceeds p0");

    std::vector<PhasePoint> out;
    out.reserve(times.size());
    Vec3 l = to_vec3(start, params);
    out.push_back(from_vec3(l, params));
    for (std::size_t i = 1; i < times.size(); ++i) {
        advance(l, params, protocol, times[i - 1], times[i], opts);
        out.push_back(from_vec3(l, params));
    }
    return out;
}

PhasePoint integrate_to(const PhasePoint& start, const DimerParams& params,
                        const SweepProtocol& protocol, double t_start, double t_end,
                        const TrajectoryOptions& opts) {
    return integrate_trajectory(start, params, protocol, {t_start, t_end}, opts).back();
}

double Ensemble::total_weight() const {
    double s = 0.0;
    for (const WeightedPoint& w : points) s += w.weight;
    return s;
}

void Ensemble::validate(const DimerParams& params, double tol) const {
    double s = 0.0;
    for (const WeightedPoint& w : points) {
        if (w.weight < 0.0)
            throw std::invalid_argument("Ensemble: negative weight");
        if (std::abs(w.pt.p) > params.p0() * (1.0 + tol))
            throw std::invalid_argument("Ensemble: point off the sphere");
        s += w.weight;
    }
    if (std::abs(s - 1.0) > 1e-9)
        throw std::invalid_argument("Ensemble: weights must sum to one");
}

Ensemble sample_from_husimi(const HusimiGrid& grid, const DimerParams& params,
                            int count, std::uint64_t seed, const SampleOptions& opts) {
    if (count < 1)
        throw std::invalid_argument("sample_from_husimi: count must be positive");
    const double vmax = *std::max_element(grid.values.begin(), grid.values.end());
    if (!(vmax > 0.0))
        throw std::invalid_argument("sample_from_husimi: empty density");

    const double dq = 2.0 * kPi / grid.n_q;
    const double dp = 2.0 * grid.p0 / grid.n_p;
    // bilinear interpolation between cell centers; q wraps, p clamps
    auto density = [&](double qr, double pr) {
        double fq = (qr + kPi) / dq - 0.5;
        double fp = (pr + grid.p0) / dp - 0.5;
        int iq = static_cast<int>(std::floor(fq));
        int ip = static_cast<int>(std::floor(fp));
        const double wq = fq - iq;
        const double wp = fp - ip;
        auto val = [&](int i, int j) {
            i = (i % grid.n_q + grid.n_q) % grid.n_q;
            j = std::clamp(j, 0, grid.n_p - 1);
            return grid.at(i, j);
        };
        return (1.0 - wq) * (1.0 - wp) * val(iq, ip) + wq * (1.0 - wp) * val(iq + 1, ip) +
               (1.0 - wq) * wp * val(iq, ip + 1) + wq * wp * val(iq + 1, ip + 1);
    };

    std::mt19937_64 rng = make_engine(seed, /*stream=*/1);
    std::uniform_real_distribution<double> uq(-kPi, kPi);
    std::uniform_real_distribution<double> up(-grid.p0, grid.p0);
    std::uniform_real_distribution<double> uu(0.0, 1.0);

    Ensemble ens;
    ens.seed = seed;
    ens.provenance = "rejection sampling of a Husimi grid, " + std::to_string(count) +
                     " points";
    ens.points.reserve(count);
    long proposals = 0;
    while (static_cast<int>(ens.points.size()) < count) {
        const double qr = uq(rng);
        const double pr = up(rng);
        const double u = uu(rng);
        ++proposals;
        if (u * vmax <= density(qr, pr)) {
            const PhasePoint pt = from_rotated({qr, pr}, params);
            ens.points.push_back({1.0 / count, pt});
        }
        // only judge the acceptance rate once enough proposals have been made
        // that a rate at the threshold would have produced many accepts
        if (proposals * opts.min_acceptance >= 100.0 &&
            static_cast<double>(ens.points.size()) / proposals < opts.min_acceptance)
            throw std::runtime_error("sample_from_husimi: acceptance rate below threshold");
    }
    return ens;
}

EnsembleEvolution evolve_ensemble(const Ensemble& ens, const DimerParams& params,
                                  const SweepProtocol& protocol,
                                  const std::vector<double>& checkpoint_times,
                                  const TrajectoryOptions& opts) {
    if (checkpoint_times.size() < 2)
        throw std::invalid_argument("evolve_ensemble: need at least start and end time");
    EnsembleEvolution evo;
    evo.times = checkpoint_times;
    evo.snapshots.assign(checkpoint_times.size(), Ensemble{});
    for (Ensemble& s : evo.snapshots) {
        s.provenance = ens.provenance + "; evolved";
        s.seed = ens.seed;
    }
    for (std::size_t k = 0; k < ens.points.size(); ++k) {
        try {
            const std::vector<PhasePoint> path = integrate_trajectory(
                ens.points[k].pt, params, protocol, checkpoint_times, opts);
            for (std::size_t i = 0; i < path.size(); ++i)
                evo.snapshots[i].points.push_back({ens.points[k].weight, path[i]});
        } catch (const std::exception&) {
            evo.failed_points.push_back(static_cast<int>(k));
        }
    }
    return evo;
}

namespace {

// dq/dt on the sin q = 0 lines, as a function of p; zeros are fixed points
double meridian_qdot(double p, double cosq, const DimerParams& params, double delta) {
    const double p0 = params.p0();
    return params.omega * p * cosq / std::sqrt(p0 * p0 - p * p) +
           2.0 * params.interaction * p + delta;
}

} // namespace

std::vector<FixedPointInfo> fixed_points(const DimerParams& params, double delta) {
    std::vector<FixedPointInfo> out;
    const double p0 = params.p0();
    const int scan = 4000;
    for (double cosq : {1.0, -1.0}) {
        const double q = cosq > 0.0 ? 0.0 : kPi;
        double prev_p = -p0 * (1.0 - 1e-9);
        double prev_f = meridian_qdot(prev_p, cosq, params, delta);
        for (int i = 1; i <= scan; ++i) {
            const double p = -p0 * (1.0 - 1e-9) + (2.0 * p0 * (1.0 - 1e-9)) * i / scan;
            const double f = meridian_qdot(p, cosq, params, delta);
            if (prev_f == 0.0 || prev_f * f < 0.0) {
                double a = prev_p, b = p;
                double fa = prev_f;
                for (int it = 0; it < 80; ++it) {
                    const double m = 0.5 * (a + b);
                    const double fm = meridian_qdot(m, cosq, params, delta);
                    if (fa * fm <= 0.0) b = m;
                    else { a = m; fa = fm; }
                }
                const double pr = 0.5 * (a + b);
                const double root = std::sqrt(p0 * p0 - pr * pr);
                // Hessian on sin q = 0: E_qp = 0, so det = E_qq * E_pp
                const double eqq = params.omega * root * cosq;
                const double epp = 2.0 * params.interaction +
                                   params.omega * cosq * p0 * p0 /
                                       (root * root * root);
                FixedPointInfo fp;
                fp.pt = PhasePoint{q, pr};
                fp.stability = (eqq * epp > 0.0) ? Stability::Center : Stability::Saddle;
                const bool dup = std::any_of(out.begin(), out.end(), [&](const FixedPointInfo& o) {
                    return o.pt.q == q && std::abs(o.pt.p - pr) < 1e-6 * p0;
                });
                if (!dup) out.push_back(fp);
            }
            prev_p = p;
            prev_f = f;
        }
    }
    return out;
}

namespace {

// total length of {p in [p_lo, p_hi] : pred(q, p)} on one meridian, with
// bisection-refined interval endpoints
template <class Pred>
double slice_length(double q, double p_lo, double p_hi, int p_scan, const Pred& pred) {
    if (!(p_hi > p_lo)) return 0.0;
    const double h = (p_hi - p_lo) / p_scan;
    double length = 0.0;
    bool prev_in = pred(q, p_lo);
    double seg_start = prev_in ? p_lo : 0.0;
    for (int i = 1; i <= p_scan; ++i) {
        const double p = p_lo + h * i;
        const bool in = pred(q, p);
        if (in != prev_in) {
            double a = p - h, b = p;
            for (int it = 0; it < 50; ++it) {
                const double m = 0.5 * (a + b);
                if (pred(q, m) == prev_in) a = m;
                else b = m;
            }
            const double edge = 0.5 * (a + b);
            if (prev_in) length += edge - seg_start;
            else seg_start = edge;
            prev_in = in;
        }
    }
    if (prev_in) length += p_hi - seg_start;
    return length;
}

// periodic trapezoid over q of the slice lengths; spectrally accurate for a
// smooth periodic integrand
template <class Pred>
double sphere_area(const AreaOptions& opts, double p_lo, double p_hi, const Pred& pred) {
    const double dq = 2.0 * kPi / opts.q_nodes;
    double area = 0.0;
    for (int i = 0; i < opts.q_nodes; ++i) {
        const double q = -kPi + (i + 0.5) * dq;
        area += slice_length(q, p_lo, p_hi, opts.p_scan, pred);
    }
    return area * dq;
}

} // namespace

std::optional<SeparatrixInfo> separatrix_info(const DimerParams& params, double delta,
                                              const AreaOptions& opts) {
    const std::vector<FixedPointInfo> fps = fixed_points(params, delta);
    const FixedPointInfo* saddle = nullptr;
    for (const FixedPointInfo& fp : fps)
        if (fp.stability == Stability::Saddle) {
            if (saddle) throw std::runtime_error("separatrix_info: multiple saddles");
            saddle = &fp;
        }
    if (!saddle) return std::nullopt;

    SeparatrixInfo sep;
    sep.saddle = saddle->pt;
    sep.separatrix_energy = mean_field_energy(saddle->pt, params, delta);
    const double p0 = params.p0();
    const double ps = saddle->pt.p;
    auto below = [&](double q, double p) {
        return mean_field_energy({q, p}, params, delta) < sep.separatrix_energy;
    };
    sep.area_upper = sphere_area(opts, ps, p0, below);
    sep.area_lower = sphere_area(opts, -p0, ps, below);
    sep.area_outer = 2.0 * kPi * 2.0 * p0 - sep.area_upper - sep.area_lower;
    return sep;
}

Region classify_region(const PhasePoint& pt, const DimerParams& params, double delta,
                       const SeparatrixInfo& sep) {
    const double e = mean_field_energy(pt, params, delta);
    if (e >= sep.separatrix_energy) return Region::Outside;
    return pt.p > sep.saddle.p ? Region::UpperLobe : Region::LowerLobe;
}

double region_area_below(const DimerParams& params, double delta,
                         const SeparatrixInfo& sep, Region region, double energy,
                         const AreaOptions& opts) {
    const double p0 = params.p0();
    const double ps = sep.saddle.p;
    switch (region) {
    case Region::UpperLobe:
        return sphere_area(opts, ps, p0, [&](double q, double p) {
            return mean_field_energy({q, p}, params, delta) <= energy;
        });
    case Region::LowerLobe:
        return sphere_area(opts, -p0, ps, [&](double q, double p) {
            return mean_field_energy({q, p}, params, delta) <= energy;
        });
    case Region::Outside:
        // contours shrink toward the energy maximum, so the invariant is the
        // area at or above the contour energy
        return sphere_area(opts, -p0, p0, [&](double q, double p) {
            return mean_field_energy({q, p}, params, delta) >= energy;
        });
    }
    throw std::logic_error("region_area_below: bad region");
}

std::optional<std::pair<double, double>> separatrix_delta_range(const DimerParams& params,
                                                                double lo, double hi) {
    if (!(hi > lo))
        throw std::invalid_argument("separatrix_delta_range: need lo < hi");
    auto has_saddle = [&](double d) {
        const std::vector<FixedPointInfo> fps = fixed_points(params, d);
        return std::any_of(fps.begin(), fps.end(), [](const FixedPointInfo& fp) {
            return fp.stability == Stability::Saddle;
        });
    };
    const int scan = 200;
    std::optional<double> first, last;
    bool prev = has_saddle(lo);
    if (prev) first = lo;
    double prev_d = lo;
    for (int i = 1; i <= scan; ++i) {
        const double d = lo + (hi - lo) * i / scan;
        const bool cur = has_saddle(d);
        if (cur != prev) {
            double a = prev_d, b = d;
            for (int it = 0; it < 50; ++it) {
                const double m = 0.5 * (a + b);
                if (has_saddle(m) == prev) a = m;
                else b = m;
            }
            const double edge = 0.5 * (a + b);
            if (cur) first = edge;
            else last = edge;
        }
        prev = cur;
        prev_d = d;
    }
    if (prev) last = hi;
    if (!first) return std::nullopt;
    return std::make_pair(*first, last.value_or(hi));
}

namespace {

double upper_area_at(const DimerParams& params, double delta, const AreaOptions& opts,
                     Region region) {
    const std::optional<SeparatrixInfo> sep = separatrix_info(params, delta, opts);
    if (!sep) return 0.0;
    switch (region) {
    case Region::UpperLobe: return sep->area_upper;
    case Region::LowerLobe: return sep->area_lower;
    case Region::Outside: return sep->area_outer;
    }
    return 0.0;
}

} // namespace

KruskalPrediction kruskal_prediction(double band_energy, const DimerParams& params,
                                     const SweepProtocol& protocol,
                                     const KruskalOptions& opts) {
    KruskalPrediction pred;
    const double d_i = protocol.delta_initial;
    const double d_0 = protocol.delta_turn;

    // the band's adiabatic invariant at the initial detuning: contour area
    // around the energy minimum (at Delta_I the separatrix need not exist yet)
    double invariant;
    {
        const std::optional<SeparatrixInfo> sep_i = separatrix_info(params, d_i, opts.area);
        if (sep_i) {
            if (!(band_energy < sep_i->separatrix_energy))
                throw std::invalid_argument(
                    "kruskal_prediction: band energy not inside the upper lobe");
            invariant = region_area_below(params, d_i, *sep_i, Region::UpperLobe,
                                          band_energy, opts.area);
        } else {
            invariant = sphere_area(opts.area, -params.p0(), params.p0(),
                                    [&](double q, double p) {
                                        return mean_field_energy({q, p}, params, d_i) <=
                                               band_energy;
                                    });
        }
    }

    const std::optional<std::pair<double, double>> range =
        separatrix_delta_range(params, d_i, d_0);
    if (!range) {
        // subcritical or out of reach: fully adiabatic, the band comes back
        pred.crossed = false;
        pred.return_probability = 1.0;
        return pred;
    }
    const double margin = 1e-4 * (d_0 - d_i);
    const double d_lo = range->first + margin;
    const double d_hi = range->second - margin;

    auto upper_area = [&](double d) {
        return upper_area_at(params, d, opts.area, Region::UpperLobe);
    };
    if (!(upper_area(d_lo) > invariant))
        throw std::runtime_error(
            "kruskal_prediction: band not inside the upper lobe when the separatrix forms");
    // the upper lobe shrinks toward the turn; if the separatrix survives to
    // the turn with room to spare, the band is never crossed
    if (range->second >= d_0 - margin && upper_area(d_hi) > invariant) {
        pred.crossed = false;
        pred.return_probability = 1.0;
        return pred;
    }
    double a = d_lo, b = d_hi;
    for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        if (upper_area(m) > invariant) a = m;
        else b = m;
    }
    const double d_star = 0.5 * (a + b);
    pred.crossed = true;
    pred.crossing_delta_forward = d_star;
    // forward crossing drops the band into the growing lower lobe with
    // invariant A_l(d_star); the areas depend on Delta alone, so the lobe
    // shrinks back to that size at the same detuning on the return leg
    pred.crossing_delta_backward = d_star;

    const double h = opts.delta_step;
    const double rate = detuning_rate(protocol, 0.5 * protocol.half_time); // backward leg
    // the centered differences of the region areas are far more sensitive to
    // quadrature resolution than the crossing search, so refine the grid for
    // the rate evaluations only
    AreaOptions fine = opts.area;
    fine.q_nodes = std::min(fine.q_nodes * 8, 8192);
    fine.p_scan = std::min(fine.p_scan * 8, 16384);
    auto area_rate = [&](Region r) {
        return rate *
               (upper_area_at(params, d_star + h, fine, r) -
                upper_area_at(params, d_star - h, fine, r)) /
               (2.0 * h);
    };
    pred.area_rate_upper = area_rate(Region::UpperLobe);
    pred.area_rate_lower = area_rate(Region::LowerLobe);
    pred.area_rate_outer = area_rate(Region::Outside);

    // capture probabilities among the growing regions (upper and outer in
    // the supercritical sweep; the lower lobe is the one shrinking)
    double growing = 0.0;
    for (double r : {pred.area_rate_upper, pred.area_rate_lower, pred.area_rate_outer})
        if (r > 0.0) growing += r;
    if (!(growing > 0.0))
        throw std::runtime_error("kruskal_prediction: no growing region at the crossing");
    pred.return_probability =
        pred.area_rate_upper > 0.0 ? pred.area_rate_upper / growing : 0.0;
    return pred;
}

double classical_return_probability(const Ensemble& final_ensemble,
                                    const DimerParams& params, double delta,
                                    const EnergyWindow& band) {
    const double total = final_ensemble.total_weight();
    if (!(total > 0.0))
        throw std::invalid_argument("classical_return_probability: empty ensemble");
    double in = 0.0;
    for (const WeightedPoint& w : final_ensemble.points) {
        const double e = mean_field_energy(w.pt, params, delta);
        if (e >= band.e_min && e <= band.e_max) in += w.weight;
    }
    return in / total;
}

CoarseGrainedDensity coarse_grain(const Ensemble& ens, const DimerParams& params,
                                  double delta, int band_count,
                                  const AreaOptions& opts) {
    if (band_count < 2)
        throw std::invalid_argument("coarse_grain: need at least two bands");
    const std::optional<SeparatrixInfo> sep = separatrix_info(params, delta, opts);

    const double total_area = 2.0 * kPi * params.total_particles;
    const double band_width = total_area / band_count;

    if (!sep) {
        // no separatrix: one region, banded by the area enclosed below the
        // energy contour over the whole sphere
        const double p0 = params.p0();
        std::map<int, double> weights;
        for (const WeightedPoint& w : ens.points) {
            const double e = mean_field_energy(w.pt, params, delta);
            const double a = sphere_area(opts, -p0, p0, [&](double q, double p) {
                return mean_field_energy({q, p}, params, delta) <= e;
            });
            int band = static_cast<int>(std::floor(a / band_width));
            band = std::clamp(band, 0, band_count - 1);
            weights[band] += w.weight;
        }
        CoarseGrainedDensity cg;
        cg.delta = delta;
        for (const auto& [band, weight] : weights) {
            CoarseGrainedDensity::Cell cell;
            cell.region = Region::Outside;
            cell.area_lo = band * band_width;
            cell.area_hi = (band + 1) * band_width;
            cell.weight = weight;
            cell.volume = band_width;
            cg.cells.push_back(cell);
        }
        return cg;
    }
    auto region_total = [&](Region r) {
        switch (r) {
        case Region::UpperLobe: return sep->area_upper;
        case Region::LowerLobe: return sep->area_lower;
        case Region::Outside: return sep->area_outer;
        }
        return 0.0;
    };

    std::map<std::pair<int, int>, double> weights; // (region, band) -> weight
    for (const WeightedPoint& w : ens.points) {
        const Region r = classify_region(w.pt, params, delta, *sep);
        const double e = mean_field_energy(w.pt, params, delta);
        const double a = region_area_below(params, delta, *sep, r, e, opts);
        int band = static_cast<int>(std::floor(a / band_width));
        const int max_band =
            std::max(0, static_cast<int>(std::ceil(region_total(r) / band_width)) - 1);
        band = std::clamp(band, 0, max_band);
        weights[{static_cast<int>(r), band}] += w.weight;
    }

    CoarseGrainedDensity cg;
    cg.delta = delta;
    for (const auto& [key, weight] : weights) {
        CoarseGrainedDensity::Cell cell;
        cell.region = static_cast<Region>(key.first);
        cell.area_lo = key.second * band_width;
        cell.area_hi = std::min((key.second + 1) * band_width, region_total(cell.region));
        cell.weight = weight;
        cell.volume = cell.area_hi - cell.area_lo;
        if (!(cell.volume > 0.0)) cell.volume = band_width;
        cg.cells.push_back(cell);
    }
    return cg;
}

double classical_entropy(const CoarseGrainedDensity& cg) {
    double s = 0.0;
    for (const CoarseGrainedDensity::Cell& c : cg.cells)
        if (c.weight > 0.0) s -= c.weight * std::log(c.weight / c.volume);
    return s;
}

} // namespace dimer
