#include "dimer/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <lapacke.h>

namespace dimer {

double FockVector::norm() const {
    double s = 0.0;
    for (const Complex& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
}

void FockVector::normalize() {
    const double n = norm();
    if (n == 0.0) throw std::runtime_error("FockVector: cannot normalize null vector");
    for (Complex& a : amplitudes) a /= n;
}

Complex inner_product(const FockVector& a, const FockVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("inner_product: dimension mismatch");
    Complex s(0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return s;
}

void MixedState::validate(double tol) const {
    double sum = 0.0;
    for (const Member& m : members) {
        if (m.weight < 0.0) throw std::invalid_argument("MixedState: negative weight");
        sum += m.weight;
    }
    if (std::abs(sum - 1.0) > tol)
        throw std::invalid_argument("MixedState: weights do not sum to one");
}

HamiltonianTerms::HamiltonianTerms(const DimerParams& params) {
    const int n_tot = params.total_particles;
    const double u = params.interaction;
    base_diag.resize(n_tot + 1);
    imbalance.resize(n_tot + 1);
    offdiag.resize(n_tot);
    for (int n = 0; n <= n_tot; ++n) {
        const double m = n_tot - n;
        base_diag[n] = 0.5 * u * (double(n) * n + m * m);
        imbalance[n] = n - 0.5 * n_tot;
    }
    for (int n = 0; n < n_tot; ++n)
        offdiag[n] = -0.5 * params.omega * std::sqrt(double(n + 1) * (n_tot - n));
}

void HamiltonianTerms::apply(double delta, const Complex* x, Complex* y) const {
    const std::size_t n = base_diag.size();
    if (n == 1) {
        y[0] = (base_diag[0] + delta * imbalance[0]) * x[0];
        return;
    }
    y[0] = (base_diag[0] + delta * imbalance[0]) * x[0] + offdiag[0] * x[1];
    for (std::size_t i = 1; i + 1 < n; ++i)
        y[i] = (base_diag[i] + delta * imbalance[i]) * x[i] + offdiag[i - 1] * x[i - 1] +
               offdiag[i] * x[i + 1];
    y[n - 1] = (base_diag[n - 1] + delta * imbalance[n - 1]) * x[n - 1] +
               offdiag[n - 2] * x[n - 2];
}

TridiagonalMatrix hamiltonian_matrix(const DimerParams& params, double delta) {
    HamiltonianTerms terms(params);
    TridiagonalMatrix m;
    m.diag.resize(terms.dim());
    for (std::size_t i = 0; i < terms.dim(); ++i)
        m.diag[i] = terms.base_diag[i] + delta * terms.imbalance[i];
    m.offdiag = terms.offdiag;
    return m;
}

FockVector Spectrum::eigenstate(int index_one_based) const {
    if (index_one_based < 1 || index_one_based > static_cast<int>(dim()))
        throw std::invalid_argument("Spectrum: eigenstate index out of range");
    const std::vector<double>& v = eigenvectors[index_one_based - 1];
    FockVector s(dim());
    for (std::size_t i = 0; i < dim(); ++i) s.amplitudes[i] = v[i];
    return s;
}

Spectrum spectrum(const DimerParams& params, double delta) {
    TridiagonalMatrix m = hamiltonian_matrix(params, delta);
    const int n = static_cast<int>(m.diag.size());
    std::vector<double> z(static_cast<std::size_t>(n) * n);
    std::vector<double> e = m.offdiag;
    e.resize(n > 0 ? n : 1, 0.0);
    const int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, m.diag.data(), e.data(),
                                    z.data(), n);
    if (info != 0)
        throw std::runtime_error("spectrum: tridiagonal eigensolver failed, info=" +
                                 std::to_string(info));
    Spectrum spec;
    spec.eigenvalues = std::move(m.diag);
    spec.eigenvectors.assign(n, std::vector<double>(n));
    for (int k = 0; k < n; ++k) {
        std::vector<double>& v = spec.eigenvectors[k];
        const double* col = z.data() + static_cast<std::size_t>(k) * n;
        std::copy(col, col + n, v.begin());
        // gauge: largest-magnitude component real positive
        int imax = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
        if (v[imax] < 0.0)
            for (double& x : v) x = -x;
    }
    return spec;
}

namespace {

// y = exp(-i tau H(delta)) x with Lanczos (plain three-term recurrence, output
// rescaled to the input norm).  Returns the Krylov dimension used, or -1 if
// max_m was insufficient.
int lanczos_exp(const HamiltonianTerms& terms, double delta, double tau,
                std::vector<Complex>& x, int max_m, double tol,
                std::vector<std::vector<Complex>>& basis_scratch) {
    const std::size_t n = terms.dim();
    double beta0 = 0.0;
    for (const Complex& a : x) beta0 += std::norm(a);
    beta0 = std::sqrt(beta0);
    if (beta0 == 0.0) return 0;

    auto& vs = basis_scratch;
    if (vs.size() < static_cast<std::size_t>(max_m + 1))
        vs.resize(max_m + 1, std::vector<Complex>(n));
    for (auto& v : vs)
        if (v.size() != n) v.assign(n, Complex(0.0));

    for (std::size_t i = 0; i < n; ++i) vs[0][i] = x[i] / beta0;

    std::vector<double> alpha, beta;
    std::vector<Complex> w(n);
    std::vector<double> td, te, tz, small_d, small_e;
    std::vector<Complex> expcol;

    auto small_exp = [&](int m, std::vector<Complex>& out) {
        // exp(-i tau T_m) e1 via dense tridiagonal eigendecomposition
        small_d.assign(alpha.begin(), alpha.begin() + m);
        small_e.assign(beta.begin(), beta.begin() + (m > 1 ? m - 1 : 0));
        small_e.resize(m > 0 ? m : 1, 0.0);
        tz.assign(static_cast<std::size_t>(m) * m, 0.0);
        const int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', m, small_d.data(),
                                        small_e.data(), tz.data(), m);
        if (info != 0)
            throw std::runtime_error("lanczos_exp: small eigensolver failed");
        out.assign(m, Complex(0.0));
        for (int k = 0; k < m; ++k) {
            const double* col = tz.data() + static_cast<std::size_t>(k) * m;
            const Complex phase = std::exp(Complex(0.0, -tau * small_d[k]));
            const Complex coeff = phase * col[0];
            for (int i = 0; i < m; ++i) out[i] += coeff * col[i];
        }
    };

    int m_used = -1;
    int next_check = 4; // convergence checks thin out as m grows (dstevd is O(m^3))
    // the Krylov space cannot usefully exceed the Hilbert space; at m = n the
    // projected problem is the full problem
    const int m_cap = std::min<int>(max_m, static_cast<int>(n));
    double h_scale = 1.0; // running magnitude of the projected matrix entries
    for (int j = 0; j < m_cap; ++j) {
        terms.apply(delta, vs[j].data(), w.data());
        if (j > 0)
            for (std::size_t i = 0; i < n; ++i) w[i] -= beta[j - 1] * vs[j - 1][i];
        double a = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            a += std::real(std::conj(vs[j][i]) * w[i]);
        alpha.push_back(a);
        for (std::size_t i = 0; i < n; ++i) w[i] -= a * vs[j][i];
        double b = 0.0;
        for (const Complex& c : w) b += std::norm(c);
        b = std::sqrt(b);
        const int m = j + 1;
        h_scale = std::max({h_scale, std::abs(a), b});
        // breakdown threshold scales with the projected matrix so rounding
        // noise in the residual is recognized at any energy scale
        const bool breakdown = b < 1e-12 * h_scale || m == static_cast<int>(n);
        if (breakdown || m == m_cap || m >= next_check) {
            next_check = m + std::max(3, m / 8);
            small_exp(m, expcol);
            const double err = breakdown ? 0.0 : b * std::abs(expcol[m - 1]) * tau;
            if (breakdown || err < tol) {
                m_used = m;
                break;
            }
            if (m == m_cap) return -1;
        }
        beta.push_back(b);
        for (std::size_t i = 0; i < n; ++i) vs[j + 1][i] = w[i] / b;
    }
    if (m_used < 0) return -1;

    std::fill(x.begin(), x.end(), Complex(0.0));
    for (int k = 0; k < m_used; ++k) {
        const Complex coeff = beta0 * expcol[k];
        for (std::size_t i = 0; i < n; ++i) x[i] += coeff * vs[k][i];
    }
    // the exact flow is unitary; rescaling removes the norm error left by the
    // plain three-term recurrence (no full reorthogonalization)
    double out_norm = 0.0;
    for (const Complex& a : x) out_norm += std::norm(a);
    out_norm = std::sqrt(out_norm);
    if (out_norm > 0.0) {
        const double scale = beta0 / out_norm;
        for (Complex& a : x) a *= scale;
    }
    return m_used;
}

// Fourth-order commutator-free Magnus coefficients (two Gauss nodes).
constexpr double kCfA = 0.25 + 0.2886751345948129; // 1/4 + sqrt(3)/6
constexpr double kCfB = 0.25 - 0.2886751345948129;

struct Stepper {
    const HamiltonianTerms& terms;
    const SweepProtocol& protocol;
    int max_m;
    double krylov_tol;
    std::vector<std::vector<Complex>> scratch;

    // one CF4 step over [t, t+h]; returns false if the Krylov space saturated
    bool step(std::vector<Complex>& psi, double t, double h) {
        const double c1 = 0.5 - 0.2886751345948129;
        const double c2 = 0.5 + 0.2886751345948129;
        const double d1 = detuning_at(protocol, t + c1 * h);
        const double d2 = detuning_at(protocol, t + c2 * h);
        // each factor is H at an effective detuning for duration h/2
        const double eff_first = 2.0 * (kCfA * d1 + kCfB * d2);
        const double eff_second = 2.0 * (kCfB * d1 + kCfA * d2);
        if (lanczos_exp(terms, eff_first, 0.5 * h, psi, max_m, krylov_tol, scratch) < 0)
            return false;
        if (lanczos_exp(terms, eff_second, 0.5 * h, psi, max_m, krylov_tol, scratch) < 0)
            return false;
        return true;
    }
};

double vec_norm(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const Complex& a : v) s += std::norm(a);
    return std::sqrt(s);
}

double vec_dist(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

// Adaptive CF4 with step-doubling error control over [t0, t1].
void integrate_interval(Stepper& stepper, std::vector<Complex>& psi, double t0,
                        double t1, double& h, const PropagationOptions& opts) {
    double t = t0;
    std::vector<Complex> big, half;
    int rejections = 0;
    // the drive changes slowly along the sweep, so once the controller settles
    // the step-doubling estimate is re-verified only every few steps; the
    // in-between steps reuse the last accepted h at single-step cost
    const int check_stride = 8;
    int streak = 0;      // consecutive accepted verifications
    int unchecked = 0;   // plain steps taken since the last verification
    // a remaining gap within rounding of the endpoint counts as arrived, so
    // the end-of-interval clamp cannot drive the step under the guard
    const double tiny = 1e-13 * std::max({1.0, std::abs(t0), std::abs(t1)});
    while (t1 - t > tiny) {
        if (h < tiny)
            throw std::runtime_error("propagate: step size underflow (stiffness)");
        h = std::min({h, opts.max_step, t1 - t});
        const bool verify = streak < 3 || unchecked + 1 >= check_stride;
        if (!verify) {
            big = psi;
            if (stepper.step(big, t, h)) {
                psi.swap(big);
                t += h;
                ++unchecked;
                rejections = 0;
                continue;
            }
            streak = 0;
            h *= 0.5;
            if (++rejections > 200)
                throw std::runtime_error("propagate: Krylov space repeatedly saturated");
            continue;
        }
        unchecked = 0;
        big = psi;
        half = psi;
        const bool ok = stepper.step(big, t, h) && stepper.step(half, t, 0.5 * h) &&
                        stepper.step(half, t + 0.5 * h, 0.5 * h);
        if (!ok) {
            streak = 0;
            h *= 0.5;
            if (++rejections > 200)
                throw std::runtime_error("propagate: Krylov space repeatedly saturated");
            continue;
        }
        const double err = vec_dist(big, half);
        // absolute floor: the step-doubling estimate carries ~1e-15 rounding
        // noise, which would otherwise starve short clamped end steps
        const double tol_local = opts.tolerance * h + 1e-14;
        if (err <= tol_local) {
            psi.swap(half);
            t += h;
            rejections = 0;
            ++streak;
            const double grow = err > 0.0 ? 0.9 * std::pow(tol_local / err, 0.2) : 3.0;
            h *= std::clamp(grow, 0.2, 3.0);
        } else {
            streak = 0;
            h *= std::max(0.2, 0.9 * std::pow(tol_local / err, 0.2));
            if (++rejections > 200)
                throw std::runtime_error("propagate: step control failed to converge");
        }
    }
}

} // namespace

std::vector<FockVector> propagate_checkpoints(const FockVector& state,
                                              const DimerParams& params,
                                              const SweepProtocol& protocol,
                                              double t_start,
                                              const std::vector<double>& times,
                                              const PropagationOptions& opts) {
    if (times.empty()) return {};
    if (std::abs(state.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("propagate: state must be normalized");
    const double T = protocol.half_time;
    if (t_start < -T || times.back() > T)
        throw std::invalid_argument("propagate: times outside the sweep interval");
    double prev = t_start;
    for (double t : times) {
        if (t < prev) throw std::invalid_argument("propagate: checkpoint times must ascend");
        prev = t;
    }

    HamiltonianTerms terms(params);
    Stepper stepper{terms, protocol, opts.max_krylov, 1e-13, {}};
    std::vector<Complex> psi = state.amplitudes;
    double h = opts.initial_step;
    double t = t_start;
    std::vector<FockVector> out;
    out.reserve(times.size());
    for (double tc : times) {
        // the sweep kink at t = 0 is a node of the piecewise integration
        if (t < 0.0 && tc > 0.0) {
            integrate_interval(stepper, psi, t, 0.0, h, opts);
            t = 0.0;
        }
        integrate_interval(stepper, psi, t, tc, h, opts);
        t = tc;
        const double drift = std::abs(vec_norm(psi) - 1.0);
        if (drift > opts.norm_tolerance * std::max(1.0, t - t_start))
            throw std::runtime_error("propagate: norm drift " + std::to_string(drift) +
                                     " exceeds bound");
        FockVector snap;
        snap.amplitudes = psi;
        out.push_back(std::move(snap));
    }
    return out;
}

FockVector propagate(const FockVector& state, const DimerParams& params,
                     const SweepProtocol& protocol, double t_start, double t_end,
                     const PropagationOptions& opts) {
    if (t_start == t_end) return state;
    if (!(t_start < t_end))
        throw std::invalid_argument("propagate: need t_start <= t_end");
    std::vector<FockVector> r =
        propagate_checkpoints(state, params, protocol, t_start, {t_end}, opts);
    return std::move(r.front());
}

std::vector<double> adiabatic_populations(const FockVector& state, const Spectrum& spec) {
    const std::size_t n = spec.dim();
    if (state.dim() != n)
        throw std::invalid_argument("adiabatic_populations: dimension mismatch");
    std::vector<double> p(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        Complex c(0.0);
        const std::vector<double>& v = spec.eigenvectors[k];
        for (std::size_t i = 0; i < n; ++i) c += v[i] * state.amplitudes[i];
        p[k] = std::norm(c);
    }
    return p;
}

std::vector<double> adiabatic_populations(const FockVector& state,
                                          const DimerParams& params, double delta) {
    return adiabatic_populations(state, spectrum(params, delta));
}

std::vector<double> adiabatic_populations(const MixedState& state,
                                          const DimerParams& params, double delta) {
    state.validate();
    const Spectrum spec = spectrum(params, delta);
    std::vector<double> p(spec.dim(), 0.0);
    for (const MixedState::Member& m : state.members) {
        const std::vector<double> pm = adiabatic_populations(m.state, spec);
        for (std::size_t k = 0; k < p.size(); ++k) p[k] += m.weight * pm[k];
    }
    return p;
}

std::optional<double> energy_gap_threshold(std::vector<std::pair<double, double>> ew,
                                           double weight_floor, double gap_significance) {
    std::vector<std::pair<double, double>> occ;
    for (const auto& [e, w] : ew)
        if (w > weight_floor) occ.emplace_back(e, w);
    if (occ.size() < 2) return std::nullopt;
    std::sort(occ.begin(), occ.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < occ.size(); ++i)
        gaps.push_back(occ[i].first - occ[i - 1].first);
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double maxgap = sorted.back();
    if (!(maxgap > gap_significance * median) || maxgap <= 0.0) return std::nullopt;
    const std::size_t imax =
        std::find(gaps.begin(), gaps.end(), maxgap) - gaps.begin();
    return 0.5 * (occ[imax].first + occ[imax + 1].first);
}

} // namespace dimer
