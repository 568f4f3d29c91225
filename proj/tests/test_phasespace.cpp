#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "dimer/classical.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/rng.hpp"

using namespace dimer;
using Complex = std::complex<double>;

namespace {
constexpr double kPi = 3.14159265358979323846;

// direct summation of Eq-style coherent amplitudes, no recurrences
Complex direct_overlap(const FockVector& state, double theta, double phi) {
    const int n_tot = state.particles();
    Complex acc(0.0);
    for (int n = 0; n <= n_tot; ++n) {
        const double lb = std::lgamma(n_tot + 1.0) - std::lgamma(n + 1.0) -
                          std::lgamma(n_tot - n + 1.0);
        const double mag = std::exp(0.5 * lb) * std::pow(std::cos(0.5 * theta), n) *
                           std::pow(std::sin(0.5 * theta), n_tot - n);
        acc += mag * std::polar(1.0, -(n_tot - n) * phi) * state.amplitudes[n];
    }
    return acc;
}
} // namespace

TEST_CASE("coherent state poles are Fock indicators") {
    const FockVector north = coherent_state({0.0, 0.3}, 40);
    CHECK(std::abs(north.amplitudes[40]) == doctest::Approx(1.0).epsilon(1e-12));
    for (int n = 0; n < 40; ++n) CHECK(std::abs(north.amplitudes[n]) == 0.0);

    const FockVector south = coherent_state({kPi, 0.3}, 40);
    CHECK(std::abs(south.amplitudes[0]) == doctest::Approx(1.0).epsilon(1e-12));
    for (int n = 1; n <= 40; ++n) CHECK(std::abs(south.amplitudes[n]) == 0.0);
}

TEST_CASE("coherent overlap law |<a|b>|^2 = cos^2N(angle/2)") {
    const int n_tot = 30;
    std::mt19937_64 rng = make_engine(21, 0);
    std::uniform_real_distribution<double> uth(0.05, kPi - 0.05);
    std::uniform_real_distribution<double> uph(-kPi, kPi);
    for (int trial = 0; trial < 100; ++trial) {
        const double t1 = uth(rng), f1 = uph(rng);
        const double t2 = uth(rng), f2 = uph(rng);
        const FockVector a = coherent_state({t1, f1}, n_tot);
        const double q = husimi_point(a, {t2, f2});
        const double cosang = std::cos(t1) * std::cos(t2) +
                              std::sin(t1) * std::sin(t2) * std::cos(f1 - f2);
        const double expect = std::pow(0.5 * (1.0 + cosang), n_tot);
        CHECK(q == doctest::Approx(expect).epsilon(1e-8));
        // and against brute-force summation
        const Complex ov = direct_overlap(a, t2, f2);
        CHECK(q == doctest::Approx(std::norm(ov)).epsilon(1e-10));
    }
}

TEST_CASE("husimi_point special cases") {
    const int n_tot = 25;
    FockVector top(n_tot + 1);
    top.amplitudes[n_tot] = 1.0; // |N, 0>
    CHECK(husimi_point(top, {kPi, 0.7}) == doctest::Approx(0.0).epsilon(1e-14));
    std::mt19937_64 rng = make_engine(8, 0);
    std::uniform_real_distribution<double> uth(0.0, kPi);
    std::uniform_real_distribution<double> uph(-kPi, kPi);
    for (int i = 0; i < 50; ++i) {
        const double th = uth(rng), ph = uph(rng);
        CHECK(husimi_point(top, {th, ph}) ==
              doctest::Approx(std::pow(std::cos(0.5 * th), 2 * n_tot)).epsilon(1e-10));
    }
    // self-overlap is the maximum
    const CoherentParams cp{1.1, -0.4};
    const FockVector coh = coherent_state(cp, n_tot);
    const double peak = husimi_point(coh, cp);
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-10));
    for (int i = 0; i < 50; ++i)
        CHECK(husimi_point(coh, {uth(rng), uph(rng)}) <= peak + 1e-12);
}

TEST_CASE("husimi grid integrates to one and peaks at the state") {
    DimerParams params(1.0, -0.02, 150);
    const FockVector coh = coherent_state({0.5 * kPi, 0.0}, 150); // q=0, p=0
    const HusimiGrid g = husimi_grid(coh, params, {128, 128});
    CHECK(g.integral() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.raw_integral > 0.0);
    // raw Riemann sum approximates the flat-chart coherent-state area 2 pi N/(N+1)
    CHECK(g.raw_integral ==
          doctest::Approx(2.0 * kPi * 150.0 / 151.0).epsilon(0.02));
    // locate the maximum: state sits at (q=0,p=0) -> rotated (0,0)
    int best_q = 0, best_p = 0;
    double best = -1.0;
    for (int iq = 0; iq < g.n_q; ++iq)
        for (int ip = 0; ip < g.n_p; ++ip)
            if (g.at(iq, ip) > best) {
                best = g.at(iq, ip);
                best_q = iq;
                best_p = ip;
            }
    CHECK(std::abs(g.q_center(best_q)) < 2.0 * kPi / g.n_q);
    CHECK(std::abs(g.p_center(best_p)) < 2.0 * params.p0() / g.n_p);
}

TEST_CASE("husimi values bounded by one before rescaling") {
    DimerParams params(1.0, -0.02, 80);
    const FockVector coh = coherent_state({1.0, 0.4}, 80);
    const HusimiGrid g = husimi_grid(coh, params, {64, 64});
    for (double v : g.values) {
        CHECK(v >= 0.0);
        CHECK(v * g.raw_integral <= 1.0 + 1e-12);
    }
}

TEST_CASE("mixture husimi is the weighted member sum") {
    DimerParams params(1.0, -0.02, 60);
    MixedState ms;
    ms.members.push_back({0.3, coherent_state({0.8, 0.2}, 60)});
    ms.members.push_back({0.7, coherent_state({2.0, -1.0}, 60)});
    const HusimiGrid gm = husimi_grid(ms, params, {64, 64});
    const HusimiGrid g1 = husimi_grid(ms.members[0].state, params, {64, 64});
    const HusimiGrid g2 = husimi_grid(ms.members[1].state, params, {64, 64});
    for (std::size_t i = 0; i < gm.values.size(); ++i) {
        const double expect = (0.3 * g1.values[i] * g1.raw_integral +
                               0.7 * g2.values[i] * g2.raw_integral) /
                              gm.raw_integral;
        CHECK(gm.values[i] == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("global phase invariance") {
    FockVector st = coherent_state({1.3, 0.5}, 30);
    FockVector rot = st;
    for (auto& a : rot.amplitudes) a *= std::polar(1.0, 1.234);
    const CoherentParams cp{0.9, -0.7};
    CHECK(husimi_point(st, cp) ==
          doctest::Approx(husimi_point(rot, cp)).epsilon(1e-12));
}

TEST_CASE("wehrl entropy of a uniform patch is log of its area") {
    HusimiGrid g;
    g.n_q = 64;
    g.n_p = 64;
    g.p0 = 10.0;
    g.cell_area = (2.0 * kPi / 64) * (2.0 * 10.0 / 64);
    g.values.assign(64 * 64, 0.0);
    // uniform over the first 512 cells
    const int cells = 512;
    const double area = cells * g.cell_area;
    for (int i = 0; i < cells; ++i) g.values[i] = 1.0 / area;
    g.raw_integral = 1.0;
    CHECK(wehrl_entropy(g).entropy == doctest::Approx(std::log(area)).epsilon(1e-10));
}

TEST_CASE("wehrl entropy stable under grid refinement") {
    DimerParams params(1.0, -0.02, 100);
    const FockVector coh = coherent_state({0.6 * kPi, 0.3}, 100);
    const double s1 = wehrl_entropy(husimi_grid(coh, params, {128, 128})).entropy;
    const double s2 = wehrl_entropy(husimi_grid(coh, params, {256, 256})).entropy;
    CHECK(std::abs(s1 - s2) < 1e-3);
}

TEST_CASE("mixture wehrl entropy exceeds the single state's") {
    DimerParams params(1.0, -0.02, 100);
    MixedState ms;
    ms.members.push_back({0.5, coherent_state({0.5 * kPi, 0.5}, 100)});
    ms.members.push_back({0.5, coherent_state({0.5 * kPi, -0.5}, 100)});
    const double s_mix = wehrl_entropy(husimi_grid(ms, params, {128, 128})).entropy;
    const double s_one =
        wehrl_entropy(husimi_grid(ms.members[0].state, params, {128, 128})).entropy;
    CHECK(s_mix > s_one);
}

TEST_CASE("region integral: full window and complement") {
    DimerParams params(1.0, -0.003, 300);
    const FockVector coh = coherent_state({0.4 * kPi, 1.0}, 300);
    const HusimiGrid g = husimi_grid(coh, params, {96, 96});
    const double delta = -0.8;
    const RegionIntegralResult full = region_integral(g, {}, params, delta);
    CHECK(full.probability == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(full.empty_region);
    const double e_mid = mean_field_energy({0.0, 0.0}, params, delta);
    EnergyWindow low;
    low.e_max = e_mid;
    EnergyWindow high;
    high.e_min = std::nextafter(e_mid, 1e300);
    const double a = region_integral(g, low, params, delta).probability;
    const double b = region_integral(g, high, params, delta).probability;
    CHECK(a + b == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stationary state has a small PDE residual") {
    DimerParams params = DimerParams::from_nonlinearity(-3.0, 200);
    const double delta = -2.0;
    const Spectrum spec = spectrum(params, delta);
    const FockVector psi0 = spec.eigenstate(8);
    SweepProtocol prot = SweepProtocol::frozen(delta);
    const double dt = 1e-2;
    const FockVector psi1 = propagate(psi0, params, prot, 0.0, dt);
    PdeResidualOptions opts;
    opts.grid = {128, 128};
    const PdeResidualReport rep =
        husimi_pde_residual(psi0, psi1, dt, params, delta, opts);
    // dQ/dt ~ 0 for an eigenstate: both sides tiny compared to the transport
    // scale of a moving state
    const double scale = rep.transport_q_norm + rep.transport_p_norm + 1e-300;
    CHECK(rep.residual_norm < 0.05 * scale + 1e-6);
}

TEST_CASE("PDE residual converges at second order for a smooth moving state") {
    DimerParams params = DimerParams::from_nonlinearity(-3.0, 200);
    const double delta = -2.0;
    // coherent state away from fixed points and separatrix
    const FockVector psi0 = [&]{ const BlochPoint b = to_bloch({1.0, 60.0}, params); return coherent_state({b.theta, b.phi}, 200); }();
    SweepProtocol prot = SweepProtocol::frozen(delta);
    auto residual = [&](int res, double dt) {
        const FockVector psi1 = propagate(psi0, params, prot, 0.0, dt);
        PdeResidualOptions opts;
        opts.grid = {res, res};
        return husimi_pde_residual(psi0, psi1, dt, params, delta, opts).relative_residual;
    };
    const double r1 = residual(96, 8e-3);
    const double r2 = residual(192, 4e-3);
    CHECK(r2 < r1);
    // halving both h and dt should shrink the residual by about 4; accept > 2.5
    CHECK(r1 / r2 > 2.5);
}
