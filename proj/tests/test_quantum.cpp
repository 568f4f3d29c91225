#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <random>

#include "dimer/quantum.hpp"
#include "dimer/rng.hpp"

using namespace dimer;
using Complex = std::complex<double>;

namespace {

Eigen::MatrixXcd dense_h(const DimerParams& params, double delta) {
    const TridiagonalMatrix tri = hamiltonian_matrix(params, delta);
    const int dim = static_cast<int>(tri.diag.size());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) h(i, i) = tri.diag[i];
    for (int i = 0; i + 1 < dim; ++i) {
        h(i, i + 1) = tri.offdiag[i];
        h(i + 1, i) = tri.offdiag[i];
    }
    return h;
}

FockVector random_state(int n_particles, std::uint64_t seed) {
    std::mt19937_64 rng = make_engine(seed, 0);
    std::normal_distribution<double> g(0.0, 1.0);
    FockVector st(n_particles + 1);
    for (auto& a : st.amplitudes) a = Complex(g(rng), g(rng));
    st.normalize();
    return st;
}

} // namespace

TEST_CASE("N=1 Hamiltonian matrix entries") {
    const double u_int = -0.4, delta = 0.7, omega = 1.0;
    DimerParams params(omega, u_int, 1);
    const TridiagonalMatrix tri = hamiltonian_matrix(params, delta);
    REQUIRE(tri.diag.size() == 2);
    CHECK(tri.diag[0] == doctest::Approx(u_int / 2 - delta / 2).epsilon(1e-14));
    CHECK(tri.diag[1] == doctest::Approx(u_int / 2 + delta / 2).epsilon(1e-14));
    CHECK(tri.offdiag[0] == doctest::Approx(-omega / 2).epsilon(1e-14));
}

TEST_CASE("N=1 eigenvalues closed form") {
    const double u_int = -0.4, omega = 1.0;
    DimerParams params(omega, u_int, 1);
    for (double delta : {0.0, 0.3, -1.7, 2.0}) {
        const Spectrum spec = spectrum(params, delta);
        const double split = std::sqrt(delta * delta + omega * omega);
        CHECK(spec.eigenvalues[0] ==
              doctest::Approx(u_int / 2 - split / 2).epsilon(1e-12));
        CHECK(spec.eigenvalues[1] ==
              doctest::Approx(u_int / 2 + split / 2).epsilon(1e-12));
    }
}

TEST_CASE("N=4 matrix against operator-application oracle") {
    // apply each term of the many-body Hamiltonian to basis vectors directly:
    // number operators and a1^dag a2 + a2^dag a1 hopping on |n, N-n>
    const int n_tot = 4;
    const double u_int = -0.3, delta = 0.7, omega = 1.0;
    DimerParams params(omega, u_int, n_tot);
    const TridiagonalMatrix tri = hamiltonian_matrix(params, delta);
    for (int n = 0; n <= n_tot; ++n) {
        const double n1 = n, n2 = n_tot - n;
        const double diag = 0.5 * u_int * (n1 * n1 + n2 * n2) + 0.5 * delta * (n1 - n2);
        CHECK(tri.diag[n] == doctest::Approx(diag).epsilon(1e-14));
        if (n < n_tot) {
            // <n+1, N-n-1| a1^dag a2 |n, N-n> = sqrt((n+1)(N-n))
            const double hop = -0.5 * omega * std::sqrt((n1 + 1.0) * n2);
            CHECK(tri.offdiag[n] == doctest::Approx(hop).epsilon(1e-14));
        }
    }
}

TEST_CASE("spectral reconstruction at N=50") {
    DimerParams params(1.0, -0.06, 50);
    std::mt19937_64 rng = make_engine(3, 0);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    for (int trial = 0; trial < 3; ++trial) {
        const double delta = ud(rng);
        const Spectrum spec = spectrum(params, delta);
        const Eigen::MatrixXcd h = dense_h(params, delta);
        const double hnorm = h.cwiseAbs().maxCoeff();
        Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(51, 51);
        for (int k = 0; k < 51; ++k) {
            Eigen::VectorXd v(51);
            for (int n = 0; n < 51; ++n) v(n) = spec.eigenvectors[k][n];
            recon += spec.eigenvalues[k] * v * v.transpose();
        }
        CHECK((recon - h.real()).cwiseAbs().maxCoeff() < 1e-9 * hnorm);
    }
}

TEST_CASE("spectrum gauge is deterministic") {
    DimerParams params(1.0, -0.06, 50);
    const Spectrum a = spectrum(params, 0.37);
    const Spectrum b = spectrum(params, 0.37);
    for (std::size_t k = 0; k < a.dim(); ++k) {
        CHECK(a.eigenvalues[k] == b.eigenvalues[k]);
        for (std::size_t n = 0; n < a.dim(); ++n)
            CHECK(a.eigenvectors[k][n] == b.eigenvectors[k][n]);
    }
}

TEST_CASE("frozen-detuning propagation keeps an eigenstate stationary") {
    DimerParams params(1.0, -0.05, 20);
    const double delta = 0.4;
    const Spectrum spec = spectrum(params, delta);
    const FockVector psi0 = spec.eigenstate(3);
    SweepProtocol prot = SweepProtocol::frozen(delta);
    const FockVector psi = propagate(psi0, params, prot, 0.0, 57.0);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-11));
    const std::vector<double> pops = adiabatic_populations(psi, spec);
    double leak = 0.0;
    for (std::size_t k = 0; k < pops.size(); ++k)
        if (k != 2) leak += pops[k];
    CHECK(leak < 1e-8);
    // phase must match exp(-i E t)
    const Complex ov = inner_product(psi0, psi);
    const Complex expected = std::polar(1.0, -spec.eigenvalues[2] * 57.0);
    CHECK(std::abs(ov - expected) < 1e-8);
}

TEST_CASE("propagation matches the dense matrix-exponential oracle") {
    for (int n_tot : {2, 4}) {
        DimerParams params(1.0, -0.3, n_tot);
        SweepProtocol prot = SweepProtocol::frozen(0.8);
        const FockVector psi0 = random_state(n_tot, 42 + n_tot);
        const double t = 0.73;
        const FockVector psi = propagate(psi0, params, prot, 0.0, t);
        const Eigen::MatrixXcd h = dense_h(params, 0.8);
        Eigen::VectorXcd v(n_tot + 1);
        for (int i = 0; i <= n_tot; ++i) v(i) = psi0.amplitudes[i];
        const Eigen::VectorXcd ref = (Complex(0.0, -1.0) * t * h).exp() * v;
        double err = 0.0;
        for (int i = 0; i <= n_tot; ++i) err += std::norm(psi.amplitudes[i] - ref(i));
        CHECK(std::sqrt(err) < 1e-10);
    }
}

TEST_CASE("swept propagation matches a finely stepped exponential-splitting oracle") {
    // piecewise-frozen reference with very small steps; also measures that
    // the sweep kink at t=0 is handled
    const int n_tot = 3;
    DimerParams params(1.0, -0.25, n_tot);
    SweepProtocol prot(-1.0, 1.0, 4.0);
    const FockVector psi0 = random_state(n_tot, 11);
    const FockVector psi = propagate(psi0, params, prot, -4.0, 4.0);
    Eigen::VectorXcd v(n_tot + 1);
    for (int i = 0; i <= n_tot; ++i) v(i) = psi0.amplitudes[i];
    const int steps = 160000;
    const double h = 8.0 / steps;
    for (int s = 0; s < steps; ++s) {
        const double tm = -4.0 + (s + 0.5) * h;
        const Eigen::MatrixXcd hm = dense_h(params, detuning_at(prot, tm));
        v = (Complex(0.0, -1.0) * h * hm).exp() * v;
    }
    double err = 0.0;
    for (int i = 0; i <= n_tot; ++i) err += std::norm(psi.amplitudes[i] - v(i));
    CHECK(std::sqrt(err) < 1e-7);
}

TEST_CASE("propagator is linear") {
    const int n_tot = 5;
    DimerParams params(1.0, -0.2, n_tot);
    SweepProtocol prot(-1.0, 1.0, 10.0);
    const FockVector a = random_state(n_tot, 1);
    const FockVector b = random_state(n_tot, 2);
    const Complex ca(0.6, 0.1), cb(-0.3, 0.7);
    FockVector mix(n_tot + 1);
    for (int i = 0; i <= n_tot; ++i)
        mix.amplitudes[i] = ca * a.amplitudes[i] + cb * b.amplitudes[i];
    const double mix_norm = mix.norm();
    mix.normalize();
    const FockVector pa = propagate(a, params, prot, -10.0, 5.0);
    const FockVector pb = propagate(b, params, prot, -10.0, 5.0);
    const FockVector pm = propagate(mix, params, prot, -10.0, 5.0);
    double err = 0.0;
    for (int i = 0; i <= n_tot; ++i) {
        const Complex expect = (ca * pa.amplitudes[i] + cb * pb.amplitudes[i]) / mix_norm;
        err += std::norm(pm.amplitudes[i] - expect);
    }
    CHECK(std::sqrt(err) < 1e-8);
}

TEST_CASE("checkpoint propagation is consistent with single-shot runs") {
    const int n_tot = 6;
    DimerParams params(1.0, -0.2, n_tot);
    SweepProtocol prot(-1.5, 0.5, 20.0);
    const FockVector psi0 = random_state(n_tot, 9);
    const std::vector<double> times{-20.0, -7.0, 0.0, 13.0, 20.0};
    const std::vector<FockVector> snaps =
        propagate_checkpoints(psi0, params, prot, -20.0, times, {});
    REQUIRE(snaps.size() == times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const FockVector direct = propagate(psi0, params, prot, -20.0, times[i]);
        double err = 0.0;
        for (int n = 0; n <= n_tot; ++n)
            err += std::norm(snaps[i].amplitudes[n] - direct.amplitudes[n]);
        CHECK(std::sqrt(err) < 1e-8);
    }
}

TEST_CASE("adiabatic populations basics") {
    DimerParams params(1.0, -0.1, 12);
    const double delta = -0.6;
    const Spectrum spec = spectrum(params, delta);
    const std::vector<double> p1 = adiabatic_populations(spec.eigenstate(4), params, delta);
    for (std::size_t k = 0; k < p1.size(); ++k)
        CHECK(p1[k] == doctest::Approx(k == 3 ? 1.0 : 0.0).epsilon(1e-10));

    FockVector sup(13);
    for (int n = 0; n <= 12; ++n)
        sup.amplitudes[n] = (spec.eigenstate(1).amplitudes[n] +
                             spec.eigenstate(2).amplitudes[n]) /
                            std::sqrt(2.0);
    const std::vector<double> p2 = adiabatic_populations(sup, params, delta);
    CHECK(p2[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(p2[1] == doctest::Approx(0.5).epsilon(1e-10));
    double rest = 0.0;
    for (std::size_t k = 2; k < p2.size(); ++k) rest += p2[k];
    CHECK(rest < 1e-10);
}

TEST_CASE("adiabatic frame propagator, frozen detuning") {
    DimerParams params(1.0, -0.3, 10);
    SweepProtocol prot = SweepProtocol::frozen(0.9);
    const Spectrum spec = spectrum(params, 0.9);
    const FockVector psi0 = spec.eigenstate(2);
    const FockVector a = propagate(psi0, params, prot, 0.0, 31.0);
    const FockVector b = propagate_adiabatic_frame(psi0, params, prot, 0.0, 31.0);
    double err = 0.0;
    for (int n = 0; n <= 10; ++n) err += std::norm(a.amplitudes[n] - b.amplitudes[n]);
    CHECK(std::sqrt(err) < 1e-8);
}

TEST_CASE("adiabatic frame propagator matches direct integration on a sweep") {
    DimerParams params(1.0, -0.5, 2);
    SweepProtocol prot(-1.0, 1.0, 1e4);
    const Spectrum spec0 = spectrum(params, -1.0);
    const FockVector psi0 = spec0.eigenstate(1);
    const FockVector a = propagate(psi0, params, prot, -1e4, 1e4);
    const FockVector b = propagate_adiabatic_frame(psi0, params, prot, -1e4, 1e4);
    double err = 0.0;
    for (int n = 0; n <= 2; ++n) err += std::norm(a.amplitudes[n] - b.amplitudes[n]);
    CHECK(std::sqrt(err) < 1e-6);
}

TEST_CASE("energy gap threshold classifier") {
    // two clusters with a wide gap
    std::vector<std::pair<double, double>> ew;
    for (int i = 0; i < 10; ++i) ew.emplace_back(0.1 * i, 0.05);
    for (int i = 0; i < 10; ++i) ew.emplace_back(50.0 + 0.1 * i, 0.05);
    const auto thr = energy_gap_threshold(ew);
    REQUIRE(thr.has_value());
    CHECK(*thr > 0.9);
    CHECK(*thr < 50.0);

    // single cluster: no significant gap
    std::vector<std::pair<double, double>> one;
    for (int i = 0; i < 20; ++i) one.emplace_back(0.1 * i, 0.05);
    CHECK_FALSE(energy_gap_threshold(one).has_value());
}

TEST_CASE("mixed state validation") {
    MixedState ms;
    ms.members.push_back({0.5, random_state(3, 1)});
    ms.members.push_back({0.5, random_state(3, 2)});
    CHECK_NOTHROW(ms.validate());
    ms.members[0].weight = 0.7;
    CHECK_THROWS(ms.validate());
}
