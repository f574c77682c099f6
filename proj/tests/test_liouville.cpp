// Copyright 2026 The gibbs-sampler Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "gibbs/jumps.hpp"
#include "gibbs/liouville.hpp"
#include "gibbs/model.hpp"

using namespace gibbs;
using Catch::Matchers::WithinAbs;

namespace {

struct Setup {
    Operator H;
    Spectrum spec;
    BohrSpectrum bohr;
    FilterSpec f;
    Operator sigma;
    std::vector<Operator> L;
    std::vector<double> gammas;
    std::vector<PauliString> jumps;
};

Setup make_setup(const char* point, int n, int count, std::uint64_t seed, int k = 2) {
    Setup s;
    s.H = build_hamiltonian(point_params(*find_point(point), n));
    s.spec = eig_hermitian(s.H);
    s.bohr = bohr_frequencies(s.spec);
    s.f = make_filter(default_beta());
    s.sigma = gibbs_state(s.spec, s.f.beta);
    s.jumps = sample_jump_set(n, k, count, seed);
    s.L = matrices_of(lindblad_ops_exact(s.jumps, s.spec, s.f, s.bohr));
    s.gammas = uniform_gammas(s.L.size());
    return s;
}

// Direct textbook evaluation of the Lindblad generator.
Operator direct_lindblad(const Operator& H, const std::vector<Operator>& L, const std::vector<double>& g,
                         const Operator& rho) {
    Operator out = -kI * (H * rho - rho * H);
    for (std::size_t a = 0; a < L.size(); ++a) {
        const Operator LdL = L[a].adjoint() * L[a];
        out += g[a] * (L[a] * rho * L[a].adjoint() - 0.5 * (LdL * rho + rho * LdL));
    }
    return out;
}

// Sector decomposition A_nu with explicit projector sandwiches.
std::vector<Operator> bohr_sectors(const Operator& A, const Spectrum& spec, const BohrSpectrum& b) {
    const Index d = spec.dim();
    std::vector<Operator> out;
    for (Index k = 0; k < b.size(); ++k) {
        Operator sum = Operator::Zero(d, d);
        for (Index i = 0; i < d; ++i) {
            for (Index j = 0; j < d; ++j) {
                if (b.pair_index(i, j) != k) continue;
                const Operator Pi = spec.vectors.col(i) * spec.vectors.col(i).adjoint();
                const Operator Pj = spec.vectors.col(j) * spec.vectors.col(j).adjoint();
                sum += Pi * A * Pj;
            }
        }
        out.push_back(sum);
    }
    return out;
}

}  // namespace

TEST_CASE("build_superop matches direct evaluation") {
    const Setup s = make_setup("CH", 3, 20, 7);
    const Superoperator S = build_superop(s.H, s.L, s.gammas, true);
    const Lindbladian lind(s.H, s.L, s.gammas);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const Operator rho = random_hermitian(8, rng);
        const Operator direct = direct_lindblad(s.H, s.L, s.gammas, rho);
        CHECK(max_abs(S.apply(rho) - direct) < 1e-10);
        CHECK(max_abs(lind.apply(rho) - direct) < 1e-10);
    }
    // trace preservation: vec(I)^dag S = 0
    const Eigen::VectorXcd vi = vec(identity(8));
    CHECK((vi.adjoint() * S.matrix).cwiseAbs().maxCoeff() < 1e-10);

    const Superoperator Z = build_superop(Operator::Zero(4, 4), {identity(4)}, {1.0}, true);
    CHECK(Z.matrix.cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(build_superop(s.H, s.L, {1.0}, true), DimensionMismatch);
}

TEST_CASE("dissipation-free generator") {
    const Setup s = make_setup("CH", 3, 1, 1);
    const Superoperator S = build_superop(s.H, std::vector<Operator>{}, std::vector<double>{}, true);
    const Eigen::VectorXcd ev = general_eigenvalues(S.matrix);
    std::vector<double> got, expect;
    for (Index i = 0; i < ev.size(); ++i) {
        CHECK(std::abs(ev(i).real()) < 1e-10);
        got.push_back(ev(i).imag());
    }
    for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 8; ++j) expect.push_back(-(s.spec.values(i) - s.spec.values(j)));
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK_THAT(got[i], WithinAbs(expect[i], 1e-10));
    CHECK_THROWS_AS(steady_state_and_gap(S), NonUniqueSteadyState);
    try {
        steady_state_and_gap(S);
    } catch (const NonUniqueSteadyState& e) {
        CHECK(std::string(e.what()).find("8 eigenvalues") != std::string::npos);
    }
    CHECK_THROWS_AS(markov_restriction(S, s.spec, s.sigma), DegenerateChain);
}

TEST_CASE("steady state and gap, CH n=3") {
    const Setup s = make_setup("CH", 3, 20, 11);
    const Superoperator S = build_superop(s.H, s.L, s.gammas, true);
    const GapResult g = steady_state_and_gap(S);
    CHECK(g.zero_count == 1);
    CHECK(g.gap > 0.0);
    CHECK(g.max_nonzero_real < 0.0);
    CHECK_THAT(g.steady_state.trace().real(), WithinAbs(1.0, 1e-12));
    CHECK(g.min_steady_eigenvalue > -1e-8);
    CHECK(trace_distance(g.steady_state, s.sigma) < 5e-2);

    // Eigen's own complex eigensolver as an oracle for the spectrum
    Eigen::ComplexEigenSolver<Operator> ces(S.matrix, false);
    std::vector<double> a, b;
    for (Index i = 0; i < 64; ++i) {
        a.push_back(ces.eigenvalues()(i).real());
        b.push_back(g.eigenvalues(i).real());
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(a[i], WithinAbs(b[i], 1e-9));
    CHECK_THAT(-a[a.size() - 2], WithinAbs(g.gap, 1e-9));

    // Long-time propagation as an oracle for the steady state
    const Operator prop = Operator(S.matrix * (30.0 / g.gap)).exp();
    const Operator late = unvec(prop * vec(maximally_mixed(8)), 8);
    CHECK(trace_distance(late, g.steady_state) < 1e-8);
    CHECK(max_abs(S.apply(g.steady_state)) < 1e-10);
}

TEST_CASE("gap ceiling") {
    Superoperator big;
    big.system_dim = 128;
    big.matrix = Operator::Zero(1, 1);
    CHECK_THROWS_AS(steady_state_and_gap(big), ResourceCeiling);
}

TEST_CASE("ckg coherent term") {
    const Setup s = make_setup("CH", 3, 10, 5);
    const Operator G = ckg_coherent_term(s.jumps, s.gammas, s.spec, s.f, s.bohr);
    CHECK(hermiticity_residual(G) < 1e-10);

    // Oracle: (i/2) sum_a gamma_a sum_{nu1,nu2} eta1 eta2 tanh(beta(nu2-nu1)/4) A_nu1^dag A_nu2
    // with A_nu = sum_{E_i - E_j = nu} P_i A P_j
    Operator oracle = Operator::Zero(8, 8);
    for (std::size_t a = 0; a < s.jumps.size(); ++a) {
        const auto sec = bohr_sectors(s.jumps[a].realize(), s.spec, s.bohr);
        for (Index k1 = 0; k1 < s.bohr.size(); ++k1) {
            for (Index k2 = 0; k2 < s.bohr.size(); ++k2) {
                const double n1 = s.bohr.frequencies(k1), n2 = s.bohr.frequencies(k2);
                oracle += 0.5 * kI * s.gammas[a] * filter_freq(s.f, n1) * filter_freq(s.f, n2) *
                          std::tanh(s.f.beta * (n2 - n1) / 4.0) *
                          (sec[static_cast<std::size_t>(k1)].adjoint() * sec[static_cast<std::size_t>(k2)]);
            }
        }
    }
    CHECK(max_abs(G - oracle) < 1e-12);

    const Operator Gid = ckg_coherent_term(std::vector<Operator>{identity(8)}, {1.0}, s.spec, s.f, s.bohr);
    CHECK(max_abs(Gid) < 1e-15);

    // Exact detailed balance
    const DbResiduals r = db_residuals(G, s.L, s.gammas, s.sigma);
    CHECK(r.action_on_gibbs < 1e-9);
    CHECK(r.transition_term < 1e-9);
    const Superoperator S = build_superop(G, s.L, s.gammas, true);
    const GapResult g = steady_state_and_gap(S);
    CHECK(trace_distance(g.steady_state, s.sigma) < 1e-9);
}

TEST_CASE("db residuals with the system Hamiltonian") {
    const Setup s = make_setup("CH", 3, 10, 5);
    const DbResiduals r = db_residuals(s.H, s.L, s.gammas, s.sigma);
    CHECK(r.transition_term < 1e-9);
    CHECK(r.action_on_gibbs > 1e-6);

    // Averaged over jump sets, the residual drops with |A|
    auto mean_action = [](int count) {
        double acc = 0.0;
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const Setup t = make_setup("CH", 3, count, seed);
            acc += db_residuals(t.H, t.L, t.gammas, t.sigma).action_on_gibbs;
        }
        return acc / 6.0;
    };
    const double r5 = mean_action(5), r20 = mean_action(20), r50 = mean_action(50);
    CHECK(r5 > r20);
    CHECK(r20 > r50);

    Operator singular = s.sigma;
    singular.setZero();
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(db_residuals(s.H, s.L, s.gammas, singular), SingularGibbs);
}

TEST_CASE("coherent term on and off share the fixed point when G commutes with sigma") {
    const Setup s = make_setup("CH", 3, 10, 5);
    const Operator G = ckg_coherent_term(s.jumps, s.gammas, s.spec, s.f, s.bohr);
    // Commuting coherent term: diagonal in the eigenbasis
    const Operator Gd = from_eigenbasis(Operator(to_eigenbasis(G, s.spec).diagonal().asDiagonal()), s.spec);
    const GapResult with = steady_state_and_gap(build_superop(Operator(G + s.H), s.L, s.gammas, true));
    const GapResult without = steady_state_and_gap(build_superop(G, s.L, s.gammas, true));
    CHECK(trace_distance(with.steady_state, without.steady_state) < 1e-8);
    CHECK(max_abs(Gd * s.sigma - s.sigma * Gd) < 1e-12);
}

TEST_CASE("markov restriction") {
    const Setup s = make_setup("CH", 3, 20, 3);
    const Superoperator S = build_superop(s.H, s.L, s.gammas, true);
    const MarkovRestriction mc = markov_restriction(S, s.spec, s.sigma);
    REQUIRE(mc.P.rows() == 8);
    for (Index i = 0; i < 8; ++i) {
        CHECK(std::abs(mc.P.row(i).sum() - 1.0) < 1e-12);
        CHECK(std::abs(mc.q.row(i).sum()) < 1e-10);
        CHECK(mc.P.row(i).minCoeff() >= -1e-12);
    }
    // Oracle: rates from the direct generator on eigenprojectors
    for (Index i = 0; i < 8; ++i) {
        const Operator Pi = s.spec.vectors.col(i) * s.spec.vectors.col(i).adjoint();
        const Operator out = direct_lindblad(s.H, s.L, s.gammas, Pi);
        for (Index j = 0; j < 8; ++j) {
            const cplx qij = (s.spec.vectors.col(j).adjoint() * out * s.spec.vectors.col(j))(0, 0);
            CHECK_THAT(mc.q(i, j), WithinAbs(qij.real(), 1e-12));
        }
    }
    const RealVector w = energy_distribution(s.sigma, s.spec);
    CHECK((mc.pi - w).cwiseAbs().maxCoeff() < 1e-12);

    // Diagonal restriction of a Hermitian jump set is exactly Gibbs-balanced for any |A|
    for (int count : {5, 20, 50}) {
        const Setup t = make_setup("CH", 3, count, 2);
        const MarkovRestriction m = markov_restriction(build_superop(t.H, t.L, t.gammas, true), t.spec, t.sigma);
        CHECK(m.detailed_balance_residual() < 1e-14);
    }
}

TEST_CASE("markov restriction groups degenerate levels") {
    const Operator H = build_hamiltonian({3, 1.0, 0.0, 3.062});
    const Spectrum spec = eig_hermitian(H);
    const BohrSpectrum bohr = bohr_frequencies(spec);
    const FilterSpec f = make_filter(0.5);
    const auto jumps = sample_jump_set(3, 2, 20, 4);
    const auto L = matrices_of(lindblad_ops_exact(jumps, spec, f, bohr));
    const MarkovRestriction mc =
        markov_restriction(build_superop(H, L, uniform_gammas(L.size()), true), spec, gibbs_state(spec, 0.5));
    // Levels of -J sum ZZ - m sum Z at n=3: blocks by (domain walls, magnetization)
    CHECK(mc.P.rows() < 8);
    for (Index i = 0; i < mc.P.rows(); ++i) CHECK(std::abs(mc.P.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("cheeger two-state chain") {
    for (auto [p, q] : {std::pair{0.3, 0.1}, std::pair{0.05, 0.4}, std::pair{0.2, 0.2}}) {
        MarkovRestriction mc;
        mc.P.resize(2, 2);
        mc.P << 1 - p, p, q, 1 - q;
        const CheegerResult c = conductance_cheeger(mc);
        const double pi0 = q / (p + q), pi1 = p / (p + q);
        CHECK_THAT(c.stationary(0), WithinAbs(pi0, 1e-12));
        CHECK_THAT(c.gap_P, WithinAbs(p + q, 1e-12));
        const double phi = std::min(pi0 <= 0.5 ? p : INFINITY, pi1 <= 0.5 ? q : INFINITY);
        CHECK_THAT(c.phi, WithinAbs(phi, 1e-12));
        CHECK(c.sandwich_ok);
        CHECK(c.exhaustive);
        CHECK(c.nonreversibility < 1e-14);
    }
}

TEST_CASE("cheeger sandwich on the restricted chain") {
    for (int n : {3, 4}) {
        const Setup s = make_setup("CH", n, 20, 9);
        const MarkovRestriction mc = markov_restriction(build_superop(s.H, s.L, s.gammas, true), s.spec, s.sigma);
        const CheegerResult c = conductance_cheeger(mc);
        CHECK(c.exhaustive);
        CHECK(c.sandwich_ok);
        CHECK(c.phi > 0.0);

        // Oracle conductance by brute force on the reversibilized chain
        const Index m = mc.P.rows();
        double best = INFINITY;
        for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << m); ++mask) {
            double mass = 0.0, flow = 0.0;
            for (Index i = 0; i < m; ++i) {
                if (!((mask >> i) & 1)) continue;
                mass += c.stationary(i);
                for (Index j = 0; j < m; ++j) {
                    if ((mask >> j) & 1) continue;
                    flow += 0.5 * (c.stationary(i) * mc.P(i, j) + c.stationary(j) * mc.P(j, i));
                }
            }
            if (mass <= 0.5) best = std::min(best, flow / mass);
        }
        CHECK_THAT(c.phi, WithinAbs(best, 1e-12));

        // Contiguous scan never undercuts the exhaustive minimum
        const CheegerResult cc = conductance_cheeger(mc, 2);
        CHECK_FALSE(cc.exhaustive);
        CHECK(cc.phi >= c.phi - 1e-14);
    }
}
