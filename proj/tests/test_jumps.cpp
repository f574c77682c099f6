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

#include <cmath>
#include <numbers>

#include "gibbs/jumps.hpp"
#include "gibbs/model.hpp"

using namespace gibbs;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
auto simpson(F&& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    std::decay_t<decltype(f(a))> acc = f(a);
    acc += f(b);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return decltype(acc)(acc * (h / 3.0));
}

}  // namespace

TEST_CASE("sample_jump_set") {
    const auto full = sample_jump_set(3, 3, 1, 1);
    REQUIRE(full.size() == 1);
    CHECK(full[0].locality() == 3);
    for (int i = 0; i < 3; ++i) CHECK(full[0].letter_at(i) != 'I');

    const auto set = sample_jump_set(5, 2, 20, 42);
    REQUIRE(set.size() == 20);
    for (const auto& p : set) {
        p.validate();
        int nonid = 0;
        for (char c : p.label()) nonid += c != 'I';
        CHECK(nonid == 2);
        const Operator a = p.realize();
        CHECK(hermiticity_residual(a) < 1e-15);
        CHECK(max_abs(a * a - identity(32)) < 1e-14);
    }
    const auto again = sample_jump_set(5, 2, 20, 42);
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(set[i].label() == again[i].label());
    CHECK_THROWS_AS(sample_jump_set(3, 4, 1, 1), InvalidLocality);
    CHECK_THROWS_AS(sample_jump_set(3, 0, 1, 1), InvalidLocality);

    const std::string text = serialize_jump_set(set, 2, 42);
    const auto parsed = parse_jump_set(text);
    REQUIRE(parsed.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(parsed[i].label() == set[i].label());
}

TEST_CASE("sample_jump_set covers sites and letters uniformly") {
    const auto set = sample_jump_set(4, 1, 12000, 7);
    std::array<int, 4> sites{};
    std::array<int, 3> letters{};
    for (const auto& p : set) {
        sites[static_cast<std::size_t>(p.sites[0])]++;
        letters[static_cast<std::size_t>(p.letters[0] == 'X' ? 0 : p.letters[0] == 'Y' ? 1 : 2)]++;
    }
    for (int c : sites) CHECK(std::abs(c - 3000) < 4 * std::sqrt(3000.0));
    for (int c : letters) CHECK(std::abs(c - 4000) < 4 * std::sqrt(4000.0));
}

TEST_CASE("filter identities") {
    const double beta = 0.5;
    const FilterSpec f = make_filter(beta);
    CHECK_THAT(f.delta_E, WithinRel(std::sqrt(2.0) / beta, 1e-15));
    CHECK_THAT(f.omega_gamma, WithinRel(1.0 / beta, 1e-14));

    const double g0 = std::pow(f.delta_E * f.delta_E / (2.0 * std::pow(std::numbers::pi, 3)), 0.25);
    CHECK_THAT(filter_time(f, 0.0).real(), WithinRel(g0, 1e-14));
    CHECK(filter_time(f, 0.0).imag() == 0.0);
    for (double t : {0.1, 0.4, 1.3}) CHECK_THAT(std::abs(filter_time(f, t)), WithinRel(std::abs(filter_time(f, -t)), 1e-14));

    for (double x : {0.3, 1.0, 3.0}) {
        for (double s : {1.0, -1.0}) {
            const double nu = s * x / beta;
            CHECK_THAT(filter_freq(f, nu), WithinRel(std::exp(-beta * nu / 2.0) * filter_freq(f, -nu), 1e-12));
        }
    }
    const double eta0 = std::pow(beta * beta / (4.0 * std::numbers::pi), 0.25) * std::exp(-1.0 / 8.0);
    CHECK_THAT(filter_freq(f, 0.0), WithinRel(eta0, 1e-14));
    // closed form with delta_E = sqrt(2)/beta
    for (double nu : {-5.0, -2.0, 0.5, 3.0}) {
        const double closed = std::pow(beta * beta / (4.0 * std::numbers::pi), 0.25) *
                              std::exp(-std::pow(beta * nu + 1.0, 2) / 8.0);
        CHECK_THAT(filter_freq(f, nu), WithinRel(closed, 1e-13));
    }
    // peak at -1/beta
    double best_nu = 0.0, best = -1.0;
    for (double nu = -10.0; nu <= 10.0; nu += 1e-3) {
        if (filter_freq(f, nu) > best) {
            best = filter_freq(f, nu);
            best_nu = nu;
        }
    }
    CHECK_THAT(best_nu, WithinAbs(-1.0 / beta, 2e-3));

    const double L = 12.0 * beta;
    // With this prefactor and the non-unitary transform below, the L2 mass of g is 1/(2 pi)
    // and the L2 mass of eta is 1.
    const double norm = simpson([&](double t) { return std::norm(filter_time(f, t)); }, -L, L, 20000);
    CHECK_THAT(norm, WithinAbs(1.0 / (2.0 * std::numbers::pi), 1e-10));
    const double eta_norm = simpson([&](double nu) { return filter_freq(f, nu) * filter_freq(f, nu); }, -60.0, 60.0, 20000);
    CHECK_THAT(eta_norm, WithinAbs(1.0, 1e-10));
    for (double nu : {-4.0, -2.0, -0.5, 0.0, 1.0, 3.0}) {
        const cplx ft = simpson([&](double t) { return std::exp(kI * nu * t) * filter_time(f, t); }, -L, L, 20000);
        CHECK(std::abs(ft - filter_freq(f, nu)) < 1e-8);
    }
    // Relative tail of the integral of g outside [-T, T] at T = 1.6
    const cplx inside = simpson([&](double t) { return filter_time(f, t); }, -1.6, 1.6, 20000);
    const double tail = std::abs(filter_freq(f, 0.0) - inside) / filter_freq(f, 0.0);
    CHECK(tail < 1e-6);
}

TEST_CASE("lindblad_op_exact") {
    const FilterSpec f = make_filter(0.5);
    const IsingParams p = point_params(*find_point("CH"), 3);
    const Operator H = build_hamiltonian(p);
    const Spectrum s = eig_hermitian(H);
    const BohrSpectrum b = bohr_frequencies(s);

    const LindbladOperator lid = lindblad_op_exact(identity(8), s, f, b);
    CHECK(max_abs(lid.matrix - filter_freq(f, 0.0) * identity(8)) < 1e-13);

    const auto set = sample_jump_set(3, 2, 5, 3);
    for (const auto& a : set) {
        const Operator A = a.realize();
        const Operator L = lindblad_op_exact(a, s, f, b).matrix;
        const Operator le = to_eigenbasis(L, s), ae = to_eigenbasis(A, s);
        for (Index i = 0; i < 8; ++i)
            for (Index j = 0; j < 8; ++j)
                CHECK(std::abs(std::abs(le(i, j)) - filter_freq(f, s.values(i) - s.values(j)) * std::abs(ae(i, j))) < 1e-12);

        // Parseval over Bohr sectors and recovery of A with unit weights
        Operator sum = Operator::Zero(8, 8);
        double parseval = 0.0;
        for (Index k = 0; k < b.size(); ++k) {
            Operator ak = Operator::Zero(8, 8);
            for (Index i = 0; i < 8; ++i)
                for (Index j = 0; j < 8; ++j)
                    if (b.pair_index(i, j) == k) ak(i, j) = ae(i, j);
            sum += ak;
            parseval += ak.squaredNorm();
        }
        CHECK(max_abs(from_eigenbasis(sum, s) - A) < 1e-12);
        CHECK_THAT(parseval, WithinAbs(A.squaredNorm(), 1e-10));

        // Time-domain quadrature oracle over [-8 beta, 8 beta] -> wider to reach 1e-6
        const double L8 = 8.0 * f.beta;
        Operator quad = simpson(
            [&](double t) {
                const Operator u = expm_phase(s, -t);
                return Operator(filter_time(f, t) * (u * A * u.adjoint()));
            },
            -L8, L8, 4000);
        CHECK(max_abs(quad - L) < 1e-6);
    }
}

TEST_CASE("lindblad_op_discretized") {
    const FilterSpec f = make_filter(0.5);
    const Spectrum s = eig_hermitian(build_hamiltonian(point_params(*find_point("CH"), 3)));
    const BohrSpectrum b = bohr_frequencies(s);

    const int S = oft_steps(1.6, 0.1);
    const LindbladOperator lid = lindblad_op_discretized(identity(8), s, f, 1.6, S);
    cplx scalar = 0.0;
    for (int k = -S; k <= S; ++k) scalar += trapezoid_weight(k, S, 1.6 / S) * filter_time(f, k * 1.6 / S);
    CHECK(max_abs(lid.matrix - scalar * identity(8)) < 1e-14);

    const auto set = sample_jump_set(3, 2, 5, 3);
    for (const auto& a : set) {
        const Operator A = a.realize();
        const Operator exact = lindblad_op_exact(a, s, f, b).matrix;
        const Operator disc = lindblad_op_discretized(a, s, f, 1.6, S).matrix;
        // explicit sum with matrix exponentials as oracle
        Operator oracle = Operator::Zero(8, 8);
        const double dt = 1.6 / S;
        for (int k = -S; k <= S; ++k) {
            const Operator u = expm_phase(s, -k * dt);
            oracle += trapezoid_weight(k, S, dt) * filter_time(f, k * dt) * (u * A * u.adjoint());
        }
        CHECK(max_abs(disc - oracle) < 1e-12);
        CHECK(max_abs(disc - exact) < 1e-3);
    }
    CHECK_THROWS(oft_steps(1.6, 10.0));
}
