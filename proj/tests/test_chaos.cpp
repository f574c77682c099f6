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
#include <random>

#include "gibbs/chaos.hpp"

using namespace gibbs;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

IsingParams point(const std::string& name, int n) {
    return point_params(*find_point(name), n);
}

}  // namespace

TEST_CASE("fractal dimension limits") {
    for (int n : {2, 3, 5}) {
        const Index d = Index{1} << n;
        StateVector uniform = StateVector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
        StateVector single = StateVector::Zero(d);
        single(3) = 1.0;
        StateVector pair = StateVector::Zero(d);
        pair(0) = pair(d - 1) = 1.0 / std::sqrt(2.0);
        for (double q : {0.5, 1.0, 2.0, 3.0}) {
            CHECK_THAT(fractal_dimension(uniform, q), WithinAbs(1.0, 1e-12));
            CHECK_THAT(fractal_dimension(single, q), WithinAbs(0.0, 1e-12));
            CHECK_THAT(fractal_dimension(pair, q), WithinAbs(1.0 / n, 1e-12));
        }
    }
    StateVector bad = StateVector::Ones(4);
    CHECK_THROWS_AS(fractal_dimension(bad, 1.0), InvalidArgument);
}

TEST_CASE("fractal dimension matches direct entropy and Renyi sums") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const StateVector v = haar_random_state(32, rng);
        double h = 0.0, s2 = 0.0;
        for (Index i = 0; i < v.size(); ++i) {
            const double p = std::norm(v(i));
            h -= p * std::log2(p);
            s2 += p * p;
        }
        CHECK_THAT(fractal_dimension(v, 1.0), WithinAbs(h / 5.0, 1e-12));
        CHECK_THAT(fractal_dimension(v, 2.0), WithinAbs(-std::log2(s2) / 5.0, 1e-12));
        // D_q is nonincreasing in q
        CHECK(fractal_dimension(v, 2.0) <= fractal_dimension(v, 1.0) + 1e-12);
        CHECK(fractal_dimension(v, 1.0) <= fractal_dimension(v, 0.5) + 1e-12);
    }
}

TEST_CASE("basis presets") {
    CHECK(basis_letters("z", 4) == "ZZZZ");
    CHECK(basis_letters("x", 3) == "XXX");
    CHECK(basis_letters("mixed", 5) == "XYZXY");
    CHECK(basis_letters("XZY", 3) == "XZY");
    for (const std::string r : {"random1", "random2", "random3", "random4"}) {
        const std::string a = basis_letters(r, 8);
        CHECK(a.size() == 8);
        CHECK(a == basis_letters(r, 8));
        CHECK(a.find_first_not_of("XYZ") == std::string::npos);
    }
    CHECK(basis_letters("random1", 8) != basis_letters("random2", 8));
    CHECK_THROWS_AS(basis_letters("random5", 8), InvalidArgument);
    CHECK_THROWS_AS(basis_letters("XZ", 3), InvalidArgument);
    CHECK_THROWS_AS(product_basis("XQ"), InvalidArgument);

    // each column is an eigenvector of the matching Pauli product
    for (const std::string letters : {"X", "Y", "Z", "XYZ", "YYX"}) {
        const Operator u = product_basis(letters);
        const Index d = u.rows();
        CHECK((u.adjoint() * u - Operator::Identity(d, d)).norm() < 1e-12);
        for (std::size_t k = 0; k < letters.size(); ++k) {
            std::string label(letters.size(), 'I');
            label[k] = letters[k];
            const Operator P = pauli_from_label(label).realize();
            const Operator D = u.adjoint() * P * u;
            CHECK((D - Operator(D.diagonal().asDiagonal())).norm() < 1e-12);
        }
    }
}

TEST_CASE("eigenbasis as measurement basis gives D1 = 0") {
    const Spectrum spec = eig_hermitian(build_hamiltonian(point("CH", 4)));
    const FractalStats s = fractal_stats(spec, spec.vectors, 1.0, "eigen");
    for (double x : s.per_state_D) CHECK_THAT(x, WithinAbs(0.0, 1e-10));
}

TEST_CASE("spectrum window") {
    Spectrum spec;
    spec.values = RealVector::LinSpaced(11, 0.0, 10.0);
    spec.vectors = Operator::Identity(11, 11);
    const auto e = spectrum_window(spec, 0.8, WindowMode::Energy);
    CHECK(e.front() == 1);
    CHECK(e.back() == 9);
    const auto k = spectrum_window(spec, 0.6, WindowMode::Index);
    CHECK(k.size() == 7);
}

TEST_CASE("fractal stats are in range and CH exceeds REG") {
    const int n = 6;
    const auto scan = fractal_scan({point("CH", n), point("REG", n)}, "z");
    REQUIRE(scan.size() == 2);
    for (const auto& pt : scan) {
        for (double x : pt.stats.per_state_D) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
        double mean = 0.0;
        for (double x : pt.stats.per_state_D) mean += x;
        mean /= static_cast<double>(pt.stats.per_state_D.size());
        CHECK_THAT(pt.stats.mean, WithinAbs(mean, 1e-12));
    }
    CHECK(scan[0].stats.mean > scan[1].stats.mean);
}

TEST_CASE("spacing ratios") {
    std::vector<double> ladder;
    for (int i = 0; i < 50; ++i) ladder.push_back(0.37 * i - 3.0);
    const SpacingStats s = spacing_ratios(ladder);
    CHECK(s.ratios.size() == 48);
    for (double r : s.ratios) CHECK_THAT(r, WithinAbs(1.0, 1e-9));

    // hand-computed triple
    const SpacingStats t = spacing_ratios({0.0, 1.0, 3.0, 3.5});
    REQUIRE(t.ratios.size() == 2);
    CHECK_THAT(t.ratios[0], WithinAbs(0.5, 1e-15));
    CHECK_THAT(t.ratios[1], WithinAbs(0.25, 1e-15));

    CHECK_THROWS_AS(spacing_ratios({0.0, 1.0, 1.0, 2.0}), DegenerateSpectrum);
    CHECK_THROWS_AS(spacing_ratios({0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(spacing_ratios_even(build_hamiltonian(point("CH", 3))), InvalidArgument);
}

TEST_CASE("even sector spacing ratios are GOE-like at the chaotic point") {
    const SpacingStats s = spacing_ratios_even(build_hamiltonian(point("CH", 8)));
    for (double r : s.ratios) {
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
    }
    CHECK_THAT(s.mean_r, WithinAbs(kGoeMeanRatio, 0.03));
}

TEST_CASE("ETH statistics") {
    const IsingParams p = point("CH", 6);
    const Spectrum spec = eig_hermitian(build_hamiltonian(p));
    const Index d = spec.dim();

    const EthStatistics id = eth_statistics(Operator::Identity(d, d), spec, 8, 16);
    long diag_total = 0, off_total = 0;
    for (const auto& b : id.diagonal) {
        diag_total += b.count;
        if (b.count > 0) CHECK_THAT(b.mean, WithinAbs(1.0, 1e-12));
    }
    for (const auto& b : id.offdiagonal) {
        off_total += b.count;
        CHECK(std::abs(b.mean) < 1e-12);
        CHECK(b.mean_abs2 < 1e-24);
    }
    CHECK(diag_total == d);
    CHECK(off_total == d * (d - 1));

    // bin-statistics oracle for a direct recomputation of one diagonal bin
    const PauliString zmid = pauli_from_label("IIIZII");
    const EthStatistics z = eth_statistics(zmid, spec, 8, 16);
    const Operator ze = to_eigenbasis(zmid.realize(), spec);
    const double lo = spec.values(0), w = (spec.values(d - 1) - lo) / 8.0;
    double sum = 0.0;
    long cnt = 0;
    for (Index i = 0; i < d; ++i) {
        if (std::clamp(static_cast<int>(std::floor((spec.values(i) - lo) / w)), 0, 7) == 3) {
            sum += ze(i, i).real();
            ++cnt;
        }
    }
    CHECK(z.diagonal[3].count == cnt);
    CHECK_THAT(z.diagonal[3].mean, WithinAbs(sum / static_cast<double>(cnt), 1e-12));

    // off-diagonal means consistent with zero in most populated bins
    int populated = 0, within = 0;
    for (const auto& b : z.offdiagonal) {
        if (b.count < 20) continue;
        ++populated;
        if (std::abs(b.mean) <= 3.0 * b.std_error + 1e-14 && std::abs(b.mean_imag) <= 3.0 * b.std_error_imag + 1e-14) ++within;
    }
    REQUIRE(populated >= 6);
    CHECK(within >= populated - 1);
}
