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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gibbs/model.hpp"
#include "gibbs/numkernel.hpp"

namespace gibbs {

struct PauliString {
    int n = 0;
    std::vector<int> sites;
    std::vector<char> letters;

    int locality() const { return static_cast<int>(sites.size()); }

    void validate() const {
        if (sites.size() != letters.size()) throw InvalidArgument("sites/letters length mismatch");
        std::vector<int> seen(sites);
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
            throw InvalidArgument("repeated site in Pauli string");
        }
        for (std::size_t q = 0; q < sites.size(); ++q) {
            if (sites[q] < 0 || sites[q] >= n) throw InvalidArgument("site out of range");
            if (letters[q] != 'X' && letters[q] != 'Y' && letters[q] != 'Z') {
                throw InvalidArgument("Pauli letters must be X, Y or Z");
            }
        }
    }

    char letter_at(int site) const {
        for (std::size_t q = 0; q < sites.size(); ++q) {
            if (sites[q] == site) return letters[q];
        }
        return 'I';
    }

    // Full label such as "IXZI".
    std::string label() const {
        std::string s;
        for (int i = 0; i < n; ++i) s.push_back(letter_at(i));
        return s;
    }

    Operator realize() const {
        validate();
        Operator out = Operator::Identity(1, 1);
        for (int i = 0; i < n; ++i) out = kron(out, pauli(letter_at(i)));
        return out;
    }
};

inline PauliString pauli_from_label(const std::string& label) {
    PauliString p;
    p.n = static_cast<int>(label.size());
    for (int i = 0; i < p.n; ++i) {
        const char c = label[static_cast<std::size_t>(i)];
        if (c == 'I') continue;
        p.sites.push_back(i);
        p.letters.push_back(c);
    }
    p.validate();
    return p;
}

// Uniform k-subsets of sites with uniform non-identity letters, drawn with
// replacement across the set.
inline std::vector<PauliString> sample_jump_set(int n, int k, int count, std::uint64_t seed) {
    if (k < 1 || k > n) throw InvalidLocality("k=" + std::to_string(k) + " for n=" + std::to_string(n));
    if (count < 1) throw InvalidArgument("jump count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<PauliString> out;
    out.reserve(static_cast<std::size_t>(count));
    static constexpr char kLetters[3] = {'X', 'Y', 'Z'};
    for (int a = 0; a < count; ++a) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        // Partial Fisher-Yates: the first k entries form a uniform k-subset.
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<int> pick(i, n - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
        }
        PauliString p;
        p.n = n;
        p.sites.assign(order.begin(), order.begin() + k);
        std::sort(p.sites.begin(), p.sites.end());
        std::uniform_int_distribution<int> letter(0, 2);
        for (int i = 0; i < k; ++i) p.letters.push_back(kLetters[letter(rng)]);
        out.push_back(std::move(p));
    }
    return out;
}

// One record per line: "n k seed label".
inline std::string serialize_jump_set(const std::vector<PauliString>& set, int k, std::uint64_t seed) {
    std::ostringstream os;
    for (const auto& p : set) os << p.n << ' ' << k << ' ' << seed << ' ' << p.label() << '\n';
    return os.str();
}

inline std::vector<PauliString> parse_jump_set(const std::string& text) {
    std::istringstream is(text);
    std::vector<PauliString> out;
    int n = 0, k = 0;
    std::uint64_t seed = 0;
    std::string label;
    while (is >> n >> k >> seed >> label) {
        PauliString p = pauli_from_label(label);
        if (p.n != n || p.locality() != k) throw InvalidArgument("inconsistent jump record " + label);
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<Operator> realize_all(const std::vector<PauliString>& set) {
    std::vector<Operator> out;
    out.reserve(set.size());
    for (const auto& p : set) out.push_back(p.realize());
    return out;
}

// Gaussian filter with energy width delta_E and shift omega_gamma = beta*delta_E^2/2.
struct FilterSpec {
    double beta = 0.5;
    double delta_E = 2.0 * std::numbers::sqrt2;
    double omega_gamma = 2.0;
};

inline FilterSpec make_filter(double beta, double delta_E) {
    if (!(delta_E > 0.0)) throw InvalidArgument("delta_E must be positive");
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be nonnegative");
    return FilterSpec{beta, delta_E, beta * delta_E * delta_E / 2.0};
}

// Protocol choice delta_E = sqrt(2)/beta.
inline FilterSpec make_filter(double beta) {
    if (!(beta > 0.0)) throw InvalidArgument("the default filter width needs beta > 0");
    return make_filter(beta, std::numbers::sqrt2 / beta);
}

inline cplx filter_time(const FilterSpec& f, double t) {
    const double d2 = f.delta_E * f.delta_E;
    const double amp = std::pow(d2 / (2.0 * std::pow(std::numbers::pi, 3)), 0.25);
    return amp * std::exp(cplx(-d2 * t * t, f.beta * d2 * t / 2.0));
}

inline double filter_freq(const FilterSpec& f, double nu) {
    const double d2 = f.delta_E * f.delta_E;
    const double shifted = nu + f.omega_gamma;
    return std::pow(2.0 * std::numbers::pi * d2, -0.25) * std::exp(-shifted * shifted / (4.0 * d2));
}

struct LindbladOperator {
    Operator matrix;
    int source = -1;
};

inline std::vector<Operator> matrices_of(const std::vector<LindbladOperator>& ls) {
    std::vector<Operator> out;
    out.reserve(ls.size());
    for (const auto& l : ls) out.push_back(l.matrix);
    return out;
}

inline Operator to_eigenbasis(const Operator& a, const Spectrum& spec) {
    return spec.vectors.adjoint() * a * spec.vectors;
}

inline Operator from_eigenbasis(const Operator& a, const Spectrum& spec) {
    return spec.vectors * a * spec.vectors.adjoint();
}

// Eigenbasis entries eta(nu_ij) * A_ij with nu_ij the grouped Bohr frequency.
inline Operator lindblad_eigenbasis(const Operator& a_eig, const Spectrum& spec, const FilterSpec& f,
                                    const BohrSpectrum& bohr) {
    RealVector eta(bohr.size());
    for (Index k = 0; k < bohr.size(); ++k) {
        const double e = filter_freq(f, bohr.frequencies(k));
        eta(k) = e < 1e-300 ? 0.0 : e;
    }
    Operator l(spec.dim(), spec.dim());
    for (Index j = 0; j < spec.dim(); ++j) {
        for (Index i = 0; i < spec.dim(); ++i) l(i, j) = eta(bohr.pair_index(i, j)) * a_eig(i, j);
    }
    return l;
}

inline LindbladOperator lindblad_op_exact(const Operator& a, const Spectrum& spec, const FilterSpec& f,
                                          const BohrSpectrum& bohr, int source = -1) {
    require_same_dim(a, spec.vectors, "lindblad_op_exact");
    const Operator l_eig = lindblad_eigenbasis(to_eigenbasis(a, spec), spec, f, bohr);
    return {from_eigenbasis(l_eig, spec), source};
}

inline LindbladOperator lindblad_op_exact(const PauliString& a, const Spectrum& spec, const FilterSpec& f,
                                          const BohrSpectrum& bohr, int source = -1) {
    return lindblad_op_exact(a.realize(), spec, f, bohr, source);
}

inline std::vector<LindbladOperator> lindblad_ops_exact(const std::vector<PauliString>& set,
                                                        const Spectrum& spec, const FilterSpec& f,
                                                        const BohrSpectrum& bohr) {
    std::vector<LindbladOperator> out;
    out.reserve(set.size());
    for (std::size_t a = 0; a < set.size(); ++a) {
        out.push_back(lindblad_op_exact(set[a], spec, f, bohr, static_cast<int>(a)));
    }
    return out;
}

// Trapezoid weight of node s in {-S..S} for spacing dt.
inline double trapezoid_weight(int s, int S, double dt) {
    return (s == -S || s == S) ? 0.5 * dt : dt;
}

inline int oft_steps(double T, double dt_oft) {
    if (!(T > 0.0) || !(dt_oft > 0.0)) throw InvalidArgument("T and dt_oft must be positive");
    const int S = static_cast<int>(std::lround(T / dt_oft));
    if (S < 1) throw InvalidArgument("T/dt_oft rounds to S < 1");
    return S;
}

// Trapezoid rule for int g(t) e^{iHt} A e^{-iHt} dt over [-T, T] with 2S+1
// nodes; the Heisenberg picture is exact in the eigenbasis.
inline LindbladOperator lindblad_op_discretized(const Operator& a, const Spectrum& spec, const FilterSpec& f,
                                                double T, int S, int source = -1) {
    require_same_dim(a, spec.vectors, "lindblad_op_discretized");
    if (!(T > 0.0)) throw InvalidArgument("T must be positive");
    if (S < 1) throw InvalidArgument("S must be >= 1");
    const double dt = T / S;
    const Index d = spec.dim();
    std::vector<cplx> wg(static_cast<std::size_t>(2 * S + 1));
    for (int s = -S; s <= S; ++s) {
        wg[static_cast<std::size_t>(s + S)] = trapezoid_weight(s, S, dt) * filter_time(f, s * dt);
    }
    const Operator a_eig = to_eigenbasis(a, spec);
    Operator l_eig(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
            const double nu = spec.values(i) - spec.values(j);
            cplx acc = 0.0;
            for (int s = -S; s <= S; ++s) {
                acc += wg[static_cast<std::size_t>(s + S)] * std::exp(kI * (nu * dt * s));
            }
            l_eig(i, j) = acc * a_eig(i, j);
        }
    }
    return {from_eigenbasis(l_eig, spec), source};
}

inline LindbladOperator lindblad_op_discretized(const PauliString& a, const Spectrum& spec, const FilterSpec& f,
                                                double T, int S, int source = -1) {
    return lindblad_op_discretized(a.realize(), spec, f, T, S, source);
}

}  // namespace gibbs
