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
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gibbs/numkernel.hpp"

namespace gibbs {

// H = -J sum Z_i Z_{i+1} - h sum X_i - m sum Z_i on an open chain.
// Site 0 is the most significant bit of the computational index.
struct IsingParams {
    int n = 1;
    double J = 1.0;
    double h = 0.0;
    double m = 0.0;
};

struct NamedPoint {
    std::string_view key;
    double h_over_J;
    double m_over_J;
    // Recorded Runge-Kutta step sizes J*dt_rk for n = 3..8.
    std::array<double, 6> dt_rk;

    double dt_rk_for(int n) const {
        if (n < 3 || n > 8) return dt_rk[0];
        return dt_rk[static_cast<std::size_t>(n - 3)];
    }
};

inline const std::array<NamedPoint, 8>& named_points() {
    static const std::array<NamedPoint, 8> points{{
        {"TFIM", 1.0, 0.0, {0.25, 0.25, 0.125, 0.125, 0.125, 0.125}},
        {"CH2", 1.0, 0.2, {0.25, 0.25, 0.125, 0.125, 0.125, 0.125}},
        {"CH", 1.0, 0.4, {0.25, 0.25, 0.125, 0.125, 0.125, 0.125}},
        {"KIH", 0.9045, 0.8090, {0.25, 0.125, 0.125, 0.125, 0.125, 0.0625}},
        {"REG", 0.1585, 3.062, {0.125, 0.0625, 0.0625, 0.0625, 0.0625, 0.03125}},
        {"INTER", 0.5623, 1.230, {0.25, 0.125, 0.125, 0.125, 0.0625, 0.0625}},
        {"CH3", 1.698, 0.5551, {0.125, 0.125, 0.125, 0.0625, 0.0625, 0.0625}},
        {"REG2", 6.310, 0.2158, {0.0625, 0.03125, 0.03125, 0.03125, 0.03125, 0.015625}},
    }};
    return points;
}

inline std::optional<NamedPoint> find_point(std::string_view key) {
    for (const auto& p : named_points()) {
        if (p.key == key) return p;
    }
    return std::nullopt;
}

inline IsingParams point_params(const NamedPoint& p, int n, double J = 1.0) {
    return IsingParams{n, J, p.h_over_J * J, p.m_over_J * J};
}

inline double default_beta(double J = 1.0) { return 1.0 / (2.0 * J); }

inline int site_bit(Index basis_index, int site, int n) {
    return static_cast<int>((basis_index >> (n - 1 - site)) & 1);
}

inline Operator build_hamiltonian(const IsingParams& p) {
    if (p.n < 1) throw InvalidArgument("n must be >= 1");
    const int n = p.n;
    const Index d = Index{1} << n;
    Operator H = Operator::Zero(d, d);
    for (Index s = 0; s < d; ++s) {
        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            const double zi = 1.0 - 2.0 * site_bit(s, i, n);
            diag -= p.m * zi;
            if (i + 1 < n) {
                const double zj = 1.0 - 2.0 * site_bit(s, i + 1, n);
                diag -= p.J * zi * zj;
            }
            const Index flipped = s ^ (Index{1} << (n - 1 - i));
            H(flipped, s) -= p.h;
        }
        H(s, s) += diag;
    }
    return H;
}

// Diagonal (Z-type) and off-diagonal (X-type) parts of a Hamiltonian in the
// computational basis.
struct HamiltonianSplit {
    Operator diagonal;
    Operator offdiagonal;
};

inline HamiltonianSplit split_hamiltonian(const Operator& H) {
    HamiltonianSplit s;
    s.diagonal = Operator(H.diagonal().asDiagonal());
    s.offdiagonal = H - s.diagonal;
    return s;
}

inline Operator gibbs_state(const Spectrum& spec, double beta) {
    if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
    const double e0 = spec.values.minCoeff();
    RealVector w(spec.dim());
    for (Index i = 0; i < spec.dim(); ++i) w(i) = std::exp(-beta * (spec.values(i) - e0));
    w /= w.sum();
    Operator sigma = spec.vectors * w.cast<cplx>().asDiagonal() * spec.vectors.adjoint();
    return hermitize(sigma);
}

inline RealVector gibbs_populations(const Spectrum& spec, double beta) {
    const double e0 = spec.values.minCoeff();
    RealVector w(spec.dim());
    for (Index i = 0; i < spec.dim(); ++i) w(i) = std::exp(-beta * (spec.values(i) - e0));
    return w / w.sum();
}

struct BohrSpectrum {
    RealVector frequencies;
    // pair_index(i, j) indexes the cluster of E_i - E_j.
    Eigen::MatrixXi pair_index;
    double tol = 0.0;

    Index size() const { return frequencies.size(); }
    double nu(Index i, Index j) const { return frequencies(pair_index(i, j)); }
};

inline double default_bohr_tol(const Spectrum& spec) {
    return 1e-9 * std::max(1.0, spec.values.cwiseAbs().maxCoeff());
}

// Single-linkage grouping of all differences E_i - E_j. Gaps larger than tol
// split clusters; the representative is the cluster midpoint, which keeps the
// set exactly symmetric under negation.
inline BohrSpectrum bohr_frequencies(const Spectrum& spec, double tol) {
    if (!(tol > 0.0)) throw InvalidArgument("Bohr grouping tolerance must be positive");
    const Index d = spec.dim();
    struct Diff {
        double value;
        Index i, j;
    };
    std::vector<Diff> diffs;
    diffs.reserve(static_cast<std::size_t>(d * d));
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) diffs.push_back({spec.values(i) - spec.values(j), i, j});
    }
    std::sort(diffs.begin(), diffs.end(), [](const Diff& a, const Diff& b) { return a.value < b.value; });

    BohrSpectrum out;
    out.tol = tol;
    out.pair_index.resize(d, d);
    std::vector<double> reps;
    std::size_t start = 0;
    for (std::size_t k = 1; k <= diffs.size(); ++k) {
        if (k == diffs.size() || diffs[k].value - diffs[k - 1].value > tol) {
            const double lo = diffs[start].value;
            const double hi = diffs[k - 1].value;
            const int idx = static_cast<int>(reps.size());
            reps.push_back(0.5 * (lo + hi));
            for (std::size_t q = start; q < k; ++q) out.pair_index(diffs[q].i, diffs[q].j) = idx;
            start = k;
        }
    }
    out.frequencies = Eigen::Map<RealVector>(reps.data(), static_cast<Index>(reps.size()));
    // Diagonal pairs are exactly zero; make the zero representative exact.
    const int zero_idx = out.pair_index(0, 0);
    out.frequencies(zero_idx) = 0.0;
    return out;
}

inline BohrSpectrum bohr_frequencies(const Spectrum& spec) {
    return bohr_frequencies(spec, default_bohr_tol(spec));
}

// Groups eigenvalues into degenerate blocks (consecutive gaps <= tol).
inline std::vector<std::vector<Index>> degenerate_blocks(const Spectrum& spec, double tol) {
    std::vector<std::vector<Index>> blocks;
    for (Index i = 0; i < spec.dim(); ++i) {
        if (blocks.empty() || spec.values(i) - spec.values(blocks.back().back()) > tol) {
            blocks.push_back({i});
        } else {
            blocks.back().push_back(i);
        }
    }
    return blocks;
}

inline RealVector energy_distribution(const Operator& state, const Spectrum& spec) {
    require_same_dim(state, spec.vectors, "energy_distribution");
    RealVector p(spec.dim());
    for (Index i = 0; i < spec.dim(); ++i) {
        p(i) = (spec.vectors.col(i).adjoint() * state * spec.vectors.col(i))(0, 0).real();
    }
    return p;
}

inline Index reverse_sites(Index s, int n) {
    Index r = 0;
    for (int i = 0; i < n; ++i) {
        if ((s >> i) & 1) r |= Index{1} << (n - 1 - i);
    }
    return r;
}

// Orthonormal basis (columns) of the reflection-even sector.
inline Operator even_sector_basis(int n) {
    if (n < 1) throw InvalidArgument("n must be >= 1");
    const Index d = Index{1} << n;
    std::vector<Eigen::VectorXcd> cols;
    for (Index s = 0; s < d; ++s) {
        const Index r = reverse_sites(s, n);
        if (r < s) continue;
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
        if (r == s) {
            v(s) = 1.0;
        } else {
            v(s) = v(r) = 1.0 / std::sqrt(2.0);
        }
        cols.push_back(v);
    }
    Operator B(d, static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) B.col(static_cast<Index>(c)) = cols[c];
    return B;
}

inline Operator parity_projector(int n) {
    if (n < 2) throw InvalidArgument("parity_projector needs n >= 2");
    const Operator B = even_sector_basis(n);
    return B * B.adjoint();
}

// Normalized complex standard Gaussian vector.
template <class Rng>
StateVector haar_random_state(Index d, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    StateVector v(d);
    for (Index i = 0; i < d; ++i) v(i) = cplx(normal(rng), normal(rng));
    return v / v.norm();
}

inline Operator maximally_mixed(Index d) {
    return identity(d) / static_cast<double>(d);
}

inline Operator projector(const StateVector& psi) { return psi * psi.adjoint(); }

}  // namespace gibbs
