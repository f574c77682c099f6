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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gibbs/jumps.hpp"
#include "gibbs/model.hpp"
#include "gibbs/numkernel.hpp"

namespace gibbs {

inline constexpr double kGoeMeanRatio = 0.5307;

// D_q = log_dim(sum p^q) / (1 - q); q = 1 is the normalized Shannon entropy.
inline double fractal_dimension(const StateVector& amplitudes, double q) {
    const double dim = static_cast<double>(amplitudes.size());
    if (dim < 2) return 0.0;
    const double norm2 = amplitudes.squaredNorm();
    if (std::abs(norm2 - 1.0) > 1e-10) throw InvalidArgument("amplitudes must be normalized");
    double value;
    if (std::abs(q - 1.0) < 1e-12) {
        double h = 0.0;
        for (Index i = 0; i < amplitudes.size(); ++i) {
            const double p = std::norm(amplitudes(i));
            if (p > 0.0) h -= p * std::log(p);
        }
        value = h / std::log(dim);
    } else {
        double s = 0.0;
        for (Index i = 0; i < amplitudes.size(); ++i) {
            const double p = std::norm(amplitudes(i));
            if (p > 0.0) s += std::pow(p, q);
        }
        value = std::log(s) / ((1.0 - q) * std::log(dim));
    }
    return std::clamp(value, 0.0, 1.0);
}

inline Operator single_qubit_eigenbasis(char letter) {
    const double r = 1.0 / std::sqrt(2.0);
    Operator u(2, 2);
    switch (letter) {
        case 'Z': u << 1, 0, 0, 1; break;
        case 'X': u << r, r, r, -r; break;
        case 'Y': u << r, r, kI * r, -kI * r; break;
        default: throw InvalidArgument(std::string("basis letter must be X, Y or Z, got ") + letter);
    }
    return u;
}

// Named presets ("z", "x", "y", "mixed", "random1".."random4") or an explicit
// n-letter string. The random presets are fixed-seed uniform X/Y/Z strings.
inline std::string basis_letters(const std::string& basis, int n) {
    std::string letters;
    if (basis.size() == 7 && basis.starts_with("random") && basis[6] >= '1' && basis[6] <= '4') {
        std::mt19937_64 rng(0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(basis[6] - '0'));
        std::uniform_int_distribution<int> pick(0, 2);
        static constexpr char xyz[3] = {'X', 'Y', 'Z'};
        for (int i = 0; i < n; ++i) letters.push_back(xyz[pick(rng)]);
    } else if (basis == "z" || basis == "x" || basis == "y") {
        letters.assign(static_cast<std::size_t>(n), static_cast<char>(std::toupper(basis[0])));
    } else if (basis == "mixed") {
        static constexpr char cycle[3] = {'X', 'Y', 'Z'};
        for (int i = 0; i < n; ++i) letters.push_back(cycle[i % 3]);
    } else {
        letters = basis;
        if (static_cast<int>(letters.size()) != n) throw InvalidArgument("basis string length must equal n");
    }
    return letters;
}

// Columns are the product eigenbasis vectors.
inline Operator product_basis(const std::string& letters) {
    Operator u = Operator::Identity(1, 1);
    for (char c : letters) u = kron(u, single_qubit_eigenbasis(c));
    return u;
}

enum class WindowMode { Energy, Index };

// Indices of eigenstates in the inner `fraction` of the spectrum.
inline std::vector<Index> spectrum_window(const Spectrum& spec, double fraction, WindowMode mode) {
    std::vector<Index> keep;
    const Index d = spec.dim();
    const double cut = 0.5 * (1.0 - fraction);
    if (mode == WindowMode::Energy) {
        const double lo = spec.values(0), hi = spec.values(d - 1);
        const double a = lo + cut * (hi - lo), b = hi - cut * (hi - lo);
        for (Index i = 0; i < d; ++i) {
            if (spec.values(i) >= a && spec.values(i) <= b) keep.push_back(i);
        }
    } else {
        const Index skip = static_cast<Index>(std::floor(cut * static_cast<double>(d)));
        for (Index i = skip; i < d - skip; ++i) keep.push_back(i);
    }
    return keep;
}

struct FractalStats {
    std::vector<double> per_state_D;
    double mean = 0.0;
    double variance = 0.0;
    double q = 1.0;
    std::string basis_label;
    WindowMode window = WindowMode::Energy;
};

inline FractalStats fractal_stats(const Spectrum& spec, const Operator& basis, double q, const std::string& label,
                                  double fraction = 0.8, WindowMode mode = WindowMode::Energy) {
    FractalStats out;
    out.q = q;
    out.basis_label = label;
    out.window = mode;
    const Operator amps = basis.adjoint() * spec.vectors;
    for (Index i : spectrum_window(spec, fraction, mode)) {
        StateVector v = amps.col(i);
        v /= v.norm();
        out.per_state_D.push_back(fractal_dimension(v, q));
    }
    const double n = static_cast<double>(out.per_state_D.size());
    for (double x : out.per_state_D) out.mean += x / n;
    for (double x : out.per_state_D) out.variance += (x - out.mean) * (x - out.mean) / n;
    return out;
}

struct FractalScanPoint {
    double h = 0.0;
    double m = 0.0;
    FractalStats stats;
};

inline std::vector<FractalScanPoint> fractal_scan(const std::vector<IsingParams>& grid, const std::string& basis,
                                                  double q = 1.0, double fraction = 0.8,
                                                  WindowMode mode = WindowMode::Energy) {
    std::vector<FractalScanPoint> out;
    out.reserve(grid.size());
    for (const auto& p : grid) {
        const std::string letters = basis_letters(basis, p.n);
        const Operator u = product_basis(letters);
        const Spectrum spec = eig_hermitian(build_hamiltonian(p));
        out.push_back({p.h, p.m, fractal_stats(spec, u, q, letters, fraction, mode)});
    }
    return out;
}

struct SpacingStats {
    std::vector<double> ratios;
    double mean_r = 0.0;
};

inline SpacingStats spacing_ratios(std::vector<double> levels, double scale = -1.0) {
    std::sort(levels.begin(), levels.end());
    if (levels.size() < 3) throw InvalidArgument("need at least 3 levels");
    if (scale <= 0.0) scale = std::max(std::abs(levels.front()), std::abs(levels.back()));
    std::vector<double> s;
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const double gap = levels[i] - levels[i - 1];
        if (gap < 1e-12 * scale) throw DegenerateSpectrum("level spacing below 1e-12 ||H||");
        s.push_back(gap);
    }
    SpacingStats out;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        out.ratios.push_back(std::min(s[i + 1] / s[i], s[i] / s[i + 1]));
    }
    for (double r : out.ratios) out.mean_r += r / static_cast<double>(out.ratios.size());
    return out;
}

// Ratios of the reflection-even sector of H.
inline SpacingStats spacing_ratios_even(const Operator& H) {
    const int n = log2_dim(H.rows());
    if (n < 4) throw InvalidArgument("spacing ratios need n >= 4");
    const Operator B = even_sector_basis(n);
    const RealVector ev = hermitian_eigenvalues(B.adjoint() * H * B);
    const double scale = hermitian_eigenvalues(H).cwiseAbs().maxCoeff();
    return spacing_ratios(std::vector<double>(ev.data(), ev.data() + ev.size()), scale);
}

struct EthBin {
    double center = 0.0;
    long count = 0;
    double mean = 0.0;      // diagonal: mean A_ii; off-diagonal: mean Re A_ij
    double mean_imag = 0.0; // off-diagonal only
    double std_error = 0.0; // of the real mean
    double std_error_imag = 0.0;
    double mean_abs2 = 0.0; // off-diagonal only
};

struct EthStatistics {
    std::vector<EthBin> diagonal;     // binned by E_i
    std::vector<EthBin> offdiagonal;  // binned by omega = E_i - E_j
};

inline EthStatistics eth_statistics(const Operator& a, const Spectrum& spec, int e_bins, int nu_bins) {
    if (e_bins < 1 || nu_bins < 1) throw InvalidArgument("bin counts must be positive");
    const Operator ae = to_eigenbasis(a, spec);
    const Index d = spec.dim();
    const double lo = spec.values(0), hi = spec.values(d - 1);
    const double span = std::max(hi - lo, 1e-300);
    EthStatistics out;
    out.diagonal.resize(static_cast<std::size_t>(e_bins));
    out.offdiagonal.resize(static_cast<std::size_t>(nu_bins));
    std::vector<double> s2(static_cast<std::size_t>(e_bins), 0.0);
    std::vector<double> r2(static_cast<std::size_t>(nu_bins), 0.0), i2(static_cast<std::size_t>(nu_bins), 0.0);
    auto bin_of = [](double x, double a0, double w, int nb) {
        int b = static_cast<int>(std::floor((x - a0) / w));
        return std::clamp(b, 0, nb - 1);
    };
    const double ew = span / e_bins;
    const double nw = 2.0 * span / nu_bins;
    for (int b = 0; b < e_bins; ++b) out.diagonal[static_cast<std::size_t>(b)].center = lo + (b + 0.5) * ew;
    for (int b = 0; b < nu_bins; ++b) out.offdiagonal[static_cast<std::size_t>(b)].center = -span + (b + 0.5) * nw;
    for (Index i = 0; i < d; ++i) {
        auto& bin = out.diagonal[static_cast<std::size_t>(bin_of(spec.values(i), lo, ew, e_bins))];
        const double x = ae(i, i).real();
        bin.count++;
        bin.mean += x;
        s2[static_cast<std::size_t>(&bin - out.diagonal.data())] += x * x;
        for (Index j = 0; j < d; ++j) {
            if (i == j) continue;
            const auto k = static_cast<std::size_t>(bin_of(spec.values(i) - spec.values(j), -span, nw, nu_bins));
            auto& ob = out.offdiagonal[k];
            ob.count++;
            ob.mean += ae(i, j).real();
            ob.mean_imag += ae(i, j).imag();
            ob.mean_abs2 += std::norm(ae(i, j));
            r2[k] += ae(i, j).real() * ae(i, j).real();
            i2[k] += ae(i, j).imag() * ae(i, j).imag();
        }
    }
    auto finish = [](EthBin& b, double sq_re, double sq_im) {
        if (b.count == 0) return;
        const double n = static_cast<double>(b.count);
        b.mean /= n;
        b.mean_imag /= n;
        b.mean_abs2 /= n;
        if (b.count > 1) {
            b.std_error = std::sqrt(std::max(0.0, sq_re / n - b.mean * b.mean) / (n - 1.0));
            b.std_error_imag = std::sqrt(std::max(0.0, sq_im / n - b.mean_imag * b.mean_imag) / (n - 1.0));
        }
    };
    for (int b = 0; b < e_bins; ++b) finish(out.diagonal[static_cast<std::size_t>(b)], s2[static_cast<std::size_t>(b)], 0.0);
    for (int b = 0; b < nu_bins; ++b) {
        finish(out.offdiagonal[static_cast<std::size_t>(b)], r2[static_cast<std::size_t>(b)], i2[static_cast<std::size_t>(b)]);
    }
    return out;
}

inline EthStatistics eth_statistics(const PauliString& a, const Spectrum& spec, int e_bins, int nu_bins) {
    return eth_statistics(a.realize(), spec, e_bins, nu_bins);
}

}  // namespace gibbs
