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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "gibbs/errors.hpp"

namespace gibbs {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr cplx kI{0.0, 1.0};

// Eigendecomposition of a Hermitian operator: ascending values, unitary columns.
struct Spectrum {
    RealVector values;
    Operator vectors;

    Index dim() const { return values.size(); }
};

inline bool is_power_of_two(Index d) { return d > 0 && (d & (d - 1)) == 0; }

inline int log2_dim(Index d) {
    int n = 0;
    while ((Index{1} << n) < d) ++n;
    return n;
}

inline double max_abs(const Operator& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline double hermiticity_residual(const Operator& a) {
    return max_abs(a - a.adjoint());
}

inline bool all_finite(const Operator& a) { return a.allFinite(); }

inline void require_square(const Operator& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatch(std::string(what) + " is not square");
    }
}

inline void require_same_dim(const Operator& a, const Operator& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
    }
}

inline Operator hermitize(const Operator& a) { return 0.5 * (a + a.adjoint()); }

inline Operator identity(Index d) { return Operator::Identity(d, d); }

// The tolerance scales with the largest entry so large-norm Hamiltonians built
// from exact Pauli sums are not rejected for roundoff.
inline Spectrum eig_hermitian(const Operator& a, double herm_tol = 1e-10) {
    require_square(a, "eig_hermitian input");
    const double scale = std::max(1.0, max_abs(a));
    const double res = hermiticity_residual(a);
    if (!(res <= herm_tol * scale)) {
        throw NotHermitian("max|a - a^dagger| = " + std::to_string(res));
    }
    Eigen::SelfAdjointEigenSolver<Operator> solver(hermitize(a));
    if (solver.info() != Eigen::Success) {
        throw EigensolverFailure("self-adjoint eigensolver did not converge");
    }
    Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
    const Operator rebuilt = s.vectors * s.values.cast<cplx>().asDiagonal() * s.vectors.adjoint();
    const double recon = max_abs(rebuilt - a);
    if (recon > 1e-8 * scale) {
        throw EigensolverFailure("reconstruction residual " + std::to_string(recon));
    }
    return s;
}

// V diag(exp(-i theta values)) V^dagger
inline Operator expm_phase(const Spectrum& s, double theta) {
    Eigen::VectorXcd phases(s.dim());
    for (Index i = 0; i < s.dim(); ++i) phases(i) = std::exp(-kI * theta * s.values(i));
    return s.vectors * phases.asDiagonal() * s.vectors.adjoint();
}

// Applies f elementwise to the spectrum: V diag(f(values)) V^dagger.
template <class F>
Operator spectral_function(const Spectrum& s, F&& f) {
    Eigen::VectorXcd d(s.dim());
    for (Index i = 0; i < s.dim(); ++i) d(i) = f(s.values(i));
    return s.vectors * d.asDiagonal() * s.vectors.adjoint();
}

inline RealVector hermitian_eigenvalues(const Operator& a) {
    Eigen::SelfAdjointEigenSolver<Operator> solver(hermitize(a), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw EigensolverFailure("self-adjoint eigensolver did not converge");
    }
    return solver.eigenvalues();
}

// Schatten-1 norm of the Hermitian part of a.
inline double trace_norm_hermitian(const Operator& a) {
    return hermitian_eigenvalues(a).cwiseAbs().sum();
}

inline double trace_distance(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "trace_distance");
    return 0.5 * trace_norm_hermitian(a - b);
}

// Ancilla is the most significant tensor factor: a = sum_{xy} |x><y| (x) a_xy.
inline Operator partial_trace_ancilla(const Operator& a) {
    require_square(a, "partial_trace_ancilla input");
    if (a.rows() % 2 != 0) throw DimensionMismatch("partial_trace_ancilla needs even dimension");
    const Index d = a.rows() / 2;
    return a.topLeftCorner(d, d) + a.bottomRightCorner(d, d);
}

inline Operator kron(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline Operator pauli(char letter) {
    Operator p(2, 2);
    switch (letter) {
        case 'I': p << 1, 0, 0, 1; break;
        case 'X': p << 0, 1, 1, 0; break;
        case 'Y': p << 0, -kI, kI, 0; break;
        case 'Z': p << 1, 0, 0, -1; break;
        default: throw InvalidArgument(std::string("unknown Pauli letter ") + letter);
    }
    return p;
}

inline Operator ket_bra(Index d, Index i, Index j) {
    Operator o = Operator::Zero(d, d);
    o(i, j) = 1.0;
    return o;
}

inline cplx trace(const Operator& a) { return a.trace(); }

// Projects onto Hermitian, unit-trace matrices (no positivity repair).
inline Operator normalize_state(const Operator& rho) {
    Operator h = hermitize(rho);
    return h / h.trace().real();
}

}  // namespace gibbs
