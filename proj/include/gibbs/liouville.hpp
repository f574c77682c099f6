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

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "gibbs/jumps.hpp"
#include "gibbs/model.hpp"
#include "gibbs/numkernel.hpp"

namespace gibbs {

// Generator rho -> -i[G, rho] + sum_a gamma_a (L rho L^dag - {L^dag L, rho}/2).
// Evaluated without assuming rho is Hermitian so that instabilities show up as
// anti-Hermitian drift.
class Lindbladian {
 public:
    Lindbladian() = default;

    Lindbladian(Operator coherent, std::vector<Operator> lindblads, std::vector<double> gammas)
        : coherent_(std::move(coherent)), L_(std::move(lindblads)), gammas_(std::move(gammas)) {
        if (L_.size() != gammas_.size()) throw DimensionMismatch("lindblads vs gammas");
        dim_ = coherent_.size() ? coherent_.rows() : (L_.empty() ? 0 : L_.front().rows());
        if (coherent_.size()) require_square(coherent_, "coherent term");
        for (const auto& l : L_) {
            if (l.rows() != dim_ || l.cols() != dim_) throw DimensionMismatch("Lindblad operator dim");
        }
        for (double g : gammas_) {
            if (!(g >= 0.0)) throw InvalidArgument("gammas must be nonnegative");
        }
        Operator K = Operator::Zero(dim_, dim_);
        Ldag_.reserve(L_.size());
        for (std::size_t a = 0; a < L_.size(); ++a) {
            Ldag_.push_back(L_[a].adjoint());
            K.noalias() += gammas_[a] * (Ldag_.back() * L_[a]);
        }
        heff_ = coherent_.size() ? Operator(coherent_ - 0.5 * kI * K) : Operator(-0.5 * kI * K);
        heff_dag_ = heff_.adjoint();
    }

    Index dim() const { return dim_; }
    const Operator& coherent() const { return coherent_; }
    const std::vector<Operator>& lindblads() const { return L_; }
    const std::vector<double>& gammas() const { return gammas_; }
    const Operator& effective_hamiltonian() const { return heff_; }

    Operator apply(const Operator& rho) const {
        Operator out = -kI * (heff_ * rho);
        out.noalias() += kI * (rho * heff_dag_);
        Operator tmp(dim_, dim_);
        for (std::size_t a = 0; a < L_.size(); ++a) {
            if (gammas_[a] == 0.0) continue;
            tmp.noalias() = L_[a] * rho;
            out.noalias() += gammas_[a] * (tmp * Ldag_[a]);
        }
        return out;
    }

    // Heisenberg-picture transition term sum_a gamma_a L^dag X L.
    Operator transition_adjoint(const Operator& x) const {
        Operator out = Operator::Zero(dim_, dim_);
        for (std::size_t a = 0; a < L_.size(); ++a) out.noalias() += gammas_[a] * (Ldag_[a] * x * L_[a]);
        return out;
    }

 private:
    Operator coherent_;
    std::vector<Operator> L_;
    std::vector<Operator> Ldag_;
    std::vector<double> gammas_;
    Operator heff_;
    Operator heff_dag_;
    Index dim_ = 0;
};

inline std::vector<double> uniform_gammas(std::size_t count, double gamma = 1.0) {
    return std::vector<double>(count, gamma / static_cast<double>(count));
}

// Column-stacking vectorization: vec(A X B) = (B^T (x) A) vec(X).
inline Eigen::VectorXcd vec(const Operator& a) {
    return Eigen::Map<const Eigen::VectorXcd>(a.data(), a.size());
}

inline Operator unvec(const Eigen::VectorXcd& v, Index d) {
    return Eigen::Map<const Operator>(v.data(), d, d);
}

struct Superoperator {
    Operator matrix;
    Index system_dim = 0;

    Operator apply(const Operator& rho) const {
        return unvec(matrix * vec(rho), system_dim);
    }
};

inline Superoperator build_superop(const Operator& H, const std::vector<Operator>& lindblads,
                                   const std::vector<double>& gammas, bool include_coherent) {
    require_square(H, "H");
    if (lindblads.size() != gammas.size()) throw DimensionMismatch("lindblads vs gammas");
    const Index d = H.rows();
    const Index d2 = d * d;
    Superoperator s;
    s.system_dim = d;
    s.matrix = Operator::Zero(d2, d2);
    Operator K = Operator::Zero(d, d);
    for (std::size_t a = 0; a < lindblads.size(); ++a) {
        const Operator& L = lindblads[a];
        if (L.rows() != d || L.cols() != d) throw DimensionMismatch("Lindblad operator dim");
        if (!(gammas[a] >= 0.0)) throw InvalidArgument("gammas must be nonnegative");
        const double g = gammas[a];
        if (g == 0.0) continue;
        K.noalias() += g * (L.adjoint() * L);
        const Operator Lc = L.conjugate();
        // conj(L) (x) L, block (i, j) = conj(L_ij) * L
        for (Index j = 0; j < d; ++j) {
            for (Index i = 0; i < d; ++i) {
                const cplx c = g * Lc(i, j);
                if (c == cplx(0.0)) continue;
                s.matrix.block(i * d, j * d, d, d) += c * L;
            }
        }
    }
    Operator heff = -0.5 * kI * K;
    if (include_coherent) heff += H;
    // -i (I (x) heff) + i (heff^dag^T (x) I) = -i (I (x) heff) + i (conj(heff) (x) I)
    const Operator heff_c = heff.conjugate();
    for (Index b = 0; b < d; ++b) s.matrix.block(b * d, b * d, d, d) += -kI * heff;
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            const cplx c = kI * heff_c(i, j);
            if (c == cplx(0.0)) continue;
            for (Index k = 0; k < d; ++k) s.matrix(i * d + k, j * d + k) += c;
        }
    }
    return s;
}

inline Superoperator build_superop(const Operator& H, const std::vector<LindbladOperator>& lindblads,
                                   const std::vector<double>& gammas, bool include_coherent) {
    return build_superop(H, matrices_of(lindblads), gammas, include_coherent);
}

// General complex eigenvalues (LAPACK zgeev, no eigenvectors).
inline Eigen::VectorXcd general_eigenvalues(const Operator& m) {
    require_square(m, "general_eigenvalues input");
    const Index n = m.rows();
    Operator work = m;
    Eigen::VectorXcd w(n);
    const lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'N', static_cast<lapack_int>(n),
        reinterpret_cast<lapack_complex_double*>(work.data()), static_cast<lapack_int>(n),
        reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, nullptr, 1);
    if (info != 0) throw EigensolverFailure("zgeev info=" + std::to_string(info));
    return w;
}

struct GapResult {
    double gap = 0.0;
    int zero_count = 0;
    Operator steady_state;
    Eigen::VectorXcd eigenvalues;
    double zero_tol = 0.0;
    // Largest real part outside the zero cluster (should be negative).
    double max_nonzero_real = -std::numeric_limits<double>::infinity();
    // Smallest eigenvalue of the Hermitized steady state before clipping.
    double min_steady_eigenvalue = 0.0;
};

// Solves S vec(rho) = 0 with the first diagonal equation replaced by Tr rho = 1.
inline Operator steady_state_solve(const Superoperator& s) {
    const Index d = s.system_dim;
    Operator m = s.matrix;
    m.row(0).setZero();
    for (Index i = 0; i < d; ++i) m(0, i * d + i) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(d * d);
    rhs(0) = 1.0;
    const Eigen::VectorXcd x = m.partialPivLu().solve(rhs);
    return normalize_state(unvec(x, d));
}

inline constexpr int kDefaultGapCeilingQubits = 6;

// Zero cluster: |lambda| below 1e-9 times the spectral radius. The gap is the
// smallest |Re lambda| outside that cluster.
inline GapResult steady_state_and_gap(const Superoperator& s, bool allow_large = false,
                                      double zero_rel_tol = 1e-9) {
    const int n = log2_dim(s.system_dim);
    if (n > kDefaultGapCeilingQubits && !allow_large) {
        throw ResourceCeiling("gap computation at n=" + std::to_string(n) + " needs explicit opt-in");
    }
    GapResult r;
    r.eigenvalues = general_eigenvalues(s.matrix);
    double radius = 0.0;
    for (Index i = 0; i < r.eigenvalues.size(); ++i) radius = std::max(radius, std::abs(r.eigenvalues(i)));
    r.zero_tol = zero_rel_tol * std::max(radius, std::numeric_limits<double>::min());
    r.gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < r.eigenvalues.size(); ++i) {
        const cplx l = r.eigenvalues(i);
        if (std::abs(l) < r.zero_tol) {
            ++r.zero_count;
        } else {
            r.gap = std::min(r.gap, std::abs(l.real()));
            r.max_nonzero_real = std::max(r.max_nonzero_real, l.real());
        }
    }
    if (r.zero_count > 1) {
        throw NonUniqueSteadyState(std::to_string(r.zero_count) + " eigenvalues in the zero cluster");
    }
    if (r.zero_count == 0) throw EigensolverFailure("no eigenvalue in the zero cluster");
    Operator rho = steady_state_solve(s);
    Eigen::SelfAdjointEigenSolver<Operator> es(rho);
    r.min_steady_eigenvalue = es.eigenvalues().minCoeff();
    r.steady_state = rho;
    return r;
}

// Exactly detailed-balanced coherent term, assembled in the eigenbasis:
// G_ij = (i/2) tanh(beta (E_i - E_j)/4) sum_a gamma_a (L_a^dag L_a)_ij.
inline Operator ckg_coherent_term(const std::vector<Operator>& jumps, const std::vector<double>& gammas,
                                  const Spectrum& spec, const FilterSpec& f, const BohrSpectrum& bohr) {
    if (jumps.size() != gammas.size()) throw DimensionMismatch("jumps vs gammas");
    const Index d = spec.dim();
    Operator M = Operator::Zero(d, d);
    for (std::size_t a = 0; a < jumps.size(); ++a) {
        const Operator l = lindblad_eigenbasis(to_eigenbasis(jumps[a], spec), spec, f, bohr);
        M.noalias() += gammas[a] * (l.adjoint() * l);
    }
    Operator G(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) {
            G(i, j) = 0.5 * kI * std::tanh(f.beta * bohr.nu(i, j) / 4.0) * M(i, j);
        }
    }
    return hermitize(from_eigenbasis(G, spec));
}

inline Operator ckg_coherent_term(const std::vector<PauliString>& set, const std::vector<double>& gammas,
                                  const Spectrum& spec, const FilterSpec& f, const BohrSpectrum& bohr) {
    return ckg_coherent_term(realize_all(set), gammas, spec, f, bohr);
}

// <X, Y>_sigma = Tr[X^dag s Y s] with s = sigma^{1/2}.
inline cplx kms_inner(const Operator& x, const Operator& y, const Operator& sqrt_sigma) {
    return (x.adjoint() * sqrt_sigma * y * sqrt_sigma).trace();
}

struct DbResiduals {
    double action_on_gibbs = 0.0;
    double transition_term = 0.0;
};

template <class Rng>
Operator random_hermitian(Index d, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Operator a(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < d; ++i) a(i, j) = cplx(normal(rng), normal(rng));
    }
    Operator h = hermitize(a);
    return h / h.norm();
}

inline DbResiduals db_residuals(const Lindbladian& lind, const Operator& sigma, std::uint64_t seed = 12345,
                                int pairs = 10) {
    require_same_dim(sigma, Operator(lind.dim(), lind.dim()), "db_residuals");
    Eigen::SelfAdjointEigenSolver<Operator> es(hermitize(sigma));
    if (es.eigenvalues().minCoeff() < 1e-14) throw SingularGibbs("sigma has eigenvalue below 1e-14");
    const Operator sq = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cast<cplx>().asDiagonal() *
                        es.eigenvectors().adjoint();
    DbResiduals r;
    r.action_on_gibbs = trace_norm_hermitian(lind.apply(sigma));
    std::mt19937_64 rng(seed);
    for (int p = 0; p < pairs; ++p) {
        const Operator x = random_hermitian(lind.dim(), rng);
        const Operator y = random_hermitian(lind.dim(), rng);
        const cplx lhs = kms_inner(x, lind.transition_adjoint(y), sq);
        const cplx rhs = kms_inner(lind.transition_adjoint(x), y, sq);
        r.transition_term = std::max(r.transition_term, std::abs(lhs - rhs));
    }
    return r;
}

inline DbResiduals db_residuals(const Operator& G, const std::vector<Operator>& lindblads,
                                const std::vector<double>& gammas, const Operator& sigma,
                                std::uint64_t seed = 12345) {
    return db_residuals(Lindbladian(G, lindblads, gammas), sigma, seed);
}

struct MarkovRestriction {
    Eigen::MatrixXd q;
    Eigen::MatrixXd P;
    double r = 0.0;
    // Gibbs weight of each block.
    RealVector pi;
    std::vector<std::vector<Index>> blocks;
    // Block energies (mean of the grouped levels).
    RealVector energies;

    double detailed_balance_residual() const {
        double res = 0.0;
        for (Index i = 0; i < P.rows(); ++i) {
            for (Index j = 0; j < P.cols(); ++j) res = std::max(res, std::abs(pi(i) * P(i, j) - pi(j) * P(j, i)));
        }
        return res;
    }
};

// Rates between eigenspace projector blocks: q_IJ = Tr[Pi_J L[Pi_I]] / dim(I).
inline MarkovRestriction markov_restriction(const Superoperator& s, const Spectrum& spec, const Operator& sigma,
                                            double block_tol = -1.0) {
    if (s.system_dim != spec.dim()) throw DimensionMismatch("markov_restriction");
    if (block_tol <= 0.0) block_tol = default_bohr_tol(spec);
    MarkovRestriction mc;
    mc.blocks = degenerate_blocks(spec, block_tol);
    const Index nb = static_cast<Index>(mc.blocks.size());
    mc.q = Eigen::MatrixXd::Zero(nb, nb);
    mc.pi = RealVector::Zero(nb);
    mc.energies = RealVector::Zero(nb);
    const RealVector sig_diag = energy_distribution(sigma, spec);
    for (Index I = 0; I < nb; ++I) {
        const auto& bi = mc.blocks[static_cast<std::size_t>(I)];
        Operator proj = Operator::Zero(spec.dim(), spec.dim());
        for (Index k : bi) {
            proj.noalias() += spec.vectors.col(k) * spec.vectors.col(k).adjoint();
            mc.pi(I) += sig_diag(k);
            mc.energies(I) += spec.values(k) / static_cast<double>(bi.size());
        }
        const Operator out = to_eigenbasis(s.apply(proj), spec);
        for (Index J = 0; J < nb; ++J) {
            double acc = 0.0;
            for (Index k : mc.blocks[static_cast<std::size_t>(J)]) acc += out(k, k).real();
            mc.q(I, J) = acc / static_cast<double>(bi.size());
        }
    }
    double r = 0.0;
    for (Index I = 0; I < nb; ++I) {
        double off = 0.0;
        for (Index J = 0; J < nb; ++J) {
            if (J != I) off += mc.q(I, J);
        }
        r = std::max(r, off);
    }
    const double scale = std::max(1.0, mc.q.cwiseAbs().maxCoeff());
    if (!(r > 1e-14 * scale) || mc.q.cwiseAbs().maxCoeff() < 1e-14) {
        throw DegenerateChain("no transitions between eigenspaces");
    }
    mc.r = r;
    mc.P = (mc.q + r * Eigen::MatrixXd::Identity(nb, nb)) / r;
    // Rows of q sum to zero up to roundoff; fold the residue into the diagonal.
    for (Index I = 0; I < nb; ++I) mc.P(I, I) += 1.0 - mc.P.row(I).sum();
    mc.pi /= mc.pi.sum();
    return mc;
}

struct CheegerResult {
    double phi = 0.0;
    double gap_P = 0.0;
    bool sandwich_ok = false;
    bool exhaustive = false;
    RealVector stationary;
    // max |pi_i P_ij - pi_j P_ji| with the chain's own stationary vector
    double nonreversibility = 0.0;
};

inline RealVector stationary_distribution(const Eigen::MatrixXd& P) {
    const Index n = P.rows();
    Eigen::MatrixXd m = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    m.row(0).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(0) = 1.0;
    Eigen::VectorXd pi = m.fullPivLu().solve(rhs);
    if (!pi.allFinite()) throw DegenerateChain("stationary distribution not unique");
    return pi;
}

// Conductance over subsets with pi_S <= 1/2 and the spectral gap of the additive
// reversibilization, both with respect to the chain's stationary vector.
inline CheegerResult conductance_cheeger(const MarkovRestriction& mc, Index exhaustive_limit = 16) {
    const Eigen::MatrixXd& P = mc.P;
    const Index n = P.rows();
    if (n < 2) throw DegenerateChain("chain has a single state");
    CheegerResult out;
    RealVector pi = stationary_distribution(P);
    if (pi.minCoeff() <= 0.0) throw DegenerateChain("stationary vector not strictly positive");
    out.stationary = pi;
    Eigen::MatrixXd Prev(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            Prev(i, j) = 0.5 * (P(i, j) + pi(j) * P(j, i) / pi(i));
            out.nonreversibility = std::max(out.nonreversibility, std::abs(pi(i) * P(i, j) - pi(j) * P(j, i)));
        }
    }
    const RealVector sq = pi.cwiseSqrt();
    Eigen::MatrixXd Ssym(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) Ssym(i, j) = sq(i) * Prev(i, j) / sq(j);
    }
    Ssym = 0.5 * (Ssym + Ssym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ssym, Eigen::EigenvaluesOnly);
    out.gap_P = 1.0 - es.eigenvalues()(n - 2);

    auto flow_ratio = [&](const std::vector<char>& in) {
        double mass = 0.0, flow = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (!in[static_cast<std::size_t>(i)]) continue;
            mass += pi(i);
            for (Index j = 0; j < n; ++j) {
                if (!in[static_cast<std::size_t>(j)]) flow += pi(i) * Prev(i, j);
            }
        }
        return std::pair<double, double>{mass, flow};
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    if (n <= exhaustive_limit) {
        out.exhaustive = true;
        const std::uint64_t total = std::uint64_t{1} << n;
        for (std::uint64_t mask = 1; mask + 1 < total; ++mask) {
            for (Index i = 0; i < n; ++i) in[static_cast<std::size_t>(i)] = (mask >> i) & 1;
            const auto [mass, flow] = flow_ratio(in);
            if (mass <= 0.5) best = std::min(best, flow / mass);
        }
    } else {
        // Blocks are energy ordered; scan contiguous windows.
        for (Index a = 0; a < n; ++a) {
            for (Index b = a; b < n; ++b) {
                if (a == 0 && b == n - 1) continue;
                std::fill(in.begin(), in.end(), 0);
                for (Index i = a; i <= b; ++i) in[static_cast<std::size_t>(i)] = 1;
                const auto [mass, flow] = flow_ratio(in);
                if (mass <= 0.5) best = std::min(best, flow / mass);
            }
        }
    }
    out.phi = best;
    const double slack = 1e-12;
    out.sandwich_ok = out.phi * out.phi / 2.0 <= out.gap_P * (1.0 + slack) + slack &&
                      out.gap_P <= 2.0 * out.phi * (1.0 + slack) + slack;
    return out;
}

}  // namespace gibbs
