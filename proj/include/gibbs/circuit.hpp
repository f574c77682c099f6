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
#include <random>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gibbs/dynamics.hpp"
#include "gibbs/jumps.hpp"
#include "gibbs/liouville.hpp"
#include "gibbs/model.hpp"
#include "gibbs/numkernel.hpp"

namespace gibbs {

enum class CoherentMode { Exact, Trotter2 };

struct CircuitConfig {
    double dt_ev = 0.05;
    double dt_oft = 0.05;
    double T = 1.6;
    double gamma = 1.0;
    double t_max = 500.0;
    int jump_count = 10;
    int k = 2;
    std::uint64_t seed = 1;
    CoherentMode coherent_mode = CoherentMode::Exact;
    int r_delta = 1;
    int r_Delta = 1;
    int repetitions = 10;
    // Record every `stride` steps; 0 picks ceil(M / 2000).
    long stride = 0;
    // Fraction of the final steps averaged into the plateau state.
    double plateau_fraction = 0.2;
    int threads = 1;

    void validate() const {
        if (!(dt_ev > 0.0) || !(dt_oft > 0.0) || !(T > 0.0)) throw InvalidArgument("dt_ev, dt_oft, T must be positive");
        if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be nonnegative");
        if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
        if (r_delta < 1 || r_Delta < 1) throw InvalidArgument("Trotter step counts must be >= 1");
        if (!(plateau_fraction > 0.0 && plateau_fraction <= 1.0)) throw InvalidArgument("plateau_fraction in (0,1]");
        oft_steps(T, dt_oft);
    }

    int S() const { return oft_steps(T, dt_oft); }
    double oft_spacing() const { return T / S(); }
    long evolution_steps() const { return std::max(1L, static_cast<long>(std::ceil(t_max / dt_ev - 1e-9))); }
};

// Two-qubit-gate count per evolution step: measured lookup, else c * n * (J dt).
struct GateModel {
    std::vector<std::pair<double, int>> lookup{{1.0, 308}, {3.0, 484}, {5.0, 644}};
    double coefficient = 50.0;

    double gates(double dt_ev, int n) const {
        for (const auto& [dt, count] : lookup) {
            if (std::abs(dt - dt_ev) < 1e-9) return static_cast<double>(count);
        }
        return coefficient * n * dt_ev;
    }
};

struct NoiseSpec {
    enum class Kind { None, GlobalStochastic, DepolarizingBudget };
    Kind kind = Kind::None;
    // GlobalStochastic: weights and unitaries; empty mixture means global depolarizing.
    double lambda = 0.0;
    std::vector<std::pair<double, Operator>> mixture;
    // DepolarizingBudget
    double lambda_g = 0.0;
    GateModel gate_model;

    static NoiseSpec none() { return {}; }
    static NoiseSpec global_depolarizing(double lambda) {
        NoiseSpec s;
        s.kind = Kind::GlobalStochastic;
        s.lambda = lambda;
        return s;
    }
    static NoiseSpec budget(double lambda_g, GateModel model = {}) {
        NoiseSpec s;
        s.kind = Kind::DepolarizingBudget;
        s.lambda_g = lambda_g;
        s.gate_model = std::move(model);
        return s;
    }

    void validate() const {
        if (lambda < 0.0 || lambda > 1.0 || lambda_g < 0.0 || lambda_g > 1.0) {
            throw InvalidArgument("noise probabilities must lie in [0, 1]");
        }
        double total = 0.0;
        for (const auto& [w, u] : mixture) {
            if (w < 0.0) throw InvalidArgument("negative mixture weight");
            total += w;
        }
        if (!mixture.empty() && std::abs(total - lambda) > 1e-12) {
            throw InvalidArgument("mixture weights must sum to lambda");
        }
    }
};

// K = |1><0| (x) L + |0><1| (x) L^dag with the ancilla as the leading factor.
inline Operator dilation_discrete(const Operator& lbar) {
    require_square(lbar, "dilation input");
    const Index d = lbar.rows();
    Operator k = Operator::Zero(2 * d, 2 * d);
    k.bottomLeftCorner(d, d) = lbar;
    k.topRightCorner(d, d) = lbar.adjoint();
    return k;
}

inline Operator dilation_discrete(const LindbladOperator& lbar) { return dilation_discrete(lbar.matrix); }

// exp(-i theta A) for Hermitian A; closed form when A^2 = I.
inline Operator hermitian_phase(const Operator& a, double theta) {
    const Index d = a.rows();
    if (max_abs(a * a - identity(d)) < 1e-12) {
        return std::cos(theta) * identity(d) - kI * std::sin(theta) * a;
    }
    return expm_phase(eig_hermitian(a), theta);
}

// exp[-i (sqrt(dt gamma)/2) w (Re g X + Im g Y) (x) A]. The ancilla factor n.sigma
// squares to one, so the gate is P+ (x) e^{-i th A} + P- (x) e^{+i th A}.
inline Operator b_gate(const Operator& a, cplx g_s, double weight, double dt_ev, double gamma) {
    const Index d = a.rows();
    const double mag = std::abs(g_s);
    if (mag == 0.0 || weight == 0.0 || gamma * dt_ev == 0.0) return identity(2 * d);
    const double theta = 0.5 * std::sqrt(dt_ev * gamma) * weight * mag;
    const cplx c = g_s / mag;
    Operator nsig(2, 2);
    nsig << 0.0, c.real() - kI * c.imag(), c.real() + kI * c.imag(), 0.0;
    const Operator p_plus = 0.5 * (identity(2) + nsig);
    const Operator p_minus = 0.5 * (identity(2) - nsig);
    return kron(p_plus, hermitian_phase(a, theta)) + kron(p_minus, hermitian_phase(a, -theta));
}

inline Operator b_gate(const PauliString& a, cplx g_s, double weight, double dt_ev, double gamma) {
    return b_gate(a.realize(), g_s, weight, dt_ev, gamma);
}

// Coherent propagators e^{-iH tau}, exact or second-order Trotter with the
// diagonal/off-diagonal split.
class CoherentEvolution {
 public:
    CoherentEvolution(const Operator& H, CoherentMode mode)
        : spec_(eig_hermitian(H)), mode_(mode) {
        if (mode_ == CoherentMode::Trotter2) {
            const HamiltonianSplit split = split_hamiltonian(H);
            diag_ = split.diagonal.diagonal().real();
            off_spec_ = eig_hermitian(split.offdiagonal);
        }
    }

    const Spectrum& spectrum() const { return spec_; }

    Operator propagator(double tau, int r = 1) const {
        if (mode_ == CoherentMode::Exact) return expm_phase(spec_, tau);
        const double h = tau / r;
        Eigen::VectorXcd half(diag_.size());
        for (Index i = 0; i < diag_.size(); ++i) half(i) = std::exp(-kI * 0.5 * h * diag_(i));
        const Operator stepop = half.asDiagonal() * expm_phase(off_spec_, h) * half.asDiagonal();
        Operator out = identity(diag_.size());
        for (int q = 0; q < r; ++q) out = stepop * out;
        return out;
    }

 private:
    Spectrum spec_;
    CoherentMode mode_;
    RealVector diag_;
    Spectrum off_spec_;
};

// Applies I (x) u to a 2D x 2D operator from the left.
inline Operator left_system(const Operator& u, const Operator& m) {
    const Index d = u.rows();
    Operator out(m.rows(), m.cols());
    out.topRows(d).noalias() = u * m.topRows(d);
    out.bottomRows(d).noalias() = u * m.bottomRows(d);
    return out;
}

// Precomputed data shared by every step of a protocol run.
struct ProtocolContext {
    Operator H;
    Spectrum spec;
    FilterSpec filter;
    CircuitConfig cfg;
    int S = 1;
    double dt_oft = 0.0;
    Operator w_plus;   // e^{+iH dt_oft}
    Operator w_minus;  // e^{-iH dt_oft}
    Operator u_dt;     // e^{-iH dt_ev}
    std::vector<cplx> g;
    std::vector<double> w;

    ProtocolContext(const Operator& h, const FilterSpec& f, const CircuitConfig& c)
        : H(h), filter(f), cfg(c) {
        cfg.validate();
        const CoherentEvolution evo(H, cfg.coherent_mode);
        spec = evo.spectrum();
        S = cfg.S();
        dt_oft = cfg.T / S;
        w_minus = evo.propagator(dt_oft, cfg.r_Delta);
        w_plus = w_minus.adjoint();
        u_dt = evo.propagator(cfg.dt_ev, cfg.r_delta);
        for (int s = -S; s <= S; ++s) {
            g.push_back(filter_time(filter, s * dt_oft));
            w.push_back(trapezoid_weight(s, S, dt_oft));
        }
    }
};

// V = (prod_{s=-S..S} B_s (I (x) e^{iH dt})) (prod_{s=S..-S} (I (x) e^{-iH dt}) B_s)
// read left to right; equals e^{iHS dt} e^{-i sqrt(dt_ev gamma) K} e^{-iHS dt} up to
// second-order product-formula error.
inline Operator step_V(const Operator& a, const ProtocolContext& ctx) {
    const int S = ctx.S;
    std::vector<Operator> B;
    B.reserve(static_cast<std::size_t>(2 * S + 1));
    for (int s = -S; s <= S; ++s) {
        const auto idx = static_cast<std::size_t>(s + S);
        B.push_back(b_gate(a, ctx.g[idx], ctx.w[idx], ctx.cfg.dt_ev, ctx.cfg.gamma));
    }
    // Right factor, built from its rightmost term: B_{-S}, then e^{-iH dt} B_{-S+1} ...
    Operator right = B.front();
    for (int s = -S + 1; s <= S; ++s) {
        right = B[static_cast<std::size_t>(s + S)] * left_system(ctx.w_minus, right);
    }
    // Left factor is the mirror image with e^{+iH dt}; the trailing e^{+iH dt}
    // cancels against the leading e^{-iH dt} of the right factor.
    Operator left = B.back();
    for (int s = S - 1; s >= -S; --s) {
        left = B[static_cast<std::size_t>(s + S)] * left_system(ctx.w_plus, left);
    }
    return left * right;
}

inline Operator step_V(const PauliString& a, const ProtocolContext& ctx) { return step_V(a.realize(), ctx); }

// Kraus pair of rho -> Tr_anc[V (|0><0| (x) U rho U^dag) V^dag].
struct StepKraus {
    Operator k0;
    Operator k1;

    Operator apply(const Operator& rho) const {
        return k0 * rho * k0.adjoint() + k1 * rho * k1.adjoint();
    }
};

inline StepKraus step_kraus(const Operator& v, const Operator& u_dt) {
    const Index d = u_dt.rows();
    return {v.topLeftCorner(d, d) * u_dt, v.bottomLeftCorner(d, d) * u_dt};
}

inline Operator step_Wtilde(const Operator& rho, const Operator& a, const ProtocolContext& ctx) {
    return step_kraus(step_V(a, ctx), ctx.u_dt).apply(rho);
}

// Ideal dilation channel Tr_anc[e^{-i sqrt(dt gamma) K} (|0><0| (x) rho) e^{+i ...}].
inline Operator dilation_channel(const Operator& rho, const Operator& k, double dt_ev, double gamma) {
    const Index d = rho.rows();
    const Operator u = expm_phase(eig_hermitian(k), std::sqrt(dt_ev * gamma));
    const Operator a0 = u.topLeftCorner(d, d);
    const Operator a1 = u.bottomLeftCorner(d, d);
    return a0 * rho * a0.adjoint() + a1 * rho * a1.adjoint();
}

// Exact e^{dt L} on density matrices as a superoperator matrix.
inline Superoperator exact_channel(const Superoperator& gen, double dt) {
    Superoperator out;
    out.system_dim = gen.system_dim;
    out.matrix = Operator(dt * gen.matrix).exp();
    return out;
}

// rho -> (1 - lam) rho + lam Tr_{pair}[rho] (x) I/4 on sites (i, i+1).
inline Operator depolarize_pair(const Operator& rho, int site, int n, double lam) {
    if (lam == 0.0) return rho;
    const Index d = rho.rows();
    const int shift = n - 2 - site;  // bit offset of the pair's low qubit
    const Index mask = Index{3} << shift;
    Operator out = (1.0 - lam) * rho;
    for (Index x = 0; x < d; ++x) {
        if (x & mask) continue;
        for (Index y = 0; y < d; ++y) {
            if (y & mask) continue;
            cplx acc = 0.0;
            for (Index p = 0; p < 4; ++p) acc += rho(x | (p << shift), y | (p << shift));
            acc *= lam / 4.0;
            for (Index p = 0; p < 4; ++p) out(x | (p << shift), y | (p << shift)) += acc;
        }
    }
    return out;
}

inline Operator apply_noise(const Operator& rho, const NoiseSpec& spec, std::mt19937_64& rng, int n, double dt_ev) {
    switch (spec.kind) {
        case NoiseSpec::Kind::None:
            return rho;
        case NoiseSpec::Kind::GlobalStochastic: {
            if (spec.mixture.empty()) {
                return (1.0 - spec.lambda) * rho +
                       spec.lambda * rho.trace() * identity(rho.rows()) / static_cast<double>(rho.rows());
            }
            Operator out = (1.0 - spec.lambda) * rho;
            for (const auto& [w, u] : spec.mixture) out += w * u * rho * u.adjoint();
            return out;
        }
        case NoiseSpec::Kind::DepolarizingBudget: {
            if (n < 2) throw InvalidArgument("two-qubit depolarizing needs n >= 2");
            const long events = std::lround(spec.gate_model.gates(dt_ev, n));
            std::vector<long> counts(static_cast<std::size_t>(n - 1), 0);
            std::uniform_int_distribution<int> pair(0, n - 2);
            for (long e = 0; e < events; ++e) ++counts[static_cast<std::size_t>(pair(rng))];
            Operator out = rho;
            for (int i = 0; i < n - 1; ++i) {
                const long c = counts[static_cast<std::size_t>(i)];
                if (c == 0) continue;
                const double lam = 1.0 - std::pow(1.0 - spec.lambda_g, static_cast<double>(c));
                out = depolarize_pair(out, i, n, lam);
            }
            return out;
        }
    }
    return rho;
}

// Per-step probability that no noise event occurs.
inline double noise_survival(const NoiseSpec& spec, int n, double dt_ev) {
    switch (spec.kind) {
        case NoiseSpec::Kind::None: return 1.0;
        case NoiseSpec::Kind::GlobalStochastic: return 1.0 - spec.lambda;
        case NoiseSpec::Kind::DepolarizingBudget:
            return std::pow(1.0 - spec.lambda_g, static_cast<double>(std::lround(spec.gate_model.gates(dt_ev, n))));
    }
    return 1.0;
}

struct CircuitResult {
    EvolutionRecord record;
    // Repetition-averaged state after the last step.
    Operator final_state;
    // Repetition-averaged state, also averaged over the final plateau window.
    Operator plateau_state;
    double plateau_distance = 0.0;
};

// Protocol loop: per step, sample a jump uniformly, apply the dilated step, then
// the noise channel. Repetitions differ in their sampling streams.
inline CircuitResult simulate_protocol(const Operator& H, const std::vector<PauliString>& jumps, const FilterSpec& f,
                                       const CircuitConfig& cfg, const NoiseSpec& noise, const Operator& rho0,
                                       const Operator& target) {
    noise.validate();
    if (jumps.empty()) throw InvalidArgument("empty jump set");
    const ProtocolContext ctx(H, f, cfg);
    const int n = log2_dim(H.rows());
    std::vector<StepKraus> kraus;
    kraus.reserve(jumps.size());
    for (const auto& a : jumps) kraus.push_back(step_kraus(step_V(a, ctx), ctx.u_dt));

    const long M = cfg.evolution_steps();
    const long stride = cfg.stride > 0 ? cfg.stride : std::max(1L, (M + 1999) / 2000);
    const long window_start = M - std::max(1L, static_cast<long>(std::ceil(cfg.plateau_fraction * M))) + 1;
    const int reps = cfg.repetitions;
    std::vector<Operator> states(static_cast<std::size_t>(reps), rho0);
    std::vector<std::mt19937_64> jump_rng, noise_rng;
    for (int r = 0; r < reps; ++r) {
        jump_rng.push_back(stream_rng(cfg.seed, static_cast<std::uint64_t>(r), 1));
        noise_rng.push_back(stream_rng(cfg.seed, static_cast<std::uint64_t>(r), 2));
    }
    CircuitResult out;
    out.record.per_traj_distance.assign(static_cast<std::size_t>(reps), {});
    detail::record_point(out.record, 0.0, states, target, false, cfg.threads);
    Operator window_sum = Operator::Zero(H.rows(), H.cols());
    long window_count = 0;
    const std::size_t last = jumps.size() - 1;
    for (long step = 1; step <= M; ++step) {
        detail::parallel_for(reps, cfg.threads, [&](int r) {
            const auto ur = static_cast<std::size_t>(r);
            const std::size_t a = std::uniform_int_distribution<std::size_t>(0, last)(jump_rng[ur]);
            Operator next = kraus[a].apply(states[ur]);
            next = apply_noise(next, noise, noise_rng[ur], n, cfg.dt_ev);
            states[ur] = hermitize(next);
        });
        if (step >= window_start) {
            for (const auto& s : states) window_sum += s;
            window_count += reps;
        }
        if (step % stride == 0 || step == M) {
            detail::record_point(out.record, step * cfg.dt_ev, states, target, false, cfg.threads);
        }
    }
    Operator avg = Operator::Zero(H.rows(), H.cols());
    for (const auto& s : states) avg += s;
    out.final_state = hermitize(avg / static_cast<double>(reps));
    out.plateau_state = hermitize(window_sum / static_cast<double>(window_count));
    out.plateau_distance = trace_distance(out.plateau_state, target);
    out.record.final_state = out.final_state;
    out.record.steps = M;
    out.record.final_dt_rk = cfg.dt_ev;
    return out;
}

}  // namespace gibbs
