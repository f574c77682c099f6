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
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gibbs/jumps.hpp"
#include "gibbs/liouville.hpp"
#include "gibbs/numkernel.hpp"

namespace gibbs {

struct SolverConfig {
    double dt_rk0 = 0.25;
    long max_steps = 300000;
    int n_traj = 10;
    double herm_tol = 1e-6;
    std::uint64_t seed = 1;
    // Time horizon; the run stops at min(max_steps, ceil(t_max/dt)) steps.
    double t_max = std::numeric_limits<double>::infinity();
    // Record spacing in steps; 0 picks ceil(planned_steps / 2000).
    long stride = 0;
    // Record spacing in time units; overrides stride when positive.
    double record_dt = 0.0;
    bool keep_states = false;
    // Stop once the averaged distance drops below this value (0 disables).
    double stop_below = 0.0;
    double min_dt = 1e-6;
    int threads = 1;

    void validate() const {
        if (!(dt_rk0 > 0.0)) throw InvalidArgument("dt_rk0 must be positive");
        if (n_traj < 1) throw InvalidArgument("n_traj must be >= 1");
        if (!(herm_tol > 0.0)) throw InvalidArgument("herm_tol must be positive");
        if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
    }
};

struct EvolutionRecord {
    std::vector<double> times;
    std::vector<Operator> avg_states;
    std::vector<std::vector<double>> per_traj_distance;
    std::vector<double> avg_distance;
    // Jackknife standard error of avg_distance over trajectory batches.
    std::vector<double> avg_distance_sigma;
    Operator final_state;
    double final_dt_rk = 0.0;
    int halvings = 0;
    long steps = 0;
};

// Independent stream per (seed, index).
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

template <class Gen>
Operator rk4_step(const Operator& rho, Gen&& generator, double dt) {
    const Operator k1 = generator(rho);
    const Operator k2 = generator(Operator(rho + 0.5 * dt * k1));
    const Operator k3 = generator(Operator(rho + 0.5 * dt * k2));
    const Operator k4 = generator(Operator(rho + dt * k3));
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Operator rk4_step(const Operator& rho, const Lindbladian& lind, double dt) {
    return rk4_step(rho, [&](const Operator& x) { return lind.apply(x); }, dt);
}

namespace detail {

inline long planned_steps(const SolverConfig& cfg, double dt) {
    double by_time = std::isfinite(cfg.t_max) ? std::ceil(cfg.t_max / dt - 1e-9) : static_cast<double>(cfg.max_steps);
    return std::max(1L, std::min(cfg.max_steps, static_cast<long>(by_time)));
}

inline long record_stride(const SolverConfig& cfg, double dt, long steps) {
    if (cfg.record_dt > 0.0) return std::max(1L, std::lround(cfg.record_dt / dt));
    if (cfg.stride > 0) return cfg.stride;
    return std::max(1L, (steps + 1999) / 2000);
}

template <class F>
void parallel_for(int count, int threads, F&& f) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) f(i);
        return;
    }
    const int workers = std::min(threads, count);
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < count; i += workers) f(i);
        });
    }
}

// Records one grid point from the current trajectory states.
inline void record_point(EvolutionRecord& rec, double t, const std::vector<Operator>& states, const Operator& target,
                         bool keep_states, int threads) {
    const int n = static_cast<int>(states.size());
    std::vector<double> dist(static_cast<std::size_t>(n));
    parallel_for(n, threads, [&](int i) { dist[static_cast<std::size_t>(i)] = trace_distance(states[static_cast<std::size_t>(i)], target); });
    Operator avg = Operator::Zero(target.rows(), target.cols());
    for (const auto& s : states) avg += s;
    avg /= static_cast<double>(n);
    avg = hermitize(avg);
    const double d_avg = trace_distance(avg, target);
    double sigma = 0.0;
    const int batches = std::min(n, 10);
    if (batches >= 2) {
        // Delete-one-batch jackknife on the distance of the averaged state.
        std::vector<Operator> sums(static_cast<std::size_t>(batches), Operator::Zero(target.rows(), target.cols()));
        std::vector<int> counts(static_cast<std::size_t>(batches), 0);
        for (int i = 0; i < n; ++i) {
            sums[static_cast<std::size_t>(i % batches)] += states[static_cast<std::size_t>(i)];
            ++counts[static_cast<std::size_t>(i % batches)];
        }
        std::vector<double> jk(static_cast<std::size_t>(batches));
        double mean = 0.0;
        for (int b = 0; b < batches; ++b) {
            const Operator loo = hermitize((avg * static_cast<double>(n) - sums[static_cast<std::size_t>(b)]) /
                                           static_cast<double>(n - counts[static_cast<std::size_t>(b)]));
            jk[static_cast<std::size_t>(b)] = trace_distance(loo, target);
            mean += jk[static_cast<std::size_t>(b)];
        }
        mean /= batches;
        double var = 0.0;
        for (double v : jk) var += (v - mean) * (v - mean);
        sigma = std::sqrt(var * (batches - 1.0) / batches);
    }
    rec.times.push_back(t);
    for (int i = 0; i < n; ++i) rec.per_traj_distance[static_cast<std::size_t>(i)].push_back(dist[static_cast<std::size_t>(i)]);
    rec.avg_distance.push_back(d_avg);
    rec.avg_distance_sigma.push_back(sigma);
    if (keep_states) rec.avg_states.push_back(avg);
}

inline bool state_ok(const Operator& rho, double herm_tol) {
    return rho.allFinite() && hermiticity_residual(rho) <= herm_tol;
}

// Hermiticity-gated ensemble RK4. choose(traj, rng) returns the generator index
// for the next step of a trajectory.
template <class Choose>
EvolutionRecord run_rk4_ensemble(const std::vector<Lindbladian>& gens, Choose&& choose, const Operator& rho0,
                                 const SolverConfig& cfg, const Operator& target) {
    cfg.validate();
    require_same_dim(rho0, target, "initial state vs target");
    double dt = cfg.dt_rk0;
    int halvings = 0;
    while (true) {
        if (dt < cfg.min_dt) throw StepUnderflow("dt_rk fell below " + std::to_string(cfg.min_dt));
        const long steps = planned_steps(cfg, dt);
        const long stride = record_stride(cfg, dt, steps);
        EvolutionRecord rec;
        rec.per_traj_distance.assign(static_cast<std::size_t>(cfg.n_traj), {});
        std::vector<Operator> states(static_cast<std::size_t>(cfg.n_traj), rho0);
        std::vector<std::mt19937_64> rngs;
        rngs.reserve(static_cast<std::size_t>(cfg.n_traj));
        for (int i = 0; i < cfg.n_traj; ++i) rngs.push_back(stream_rng(cfg.seed, static_cast<std::uint64_t>(i)));
        record_point(rec, 0.0, states, target, cfg.keep_states, cfg.threads);
        bool failed = false;
        long step = 0;
        bool stopped = cfg.stop_below > 0.0 && rec.avg_distance.back() < cfg.stop_below;
        std::vector<char> bad(static_cast<std::size_t>(cfg.n_traj), 0);
        while (!stopped && step < steps) {
            ++step;
            parallel_for(cfg.n_traj, cfg.threads, [&](int i) {
                const auto ui = static_cast<std::size_t>(i);
                const std::size_t a = choose(i, rngs[ui]);
                Operator next = rk4_step(states[ui], gens[a], dt);
                if (!state_ok(next, cfg.herm_tol)) {
                    bad[ui] = 1;
                    return;
                }
                next = hermitize(next);
                next /= next.trace().real();
                states[ui] = std::move(next);
            });
            if (std::any_of(bad.begin(), bad.end(), [](char b) { return b != 0; })) {
                failed = true;
                break;
            }
            if (step % stride == 0 || step == steps) {
                record_point(rec, step * dt, states, target, cfg.keep_states, cfg.threads);
                if (cfg.stop_below > 0.0 && rec.avg_distance.back() < cfg.stop_below) stopped = true;
            }
        }
        if (failed) {
            dt *= 0.5;
            ++halvings;
            continue;
        }
        Operator avg = Operator::Zero(rho0.rows(), rho0.cols());
        for (const auto& s : states) avg += s;
        rec.final_state = hermitize(avg / static_cast<double>(cfg.n_traj));
        rec.final_dt_rk = dt;
        rec.halvings = halvings;
        rec.steps = step;
        return rec;
    }
}

}  // namespace detail

// Each step of each trajectory draws one jump uniformly and integrates
// -i[H, .] + D^a with unit weight. An empty H drops the coherent term.
inline EvolutionRecord evolve_randomized(const Operator& H, const std::vector<LindbladOperator>& lindblads,
                                         const Operator& rho0, const SolverConfig& cfg, const Operator& target) {
    if (lindblads.empty()) throw InvalidArgument("empty jump set");
    std::vector<Lindbladian> gens;
    gens.reserve(lindblads.size());
    for (const auto& l : lindblads) gens.emplace_back(H, std::vector<Operator>{l.matrix}, std::vector<double>{1.0});
    const std::size_t last = lindblads.size() - 1;
    return detail::run_rk4_ensemble(
        gens, [last](int, std::mt19937_64& rng) { return std::uniform_int_distribution<std::size_t>(0, last)(rng); },
        rho0, cfg, target);
}

inline EvolutionRecord evolve_randomized(const Operator& H, const std::vector<PauliString>& jump_set,
                                         const FilterSpec& f, const Operator& rho0, const SolverConfig& cfg,
                                         const Operator& target) {
    const Spectrum spec = eig_hermitian(H);
    const BohrSpectrum bohr = bohr_frequencies(spec);
    return evolve_randomized(H, lindblad_ops_exact(jump_set, spec, f, bohr), rho0, cfg, target);
}

// Deterministic single trajectory with the full generator.
inline EvolutionRecord evolve_exact(const Operator& H, const std::vector<Operator>& lindblads,
                                    const std::vector<double>& gammas, const Operator& rho0, SolverConfig cfg,
                                    const Operator& target) {
    cfg.n_traj = 1;
    std::vector<Lindbladian> gens{Lindbladian(H, lindblads, gammas)};
    return detail::run_rk4_ensemble(
        gens, [](int, std::mt19937_64&) { return std::size_t{0}; }, rho0, cfg, target);
}

inline EvolutionRecord evolve_exact(const Operator& H, const std::vector<LindbladOperator>& lindblads,
                                    const std::vector<double>& gammas, const Operator& rho0,
                                    const SolverConfig& cfg, const Operator& target) {
    return evolve_exact(H, matrices_of(lindblads), gammas, rho0, cfg, target);
}

// First-order quantum-jump unraveling with H_eff = H - (i/2) sum gamma L^dag L.
// The step is reduced until dt * ||sum gamma L^dag L|| < 0.1, which bounds the
// jump probability per step.
inline EvolutionRecord mcwf_evolve(const Operator& H, const std::vector<Operator>& lindblads,
                                   const std::vector<double>& gammas, const StateVector& psi0, SolverConfig cfg,
                                   const Operator& target) {
    cfg.validate();
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw InvalidArgument("psi0 must be normalized");
    const Index d = H.rows();
    if (psi0.size() != d) throw DimensionMismatch("psi0 vs H");
    const Lindbladian lind(H, lindblads, gammas);
    Operator K = Operator::Zero(d, d);
    for (std::size_t a = 0; a < lindblads.size(); ++a) K.noalias() += gammas[a] * (lindblads[a].adjoint() * lindblads[a]);
    const double knorm = K.size() ? hermitian_eigenvalues(K).cwiseAbs().maxCoeff() : 0.0;
    double dt = cfg.dt_rk0;
    while (dt * knorm >= 0.1) dt *= 0.5;
    const Operator U = Operator(-kI * dt * lind.effective_hamiltonian()).exp();

    const long steps = detail::planned_steps(cfg, dt);
    const long stride = detail::record_stride(cfg, dt, steps);
    EvolutionRecord rec;
    rec.per_traj_distance.assign(static_cast<std::size_t>(cfg.n_traj), {});
    std::vector<StateVector> psis(static_cast<std::size_t>(cfg.n_traj), psi0);
    std::vector<std::mt19937_64> rngs;
    for (int i = 0; i < cfg.n_traj; ++i) rngs.push_back(stream_rng(cfg.seed, static_cast<std::uint64_t>(i), 7));
    auto densities = [&] {
        std::vector<Operator> rhos;
        rhos.reserve(psis.size());
        for (const auto& p : psis) rhos.push_back(p * p.adjoint());
        return rhos;
    };
    detail::record_point(rec, 0.0, densities(), target, cfg.keep_states, cfg.threads);
    long step = 0;
    bool stopped = false;
    while (!stopped && step < steps) {
        ++step;
        detail::parallel_for(cfg.n_traj, cfg.threads, [&](int i) {
            auto& psi = psis[static_cast<std::size_t>(i)];
            auto& rng = rngs[static_cast<std::size_t>(i)];
            std::uniform_real_distribution<double> u(0.0, 1.0);
            StateVector next = U * psi;
            const double p_jump = 1.0 - next.squaredNorm();
            if (u(rng) < p_jump) {
                std::vector<double> w(lindblads.size());
                double total = 0.0;
                for (std::size_t a = 0; a < lindblads.size(); ++a) {
                    w[a] = gammas[a] * (lindblads[a] * psi).squaredNorm();
                    total += w[a];
                }
                double r = u(rng) * total;
                std::size_t a = 0;
                while (a + 1 < w.size() && r >= w[a]) r -= w[a++];
                next = lindblads[a] * psi;
            }
            psi = next / next.norm();
        });
        if (step % stride == 0 || step == steps) {
            detail::record_point(rec, step * dt, densities(), target, cfg.keep_states, cfg.threads);
            if (cfg.stop_below > 0.0 && rec.avg_distance.back() < cfg.stop_below) stopped = true;
        }
    }
    Operator avg = Operator::Zero(d, d);
    for (const auto& p : psis) avg += p * p.adjoint();
    rec.final_state = hermitize(avg / static_cast<double>(cfg.n_traj));
    rec.final_dt_rk = dt;
    rec.steps = step;
    return rec;
}

inline EvolutionRecord mcwf_evolve(const Operator& H, const std::vector<LindbladOperator>& lindblads,
                                   const std::vector<double>& gammas, const StateVector& psi0,
                                   const SolverConfig& cfg, const Operator& target) {
    return mcwf_evolve(H, matrices_of(lindblads), gammas, psi0, cfg, target);
}

// First grid time whose averaged distance is below eps.
inline std::optional<double> mixing_time_estimate(const EvolutionRecord& rec, double eps = 1e-2) {
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        if (rec.avg_distance[i] < eps) return rec.times[i];
    }
    return std::nullopt;
}

// Mean of the averaged distance over the last `fraction` of the record.
inline double plateau_distance(const EvolutionRecord& rec, double fraction = 0.2) {
    if (rec.avg_distance.empty()) return 0.0;
    const std::size_t n = rec.avg_distance.size();
    const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
    double acc = 0.0;
    for (std::size_t i = n - count; i < n; ++i) acc += rec.avg_distance[i];
    return acc / static_cast<double>(count);
}

}  // namespace gibbs
