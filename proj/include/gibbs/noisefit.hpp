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
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "gibbs/errors.hpp"

namespace gibbs {

struct ConvergenceFit {
    double B = 0.0;
    double alpha = 0.0;
    std::size_t window_begin = 0;
    std::size_t window_end = 0;  // exclusive
    double residual = 0.0;
    double plateau = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS
};

inline LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw InvalidArgument("line fit needs >= 2 paired points");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw InvalidArgument("degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

struct PowerLawFit {
    double prefactor = 0.0;
    double exponent = 0.0;
    double residual = 0.0;  // RMS in natural-log space
};

// y = prefactor * x^exponent by least squares in log-log space.
inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("power-law fit needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const LinearFit l = least_squares_line(lx, ly);
    return {std::exp(l.intercept), l.slope, l.residual};
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// log d = log B - alpha M on the segment before the plateau. The plateau is the
// median of the last 10% of points; the window ends at the first point within
// twice the plateau.
inline ConvergenceFit fit_convergence(const std::vector<double>& M, const std::vector<double>& d) {
    if (M.size() != d.size() || M.size() < 5) throw InsufficientDecay("need >= 5 points");
    const std::size_t n = d.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    ConvergenceFit f;
    f.plateau = median(std::vector<double>(d.end() - static_cast<std::ptrdiff_t>(tail), d.end()));
    std::size_t end = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] <= 2.0 * f.plateau) {
            end = i;
            break;
        }
    }
    if (end < 5) throw InsufficientDecay("fewer than 5 points above the plateau");
    double dmax = 0.0;
    for (std::size_t i = 0; i < end; ++i) dmax = std::max(dmax, d[i]);
    if (!(dmax >= 10.0 * f.plateau) || !(f.plateau >= 0.0)) throw InsufficientDecay("series does not decay a decade");
    std::vector<double> x(M.begin(), M.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<double> y;
    for (std::size_t i = 0; i < end; ++i) {
        if (!(d[i] > 0.0)) throw InsufficientDecay("nonpositive distance in window");
        y.push_back(std::log(d[i]));
    }
    const LinearFit l = least_squares_line(x, y);
    f.B = std::exp(l.intercept);
    f.alpha = -l.slope;
    f.window_begin = 0;
    f.window_end = end;
    f.residual = l.residual;
    if (!(f.alpha > 0.0) || !(f.B > 0.0)) throw InsufficientDecay("fitted rate is not positive");
    return f;
}

inline double bound_series(const ConvergenceFit& fit, double lambda, double M) {
    const double u0 = (1.0 - lambda) * std::exp(-fit.alpha);
    const double tail = lambda / (1.0 - u0);
    return fit.B * (std::pow(u0, M) * (1.0 - tail) + tail);
}

inline double bound_asymptotic(const ConvergenceFit& fit, double lambda) {
    const double u0 = (1.0 - lambda) * std::exp(-fit.alpha);
    return fit.B * lambda / (1.0 - u0);
}

inline double bound_generic(const ConvergenceFit& fit, double lambda) {
    if (lambda <= 0.0) return 0.0;
    // optimum eps = min(C/alpha, B) with C = 2 lambda
    if (2.0 * lambda / fit.alpha >= fit.B) return fit.B;
    const double x = fit.B * fit.alpha / (2.0 * lambda);
    const double g = (2.0 * lambda / fit.alpha) * (std::log(x) + 1.0);
    return std::min(fit.B, g);
}

// Golden-section minimization of a unimodal function on [lo, hi].
inline std::pair<double, double> golden_section(const std::function<double(double)>& f, double lo, double hi,
                                                double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (std::abs(b - a) > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

// min over eps in (0, B] of lambda_tot B + (1 - lambda_tot) eps with
// 1 - lambda_tot = (1 - lambda_g)^(M* N_g) and M* = ln(B/eps)/alpha.
inline double bound_unitary_comparison(const ConvergenceFit& fit, double lambda_g, double ng_per_step) {
    if (lambda_g <= 0.0) return 0.0;
    const double B = fit.B;
    auto objective = [&](double eps) {
        const double mstar = std::log(B / eps) / fit.alpha;
        const double survive = std::pow(1.0 - lambda_g, mstar * ng_per_step);
        return (1.0 - survive) * B + survive * eps;
    };
    const double tol = 1e-6 * B;
    // The optimum can sit far below B; bracket on a geometric grid first.
    double best_eps = B, best_val = objective(B);
    double eps = B;
    for (int i = 0; i < 400 && eps > 1e-300; ++i) {
        eps *= 0.5;
        const double v = objective(eps);
        if (v < best_val) {
            best_val = v;
            best_eps = eps;
        }
    }
    const double lo = std::max(best_eps * 0.5, std::numeric_limits<double>::min());
    const double hi = std::min(B, best_eps * 2.0);
    const auto [x, v] = golden_section(objective, lo, hi, std::min(tol, 1e-6 * best_eps));
    return std::min(v, best_val);
}

inline double noisy_rate(double alpha, double lambda_g, double ng_per_step) {
    return alpha + ng_per_step * (-std::log1p(-lambda_g));
}

inline double per_step_lambda(double lambda_g, double ng_per_step) {
    return 1.0 - std::pow(1.0 - lambda_g, ng_per_step);
}

// Least squares in log distance of B_inf(N) + d0 against measured plateaus.
inline double fit_effective_gates(const std::vector<std::pair<double, double>>& data, const ConvergenceFit& fit,
                                  double d0) {
    if (data.size() < 3) throw InvalidArgument("need >= 3 noise levels");
    auto loss = [&](double log_n) {
        const double N = std::exp(log_n);
        double s = 0.0;
        for (const auto& [lg, dist] : data) {
            const double model = bound_asymptotic(fit, per_step_lambda(lg, N)) + d0;
            const double r = std::log(model) - std::log(dist);
            s += r * r;
        }
        return s;
    };
    double best = std::log(1e-3), best_v = loss(best);
    for (double x = std::log(1e-3); x <= std::log(1e8); x += 0.05) {
        const double v = loss(x);
        if (v < best_v) {
            best_v = v;
            best = x;
        }
    }
    const auto [x, v] = golden_section(loss, best - 0.05, best + 0.05, 1e-10);
    return std::exp(v < best_v ? x : best);
}

struct ErrorFitParams {
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};
    double loss = 0.0;
    std::size_t points_used = 0;
};

struct ErrorPoint {
    double dt_ev;
    double dt_oft;
    double distance;
};

struct ErrorModelContext {
    double T = 1.6;
    double beta = 0.5;
    double H_norm = 1.0;
    double bohr_count = 1.0;
    double max_dt_ev = 0.3;
    double max_dt_oft = 0.37;
};

inline double error_guard_argument(const ErrorModelContext& c, double dt_oft) {
    return 2.0 * std::numbers::pi * c.beta / dt_oft - 2.0 * c.beta * c.H_norm - 1.0;
}

inline std::array<double, 4> error_features(const ErrorModelContext& c, double dt_ev, double dt_oft) {
    const double z = error_guard_argument(c, dt_oft);
    return {1.0, dt_ev, c.T * dt_oft * dt_oft / dt_ev,
            std::sqrt(c.beta) * c.bohr_count * std::exp(-z * z / 8.0)};
}

inline double error_model(const ErrorFitParams& p, const ErrorModelContext& c, double dt_ev, double dt_oft) {
    const auto phi = error_features(c, dt_ev, dt_oft);
    double f = 0.0;
    for (int k = 0; k < 4; ++k) f += p.a[static_cast<std::size_t>(k)] * phi[static_cast<std::size_t>(k)];
    return f;
}

// Deterministic Levenberg-Marquardt in a_k = exp(u_k) on the log10 loss, from
// a fixed grid of starting points.
inline ErrorFitParams fit_error_model(const std::vector<ErrorPoint>& grid, const ErrorModelContext& ctx) {
    std::vector<std::array<double, 4>> phi;
    std::vector<double> target;
    for (const auto& p : grid) {
        if (p.dt_ev > ctx.max_dt_ev + 1e-12 || p.dt_oft > ctx.max_dt_oft + 1e-12) continue;
        if (error_guard_argument(ctx, p.dt_oft) <= 0.0) continue;
        if (!(p.distance > 0.0)) continue;
        phi.push_back(error_features(ctx, p.dt_ev, p.dt_oft));
        target.push_back(std::log10(p.distance));
    }
    const std::size_t m = phi.size();
    if (m < 4) throw InvalidArgument("error fit needs >= 4 usable grid points");
    auto residuals = [&](const Eigen::Vector4d& u, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(m));
        if (jac) jac->resize(static_cast<Eigen::Index>(m), 4);
        for (std::size_t i = 0; i < m; ++i) {
            double f = 0.0;
            for (int k = 0; k < 4; ++k) f += std::exp(u(k)) * phi[i][static_cast<std::size_t>(k)];
            r(static_cast<Eigen::Index>(i)) = std::log10(f) - target[i];
            if (jac) {
                for (int k = 0; k < 4; ++k) {
                    (*jac)(static_cast<Eigen::Index>(i), k) =
                        std::exp(u(k)) * phi[i][static_cast<std::size_t>(k)] / (f * std::numbers::ln10);
                }
            }
        }
        return r.squaredNorm();
    };
    ErrorFitParams best;
    best.loss = std::numeric_limits<double>::infinity();
    const std::array<double, 3> starts{-12.0, -7.0, -3.0};
    for (double s0 : starts) {
        for (double s1 : starts) {
            for (double s2 : starts) {
                for (double s3 : starts) {
                    Eigen::Vector4d u(s0, s1, s2, s3);
                    Eigen::VectorXd r;
                    Eigen::MatrixXd J;
                    double loss = residuals(u, r, &J);
                    double mu = 1e-3;
                    for (int it = 0; it < 200; ++it) {
                        const Eigen::Matrix4d A = J.transpose() * J;
                        const Eigen::Vector4d g = J.transpose() * r;
                        Eigen::Matrix4d Ad = A;
                        for (int k = 0; k < 4; ++k) Ad(k, k) += mu * (A(k, k) + 1e-12);
                        const Eigen::Vector4d step = Ad.ldlt().solve(-g);
                        Eigen::Vector4d trial = (u + step).cwiseMax(-60.0).cwiseMin(10.0);
                        Eigen::VectorXd rt;
                        Eigen::MatrixXd Jt;
                        const double lt = residuals(trial, rt, &Jt);
                        if (lt < loss) {
                            const double gain = loss - lt;
                            u = trial;
                            r = rt;
                            J = Jt;
                            loss = lt;
                            mu = std::max(mu / 3.0, 1e-12);
                            if (gain < 1e-15 * (1.0 + loss)) break;
                        } else {
                            mu *= 4.0;
                            if (mu > 1e12) break;
                        }
                    }
                    if (loss < best.loss) {
                        best.loss = loss;
                        for (int k = 0; k < 4; ++k) best.a[static_cast<std::size_t>(k)] = std::exp(u(k));
                    }
                }
            }
        }
    }
    for (auto& a : best.a) {
        if (a < 1e-25) a = 0.0;
    }
    best.loss = std::sqrt(best.loss);
    best.points_used = m;
    return best;
}

}  // namespace gibbs
