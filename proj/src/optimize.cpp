#include "uep/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

#include "uep/errors.hpp"
#include "uep/rng.hpp"

namespace uep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ReducedData {
    std::vector<double> S;      // layer dimensions
    std::vector<double> delta;  // per-class reception fractions
    std::vector<double> P;      // per-class success targets
};

ReducedData reduced_data(const MappedProblem& problem) {
    ReducedData d;
    d.S.reserve(problem.source.layers.size());
    for (const auto& layer : problem.source.layers)
        d.S.push_back(static_cast<double>(layer.symbols));
    d.delta.reserve(problem.classes.size());
    d.P.reserve(problem.classes.size());
    for (size_t j = 0; j < problem.classes.size(); ++j) {
        d.delta.push_back(problem.classes[j].delta);
        d.P.push_back(problem.classes[j].p_min);
        if (problem.g[j] != j + 1)
            throw ParameterError("optimizer expects the reduced problem (class j needs layer j)");
    }
    if (d.S.size() != d.P.size())
        throw ParameterError("optimizer expects one layer per class");
    return d;
}

// Failure probability of layer l toward class j, exponents combined first so
// large dimensions cannot overflow.
double layer_failure(const RaptorModel& model, double t, double delta, double S) {
    double e = std::log(model.b) * (t * delta - S);
    double x = model.a * std::exp(e);
    return x;
}

double constraint_value_raw(const ReducedData& d, const RaptorModel& model,
                            std::span<const double> t, size_t j) {
    double v = std::log(d.P[j]);
    for (size_t l = 0; l <= j; ++l) {
        if (t[l] * d.delta[j] <= d.S[l]) return kInf;
        double x = layer_failure(model, t[l], d.delta[j], d.S[l]);
        if (x >= 1.0) return kInf;
        v -= std::log1p(-x);
    }
    return v;
}

double total(std::span<const double> t) {
    return std::accumulate(t.begin(), t.end(), 0.0);
}

std::vector<long long> round_up(std::span<const double> t) {
    std::vector<long long> out;
    out.reserve(t.size());
    for (double v : t) out.push_back(static_cast<long long>(std::ceil(v - 1e-9)));
    return out;
}

void finish_solution(GuaranteedSolution& sol, const ReducedData& d, const MappedProblem& problem,
                     const RaptorModel& model) {
    double K = 0.0;
    for (double s : d.S) K += s;
    sol.t = round_up(sol.t_real);
    std::vector<double> tr(sol.t.begin(), sol.t.end());
    double sum = total(tr);
    sol.rho.resize(tr.size());
    for (size_t l = 0; l < tr.size(); ++l) sol.rho[l] = tr[l] / sum;
    sol.epsilon = sum / K - 1.0;
    sol.epsilon_real = total(sol.t_real) / K - 1.0;
    sol.epsilon_bound = epsilon_lower_bound(problem.source, problem.classes, problem.g);
    sol.kkt = kkt_verify(problem, model, sol.t_real);
    sol.feasible = true;
    for (size_t j = 0; j < d.P.size(); ++j)
        if (constraint_value_raw(d, model, tr, j) > 1e-9) sol.feasible = false;
}

// ---- interior-point pieces (long double for conditioning) ----

struct Objective {
    const ReducedData& d;
    const RaptorModel& model;
    long double lnb;

    Objective(const ReducedData& data, const RaptorModel& m)
        : d(data), model(m), lnb(std::log(static_cast<long double>(m.b))) {}

    size_t layers() const { return d.S.size(); }
    size_t classes() const { return d.P.size(); }

    long double x_of(size_t l, size_t j, std::span<const long double> t) const {
        long double e = lnb * (t[l] * static_cast<long double>(d.delta[j]) -
                               static_cast<long double>(d.S[l]));
        return static_cast<long double>(model.a) * std::exp(e);
    }

    long double f(std::span<const long double> t, size_t j) const {
        long double v = std::log(static_cast<long double>(d.P[j]));
        for (size_t l = 0; l <= j; ++l) {
            long double x = x_of(l, j, t);
            if (x >= 1.0L) return std::numeric_limits<long double>::infinity();
            v -= std::log1p(-x);
        }
        return v;
    }

    // df_j/dt_l and d2f_j/dt_l2 (the Hessian of f_j is diagonal)
    long double grad(size_t l, size_t j, std::span<const long double> t) const {
        long double x = x_of(l, j, t);
        return x * static_cast<long double>(d.delta[j]) * lnb / (1.0L - x);
    }
    long double hess(size_t l, size_t j, std::span<const long double> t) const {
        long double x = x_of(l, j, t);
        long double c = static_cast<long double>(d.delta[j]) * lnb;
        return x * c * c / ((1.0L - x) * (1.0L - x));
    }
};

bool cholesky_solve(std::vector<long double>& H, std::vector<long double>& b, size_t n) {
    // in-place LL^T; H row-major symmetric
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            long double s = H[i * n + j];
            for (size_t k = 0; k < j; ++k) s -= H[i * n + k] * H[j * n + k];
            if (i == j) {
                if (s <= 0.0L) return false;
                H[i * n + i] = std::sqrt(s);
            } else {
                H[i * n + j] = s / H[j * n + j];
            }
        }
    }
    for (size_t i = 0; i < n; ++i) {
        long double s = b[i];
        for (size_t k = 0; k < i; ++k) s -= H[i * n + k] * b[k];
        b[i] = s / H[i * n + i];
    }
    for (size_t ii = n; ii-- > 0;) {
        long double s = b[ii];
        for (size_t k = ii + 1; k < n; ++k) s -= H[k * n + ii] * b[k];
        b[ii] = s / H[ii * n + ii];
    }
    return true;
}

}  // namespace

double epsilon_lower_bound(const LayeredSource& source, std::span<const UserClass> classes,
                           std::span<const size_t> g) {
    if (classes.size() != g.size()) throw ParameterError("one mapping entry per class expected");
    double K = static_cast<double>(source.total_symbols());
    if (K <= 0.0) throw ParameterError("source must contain symbols");
    double need = 0.0;
    for (size_t j = 0; j < classes.size(); ++j) {
        if (g[j] < 1 || g[j] > source.layers.size())
            throw ParameterError("class maps outside the layer range");
        need += static_cast<double>(source.layers[g[j] - 1].symbols) / classes[j].delta;
    }
    return need / K - 1.0;
}

double constraint_value(const MappedProblem& problem, const RaptorModel& model,
                        std::span<const double> t, size_t j) {
    ReducedData d = reduced_data(problem);
    if (j >= d.P.size()) throw ParameterError("class index out of range");
    if (t.size() != d.S.size()) throw ParameterError("one allocation per layer expected");
    return constraint_value_raw(d, model, t, j);
}

KktReport kkt_verify(const MappedProblem& problem, const RaptorModel& model,
                     std::span<const double> t) {
    ReducedData d = reduced_data(problem);
    size_t n = d.S.size();
    if (t.size() != n) throw ParameterError("one allocation per layer expected");

    KktReport report;
    report.constraint_values.resize(n);
    for (size_t j = 0; j < n; ++j) report.constraint_values[j] = constraint_value_raw(d, model, t, j);

    // D[j][l] = df_j/dt_l, lower triangular; undefined outside the domain
    std::vector<std::vector<double>> D(n, std::vector<double>(n, 0.0));
    for (size_t j = 0; j < n; ++j) {
        if (!std::isfinite(report.constraint_values[j])) {
            report.verified = false;
            report.stationarity_residual = kInf;
            return report;
        }
        for (size_t l = 0; l <= j; ++l) {
            double x = layer_failure(model, t[l], d.delta[j], d.S[l]);
            D[j][l] = x * d.delta[j] * std::log(model.b) / (1.0 - x);
        }
    }

    // triangular in reversed order: row l involves lambda_l..lambda_{n-1}
    report.lambda.assign(n, 0.0);
    for (size_t li = n; li-- > 0;) {
        double acc = 1.0;
        for (size_t j = li + 1; j < n; ++j) acc += report.lambda[j] * D[j][li];
        report.lambda[li] = -acc / D[li][li];
    }

    report.stationarity_residual = 0.0;
    for (size_t l = 0; l < n; ++l) {
        double acc = 1.0;
        for (size_t j = l; j < n; ++j) acc += report.lambda[j] * D[j][l];
        report.stationarity_residual = std::max(report.stationarity_residual, std::abs(acc));
    }

    report.verified = true;
    for (size_t j = 0; j < n; ++j) {
        if (report.lambda[j] < -1e-9) report.verified = false;
        if (report.constraint_values[j] > 1e-6) report.verified = false;
        if (std::abs(report.lambda[j] * report.constraint_values[j]) > 1e-6)
            report.verified = false;
    }
    return report;
}

GuaranteedSolution solve_sequential(const MappedProblem& problem, const RaptorModel& model) {
    ReducedData d = reduced_data(problem);
    size_t n = d.S.size();
    double lnb = std::log(model.b);

    GuaranteedSolution sol;
    sol.method = SolveMethod::sequential;
    sol.t_real.assign(n, 0.0);

    for (size_t j = 0; j < n; ++j) {
        // carried success of the layers fixed so far, seen through class j
        double A = 1.0;
        for (size_t l = 0; l < j; ++l) {
            double x = layer_failure(model, sol.t_real[l], d.delta[j], d.S[l]);
            A *= 1.0 - x;
        }
        if (A <= d.P[j]) {
            sol.solved = false;
            sol.diagnostic = "sequential chain infeasible at class " + std::to_string(j + 1) +
                             ": earlier layers already cap the success probability below the "
                             "target";
            return sol;
        }
        double x = 1.0 - d.P[j] / A;
        if (x >= model.a) {
            sol.solved = false;
            sol.diagnostic = "class " + std::to_string(j + 1) +
                             " target is slack for every allocation above the layer dimension; "
                             "the equality chain does not apply";
            return sol;
        }
        sol.t_real[j] = (d.S[j] + std::log(x / model.a) / lnb) / d.delta[j];
    }

    sol.solved = true;
    finish_solution(sol, d, problem, model);
    return sol;
}

GuaranteedSolution solve_convex(const MappedProblem& problem, const RaptorModel& model) {
    ReducedData d = reduced_data(problem);
    Objective obj(d, model);
    size_t n = d.S.size();

    GuaranteedSolution sol;
    sol.method = SolveMethod::numeric;

    // strictly feasible start: scale t = s * S_l / delta_l until every
    // constraint has slack (target f_j <= 0.5 ln P_j < 0)
    std::vector<long double> t(n);
    double s = 1.0;
    bool interior = false;
    for (int it = 0; it < 200 && !interior; ++it) {
        s *= 1.25;
        for (size_t l = 0; l < n; ++l)
            t[l] = static_cast<long double>(s) * static_cast<long double>(d.S[l]) /
                   static_cast<long double>(d.delta[l]);
        interior = true;
        for (size_t j = 0; j < n; ++j)
            if (!(obj.f(t, j) <= 0.5L * std::log(static_cast<long double>(d.P[j]))))
                interior = false;
    }
    if (!interior) {
        sol.solved = false;
        sol.diagnostic = "no strictly feasible start found";
        return sol;
    }

    std::vector<long double> H(n * n), g(n), step(n), trial(n), fvals(n);
    long double mu = 1.0L;
    const long double mu_min = 1e-9L;

    while (true) {
        // Newton iterations on sum(t)/mu - sum ln(-f_j)
        for (int inner = 0; inner < 200; ++inner) {
            for (size_t j = 0; j < n; ++j) fvals[j] = obj.f(t, j);
            std::fill(H.begin(), H.end(), 0.0L);
            for (size_t l = 0; l < n; ++l) g[l] = 1.0L / mu;
            for (size_t j = 0; j < n; ++j) {
                long double inv = 1.0L / (-fvals[j]);
                for (size_t l = 0; l <= j; ++l) {
                    long double gl = obj.grad(l, j, t);
                    g[l] += inv * gl;
                    H[l * n + l] += inv * obj.hess(l, j, t);
                    for (size_t m = 0; m <= j; ++m)
                        H[l * n + m] += inv * inv * gl * obj.grad(m, j, t);
                }
            }

            std::vector<long double> Hc = H;
            for (size_t l = 0; l < n; ++l) step[l] = -g[l];
            bool ok = cholesky_solve(Hc, step, n);
            for (int ridge = 0; !ok && ridge < 8; ++ridge) {
                long double tr = 0.0L;
                for (size_t l = 0; l < n; ++l) tr += H[l * n + l];
                long double bump = tr * std::pow(10.0L, ridge - 12);
                Hc = H;
                for (size_t l = 0; l < n; ++l) Hc[l * n + l] += bump;
                for (size_t l = 0; l < n; ++l) step[l] = -g[l];
                ok = cholesky_solve(Hc, step, n);
            }
            if (!ok) break;

            long double decrement = 0.0L;
            for (size_t l = 0; l < n; ++l) decrement += -g[l] * step[l];
            if (decrement <= 1e-18L) break;

            long double phi0 = 0.0L;
            for (size_t l = 0; l < n; ++l) phi0 += t[l] / mu;
            for (size_t j = 0; j < n; ++j) phi0 -= std::log(-fvals[j]);

            long double alpha = 1.0L;
            bool moved = false;
            for (int bt = 0; bt < 60; ++bt, alpha *= 0.5L) {
                for (size_t l = 0; l < n; ++l) trial[l] = t[l] + alpha * step[l];
                bool dom = true;
                long double phi = 0.0L;
                for (size_t l = 0; l < n; ++l) phi += trial[l] / mu;
                for (size_t j = 0; j < n && dom; ++j) {
                    long double fj = obj.f(trial, j);
                    if (!(fj < 0.0L)) dom = false;
                    else phi -= std::log(-fj);
                }
                if (dom && phi <= phi0 - 0.25L * alpha * decrement) {
                    t = trial;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
            if (decrement < 2e-16L) break;
        }
        if (mu <= mu_min) break;
        mu = std::max(mu / 10.0L, mu_min);
    }

    sol.solved = true;
    sol.t_real.resize(n);
    for (size_t l = 0; l < n; ++l) sol.t_real[l] = static_cast<double>(t[l]);
    finish_solution(sol, d, problem, model);
    return sol;
}

double eep_min_overhead(const MappedProblem& problem, const RaptorModel& model, double tol) {
    ReducedData d = reduced_data(problem);
    if (tol <= 0.0) throw ParameterError("tolerance must be positive");
    size_t n = d.S.size();
    std::vector<double> t(n);
    auto feasible = [&](double eps) {
        for (size_t l = 0; l < n; ++l) t[l] = (1.0 + eps) * d.S[l];
        for (size_t j = 0; j < n; ++j)
            if (constraint_value_raw(d, model, t, j) > 0.0) return false;
        return true;
    };
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (!feasible(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) throw InfeasibleError("uniform overhead does not reach the targets");
    }
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

double min_overhead_along_rho(const MappedProblem& problem, const RaptorModel& model,
                              std::span<const double> rho, double tol) {
    ReducedData d = reduced_data(problem);
    if (rho.size() != d.S.size()) throw ParameterError("one rho entry per layer expected");
    double K = 0.0;
    for (double s : d.S) K += s;
    for (size_t j = 0; j < d.P.size(); ++j)
        for (size_t l = 0; l <= j; ++l)
            if (rho[l] <= 0.0) return kInf;  // a needed layer never transmitted

    size_t n = d.S.size();
    std::vector<double> t(n);
    auto feasible = [&](double eps) {
        for (size_t l = 0; l < n; ++l) t[l] = (1.0 + eps) * K * rho[l];
        for (size_t j = 0; j < n; ++j)
            if (constraint_value_raw(d, model, t, j) > 0.0) return false;
        return true;
    };
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (!feasible(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 60) return kInf;
    }
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

namespace {

// enumerate simplex grid points in lexicographic order; prefix holds integer
// step counts
template <typename Fn>
void walk_grid(std::vector<uint32_t>& prefix, size_t pos, uint32_t remaining, Fn&& fn) {
    if (pos + 1 == prefix.size()) {
        prefix[pos] = remaining;
        fn(prefix);
        return;
    }
    for (uint32_t c = 0; c <= remaining; ++c) {
        prefix[pos] = c;
        walk_grid(prefix, pos + 1, remaining - c, fn);
    }
}

struct Candidate {
    std::vector<double> rho;
    double avg = -kInf;
    std::vector<double> per_class;
    bool feasible = false;
    bool valid = false;
};

}  // namespace

BestEffortSolution best_effort_search(const LayeredSource& source,
                                      std::span<const UserClass> classes,
                                      const FailureModel& model,
                                      const BestEffortOptions& options) {
    if (options.epsilon_max < 0.0) throw ParameterError("epsilon_max must be nonnegative");
    if (options.grid_step <= 0.0 || options.grid_step > 1.0)
        throw ParameterError("grid step must lie in (0, 1]");
    std::vector<size_t> g = compute_g(source, classes);

    size_t L = source.layers.size();
    size_t J = classes.size();
    std::vector<double> dims(L);
    std::vector<double> q(L);
    for (size_t l = 0; l < L; ++l) {
        dims[l] = static_cast<double>(source.layers[l].symbols);
        q[l] = source.layers[l].psnr;
    }
    std::vector<double> deltas(J), w(J);
    bool any_weight = false, all_weight = true;
    for (size_t j = 0; j < J; ++j) {
        deltas[j] = classes[j].delta;
        if (classes[j].weight) {
            any_weight = true;
            w[j] = *classes[j].weight;
        } else {
            all_weight = false;
        }
    }
    if (any_weight && !all_weight)
        throw ParameterError("either every class carries a weight or none does");
    if (!any_weight) std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(J));
    double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-9) throw ParameterError("class weights must sum to 1");

    double K = static_cast<double>(source.total_symbols());
    double M = (1.0 + options.epsilon_max) * K;

    std::vector<double> t(L);
    auto evaluate = [&](std::span<const double> rho, Candidate& out) {
        for (size_t l = 0; l < L; ++l) t[l] = rho[l] * M;
        RecoveryProfile profile = recovery_profile(model, t, dims, deltas);
        PsnrSummary summary = expected_psnr(profile, q, w);
        out.rho.assign(rho.begin(), rho.end());
        out.avg = summary.weighted;
        out.per_class = summary.per_class;
        out.feasible = true;
        if (options.enforce_constraints) {
            for (size_t j = 0; j < J; ++j) {
                double ok = class_success_prob(model, t, dims, deltas[j], g[j]);
                if (ok < classes[j].p_min) out.feasible = false;
            }
        }
        out.valid = true;
    };

    BestEffortSolution result;
    result.epsilon = options.epsilon_max;

    auto steps = static_cast<uint32_t>(std::lround(1.0 / options.grid_step));
    if (std::abs(steps * options.grid_step - 1.0) > 1e-9)
        throw ParameterError("grid step must divide 1 exactly");

    Candidate best;
    std::vector<uint32_t> counts(L);
    std::vector<double> rho(L);
    Candidate scratch;
    walk_grid(counts, 0, steps, [&](const std::vector<uint32_t>& c) {
        for (size_t l = 0; l < L; ++l) rho[l] = static_cast<double>(c[l]) * options.grid_step;
        evaluate(rho, scratch);
        result.sweep.push_back(
            {scratch.rho, scratch.avg, scratch.per_class, scratch.feasible});
        if (options.enforce_constraints && !scratch.feasible) return;
        if (!best.valid || scratch.avg > best.avg) best = scratch;
    });

    if (!best.valid) {
        result.feasible = false;
        result.avg_psnr = -kInf;
        return result;
    }

    // two-layer plateau of the base grid
    if (L == 2) {
        result.argmax_lo = kInf;
        result.argmax_hi = -kInf;
        for (const auto& row : result.sweep) {
            if (options.enforce_constraints && !row.feasible) continue;
            if (row.avg_psnr >= best.avg - 1e-9) {
                result.argmax_lo = std::min(result.argmax_lo, row.rho[0]);
                result.argmax_hi = std::max(result.argmax_hi, row.rho[0]);
            }
        }
    }

    // local refinement around the grid optimum
    if (options.refine_step > 0.0 && options.refine_step < options.grid_step && L >= 2) {
        double h = options.grid_step;
        double r = options.refine_step;
        std::vector<double> lo(L), cand(L);
        std::vector<uint32_t> spread(L);
        for (size_t l = 0; l < L; ++l) {
            lo[l] = std::max(0.0, best.rho[l] - h);
            double hi = std::min(1.0, best.rho[l] + h);
            spread[l] = static_cast<uint32_t>(std::lround((hi - lo[l]) / r));
        }
        // walk all but the last coordinate; the last takes the remainder
        std::vector<uint32_t> idx(L - 1, 0);
        bool done = false;
        while (!done) {
            double acc = 0.0;
            for (size_t l = 0; l + 1 < L; ++l) {
                cand[l] = lo[l] + static_cast<double>(idx[l]) * r;
                acc += cand[l];
            }
            double last = 1.0 - acc;
            if (last >= lo[L - 1] - 1e-12 &&
                last <= std::min(1.0, best.rho[L - 1] + h) + 1e-12 && last >= -1e-12) {
                cand[L - 1] = std::max(0.0, last);
                evaluate(cand, scratch);
                if ((!options.enforce_constraints || scratch.feasible) &&
                    scratch.avg > best.avg)
                    best = scratch;
            }
            size_t k = 0;
            for (;; ++k) {
                if (k == idx.size()) {
                    done = true;
                    break;
                }
                if (++idx[k] <= spread[k]) break;
                idx[k] = 0;
            }
        }
    }

    result.feasible = true;
    result.rho = best.rho;
    result.avg_psnr = best.avg;
    result.per_class_psnr = best.per_class;
    return result;
}

SplitComparison partition_split_compare(const RaptorModel& model, double S, double t, double delta,
                                        double S_m, double t_m) {
    if (S < 2.0 || S_m < 1.0 || S_m > S - 1.0)
        throw ParameterError("split dimension must leave both parts nonempty");
    if (t < 0.0 || t_m < 0.0 || t_m > t) throw ParameterError("split budget out of range");
    SplitComparison cmp;
    auto fail = [&](double tt, double SS) {
        double m = tt * delta;
        if (m <= SS) return 1.0;
        return std::min(1.0, layer_failure(model, tt, delta, SS));
    };
    cmp.merged_success = 1.0 - fail(t, S);
    cmp.split_success = (1.0 - fail(t_m, S_m)) * (1.0 - fail(t - t_m, S - S_m));
    return cmp;
}

PartitionCheckResult partition_monotonicity_check(const MappedProblem& problem,
                                                  const RaptorModel& model,
                                                  std::span<const double> t, size_t trials,
                                                  uint64_t seed) {
    ReducedData d = reduced_data(problem);
    if (t.size() != d.S.size()) throw ParameterError("one allocation per layer expected");
    Rng rng(seed);
    PartitionCheckResult res;
    res.trials = trials;
    res.worst_margin = kInf;
    for (size_t i = 0; i < trials; ++i) {
        size_t l = rng.next_below(static_cast<uint32_t>(d.S.size()));
        if (d.S[l] < 2.0) continue;
        double S_m = 1.0 + static_cast<double>(rng.next_below(static_cast<uint32_t>(d.S[l]) - 1));
        double t_m = rng.next_double() * t[l];
        size_t j = rng.next_below(static_cast<uint32_t>(d.delta.size()));
        SplitComparison cmp = partition_split_compare(model, d.S[l], t[l], d.delta[j], S_m, t_m);
        double margin = cmp.merged_success - cmp.split_success;
        res.worst_margin = std::min(res.worst_margin, margin);
        if (margin < -1e-12) ++res.violations;
    }
    return res;
}

}  // namespace uep
