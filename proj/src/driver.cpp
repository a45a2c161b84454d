#include "fk/driver.hpp"

#include "fk/errors.hpp"
#include "fk/series.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace fk {

std::string mode_name(Mode m) { return m == Mode::rand ? "rand" : "quant"; }

namespace {

double magnitude_bound(int k, const ClassParams& p, double t) {
    return std::pow(p.embed_K, k + 1) * p.beta1 * std::pow(p.beta2, k) * g_l1_norm(k, t);
}

double eps_term_for(double eps, int k, const ClassParams& p, double t, Mode mode) {
    double kfact = 1.0;
    for (int i = 2; i <= k; ++i) kfact *= i;
    double denom = p.beta1 * std::pow(p.beta2, k) * std::pow(t, k);
    if (mode == Mode::rand)
        return std::pow(eps, 2.0 / (p.alpha + 2.0)) * kfact / (denom * std::pow(2.0, k + 1));
    return std::pow(eps, 1.0 / (p.alpha + 1.0)) * kfact / (denom * std::pow(2.0, k + 2));
}

std::uint64_t bits_of(double x) {
    std::uint64_t b;
    std::memcpy(&b, &x, sizeof b);
    return b;
}

} // namespace

BudgetPlan plan_budget(double eps, const ClassParams& params, double t, Mode mode) {
    if (eps <= 0.0) throw std::invalid_argument("plan_budget: eps > 0 required");
    BudgetPlan plan;
    plan.eps = eps;
    plan.mode = mode;
    plan.m = static_cast<std::uint64_t>(
        std::ceil(std::pow(eps, -2.0 * params.alpha / (params.alpha + 2.0))));
    plan.kappa = static_cast<std::uint64_t>(
        std::ceil(std::pow(eps, -params.alpha / (params.alpha + 1.0))));
    std::uint64_t budget_count = mode == Mode::rand ? plan.m : plan.kappa;

    constexpr int kMaxTerms = 256;
    int last_live = -1;
    std::vector<TermBudget> all;
    for (int k = 0; k < kMaxTerms; ++k) {
        TermBudget tb;
        tb.k = k;
        tb.eps_term = eps_term_for(eps, k, params, t, mode);
        tb.m_or_kappa = budget_count;
        double bound = magnitude_bound(k, params, t);
        bool skip_direct = bound <= eps / std::pow(2.0, k + 1);
        bool skip_cutoff = tb.eps_term / static_cast<double>(budget_count) >=
                           std::pow(params.embed_K, k + 1);
        tb.skip = skip_direct || skip_cutoff;
        all.push_back(tb);
        if (!tb.skip) last_live = k;
        // once the magnitude bound is decaying and far below budget, stop
        if (k > 4 && bound < 1e-4 * eps / std::pow(2.0, k + 1)) break;
    }
    plan.n_trunc = last_live;
    if (last_live >= 0)
        plan.per_term.assign(all.begin(), all.begin() + last_live + 1);

    double tail = 0.0;
    for (int k = last_live + 1; k < kMaxTerms + 64; ++k) {
        double b = magnitude_bound(k, params, t);
        tail += b;
        if (b < 1e-18) break;
    }
    for (const auto& tb : plan.per_term)
        if (tb.skip) tail += magnitude_bound(tb.k, params, t);
    plan.skipped_tail_bound = tail;
    return plan;
}

Solver::Solver(ProblemBundle bundle, DriverOptions opts)
    : bundle_(std::move(bundle)), opts_(std::move(opts)) {
    shifted_ = shift_to_origin(bundle_.spec);
    if (opts_.run_validation) {
        validation_ = validate_membership(bundle_.spec, bundle_.params, bundle_.tag,
                                          opts_.validation_probes, 1);
        if (!validation_->v_ok || !validation_->V_ok)
            std::fprintf(stderr,
                         "[fk] warning: class membership violated (|v|/rho <= %.3g vs beta1=%.3g,"
                         " |V|/rho <= %.3g vs beta2=%.3g); error guarantees are advisory\n",
                         validation_->v_measured_norm, bundle_.params.beta1,
                         validation_->V_measured_norm, bundle_.params.beta2);
    }
}

BudgetPlan Solver::plan(double eps, Mode mode) const {
    return plan_budget(eps, bundle_.params, bundle_.spec.t_star, mode);
}

std::shared_ptr<const SparseApprox> Solver::term_approx(int k, double eps_term,
                                                        std::uint64_t* precompute_samples) {
    auto key = std::make_pair(k, bits_of(eps_term));
    auto it = cache_.find(key);
    if (it != cache_.end()) {
        if (precompute_samples) *precompute_samples = 0;
        return it->second;
    }
    const ProblemSpec& s = shifted_;
    TensorField h = [&s, k](std::span<const double> pts) {
        return product_h(s.v, s.V, pts, k, s.d);
    };
    auto ap = std::make_shared<SparseApprox>(
        build_sparse(h, eps_term, k, s.d, bundle_.tag, bundle_.params, opts_.build));
    PrecomputeOptions popts;
    popts.cache_dir = opts_.precompute_dir;
    PrecomputeStats stats = precompute_cv_weights(*ap, s.t_star, popts);
    if (precompute_samples) *precompute_samples = stats.samples_used;
    cache_.emplace(key, ap);
    return ap;
}

SolveReport Solver::solve(double eps, Mode mode, std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.eps = eps;
    rep.mode = mode;
    rep.seed = seed;

    BudgetPlan plan = plan_budget(eps, bundle_.params, bundle_.spec.t_star, mode);
    rep.n_trunc = plan.n_trunc;
    if (plan.n_trunc < 0) {
        rep.trivial_accuracy = true;
        rep.estimate = 0.0;
        rep.reported_error = plan.skipped_tail_bound;
        rep.wall_time_s = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
        return rep;
    }

    double var_sum = 0.0;
    for (const TermBudget& tb : plan.per_term) {
        TermReport tr;
        tr.k = tb.k;
        tr.eps_term = tb.eps_term;
        tr.skip = tb.skip;
        if (tb.skip) {
            rep.per_term.push_back(tr);
            continue;
        }
        std::uint64_t pre_samples = 0;
        auto ap = term_approx(tb.k, tb.eps_term, &pre_samples);
        tr.build_evals = ap->n_nodes;
        tr.nodes = ap->n_entries;
        tr.probe_error = ap->probe_error;
        tr.cv_error = ap->cv_error_bound();
        tr.certified = ap->certified;
        tr.precompute_samples = pre_samples;

        TermEstimate est;
        if (mode == Mode::rand) {
            tr.m = plan.m;
            RngStream stream = make_stream(seed, stream_purpose::monte_carlo, tb.k, 0);
            est = phi_rand(shifted_, tb.eps_term, plan.m, tb.k, *ap, stream);
        } else {
            tr.kappa = plan.kappa * static_cast<std::uint64_t>(opts_.kappa_safety);
            RngStream stream = make_stream(seed, stream_purpose::quantum_samples, tb.k, 0);
            est = phi_quant(shifted_, tb.eps_term, static_cast<int>(tr.kappa), tb.k, *ap,
                            stream, opts_.query_model);
        }
        tr.value = est.value;
        tr.std_error = est.std_error;
        tr.n_evals = est.n_evals;
        tr.queries = est.queries;
        tr.sim_evals = est.sim_evals;

        rep.estimate += tr.value;
        if (std::isfinite(tr.std_error)) var_sum += tr.std_error * tr.std_error;
        rep.per_term.push_back(tr);
    }

    for (const auto& tr : rep.per_term) {
        rep.total_evals += tr.build_evals + tr.n_evals;
        rep.total_queries += tr.queries;
        rep.total_sim_evals += tr.sim_evals;
        rep.total_precompute_samples += tr.precompute_samples;
    }
    rep.reported_error = std::sqrt(var_sum) + plan.skipped_tail_bound;
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

SweepResult Solver::cost_sweep(const std::vector<double>& eps_list, Mode mode,
                               int replicates, std::uint64_t seed) {
    if (replicates < 1) throw std::invalid_argument("cost_sweep: replicates >= 1");
    OracleResult ref = reference_solution(bundle_.spec);

    SweepResult out;
    for (double eps : eps_list) {
        double se = 0.0;
        std::uint64_t evals = 0, queries = 0;
        for (int r = 0; r < replicates; ++r) {
            std::uint64_t rep_seed = rng_detail::splitmix64(seed ^ (0xC0FFEEULL + r));
            SolveReport rep = solve(eps, mode, rep_seed);
            double err = rep.estimate - ref.value;
            se += err * err;
            if (r == 0) {
                evals = rep.total_evals;
                queries = rep.total_queries;
            }
        }
        SweepRow row;
        row.eps = eps;
        row.rmse = std::sqrt(se / replicates);
        row.evals = evals;
        row.queries = queries;
        out.rows.push_back(row);
    }

    if (out.rows.size() >= 2) {
        // least-squares slope of log(cost) against log(1/eps)
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int n = 0;
        for (const auto& row : out.rows) {
            double cost = static_cast<double>(row.evals + row.queries);
            if (cost <= 0.0) continue;
            double x = std::log(1.0 / row.eps);
            double y = std::log(cost);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        if (n >= 2) {
            double denom = n * sxx - sx * sx;
            if (denom > 0.0) out.slope = (n * sxy - sx * sy) / denom;
        }
    }
    return out;
}

} // namespace fk
