#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fk/driver.hpp"
#include "fk/series.hpp"

#include <cmath>

using namespace fk;

namespace {

ProblemBundle v1_cpot_bundle(double c) {
    ProblemBundle b;
    b.name = "v1_cpot_d1";
    FieldDesc one{.preset = "constant", .value = 1.0};
    FieldDesc pot{.preset = "constant", .value = c, .trunc_radius = 3.0, .trunc_width = 2.0};
    b.spec.d = 1;
    b.spec.t_star = 1.0;
    b.spec.u_star = {0.0};
    b.spec.v = make_field(one, 1);
    b.spec.V = make_field(pot, 1);
    b.spec.v_desc = one;
    b.spec.V_desc = pot;
    b.tag = {ClassKind::Custom, 5.0};
    b.params = {1.05, std::max(0.01, 2.0 * std::abs(c)), 1.0, 1.0, 1};
    return b;
}

} // namespace

TEST_CASE("budget formulas reproduce the worked values") {
    ClassParams p{1.0, 1.0, 1.0, 1.0, 1};
    BudgetPlan plan = plan_budget(0.01, p, 1.0, Mode::rand);
    REQUIRE(!plan.per_term.empty());
    // eps^{2/3}/2 for k = 0
    CHECK(plan.per_term[0].eps_term == doctest::Approx(0.023207944).epsilon(1e-8));
    CHECK(plan.m == 22);  // ceil(eps^{-2/3}) = ceil(21.54)

    BudgetPlan quant = plan_budget(0.01, p, 1.0, Mode::quant);
    CHECK(quant.kappa == 10);  // ceil(eps^{-1/2})
    // eps^{1/(alpha+1)} k! / (2^{k+2}) at k = 0: 0.1 / 4
    CHECK(quant.per_term[0].eps_term == doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("eps_term eventually grows with k (factorial wins)") {
    ClassParams p{1.0, 1.0, 1.0, 1.0, 1};
    BudgetPlan plan = plan_budget(0.02, p, 1.0, Mode::rand);
    REQUIRE(plan.n_trunc >= 3);
    double prev = 0.0;
    bool growing = false;
    for (const auto& tb : plan.per_term) {
        if (tb.k >= 2) {
            if (tb.eps_term > prev) growing = true;
        }
        prev = tb.eps_term;
    }
    CHECK(growing);
}

TEST_CASE("huge eps truncates everything to the trivial answer") {
    ClassParams p{0.5, 0.5, 1.0, 1.0, 1};
    BudgetPlan plan = plan_budget(4.0, p, 1.0, Mode::rand);
    CHECK(plan.n_trunc == -1);

    ProblemBundle b = v1_cpot_bundle(0.25);
    b.params = p;
    Solver solver(b, DriverOptions{});
    SolveReport rep = solver.solve(4.0, Mode::rand, 1);
    CHECK(rep.trivial_accuracy);
    CHECK(rep.estimate == 0.0);
}

TEST_CASE("solve: v = 1, V = 0 recovers 1 within eps") {
    Solver solver(make_problem_preset("v1_V0_d1"), DriverOptions{});
    SolveReport rep = solver.solve(0.05, Mode::rand, 21);
    CHECK(std::abs(rep.estimate - 1.0) <= 0.05);
    CHECK(rep.total_queries == 0);
    CHECK_FALSE(rep.trivial_accuracy);
}

TEST_CASE("solve: gaussian bump in d = 2 recovers 1/3") {
    Solver solver(make_problem_preset("gauss_V0_d2"), DriverOptions{});
    SolveReport rep = solver.solve(0.02, Mode::rand, 5);
    CHECK(std::abs(rep.estimate - 1.0 / 3.0) <=
          std::max(3.0 * rep.reported_error, 0.02));
}

TEST_CASE("solve: constant potential sums the series to e^{ct}") {
    Solver solver(v1_cpot_bundle(0.25), DriverOptions{});
    BudgetPlan plan = solver.plan(0.02, Mode::rand);
    CHECK(plan.n_trunc >= 3);  // genuine multi-term summation
    SolveReport rep = solver.solve(0.02, Mode::rand, 9);
    CHECK(std::abs(rep.estimate - std::exp(0.25)) <= 0.02);
}

TEST_CASE("per-term budget sufficiency on the constant-potential case") {
    Solver solver(v1_cpot_bundle(0.25), DriverOptions{});
    const double eps = 0.05;
    SolveReport rep = solver.solve(eps, Mode::rand, 3);
    for (const auto& tr : rep.per_term) {
        if (tr.skip) continue;
        // reported per-term error within its budget share
        CHECK(tr.std_error <= eps / std::pow(2.0, tr.k + 1) * 1.5);
    }
}

TEST_CASE("report totals equal the sum of the itemized parts") {
    Solver solver(v1_cpot_bundle(-0.5), DriverOptions{});
    SolveReport rep = solver.solve(0.05, Mode::quant, 17);
    std::uint64_t evals = 0, queries = 0, sim = 0, pre = 0;
    double value = 0.0;
    for (const auto& tr : rep.per_term) {
        evals += tr.build_evals + tr.n_evals;
        queries += tr.queries;
        sim += tr.sim_evals;
        pre += tr.precompute_samples;
        value += tr.value;
    }
    CHECK(rep.total_evals == evals);
    CHECK(rep.total_queries == queries);
    CHECK(rep.total_sim_evals == sim);
    CHECK(rep.total_precompute_samples == pre);
    CHECK(rep.estimate == doctest::Approx(value));
    CHECK(rep.total_queries > 0);
}

TEST_CASE("solve is deterministic in the seed") {
    ProblemBundle b = make_problem_preset("gauss_cpot_d1", 0.25);
    Solver s1(b, DriverOptions{});
    Solver s2(b, DriverOptions{});
    SolveReport r1 = s1.solve(0.05, Mode::rand, 123);
    SolveReport r2 = s2.solve(0.05, Mode::rand, 123);
    CHECK(r1.estimate == r2.estimate);
    CHECK(r1.reported_error == r2.reported_error);
    // a fresh seed draws fresh residual samples
    SolveReport r3 = s1.solve(0.05, Mode::rand, 124);
    CHECK(r3.estimate != r1.estimate);
}

TEST_CASE("cost sweep emits rows and a slope when it can") {
    Solver solver(v1_cpot_bundle(0.25), DriverOptions{});

    SweepResult single = solver.cost_sweep({0.1}, Mode::rand, 2, 1);
    CHECK(single.rows.size() == 1);
    CHECK_FALSE(single.slope.has_value());
    CHECK(single.rows[0].queries == 0);  // randomized mode consumes no queries

    SweepResult multi = solver.cost_sweep({0.1, 0.05, 0.025}, Mode::rand, 3, 1);
    REQUIRE(multi.rows.size() == 3);
    CHECK(multi.slope.has_value());
    CHECK(*multi.slope > 0.0);
    for (const auto& row : multi.rows) CHECK(row.rmse <= row.eps);
}

TEST_CASE("quantum mode books queries and excludes simulation evals from cost") {
    Solver solver(make_problem_preset("gauss_V0_d1"), DriverOptions{});
    SolveReport rep = solver.solve(0.05, Mode::quant, 2);
    CHECK(rep.total_queries > 0);
    CHECK(rep.total_sim_evals > 0);
    for (const auto& tr : rep.per_term) {
        if (tr.skip) continue;
        CHECK(tr.n_evals == 0);  // no classical residual evals in quant mode
        CHECK(tr.queries == tr.kappa * 5u);
    }
    CHECK(std::abs(rep.estimate - 1.0 / std::sqrt(3.0)) <= 0.05);
}

TEST_CASE("N_trunc grows slowly as eps shrinks") {
    ClassParams p{1.0, 1.0, 1.0, 1.0, 1};
    int n1 = plan_budget(0.1, p, 1.0, Mode::rand).n_trunc;
    int n2 = plan_budget(0.01, p, 1.0, Mode::rand).n_trunc;
    int n3 = plan_budget(0.001, p, 1.0, Mode::rand).n_trunc;
    CHECK(n2 - n1 <= 6);  // a decade costs at most a few extra terms
    CHECK(n3 - n2 <= 6);
    CHECK(n2 >= n1);
    CHECK(n3 >= n2);
}
