// Command-line front end: solve, sweep, precompute, validate.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include "fk/driver.hpp"
#include "fk/errors.hpp"
#include "fk/parallel.hpp"
#include "fk/report_json.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using nlohmann::json;

namespace {

struct RunConfig {
    fk::ProblemBundle bundle;
    std::optional<double> eps;
    std::string mode = "rand";
    std::uint64_t seed = 1;
    int replicates = 1;
    std::string output;
    std::string precompute_dir;
    int threads = 0;
    int kappa_safety = 16;
    std::vector<double> eps_list;
};

fk::FieldDesc parse_field(const json& j) {
    fk::FieldDesc fd;
    if (j.is_string()) {
        fd.preset = j.get<std::string>();
        return fd;
    }
    if (!j.contains("preset")) throw fk::ConfigError("function spec missing field 'preset'");
    fd.preset = j.at("preset").get<std::string>();
    if (j.contains("scale")) fd.scale = j.at("scale").get<double>();
    if (j.contains("width")) fd.width = j.at("width").get<double>();
    if (j.contains("value")) fd.value = j.at("value").get<double>();
    if (j.contains("curvature")) fd.curvature = j.at("curvature").get<double>();
    if (j.contains("trunc_radius")) fd.trunc_radius = j.at("trunc_radius").get<double>();
    if (j.contains("trunc_width")) fd.trunc_width = j.at("trunc_width").get<double>();
    return fd;
}

fk::ProblemBundle parse_problem(const json& cfg) {
    if (!cfg.contains("problem")) throw fk::ConfigError("config missing field 'problem'");
    const json& p = cfg.at("problem");
    fk::ProblemBundle bundle;
    if (p.is_string()) {
        bundle = fk::make_problem_preset(p.get<std::string>());
    } else if (p.contains("preset")) {
        double c = p.value("c", 0.25);
        bundle = fk::make_problem_preset(p.at("preset").get<std::string>(), c);
    } else {
        fk::ProblemSpec spec;
        if (!p.contains("d")) throw fk::ConfigError("problem missing field 'd'");
        if (!p.contains("t_star")) throw fk::ConfigError("problem missing field 't_star'");
        spec.d = p.at("d").get<int>();
        spec.t_star = p.at("t_star").get<double>();
        if (spec.d < 1) throw fk::ConfigError("problem field 'd' must be >= 1");
        if (!(spec.t_star > 0)) throw fk::ConfigError("problem field 't_star' must be > 0");
        spec.u_star.assign(spec.d, 0.0);
        if (p.contains("u_star")) {
            auto u = p.at("u_star").get<std::vector<double>>();
            if (static_cast<int>(u.size()) != spec.d)
                throw fk::ConfigError("problem field 'u_star' must have d entries");
            spec.u_star = std::move(u);
        }
        if (!p.contains("v") || !p.contains("V"))
            throw fk::ConfigError("problem missing function fields 'v'/'V'");
        fk::FieldDesc vd = parse_field(p.at("v"));
        fk::FieldDesc Vd = parse_field(p.at("V"));
        spec.v = fk::make_field(vd, spec.d);
        spec.V = fk::make_field(Vd, spec.d);
        spec.v_desc = vd;
        spec.V_desc = Vd;
        bundle.name = "custom";
        bundle.spec = std::move(spec);
        bundle.tag = {fk::ClassKind::Custom, 4.0};
        bundle.params = {1.0, 1.0, 1.0, 1.0, 1};
    }
    if (cfg.contains("class")) {
        const json& c = cfg.at("class");
        if (c.contains("kind")) {
            std::string kind = c.at("kind").get<std::string>();
            if (kind == "gaussian" || kind == "weighted_sobolev_gaussian")
                bundle.tag.kind = fk::ClassKind::WeightedSobolevGaussian;
            else if (kind == "custom")
                bundle.tag.kind = fk::ClassKind::Custom;
            else
                throw fk::ConfigError("unknown class kind '" + kind + "'");
        }
        if (c.contains("L")) bundle.tag.domain_halfwidth_L = c.at("L").get<double>();
        if (c.contains("beta1")) bundle.params.beta1 = c.at("beta1").get<double>();
        if (c.contains("beta2")) bundle.params.beta2 = c.at("beta2").get<double>();
        if (c.contains("alpha")) bundle.params.alpha = c.at("alpha").get<double>();
        if (c.contains("embed_K")) bundle.params.embed_K = c.at("embed_K").get<double>();
        if (c.contains("r")) bundle.params.smoothness_r = c.at("r").get<int>();
        if (bundle.params.beta1 <= 0 || bundle.params.beta2 <= 0 ||
            bundle.params.alpha <= 0 || bundle.params.embed_K <= 0 ||
            bundle.params.smoothness_r < 1)
            throw fk::ConfigError("class parameters must be strictly positive");
    }
    return bundle;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fk::ConfigError("cannot open config file '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw fk::ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig rc;
    rc.bundle = parse_problem(cfg);
    if (cfg.contains("eps")) rc.eps = cfg.at("eps").get<double>();
    rc.mode = cfg.value("mode", std::string("rand"));
    rc.seed = cfg.value("seed", 1ULL);
    rc.replicates = cfg.value("replicates", 1);
    rc.output = cfg.value("output", std::string());
    rc.precompute_dir = cfg.value("precompute_dir", std::string());
    rc.threads = cfg.value("threads", 0);
    rc.kappa_safety = cfg.value("kappa_safety", 16);
    if (cfg.contains("eps_list")) rc.eps_list = cfg.at("eps_list").get<std::vector<double>>();
    return rc;
}

void check_run_config(const RunConfig& rc, bool need_eps) {
    if (need_eps && !rc.eps) throw fk::ConfigError("config missing required field 'eps'");
    if (rc.eps && !(*rc.eps > 0.0)) throw fk::ConfigError("field 'eps' must be positive");
    if (rc.replicates < 1) throw fk::ConfigError("field 'replicates' must be >= 1");
    if (rc.mode != "rand" && rc.mode != "quant" && rc.mode != "both")
        throw fk::ConfigError("field 'mode' must be rand, quant or both");
}

fk::DriverOptions driver_options(const RunConfig& rc) {
    fk::DriverOptions opts;
    opts.precompute_dir = rc.precompute_dir;
    opts.kappa_safety = rc.kappa_safety;
    return opts;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write output file '" + path + "'");
    out << text;
}

nlohmann::ordered_json solve_one_mode(fk::Solver& solver, const RunConfig& rc,
                                      fk::Mode mode) {
    if (rc.replicates == 1) {
        fk::SolveReport rep = solver.solve(*rc.eps, mode, rc.seed);
        std::cerr << "[fkpath] mode=" << fk::mode_name(mode) << " estimate=" << rep.estimate
                  << " reported_error=" << rep.reported_error
                  << " evals=" << rep.total_evals << " queries=" << rep.total_queries << "\n";
        return fk::report_to_json(rep);
    }
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    double mean = 0.0;
    for (int r = 0; r < rc.replicates; ++r) {
        std::uint64_t rs = fk::rng_detail::splitmix64(rc.seed ^ (0xC0FFEEULL + r));
        fk::SolveReport rep = solver.solve(*rc.eps, mode, rs);
        mean += rep.estimate;
        arr.push_back(fk::report_to_json(rep));
    }
    mean /= rc.replicates;
    std::cerr << "[fkpath] mode=" << fk::mode_name(mode) << " replicates=" << rc.replicates
              << " mean_estimate=" << mean << "\n";
    nlohmann::ordered_json out;
    out["replicates"] = std::move(arr);
    out["mean_estimate"] = mean;
    return out;
}

int cmd_solve(const RunConfig& rc) {
    fk::Solver solver(rc.bundle, driver_options(rc));
    nlohmann::ordered_json doc;
    if (rc.mode == "both") {
        doc["rand"] = solve_one_mode(solver, rc, fk::Mode::rand);
        doc["quant"] = solve_one_mode(solver, rc, fk::Mode::quant);
    } else {
        doc = solve_one_mode(solver, rc, rc.mode == "rand" ? fk::Mode::rand : fk::Mode::quant);
    }
    write_output(rc.output, doc.dump(2) + "\n");
    return 0;
}

int cmd_sweep(const RunConfig& rc) {
    if (rc.eps_list.empty()) throw fk::ConfigError("sweep requires field 'eps_list'");
    if (rc.mode == "both") throw fk::ConfigError("sweep requires mode rand or quant");
    fk::Solver solver(rc.bundle, driver_options(rc));
    fk::SweepResult sweep = solver.cost_sweep(
        rc.eps_list, rc.mode == "rand" ? fk::Mode::rand : fk::Mode::quant, rc.replicates,
        rc.seed);
    write_output(rc.output, fk::sweep_to_csv(sweep));
    return 0;
}

int cmd_precompute(const RunConfig& rc) {
    fk::Solver solver(rc.bundle, driver_options(rc));
    for (const char* m : {"rand", "quant"}) {
        if (rc.mode != "both" && rc.mode != m) continue;
        fk::Mode mode = std::string_view(m) == "rand" ? fk::Mode::rand : fk::Mode::quant;
        fk::BudgetPlan plan = solver.plan(*rc.eps, mode);
        for (const auto& tb : plan.per_term) {
            if (tb.skip) continue;
            std::uint64_t samples = 0;
            auto ap = solver.term_approx(tb.k, tb.eps_term, &samples);
            std::cout << "mode=" << m << " k=" << tb.k << " eps_term=" << tb.eps_term
                      << " nodes=" << ap->n_entries
                      << (samples == 0 ? " cache hit" : " cache miss") << " samples="
                      << samples << "\n";
        }
    }
    return 0;
}

int cmd_validate(const RunConfig& rc) {
    fk::ValidationReport vr = fk::validate_membership(rc.bundle.spec, rc.bundle.params,
                                                      rc.bundle.tag, 2000, rc.seed);
    nlohmann::ordered_json j;
    j["v_measured_norm"] = vr.v_measured_norm;
    j["V_measured_norm"] = vr.V_measured_norm;
    j["beta1"] = rc.bundle.params.beta1;
    j["beta2"] = rc.bundle.params.beta2;
    j["v_ok"] = vr.v_ok;
    j["V_ok"] = vr.V_ok;
    j["probes"] = vr.probe_count;
    write_output(rc.output, j.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feynman-Kac path integral solver (randomized and simulated-quantum)"};
    app.require_subcommand(1);

    std::string config_path;
    double eps_flag = -1.0;
    std::string mode_flag, output_flag, precompute_flag, eps_list_flag;
    std::int64_t seed_flag = -1;
    int replicates_flag = -1;
    int threads_flag = -1;

    for (auto* sub : {app.add_subcommand("solve", "compute one estimate"),
                      app.add_subcommand("sweep", "cost/accuracy sweep over eps values"),
                      app.add_subcommand("precompute", "build approximants and cv weights"),
                      app.add_subcommand("validate", "check class membership of v, V")}) {
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--eps", eps_flag, "target accuracy (overrides config)");
        sub->add_option("--mode", mode_flag, "rand | quant | both");
        sub->add_option("--seed", seed_flag, "RNG seed");
        sub->add_option("--replicates", replicates_flag, "replicate count");
        sub->add_option("--precompute-dir", precompute_flag, "cv-weight cache directory");
        sub->add_option("--threads", threads_flag, "max worker threads (0 = hardware)");
        sub->add_option("--output", output_flag, "output file (default stdout)");
        sub->add_option("--eps-list", eps_list_flag, "comma-separated eps values (sweep)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig rc = load_config(config_path);
        if (eps_flag > 0.0) rc.eps = eps_flag;
        if (!mode_flag.empty()) rc.mode = mode_flag;
        if (seed_flag >= 0) rc.seed = static_cast<std::uint64_t>(seed_flag);
        if (replicates_flag >= 1) rc.replicates = replicates_flag;
        if (!precompute_flag.empty()) rc.precompute_dir = precompute_flag;
        if (threads_flag >= 0) rc.threads = threads_flag;
        if (!output_flag.empty()) rc.output = output_flag;
        if (!eps_list_flag.empty()) {
            rc.eps_list.clear();
            std::stringstream ss(eps_list_flag);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) rc.eps_list.push_back(std::stod(tok));
        }
        fk::set_max_threads(rc.threads);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "solve") {
            check_run_config(rc, true);
            return cmd_solve(rc);
        }
        if (cmd == "sweep") {
            check_run_config(rc, false);
            return cmd_sweep(rc);
        }
        if (cmd == "precompute") {
            check_run_config(rc, true);
            return cmd_precompute(rc);
        }
        check_run_config(rc, false);
        return cmd_validate(rc);
    } catch (const fk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
