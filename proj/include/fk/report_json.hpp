#pragma once

// JSON serialization of solve reports and sweep tables. Key order is fixed
// so identical runs produce byte-identical documents (wall_time_s is the
// only volatile field).

#include "fk/driver.hpp"

#include <json.hpp>

#include <sstream>

namespace fk {

inline nlohmann::ordered_json report_to_json(const SolveReport& rep) {
    nlohmann::ordered_json j;
    j["estimate"] = rep.estimate;
    j["eps"] = rep.eps;
    j["mode"] = mode_name(rep.mode);
    j["seed"] = rep.seed;
    j["trivial_accuracy"] = rep.trivial_accuracy;
    j["reported_error"] = rep.reported_error;
    j["n_trunc"] = rep.n_trunc;
    j["total_evals"] = rep.total_evals;
    j["total_queries"] = rep.total_queries;
    j["total_sim_evals"] = rep.total_sim_evals;
    j["total_precompute_samples"] = rep.total_precompute_samples;
    j["per_term"] = nlohmann::ordered_json::array();
    for (const auto& tr : rep.per_term) {
        nlohmann::ordered_json t;
        t["k"] = tr.k;
        t["eps_term"] = tr.eps_term;
        t["m"] = tr.m;
        t["kappa"] = tr.kappa;
        t["skip"] = tr.skip;
        t["value"] = tr.value;
        t["std_error"] = tr.std_error;
        t["build_evals"] = tr.build_evals;
        t["n_evals"] = tr.n_evals;
        t["sim_evals"] = tr.sim_evals;
        t["queries"] = tr.queries;
        t["nodes"] = tr.nodes;
        t["precompute_samples"] = tr.precompute_samples;
        t["probe_error"] = tr.probe_error;
        t["cv_error"] = tr.cv_error;
        t["certified"] = tr.certified;
        j["per_term"].push_back(std::move(t));
    }
    j["wall_time_s"] = rep.wall_time_s;
    return j;
}

// CSV with header eps,rmse,evals,queries,slope_fit; the fitted slope is
// carried on the final row and echoed in a footer comment.
inline std::string sweep_to_csv(const SweepResult& sweep) {
    std::ostringstream os;
    os.precision(12);
    os << "eps,rmse,evals,queries,slope_fit\n";
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        const auto& row = sweep.rows[i];
        os << row.eps << "," << row.rmse << "," << row.evals << "," << row.queries << ",";
        if (i + 1 == sweep.rows.size() && sweep.slope) os << *sweep.slope;
        os << "\n";
    }
    if (sweep.slope) os << "# slope_fit=" << *sweep.slope << "\n";
    return os.str();
}

} // namespace fk
