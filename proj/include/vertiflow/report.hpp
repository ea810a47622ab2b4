#pragma once

// Comparison reporting on top of the equilibrium and selection solvers:
//
//  * the ground-only baseline every improvement is measured against,
//  * budget sweeps that solve the exact selection (and optionally the
//    knapsack heuristic) at a list of budgets and tabulate loading
//    reductions, and
//  * stable CSV / JSON serialization for equilibria, selections, and sweep
//    tables, with importers that reverse the JSON writers exactly.
//
// All quantities reported per link are the loading summands
// (c + p + D^T q)_k (X 1)_k, whose sum over every link equals the loading
// objective at a refined optimum.  File schemas are documented in
// docs/outputs.md.

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vertiflow/equilibrium.hpp"
#include "vertiflow/ingest.hpp"
#include "vertiflow/selection.hpp"

namespace vertiflow {

// ---------------------------------------------------------------------------
// Per-link loading vectors
// ---------------------------------------------------------------------------

/// All loading summands of an equilibrium: effective_cost_k * total_flow_k.
inline std::vector<double> link_loadings(const Equilibrium& eq) {
    std::vector<double> out(eq.total_flow.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = eq.effective_cost[k] * eq.total_flow[k];
    return out;
}

/// Loading summands of a selection optimum: (c + p + D^T q)_k (X 1)_k with
/// the vertiport delays priced through the incidence.
inline std::vector<double> link_loadings(const HybridNetwork& net, const IncidenceMatrices& inc,
                                         const SelectionSolution& sol) {
    const auto c = net.free_times();
    const auto charge = detail::vertiport_charge(inc, sol.q);
    const auto flow = sol.X.row_sums();
    std::vector<double> out(flow.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = (c[k] + sol.p[k] + charge[k]) * flow[k];
    return out;
}

/// Sum of the loading summands over ground links only.
inline double ground_loading(const HybridNetwork& net, const std::vector<double>& loadings) {
    double total = 0.0;
    for (std::size_t k = 0; k < loadings.size(); ++k)
        if (net.links[k].kind == LinkKind::ground) total += loadings[k];
    return total;
}

// ---------------------------------------------------------------------------
// Ground-only baseline
// ---------------------------------------------------------------------------

/// Equilibrium with every vertiport closed (capacity zero): the do-nothing
/// reference that sweep reductions are measured against.  Air flows are
/// forced to zero, so its loading is carried by ground links alone.
inline Equilibrium baseline_ground(const SelectionProblem& problem,
                                   const EquilibriumOptions& opts = {}) {
    const std::vector<double> closed(static_cast<std::size_t>(problem.net.vertiport_count()),
                                     0.0);
    return solve_equilibrium(problem.net, problem.inc, problem.demand, closed, opts);
}

// ---------------------------------------------------------------------------
// Selection verification
// ---------------------------------------------------------------------------

/// Independent recheck of a selection result against its problem: binary
/// structure, budget and logical feasibility, induced capacities, the
/// linearization identities, objective bookkeeping, and full KKT plus
/// used-route optimality of the embedded equilibrium certificate.  The
/// entry-wise linearization check passes at 1e-5 of the big-M value; every
/// other check uses `tol`.
inline ResidualReport verify_selection(const SelectionProblem& problem,
                                       const SelectionSolution& sol, double tol = 1e-6) {
    const int nv = problem.candidate_count();
    const int nc = problem.option_count();
    if (sol.B.rows() != nv || sol.B.cols() != nc || sol.Y.rows() != nv || sol.Y.cols() != nc)
        throw ValidationError("selection matrices do not match the problem's candidates/options");
    const int nl = problem.net.link_count();
    const int nd = problem.demand.destination_count();
    if (sol.X.rows() != nl || sol.X.cols() != nd || static_cast<int>(sol.g.size()) != nv ||
        static_cast<int>(sol.q.size()) != nv || static_cast<int>(sol.p.size()) != nl)
        throw ValidationError("selection certificate does not match the network dimensions");

    ResidualReport rep;
    rep.tolerance = tol;
    const auto add = [&rep](const std::string& name, double residual, double scale,
                            double threshold) {
        rep.checks.push_back({name, residual, scale, residual <= threshold});
    };

    double binary = 0.0;
    double row_excess = 0.0;
    double capacity_gap = 0.0;
    double entry_gap = 0.0;
    double cost = 0.0;
    double g_scale = 1.0;
    for (int i = 0; i < nv; ++i) {
        double row_sum = 0.0;
        double induced = 0.0;
        for (int j = 0; j < nc; ++j) {
            binary = std::max(binary, std::min(std::abs(sol.B(i, j)), std::abs(sol.B(i, j) - 1.0)));
            row_sum += sol.B(i, j);
            induced += problem.G(i, j) * sol.B(i, j);
            cost += problem.K(i, j) * sol.B(i, j);
            entry_gap = std::max(
                entry_gap, std::abs(sol.Y(i, j) - problem.G(i, j) * sol.q[static_cast<std::size_t>(i)] *
                                                      sol.B(i, j)));
            g_scale = std::max(g_scale, problem.G(i, j));
        }
        row_excess = std::max(row_excess, row_sum - 1.0);
        capacity_gap = std::max(capacity_gap, std::abs(sol.g[static_cast<std::size_t>(i)] - induced));
    }
    add("selection binary", binary, 1.0, tol);
    add("selection row sums", std::max(0.0, row_excess), 1.0, tol);
    add("installation budget", std::max(0.0, cost - problem.gamma) / (1.0 + problem.gamma),
        1.0 + problem.gamma, tol);
    add("induced capacities", capacity_gap / g_scale, g_scale, tol);

    double logical = 0.0;
    for (int r = 0; r < problem.logical_A.rows(); ++r) {
        double lhs = 0.0;
        for (int i = 0; i < nv; ++i)
            for (int j = 0; j < nc; ++j) lhs += problem.logical_A(r, i * nc + j) * sol.B(i, j);
        const double b = problem.logical_b[static_cast<std::size_t>(r)];
        logical = std::max(logical, std::max(0.0, lhs - b) / (1.0 + std::abs(b)));
    }
    add("logical rows", logical, 1.0, tol);

    const double mu_scale = sol.big_m.mu > 0.0 ? sol.big_m.mu : 1.0;
    add("linearization entries", entry_gap / mu_scale, mu_scale, 1e-5);
    double y_total = 0.0;
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) y_total += sol.Y(i, j);
    const double gq = dot(sol.g, sol.q);
    add("linearization total", std::abs(y_total - gq) / (1.0 + gq), 1.0 + gq, tol);

    add("installation cost", std::abs(sol.installation_cost - cost) / (1.0 + std::abs(cost)),
        1.0 + std::abs(cost), tol);
    add("combined objective",
        std::abs(sol.combined_objective - (sol.loading + problem.omega * sol.installation_cost)) /
            (1.0 + std::abs(sol.combined_objective)),
        1.0 + std::abs(sol.combined_objective), tol);

    // Rebuild the embedded equilibrium and hand it to the KKT and Wardrop
    // verifiers at the induced capacities.
    Equilibrium eq;
    eq.X = sol.X;
    eq.V = sol.V;
    eq.U = sol.U;
    eq.p = sol.p;
    eq.q = sol.q;
    const auto c = problem.net.free_times();
    const auto charge = detail::vertiport_charge(problem.inc, sol.q);
    eq.total_flow = eq.X.row_sums();
    eq.effective_cost.assign(static_cast<std::size_t>(nl), 0.0);
    for (int k = 0; k < nl; ++k)
        eq.effective_cost[static_cast<std::size_t>(k)] =
            c[static_cast<std::size_t>(k)] + sol.p[static_cast<std::size_t>(k)] +
            charge[static_cast<std::size_t>(k)];
    eq.objective = dot(c, eq.total_flow);
    eq.loading = network_loading(eq);
    add("reported loading", std::abs(sol.loading - eq.loading) / (1.0 + std::abs(eq.loading)),
        1.0 + std::abs(eq.loading), tol);

    const ResidualReport kkt =
        verify_kkt(problem.net, problem.inc, problem.demand, sol.g, eq, tol);
    rep.checks.insert(rep.checks.end(), kkt.checks.begin(), kkt.checks.end());
    const WardropReport wardrop =
        verify_wardrop(problem.net, problem.inc, problem.demand, eq, tol);
    rep.checks.push_back(
        {"wardrop used routes", wardrop.max_used_reduced_cost, 1.0, wardrop.pass});
    return rep;
}

// ---------------------------------------------------------------------------
// Budget sweeps
// ---------------------------------------------------------------------------

enum class SweepMethod { milp, knapsack, both };

inline const char* to_string(SweepMethod m) {
    switch (m) {
        case SweepMethod::milp: return "milp";
        case SweepMethod::knapsack: return "knapsack";
        default: return "both";
    }
}

inline SweepMethod parse_sweep_method(const std::string& name) {
    if (name == "milp") return SweepMethod::milp;
    if (name == "knapsack") return SweepMethod::knapsack;
    if (name == "both") return SweepMethod::both;
    throw ValidationError("unknown sweep method '" + name +
                          "' (expected milp, knapsack, or both)");
}

/// One solver's result at one budget.  `attempted` distinguishes a method
/// that was not requested from one that failed; failures keep the error
/// message and leave the numbers at zero.
struct MethodOutcome {
    bool attempted = false;
    bool ok = false;
    std::string error;        ///< failure message when attempted and not ok
    double objective = 0.0;   ///< combined objective, loading + omega * cost
    double reduction = 0.0;   ///< ground-loading drop vs the closed baseline
    long links_decreased = 0; ///< ground links strictly below baseline loading
    std::string selection;    ///< "node@capacity;..." summary, 1-based nodes
};

struct SweepRow {
    double gamma = 0.0;
    MethodOutcome milp;
    MethodOutcome knapsack;
};

struct SweepResult {
    Equilibrium baseline;        ///< cached closed-network equilibrium
    std::vector<SweepRow> rows;  ///< one row per requested budget, in order
};

struct SweepOptions {
    EquilibriumOptions equilibrium;  ///< baseline solve
    SelectionOptions selection;      ///< per-budget solves
    bool concurrent = true;          ///< solve budget points on worker threads
};

/// "node@capacity;..." rendering of a 0/1 selection, 1-based node ids.
inline std::string selection_summary(const HybridNetwork& net, const Mat& G, const Mat& B) {
    std::string out;
    for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j)
            if (B(i, j) > 0.5) {
                if (!out.empty()) out += ';';
                out += detail::node_name(net.vertiports[static_cast<std::size_t>(i)]);
                out += '@';
                out += detail::format_double(G(i, j));
            }
    return out;
}

namespace detail {

/// Ground links whose loading fell strictly below baseline, beyond a
/// tolerance of 1e-6 times the largest baseline summand.
inline long count_decreased(const HybridNetwork& net, const std::vector<double>& base,
                            const std::vector<double>& now) {
    double largest = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k)
        if (net.links[k].kind == LinkKind::ground) largest = std::max(largest, base[k]);
    const double tol = 1e-6 * largest;
    long count = 0;
    for (std::size_t k = 0; k < base.size(); ++k)
        if (net.links[k].kind == LinkKind::ground && base[k] - now[k] > tol) ++count;
    return count;
}

inline void fill_outcome(MethodOutcome& out, const SelectionProblem& problem,
                         const std::vector<double>& base, double base_ground,
                         const SelectionSolution& sol) {
    const auto now = link_loadings(problem.net, problem.inc, sol);
    out.objective = sol.combined_objective;
    out.reduction = base_ground - ground_loading(problem.net, now);
    out.links_decreased = count_decreased(problem.net, base, now);
    out.selection = selection_summary(problem.net, problem.G, sol.B);
    out.ok = true;
}

/// The exact objective cannot rise when the budget grows: the feasible set
/// only gains selections.  A violation means the solver returned a
/// non-optimal point, so it is an error, not a data point.
inline void check_sweep_monotone(const SweepResult& result) {
    const SweepRow* prev = nullptr;
    for (const auto& row : result.rows) {
        if (!row.milp.ok) continue;
        if (prev != nullptr) {
            const double tol = 1e-9 * (1.0 + std::abs(prev->milp.objective));
            if (row.milp.objective > prev->milp.objective + tol)
                throw SolverError("sweep objective rose from " +
                                  format_double(prev->milp.objective) + " at budget " +
                                  format_double(prev->gamma) + " to " +
                                  format_double(row.milp.objective) + " at budget " +
                                  format_double(row.gamma) +
                                  "; a larger budget can never cost more");
        }
        prev = &row;
    }
}

}  // namespace detail

/// Solve the selection at each budget in `gammas` (strictly increasing) and
/// tabulate combined objectives and ground-loading reductions against the
/// closed baseline.  Budget points are independent; failures at one budget
/// are recorded in that row and the sweep continues.
inline SweepResult run_sweep(const SelectionProblem& problem, const std::vector<double>& gammas,
                             SweepMethod method, const SweepOptions& opts = {}) {
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (!std::isfinite(gammas[i]))
            throw ValidationError("sweep budgets must be finite");
        if (i > 0 && gammas[i] <= gammas[i - 1])
            throw ValidationError("sweep budgets must be strictly increasing");
    }

    SweepResult result;
    result.baseline = baseline_ground(problem, opts.equilibrium);
    const std::vector<double> base = link_loadings(result.baseline);
    const double base_ground = ground_loading(problem.net, base);

    const auto solve_point = [&](std::size_t i) {
        SweepRow row;
        row.gamma = gammas[i];
        SelectionProblem sub = problem;
        sub.gamma = row.gamma;
        if (method != SweepMethod::knapsack) {
            row.milp.attempted = true;
            try {
                const SelectionSolution sol = solve_selection(sub, opts.selection);
                detail::fill_outcome(row.milp, problem, base, base_ground, sol);
            } catch (const std::exception& e) {
                row.milp.error = e.what();
            }
        }
        if (method != SweepMethod::milp) {
            row.knapsack.attempted = true;
            try {
                const auto w = demand_value_vector(problem.demand, problem.net.vertiports);
                const SelectionSolution sol = solve_knapsack(sub, w, opts.selection);
                detail::fill_outcome(row.knapsack, problem, base, base_ground, sol);
            } catch (const std::exception& e) {
                row.knapsack.error = e.what();
            }
        }
        return row;
    };

    result.rows.resize(gammas.size());
    bool solved = false;
    if (opts.concurrent && gammas.size() > 1) {
        try {
            std::vector<std::future<SweepRow>> futures;
            futures.reserve(gammas.size());
            for (std::size_t i = 0; i < gammas.size(); ++i)
                futures.push_back(std::async(std::launch::async, solve_point, i));
            for (std::size_t i = 0; i < gammas.size(); ++i) result.rows[i] = futures[i].get();
            solved = true;
        } catch (const std::system_error&) {
            solved = false;  // thread exhaustion: fall back to one at a time
        }
    }
    if (!solved)
        for (std::size_t i = 0; i < gammas.size(); ++i) result.rows[i] = solve_point(i);

    detail::check_sweep_monotone(result);
    return result;
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

namespace detail {

inline void csv_cell(std::string& line, const MethodOutcome& m, bool first_of_pair,
                     bool integer) {
    line += ',';
    if (!m.attempted || !m.ok) return;
    if (integer)
        line += std::to_string(m.links_decreased);
    else
        line += format_double(first_of_pair ? m.objective : m.reduction);
}

}  // namespace detail

/// Sweep table with one row per budget.  Columns are stable; cells of a
/// method that was skipped or failed are left empty.
inline void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    os << "gamma,obj_milp,obj_knapsack,reduction_milp,reduction_knapsack,"
          "links_decreased_milp,links_decreased_knapsack\n";
    for (const auto& row : result.rows) {
        std::string line = detail::format_double(row.gamma);
        detail::csv_cell(line, row.milp, true, false);
        detail::csv_cell(line, row.knapsack, true, false);
        detail::csv_cell(line, row.milp, false, false);
        detail::csv_cell(line, row.knapsack, false, false);
        detail::csv_cell(line, row.milp, false, true);
        detail::csv_cell(line, row.knapsack, false, true);
        os << line << '\n';
    }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ostringstream ss;
    write_sweep_csv(ss, result);
    detail::write_text_file(path, ss.str());
}

namespace detail {

inline void loading_rows(std::ostream& os, const HybridNetwork& net,
                         const std::vector<double>& flow, const std::vector<double>& cost) {
    os << "link,start,end,kind,free_flow_time,capacity,flow,effective_cost,loading\n";
    for (int k = 0; k < net.link_count(); ++k) {
        const Link& l = net.links[static_cast<std::size_t>(k)];
        const std::size_t s = static_cast<std::size_t>(k);
        os << (k + 1) << ',' << node_name(l.tail) << ',' << node_name(l.head) << ','
           << (l.kind == LinkKind::ground ? "ground" : "air") << ','
           << format_double(l.free_time) << ',' << format_double(l.capacity) << ','
           << format_double(flow[s]) << ',' << format_double(cost[s]) << ','
           << format_double(flow[s] * cost[s]) << '\n';
    }
}

}  // namespace detail

/// Per-link loading table of an equilibrium; the loading column sums to the
/// reported loading objective.
inline void write_loading_csv(std::ostream& os, const HybridNetwork& net, const Equilibrium& eq) {
    detail::loading_rows(os, net, eq.total_flow, eq.effective_cost);
}

inline void write_loading_csv(const std::string& path, const HybridNetwork& net,
                              const Equilibrium& eq) {
    std::ostringstream ss;
    write_loading_csv(ss, net, eq);
    detail::write_text_file(path, ss.str());
}

/// Per-link loading table of a selection optimum.
inline void write_loading_csv(std::ostream& os, const HybridNetwork& net,
                              const IncidenceMatrices& inc, const SelectionSolution& sol) {
    const auto c = net.free_times();
    const auto charge = detail::vertiport_charge(inc, sol.q);
    std::vector<double> cost(c.size());
    for (std::size_t k = 0; k < cost.size(); ++k) cost[k] = c[k] + sol.p[k] + charge[k];
    detail::loading_rows(os, net, sol.X.row_sums(), cost);
}

inline void write_loading_csv(const std::string& path, const HybridNetwork& net,
                              const IncidenceMatrices& inc, const SelectionSolution& sol) {
    std::ostringstream ss;
    write_loading_csv(ss, net, inc, sol);
    detail::write_text_file(path, ss.str());
}

// ---------------------------------------------------------------------------
// JSON writers and readers
// ---------------------------------------------------------------------------

namespace detail {

inline json mat_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

[[noreturn]] inline void record_error(const std::string& path, const std::string& msg) {
    throw ParseError(path, 0, msg);
}

inline const json& require_key(const std::string& path, const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) record_error(path, std::string("missing key '") + key + "'");
    return *it;
}

inline double require_number(const std::string& path, const json& j, const char* key) {
    const json& v = require_key(path, j, key);
    if (!v.is_number()) record_error(path, std::string("key '") + key + "' must be a number");
    return v.get<double>();
}

inline long require_integer(const std::string& path, const json& j, const char* key) {
    const json& v = require_key(path, j, key);
    if (!v.is_number_integer())
        record_error(path, std::string("key '") + key + "' must be an integer");
    return v.get<long>();
}

inline bool require_bool(const std::string& path, const json& j, const char* key) {
    const json& v = require_key(path, j, key);
    if (!v.is_boolean()) record_error(path, std::string("key '") + key + "' must be a boolean");
    return v.get<bool>();
}

inline std::string require_string(const std::string& path, const json& j, const char* key) {
    const json& v = require_key(path, j, key);
    if (!v.is_string()) record_error(path, std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
}

inline std::vector<double> require_vector(const std::string& path, const json& j,
                                          const char* key) {
    const json& v = require_key(path, j, key);
    if (!v.is_array()) record_error(path, std::string("key '") + key + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number())
            record_error(path, std::string("key '") + key + "' must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline Mat require_matrix(const std::string& path, const json& j, const char* key) {
    const json& v = require_key(path, j, key);
    if (!v.is_array()) record_error(path, std::string("key '") + key + "' must be an array");
    if (v.empty()) return Mat(0, 0);
    const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
    Mat m(static_cast<int>(v.size()), static_cast<int>(cols));
    int i = 0;
    for (const auto& row : v) {
        if (!row.is_array() || row.size() != cols)
            record_error(path, std::string("key '") + key +
                                   "' must be an array of equal-length number rows");
        int k = 0;
        for (const auto& e : row) {
            if (!e.is_number())
                record_error(path, std::string("key '") + key + "' must contain only numbers");
            m(i, k++) = e.get<double>();
        }
        ++i;
    }
    return m;
}

/// Read a JSON document and check its envelope: format_version 1 and the
/// expected kind tag.
inline json load_json(const std::string& path, const char* kind) {
    std::string text;
    {
        std::ifstream in(path);
        if (!in) throw ParseError(path, 0, "cannot open file");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path, json_line(text, e.byte), e.what());
    }
    if (!j.is_object()) record_error(path, "document must be a JSON object");
    if (require_integer(path, j, "format_version") != 1)
        record_error(path, "unsupported format_version (expected 1)");
    if (require_string(path, j, "kind") != kind)
        record_error(path, std::string("expected kind '") + kind + "'");
    return j;
}

inline void dump_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

}  // namespace detail

// --- equilibrium -----------------------------------------------------------

/// An imported equilibrium together with the vertiport capacities it was
/// solved under (needed to re-verify the certificate against a network).
struct EquilibriumRecord {
    Equilibrium eq;
    std::vector<double> g;
};

/// Full equilibrium certificate.  Residual diagnostics are derived data and
/// are recomputed on verification, so they are not serialized.
inline void write_equilibrium_json(std::ostream& os, const Equilibrium& eq,
                                   const std::vector<double>& g) {
    detail::json j;
    j["format_version"] = 1;
    j["kind"] = "equilibrium";
    j["loading"] = eq.loading;
    j["objective"] = eq.objective;
    j["g"] = g;
    j["p"] = eq.p;
    j["q"] = eq.q;
    j["X"] = detail::mat_json(eq.X);
    j["V"] = detail::mat_json(eq.V);
    j["U"] = detail::mat_json(eq.U);
    j["effective_cost"] = eq.effective_cost;
    j["total_flow"] = eq.total_flow;
    detail::dump_json(os, j);
}

inline void write_equilibrium_json(const std::string& path, const Equilibrium& eq,
                                   const std::vector<double>& g) {
    std::ostringstream ss;
    write_equilibrium_json(ss, eq, g);
    detail::write_text_file(path, ss.str());
}

inline EquilibriumRecord read_equilibrium_json(const std::string& path) {
    const detail::json j = detail::load_json(path, "equilibrium");
    EquilibriumRecord rec;
    rec.eq.loading = detail::require_number(path, j, "loading");
    rec.eq.objective = detail::require_number(path, j, "objective");
    rec.g = detail::require_vector(path, j, "g");
    rec.eq.p = detail::require_vector(path, j, "p");
    rec.eq.q = detail::require_vector(path, j, "q");
    rec.eq.X = detail::require_matrix(path, j, "X");
    rec.eq.V = detail::require_matrix(path, j, "V");
    rec.eq.U = detail::require_matrix(path, j, "U");
    rec.eq.effective_cost = detail::require_vector(path, j, "effective_cost");
    rec.eq.total_flow = detail::require_vector(path, j, "total_flow");

    const int nl = rec.eq.X.rows();
    const int nd = rec.eq.X.cols();
    if (rec.eq.U.rows() != nl || rec.eq.U.cols() != nd)
        detail::record_error(path, "'U' must match the shape of 'X'");
    if (rec.eq.V.cols() != nd)
        detail::record_error(path, "'V' must have one column per destination");
    if (static_cast<int>(rec.eq.p.size()) != nl)
        detail::record_error(path, "'p' must have one entry per link");
    if (static_cast<int>(rec.eq.effective_cost.size()) != nl ||
        static_cast<int>(rec.eq.total_flow.size()) != nl)
        detail::record_error(path, "'effective_cost' and 'total_flow' must have one entry per link");
    if (rec.eq.q.size() != rec.g.size())
        detail::record_error(path, "'q' must have one entry per vertiport, matching 'g'");
    return rec;
}

// --- selection --------------------------------------------------------------

/// Full selection certificate.  Wall-clock time is deliberately excluded so
/// repeated runs of the same problem serialize byte-identically.
inline void write_selection_json(std::ostream& os, const SelectionSolution& sol) {
    detail::json j;
    j["format_version"] = 1;
    j["kind"] = "selection";
    j["combined_objective"] = sol.combined_objective;
    j["loading"] = sol.loading;
    j["installation_cost"] = sol.installation_cost;
    j["B"] = detail::mat_json(sol.B);
    j["g"] = sol.g;
    j["Y"] = detail::mat_json(sol.Y);
    j["X"] = detail::mat_json(sol.X);
    j["V"] = detail::mat_json(sol.V);
    j["U"] = detail::mat_json(sol.U);
    j["p"] = sol.p;
    j["q"] = sol.q;
    j["rel_gap"] = sol.rel_gap;
    j["nodes"] = sol.nodes;
    j["mu_retries"] = sol.mu_retries;
    j["big_m"] = detail::json{{"mu", sol.big_m.mu},
                              {"computed", sol.big_m.computed},
                              {"overridden", sol.big_m.overridden},
                              {"below_bound", sol.big_m.below_bound}};
    detail::dump_json(os, j);
}

inline void write_selection_json(const std::string& path, const SelectionSolution& sol) {
    std::ostringstream ss;
    write_selection_json(ss, sol);
    detail::write_text_file(path, ss.str());
}

inline SelectionSolution read_selection_json(const std::string& path) {
    const detail::json j = detail::load_json(path, "selection");
    SelectionSolution sol;
    sol.combined_objective = detail::require_number(path, j, "combined_objective");
    sol.loading = detail::require_number(path, j, "loading");
    sol.installation_cost = detail::require_number(path, j, "installation_cost");
    sol.B = detail::require_matrix(path, j, "B");
    sol.g = detail::require_vector(path, j, "g");
    sol.Y = detail::require_matrix(path, j, "Y");
    sol.X = detail::require_matrix(path, j, "X");
    sol.V = detail::require_matrix(path, j, "V");
    sol.U = detail::require_matrix(path, j, "U");
    sol.p = detail::require_vector(path, j, "p");
    sol.q = detail::require_vector(path, j, "q");
    sol.rel_gap = detail::require_number(path, j, "rel_gap");
    sol.nodes = detail::require_integer(path, j, "nodes");
    sol.mu_retries = static_cast<int>(detail::require_integer(path, j, "mu_retries"));
    const detail::json& bm = detail::require_key(path, j, "big_m");
    if (!bm.is_object()) detail::record_error(path, "'big_m' must be an object");
    sol.big_m.mu = detail::require_number(path, bm, "mu");
    sol.big_m.computed = detail::require_number(path, bm, "computed");
    sol.big_m.overridden = detail::require_bool(path, bm, "overridden");
    sol.big_m.below_bound = detail::require_bool(path, bm, "below_bound");

    const int nv = sol.B.rows();
    const int nc = sol.B.cols();
    if (sol.Y.rows() != nv || sol.Y.cols() != nc)
        detail::record_error(path, "'Y' must match the shape of 'B'");
    if (static_cast<int>(sol.g.size()) != nv || static_cast<int>(sol.q.size()) != nv)
        detail::record_error(path, "'g' and 'q' must have one entry per vertiport");
    const int nl = sol.X.rows();
    const int nd = sol.X.cols();
    if (sol.U.rows() != nl || sol.U.cols() != nd)
        detail::record_error(path, "'U' must match the shape of 'X'");
    if (sol.V.cols() != nd)
        detail::record_error(path, "'V' must have one column per destination");
    if (static_cast<int>(sol.p.size()) != nl)
        detail::record_error(path, "'p' must have one entry per link");
    return sol;
}

// --- sweep -------------------------------------------------------------------

namespace detail {

inline json outcome_json(const MethodOutcome& m) {
    if (!m.attempted) return nullptr;
    json j;
    j["ok"] = m.ok;
    if (m.ok) {
        j["objective"] = m.objective;
        j["reduction"] = m.reduction;
        j["links_decreased"] = m.links_decreased;
        j["selection"] = m.selection;
    } else {
        j["error"] = m.error;
    }
    return j;
}

inline MethodOutcome json_outcome(const std::string& path, const json& j, const char* key) {
    MethodOutcome m;
    const json& v = require_key(path, j, key);
    if (v.is_null()) return m;
    if (!v.is_object())
        record_error(path, std::string("key '") + key + "' must be an object or null");
    m.attempted = true;
    m.ok = require_bool(path, v, "ok");
    if (m.ok) {
        m.objective = require_number(path, v, "objective");
        m.reduction = require_number(path, v, "reduction");
        m.links_decreased = require_integer(path, v, "links_decreased");
        m.selection = require_string(path, v, "selection");
    } else {
        m.error = require_string(path, v, "error");
    }
    return m;
}

}  // namespace detail

/// Sweep table plus the baseline loading it was measured against.  Only the
/// tabulated numbers are serialized; the cached baseline certificate is an
/// in-memory convenience.
inline void write_sweep_json(std::ostream& os, const SweepResult& result) {
    detail::json j;
    j["format_version"] = 1;
    j["kind"] = "sweep";
    j["baseline_loading"] = result.baseline.loading;
    detail::json rows = detail::json::array();
    for (const auto& row : result.rows) {
        detail::json r;
        r["gamma"] = row.gamma;
        r["milp"] = detail::outcome_json(row.milp);
        r["knapsack"] = detail::outcome_json(row.knapsack);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    detail::dump_json(os, j);
}

inline void write_sweep_json(const std::string& path, const SweepResult& result) {
    std::ostringstream ss;
    write_sweep_json(ss, result);
    detail::write_text_file(path, ss.str());
}

/// Reverse of write_sweep_json.  The returned baseline carries only its
/// loading value; solver certificates are not part of the sweep file.
inline SweepResult read_sweep_json(const std::string& path) {
    const detail::json j = detail::load_json(path, "sweep");
    SweepResult result;
    result.baseline.loading = detail::require_number(path, j, "baseline_loading");
    const detail::json& rows = detail::require_key(path, j, "rows");
    if (!rows.is_array()) detail::record_error(path, "'rows' must be an array");
    double prev = 0.0;
    bool have_prev = false;
    for (const auto& r : rows) {
        if (!r.is_object()) detail::record_error(path, "'rows' must contain objects");
        SweepRow row;
        row.gamma = detail::require_number(path, r, "gamma");
        if (have_prev && row.gamma <= prev)
            detail::record_error(path, "row budgets must be strictly increasing");
        prev = row.gamma;
        have_prev = true;
        row.milp = detail::json_outcome(path, r, "milp");
        row.knapsack = detail::json_outcome(path, r, "knapsack");
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace vertiflow
