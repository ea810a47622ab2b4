// Command-line front end: parse TNTP network/trip files and a scenario,
// then solve equilibria, select vertiports (exact, enumeration oracle, or
// knapsack baseline), verify exported certificates, or sweep budgets.
//
// Exit codes: 0 success, 1 solver failure, 2 bad input (arguments, files,
// or verification), 3 infeasible model.  All runs are deterministic: the
// same inputs produce byte-identical artifacts.

#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vertiflow/report.hpp"

namespace {

using namespace vertiflow;

struct CliConfig {
    std::string net;
    std::string trips;
    std::string nodes;
    std::string scenario;
    std::string equilibrium_file;  // verify input
    std::string selection_file;    // verify input
    std::string out;
    std::string csv;
    std::string dump_lp;
    std::string method = "both";
    std::vector<double> gammas;
    std::optional<double> gamma, omega, mu, demand_scale;
    std::optional<double> feas_tol, opt_tol, verify_tol;
    std::optional<long> node_limit;
    std::optional<int> oracle_cap;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool verbose = false;
    bool quiet = false;
    bool deterministic = true;  // informational: there is no other mode
};

/// Paths are used as given; a path that does not exist is retried under
/// $VERTIFLOW_DATA before the parser reports it unreadable.
std::string resolve_path(const std::string& p) {
    namespace fs = std::filesystem;
    if (p.empty() || fs::exists(p)) return p;
    if (const char* base = std::getenv("VERTIFLOW_DATA")) {
        const fs::path candidate = fs::path(base) / p;
        if (fs::exists(candidate)) return candidate.string();
    }
    return p;
}

struct Inputs {
    ScenarioConfig sc;
    ParsedNetwork parsed;
    HybridNetwork net;
    IncidenceMatrices inc;
    DemandTable demand;
};

/// Load scenario + network + trips and apply flag overrides (flags win).
Inputs load_inputs(const CliConfig& c) {
    Inputs in;
    if (!c.scenario.empty()) in.sc = parse_scenario(resolve_path(c.scenario));
    if (c.gamma) in.sc.gamma = *c.gamma;
    if (c.omega) in.sc.omega = *c.omega;
    if (c.mu) in.sc.mu = *c.mu;
    if (c.demand_scale) in.sc.demand_scale = *c.demand_scale;
    if (c.feas_tol) in.sc.feas_tol = *c.feas_tol;
    if (c.opt_tol) in.sc.opt_tol = *c.opt_tol;
    if (c.verify_tol) in.sc.verify_tol = *c.verify_tol;
    if (c.node_limit) in.sc.node_limit = *c.node_limit;
    if (c.oracle_cap) in.sc.oracle_cap = *c.oracle_cap;

    in.parsed = c.nodes.empty()
                    ? parse_network(resolve_path(c.net))
                    : parse_network(resolve_path(c.net), resolve_path(c.nodes));
    in.net = build_network(in.parsed, in.sc);
    in.inc = build_incidence(in.net);

    const ParsedTrips trips = parse_trips(resolve_path(c.trips));
    for (const std::string& w : trips.warnings) std::cerr << "warning: " << w << "\n";
    in.demand = build_demand(trips.trips, in.sc, in.parsed.node_count);
    return in;
}

std::vector<double> scenario_capacities(const Inputs& in) {
    if (!in.sc.vertiport_capacity.empty()) return in.sc.vertiport_capacity;
    return std::vector<double>(static_cast<std::size_t>(in.net.vertiport_count()), 0.0);
}

void print_residuals(const ResidualReport& rep) {
    for (const auto& check : rep.checks)
        std::cout << "  " << (check.pass ? "ok  " : "FAIL") << "  " << check.name << "  residual "
                  << detail::format_double(check.residual) << "\n";
}

void print_equilibrium(const CliConfig& c, const Equilibrium& eq) {
    if (c.quiet) return;
    std::cout << "loading " << detail::format_double(eq.loading) << "\n"
              << "free-time objective " << detail::format_double(eq.objective) << "\n"
              << "max certificate residual " << detail::format_double(eq.residuals.max_residual())
              << " (tolerance " << detail::format_double(eq.residuals.tolerance) << ")\n";
    if (c.verbose) print_residuals(eq.residuals);
}

void print_selection(const CliConfig& c, const HybridNetwork& net, const Mat& G,
                     const SelectionSolution& sol) {
    if (c.quiet) return;
    std::cout << "vertiport  capacity\n";
    bool any = false;
    for (int i = 0; i < sol.B.rows(); ++i)
        for (int j = 0; j < sol.B.cols(); ++j)
            if (sol.B(i, j) > 0.5) {
                std::cout << "  " << detail::node_name(net.vertiports[static_cast<std::size_t>(i)])
                          << "  " << detail::format_double(G(i, j)) << "\n";
                any = true;
            }
    if (!any) std::cout << "  (none selected)\n";
    std::cout << "loading " << detail::format_double(sol.loading) << "\n"
              << "installation cost " << detail::format_double(sol.installation_cost) << "\n"
              << "combined objective " << detail::format_double(sol.combined_objective) << "\n";
    if (c.verbose)
        std::cout << "gap " << detail::format_double(sol.rel_gap) << "  nodes " << sol.nodes
                  << "  mu " << detail::format_double(sol.big_m.mu)
                  << (sol.big_m.overridden ? " (override)" : "") << "  mu retries "
                  << sol.mu_retries << "\n";
}

void print_sweep(const CliConfig& c, const SweepResult& sweep) {
    if (c.quiet) return;
    std::cout << "baseline loading " << detail::format_double(sweep.baseline.loading) << "\n";
    std::cout << "gamma | milp obj / reduction / links | knapsack obj / reduction / links\n";
    const auto cell = [](const MethodOutcome& m) -> std::string {
        if (!m.attempted) return "-";
        if (!m.ok) return "error: " + m.error;
        return detail::format_double(m.objective) + " / " + detail::format_double(m.reduction) +
               " / " + std::to_string(m.links_decreased);
    };
    for (const auto& row : sweep.rows)
        std::cout << detail::format_double(row.gamma) << " | " << cell(row.milp) << " | "
                  << cell(row.knapsack) << "\n";
}

void dump_equilibrium_lp(const std::string& path, const Inputs& in,
                         const std::vector<double>& g) {
    const LinearProgram lp = assemble_equilibrium_lp(in.net, in.inc, in.demand, g);
    std::ofstream os(path);
    if (!os) throw ParseError(path, 0, "cannot open file for writing");
    write_lp_text(lp, os, "equilibrium");
}

void dump_selection_lp(const std::string& path, SelectionProblem problem) {
    if (!(problem.mu > 0.0)) problem.mu = choose_big_m(problem).mu;
    const MixedBinaryProgram prob = assemble_selection_milp(problem);
    std::ofstream os(path);
    if (!os) throw ParseError(path, 0, "cannot open file for writing");
    write_lp_text(prob.lp, os, "selection-milp");
    os << "\\ binary columns:";
    for (int j : prob.binaries) os << " " << prob.lp.var_name(j);
    os << "\n";
}

int cmd_equilibrium(const CliConfig& c) {
    const Inputs in = load_inputs(c);
    const std::vector<double> g = scenario_capacities(in);
    if (!c.dump_lp.empty()) dump_equilibrium_lp(c.dump_lp, in, g);
    const Equilibrium eq =
        solve_equilibrium(in.net, in.inc, in.demand, g, equilibrium_options(in.sc));
    if (!eq.residuals.all_pass()) {
        std::cerr << "solver error: certificate failed its own verification: "
                  << eq.residuals.first_violation() << "\n";
        return 1;
    }
    print_equilibrium(c, eq);
    if (!c.out.empty()) write_equilibrium_json(c.out, eq, g);
    if (!c.csv.empty()) write_loading_csv(c.csv, in.net, eq);
    return 0;
}

int cmd_verify(const CliConfig& c) {
    if (c.equilibrium_file.empty() == c.selection_file.empty())
        throw ValidationError("verify needs exactly one of --equilibrium or --selection");
    const Inputs in = load_inputs(c);
    const double tol = c.verify_tol.value_or(in.sc.verify_tol);

    if (!c.equilibrium_file.empty()) {
        const EquilibriumRecord rec = read_equilibrium_json(resolve_path(c.equilibrium_file));
        if (rec.eq.X.rows() != in.net.link_count() ||
            rec.eq.X.cols() != in.demand.destination_count() ||
            rec.eq.V.rows() != in.net.node_count ||
            static_cast<int>(rec.g.size()) != in.net.vertiport_count())
            throw ValidationError("certificate dimensions do not match the model files");
        ResidualReport rep = verify_kkt(in.net, in.inc, in.demand, rec.g, rec.eq, tol);
        const WardropReport wardrop = verify_wardrop(in.net, in.inc, in.demand, rec.eq, tol);
        rep.checks.push_back(
            {"wardrop used routes", wardrop.max_used_reduced_cost, 1.0, wardrop.pass});
        if (c.verbose && !c.quiet) print_residuals(rep);
        if (!rep.all_pass()) {
            std::cerr << "verification failed: " << rep.first_violation() << "\n";
            return 2;
        }
        if (!c.quiet)
            std::cout << "equilibrium certificate verified (max residual "
                      << detail::format_double(rep.max_residual()) << ", tolerance "
                      << detail::format_double(tol) << ")\n";
        return 0;
    }

    if (in.sc.option_count() == 0)
        throw ValidationError("verifying a selection needs a scenario with capacity_options");
    const SelectionProblem problem = to_selection_problem(in.net, in.demand, in.sc);
    const SelectionSolution sol = read_selection_json(resolve_path(c.selection_file));
    const ResidualReport rep = verify_selection(problem, sol, tol);
    if (c.verbose && !c.quiet) print_residuals(rep);
    if (!rep.all_pass()) {
        std::cerr << "verification failed: " << rep.first_violation() << "\n";
        return 2;
    }
    if (!c.quiet)
        std::cout << "selection verified (max residual "
                  << detail::format_double(rep.max_residual()) << ", tolerance "
                  << detail::format_double(tol) << ")\n";
    return 0;
}

enum class SelectKind { exact, oracle, knapsack };

int cmd_select(const CliConfig& c, SelectKind kind) {
    const Inputs in = load_inputs(c);
    const SelectionProblem problem = to_selection_problem(in.net, in.demand, in.sc);
    if (!c.dump_lp.empty()) dump_selection_lp(c.dump_lp, problem);
    const SelectionOptions opts = selection_options(in.sc);
    SelectionSolution sol;
    switch (kind) {
        case SelectKind::exact: sol = solve_selection(problem, opts); break;
        case SelectKind::oracle: sol = solve_selection_oracle(problem, opts); break;
        case SelectKind::knapsack: {
            const auto w = demand_value_vector(problem.demand, problem.net.vertiports);
            sol = solve_knapsack(problem, w, opts);
            break;
        }
    }
    print_selection(c, in.net, problem.G, sol);
    if (!c.out.empty()) write_selection_json(c.out, sol);
    if (!c.csv.empty()) write_loading_csv(c.csv, in.net, in.inc, sol);
    return 0;
}

int cmd_sweep(const CliConfig& c) {
    const Inputs in = load_inputs(c);
    const SelectionProblem problem = to_selection_problem(in.net, in.demand, in.sc);
    SweepOptions opts;
    opts.equilibrium = equilibrium_options(in.sc);
    opts.selection = selection_options(in.sc);
    opts.concurrent = c.threads > 1;
    const SweepResult sweep =
        run_sweep(problem, c.gammas, parse_sweep_method(c.method), opts);
    print_sweep(c, sweep);
    for (const auto& row : sweep.rows) {
        if (row.milp.attempted && !row.milp.ok)
            std::cerr << "warning: milp failed at budget " << detail::format_double(row.gamma)
                      << ": " << row.milp.error << "\n";
        if (row.knapsack.attempted && !row.knapsack.ok)
            std::cerr << "warning: knapsack failed at budget "
                      << detail::format_double(row.gamma) << ": " << row.knapsack.error << "\n";
    }
    if (!c.out.empty()) write_sweep_json(c.out, sweep);
    if (!c.csv.empty()) write_sweep_csv(c.csv, sweep);
    return 0;
}

void add_model_options(CLI::App* sub, CliConfig& c, bool need_scenario) {
    sub->add_option("--net", c.net, "TNTP network file")->required();
    sub->add_option("--trips", c.trips, "TNTP trip table")->required();
    sub->add_option("--nodes", c.nodes, "TNTP node coordinate file");
    auto* scenario = sub->add_option("--scenario", c.scenario, "scenario JSON file");
    if (need_scenario) scenario->required();
    sub->add_option("--gamma", c.gamma, "override the installation budget");
    sub->add_option("--omega", c.omega, "override the installation cost weight");
    sub->add_option("--mu", c.mu, "override the linearization constant");
    sub->add_option("--demand-scale", c.demand_scale, "override the demand multiplier");
    sub->add_option("--feas-tol", c.feas_tol, "override the solver feasibility tolerance");
    sub->add_option("--opt-tol", c.opt_tol, "override the solver optimality tolerance");
    sub->add_option("--verify-tol", c.verify_tol, "override the certificate tolerance");
    sub->add_option("--node-limit", c.node_limit, "override the search node limit");
    sub->add_option("--oracle-cap", c.oracle_cap, "override the oracle enumeration cap");
    sub->add_option("--threads", c.threads, "parallelism degree (results are independent of it)");
    sub->add_flag("--deterministic", c.deterministic,
                  "runs are always bit-deterministic; flag kept for scripts");
    sub->add_flag("-v,--verbose", c.verbose, "print per-check diagnostics");
    sub->add_flag("-q,--quiet", c.quiet, "suppress the stdout summary");
}

void add_output_options(CLI::App* sub, CliConfig& c, const char* json_doc, const char* csv_doc) {
    sub->add_option("--out", c.out, json_doc);
    sub->add_option("--csv", c.csv, csv_doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid air-ground traffic equilibria and vertiport selection"};
    app.require_subcommand(1);
    CliConfig c;

    CLI::App* equilibrium =
        app.add_subcommand("equilibrium", "solve a capacity-constrained equilibrium");
    add_model_options(equilibrium, c, false);
    add_output_options(equilibrium, c, "write the equilibrium certificate JSON here",
                       "write the per-link loading table here");
    equilibrium->add_option("--dump-lp", c.dump_lp, "write the assembled LP in text form");

    CLI::App* verify = app.add_subcommand("verify", "re-verify an exported certificate");
    add_model_options(verify, c, false);
    verify->add_option("--equilibrium", c.equilibrium_file, "equilibrium JSON to verify");
    verify->add_option("--selection", c.selection_file, "selection JSON to verify");

    CLI::App* select = app.add_subcommand("select", "choose vertiports exactly");
    add_model_options(select, c, true);
    add_output_options(select, c, "write the selection JSON here",
                       "write the optimum's per-link loading table here");
    select->add_option("--dump-lp", c.dump_lp, "write the selection program in text form");

    CLI::App* oracle =
        app.add_subcommand("oracle", "choose vertiports by exhaustive enumeration");
    add_model_options(oracle, c, true);
    add_output_options(oracle, c, "write the selection JSON here",
                       "write the optimum's per-link loading table here");

    CLI::App* knapsack =
        app.add_subcommand("knapsack", "choose vertiports by the capacity-value heuristic");
    add_model_options(knapsack, c, true);
    add_output_options(knapsack, c, "write the selection JSON here",
                       "write the optimum's per-link loading table here");

    CLI::App* sweep = app.add_subcommand("sweep", "compare methods across budgets");
    add_model_options(sweep, c, true);
    add_output_options(sweep, c, "write the sweep table JSON here",
                       "write the sweep table CSV here");
    sweep->add_option("--gammas", c.gammas, "budgets to sweep, strictly increasing")
        ->required()
        ->delimiter(',');
    sweep->add_option("--method", c.method, "milp, knapsack, or both (default both)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (equilibrium->parsed()) return cmd_equilibrium(c);
        if (verify->parsed()) return cmd_verify(c);
        if (select->parsed()) return cmd_select(c, SelectKind::exact);
        if (oracle->parsed()) return cmd_select(c, SelectKind::oracle);
        if (knapsack->parsed()) return cmd_select(c, SelectKind::knapsack);
        if (sweep->parsed()) return cmd_sweep(c);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        if (!e.certificate().empty()) {
            double worst = 0.0;
            for (double v : e.certificate()) worst = std::max(worst, std::abs(v));
            std::cerr << "infeasibility certificate: " << e.certificate().size()
                      << " row multipliers, largest " << detail::format_double(worst) << "\n";
        }
        return 3;
    } catch (const ValidationError& e) {  // includes ParseError
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 2;  // unreachable: require_subcommand guarantees a branch above
}
