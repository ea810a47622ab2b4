#pragma once

// Mixed binary programming: minimize a linear objective where a designated
// subset of variables must end at 0 or 1.  Solved exactly by LP-based branch
// and bound: best-bound node selection (ties by node id), most-fractional
// branching (ties by lowest variable index), the 0-branch explored before
// the 1-branch, warm-started simplex re-solves per node, and a lexicographic
// preference among optimal binary vectors so ties resolve deterministically.
// The search is sequential and reproducible: the same instance always
// returns the same solution and node count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <queue>
#include <vector>

#include "vertiflow/lp.hpp"

namespace vertiflow {

struct MixedBinaryProgram {
    LinearProgram lp;
    std::vector<int> binaries;  ///< variable indices restricted to {0, 1}

    void validate() const {
        std::vector<char> seen(lp.var_count(), 0);
        for (int j : binaries) {
            if (j < 0 || j >= lp.var_count())
                throw ValidationError("binary index " + std::to_string(j) + " out of range");
            if (seen[j]) throw ValidationError("binary index " + std::to_string(j) + " repeated");
            seen[j] = 1;
            if (lp.lower(j) < 0.0 || lp.upper(j) > 1.0)
                throw ValidationError("binary variable " + lp.var_name(j) +
                                      " must have bounds within [0, 1]");
        }
    }
};

enum class MbpStatus { optimal, infeasible, node_limit };

inline const char* to_string(MbpStatus s) {
    switch (s) {
        case MbpStatus::optimal: return "optimal";
        case MbpStatus::infeasible: return "infeasible";
        case MbpStatus::node_limit: return "node_limit";
    }
    return "unknown";
}

struct MbpOptions {
    SolveOptions lp;
    double int_tol = 1e-7;   ///< how far from 0/1 still counts as integral
    long node_limit = 200000;
    /// Objective value of a known feasible assignment (or +inf for none).
    /// Subtrees whose relaxation bound exceeds it are pruned, which can
    /// shrink the search dramatically.  The value must be attainable:
    /// an unattainably low cutoff makes every answer look infeasible.
    double cutoff = std::numeric_limits<double>::infinity();
};

struct MbpSolution {
    MbpStatus status = MbpStatus::infeasible;
    double objective = 0.0;
    double best_bound = 0.0;  ///< proven lower bound on the optimum
    double rel_gap = 0.0;     ///< (objective - best_bound) / (1 + |objective|)
    std::vector<double> x;
    std::vector<int> binary_values;  ///< per entry of `binaries`, 0 or 1
    LPSolution lp;                   ///< re-solve with binaries fixed (has duals);
                                     ///< the root relaxation when infeasible
    long nodes = 0;
};

inline MbpSolution solve_mbp(const MixedBinaryProgram& prob, const MbpOptions& opts = {}) {
    prob.validate();
    const int nb = static_cast<int>(prob.binaries.size());
    LpEngine engine(prob.lp);

    struct Node {
        double bound;
        long id;
        std::vector<std::int8_t> fixed;  // -1 free, 0, 1 per binary slot
        std::shared_ptr<BasisSnapshot> warm;
    };
    const auto later = [](const Node& a, const Node& b) {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(later)> open(later);

    const auto apply_bounds = [&](const std::vector<std::int8_t>& fixed) {
        engine.reset_var_bounds();
        for (int s = 0; s < nb; ++s) {
            if (fixed[s] < 0) continue;
            const double v = fixed[s];
            engine.set_var_bounds(prob.binaries[s], v, v);
        }
    };

    MbpSolution out;
    long next_id = 0;
    long nodes_solved = 0;
    bool have_incumbent = false;
    std::vector<int> incumbent_bits;
    double incumbent_obj = kInf;

    const auto tie_tol = [&]() { return 1e-9 * (1.0 + std::abs(incumbent_obj)); };
    // Tightest known upper bound: the incumbent if any, else the caller's
    // cutoff.  Bounds are compared against it with a tolerance scaled to it.
    const auto prune_ub = [&]() { return std::min(incumbent_obj, opts.cutoff); };
    const auto prune_tol = [&]() {
        const double u = prune_ub();
        return std::isfinite(u) ? 1e-9 * (1.0 + std::abs(u)) : kInf;
    };

    // Lexicographically smaller binary vector wins an objective tie.
    const auto lex_better = [](const std::vector<int>& a, const std::vector<int>& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    };

    const auto solve_node = [&](const Node& node) {
        apply_bounds(node.fixed);
        return engine.solve(opts.lp, node.warm ? node.warm.get() : nullptr);
    };

    open.push(Node{-kInf, next_id++, std::vector<std::int8_t>(nb, -1), nullptr});

    while (!open.empty()) {
        if (nodes_solved >= opts.node_limit) break;
        Node node = open.top();
        open.pop();
        if (node.bound > prune_ub() + prune_tol()) continue;

        ++nodes_solved;
        const LPSolution rel = solve_node(node);
        if (rel.status == LpStatus::infeasible) {
            if (nodes_solved == 1) out.lp = rel;  // root certificate
            continue;
        }
        if (rel.status == LpStatus::unbounded)
            throw SolverError("binary program relaxation is unbounded");
        if (rel.status != LpStatus::optimal)
            throw SolverError("node relaxation stopped at its iteration limit");
        if (rel.objective > prune_ub() + prune_tol()) continue;

        // Most fractional binary; ties go to the lowest variable index.
        int branch_slot = -1;
        double best_frac = opts.int_tol;
        for (int s = 0; s < nb; ++s) {
            const double v = rel.x[prob.binaries[s]];
            const double frac = std::min(v, 1.0 - v);
            if (frac > best_frac + 1e-12) {
                best_frac = frac;
                branch_slot = s;
            }
        }

        if (branch_slot < 0) {
            // Integral: polish by fixing every binary and re-solving.
            std::vector<int> bits(nb, 0);
            std::vector<std::int8_t> fixed(nb);
            for (int s = 0; s < nb; ++s) {
                bits[s] = rel.x[prob.binaries[s]] > 0.5 ? 1 : 0;
                fixed[s] = static_cast<std::int8_t>(bits[s]);
            }
            apply_bounds(fixed);
            const LPSolution polished = engine.solve(opts.lp, &rel.basis);
            if (polished.status != LpStatus::optimal) continue;  // numerically spurious leaf
            bool take = false;
            if (!have_incumbent) {
                take = true;
            } else if (polished.objective < incumbent_obj - tie_tol()) {
                take = true;
            } else if (polished.objective <= incumbent_obj + tie_tol() &&
                       lex_better(bits, incumbent_bits)) {
                take = true;  // objective tie, lexicographically smaller selection
            }
            if (take) {
                incumbent_obj = have_incumbent ? std::min(incumbent_obj, polished.objective)
                                               : polished.objective;
                have_incumbent = true;
                incumbent_bits = bits;
                out.lp = polished;
                out.x = polished.x;
                out.binary_values = bits;
            }
            continue;
        }

        Node zero{rel.objective, next_id++, node.fixed, std::make_shared<BasisSnapshot>(rel.basis)};
        Node one{rel.objective, next_id++, node.fixed, zero.warm};
        zero.fixed[branch_slot] = 0;
        one.fixed[branch_slot] = 1;
        const int var = prob.binaries[branch_slot];
        if (prob.lp.lower(var) <= 0.0) open.push(std::move(zero));
        if (prob.lp.upper(var) >= 1.0) open.push(std::move(one));
    }

    // Remaining open nodes bound the optimum from below.
    const double remaining = open.empty() ? kInf : open.top().bound;
    out.nodes = nodes_solved;

    if (!have_incumbent) {
        out.status = open.empty() ? MbpStatus::infeasible : MbpStatus::node_limit;
        out.best_bound = open.empty() ? 0.0 : remaining;
        out.rel_gap = open.empty() ? 0.0 : kInf;
        return out;
    }
    const bool proven = open.empty() || remaining > incumbent_obj + tie_tol();
    out.status = proven ? MbpStatus::optimal : MbpStatus::node_limit;
    out.objective = incumbent_obj;
    out.best_bound = std::min(remaining, incumbent_obj);
    out.rel_gap =
        std::max(0.0, (incumbent_obj - out.best_bound) / (1.0 + std::abs(incumbent_obj)));
    return out;
}

} // namespace vertiflow
