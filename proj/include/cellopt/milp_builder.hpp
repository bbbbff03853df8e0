#pragma once

// The complete mixed-integer model of the cell (criterion, energy epigraphs,
// assignment, flow, ordering, durations, time lags, spatial compatibility,
// collisions) and its export in CPLEX LP format.

#include "cellopt/cell_model.hpp"
#include "cellopt/lp_core.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cellopt {

enum class VarKind { continuous, binary };

struct MilpVariable {
    std::string name;
    VarKind kind = VarKind::continuous;
    double lower = 0.0;
    double upper = kInf;
};

struct MilpConstraint {
    std::string tag; // eq2 .. eq19
    std::string name;
    std::vector<LpTerm> terms;
    Relation relation = Relation::less_equal;
    double rhs = 0.0;
};

struct MilpModel {
    std::vector<MilpVariable> variables;
    std::vector<MilpConstraint> constraints;
    std::vector<LpTerm> objective;
    double w_bar = 0.0;
    std::size_t segments = 10;
    std::size_t robot_count = 0;

    // index maps, per robot
    std::vector<std::vector<std::size_t>> W_static, W_move, s_static, s_move, d_static, d_move;
    std::vector<std::vector<std::vector<std::size_t>>> x, z, y; // [r][v][l], [r][v][m], [r][e][t]
    std::vector<std::vector<std::optional<std::size_t>>> w;     // [r][e], optional moves only
    std::vector<std::vector<std::size_t>> c;                    // [o][n + |R|]

    std::size_t add_variable(std::string name, VarKind kind, double lo = 0.0, double hi = kInf)
    {
        variables.push_back({std::move(name), kind, lo, hi});
        return variables.size() - 1;
    }

    void add_constraint(const std::string& tag, std::vector<LpTerm> terms, Relation rel, double rhs)
    {
        const std::size_t k = tag_counts_[tag]++;
        constraints.push_back({tag, tag + "_" + std::to_string(k), std::move(terms), rel, rhs});
    }

    std::size_t count(const std::string& tag) const
    {
        auto it = tag_counts_.find(tag);
        return it == tag_counts_.end() ? 0 : it->second;
    }

    std::size_t binary_count() const
    {
        std::size_t n = 0;
        for (const auto& v : variables) n += v.kind == VarKind::binary;
        return n;
    }

    std::optional<std::size_t> find(const std::string& name) const
    {
        if (name_index_.size() != variables.size()) {
            name_index_.clear();
            for (std::size_t i = 0; i < variables.size(); ++i) name_index_.emplace(variables[i].name, i);
        }
        auto it = name_index_.find(name);
        if (it == name_index_.end()) return std::nullopt;
        return it->second;
    }

    double objective_value(const std::vector<double>& values) const
    {
        double v = 0.0;
        for (const auto& t : objective) v += t.coeff * values[t.column];
        return v;
    }

    /// Names of violated rows, bounds and integrality conditions.
    std::vector<std::string> evaluate(const std::vector<double>& values, double tol = 1e-6) const
    {
        std::vector<std::string> out;
        if (values.size() != variables.size()) return {"assignment size " + std::to_string(values.size()) + " != " + std::to_string(variables.size())};
        for (std::size_t j = 0; j < variables.size(); ++j) {
            const auto& v = variables[j];
            if (values[j] < v.lower - tol || values[j] > v.upper + tol) out.push_back("bound:" + v.name);
            if (v.kind == VarKind::binary && std::abs(values[j] - std::round(values[j])) > tol) out.push_back("integrality:" + v.name);
        }
        for (const auto& c : constraints) {
            double lhs = 0.0, scale = std::max(1.0, std::abs(c.rhs));
            for (const auto& t : c.terms) {
                lhs += t.coeff * values[t.column];
                scale = std::max(scale, std::abs(t.coeff * values[t.column]));
            }
            const double slack = tol * scale;
            const bool ok = c.relation == Relation::less_equal      ? lhs <= c.rhs + slack
                            : c.relation == Relation::greater_equal ? lhs >= c.rhs - slack
                                                                    : std::abs(lhs - c.rhs) <= slack;
            if (!ok) out.push_back(c.name);
        }
        return out;
    }

private:
    std::map<std::string, std::size_t> tag_counts_;
    mutable std::map<std::string, std::size_t> name_index_;
};

/// Big-M of the energy rows: no deactivated epigraph row can bind. Static
/// rows need max p*CT; a trajectory's lines are evaluated over every duration
/// the movement can take (its move's trajectory windows, or [0, max + CT]
/// when the move is optional and may be skipped).
inline double upper_bound_energy(const Instance& inst, std::size_t segments = 10)
{
    double wbar = 0.0;
    const double ct = inst.cycle_time;
    for (const auto& r : inst.robots) {
        for (const auto& v : r.statics)
            for (const auto& l : v.locations)
                for (double p : l.power) wbar = std::max(wbar, p * ct);
        for (const auto& e : r.moves) {
            double lo = kInf, hi = 0.0;
            for (const auto& t : e.trajectories) {
                lo = std::min(lo, t.d_min);
                hi = std::max(hi, t.d_max);
            }
            if (e.optional) {
                lo = 0.0;
                hi += ct;
            }
            for (const auto& t : e.trajectories) {
                const PwlApprox f = pwl_approximate(t.energy, t.d_min, t.d_max, segments);
                for (const auto& s : f.segments) wbar = std::max({wbar, s(lo), s(hi)});
            }
        }
    }
    return wbar > 0.0 ? wbar : 1.0;
}

/// Builds the model; rows carry the tag of the equation they come from.
inline MilpModel build_milp(const Instance& inst, std::size_t segments = 10)
{
    MilpModel m;
    m.segments = segments;
    m.robot_count = inst.robots.size();
    m.w_bar = upper_bound_energy(inst, segments);
    const double W = m.w_bar;
    const double ct = inst.cycle_time;
    const std::size_t nr = inst.robots.size();
    const double big_c = 2.0 * static_cast<double>(nr) * ct;
    const int shifts = static_cast<int>(nr);

    m.W_static.resize(nr);
    m.W_move.resize(nr);
    m.s_static.resize(nr);
    m.s_move.resize(nr);
    m.d_static.resize(nr);
    m.d_move.resize(nr);
    m.x.resize(nr);
    m.z.resize(nr);
    m.y.resize(nr);
    m.w.resize(nr);

    // variables
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        const std::string rt = "r" + std::to_string(r);
        for (std::size_t v = 0; v < robot.statics.size(); ++v) {
            const std::string a = rt + "_v" + std::to_string(v);
            m.W_static[r].push_back(m.add_variable("W_" + a, VarKind::continuous));
            m.s_static[r].push_back(m.add_variable("s_" + a, VarKind::continuous));
            m.d_static[r].push_back(m.add_variable("d_" + a, VarKind::continuous, 0.0, robot.statics[v].d_max));
        }
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            const std::string a = rt + "_e" + std::to_string(e);
            m.W_move[r].push_back(m.add_variable("W_" + a, VarKind::continuous));
            m.s_move[r].push_back(m.add_variable("s_" + a, VarKind::continuous));
            m.d_move[r].push_back(m.add_variable("d_" + a, VarKind::continuous));
        }
        m.x[r].resize(robot.statics.size());
        m.z[r].resize(robot.statics.size());
        for (std::size_t v = 0; v < robot.statics.size(); ++v) {
            const std::string a = rt + "_v" + std::to_string(v);
            for (std::size_t l = 0; l < robot.statics[v].locations.size(); ++l)
                m.x[r][v].push_back(m.add_variable("x_" + a + "_l" + std::to_string(l), VarKind::binary, 0.0, 1.0));
            for (std::size_t k = 0; k < robot.modes.size(); ++k)
                m.z[r][v].push_back(m.add_variable("z_" + a + "_m" + std::to_string(k), VarKind::binary, 0.0, 1.0));
        }
        m.y[r].resize(robot.moves.size());
        m.w[r].resize(robot.moves.size());
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            const std::string a = rt + "_e" + std::to_string(e);
            for (std::size_t t = 0; t < robot.moves[e].trajectories.size(); ++t)
                m.y[r][e].push_back(m.add_variable("y_" + a + "_t" + std::to_string(t), VarKind::binary, 0.0, 1.0));
            if (robot.moves[e].optional) m.w[r][e] = m.add_variable("w_" + a, VarKind::binary, 0.0, 1.0);
        }
    }
    for (std::size_t o = 0; o < inst.collisions.size(); ++o) {
        m.c.emplace_back();
        for (int n = -shifts; n <= shifts; ++n)
            m.c[o].push_back(m.add_variable("c_o" + std::to_string(o) + "_k" + std::to_string(n + shifts), VarKind::binary, 0.0, 1.0));
    }

    // criterion
    for (std::size_t r = 0; r < nr; ++r) {
        for (auto j : m.W_static[r]) m.objective.push_back({j, 1.0});
        for (auto j : m.W_move[r]) m.objective.push_back({j, 1.0});
    }

    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        // energy of statics: p d - W(2 - z - x) <= W_v
        for (std::size_t v = 0; v < robot.statics.size(); ++v)
            for (std::size_t l = 0; l < robot.statics[v].locations.size(); ++l)
                for (std::size_t k = 0; k < robot.modes.size(); ++k)
                    m.add_constraint("eq2",
                                     {{m.d_static[r][v], robot.statics[v].locations[l].power[k]},
                                      {m.z[r][v][k], W},
                                      {m.x[r][v][l], W},
                                      {m.W_static[r][v], -1.0}},
                                     Relation::less_equal, 2.0 * W);
        // energy of movements: k d + q - W(1 - y) <= W_e
        for (std::size_t e = 0; e < robot.moves.size(); ++e)
            for (std::size_t t = 0; t < robot.moves[e].trajectories.size(); ++t) {
                const auto& tr = robot.moves[e].trajectories[t];
                const PwlApprox f = pwl_approximate(tr.energy, tr.d_min, tr.d_max, segments);
                for (const auto& s : f.segments)
                    m.add_constraint("eq3", {{m.d_move[r][e], s.slope}, {m.y[r][e][t], W}, {m.W_move[r][e], -1.0}}, Relation::less_equal,
                                     W - s.intercept);
            }
    }
    // assignment
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t v = 0; v < inst.robots[r].statics.size(); ++v) {
            std::vector<LpTerm> t;
            for (auto j : m.x[r][v]) t.push_back({j, 1.0});
            m.add_constraint("eq4", std::move(t), Relation::equal, 1.0);
        }
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t v = 0; v < inst.robots[r].statics.size(); ++v) {
            std::vector<LpTerm> t;
            for (auto j : m.z[r][v]) t.push_back({j, 1.0});
            m.add_constraint("eq5", std::move(t), Relation::equal, 1.0);
        }
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t e = 0; e < inst.robots[r].moves.size(); ++e) {
            if (inst.robots[r].moves[e].optional) continue;
            std::vector<LpTerm> t;
            for (auto j : m.y[r][e]) t.push_back({j, 1.0});
            m.add_constraint("eq6", std::move(t), Relation::equal, 1.0);
        }
    // flow
    for (int dir = 0; dir < 2; ++dir) {
        const char* tag = dir == 0 ? "eq7" : "eq8";
        for (std::size_t r = 0; r < nr; ++r) {
            const auto& robot = inst.robots[r];
            for (std::size_t v = 0; v < robot.statics.size(); ++v)
                for (std::size_t l = 0; l < robot.statics[v].locations.size(); ++l) {
                    std::vector<LpTerm> t;
                    for (std::size_t e = 0; e < robot.moves.size(); ++e) {
                        const auto& mv = robot.moves[e];
                        if ((dir == 0 ? mv.to : mv.from) != v) continue;
                        for (std::size_t k = 0; k < mv.trajectories.size(); ++k)
                            if ((dir == 0 ? mv.trajectories[k].to_location : mv.trajectories[k].from_location) == l)
                                t.push_back({m.y[r][e][k], 1.0});
                    }
                    t.push_back({m.x[r][v][l], -1.0});
                    m.add_constraint(tag, std::move(t), Relation::equal, 0.0);
                }
        }
    }
    // mandatory precedences: s_a2 = s_a1 + d_a1
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        for (std::size_t v = 0; v < robot.statics.size(); ++v) {
            if (v == robot.home) continue;
            for (std::size_t e = 0; e < robot.moves.size(); ++e)
                if (robot.moves[e].from == v)
                    m.add_constraint("eq9", {{m.s_move[r][e], 1.0}, {m.s_static[r][v], -1.0}, {m.d_static[r][v], -1.0}}, Relation::equal, 0.0);
        }
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            if (robot.moves[e].optional) continue;
            const std::size_t v = robot.moves[e].to;
            m.add_constraint("eq9", {{m.s_static[r][v], 1.0}, {m.s_move[r][e], -1.0}, {m.d_move[r][e], -1.0}}, Relation::equal, 0.0);
        }
    }
    // leaving home: s_e = s_h + d_h - CT
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        for (std::size_t e = 0; e < robot.moves.size(); ++e)
            if (robot.moves[e].from == robot.home)
                m.add_constraint("eq10", {{m.s_move[r][e], 1.0}, {m.s_static[r][robot.home], -1.0}, {m.d_static[r][robot.home], -1.0}},
                                 Relation::equal, -ct);
    }
    // optional movements
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            if (!robot.moves[e].optional) continue;
            std::vector<LpTerm> t;
            for (auto j : m.y[r][e]) t.push_back({j, 1.0});
            t.push_back({*m.w[r][e], -1.0});
            m.add_constraint("eq11", std::move(t), Relation::equal, 0.0);
        }
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            if (!robot.moves[e].optional) continue;
            const std::size_t v = robot.moves[e].to;
            // s_v + (1 - w) CT >= s_e + d_e
            m.add_constraint("eq12", {{m.s_static[r][v], 1.0}, {*m.w[r][e], -ct}, {m.s_move[r][e], -1.0}, {m.d_move[r][e], -1.0}},
                             Relation::greater_equal, -ct);
        }
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            if (!robot.moves[e].optional) continue;
            const std::size_t v = robot.moves[e].to;
            // s_v - (1 - w) CT <= s_e + d_e
            m.add_constraint("eq13", {{m.s_static[r][v], 1.0}, {*m.w[r][e], ct}, {m.s_move[r][e], -1.0}, {m.d_move[r][e], -1.0}},
                             Relation::less_equal, ct);
        }
    }
    // durations (upper bounds of statics are column bounds)
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        for (std::size_t v = 0; v < robot.statics.size(); ++v)
            for (std::size_t k = 0; k < robot.modes.size(); ++k)
                m.add_constraint("eq14", {{m.d_static[r][v], 1.0}, {m.z[r][v][k], -robot.min_static_duration(v, k)}}, Relation::greater_equal, 0.0);
    }
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        for (std::size_t e = 0; e < robot.moves.size(); ++e)
            for (std::size_t t = 0; t < robot.moves[e].trajectories.size(); ++t) {
                const auto& tr = robot.moves[e].trajectories[t];
                m.add_constraint("eq15", {{m.d_move[r][e], 1.0}, {m.y[r][e][t], -tr.d_min}}, Relation::greater_equal, 0.0);
                m.add_constraint("eq15", {{m.d_move[r][e], 1.0}, {m.y[r][e][t], ct}}, Relation::less_equal, tr.d_max + ct);
            }
    }
    auto start_of = [&](const ActivityRef& a) { return a.is_static() ? m.s_static[a.robot][a.index] : m.s_move[a.robot][a.index]; };
    auto dur_of = [&](const ActivityRef& a) { return a.is_static() ? m.d_static[a.robot][a.index] : m.d_move[a.robot][a.index]; };
    auto item_of = [&](const ActivityRef& a, std::size_t g) { return a.is_static() ? m.x[a.robot][a.index][g] : m.y[a.robot][a.index][g]; };
    // time lags
    for (const auto& lag : inst.time_lags)
        m.add_constraint("eq16", {{start_of(lag.to), 1.0}, {start_of(lag.from), -1.0}}, Relation::greater_equal, lag.length - ct * lag.height);
    // spatial compatibility, both directions; a location without partner cannot be used
    for (const auto& q : inst.compat_pairs) {
        for (int side = 0; side < 2; ++side) {
            const ActivityRef a = side == 0 ? q.activity_1 : q.activity_2;
            const ActivityRef b = side == 0 ? q.activity_2 : q.activity_1;
            const std::size_t na = inst.robot(a).statics[a.index].locations.size();
            for (std::size_t la = 0; la < na; ++la) {
                std::vector<LpTerm> t{{m.x[a.robot][a.index][la], 1.0}};
                for (const auto& [l1, l2] : q.pairs) {
                    const std::size_t mine = side == 0 ? l1 : l2, other = side == 0 ? l2 : l1;
                    if (mine == la) t.push_back({m.x[b.robot][b.index][other], -1.0});
                }
                m.add_constraint("eq17", std::move(t), Relation::less_equal, 0.0);
            }
        }
    }
    // collisions
    for (std::size_t o = 0; o < inst.collisions.size(); ++o) {
        const auto& q = inst.collisions[o];
        const std::size_t u1 = item_of(q.activity_1, q.item_1), u2 = item_of(q.activity_2, q.item_2);
        for (int n = -shifts; n <= shifts; ++n) {
            const std::size_t cv = m.c[o][static_cast<std::size_t>(n + shifts)];
            // s2 + nCT + M(3 - c - u1 - u2) >= s1 + d1
            m.add_constraint("eq18",
                             {{start_of(q.activity_2), 1.0}, {cv, -big_c}, {u1, -big_c}, {u2, -big_c}, {start_of(q.activity_1), -1.0},
                              {dur_of(q.activity_1), -1.0}},
                             Relation::greater_equal, -n * ct - 3.0 * big_c);
        }
        for (int n = -shifts; n <= shifts; ++n) {
            const std::size_t cv = m.c[o][static_cast<std::size_t>(n + shifts)];
            // s1 + M(2 + c - u1 - u2) >= s2 + d2 + nCT
            m.add_constraint("eq19",
                             {{start_of(q.activity_1), 1.0}, {cv, big_c}, {u1, -big_c}, {u2, -big_c}, {start_of(q.activity_2), -1.0},
                              {dur_of(q.activity_2), -1.0}},
                             Relation::greater_equal, n * ct - 2.0 * big_c);
        }
    }
    return m;
}

//----------------------------------------------------------------------------//
// LP file
//----------------------------------------------------------------------------//

namespace detail {

inline std::string lp_num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void lp_expression(std::string& out, const std::vector<LpTerm>& terms, const MilpModel& m, std::size_t indent)
{
    std::size_t line = indent;
    bool first = true;
    for (const auto& t : terms) {
        std::string piece;
        if (t.coeff < 0)
            piece = first ? "- " : " - ";
        else
            piece = first ? "" : " + ";
        const double a = std::abs(t.coeff);
        if (a != 1.0) piece += lp_num(a) + " ";
        piece += m.variables[t.column].name;
        if (line + piece.size() > 250) {
            out += "\n   ";
            line = 3;
        }
        out += piece;
        line += piece.size();
        first = false;
    }
    if (first) out += "0 " + m.variables.front().name;
}

} // namespace detail

/// CPLEX LP text (Minimize / Subject To / Bounds / Binary / End).
inline std::string export_lp_file(const MilpModel& m)
{
    std::string out;
    out += "\\ cellopt energy model: " + std::to_string(m.variables.size()) + " variables (" + std::to_string(m.binary_count()) +
           " binary), " + std::to_string(m.constraints.size()) + " constraints\n";
    out += "\\ W_bar = " + detail::lp_num(m.w_bar) + ", segments = " + std::to_string(m.segments) + "\n";
    out += "Minimize\n obj: ";
    detail::lp_expression(out, m.objective, m, 6);
    out += "\nSubject To\n";
    for (const auto& c : m.constraints) {
        out += " " + c.name + ": ";
        detail::lp_expression(out, c.terms, m, c.name.size() + 3);
        out += c.relation == Relation::less_equal ? " <= " : c.relation == Relation::greater_equal ? " >= " : " = ";
        out += detail::lp_num(c.rhs) + "\n";
    }
    out += "Bounds\n";
    for (const auto& v : m.variables) {
        if (v.kind == VarKind::binary) continue;
        if (v.upper == kInf) {
            if (v.lower != 0.0) out += " " + v.name + " >= " + detail::lp_num(v.lower) + "\n";
        } else {
            out += " " + detail::lp_num(v.lower) + " <= " + v.name + " <= " + detail::lp_num(v.upper) + "\n";
        }
    }
    out += "Binary\n";
    std::size_t line = 0;
    for (const auto& v : m.variables) {
        if (v.kind != VarKind::binary) continue;
        if (line + v.name.size() + 1 > 250) {
            out += "\n";
            line = 0;
        }
        out += " " + v.name;
        line += v.name.size() + 1;
    }
    out += "\nEnd\n";
    return out;
}

//----------------------------------------------------------------------------//
// Assignments <-> solutions
//----------------------------------------------------------------------------//

/// Schedule encoded by a model assignment. Throws InputError when the
/// selections are inconsistent (several locations, broken circuits, ...).
inline Solution lift_milp_solution(const Instance& inst, const MilpModel& m, const std::vector<double>& values)
{
    if (values.size() != m.variables.size()) throw InputError("assignment has " + std::to_string(values.size()) + " values, model has " + std::to_string(m.variables.size()) + " variables");
    auto on = [&](std::size_t j) { return values[j] > 0.5; };
    auto pick = [&](const std::vector<std::size_t>& vars, const std::string& what, bool required) -> std::optional<std::size_t> {
        std::optional<std::size_t> sel;
        for (std::size_t k = 0; k < vars.size(); ++k)
            if (on(vars[k])) {
                if (sel) throw InputError(what + ": more than one selected");
                sel = k;
            }
        if (!sel && required) throw InputError(what + ": nothing selected");
        return sel;
    };
    Solution sol;
    sol.segments = m.segments;
    sol.metadata.solver = "milp";
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& robot = inst.robots[r];
        const std::size_t nv = robot.statics.size();
        std::vector<std::size_t> loc(nv), mode(nv);
        for (std::size_t v = 0; v < nv; ++v) {
            loc[v] = *pick(m.x[r][v], robot.statics[v].id + " location", true);
            mode[v] = *pick(m.z[r][v], robot.statics[v].id + " mode", true);
        }
        std::vector<std::optional<std::size_t>> traj(robot.moves.size());
        for (std::size_t e = 0; e < robot.moves.size(); ++e) traj[e] = pick(m.y[r][e], robot.moves[e].id + " trajectory", !robot.moves[e].optional);

        // follow executed moves from home
        RobotSchedule sched;
        std::vector<bool> seen(nv, false);
        std::size_t at = robot.home;
        for (std::size_t step = 0; step < nv; ++step) {
            std::optional<std::size_t> next;
            for (std::size_t e = 0; e < robot.moves.size(); ++e)
                if (robot.moves[e].from == at && traj[e]) {
                    if (next) throw InputError(robot.statics[at].id + ": several executed outgoing movements");
                    next = e;
                }
            if (!next) throw InputError(robot.statics[at].id + ": no executed outgoing movement");
            const std::size_t e = *next;
            const auto& tr = robot.moves[e].trajectories[*traj[e]];
            const std::size_t v = robot.moves[e].to;
            if (seen[v]) throw InputError(robot.id + ": executed movements do not form a Hamiltonian circuit");
            seen[v] = true;
            if (tr.from_location != loc[at] || tr.to_location != loc[v])
                throw InputError(robot.moves[e].id + ": trajectory does not join the selected locations");
            MoveSelection ms;
            ms.activity = e;
            ms.trajectory = *traj[e];
            ms.start = values[m.s_move[r][e]];
            ms.duration = values[m.d_move[r][e]];
            const PwlApprox f = pwl_approximate(tr.energy, tr.d_min, tr.d_max, m.segments);
            ms.energy = f(ms.duration);
            ms.exact_energy = ms.duration > 0.0 ? tr.energy(ms.duration) : kInf;
            sched.moves.push_back(ms);
            StaticSelection ss;
            ss.activity = v;
            ss.location = loc[v];
            ss.mode = mode[v];
            ss.start = values[m.s_static[r][v]];
            ss.duration = values[m.d_static[r][v]];
            ss.energy = robot.statics[v].locations[loc[v]].power[mode[v]] * ss.duration;
            sched.statics.push_back(ss);
            at = v;
        }
        if (at != robot.home) throw InputError(robot.id + ": executed movements do not return home");
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            bool used = false;
            for (const auto& ms : sched.moves) used = used || ms.activity == e;
            if (traj[e] && !used) throw InputError(robot.moves[e].id + ": selected but not on the circuit");
        }
        sol.robots.push_back(std::move(sched));
    }
    sol.status = SolutionStatus::unknown;
    sol.recompute_totals();
    return sol;
}

/// Assignment vector from (variable name, value) pairs, e.g. an external
/// solver's output; unknown names throw, missing ones read as 0.
inline std::vector<double> assignment_from_names(const MilpModel& m, const std::map<std::string, double>& named)
{
    std::vector<double> val(m.variables.size(), 0.0);
    for (const auto& [name, v] : named) {
        auto j = m.find(name);
        if (!j) throw InputError("unknown model variable '" + name + "'");
        val[*j] = v;
    }
    return val;
}

inline Solution lift_milp_solution(const Instance& inst, const std::map<std::string, double>& named, std::size_t segments = 10)
{
    const MilpModel m = build_milp(inst, segments);
    return lift_milp_solution(inst, m, assignment_from_names(m, named));
}

/// Model assignment encoding a schedule; skipped optional movements get
/// W = 0, no trajectory, and a duration bridging to their target's start.
inline std::vector<double> solution_to_assignment(const Instance& inst, const MilpModel& m, const Solution& sol)
{
    std::vector<double> val(m.variables.size(), 0.0);
    const double ct = inst.cycle_time;
    const TimingView view(inst, sol);
    for (std::size_t r = 0; r < inst.robots.size(); ++r) {
        const auto& robot = inst.robots[r];
        const auto& sched = sol.robots[r];
        for (const auto& s : sched.statics) {
            val[m.x[r][s.activity][s.location]] = 1.0;
            val[m.z[r][s.activity][s.mode]] = 1.0;
            val[m.s_static[r][s.activity]] = s.start;
            val[m.d_static[r][s.activity]] = s.duration;
            val[m.W_static[r][s.activity]] = s.energy;
        }
        for (const auto& mv : sched.moves) {
            val[m.y[r][mv.activity][mv.trajectory]] = 1.0;
            if (m.w[r][mv.activity]) val[*m.w[r][mv.activity]] = 1.0;
            val[m.s_move[r][mv.activity]] = mv.start;
            val[m.d_move[r][mv.activity]] = mv.duration;
            val[m.W_move[r][mv.activity]] = mv.energy;
        }
        for (std::size_t e = 0; e < robot.moves.size(); ++e) {
            if (view.move_pos[r][e] != TimingView::npos) continue;
            const auto& mv = robot.moves[e];
            const auto& from = sched.statics[view.static_pos[r][mv.from]];
            double s = from.start + from.duration;
            if (mv.from == robot.home) s -= ct;
            const double target = sched.statics[view.static_pos[r][mv.to]].start;
            val[m.s_move[r][e]] = s;
            val[m.d_move[r][e]] = std::max(0.0, target - s);
        }
    }
    auto sd = [&](const ActivityRef& a) {
        const std::size_t j = a.is_static() ? m.s_static[a.robot][a.index] : m.s_move[a.robot][a.index];
        const std::size_t k = a.is_static() ? m.d_static[a.robot][a.index] : m.d_move[a.robot][a.index];
        return std::pair{val[j], val[k]};
    };
    const int shifts = static_cast<int>(inst.robots.size());
    for (std::size_t o = 0; o < inst.collisions.size(); ++o) {
        const auto& q = inst.collisions[o];
        const auto [s1, d1] = sd(q.activity_1);
        const auto [s2, d2] = sd(q.activity_2);
        for (int n = -shifts; n <= shifts; ++n)
            val[m.c[o][static_cast<std::size_t>(n + shifts)]] = (s2 + n * ct >= s1 + d1 - kFeasibilityTol) ? 1.0 : 0.0;
    }
    return val;
}

} // namespace cellopt
