#pragma once

// JSON formats for instances ("cellopt/1") and solutions
// ("cellopt-solution/1"), plus the seeded random instance generator.

#include "cellopt/cell_model.hpp"
#include "cellopt/graph_alg.hpp"

#include <json.hpp>

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cellopt {

inline constexpr const char* kInstanceFormat = "cellopt/1";
inline constexpr const char* kSolutionFormat = "cellopt-solution/1";

/// Syntax, schema or semantic problem in an input file.
class ParseError : public InputError {
public:
    enum class Kind { syntax, schema, semantic };

    ParseError(Kind kind, std::string path, std::string message, std::size_t line = 0, std::size_t column = 0)
        : InputError(compose(kind, path, message, line, column)), kind_(kind), path_(std::move(path)), line_(line), column_(column)
    {
    }

    Kind kind() const { return kind_; }
    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string compose(Kind kind, const std::string& path, const std::string& message, std::size_t line, std::size_t column)
    {
        std::string s = kind == Kind::syntax ? "syntax error" : kind == Kind::schema ? "schema error" : "invalid instance";
        if (line) s += " at line " + std::to_string(line) + ", column " + std::to_string(column);
        if (!path.empty()) s += " (" + path + ")";
        return s + ": " + message;
    }

    Kind kind_;
    std::string path_;
    std::size_t line_, column_;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline std::string format_double(double v)
{
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Pretty printer with %.17g doubles; keys keep insertion order.
inline void dump_json(const ojson& j, std::string& out, int indent)
{
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
    case ojson::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += inner + ojson(it.key()).dump() + ": ";
            dump_json(it.value(), out, indent + 1);
        }
        out += "\n" + pad + "}";
        return;
    }
    case ojson::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // arrays of scalars stay on one line
        bool flat = true;
        for (const auto& e : j)
            if (e.is_structured() && !(e.is_array() && e.size() <= 5 && std::all_of(e.begin(), e.end(), [](const ojson& x) { return x.is_primitive(); }))) flat = false;
        if (flat) {
            out += "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ", ";
                dump_json(j[i], out, indent + 1);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",\n";
            out += inner;
            dump_json(j[i], out, indent + 1);
        }
        out += "\n" + pad + "]";
        return;
    }
    case ojson::value_t::number_float: out += format_double(j.get<double>()); return;
    default: out += j.dump(); return;
    }
}

inline std::string to_text(const ojson& j)
{
    std::string out;
    dump_json(j, out, 0);
    out += "\n";
    return out;
}

inline ojson parse_text(std::string_view text)
{
    try {
        return ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        if (auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
        throw ParseError(ParseError::Kind::syntax, "", msg, line, col);
    }
}

// Schema-checked access to a JSON object.
class Node {
public:
    Node(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const ojson& raw() const { return j_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(ParseError::Kind::schema, path_, msg); }

    void expect_object(std::initializer_list<const char*> allowed) const
    {
        if (!j_.is_object()) fail("expected an object");
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || it.key() == a;
            if (!ok) Node(it.value(), path_ + "/" + it.key()).fail("unknown field");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    Node at(const char* key) const
    {
        if (!j_.contains(key)) fail(std::string("missing required field \"") + key + "\"");
        return Node(j_.at(key), path_ + "/" + key);
    }

    Node at(std::size_t i) const { return Node(j_.at(i), path_ + "/" + std::to_string(i)); }

    std::size_t size() const { return j_.size(); }

    std::vector<Node> array() const
    {
        if (!j_.is_array()) fail("expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.push_back(at(i));
        return out;
    }

    double number() const
    {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }

    std::int64_t integer() const
    {
        if (!j_.is_number_integer()) fail("expected an integer");
        return j_.get<std::int64_t>();
    }

    std::uint64_t unsigned_integer() const
    {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0)) fail("expected a non-negative integer");
        return j_.get<std::uint64_t>();
    }

    std::string string() const
    {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }

    bool boolean() const
    {
        if (!j_.is_boolean()) fail("expected a boolean");
        return j_.get<bool>();
    }

private:
    const ojson& j_;
    std::string path_;
};

inline std::size_t index_of(const Node& n, const std::vector<std::string>& ids, const std::string& what)
{
    const std::string id = n.string();
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return i;
    n.fail("unknown " + what + " \"" + id + "\"");
}

template <typename T>
std::vector<std::string> ids_of(const std::vector<T>& v)
{
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x.id);
    return out;
}

struct ActivityIndex {
    std::map<std::string, ActivityRef> by_id;

    explicit ActivityIndex(const Instance& inst)
    {
        for (std::size_t r = 0; r < inst.robots.size(); ++r) {
            for (std::size_t v = 0; v < inst.robots[r].statics.size(); ++v) by_id.emplace(inst.robots[r].statics[v].id, static_ref(r, v));
            for (std::size_t e = 0; e < inst.robots[r].moves.size(); ++e) by_id.emplace(inst.robots[r].moves[e].id, dynamic_ref(r, e));
        }
    }

    ActivityRef resolve(const Node& n) const
    {
        const std::string id = n.string();
        auto it = by_id.find(id);
        if (it == by_id.end()) n.fail("unknown activity \"" + id + "\"");
        return it->second;
    }
};

} // namespace detail

//----------------------------------------------------------------------------//
// Instances
//----------------------------------------------------------------------------//

/// Parses the instance format without semantic validation.
inline Instance parse_instance_unchecked(std::string_view text)
{
    using detail::Node;
    const auto doc = detail::parse_text(text);
    Node root(doc, "");
    root.expect_object({"format", "cycle_time", "robots", "time_lags", "compat", "collisions"});
    if (root.at("format").string() != kInstanceFormat) root.at("format").fail(std::string("expected \"") + kInstanceFormat + "\"");
    Instance inst;
    inst.cycle_time = root.at("cycle_time").number();
    for (const auto& rn : root.at("robots").array()) {
        rn.expect_object({"id", "home", "modes", "static_activities", "dynamic_activities"});
        Robot r;
        r.id = rn.at("id").string();
        for (const auto& mn : rn.at("modes").array()) {
            mn.expect_object({"id", "min_switch_time"});
            r.modes.push_back({mn.at("id").string(), mn.at("min_switch_time").number()});
        }
        const auto mode_ids = detail::ids_of(r.modes);
        for (const auto& vn : rn.at("static_activities").array()) {
            vn.expect_object({"id", "d_min", "d_max", "locations"});
            StaticActivity v;
            v.id = vn.at("id").string();
            v.d_min = vn.at("d_min").number();
            v.d_max = vn.at("d_max").number();
            for (const auto& ln : vn.at("locations").array()) {
                ln.expect_object({"id", "power"});
                Location l;
                l.id = ln.at("id").string();
                const Node pn = ln.at("power");
                if (!pn.raw().is_object()) pn.fail("expected an object mapping mode id to watts");
                l.power.assign(r.modes.size(), 0.0);
                std::vector<bool> seen(r.modes.size(), false);
                for (auto it = pn.raw().begin(); it != pn.raw().end(); ++it) {
                    const Node val(it.value(), pn.path() + "/" + it.key());
                    std::size_t m = r.modes.size();
                    for (std::size_t k = 0; k < mode_ids.size(); ++k)
                        if (mode_ids[k] == it.key()) m = k;
                    if (m == r.modes.size()) val.fail("unknown mode \"" + it.key() + "\"");
                    l.power[m] = val.number();
                    seen[m] = true;
                }
                for (std::size_t m = 0; m < seen.size(); ++m)
                    if (!seen[m]) pn.fail("missing power for mode \"" + mode_ids[m] + "\"");
                v.locations.push_back(std::move(l));
            }
            r.statics.push_back(std::move(v));
        }
        const auto static_ids = detail::ids_of(r.statics);
        r.home = detail::index_of(rn.at("home"), static_ids, "static activity");
        for (const auto& en : rn.at("dynamic_activities").array()) {
            en.expect_object({"id", "from", "to", "optional", "trajectories"});
            DynamicActivity e;
            e.id = en.at("id").string();
            e.from = detail::index_of(en.at("from"), static_ids, "static activity");
            e.to = detail::index_of(en.at("to"), static_ids, "static activity");
            e.optional = en.has("optional") ? en.at("optional").boolean() : false;
            const auto from_locs = detail::ids_of(r.statics[e.from].locations);
            const auto to_locs = detail::ids_of(r.statics[e.to].locations);
            for (const auto& tn : en.at("trajectories").array()) {
                tn.expect_object({"id", "from_loc", "to_loc", "d_min", "d_max", "energy_coeffs"});
                Trajectory t;
                t.id = tn.at("id").string();
                t.from_location = detail::index_of(tn.at("from_loc"), from_locs, "location");
                t.to_location = detail::index_of(tn.at("to_loc"), to_locs, "location");
                t.d_min = tn.at("d_min").number();
                t.d_max = tn.at("d_max").number();
                const auto cn = tn.at("energy_coeffs");
                const auto coeffs = cn.array();
                if (coeffs.size() != 5) cn.fail("expected 5 coefficients C1..C5");
                for (std::size_t k = 0; k < 5; ++k) t.energy.coeffs[k] = coeffs[k].number();
                e.trajectories.push_back(std::move(t));
            }
            r.moves.push_back(std::move(e));
        }
        inst.robots.push_back(std::move(r));
    }

    const detail::ActivityIndex index(inst);
    if (root.has("time_lags"))
        for (const auto& ln : root.at("time_lags").array()) {
            ln.expect_object({"from", "to", "length", "height"});
            TimeLag lag;
            lag.from = index.resolve(ln.at("from"));
            lag.to = index.resolve(ln.at("to"));
            lag.length = ln.at("length").number();
            lag.height = static_cast<int>(ln.at("height").integer());
            inst.time_lags.push_back(lag);
        }
    auto items_of = [&](const ActivityRef& a) {
        const auto& r = inst.robots[a.robot];
        return a.is_static() ? detail::ids_of(r.statics[a.index].locations) : detail::ids_of(r.moves[a.index].trajectories);
    };
    if (root.has("compat"))
        for (const auto& qn : root.at("compat").array()) {
            qn.expect_object({"activity_1", "activity_2", "pairs"});
            SpatialCompatPair q;
            q.activity_1 = index.resolve(qn.at("activity_1"));
            q.activity_2 = index.resolve(qn.at("activity_2"));
            if (!q.activity_1.is_static() || !q.activity_2.is_static()) qn.fail("spatial compatibility needs static activities");
            const auto l1 = items_of(q.activity_1), l2 = items_of(q.activity_2);
            for (const auto& pn : qn.at("pairs").array()) {
                const auto p = pn.array();
                if (p.size() != 2) pn.fail("expected a [location, location] pair");
                q.pairs.emplace_back(detail::index_of(p[0], l1, "location"), detail::index_of(p[1], l2, "location"));
            }
            inst.compat_pairs.push_back(std::move(q));
        }
    if (root.has("collisions"))
        for (const auto& cn : root.at("collisions").array()) {
            cn.expect_object({"activity_1", "item_1", "activity_2", "item_2"});
            CollisionQuad c;
            c.activity_1 = index.resolve(cn.at("activity_1"));
            c.activity_2 = index.resolve(cn.at("activity_2"));
            c.item_1 = detail::index_of(cn.at("item_1"), items_of(c.activity_1), "location or trajectory");
            c.item_2 = detail::index_of(cn.at("item_2"), items_of(c.activity_2), "location or trajectory");
            inst.collisions.push_back(c);
        }
    return inst;
}

/// Parses and validates; semantic problems raise ParseError(kind semantic).
inline Instance parse_instance(std::string_view text)
{
    Instance inst = parse_instance_unchecked(text);
    const auto violations = validate_instance(inst);
    if (!violations.empty()) {
        std::string msg;
        for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v.entity + ": " + v.rule + ": " + v.detail;
        throw ParseError(ParseError::Kind::semantic, violations.front().entity, msg);
    }
    return inst;
}

inline std::string serialize_instance(const Instance& inst)
{
    using detail::ojson;
    ojson root = ojson::object();
    root["format"] = kInstanceFormat;
    root["cycle_time"] = inst.cycle_time;
    ojson robots = ojson::array();
    for (const auto& r : inst.robots) {
        ojson rj = ojson::object();
        rj["id"] = r.id;
        rj["home"] = r.home < r.statics.size() ? r.statics[r.home].id : std::string();
        ojson modes = ojson::array();
        for (const auto& m : r.modes) modes.push_back(ojson{{"id", m.id}, {"min_switch_time", m.min_switch_time}});
        rj["modes"] = std::move(modes);
        ojson statics = ojson::array();
        for (const auto& v : r.statics) {
            ojson vj = ojson::object();
            vj["id"] = v.id;
            vj["d_min"] = v.d_min;
            vj["d_max"] = v.d_max;
            ojson locs = ojson::array();
            for (const auto& l : v.locations) {
                ojson power = ojson::object();
                for (std::size_t m = 0; m < r.modes.size() && m < l.power.size(); ++m) power[r.modes[m].id] = l.power[m];
                locs.push_back(ojson{{"id", l.id}, {"power", std::move(power)}});
            }
            vj["locations"] = std::move(locs);
            statics.push_back(std::move(vj));
        }
        rj["static_activities"] = std::move(statics);
        ojson moves = ojson::array();
        for (const auto& e : r.moves) {
            ojson ej = ojson::object();
            ej["id"] = e.id;
            ej["from"] = r.statics[e.from].id;
            ej["to"] = r.statics[e.to].id;
            ej["optional"] = e.optional;
            ojson trajs = ojson::array();
            for (const auto& t : e.trajectories) {
                ojson tj = ojson::object();
                tj["id"] = t.id;
                tj["from_loc"] = r.statics[e.from].locations[t.from_location].id;
                tj["to_loc"] = r.statics[e.to].locations[t.to_location].id;
                tj["d_min"] = t.d_min;
                tj["d_max"] = t.d_max;
                ojson c = ojson::array();
                for (double x : t.energy.coeffs) c.push_back(x);
                tj["energy_coeffs"] = std::move(c);
                trajs.push_back(std::move(tj));
            }
            ej["trajectories"] = std::move(trajs);
            moves.push_back(std::move(ej));
        }
        rj["dynamic_activities"] = std::move(moves);
        robots.push_back(std::move(rj));
    }
    root["robots"] = std::move(robots);

    auto item_id = [&](const ActivityRef& a, std::size_t item) {
        const auto& r = inst.robots[a.robot];
        return a.is_static() ? r.statics[a.index].locations[item].id : r.moves[a.index].trajectories[item].id;
    };
    ojson lags = ojson::array();
    for (const auto& lag : inst.time_lags)
        lags.push_back(ojson{{"from", inst.activity_id(lag.from)}, {"to", inst.activity_id(lag.to)}, {"length", lag.length}, {"height", lag.height}});
    root["time_lags"] = std::move(lags);
    ojson compat = ojson::array();
    for (const auto& q : inst.compat_pairs) {
        ojson pairs = ojson::array();
        for (const auto& [a, b] : q.pairs) pairs.push_back(ojson::array({item_id(q.activity_1, a), item_id(q.activity_2, b)}));
        compat.push_back(ojson{{"activity_1", inst.activity_id(q.activity_1)}, {"activity_2", inst.activity_id(q.activity_2)}, {"pairs", std::move(pairs)}});
    }
    root["compat"] = std::move(compat);
    ojson coll = ojson::array();
    for (const auto& c : inst.collisions)
        coll.push_back(ojson{{"activity_1", inst.activity_id(c.activity_1)},
                             {"item_1", item_id(c.activity_1, c.item_1)},
                             {"activity_2", inst.activity_id(c.activity_2)},
                             {"item_2", item_id(c.activity_2, c.item_2)}});
    root["collisions"] = std::move(coll);
    return detail::to_text(root);
}

//----------------------------------------------------------------------------//
// Solutions
//----------------------------------------------------------------------------//

inline std::string serialize_solution(const Instance& inst, const Solution& sol)
{
    using detail::ojson;
    ojson root = ojson::object();
    root["format"] = kSolutionFormat;
    root["status"] = to_string(sol.status);
    root["segments"] = sol.segments;
    root["total_energy"] = sol.total_energy;
    root["total_exact_energy"] = sol.total_exact_energy;
    ojson meta = ojson::object();
    meta["solver"] = sol.metadata.solver;
    if (sol.metadata.seed) meta["seed"] = *sol.metadata.seed;
    if (sol.metadata.time_limit) meta["time_limit"] = *sol.metadata.time_limit;
    if (sol.metadata.wall_time) meta["wall_time"] = *sol.metadata.wall_time;
    if (sol.metadata.lp_evaluations) meta["lp_evaluations"] = *sol.metadata.lp_evaluations;
    root["metadata"] = std::move(meta);
    ojson robots = ojson::array();
    for (std::size_t r = 0; r < sol.robots.size(); ++r) {
        const auto& robot = inst.robots.at(r);
        const auto& sched = sol.robots[r];
        ojson statics = ojson::array(), moves = ojson::array();
        for (const auto& s : sched.statics) {
            const auto& v = robot.statics.at(s.activity);
            ojson j = ojson::object();
            j["activity"] = v.id;
            j["location"] = v.locations.at(s.location).id;
            j["mode"] = robot.modes.at(s.mode).id;
            j["start"] = s.start;
            j["duration"] = s.duration;
            j["energy"] = s.energy;
            statics.push_back(std::move(j));
        }
        for (const auto& m : sched.moves) {
            const auto& e = robot.moves.at(m.activity);
            ojson j = ojson::object();
            j["activity"] = e.id;
            j["trajectory"] = e.trajectories.at(m.trajectory).id;
            j["start"] = m.start;
            j["duration"] = m.duration;
            j["energy"] = m.energy;
            j["exact_energy"] = m.exact_energy;
            moves.push_back(std::move(j));
        }
        robots.push_back(ojson{{"robot", robot.id}, {"statics", std::move(statics)}, {"moves", std::move(moves)}});
    }
    root["robots"] = std::move(robots);
    return detail::to_text(root);
}

/// Parses a solution against its instance (ids are resolved to indices).
inline Solution parse_solution(const Instance& inst, std::string_view text)
{
    using detail::Node;
    const auto doc = detail::parse_text(text);
    Node root(doc, "");
    root.expect_object({"format", "status", "segments", "total_energy", "total_exact_energy", "metadata", "robots"});
    if (root.at("format").string() != kSolutionFormat) root.at("format").fail(std::string("expected \"") + kSolutionFormat + "\"");
    Solution sol;
    const std::string status = root.at("status").string();
    if (status == "feasible")
        sol.status = SolutionStatus::feasible;
    else if (status == "infeasible")
        sol.status = SolutionStatus::infeasible;
    else if (status == "unknown")
        sol.status = SolutionStatus::unknown;
    else
        root.at("status").fail("unknown status \"" + status + "\"");
    sol.segments = root.at("segments").unsigned_integer();
    sol.total_energy = root.at("total_energy").number();
    sol.total_exact_energy = root.at("total_exact_energy").number();
    if (root.has("metadata")) {
        const Node mn = root.at("metadata");
        mn.expect_object({"solver", "seed", "time_limit", "wall_time", "lp_evaluations"});
        if (mn.has("solver")) sol.metadata.solver = mn.at("solver").string();
        if (mn.has("seed")) sol.metadata.seed = mn.at("seed").unsigned_integer();
        if (mn.has("time_limit")) sol.metadata.time_limit = mn.at("time_limit").number();
        if (mn.has("wall_time")) sol.metadata.wall_time = mn.at("wall_time").number();
        if (mn.has("lp_evaluations")) sol.metadata.lp_evaluations = mn.at("lp_evaluations").unsigned_integer();
    }
    const auto rnodes = root.at("robots").array();
    if (rnodes.size() != inst.robots.size()) root.at("robots").fail("expected one entry per robot (" + std::to_string(inst.robots.size()) + ")");
    for (std::size_t r = 0; r < rnodes.size(); ++r) {
        const auto& rn = rnodes[r];
        const auto& robot = inst.robots[r];
        rn.expect_object({"robot", "statics", "moves"});
        if (rn.at("robot").string() != robot.id) rn.at("robot").fail("expected robot \"" + robot.id + "\"");
        RobotSchedule sched;
        const auto static_ids = detail::ids_of(robot.statics);
        const auto move_ids = detail::ids_of(robot.moves);
        const auto mode_ids = detail::ids_of(robot.modes);
        for (const auto& sn : rn.at("statics").array()) {
            sn.expect_object({"activity", "location", "mode", "start", "duration", "energy"});
            StaticSelection s;
            s.activity = detail::index_of(sn.at("activity"), static_ids, "static activity");
            s.location = detail::index_of(sn.at("location"), detail::ids_of(robot.statics[s.activity].locations), "location");
            s.mode = detail::index_of(sn.at("mode"), mode_ids, "mode");
            s.start = sn.at("start").number();
            s.duration = sn.at("duration").number();
            s.energy = sn.at("energy").number();
            sched.statics.push_back(s);
        }
        for (const auto& mn : rn.at("moves").array()) {
            mn.expect_object({"activity", "trajectory", "start", "duration", "energy", "exact_energy"});
            MoveSelection m;
            m.activity = detail::index_of(mn.at("activity"), move_ids, "dynamic activity");
            m.trajectory = detail::index_of(mn.at("trajectory"), detail::ids_of(robot.moves[m.activity].trajectories), "trajectory");
            m.start = mn.at("start").number();
            m.duration = mn.at("duration").number();
            m.energy = mn.at("energy").number();
            m.exact_energy = mn.at("exact_energy").number();
            sched.moves.push_back(m);
        }
        sol.robots.push_back(std::move(sched));
    }
    return sol;
}

//----------------------------------------------------------------------------//
// Generator
//----------------------------------------------------------------------------//

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct CountRange {
    std::size_t lo = 1;
    std::size_t hi = 1;
};

struct GeneratorConfig {
    std::uint64_t seed = 0;
    std::size_t robot_count = 2;
    CountRange activities_per_robot{3, 5}; // static activities incl. home
    CountRange locations_per_activity{1, 2};
    CountRange trajectories_per_edge{1, 2}; // per connected location pair
    double optional_edge_probability = 0.3;
    CountRange modes_per_robot{1, 3};
    std::size_t time_lag_count = 1;
    std::size_t compat_pair_count = 1;
    std::size_t collision_count = 1;
    double cycle_time_slack_factor = 1.2;
    std::array<Range, 5> energy_coeff_ranges{{{0.0, 20.0}, {0.0, 50.0}, {50.0, 400.0}, {0.0, 100.0}, {0.0, 20.0}}};
    Range static_duration{1.0, 4.0};    // d_min of non-home statics
    Range static_window{1.0, 6.0};      // d_max - d_min
    Range move_duration{0.5, 2.0};      // trajectory d_min
    Range move_stretch{1.5, 3.0};       // d_max / d_min
    Range power{100.0, 500.0};          // watts in the motor-hold mode
};

/// Names with the config problem, empty when valid.
inline std::vector<std::string> generator_config_problems(const GeneratorConfig& c)
{
    std::vector<std::string> out;
    auto count = [&](const CountRange& r, const char* name, std::size_t min) {
        if (r.lo > r.hi) out.push_back(std::string(name) + ": empty range");
        if (r.lo < min) out.push_back(std::string(name) + ": minimum is " + std::to_string(min));
    };
    auto range = [&](const Range& r, const char* name, double min) {
        if (!(r.lo <= r.hi)) out.push_back(std::string(name) + ": empty range");
        if (!(r.lo >= min)) out.push_back(std::string(name) + ": values must be >= " + detail::fmt_num(min));
    };
    if (c.robot_count < 1) out.push_back("robot_count: at least one robot");
    count(c.activities_per_robot, "activities_per_robot", 2);
    count(c.locations_per_activity, "locations_per_activity", 1);
    count(c.trajectories_per_edge, "trajectories_per_edge", 1);
    count(c.modes_per_robot, "modes_per_robot", 1);
    if (!(c.optional_edge_probability >= 0.0 && c.optional_edge_probability <= 1.0)) out.push_back("optional_edge_probability: must be in [0, 1]");
    if (!(c.cycle_time_slack_factor >= 1.0)) out.push_back("cycle_time_slack_factor: must be >= 1");
    for (std::size_t k = 0; k < 5; ++k) range(c.energy_coeff_ranges[k], ("energy_coeff_ranges/C" + std::to_string(k + 1)).c_str(), 0.0);
    range(c.static_duration, "static_duration", 0.0);
    range(c.static_window, "static_window", 0.0);
    range(c.move_duration, "move_duration", 1e-3);
    range(c.move_stretch, "move_stretch", 1.0);
    range(c.power, "power", 0.0);
    return out;
}

/// Named configurations. "tiny" and "small" feed the oracle-based tests;
/// s5/m8/l12 mirror the robot counts of the benchmark data sets.
inline GeneratorConfig preset_config(const std::string& name, std::uint64_t seed)
{
    GeneratorConfig c;
    c.seed = seed;
    if (name == "tiny") {
        c.robot_count = 2;
        c.activities_per_robot = {2, 4};
        c.locations_per_activity = {1, 2};
        c.trajectories_per_edge = {1, 2};
        c.modes_per_robot = {1, 2};
        c.time_lag_count = 1;
        c.compat_pair_count = 1;
        c.collision_count = 1;
        c.cycle_time_slack_factor = 1.3;
    } else if (name == "small") {
        c.robot_count = 3;
        c.activities_per_robot = {3, 5};
        c.locations_per_activity = {1, 2};
        c.trajectories_per_edge = {1, 2};
        c.modes_per_robot = {1, 3};
        c.time_lag_count = 2;
        c.compat_pair_count = 1;
        c.collision_count = 2;
        c.cycle_time_slack_factor = 1.25;
    } else if (name == "s5") {
        c.robot_count = 5;
        c.activities_per_robot = {4, 6};
        c.locations_per_activity = {1, 3};
        c.trajectories_per_edge = {1, 2};
        c.modes_per_robot = {2, 3};
        c.time_lag_count = 4;
        c.compat_pair_count = 3;
        c.collision_count = 6;
        c.cycle_time_slack_factor = 1.2;
    } else if (name == "m8") {
        c.robot_count = 8;
        c.activities_per_robot = {5, 8};
        c.locations_per_activity = {1, 3};
        c.trajectories_per_edge = {1, 2};
        c.modes_per_robot = {2, 3};
        c.time_lag_count = 7;
        c.compat_pair_count = 5;
        c.collision_count = 12;
        c.cycle_time_slack_factor = 1.2;
    } else if (name == "l12") {
        c.robot_count = 12;
        c.activities_per_robot = {6, 10};
        c.locations_per_activity = {1, 3};
        c.trajectories_per_edge = {1, 2};
        c.modes_per_robot = {2, 3};
        c.time_lag_count = 11;
        c.compat_pair_count = 8;
        c.collision_count = 20;
        c.cycle_time_slack_factor = 1.2;
    } else {
        throw InputError("unknown preset \"" + name + "\" (expected tiny, small, s5, m8 or l12)");
    }
    return c;
}

struct GeneratedInstance {
    Instance instance;
    Solution witness; // feasible schedule the instance was built around
    std::vector<double> base_fastest_duration; // per robot, base circuit
};

namespace detail {

inline std::size_t draw(CounterRng& rng, const CountRange& r)
{
    return static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(r.lo), static_cast<std::int64_t>(r.hi)));
}

inline double draw(CounterRng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

inline void add_move(Robot& robot, const GeneratorConfig& c, CounterRng& rng, std::size_t from, std::size_t to, bool optional)
{
    DynamicActivity e;
    e.id = robot.id + "_e" + std::to_string(from) + "_" + std::to_string(to);
    e.from = from;
    e.to = to;
    e.optional = optional;
    for (std::size_t a = 0; a < robot.statics[from].locations.size(); ++a)
        for (std::size_t b = 0; b < robot.statics[to].locations.size(); ++b) {
            const std::size_t k = draw(rng, c.trajectories_per_edge);
            for (std::size_t i = 0; i < k; ++i) {
                Trajectory t;
                t.id = "t" + std::to_string(a) + std::to_string(b) + "_" + std::to_string(i);
                t.from_location = a;
                t.to_location = b;
                t.d_min = draw(rng, c.move_duration);
                t.d_max = t.d_min * draw(rng, c.move_stretch);
                for (std::size_t q = 0; q < 5; ++q) t.energy.coeffs[q] = draw(rng, c.energy_coeff_ranges[q]);
                e.trajectories.push_back(std::move(t));
            }
        }
    robot.moves.push_back(std::move(e));
}

inline double interval_overlap(double si, double di, double sj, double dj, double ct, int shifts)
{
    double worst = -kInf;
    for (int n = -shifts; n <= shifts; ++n) worst = std::max(worst, std::min(si + di - sj - n * ct, sj + dj + n * ct - si));
    return worst;
}

} // namespace detail

/// Builds a random instance around a constructed feasible schedule. Same
/// config (including seed) gives a byte-identical serialized instance.
inline GeneratedInstance generate_instance_with_witness(const GeneratorConfig& c)
{
    if (const auto problems = generator_config_problems(c); !problems.empty()) {
        std::string msg = "invalid generator config";
        for (const auto& p : problems) msg += "; " + p;
        throw InputError(msg);
    }
    CounterRng rng(c.seed);
    GeneratedInstance out;
    Instance& inst = out.instance;
    const std::size_t nr = c.robot_count;
    static const char* mode_names[] = {"hold", "brake", "bus_off"};

    // base circuits: statics [1, 2, ..., k-1, 0] with home 0 last
    std::vector<std::vector<std::size_t>> base_statics(nr), base_moves(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        CounterRng rr = rng.split(r + 1);
        Robot robot;
        robot.id = "R" + std::to_string(r + 1);
        const std::size_t nm = detail::draw(rr, c.modes_per_robot);
        std::vector<double> factor(nm, 1.0);
        for (std::size_t m = 0; m < nm; ++m) {
            PowerMode pm;
            pm.id = m < 3 ? mode_names[m] : "mode" + std::to_string(m);
            pm.min_switch_time = m == 0 ? 0.0 : rr.uniform(0.5, 2.0) * static_cast<double>(m);
            if (m > 0) factor[m] = factor[m - 1] * rr.uniform(0.3, 0.7);
            robot.modes.push_back(pm);
        }
        const std::size_t k = detail::draw(rr, c.activities_per_robot);
        for (std::size_t v = 0; v < k; ++v) {
            StaticActivity a;
            a.id = robot.id + (v == 0 ? "_home" : "_v" + std::to_string(v));
            if (v == 0) {
                a.d_min = 0.0;
                a.d_max = 0.0; // set to CT below
            } else {
                a.d_min = detail::draw(rr, c.static_duration);
                a.d_max = a.d_min + detail::draw(rr, c.static_window);
            }
            const std::size_t nl = detail::draw(rr, c.locations_per_activity);
            for (std::size_t l = 0; l < nl; ++l) {
                Location loc;
                loc.id = "L" + std::to_string(l);
                const double base = detail::draw(rr, c.power);
                for (std::size_t m = 0; m < nm; ++m) loc.power.push_back(base * factor[m]);
                a.locations.push_back(std::move(loc));
            }
            robot.statics.push_back(std::move(a));
        }
        robot.home = 0;

        // order swaps (p, a, b, s) -> (p, b, a, s) make the touching moves optional
        std::set<std::pair<std::size_t, std::size_t>> optional_arcs, extra_arcs;
        if (k >= 3) {
            std::size_t i = 1;
            while (i + 1 <= k - 1) {
                if (rr.bernoulli(c.optional_edge_probability)) {
                    const std::size_t p = i - 1, a = i, b = i + 1, s = (i + 2) % k;
                    for (auto arc : {std::pair{p, a}, std::pair{a, b}, std::pair{b, s}}) optional_arcs.insert(arc);
                    for (auto arc : {std::pair{p, b}, std::pair{b, a}, std::pair{a, s}}) extra_arcs.insert(arc);
                    i += 3;
                } else {
                    ++i;
                }
            }
        }
        for (std::size_t v = 0; v < k; ++v) {
            const std::size_t w = (v + 1) % k;
            detail::add_move(robot, c, rr, v, w, optional_arcs.count({v, w}) > 0);
            base_moves[r].push_back(robot.moves.size() - 1);
        }
        for (const auto& [a, b] : extra_arcs) detail::add_move(robot, c, rr, a, b, true);
        // moves[i] enters statics[i]; the first move leaves home
        for (std::size_t v = 1; v < k; ++v) base_statics[r].push_back(v);
        base_statics[r].push_back(0);
        std::vector<std::size_t> mv;
        for (std::size_t i = 0; i < k; ++i) mv.push_back(base_moves[r][i]);
        base_moves[r] = mv;
        inst.robots.push_back(std::move(robot));
    }

    std::vector<LocationSequence> fastest(nr);
    double longest = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
        fastest[r] = *fastest_path(inst.robots[r], base_statics[r], base_moves[r]);
        out.base_fastest_duration.push_back(fastest[r].duration);
        longest = std::max(longest, fastest[r].duration);
    }
    inst.cycle_time = longest * c.cycle_time_slack_factor;
    for (auto& robot : inst.robots) robot.statics[0].d_max = inst.cycle_time;

    // witness: fastest mode, fastest locations, home absorbs the slack
    const double ct = inst.cycle_time;
    Solution& w = out.witness;
    w.status = SolutionStatus::feasible;
    w.segments = 10;
    w.metadata.solver = "generator-witness";
    const PwlTable pwl(inst, w.segments);
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& robot = inst.robots[r];
        RobotSchedule sched;
        double t = rng.split(100 + r).uniform(0.0, ct);
        const std::size_t k = base_statics[r].size();
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t e = base_moves[r][i], v = base_statics[r][i];
            const auto& tr = robot.moves[e].trajectories[fastest[r].trajectories[i]];
            MoveSelection m;
            m.activity = e;
            m.trajectory = fastest[r].trajectories[i];
            m.start = t;
            m.duration = tr.d_min;
            m.energy = pwl.at(r, e, m.trajectory)(m.duration);
            m.exact_energy = tr.energy(m.duration);
            t += m.duration;
            StaticSelection s;
            s.activity = v;
            s.location = fastest[r].locations[i];
            s.mode = 0;
            s.start = t;
            s.duration = robot.statics[v].d_min;
            if (i + 1 == k) s.duration = std::max(0.0, ct - (fastest[r].duration - robot.statics[v].d_min));
            s.energy = robot.statics[v].locations[s.location].power[0] * s.duration;
            t += s.duration;
            sched.moves.push_back(m);
            sched.statics.push_back(s);
        }
        // exact closing: home ends where the next cycle's first move starts
        auto& home = sched.statics.back();
        home.duration = sched.moves[0].start + ct - home.start;
        home.energy = robot.statics[0].locations[home.location].power[0] * home.duration;
        w.robots.push_back(std::move(sched));
    }

    struct Item {
        ActivityRef ref;
        std::size_t item;
        double start, duration;
    };
    std::vector<Item> statics, all;
    for (std::size_t r = 0; r < nr; ++r) {
        for (const auto& s : w.robots[r].statics) {
            statics.push_back({static_ref(r, s.activity), s.location, s.start, s.duration});
            all.push_back(statics.back());
        }
        for (const auto& m : w.robots[r].moves) all.push_back({dynamic_ref(r, m.activity), m.trajectory, m.start, m.duration});
    }
    CounterRng g = rng.split(0xABC);
    auto pick_pair = [&](const std::vector<Item>& pool, auto&& accept) -> std::optional<std::pair<Item, Item>> {
        if (nr < 2) return std::nullopt;
        for (int attempt = 0; attempt < 200; ++attempt) {
            const Item& a = pool[g.index(pool.size())];
            const Item& b = pool[g.index(pool.size())];
            if (a.ref.robot == b.ref.robot) continue;
            if (accept(a, b)) return std::pair{a, b};
        }
        return std::nullopt;
    };

    for (std::size_t i = 0; i < c.time_lag_count; ++i) {
        auto p = pick_pair(statics, [](const Item&, const Item&) { return true; });
        if (!p) break;
        const double diff = p->second.start - p->first.start;
        TimeLag lag;
        lag.from = p->first.ref;
        lag.to = p->second.ref;
        lag.height = diff < 0.0 ? 1 : 0;
        lag.length = diff + ct * lag.height - g.uniform(0.0, 0.2) * ct;
        inst.time_lags.push_back(lag);
    }
    std::set<std::pair<ActivityRef, ActivityRef>> used;
    for (std::size_t i = 0; i < c.compat_pair_count; ++i) {
        auto p = pick_pair(statics, [&](const Item& a, const Item& b) { return !used.count({a.ref, b.ref}) && !used.count({b.ref, a.ref}); });
        if (!p) break;
        used.insert({p->first.ref, p->second.ref});
        SpatialCompatPair q;
        q.activity_1 = p->first.ref;
        q.activity_2 = p->second.ref;
        const std::size_t n1 = inst.robot(q.activity_1).statics[q.activity_1.index].locations.size();
        const std::size_t n2 = inst.robot(q.activity_2).statics[q.activity_2.index].locations.size();
        for (std::size_t a = 0; a < n1; ++a)
            for (std::size_t b = 0; b < n2; ++b)
                if ((a == p->first.item && b == p->second.item) || g.bernoulli(0.3)) q.pairs.emplace_back(a, b);
        inst.compat_pairs.push_back(std::move(q));
    }
    const int shifts = static_cast<int>(nr);
    for (std::size_t i = 0; i < c.collision_count; ++i) {
        // items used by the witness must not overlap there in time
        auto p = pick_pair(all, [&](const Item& a, const Item& b) {
            return detail::interval_overlap(a.start, a.duration, b.start, b.duration, ct, shifts) < -1e-3;
        });
        if (!p) break;
        CollisionQuad cq;
        cq.activity_1 = p->first.ref;
        cq.activity_2 = p->second.ref;
        auto count = [&](const ActivityRef& a) {
            const auto& r = inst.robot(a);
            return a.is_static() ? r.statics[a.index].locations.size() : r.moves[a.index].trajectories.size();
        };
        cq.item_1 = g.bernoulli(0.8) ? p->first.item : g.index(count(cq.activity_1));
        cq.item_2 = g.bernoulli(0.8) ? p->second.item : g.index(count(cq.activity_2));
        inst.collisions.push_back(cq);
    }
    w.recompute_totals();
    return out;
}

inline Instance generate_instance(const GeneratorConfig& c) { return generate_instance_with_witness(c).instance; }

/// Generator configuration from JSON. An optional "preset" supplies the
/// defaults; the other fields override it. Ranges are [lo, hi] pairs.
inline GeneratorConfig parse_generator_config(std::string_view text)
{
    const detail::ojson j = detail::parse_text(text);
    const detail::Node root(j, "");
    root.expect_object({"preset", "seed", "robot_count", "activities_per_robot", "locations_per_activity", "trajectories_per_edge",
                        "optional_edge_probability", "modes_per_robot", "time_lag_count", "compat_pair_count", "collision_count",
                        "cycle_time_slack_factor", "energy_coeff_ranges", "static_duration", "static_window", "move_duration",
                        "move_stretch", "power"});
    const std::uint64_t seed = root.has("seed") ? root.at("seed").unsigned_integer() : 0;
    GeneratorConfig c;
    c.seed = seed;
    if (root.has("preset")) {
        try {
            c = preset_config(root.at("preset").string(), seed);
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            root.at("preset").fail(e.what());
        }
    }
    auto count = [&](const char* key, CountRange& r) {
        if (!root.has(key)) return;
        const detail::Node n = root.at(key);
        if (n.array().size() != 2) n.fail("expected [lo, hi]");
        r = {static_cast<std::size_t>(n.at(std::size_t{0}).unsigned_integer()), static_cast<std::size_t>(n.at(std::size_t{1}).unsigned_integer())};
    };
    auto range_of = [](const detail::Node& n) {
        if (n.array().size() != 2) n.fail("expected [lo, hi]");
        return Range{n.at(std::size_t{0}).number(), n.at(std::size_t{1}).number()};
    };
    auto range = [&](const char* key, Range& r) {
        if (root.has(key)) r = range_of(root.at(key));
    };
    auto size = [&](const char* key, std::size_t& v) {
        if (root.has(key)) v = static_cast<std::size_t>(root.at(key).unsigned_integer());
    };
    auto real = [&](const char* key, double& v) {
        if (root.has(key)) v = root.at(key).number();
    };
    size("robot_count", c.robot_count);
    count("activities_per_robot", c.activities_per_robot);
    count("locations_per_activity", c.locations_per_activity);
    count("trajectories_per_edge", c.trajectories_per_edge);
    real("optional_edge_probability", c.optional_edge_probability);
    count("modes_per_robot", c.modes_per_robot);
    size("time_lag_count", c.time_lag_count);
    size("compat_pair_count", c.compat_pair_count);
    size("collision_count", c.collision_count);
    real("cycle_time_slack_factor", c.cycle_time_slack_factor);
    if (root.has("energy_coeff_ranges")) {
        const auto n = root.at("energy_coeff_ranges");
        const auto items = n.array();
        if (items.size() != 5) n.fail("expected five [lo, hi] ranges (C1..C5)");
        for (std::size_t k = 0; k < 5; ++k) c.energy_coeff_ranges[k] = range_of(items[k]);
    }
    range("static_duration", c.static_duration);
    range("static_window", c.static_window);
    range("move_duration", c.move_duration);
    range("move_stretch", c.move_stretch);
    range("power", c.power);
    const auto problems = generator_config_problems(c);
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        throw ParseError(ParseError::Kind::semantic, "", msg);
    }
    return c;
}

inline std::string serialize_generator_config(const GeneratorConfig& c)
{
    detail::ojson j;
    auto cr = [](const CountRange& r) { return detail::ojson::array({r.lo, r.hi}); };
    auto rr = [](const Range& r) { return detail::ojson::array({r.lo, r.hi}); };
    j["seed"] = c.seed;
    j["robot_count"] = c.robot_count;
    j["activities_per_robot"] = cr(c.activities_per_robot);
    j["locations_per_activity"] = cr(c.locations_per_activity);
    j["trajectories_per_edge"] = cr(c.trajectories_per_edge);
    j["optional_edge_probability"] = c.optional_edge_probability;
    j["modes_per_robot"] = cr(c.modes_per_robot);
    j["time_lag_count"] = c.time_lag_count;
    j["compat_pair_count"] = c.compat_pair_count;
    j["collision_count"] = c.collision_count;
    j["cycle_time_slack_factor"] = c.cycle_time_slack_factor;
    j["energy_coeff_ranges"] = detail::ojson::array();
    for (const auto& r : c.energy_coeff_ranges) j["energy_coeff_ranges"].push_back(rr(r));
    j["static_duration"] = rr(c.static_duration);
    j["static_window"] = rr(c.static_window);
    j["move_duration"] = rr(c.move_duration);
    j["move_stretch"] = rr(c.move_stretch);
    j["power"] = rr(c.power);
    return detail::to_text(j);
}

} // namespace cellopt
