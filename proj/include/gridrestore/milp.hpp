#pragma once

// Solver-independent mixed-integer linear program representation. Variables
// are referenced by dense index; every constraint carries a structured tag
// (family:entity:interval) so infeasibilities and verification failures can
// be reported against the originating model row.

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridrestore {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };
enum class Rel { le, eq, ge };

struct Variable {
    std::string name;
    VarKind kind = VarKind::continuous;
    double lb = 0.0;
    double ub = kInf;
};

struct LinTerm {
    int var = 0;
    double coef = 0.0;
};

struct Constraint {
    std::string tag;  // "family:entity:interval" (entity/interval optional)
    std::vector<LinTerm> terms;
    Rel rel = Rel::le;
    double rhs = 0.0;
};

struct MilpInstance {
    std::vector<Variable> vars;
    std::vector<Constraint> cons;
    std::vector<LinTerm> objective;  // sense: maximize
    bool degenerate = false;         // true when the model has no generation resource

    std::map<std::string, int> name_index;

    int add_var(const std::string& name, VarKind kind, double lb, double ub) {
        if (name_index.count(name)) throw std::invalid_argument("duplicate variable name: " + name);
        if (lb > ub) throw std::invalid_argument("variable " + name + ": lb > ub");
        if (kind == VarKind::binary) {
            if (!((lb == 0.0 || lb == 1.0) && (ub == 0.0 || ub == 1.0)))
                throw std::invalid_argument("binary variable " + name + ": bounds must be 0/1");
        }
        vars.push_back({name, kind, lb, ub});
        int idx = static_cast<int>(vars.size()) - 1;
        name_index[name] = idx;
        return idx;
    }

    void add_con(const std::string& tag, std::vector<LinTerm> terms, Rel rel, double rhs) {
        for (const auto& t : terms)
            if (t.var < 0 || t.var >= static_cast<int>(vars.size()))
                throw std::invalid_argument("constraint " + tag + ": bad variable index");
        cons.push_back({tag, std::move(terms), rel, rhs});
    }

    int find_var(const std::string& name) const {
        auto it = name_index.find(name);
        return it == name_index.end() ? -1 : it->second;
    }

    int binary_count() const {
        int n = 0;
        for (const auto& v : vars)
            if (v.kind == VarKind::binary) ++n;
        return n;
    }

    double objective_value(const std::vector<double>& x) const {
        double s = 0;
        for (const auto& t : objective) s += t.coef * x[t.var];
        return s;
    }

    // Largest violation of any row/bound/integrality by the assignment.
    double max_violation(const std::vector<double>& x) const {
        double worst = 0;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            worst = std::max(worst, vars[i].lb - x[i]);
            worst = std::max(worst, x[i] - vars[i].ub);
            if (vars[i].kind == VarKind::binary)
                worst = std::max(worst, std::abs(x[i] - std::round(x[i])));
        }
        for (const auto& c : cons) {
            double lhs = 0;
            for (const auto& t : c.terms) lhs += t.coef * x[t.var];
            switch (c.rel) {
                case Rel::le: worst = std::max(worst, lhs - c.rhs); break;
                case Rel::ge: worst = std::max(worst, c.rhs - lhs); break;
                case Rel::eq: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
            }
        }
        return worst;
    }
};

inline std::string make_tag(const std::string& family, const std::string& entity = "", int interval = -1) {
    std::string t = family;
    if (!entity.empty() || interval >= 0) t += ":" + entity;
    if (interval >= 0) t += ":" + std::to_string(interval);
    return t;
}

}  // namespace gridrestore
