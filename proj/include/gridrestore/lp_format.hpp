#pragma once

// Canonical LP-file writer and parser (CPLEX-style dialect). The writer is
// deterministic and bit-stable: variables appear in instance order via an
// explicit `\ var:` manifest, constraints keep instance order, numbers are
// printed with %.17g so a round trip restores exact doubles, and each
// constraint's tag rides along as a comment line. The parser accepts the
// canonical form plus the common relaxations (free token order in bounds,
// multi-line expressions, missing manifest).

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridrestore/milp.hpp"

namespace gridrestore {

namespace lpdetail {

inline std::string num(double v) {
    if (std::isnan(v)) throw std::invalid_argument("cannot print NaN in LP file");
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void append_terms(std::string& out, const std::vector<LinTerm>& terms,
                         const std::vector<Variable>& vars) {
    bool first = true;
    for (const auto& t : terms) {
        if (t.coef == 0.0) continue;
        double mag = std::abs(t.coef);
        if (first) {
            if (t.coef < 0) out += "- ";
            first = false;
        } else {
            out += t.coef < 0 ? " - " : " + ";
        }
        out += num(mag);
        out += ' ';
        out += vars[t.var].name;
    }
    if (first) {
        // Empty expression: keep the row parseable with an explicit zero term.
        out += "0 ";
        out += vars.empty() ? std::string("x0") : vars[0].name;
    }
}

}  // namespace lpdetail

inline std::string write_lp(const MilpInstance& m) {
    std::string out;
    out.reserve(4096 + 64 * (m.vars.size() + m.cons.size()));
    out += "\\ LP export\n";
    for (const auto& v : m.vars) {
        out += "\\ var: ";
        out += v.name;
        out += '\n';
    }
    out += "Maximize\n obj: ";
    lpdetail::append_terms(out, m.objective, m.vars);
    out += "\nSubject To\n";
    for (std::size_t i = 0; i < m.cons.size(); ++i) {
        const auto& c = m.cons[i];
        if (!c.tag.empty()) {
            out += "\\ tag: ";
            out += c.tag;
            out += '\n';
        }
        out += " c";
        out += std::to_string(i);
        out += ": ";
        lpdetail::append_terms(out, c.terms, m.vars);
        switch (c.rel) {
            case Rel::le: out += " <= "; break;
            case Rel::ge: out += " >= "; break;
            case Rel::eq: out += " = "; break;
        }
        out += lpdetail::num(c.rhs);
        out += '\n';
    }
    out += "Bounds\n";
    for (const auto& v : m.vars) {
        out += ' ';
        if (v.lb == v.ub) {
            out += v.name + " = " + lpdetail::num(v.lb);
        } else if (std::isinf(v.lb) && std::isinf(v.ub)) {
            out += v.name + " free";
        } else {
            out += lpdetail::num(v.lb) + " <= " + v.name + " <= " + lpdetail::num(v.ub);
        }
        out += '\n';
    }
    bool any_bin = false;
    for (const auto& v : m.vars)
        if (v.kind == VarKind::binary) {
            if (!any_bin) out += "Binaries\n";
            any_bin = true;
            out += ' ';
            out += v.name;
            out += '\n';
        }
    out += "End\n";
    return out;
}

namespace lpdetail {

struct Token {
    enum Kind { ident, number, plus, minus, rel_le, rel_ge, rel_eq, colon } kind;
    std::string text;
    double value = 0;
};

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '[' ||
           c == ']' || c == '(' || c == ')' || c == '#';
}

inline std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto peek = [&](std::size_t k) { return k < line.size() ? line[k] : '\0'; };
    while (i < line.size()) {
        char c = line[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '<' || c == '>') {
            out.push_back({c == '<' ? Token::rel_le : Token::rel_ge, std::string(1, c)});
            if (peek(i + 1) == '=') ++i;
            ++i;
            continue;
        }
        if (c == '=') {
            out.push_back({Token::rel_eq, "="});
            if (peek(i + 1) == '<') {
                out.back().kind = Token::rel_le;
                ++i;
            } else if (peek(i + 1) == '>') {
                out.back().kind = Token::rel_ge;
                ++i;
            }
            ++i;
            continue;
        }
        if (c == '+') {
            out.push_back({Token::plus, "+"});
            ++i;
            continue;
        }
        if (c == '-') {
            out.push_back({Token::minus, "-"});
            ++i;
            continue;
        }
        if (c == ':') {
            out.push_back({Token::colon, ":"});
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && std::isdigit(static_cast<unsigned char>(peek(i + 1))))) {
            std::size_t j = i;
            while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.'))
                ++j;
            if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
                if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
                    ++k;
                    while (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) ++k;
                    j = k;
                }
            }
            Token t{Token::number, line.substr(i, j - i)};
            t.value = std::stod(t.text);
            out.push_back(t);
            i = j;
            continue;
        }
        if (ident_char(c)) {
            std::size_t j = i;
            while (j < line.size() && ident_char(line[j])) ++j;
            out.push_back({Token::ident, line.substr(i, j - i)});
            i = j;
            continue;
        }
        throw std::invalid_argument("LP parse: unexpected character '" + std::string(1, c) + "'");
    }
    return out;
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline bool is_inf_ident(const std::string& s) {
    std::string l = lower(s);
    return l == "inf" || l == "infinity" || l == "1e30";
}

}  // namespace lpdetail

// Parses the LP dialect produced by write_lp (and close relatives). Returns a
// maximize-sense instance; a Minimize header negates the objective.
inline MilpInstance parse_lp(const std::string& text) {
    using lpdetail::Token;
    MilpInstance m;
    bool minimize = false;
    bool have_manifest = false;

    auto var_index = [&](const std::string& name) {
        int idx = m.find_var(name);
        if (idx >= 0) return idx;
        if (have_manifest) throw std::invalid_argument("LP parse: variable not in manifest: " + name);
        return m.add_var(name, VarKind::continuous, 0.0, kInf);
    };

    enum Section { none, objective, constraints, bounds, binaries, generals, done };
    Section sec = none;
    std::string pending_tag;
    std::vector<Token> expr;  // accumulated expression tokens (objective or one constraint)
    bool bound_seen = false;
    std::vector<bool> bound_set;

    auto flush_expr_as_constraint = [&]() {
        if (expr.empty()) return;
        std::size_t p = 0;
        // optional "name :" label
        if (expr.size() >= 2 && expr[0].kind == Token::ident && expr[1].kind == Token::colon) p = 2;
        std::vector<LinTerm> terms;
        std::optional<Rel> rel;
        double rhs = 0, rhs_sign = 1;
        bool rhs_set = false;
        double sign = 1;
        std::optional<double> coef;
        while (p < expr.size()) {
            const Token& t = expr[p];
            if (t.kind == Token::plus) {
                sign = 1;
                ++p;
            } else if (t.kind == Token::minus) {
                sign = -sign;
                ++p;
            } else if (t.kind == Token::rel_le || t.kind == Token::rel_ge || t.kind == Token::rel_eq) {
                if (rel) throw std::invalid_argument("LP parse: multiple relations in one constraint");
                rel = t.kind == Token::rel_le ? Rel::le : t.kind == Token::rel_ge ? Rel::ge : Rel::eq;
                sign = 1;
                ++p;
            } else if (t.kind == Token::number) {
                if (rel) {
                    rhs = sign * t.value;
                    rhs_sign = 1;
                    rhs_set = true;
                    sign = 1;
                } else {
                    coef = sign * t.value;
                    sign = 1;
                }
                ++p;
            } else if (t.kind == Token::ident) {
                if (lpdetail::is_inf_ident(t.text) && rel) {
                    rhs = sign > 0 ? kInf : -kInf;
                    rhs_set = true;
                    ++p;
                    continue;
                }
                double c = coef.value_or(sign);
                if (coef) c = *coef;
                else c = sign;
                terms.push_back({var_index(t.text), c});
                coef.reset();
                sign = 1;
                ++p;
            } else {
                throw std::invalid_argument("LP parse: unexpected token in constraint: " + t.text);
            }
        }
        (void)rhs_sign;
        if (!rel || !rhs_set) throw std::invalid_argument("LP parse: constraint lacks relation or rhs");
        // Drop the writer's placeholder zero term for empty rows.
        std::vector<LinTerm> kept;
        for (const auto& tm : terms)
            if (tm.coef != 0.0) kept.push_back(tm);
        m.add_con(pending_tag, std::move(kept), *rel, rhs);
        pending_tag.clear();
        expr.clear();
    };

    auto flush_expr_as_objective = [&]() {
        if (expr.empty()) return;
        std::size_t p = 0;
        if (expr.size() >= 2 && expr[0].kind == Token::ident && expr[1].kind == Token::colon) p = 2;
        double sign = 1;
        std::optional<double> coef;
        for (; p < expr.size(); ++p) {
            const Token& t = expr[p];
            if (t.kind == Token::plus) sign = 1;
            else if (t.kind == Token::minus) sign = -sign;
            else if (t.kind == Token::number) { coef = sign * t.value; sign = 1; }
            else if (t.kind == Token::ident) {
                double c = coef ? *coef : sign;
                if (c != 0.0) m.objective.push_back({var_index(t.text), minimize ? -c : c});
                coef.reset();
                sign = 1;
            } else {
                throw std::invalid_argument("LP parse: unexpected token in objective");
            }
        }
        expr.clear();
    };

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        // Comments; the writer smuggles the variable manifest and row tags here.
        std::string trimmed = line;
        std::size_t b = trimmed.find_first_not_of(" \t\r");
        trimmed = b == std::string::npos ? std::string() : trimmed.substr(b);
        if (trimmed.empty()) continue;
        if (trimmed[0] == '\\') {
            if (trimmed.rfind("\\ var: ", 0) == 0) {
                std::string name = trimmed.substr(7);
                while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
                if (!name.empty() && m.find_var(name) < 0) {
                    m.add_var(name, VarKind::continuous, 0.0, kInf);
                    have_manifest = true;
                }
            } else if (trimmed.rfind("\\ tag: ", 0) == 0) {
                pending_tag = trimmed.substr(7);
                while (!pending_tag.empty() && (pending_tag.back() == '\r' || pending_tag.back() == ' '))
                    pending_tag.pop_back();
            }
            continue;
        }

        std::string l = lpdetail::lower(trimmed);
        while (!l.empty() && (l.back() == '\r' || l.back() == ' ')) l.pop_back();
        auto section_switch = [&](Section s) {
            if (sec == objective) flush_expr_as_objective();
            if (sec == constraints) flush_expr_as_constraint();
            sec = s;
        };
        if (l == "maximize" || l == "maximise" || l == "max") { section_switch(objective); continue; }
        if (l == "minimize" || l == "minimise" || l == "min") { minimize = true; section_switch(objective); continue; }
        if (l == "subject to" || l == "st" || l == "s.t." || l == "such that") { section_switch(constraints); continue; }
        if (l == "bounds") { section_switch(bounds); bound_set.assign(m.vars.size(), false); bound_seen = true; continue; }
        if (l == "binaries" || l == "binary" || l == "bin") { section_switch(binaries); continue; }
        if (l == "generals" || l == "general" || l == "gen") { section_switch(generals); continue; }
        if (l == "end") { section_switch(done); continue; }

        auto toks = lpdetail::tokenize(trimmed);
        if (toks.empty()) continue;
        switch (sec) {
            case objective:
                for (auto& t : toks) expr.push_back(t);
                break;
            case constraints: {
                // A label token pair starts a new constraint; otherwise the line
                // continues the current expression. The relation+rhs already being
                // present also terminates a constraint.
                bool starts_new = toks.size() >= 2 && toks[0].kind == Token::ident && toks[1].kind == Token::colon;
                if (starts_new) flush_expr_as_constraint();
                for (auto& t : toks) expr.push_back(t);
                bool has_rel = false, has_rhs = false;
                for (std::size_t i = 0; i < expr.size(); ++i) {
                    if (expr[i].kind == Token::rel_le || expr[i].kind == Token::rel_ge ||
                        expr[i].kind == Token::rel_eq) {
                        has_rel = true;
                        if (i + 1 < expr.size()) has_rhs = true;
                    }
                }
                if (has_rel && has_rhs) flush_expr_as_constraint();
                break;
            }
            case bounds: {
                // Forms: "x free" | "lo <= x <= hi" | "x <= hi" | "x >= lo" | "x = v"
                if (toks.size() == 2 && toks[0].kind == Token::ident && toks[1].kind == Token::ident &&
                    lpdetail::lower(toks[1].text) == "free") {
                    int vi = var_index(toks[0].text);
                    m.vars[vi].lb = -kInf;
                    m.vars[vi].ub = kInf;
                    break;
                }
                auto read_num = [&](std::size_t& p, bool& ok) -> double {
                    double sg = 1;
                    while (p < toks.size() && (toks[p].kind == Token::plus || toks[p].kind == Token::minus)) {
                        if (toks[p].kind == Token::minus) sg = -sg;
                        ++p;
                    }
                    if (p < toks.size() && toks[p].kind == Token::number) {
                        ok = true;
                        return sg * toks[p++].value;
                    }
                    if (p < toks.size() && toks[p].kind == Token::ident && lpdetail::is_inf_ident(toks[p].text)) {
                        ok = true;
                        ++p;
                        return sg * kInf;
                    }
                    ok = false;
                    return 0;
                };
                std::size_t p = 0;
                bool ok = false;
                double first = read_num(p, ok);
                if (ok) {
                    // lo <= x <= hi
                    if (p >= toks.size() || toks[p].kind != Token::rel_le)
                        throw std::invalid_argument("LP parse: malformed bound line");
                    ++p;
                    if (p >= toks.size() || toks[p].kind != Token::ident)
                        throw std::invalid_argument("LP parse: malformed bound line");
                    int vi = var_index(toks[p++].text);
                    m.vars[vi].lb = first;
                    if (p < toks.size()) {
                        if (toks[p].kind != Token::rel_le)
                            throw std::invalid_argument("LP parse: malformed bound line");
                        ++p;
                        bool ok2 = false;
                        double hi = read_num(p, ok2);
                        if (!ok2) throw std::invalid_argument("LP parse: malformed bound line");
                        m.vars[vi].ub = hi;
                    }
                } else {
                    if (toks[p].kind != Token::ident) throw std::invalid_argument("LP parse: malformed bound line");
                    int vi = var_index(toks[p++].text);
                    if (p >= toks.size()) throw std::invalid_argument("LP parse: malformed bound line");
                    Token::Kind rk = toks[p].kind;
                    ++p;
                    bool ok2 = false;
                    double val = read_num(p, ok2);
                    if (!ok2) throw std::invalid_argument("LP parse: malformed bound line");
                    if (rk == Token::rel_le) m.vars[vi].ub = val;
                    else if (rk == Token::rel_ge) m.vars[vi].lb = val;
                    else if (rk == Token::rel_eq) { m.vars[vi].lb = val; m.vars[vi].ub = val; }
                    else throw std::invalid_argument("LP parse: malformed bound line");
                }
                break;
            }
            case binaries:
                for (const auto& t : toks) {
                    if (t.kind != Token::ident) throw std::invalid_argument("LP parse: malformed binaries line");
                    int vi = var_index(t.text);
                    m.vars[vi].kind = VarKind::binary;
                    // Unless Bounds tightened them, binaries live on {0,1}.
                    if (m.vars[vi].lb < 0) m.vars[vi].lb = 0;
                    if (m.vars[vi].ub > 1) m.vars[vi].ub = 1;
                }
                break;
            case generals:
                break;  // accepted and ignored: the pipeline emits no general integers
            case none:
            case done:
                throw std::invalid_argument("LP parse: content outside any section: " + trimmed);
        }
    }
    if (sec == objective) flush_expr_as_objective();
    if (sec == constraints) flush_expr_as_constraint();
    (void)bound_seen;
    return m;
}

// ---------------------------------------------------------------------------
// Solution-file format used by the external solver bridge:
//   status <optimal|feasible|infeasible|unbounded|limit|error>
//   objective <value>
//   <variable name> <value>     (one per line)

struct SolutionFile {
    std::string status;
    double objective = 0.0;
    bool has_objective = false;
    std::map<std::string, double> values;
};

inline SolutionFile parse_solution(const std::string& text) {
    SolutionFile s;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string a;
        if (!(ls >> a)) continue;
        if (a == "#") continue;
        if (a == "status") {
            ls >> s.status;
        } else if (a == "objective") {
            ls >> s.objective;
            s.has_objective = true;
        } else {
            double v;
            if (ls >> v) s.values[a] = v;
        }
    }
    if (s.status.empty()) throw std::invalid_argument("solution file: missing status line");
    return s;
}

inline std::string write_solution(const SolutionFile& s) {
    std::string out = "status " + s.status + "\n";
    if (s.has_objective) out += "objective " + lpdetail::num(s.objective) + "\n";
    for (const auto& [k, v] : s.values) out += k + " " + lpdetail::num(v) + "\n";
    return out;
}

}  // namespace gridrestore
