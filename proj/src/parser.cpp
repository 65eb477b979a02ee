#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowkit/lang.hpp"

namespace flowkit {

namespace {

// ---------------------------------------------------------------- lexer

enum class Tok {
    ident, integer, string,
    lbrace, rbrace, lparen, rparen,
    colon, comma, dot, star, slash,
    arrow, fat_arrow, assign,
    eq, ne, lt, le, gt, ge,
    end,
};

struct Lexeme {
    Tok tok = Tok::end;
    std::string text;
    std::int64_t value = 0;
    Span span;
};

struct Lexer {
    const SourceUnit& src;
    std::vector<Diagnostic>& diags;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    Span here(int length = 1) const { return {src.file, line, col, length}; }

    char peek(std::size_t ahead = 0) const {
        return pos + ahead < src.content.size() ? src.content[pos + ahead] : '\0';
    }

    void bump() {
        if (pos >= src.content.size()) return;
        if (src.content[pos] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++pos;
    }

    void skip_trivia() {
        while (pos < src.content.size()) {
            char c = peek();
            if (c == '#') {
                while (pos < src.content.size() && peek() != '\n') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                break;
            }
        }
    }

    Lexeme next() {
        skip_trivia();
        Lexeme lx;
        lx.span = here();
        if (pos >= src.content.size()) {
            lx.tok = Tok::end;
            return lx;
        }
        char c = peek();
        auto two = [&](char a, char b) { return c == a && peek(1) == b; };
        if (two('-', '>')) return punct(lx, Tok::arrow, 2);
        if (two('=', '>')) return punct(lx, Tok::fat_arrow, 2);
        if (two('=', '=')) return punct(lx, Tok::eq, 2);
        if (two('!', '=')) return punct(lx, Tok::ne, 2);
        if (two('<', '=')) return punct(lx, Tok::le, 2);
        if (two('>', '=')) return punct(lx, Tok::ge, 2);
        switch (c) {
            case '{': return punct(lx, Tok::lbrace, 1);
            case '}': return punct(lx, Tok::rbrace, 1);
            case '(': return punct(lx, Tok::lparen, 1);
            case ')': return punct(lx, Tok::rparen, 1);
            case ':': return punct(lx, Tok::colon, 1);
            case ',': return punct(lx, Tok::comma, 1);
            case '.': return punct(lx, Tok::dot, 1);
            case '*': return punct(lx, Tok::star, 1);
            case '/': return punct(lx, Tok::slash, 1);
            case '=': return punct(lx, Tok::assign, 1);
            case '<': return punct(lx, Tok::lt, 1);
            case '>': return punct(lx, Tok::gt, 1);
            default: break;
        }
        if (c == '"') {
            bump();
            std::string text;
            while (pos < src.content.size() && peek() != '"' && peek() != '\n') {
                text += peek();
                bump();
            }
            if (peek() == '"') {
                bump();
            } else {
                diags.push_back({Severity::error, "P1", "unterminated string", lx.span});
            }
            lx.tok = Tok::string;
            lx.text = text;
            lx.span.length = static_cast<int>(text.size()) + 2;
            return lx;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            std::string text;
            if (c == '-') {
                text += c;
                bump();
            }
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                text += peek();
                bump();
            }
            lx.tok = Tok::integer;
            lx.text = text;
            lx.value = std::stoll(text);
            lx.span.length = static_cast<int>(text.size());
            return lx;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string text;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
                text += peek();
                bump();
            }
            lx.tok = Tok::ident;
            lx.text = text;
            lx.span.length = static_cast<int>(text.size());
            return lx;
        }
        diags.push_back({Severity::error, "P1",
                         std::string("unexpected character '") + c + "'", lx.span});
        bump();
        return next();
    }

    Lexeme punct(Lexeme lx, Tok t, int len) {
        lx.tok = t;
        lx.span.length = len;
        for (int i = 0; i < len; ++i) {
            lx.text += peek();
            bump();
        }
        return lx;
    }
};

// ------------------------------------------------------------------ AST

struct AstKind {
    std::string name;
    bool state = false;
    std::vector<AttrDecl> schema;
    Span span;
};

struct AstFlowsystem {
    std::string name;
    std::string kind;
    Span kind_span;
    std::vector<std::pair<std::string, Span>> stages;  // may include "receive"
    bool has_arcs = false;
    std::vector<std::tuple<std::string, std::string, Span>> arcs;
    Span span;
};

struct AstSphere {
    std::string name;
    std::vector<AstSphere> subspheres;
    std::vector<AstFlowsystem> flowsystems;
    Span span;
};

struct AstFlow {
    std::string from, to;
    Span from_span, to_span;
    std::optional<std::int64_t> delay;
    Span span;
};

struct AstSource {
    std::string path;
    Span span;
    std::optional<Expr> guard;
};

struct AstTrigger {
    std::vector<AstSource> sources;
    std::string effect;  // inject | start | open | close
    std::string kind;    // inject
    Span kind_span;
    std::string target;  // inject target / timer / sphere path
    Span target_span;
    std::vector<AttrAssign> assigns;
    Span span;
};

struct AstTimer {
    std::string path;
    std::int64_t base = 1;
    std::string scale_env;
    Span span;
};

struct AstGate {
    std::string controller, controlled;
    Span controller_span, controlled_span;
    std::string close_symbol = "STOP";
    std::string open_symbol = "GO";
    Span span;
};

struct AstUnit {
    std::vector<AstKind> kinds;
    std::vector<AstSphere> spheres;
    std::vector<AstFlow> flows;
    std::vector<AstTrigger> triggers;
    std::vector<AstTimer> timers;
    std::vector<AstGate> gates;
    std::vector<Scenario> scenarios;  // injections/paths stay textual
};

// --------------------------------------------------------------- parser

struct Parser {
    Lexer lex;
    std::vector<Diagnostic>& diags;
    Lexeme cur;
    AstUnit unit;

    explicit Parser(const SourceUnit& src, std::vector<Diagnostic>& diags)
        : lex{src, diags}, diags(diags) {
        cur = lex.next();
    }

    void advance() { cur = lex.next(); }

    bool at_ident(const char* kw) const { return cur.tok == Tok::ident && cur.text == kw; }

    void error_here(const std::string& msg, const char* code = "P1") {
        diags.push_back({Severity::error, code, msg, cur.span});
    }

    bool expect(Tok t, const char* what) {
        if (cur.tok == t) return true;
        error_here(std::string("expected ") + what);
        return false;
    }

    // skip to the next plausible top-level declaration keyword
    void recover_top() {
        static const char* kws[] = {"kind", "sphere",  "flow", "trigger",
                                    "timer", "gate", "scenario"};
        int depth = 0;
        while (cur.tok != Tok::end) {
            if (cur.tok == Tok::lbrace) ++depth;
            if (cur.tok == Tok::rbrace && depth > 0) --depth;
            if (depth == 0 && cur.tok == Tok::ident)
                for (const char* k : kws)
                    if (cur.text == k) return;
            advance();
        }
    }

    std::optional<std::string> parse_ident(const char* what) {
        if (cur.tok != Tok::ident) {
            error_here(std::string("expected ") + what);
            return std::nullopt;
        }
        std::string text = cur.text;
        advance();
        return text;
    }

    // IDENT or quoted string (kind names, symbols)
    std::optional<std::string> parse_name(const char* what) {
        if (cur.tok == Tok::ident || cur.tok == Tok::string) {
            std::string text = cur.text;
            advance();
            return text;
        }
        error_here(std::string("expected ") + what);
        return std::nullopt;
    }

    std::optional<std::pair<std::string, Span>> parse_path() {
        if (cur.tok != Tok::ident) {
            error_here("expected a dotted path");
            return std::nullopt;
        }
        std::string path = cur.text;
        Span span = cur.span;
        advance();
        while (cur.tok == Tok::dot) {
            advance();
            if (cur.tok != Tok::ident) {
                error_here("expected a path segment after '.'");
                return std::nullopt;
            }
            path += '.' + cur.text;
            span.length = cur.span.column + cur.span.length - span.column;
            advance();
        }
        return std::make_pair(path, span);
    }

    std::optional<std::int64_t> parse_int(const char* what) {
        if (cur.tok != Tok::integer) {
            error_here(std::string("expected ") + what);
            return std::nullopt;
        }
        std::int64_t v = cur.value;
        advance();
        return v;
    }

    // ---- expressions (guards)

    std::optional<Expr> parse_expr() { return parse_or(); }

    std::optional<Expr> parse_or() {
        auto lhs = parse_and();
        if (!lhs) return std::nullopt;
        while (at_ident("or")) {
            advance();
            auto rhs = parse_and();
            if (!rhs) return std::nullopt;
            *lhs = Expr::binary(Expr::Op::or_, std::move(*lhs), std::move(*rhs));
        }
        return lhs;
    }

    std::optional<Expr> parse_and() {
        auto lhs = parse_not();
        if (!lhs) return std::nullopt;
        while (at_ident("and")) {
            advance();
            auto rhs = parse_not();
            if (!rhs) return std::nullopt;
            *lhs = Expr::binary(Expr::Op::and_, std::move(*lhs), std::move(*rhs));
        }
        return lhs;
    }

    std::optional<Expr> parse_not() {
        if (at_ident("not")) {
            advance();
            auto inner = parse_not();
            if (!inner) return std::nullopt;
            return Expr::negate(std::move(*inner));
        }
        return parse_cmp();
    }

    std::optional<Expr> parse_cmp() {
        auto lhs = parse_primary();
        if (!lhs) return std::nullopt;
        Expr::Op op;
        switch (cur.tok) {
            case Tok::eq: op = Expr::Op::eq; break;
            case Tok::ne: op = Expr::Op::ne; break;
            case Tok::lt: op = Expr::Op::lt; break;
            case Tok::le: op = Expr::Op::le; break;
            case Tok::gt: op = Expr::Op::gt; break;
            case Tok::ge: op = Expr::Op::ge; break;
            default: return lhs;
        }
        advance();
        auto rhs = parse_primary();
        if (!rhs) return std::nullopt;
        return Expr::binary(op, std::move(*lhs), std::move(*rhs));
    }

    std::optional<Expr> parse_primary() {
        if (cur.tok == Tok::lparen) {
            advance();
            auto inner = parse_expr();
            if (!inner) return std::nullopt;
            if (!expect(Tok::rparen, "')'")) return std::nullopt;
            advance();
            return inner;
        }
        if (cur.tok == Tok::integer) {
            Expr e = Expr::lit(cur.value);
            e.span = cur.span;
            advance();
            return e;
        }
        if (cur.tok == Tok::string) {
            Expr e = Expr::sym(cur.text);
            e.span = cur.span;
            advance();
            return e;
        }
        if (cur.tok == Tok::ident) {
            std::string first = cur.text;
            Span span = cur.span;
            advance();
            if (cur.tok == Tok::dot) {
                advance();
                if (cur.tok != Tok::ident) {
                    error_here("expected an attribute name after '.'");
                    return std::nullopt;
                }
                Expr e = Expr::attr_of(first, cur.text);
                e.span = span;
                advance();
                return e;
            }
            Expr e = Expr::ref(first);
            e.span = span;
            return e;
        }
        error_here("expected a value");
        return std::nullopt;
    }

    // leaf-only expression for `with` assignments
    std::optional<Expr> parse_leaf(bool allow_refs) {
        auto e = parse_primary();
        if (!e) return std::nullopt;
        bool is_leaf = e->op == Expr::Op::lit_int || e->op == Expr::Op::lit_sym ||
                       e->op == Expr::Op::name || e->op == Expr::Op::qualified;
        if (!is_leaf) {
            diags.push_back({Severity::error, "P1", "expected a literal or attribute reference",
                             e->span});
            return std::nullopt;
        }
        if (!allow_refs && (e->op == Expr::Op::name || e->op == Expr::Op::qualified)) {
            diags.push_back({Severity::error, "P1",
                             "scenario attribute values must be literals (quote symbols)",
                             e->span});
            return std::nullopt;
        }
        return e;
    }

    bool parse_assign_list(std::vector<AttrAssign>& out, bool allow_refs) {
        while (true) {
            auto attr = parse_ident("an attribute name");
            if (!attr) return false;
            Span attr_span = cur.span;
            if (!expect(Tok::assign, "'='")) return false;
            advance();
            auto value = parse_leaf(allow_refs);
            if (!value) return false;
            for (const auto& a : out)
                if (a.attr == *attr)
                    diags.push_back({Severity::error, "P3",
                                     "duplicate attribute '" + *attr + "'", attr_span});
            out.push_back({*attr, std::move(*value)});
            if (cur.tok != Tok::comma) break;
            advance();
        }
        // assignment order is not semantics; store sorted
        std::stable_sort(out.begin(), out.end(),
                         [](const AttrAssign& a, const AttrAssign& b) { return a.attr < b.attr; });
        return true;
    }

    // ---- declarations

    bool parse_kind() {
        AstKind k;
        k.span = cur.span;
        advance();  // kind
        auto name = parse_name("a kind name");
        if (!name) return false;
        k.name = *name;
        if (at_ident("state")) {
            k.state = true;
            advance();
        }
        if (cur.tok == Tok::lbrace) {
            advance();
            while (cur.tok != Tok::rbrace) {
                auto attr = parse_ident("an attribute name");
                if (!attr) return false;
                if (!expect(Tok::colon, "':'")) return false;
                advance();
                AttrType type;
                if (at_ident("int")) {
                    type = AttrType::integer;
                } else if (at_ident("symbol")) {
                    type = AttrType::symbol;
                } else {
                    error_here("expected 'int' or 'symbol'");
                    return false;
                }
                advance();
                k.schema.push_back({*attr, type});
                if (cur.tok == Tok::comma) advance();
            }
            advance();  // }
            std::stable_sort(k.schema.begin(), k.schema.end(),
                             [](const AttrDecl& a, const AttrDecl& b) { return a.name < b.name; });
        }
        for (const auto& existing : unit.kinds)
            if (existing.name == k.name) {
                diags.push_back({Severity::error, "P3",
                                 "duplicate declaration of kind '" + k.name + "'", k.span});
                return true;  // keep the first declaration
            }
        unit.kinds.push_back(std::move(k));
        return true;
    }

    bool parse_flowsystem(AstFlowsystem& fs) {
        fs.span = cur.span;
        advance();  // flowsystem
        auto name = parse_ident("a flowsystem name");
        if (!name) return false;
        fs.name = *name;
        if (!expect(Tok::colon, "':'")) return false;
        advance();
        fs.kind_span = cur.span;
        auto kind = parse_name("a kind name");
        if (!kind) return false;
        fs.kind = *kind;
        if (!expect(Tok::lbrace, "'{'")) return false;
        advance();
        if (!at_ident("stages")) {
            error_here("expected 'stages'");
            return false;
        }
        advance();
        if (!expect(Tok::colon, "':'")) return false;
        advance();
        while (true) {
            if (cur.tok != Tok::ident) {
                error_here("expected a stage name");
                return false;
            }
            fs.stages.emplace_back(cur.text, cur.span);
            advance();
            if (cur.tok != Tok::comma) break;
            advance();
        }
        if (at_ident("arcs")) {
            fs.has_arcs = true;
            advance();
            if (!expect(Tok::colon, "':'")) return false;
            advance();
            while (true) {
                if (cur.tok != Tok::ident) {
                    error_here("expected a stage name");
                    return false;
                }
                std::string from = cur.text;
                Span span = cur.span;
                advance();
                if (!expect(Tok::arrow, "'->'")) return false;
                advance();
                if (cur.tok != Tok::ident) {
                    error_here("expected a stage name");
                    return false;
                }
                fs.arcs.emplace_back(from, cur.text, span);
                advance();
                if (cur.tok != Tok::comma) break;
                advance();
            }
        }
        if (!expect(Tok::rbrace, "'}'")) return false;
        advance();
        return true;
    }

    bool parse_sphere(AstSphere& sphere) {
        sphere.span = cur.span;
        advance();  // sphere
        auto name = parse_ident("a sphere name");
        if (!name) return false;
        sphere.name = *name;
        if (!expect(Tok::lbrace, "'{'")) return false;
        advance();
        while (cur.tok != Tok::rbrace) {
            if (at_ident("sphere")) {
                AstSphere child;
                if (!parse_sphere(child)) return false;
                sphere.subspheres.push_back(std::move(child));
            } else if (at_ident("flowsystem")) {
                AstFlowsystem fs;
                if (!parse_flowsystem(fs)) return false;
                sphere.flowsystems.push_back(std::move(fs));
            } else {
                error_here("expected 'sphere' or 'flowsystem'");
                return false;
            }
        }
        advance();  // }
        return true;
    }

    bool parse_flow() {
        AstFlow f;
        f.span = cur.span;
        advance();  // flow
        auto from = parse_path();
        if (!from) return false;
        f.from = from->first;
        f.from_span = from->second;
        if (!expect(Tok::arrow, "'->'")) return false;
        advance();
        auto to = parse_path();
        if (!to) return false;
        f.to = to->first;
        f.to_span = to->second;
        if (at_ident("delay")) {
            advance();
            auto d = parse_int("a delay");
            if (!d) return false;
            if (*d < 0) {
                error_here("delay must be non-negative");
                return false;
            }
            f.delay = *d;
        }
        unit.flows.push_back(std::move(f));
        return true;
    }

    bool parse_trigger() {
        AstTrigger t;
        t.span = cur.span;
        advance();  // trigger
        while (true) {
            AstSource src;
            auto path = parse_path();
            if (!path) return false;
            src.path = path->first;
            src.span = path->second;
            if (at_ident("when")) {
                advance();
                auto guard = parse_expr();
                if (!guard) return false;
                src.guard = std::move(*guard);
            }
            t.sources.push_back(std::move(src));
            if (cur.tok != Tok::comma) break;
            advance();
        }
        if (!expect(Tok::fat_arrow, "'=>'")) return false;
        advance();
        if (at_ident("inject")) {
            t.effect = "inject";
            advance();
            t.kind_span = cur.span;
            auto kind = parse_name("a kind name");
            if (!kind) return false;
            t.kind = *kind;
            if (!at_ident("at")) {
                error_here("expected 'at'");
                return false;
            }
            advance();
            auto target = parse_path();
            if (!target) return false;
            t.target = target->first;
            t.target_span = target->second;
            if (at_ident("with")) {
                advance();
                if (!parse_assign_list(t.assigns, /*allow_refs=*/true)) return false;
            }
        } else if (at_ident("start") || at_ident("open") || at_ident("close")) {
            t.effect = cur.text;
            advance();
            auto target = parse_path();
            if (!target) return false;
            t.target = target->first;
            t.target_span = target->second;
        } else {
            error_here("expected 'inject', 'start', 'open' or 'close'");
            return false;
        }
        unit.triggers.push_back(std::move(t));
        return true;
    }

    bool parse_timer() {
        AstTimer t;
        t.span = cur.span;
        advance();  // timer
        auto path = parse_path();
        if (!path) return false;
        t.path = path->first;
        if (!at_ident("duration")) {
            error_here("expected 'duration'");
            return false;
        }
        advance();
        auto base = parse_int("a duration");
        if (!base) return false;
        if (*base <= 0) {
            error_here("duration must be positive");
            return false;
        }
        t.base = *base;
        if (cur.tok == Tok::star) {
            advance();
            auto env = parse_ident("an environment name");
            if (!env) return false;
            t.scale_env = *env;
        }
        unit.timers.push_back(std::move(t));
        return true;
    }

    bool parse_gate() {
        AstGate g;
        g.span = cur.span;
        advance();  // gate
        auto controller = parse_path();
        if (!controller) return false;
        g.controller = controller->first;
        g.controller_span = controller->second;
        if (!at_ident("controls")) {
            error_here("expected 'controls'");
            return false;
        }
        advance();
        auto controlled = parse_path();
        if (!controlled) return false;
        g.controlled = controlled->first;
        g.controlled_span = controlled->second;
        if (at_ident("close")) {
            advance();
            if (cur.tok != Tok::string) {
                error_here("expected a quoted symbol");
                return false;
            }
            g.close_symbol = cur.text;
            advance();
        }
        if (at_ident("open")) {
            advance();
            if (cur.tok != Tok::string) {
                error_here("expected a quoted symbol");
                return false;
            }
            g.open_symbol = cur.text;
            advance();
        }
        unit.gates.push_back(std::move(g));
        return true;
    }

    bool parse_scenario() {
        Scenario sc;
        sc.span = cur.span;
        advance();  // scenario
        auto name = parse_ident("a scenario name");
        if (!name) return false;
        sc.name = *name;
        if (!expect(Tok::lbrace, "'{'")) return false;
        advance();
        while (cur.tok != Tok::rbrace) {
            if (at_ident("seed")) {
                advance();
                auto v = parse_int("a seed");
                if (!v) return false;
                sc.seed = static_cast<std::uint64_t>(*v);
            } else if (at_ident("channel")) {
                advance();
                if (!at_ident("delay")) {
                    error_here("expected 'delay'");
                    return false;
                }
                advance();
                auto d = parse_int("a delay");
                if (!d || *d < 0) {
                    if (d) error_here("delay must be non-negative");
                    return false;
                }
                sc.channel_delay = *d;
                if (!at_ident("drop")) {
                    error_here("expected 'drop'");
                    return false;
                }
                advance();
                auto num = parse_int("a drop probability");
                if (!num) return false;
                std::int64_t den = 1;
                if (cur.tok == Tok::slash) {
                    advance();
                    auto d2 = parse_int("a denominator");
                    if (!d2) return false;
                    den = *d2;
                }
                if (*num < 0 || den <= 0 || *num > den) {
                    error_here("drop probability must lie in [0, 1]");
                    return false;
                }
                sc.drop = {*num, den};
            } else if (at_ident("max")) {
                advance();
                if (at_ident("time")) {
                    advance();
                    auto v = parse_int("a time bound");
                    if (!v) return false;
                    sc.max_time = *v;
                } else if (at_ident("events")) {
                    advance();
                    auto v = parse_int("an event bound");
                    if (!v) return false;
                    sc.max_events = *v;
                } else {
                    error_here("expected 'time' or 'events'");
                    return false;
                }
            } else if (at_ident("env")) {
                advance();
                auto key = parse_ident("an environment name");
                if (!key) return false;
                if (!expect(Tok::assign, "'='")) return false;
                advance();
                if (cur.tok == Tok::integer) {
                    sc.environment[*key] = cur.value;
                    advance();
                } else if (cur.tok == Tok::string) {
                    sc.environment[*key] = cur.text;
                    advance();
                } else {
                    error_here("expected an integer or quoted symbol");
                    return false;
                }
            } else if (at_ident("at")) {
                ScenarioInjection inj;
                inj.span = cur.span;
                advance();
                auto time = parse_int("an injection time");
                if (!time || *time < 0) {
                    if (time) error_here("injection time must be non-negative");
                    return false;
                }
                inj.time = *time;
                if (!at_ident("inject")) {
                    error_here("expected 'inject'");
                    return false;
                }
                advance();
                auto kind = parse_name("a kind name");
                if (!kind) return false;
                inj.kind = *kind;
                if (!at_ident("at")) {
                    error_here("expected 'at'");
                    return false;
                }
                advance();
                auto path = parse_path();
                if (!path) return false;
                inj.fs_path = path->first;
                if (at_ident("with")) {
                    advance();
                    if (!parse_assign_list(inj.attrs, /*allow_refs=*/false)) return false;
                }
                sc.injections.push_back(std::move(inj));
            } else {
                error_here("expected a scenario item");
                return false;
            }
        }
        advance();  // }
        unit.scenarios.push_back(std::move(sc));
        return true;
    }

    void parse_unit() {
        while (cur.tok != Tok::end) {
            bool ok = false;
            if (at_ident("kind")) ok = parse_kind();
            else if (at_ident("sphere")) {
                AstSphere s;
                ok = parse_sphere(s);
                if (ok) unit.spheres.push_back(std::move(s));
            } else if (at_ident("flow")) ok = parse_flow();
            else if (at_ident("trigger")) ok = parse_trigger();
            else if (at_ident("timer")) ok = parse_timer();
            else if (at_ident("gate")) ok = parse_gate();
            else if (at_ident("scenario")) ok = parse_scenario();
            else {
                error_here("expected a declaration");
            }
            if (!ok) recover_top();
        }
    }
};

// ------------------------------------------------------------- resolver

struct Resolver {
    const AstUnit& unit;
    std::vector<Diagnostic>& diags;
    Model model;

    void err(const char* code, const Span& span, std::string msg) {
        diags.push_back({Severity::error, code, std::move(msg), span});
    }

    void load_kinds() {
        for (const auto& k : unit.kinds) {
            FlowthingKind fk;
            fk.name = k.name;
            fk.category = k.state ? KindCategory::state : KindCategory::normal;
            fk.schema = k.schema;
            model.kinds.push_back(std::move(fk));
        }
    }

    void load_flowsystem(const AstFlowsystem& ast, SphereId owner) {
        auto kind = model.kind_id(ast.kind);
        if (!kind) {
            err("P4", ast.kind_span, "unknown kind '" + ast.kind + "'");
            return;
        }
        Flowsystem fs;
        fs.name = ast.name;
        fs.owner = owner;
        fs.kind = *kind;
        fs.span = ast.span;

        for (const auto& [name, span] : ast.stages) {
            if (name == "receive") {
                if (fs.stages.count(Stage::arrive) || fs.stages.count(Stage::accept))
                    err("P3", span, "'receive' duplicates an explicit arrive/accept stage");
                fs.stages.insert(Stage::arrive);
                fs.stages.insert(Stage::accept);
                fs.receive_sugar = true;
                continue;
            }
            auto st = stage_from_name(name);
            if (!st) {
                err("P2", span, "unknown stage name '" + name + "'");
                continue;
            }
            if (!fs.stages.insert(*st).second)
                err("P3", span, "duplicate stage '" + name + "'");
        }
        if (fs.receive_sugar) fs.intra_arcs.push_back({Stage::arrive, Stage::accept, ast.span});

        auto map_stage = [&](const std::string& name, const Span& span,
                             bool from_side) -> std::optional<Stage> {
            if (name == "receive") return from_side ? Stage::accept : Stage::arrive;
            auto st = stage_from_name(name);
            if (!st) err("P2", span, "unknown stage name '" + name + "'");
            return st;
        };
        if (ast.has_arcs) {
            for (const auto& [from, to, span] : ast.arcs) {
                auto f = map_stage(from, span, true);
                auto t = map_stage(to, span, false);
                if (!f || !t) continue;
                // receive's arrive -> accept arc is already present
                if (fs.receive_sugar && *f == Stage::arrive && *t == Stage::accept) continue;
                fs.intra_arcs.push_back({*f, *t, span});
            }
        } else {
            derive_default_arcs(fs, ast.span);
        }
        model.spheres[owner].flowsystems.push_back(
            static_cast<FlowsystemId>(model.flowsystems.size()));
        model.flowsystems.push_back(std::move(fs));
    }

    // standard chain over the declared stages; create -> process for states
    void derive_default_arcs(Flowsystem& fs, const Span& span) {
        static constexpr std::pair<Stage, Stage> chain[] = {
            {Stage::create, Stage::release},   {Stage::release, Stage::transfer},
            {Stage::transfer, Stage::arrive},  {Stage::arrive, Stage::accept},
            {Stage::accept, Stage::process},
        };
        for (auto [from, to] : chain) {
            if (!fs.stages.count(from) || !fs.stages.count(to)) continue;
            if (fs.receive_sugar && from == Stage::arrive && to == Stage::accept) continue;
            fs.intra_arcs.push_back({from, to, span});
        }
        if (model.kinds[fs.kind].category == KindCategory::state &&
            fs.stages.count(Stage::create) && fs.stages.count(Stage::process))
            fs.intra_arcs.push_back({Stage::create, Stage::process, span});
    }

    SphereId load_sphere(const AstSphere& ast, std::optional<SphereId> parent) {
        SphereId id = static_cast<SphereId>(model.spheres.size());
        Sphere s;
        s.name = ast.name;
        s.parent = parent;
        s.span = ast.span;
        model.spheres.push_back(std::move(s));
        for (const auto& child : ast.subspheres) {
            SphereId cid = load_sphere(child, id);
            model.spheres[id].subspheres.push_back(cid);
        }
        for (const auto& fs : ast.flowsystems) load_flowsystem(fs, id);
        return id;
    }

    std::optional<PathTarget> target(const std::string& path, const Span& span) {
        try {
            return resolve_path(model, path);
        } catch (const PathError& e) {
            err("P4", span, e.what());
            return std::nullopt;
        }
    }

    void load_flows() {
        for (const auto& f : unit.flows) {
            auto from = target(f.from, f.from_span);
            auto to = target(f.to, f.to_span);
            if (!from || !to) continue;
            auto endpoint = [&](const PathTarget& t, const Span& span)
                -> std::optional<std::pair<FlowsystemId, Stage>> {
                if (t.kind == PathTarget::Kind::flowsystem)
                    return std::make_pair(t.fs, Stage::transfer);
                if (t.kind == PathTarget::Kind::stage) return std::make_pair(t.fs, t.stage);
                err("P4", span, "flow endpoint must be a flowsystem or stage");
                return std::nullopt;
            };
            auto fe = endpoint(*from, f.from_span);
            auto te = endpoint(*to, f.to_span);
            if (!fe || !te) continue;
            if (fe->first == te->first) {
                // same flowsystem: this is an intra-arc
                if (f.delay)
                    err("P1", f.span, "delay is only meaningful between flowsystems");
                model.flowsystems[fe->first].intra_arcs.push_back(
                    {fe->second, te->second, f.span});
                continue;
            }
            FlowArc arc;
            arc.from = fe->first;
            arc.to = te->first;
            arc.from_stage = fe->second;
            arc.to_stage = te->second;
            arc.delay = f.delay;
            arc.span = f.span;
            model.flows.push_back(arc);
        }
    }

    void load_timers() {
        for (const auto& t : unit.timers) {
            auto dot = t.path.rfind('.');
            if (dot == std::string::npos) {
                err("P4", t.span, "timer path must be <sphere path>.<name>");
                continue;
            }
            auto owner = target(t.path.substr(0, dot), t.span);
            if (!owner) continue;
            if (owner->kind != PathTarget::Kind::sphere) {
                err("P4", t.span, "timer owner must be a sphere");
                continue;
            }
            TimerDecl decl;
            decl.name = t.path.substr(dot + 1);
            decl.owner = owner->sphere;
            decl.base = t.base;
            decl.scale_env = t.scale_env;
            decl.span = t.span;
            model.timers.push_back(std::move(decl));
        }
    }

    void load_gates() {
        for (const auto& g : unit.gates) {
            auto controller = target(g.controller, g.controller_span);
            auto controlled = target(g.controlled, g.controlled_span);
            if (!controller || !controlled) continue;
            if (controller->kind != PathTarget::Kind::flowsystem) {
                err("P4", g.controller_span, "gate controller must be a flowsystem");
                continue;
            }
            if (controlled->kind != PathTarget::Kind::sphere) {
                err("P4", g.controlled_span, "gate target must be a sphere");
                continue;
            }
            GateBinding binding;
            binding.controller = controller->fs;
            binding.controlled = controlled->sphere;
            binding.close_symbol = g.close_symbol;
            binding.open_symbol = g.open_symbol;
            binding.span = g.span;
            model.gates.push_back(binding);
            model.spheres[controlled->sphere].gated = true;
        }
    }

    void load_triggers() {
        for (const auto& t : unit.triggers) {
            TriggerArc arc;
            arc.span = t.span;
            bool ok = true;
            for (const auto& s : t.sources) {
                auto tgt = target(s.path, s.span);
                if (!tgt) {
                    ok = false;
                    continue;
                }
                TriggerSource src;
                src.span = s.span;
                src.guard = s.guard;
                if (tgt->kind == PathTarget::Kind::stage) {
                    src.kind = TriggerSource::Kind::stage;
                    src.fs = tgt->fs;
                    src.stage = tgt->stage;
                } else if (tgt->kind == PathTarget::Kind::timer) {
                    src.kind = TriggerSource::Kind::timer;
                    src.timer = tgt->timer;
                } else {
                    err("P4", s.span, "trigger source must name a stage or a timer");
                    ok = false;
                    continue;
                }
                arc.sources.push_back(std::move(src));
            }
            if (!ok || arc.sources.empty()) continue;

            TriggerEffect& e = arc.effect;
            e.span = t.target_span;
            if (t.effect == "inject") {
                e.kind = EffectKind::inject;
                auto kind = model.kind_id(t.kind);
                if (!kind) {
                    err("P4", t.kind_span, "unknown kind '" + t.kind + "'");
                    continue;
                }
                e.inject_kind = *kind;
                auto tgt = target(t.target, t.target_span);
                if (!tgt) continue;
                if (tgt->kind == PathTarget::Kind::flowsystem) {
                    e.inject_fs = tgt->fs;
                    e.inject_stage = Stage::create;
                } else if (tgt->kind == PathTarget::Kind::stage) {
                    e.inject_fs = tgt->fs;
                    e.inject_stage = tgt->stage;
                } else {
                    err("P4", t.target_span, "inject target must be a flowsystem stage");
                    continue;
                }
                e.assigns = t.assigns;
            } else if (t.effect == "start") {
                e.kind = EffectKind::start_timer;
                e.timer = TriggerEffect::npos;
                e.timer_name = t.target;
                try {
                    PathTarget tgt = resolve_path(model, t.target);
                    if (tgt.kind == PathTarget::Kind::timer) e.timer = tgt.timer;
                } catch (const PathError&) {
                    // left unresolved; W8 reports it
                }
            } else {
                e.kind = t.effect == "open" ? EffectKind::open_gate : EffectKind::close_gate;
                auto tgt = target(t.target, t.target_span);
                if (!tgt) continue;
                if (tgt->kind != PathTarget::Kind::sphere) {
                    err("P4", t.target_span, "gate effect target must be a sphere");
                    continue;
                }
                e.sphere = tgt->sphere;
                model.spheres[tgt->sphere].gated = true;
            }
            model.triggers.push_back(std::move(arc));
        }
    }

    Model resolve() {
        load_kinds();
        for (const auto& s : unit.spheres) model.roots.push_back(load_sphere(s, std::nullopt));
        load_timers();
        load_flows();
        load_gates();
        load_triggers();
        model.scenarios = unit.scenarios;
        return std::move(model);
    }
};

}  // namespace

ParseResult parse(const SourceUnit& source) {
    ParseResult result;
    Parser parser(source, result.diagnostics);
    parser.parse_unit();
    Resolver resolver{parser.unit, result.diagnostics, {}};
    result.model = resolver.resolve();
    sort_diagnostics(result.diagnostics);
    return result;
}

}  // namespace flowkit
