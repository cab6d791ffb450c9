#ifndef AGENTJIT_PLANLANG_HPP
#define AGENTJIT_PLANLANG_HPP

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace agentjit {

using Json = nlohmann::json;

struct SourceSpan {
    int line = 0;
    int col = 0;
};

// ---------------------------------------------------------------------------
// Expressions: pure trees, no calls with side effects.

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    struct Lit { Json value; };
    struct Var { std::string name; };
    struct Field { ExprPtr base; std::string name; };
    struct Index { ExprPtr base; ExprPtr index; };
    struct Slice { ExprPtr base; ExprPtr lo; ExprPtr hi; };  // either bound may be null
    struct Unary { std::string op; ExprPtr operand; };       // "-", "not"
    struct Binary { std::string op; ExprPtr lhs; ExprPtr rhs; };
    struct Call {  // pure builtin (e.g. format, len)
        std::string fn;
        std::vector<ExprPtr> args;
        std::vector<std::pair<std::string, ExprPtr>> kwargs;
    };
    struct ListLit { std::vector<ExprPtr> items; };

    std::variant<Lit, Var, Field, Index, Slice, Unary, Binary, Call, ListLit> node;
};

inline ExprPtr make_expr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
inline ExprPtr lit(Json v) { return make_expr({Expr::Lit{std::move(v)}}); }
inline ExprPtr var(std::string n) { return make_expr({Expr::Var{std::move(n)}}); }

// ---------------------------------------------------------------------------
// Statements.

struct Stmt;
using StmtList = std::vector<Stmt>;
using NamedArgs = std::vector<std::pair<std::string, ExprPtr>>;

struct Stmt {
    struct ToolCall { std::string tool; NamedArgs args; std::optional<std::string> bind; };
    struct AiEval { std::string template_text; NamedArgs args; std::optional<std::string> bind; };
    struct Assign { std::string var; ExprPtr value; };
    struct For { std::string var; ExprPtr iterable; std::shared_ptr<StmtList> body; };
    struct If { ExprPtr cond; std::shared_ptr<StmtList> then_body; std::shared_ptr<StmtList> else_body; };
    struct Return { ExprPtr value; };

    std::variant<ToolCall, AiEval, Assign, For, If, Return> node;
    SourceSpan span;
};

struct PlanProgram {
    StmtList statements;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, SourceSpan s)
        : std::runtime_error("parse error at " + std::to_string(s.line) + ":" +
                             std::to_string(s.col) + ": " + msg),
          span(s) {}
    SourceSpan span;
};

// ---------------------------------------------------------------------------
// Lexer.

namespace planlex {

enum class Tok { Ident, Number, String, Punct, Eof };

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    double number = 0;
    bool is_int = false;
    SourceSpan span;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

private:
    void advance() {
        skip_ws();
        cur_.span = {line_, col_};
        if (pos_ >= src_.size()) {
            cur_ = {Tok::Eof, "", 0, false, cur_.span};
            return;
        }
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                bump();
            cur_ = {Tok::Ident, src_.substr(start, pos_ - start), 0, false, cur_.span};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            bool is_int = true;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
            if (pos_ < src_.size() && src_[pos_] == '.' && pos_ + 1 < src_.size() &&
                std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                is_int = false;
                bump();
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    bump();
            }
            std::string text = src_.substr(start, pos_ - start);
            cur_ = {Tok::Number, text, std::stod(text), is_int, cur_.span};
            return;
        }
        if (c == '"') {
            bump();
            std::string out;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) {
                    bump();
                    char e = src_[pos_];
                    if (e == 'n') out += '\n';
                    else if (e == 't') out += '\t';
                    else out += e;
                    bump();
                } else {
                    out += src_[pos_];
                    bump();
                }
            }
            if (pos_ >= src_.size()) throw ParseError("unterminated string", cur_.span);
            bump();
            cur_ = {Tok::String, out, 0, false, cur_.span};
            return;
        }
        // two-char operators first
        static const char* two[] = {"==", "!=", "<=", ">="};
        for (const char* op : two) {
            if (src_.compare(pos_, 2, op) == 0) {
                bump();
                bump();
                cur_ = {Tok::Punct, op, 0, false, cur_.span};
                return;
            }
        }
        static const std::string singles = "(){}[],=.:+-*/<>";
        if (singles.find(c) != std::string::npos) {
            bump();
            cur_ = {Tok::Punct, std::string(1, c), 0, false, cur_.span};
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", cur_.span);
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token cur_;
};

}  // namespace planlex

// ---------------------------------------------------------------------------
// Parser.

namespace detail {

class PlanParser {
public:
    explicit PlanParser(const std::string& src) : lex_(src) {}

    PlanProgram parse_program() {
        PlanProgram p;
        while (lex_.peek().kind != planlex::Tok::Eof) p.statements.push_back(parse_stmt());
        return p;
    }

private:
    using Token = planlex::Token;
    using Tok = planlex::Tok;

    bool at_punct(const std::string& s) const {
        return lex_.peek().kind == Tok::Punct && lex_.peek().text == s;
    }
    bool at_ident(const std::string& s) const {
        return lex_.peek().kind == Tok::Ident && lex_.peek().text == s;
    }
    Token expect_punct(const std::string& s) {
        if (!at_punct(s)) throw ParseError("expected '" + s + "'", lex_.peek().span);
        return lex_.take();
    }
    std::string expect_ident() {
        if (lex_.peek().kind != Tok::Ident)
            throw ParseError("expected identifier", lex_.peek().span);
        return lex_.take().text;
    }

    Stmt parse_stmt() {
        SourceSpan span = lex_.peek().span;
        if (at_ident("for")) return parse_for(span);
        if (at_ident("if")) return parse_if(span);
        if (at_ident("return")) {
            lex_.take();
            return {Stmt::Return{parse_expr()}, span};
        }
        if (at_ident("call")) return parse_call(std::nullopt, span);
        if (at_ident("eval")) return parse_eval(std::nullopt, span);
        // IDENT "=" (call | eval | expr)
        std::string name = expect_ident();
        expect_punct("=");
        if (at_ident("call")) return parse_call(name, span);
        if (at_ident("eval")) return parse_eval(name, span);
        return {Stmt::Assign{name, parse_expr()}, span};
    }

    Stmt parse_call(std::optional<std::string> bind, SourceSpan span) {
        lex_.take();  // call
        std::string tool = expect_ident();
        expect_punct("(");
        NamedArgs args = parse_named_args();
        expect_punct(")");
        return {Stmt::ToolCall{tool, std::move(args), std::move(bind)}, span};
    }

    Stmt parse_eval(std::optional<std::string> bind, SourceSpan span) {
        lex_.take();  // eval
        if (lex_.peek().kind != Tok::String)
            throw ParseError("eval expects a template string", lex_.peek().span);
        std::string tpl = lex_.take().text;
        expect_punct("(");
        NamedArgs args = parse_named_args();
        expect_punct(")");
        return {Stmt::AiEval{tpl, std::move(args), std::move(bind)}, span};
    }

    Stmt parse_for(SourceSpan span) {
        lex_.take();  // for
        std::string v = expect_ident();
        if (!at_ident("in")) throw ParseError("expected 'in'", lex_.peek().span);
        lex_.take();
        ExprPtr iter = parse_expr();
        auto body = std::make_shared<StmtList>(parse_block());
        return {Stmt::For{v, iter, body}, span};
    }

    Stmt parse_if(SourceSpan span) {
        lex_.take();  // if
        ExprPtr cond = parse_expr();
        auto then_body = std::make_shared<StmtList>(parse_block());
        auto else_body = std::make_shared<StmtList>();
        if (at_ident("else")) {
            lex_.take();
            *else_body = parse_block();
        }
        return {Stmt::If{cond, then_body, else_body}, span};
    }

    StmtList parse_block() {
        expect_punct("{");
        StmtList body;
        while (!at_punct("}")) {
            if (lex_.peek().kind == Tok::Eof) throw ParseError("expected '}'", lex_.peek().span);
            body.push_back(parse_stmt());
        }
        lex_.take();
        return body;
    }

    NamedArgs parse_named_args() {
        NamedArgs args;
        if (at_punct(")")) return args;
        while (true) {
            std::string name = expect_ident();
            expect_punct("=");
            args.emplace_back(name, parse_expr());
            if (at_punct(",")) {
                lex_.take();
                continue;
            }
            break;
        }
        return args;
    }

    // expr := or
    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (at_ident("or")) {
            lex_.take();
            e = make_expr({Expr::Binary{"or", e, parse_and()}});
        }
        return e;
    }

    ExprPtr parse_and() {
        ExprPtr e = parse_not();
        while (at_ident("and")) {
            lex_.take();
            e = make_expr({Expr::Binary{"and", e, parse_not()}});
        }
        return e;
    }

    ExprPtr parse_not() {
        if (at_ident("not")) {
            lex_.take();
            return make_expr({Expr::Unary{"not", parse_not()}});
        }
        return parse_cmp();
    }

    ExprPtr parse_cmp() {
        ExprPtr e = parse_add();
        static const char* ops[] = {"==", "!=", "<=", ">=", "<", ">"};
        for (const char* op : ops) {
            if (at_punct(op)) {
                lex_.take();
                return make_expr({Expr::Binary{op, e, parse_add()}});
            }
        }
        if (at_ident("in")) {
            lex_.take();
            return make_expr({Expr::Binary{"in", e, parse_add()}});
        }
        return e;
    }

    ExprPtr parse_add() {
        ExprPtr e = parse_mul();
        while (at_punct("+") || at_punct("-")) {
            std::string op = lex_.take().text;
            e = make_expr({Expr::Binary{op, e, parse_mul()}});
        }
        return e;
    }

    ExprPtr parse_mul() {
        ExprPtr e = parse_unary();
        while (at_punct("*") || at_punct("/")) {
            std::string op = lex_.take().text;
            e = make_expr({Expr::Binary{op, e, parse_unary()}});
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (at_punct("-")) {
            lex_.take();
            return make_expr({Expr::Unary{"-", parse_unary()}});
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (true) {
            if (at_punct(".")) {
                lex_.take();
                e = make_expr({Expr::Field{e, expect_ident()}});
            } else if (at_punct("[")) {
                lex_.take();
                ExprPtr lo;
                if (!at_punct(":")) lo = parse_expr();
                if (at_punct(":")) {
                    lex_.take();
                    ExprPtr hi;
                    if (!at_punct("]")) hi = parse_expr();
                    expect_punct("]");
                    e = make_expr({Expr::Slice{e, lo, hi}});
                } else {
                    expect_punct("]");
                    e = make_expr({Expr::Index{e, lo}});
                }
            } else {
                break;
            }
        }
        return e;
    }

    ExprPtr parse_primary() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Number) {
            Token n = lex_.take();
            if (n.is_int) return lit(Json(static_cast<std::int64_t>(n.number)));
            return lit(Json(n.number));
        }
        if (t.kind == Tok::String) return lit(Json(lex_.take().text));
        if (at_punct("(")) {
            lex_.take();
            ExprPtr e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (at_punct("[")) {
            lex_.take();
            std::vector<ExprPtr> items;
            if (!at_punct("]")) {
                items.push_back(parse_expr());
                while (at_punct(",")) {
                    lex_.take();
                    items.push_back(parse_expr());
                }
            }
            expect_punct("]");
            return make_expr({Expr::ListLit{std::move(items)}});
        }
        if (t.kind == Tok::Ident) {
            if (t.text == "true") { lex_.take(); return lit(Json(true)); }
            if (t.text == "false") { lex_.take(); return lit(Json(false)); }
            if (t.text == "null") { lex_.take(); return lit(Json()); }
            std::string name = lex_.take().text;
            if (at_punct("(")) {
                lex_.take();
                Expr::Call call{name, {}, {}};
                if (!at_punct(")")) {
                    while (true) {
                        // lookahead for name=expr
                        if (lex_.peek().kind == Tok::Ident) {
                            planlex::Lexer probe = lex_;  // copy for one-token lookahead
                            probe.take();
                            if (probe.peek().kind == Tok::Punct && probe.peek().text == "=") {
                                std::string kw = lex_.take().text;
                                lex_.take();  // '='
                                call.kwargs.emplace_back(kw, parse_expr());
                                if (at_punct(",")) { lex_.take(); continue; }
                                break;
                            }
                        }
                        call.args.push_back(parse_expr());
                        if (at_punct(",")) { lex_.take(); continue; }
                        break;
                    }
                }
                expect_punct(")");
                return make_expr({std::move(call)});
            }
            return var(name);
        }
        throw ParseError("expected expression", t.span);
    }

    planlex::Lexer lex_;
};

// Static bind-before-use and single-final-return checks.
inline void check_bindings(const StmtList& stmts, std::set<std::string> bound, bool top_level);

inline void check_expr_bound(const ExprPtr& e, const std::set<std::string>& bound,
                             SourceSpan span) {
    if (!e) return;
    struct V {
        const std::set<std::string>& bound;
        SourceSpan span;
        void operator()(const Expr::Lit&) const {}
        void operator()(const Expr::Var& v) const {
            if (!bound.count(v.name))
                throw ParseError("variable '" + v.name + "' used before binding", span);
        }
        void operator()(const Expr::Field& f) const { check_expr_bound(f.base, bound, span); }
        void operator()(const Expr::Index& i) const {
            check_expr_bound(i.base, bound, span);
            check_expr_bound(i.index, bound, span);
        }
        void operator()(const Expr::Slice& s) const {
            check_expr_bound(s.base, bound, span);
            check_expr_bound(s.lo, bound, span);
            check_expr_bound(s.hi, bound, span);
        }
        void operator()(const Expr::Unary& u) const { check_expr_bound(u.operand, bound, span); }
        void operator()(const Expr::Binary& b) const {
            check_expr_bound(b.lhs, bound, span);
            check_expr_bound(b.rhs, bound, span);
        }
        void operator()(const Expr::Call& c) const {
            for (const auto& a : c.args) check_expr_bound(a, bound, span);
            for (const auto& [_, a] : c.kwargs) check_expr_bound(a, bound, span);
        }
        void operator()(const Expr::ListLit& l) const {
            for (const auto& a : l.items) check_expr_bound(a, bound, span);
        }
    };
    std::visit(V{bound, span}, e->node);
}

inline void check_bindings(const StmtList& stmts, std::set<std::string> bound, bool top_level) {
    for (size_t i = 0; i < stmts.size(); ++i) {
        const Stmt& s = stmts[i];
        struct V {
            std::set<std::string>& bound;
            const Stmt& s;
            bool is_last_top;
            void operator()(const Stmt::ToolCall& c) {
                for (const auto& [_, e] : c.args) check_expr_bound(e, bound, s.span);
                if (c.bind) bound.insert(*c.bind);
            }
            void operator()(const Stmt::AiEval& c) {
                for (const auto& [_, e] : c.args) check_expr_bound(e, bound, s.span);
                if (c.bind) bound.insert(*c.bind);
            }
            void operator()(const Stmt::Assign& a) {
                check_expr_bound(a.value, bound, s.span);
                bound.insert(a.var);
            }
            void operator()(const Stmt::For& f) {
                check_expr_bound(f.iterable, bound, s.span);
                std::set<std::string> inner = bound;
                inner.insert(f.var);
                check_bindings(*f.body, inner, false);
                // loop may run zero times: body bindings do not escape
            }
            void operator()(const Stmt::If& i) {
                check_expr_bound(i.cond, bound, s.span);
                std::set<std::string> then_b = bound, else_b = bound;
                check_bindings_collect(*i.then_body, then_b);
                check_bindings_collect(*i.else_body, else_b);
                // bound after the if only when bound along both paths
                for (const auto& v : then_b)
                    if (else_b.count(v)) bound.insert(v);
            }
            void operator()(const Stmt::Return& r) {
                check_expr_bound(r.value, bound, s.span);
                if (!is_last_top)
                    throw ParseError("return must be the final top-level statement", s.span);
            }
            static void check_bindings_collect(const StmtList& body, std::set<std::string>& b) {
                check_bindings(body, b, false);
                for (const Stmt& st : body) {
                    if (auto* tc = std::get_if<Stmt::ToolCall>(&st.node)) {
                        if (tc->bind) b.insert(*tc->bind);
                    } else if (auto* ae = std::get_if<Stmt::AiEval>(&st.node)) {
                        if (ae->bind) b.insert(*ae->bind);
                    } else if (auto* as = std::get_if<Stmt::Assign>(&st.node)) {
                        b.insert(as->var);
                    }
                }
            }
        };
        bool is_last_top = top_level && i + 1 == stmts.size();
        V v{bound, s, is_last_top};
        std::visit(v, s.node);
    }
}

}  // namespace detail

inline PlanProgram parse_plan(const std::string& text) {
    detail::PlanParser p(text);
    PlanProgram prog = p.parse_program();
    detail::check_bindings(prog.statements, {}, true);
    return prog;
}

// ---------------------------------------------------------------------------
// Rendering back to canonical surface text.

namespace detail {

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') { out += "\\n"; continue; }
        out += c;
    }
    return out + "\"";
}

inline std::string render_expr(const ExprPtr& e);

inline std::string render_named_args(const NamedArgs& args) {
    std::string out;
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += args[i].first + "=" + render_expr(args[i].second);
    }
    return out;
}

inline std::string render_expr(const ExprPtr& e) {
    struct V {
        std::string operator()(const Expr::Lit& l) const {
            if (l.value.is_string()) return quote(l.value.get<std::string>());
            return l.value.dump();
        }
        std::string operator()(const Expr::Var& v) const { return v.name; }
        std::string operator()(const Expr::Field& f) const {
            return render_expr(f.base) + "." + f.name;
        }
        std::string operator()(const Expr::Index& i) const {
            return render_expr(i.base) + "[" + render_expr(i.index) + "]";
        }
        std::string operator()(const Expr::Slice& s) const {
            return render_expr(s.base) + "[" + (s.lo ? render_expr(s.lo) : "") + ":" +
                   (s.hi ? render_expr(s.hi) : "") + "]";
        }
        std::string operator()(const Expr::Unary& u) const {
            if (u.op == "not") return "(not " + render_expr(u.operand) + ")";
            return "(" + u.op + render_expr(u.operand) + ")";
        }
        std::string operator()(const Expr::Binary& b) const {
            return "(" + render_expr(b.lhs) + " " + b.op + " " + render_expr(b.rhs) + ")";
        }
        std::string operator()(const Expr::Call& c) const {
            std::string out = c.fn + "(";
            bool first = true;
            for (const auto& a : c.args) {
                if (!first) out += ", ";
                first = false;
                out += render_expr(a);
            }
            for (const auto& [k, a] : c.kwargs) {
                if (!first) out += ", ";
                first = false;
                out += k + "=" + render_expr(a);
            }
            return out + ")";
        }
        std::string operator()(const Expr::ListLit& l) const {
            std::string out = "[";
            for (size_t i = 0; i < l.items.size(); ++i) {
                if (i) out += ", ";
                out += render_expr(l.items[i]);
            }
            return out + "]";
        }
    };
    return std::visit(V{}, e->node);
}

inline void render_stmts(const StmtList& stmts, int indent, std::string& out);

inline void render_stmt(const Stmt& s, int indent, std::string& out) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    struct V {
        const std::string& pad;
        int indent;
        std::string& out;
        void operator()(const Stmt::ToolCall& c) const {
            out += pad;
            if (c.bind) out += *c.bind + " = ";
            out += "call " + c.tool + "(" + render_named_args(c.args) + ")\n";
        }
        void operator()(const Stmt::AiEval& c) const {
            out += pad;
            if (c.bind) out += *c.bind + " = ";
            out += "eval " + quote(c.template_text) + "(" + render_named_args(c.args) + ")\n";
        }
        void operator()(const Stmt::Assign& a) const {
            out += pad + a.var + " = " + render_expr(a.value) + "\n";
        }
        void operator()(const Stmt::For& f) const {
            out += pad + "for " + f.var + " in " + render_expr(f.iterable) + " {\n";
            render_stmts(*f.body, indent + 1, out);
            out += pad + "}\n";
        }
        void operator()(const Stmt::If& i) const {
            out += pad + "if " + render_expr(i.cond) + " {\n";
            render_stmts(*i.then_body, indent + 1, out);
            out += pad + "}";
            if (!i.else_body->empty()) {
                out += " else {\n";
                render_stmts(*i.else_body, indent + 1, out);
                out += pad + "}";
            }
            out += "\n";
        }
        void operator()(const Stmt::Return& r) const {
            out += pad + "return " + render_expr(r.value) + "\n";
        }
    };
    std::visit(V{pad, indent, out}, s.node);
}

inline void render_stmts(const StmtList& stmts, int indent, std::string& out) {
    for (const Stmt& s : stmts) render_stmt(s, indent, out);
}

}  // namespace detail

inline std::string render_plan(const PlanProgram& p) {
    std::string out;
    detail::render_stmts(p.statements, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON IR.

namespace detail {

inline Json expr_to_json(const ExprPtr& e) {
    struct V {
        Json operator()(const Expr::Lit& l) const { return Json{{"kind", "lit"}, {"value", l.value}}; }
        Json operator()(const Expr::Var& v) const { return Json{{"kind", "var"}, {"name", v.name}}; }
        Json operator()(const Expr::Field& f) const {
            return Json{{"kind", "field"}, {"base", expr_to_json(f.base)}, {"name", f.name}};
        }
        Json operator()(const Expr::Index& i) const {
            return Json{{"kind", "index"}, {"base", expr_to_json(i.base)},
                        {"index", expr_to_json(i.index)}};
        }
        Json operator()(const Expr::Slice& s) const {
            Json j{{"kind", "slice"}, {"base", expr_to_json(s.base)}};
            if (s.lo) j["lo"] = expr_to_json(s.lo);
            if (s.hi) j["hi"] = expr_to_json(s.hi);
            return j;
        }
        Json operator()(const Expr::Unary& u) const {
            return Json{{"kind", "unop"}, {"op", u.op}, {"operand", expr_to_json(u.operand)}};
        }
        Json operator()(const Expr::Binary& b) const {
            return Json{{"kind", "binop"}, {"op", b.op}, {"lhs", expr_to_json(b.lhs)},
                        {"rhs", expr_to_json(b.rhs)}};
        }
        Json operator()(const Expr::Call& c) const {
            Json args = Json::array();
            for (const auto& a : c.args) args.push_back(expr_to_json(a));
            Json kwargs = Json::object();
            for (const auto& [k, a] : c.kwargs) kwargs[k] = expr_to_json(a);
            return Json{{"kind", "call"}, {"fn", c.fn}, {"args", args}, {"kwargs", kwargs}};
        }
        Json operator()(const Expr::ListLit& l) const {
            Json items = Json::array();
            for (const auto& a : l.items) items.push_back(expr_to_json(a));
            return Json{{"kind", "list"}, {"items", items}};
        }
    };
    return std::visit(V{}, e->node);
}

struct IrError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ExprPtr expr_from_json(const Json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind"))
        throw IrError(path + ": expression needs a 'kind'");
    std::string kind = j.at("kind");
    if (kind == "lit") return lit(j.at("value"));
    if (kind == "var") return var(j.at("name").get<std::string>());
    if (kind == "field")
        return make_expr({Expr::Field{expr_from_json(j.at("base"), path), j.at("name")}});
    if (kind == "index")
        return make_expr({Expr::Index{expr_from_json(j.at("base"), path),
                                      expr_from_json(j.at("index"), path)}});
    if (kind == "slice") {
        ExprPtr lo = j.contains("lo") ? expr_from_json(j.at("lo"), path) : nullptr;
        ExprPtr hi = j.contains("hi") ? expr_from_json(j.at("hi"), path) : nullptr;
        return make_expr({Expr::Slice{expr_from_json(j.at("base"), path), lo, hi}});
    }
    if (kind == "unop")
        return make_expr({Expr::Unary{j.at("op"), expr_from_json(j.at("operand"), path)}});
    if (kind == "binop")
        return make_expr({Expr::Binary{j.at("op"), expr_from_json(j.at("lhs"), path),
                                       expr_from_json(j.at("rhs"), path)}});
    if (kind == "call") {
        Expr::Call c{j.at("fn"), {}, {}};
        const Json args = j.value("args", Json::array());
        for (const auto& a : args) c.args.push_back(expr_from_json(a, path));
        // keep the default-able object alive across the iteration
        const Json kwargs = j.value("kwargs", Json::object());
        for (const auto& [k, a] : kwargs.items()) c.kwargs.emplace_back(k, expr_from_json(a, path));
        return make_expr({std::move(c)});
    }
    if (kind == "list") {
        Expr::ListLit l;
        for (const auto& a : j.value("items", Json::array())) l.items.push_back(expr_from_json(a, path));
        return make_expr({std::move(l)});
    }
    throw IrError(path + ": unknown expression kind '" + kind + "'");
}

inline Json named_args_to_json(const NamedArgs& args) {
    Json out = Json::object();
    for (const auto& [k, e] : args) out[k] = expr_to_json(e);
    return out;
}

inline NamedArgs named_args_from_json(const Json& j, const std::string& path) {
    NamedArgs out;
    for (auto& [k, e] : j.items()) out.emplace_back(k, expr_from_json(e, path + "." + k));
    return out;
}

inline Json stmts_to_json(const StmtList& stmts);

inline Json stmt_to_json(const Stmt& s) {
    struct V {
        Json operator()(const Stmt::ToolCall& c) const {
            Json j{{"kind", "tool_call"}, {"tool", c.tool}, {"args", named_args_to_json(c.args)}};
            if (c.bind) j["bind"] = *c.bind;
            return j;
        }
        Json operator()(const Stmt::AiEval& c) const {
            Json j{{"kind", "ai_eval"}, {"template", c.template_text},
                   {"args", named_args_to_json(c.args)}};
            if (c.bind) j["bind"] = *c.bind;
            return j;
        }
        Json operator()(const Stmt::Assign& a) const {
            return Json{{"kind", "assign"}, {"var", a.var}, {"value", expr_to_json(a.value)}};
        }
        Json operator()(const Stmt::For& f) const {
            return Json{{"kind", "for"}, {"var", f.var}, {"iterable", expr_to_json(f.iterable)},
                        {"body", stmts_to_json(*f.body)}};
        }
        Json operator()(const Stmt::If& i) const {
            return Json{{"kind", "if"}, {"cond", expr_to_json(i.cond)},
                        {"then", stmts_to_json(*i.then_body)}, {"else", stmts_to_json(*i.else_body)}};
        }
        Json operator()(const Stmt::Return& r) const {
            return Json{{"kind", "return"}, {"value", expr_to_json(r.value)}};
        }
    };
    return std::visit(V{}, s.node);
}

inline Json stmts_to_json(const StmtList& stmts) {
    Json arr = Json::array();
    for (const Stmt& s : stmts) arr.push_back(stmt_to_json(s));
    return arr;
}

inline StmtList stmts_from_json(const Json& arr, const std::string& path);

inline Stmt stmt_from_json(const Json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind")) throw IrError(path + ": statement needs a 'kind'");
    std::string kind = j.at("kind");
    if (kind == "tool_call") {
        Stmt::ToolCall c{j.at("tool"), named_args_from_json(j.value("args", Json::object()), path),
                         std::nullopt};
        if (j.contains("bind")) c.bind = j.at("bind").get<std::string>();
        return {std::move(c), {}};
    }
    if (kind == "ai_eval") {
        Stmt::AiEval c{j.at("template"), named_args_from_json(j.value("args", Json::object()), path),
                       std::nullopt};
        if (j.contains("bind")) c.bind = j.at("bind").get<std::string>();
        return {std::move(c), {}};
    }
    if (kind == "assign")
        return {Stmt::Assign{j.at("var"), expr_from_json(j.at("value"), path)}, {}};
    if (kind == "for") {
        auto body = std::make_shared<StmtList>(stmts_from_json(j.at("body"), path + ".body"));
        return {Stmt::For{j.at("var"), expr_from_json(j.at("iterable"), path), body}, {}};
    }
    if (kind == "if") {
        auto then_body = std::make_shared<StmtList>(stmts_from_json(j.at("then"), path + ".then"));
        auto else_body = std::make_shared<StmtList>(
            stmts_from_json(j.value("else", Json::array()), path + ".else"));
        return {Stmt::If{expr_from_json(j.at("cond"), path), then_body, else_body}, {}};
    }
    if (kind == "return") return {Stmt::Return{expr_from_json(j.at("value"), path)}, {}};
    throw IrError(path + ": unknown statement kind '" + kind + "'");
}

inline StmtList stmts_from_json(const Json& arr, const std::string& path) {
    if (!arr.is_array()) throw IrError(path + ": expected an array of statements");
    StmtList out;
    size_t i = 0;
    for (const Json& j : arr) out.push_back(stmt_from_json(j, path + "[" + std::to_string(i++) + "]"));
    return out;
}

}  // namespace detail

inline Json plan_to_json(const PlanProgram& p) {
    return Json{{"stmts", detail::stmts_to_json(p.statements)}};
}

inline PlanProgram load_plan_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("stmts"))
        throw detail::IrError("$: plan document needs a 'stmts' array");
    PlanProgram p{detail::stmts_from_json(doc.at("stmts"), "$.stmts")};
    detail::check_bindings(p.statements, {}, true);
    return p;
}

}  // namespace agentjit

#endif
