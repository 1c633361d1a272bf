#include "modernize/python_ast.hpp"

#include "modernize/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace modernize::py {
namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

constexpr std::array<std::string_view, 47> kOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "="};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        indents_.push_back(0);
        bool at_line_start = true;
        while (pos_ < src_.size()) {
            if (at_line_start && depth_ == 0) {
                if (!handle_indentation()) continue;
                at_line_start = false;
            }
            char c = src_[pos_];
            if (c == '\n') {
                ++pos_;
                if (depth_ == 0) {
                    push(Token::Kind::Newline, "", line_);
                    at_line_start = true;
                }
                ++line_;
                continue;
            }
            if (c == '\r' || c == ' ' || c == '\t' || c == '\f') {
                ++pos_;
                continue;
            }
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
                continue;
            }
            if (c == '\\') {
                std::size_t p = pos_ + 1;
                if (p < src_.size() && src_[p] == '\r') ++p;
                if (p < src_.size() && src_[p] == '\n') {
                    pos_ = p + 1;
                    ++line_;
                    continue;
                }
                throw SyntaxErrorInCode(line_, "unexpected character after line continuation");
            }
            if (lex_string()) continue;
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && pos_ + 1 < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                lex_number();
                continue;
            }
            if (is_ident_start(static_cast<unsigned char>(c))) {
                std::size_t b = pos_;
                while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
                push(Token::Kind::Name, std::string(src_.substr(b, pos_ - b)), line_);
                continue;
            }
            lex_op();
        }
        if (depth_ != 0) throw SyntaxErrorInCode(line_, "unbalanced brackets at end of input");
        if (!tokens_.empty() && tokens_.back().kind != Token::Kind::Newline &&
            tokens_.back().kind != Token::Kind::Dedent) {
            push(Token::Kind::Newline, "", line_);
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(Token::Kind::Dedent, "", line_);
        }
        push(Token::Kind::End, "", line_);
        return std::move(tokens_);
    }

    std::set<int> interior_lines() const { return interior_; }

private:
    void push(Token::Kind kind, std::string text, int line, int end_line = -1) {
        tokens_.push_back(Token{kind, std::move(text), line, end_line < 0 ? line : end_line});
    }

    // Returns false when the line is blank or comment-only (already consumed).
    bool handle_indentation() {
        int col = 0;
        std::size_t p = pos_;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            col = src_[p] == '\t' ? (col / 8 + 1) * 8 : col + 1;
            ++p;
        }
        if (p >= src_.size()) {
            pos_ = p;
            return false;
        }
        if (src_[p] == '\n' || src_[p] == '\r' || src_[p] == '#') {
            while (p < src_.size() && src_[p] != '\n') ++p;
            if (p < src_.size()) {
                ++p;
                ++line_;
            }
            pos_ = p;
            return false;
        }
        pos_ = p;
        if (col > indents_.back()) {
            indents_.push_back(col);
            push(Token::Kind::Indent, "", line_);
        } else {
            while (col < indents_.back()) {
                indents_.pop_back();
                push(Token::Kind::Dedent, "", line_);
            }
            if (col != indents_.back()) throw SyntaxErrorInCode(line_, "unindent does not match any outer level");
        }
        return true;
    }

    bool lex_string() {
        std::size_t p = pos_;
        while (p < src_.size() && p - pos_ < 2 && std::string_view("rRbBuUfF").find(src_[p]) != std::string_view::npos) ++p;
        if (p >= src_.size() || (src_[p] != '\'' && src_[p] != '"')) return false;
        bool raw = false;
        for (std::size_t i = pos_; i < p; ++i) raw = raw || src_[i] == 'r' || src_[i] == 'R';
        char q = src_[p];
        bool triple = p + 2 < src_.size() && src_[p + 1] == q && src_[p + 2] == q;
        std::size_t b = pos_;
        int start_line = line_;
        p += triple ? 3 : 1;
        while (true) {
            if (p >= src_.size()) throw SyntaxErrorInCode(start_line, "unterminated string literal");
            char c = src_[p];
            if (c == '\\') {
                if (p + 1 < src_.size() && src_[p + 1] == '\n') {
                    ++line_;
                    if (triple) interior_.insert(line_);
                }
                p += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw SyntaxErrorInCode(start_line, "unterminated string literal");
                ++line_;
                interior_.insert(line_);
                ++p;
                continue;
            }
            if (c == q) {
                if (!triple) {
                    ++p;
                    break;
                }
                if (p + 2 < src_.size() && src_[p + 1] == q && src_[p + 2] == q) {
                    p += 3;
                    break;
                }
            }
            ++p;
        }
        (void)raw;
        push(Token::Kind::String, std::string(src_.substr(b, p - b)), start_line, line_);
        pos_ = p;
        return true;
    }

    void lex_number() {
        std::size_t b = pos_;
        auto digit_run = [&](auto pred) {
            while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
        };
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
            std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos) {
            pos_ += 2;
            digit_run([](unsigned char c) { return std::isxdigit(c) != 0; });
        } else {
            digit_run([](unsigned char c) { return std::isdigit(c) != 0; });
            if (pos_ < src_.size() && src_[pos_] == '.') {
                ++pos_;
                digit_run([](unsigned char c) { return std::isdigit(c) != 0; });
            }
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t save = pos_;
                ++pos_;
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
                if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    digit_run([](unsigned char c) { return std::isdigit(c) != 0; });
                } else {
                    pos_ = save;
                }
            }
            if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
        }
        push(Token::Kind::Number, std::string(src_.substr(b, pos_ - b)), line_);
    }

    void lex_op() {
        for (auto op : kOps) {
            if (src_.substr(pos_, op.size()) == op) {
                if (op == "(" || op == "[" || op == "{") ++depth_;
                if (op == ")" || op == "]" || op == "}") {
                    if (depth_ == 0) throw SyntaxErrorInCode(line_, "unmatched '" + std::string(op) + "'");
                    --depth_;
                }
                push(Token::Kind::Op, std::string(op), line_);
                pos_ += op.size();
                return;
            }
        }
        throw SyntaxErrorInCode(line_, std::string("invalid character '") + src_[pos_] + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int depth_ = 0;
    std::vector<int> indents_;
    std::vector<Token> tokens_;
    std::set<int> interior_;
};

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await", "break",
    "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield"};

bool is_keyword(std::string_view s) {
    return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Node module() {
        Node mod{"Module", "", 1, 1, {}};
        while (!at_kind(Token::Kind::End)) {
            if (at_kind(Token::Kind::Newline)) {
                ++i_;
                continue;
            }
            for (auto& s : statement()) mod.children.push_back(std::move(s));
        }
        if (!mod.children.empty()) mod.end_line = mod.children.back().end_line;
        return mod;
    }

private:
    // ---- token helpers ----
    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(i_ + ahead, toks_.size() - 1)];
    }
    bool at_kind(Token::Kind k) const { return peek().kind == k; }
    bool at_op(std::string_view op, std::size_t ahead = 0) const {
        return peek(ahead).kind == Token::Kind::Op && peek(ahead).text == op;
    }
    bool at_kw(std::string_view kw, std::size_t ahead = 0) const {
        return peek(ahead).kind == Token::Kind::Name && peek(ahead).text == kw;
    }
    int line() const { return peek().line; }
    int prev_end() const { return i_ == 0 ? 1 : toks_[i_ - 1].end_line; }

    [[noreturn]] void fail(const std::string& what) const {
        std::string near = peek().text.empty() ? "end of line" : "'" + peek().text + "'";
        throw SyntaxErrorInCode(line(), what + " near " + near);
    }
    void expect_op(std::string_view op) {
        if (!at_op(op)) fail("expected '" + std::string(op) + "'");
        ++i_;
    }
    void expect_kw(std::string_view kw) {
        if (!at_kw(kw)) fail("expected '" + std::string(kw) + "'");
        ++i_;
    }
    std::string expect_name() {
        if (!at_kind(Token::Kind::Name) || is_keyword(peek().text)) fail("expected identifier");
        return toks_[i_++].text;
    }
    bool accept_op(std::string_view op) {
        if (at_op(op)) {
            ++i_;
            return true;
        }
        return false;
    }
    bool accept_kw(std::string_view kw) {
        if (at_kw(kw)) {
            ++i_;
            return true;
        }
        return false;
    }
    Node make(std::string kind, std::string value, int line, std::vector<Node> kids = {}) {
        Node n{std::move(kind), std::move(value), line, prev_end(), std::move(kids)};
        return n;
    }
    static Node empty() { return Node{"Empty", "", 0, 0, {}}; }

    // ---- statements ----
    std::vector<Node> statement() {
        if (at_op("@")) return {decorated()};
        if (at_kind(Token::Kind::Name)) {
            const auto& t = peek().text;
            if (t == "if") return {if_stmt()};
            if (t == "while") return {while_stmt()};
            if (t == "for") return {for_stmt()};
            if (t == "try") return {try_stmt()};
            if (t == "with") return {with_stmt()};
            if (t == "def") return {funcdef({})};
            if (t == "class") return {classdef({})};
            if (t == "async" && (at_kw("def", 1) || at_kw("for", 1) || at_kw("with", 1))) {
                ++i_;
                return statement();
            }
        }
        return simple_stmt();
    }

    std::vector<Node> simple_stmt() {
        std::vector<Node> out;
        out.push_back(small_stmt());
        while (accept_op(";")) {
            if (at_kind(Token::Kind::Newline)) break;
            out.push_back(small_stmt());
        }
        if (!at_kind(Token::Kind::Newline)) fail("expected end of statement");
        ++i_;
        return out;
    }

    Node small_stmt() {
        int ln = line();
        if (at_kind(Token::Kind::Name)) {
            const std::string t = peek().text;
            if (t == "pass" || t == "break" || t == "continue") {
                ++i_;
                return make(t == "pass" ? "Pass" : t == "break" ? "Break" : "Continue", "", ln);
            }
            if (t == "return") {
                ++i_;
                std::vector<Node> kids;
                if (!at_stmt_end()) kids.push_back(testlist_star());
                return make("Return", "", ln, std::move(kids));
            }
            if (t == "raise") {
                ++i_;
                std::vector<Node> kids;
                if (!at_stmt_end()) {
                    kids.push_back(test());
                    if (accept_kw("from")) kids.push_back(test());
                }
                return make("Raise", "", ln, std::move(kids));
            }
            if (t == "global" || t == "nonlocal") {
                ++i_;
                std::vector<std::string> names{expect_name()};
                while (accept_op(",")) names.push_back(expect_name());
                std::string joined;
                for (auto& n : names) joined += (joined.empty() ? "" : ",") + n;
                return make(t == "global" ? "Global" : "Nonlocal", joined, ln);
            }
            if (t == "del") {
                ++i_;
                return make("Delete", "", ln, {exprlist()});
            }
            if (t == "assert") {
                ++i_;
                std::vector<Node> kids{test()};
                if (accept_op(",")) kids.push_back(test());
                return make("Assert", "", ln, std::move(kids));
            }
            if (t == "import") return import_name();
            if (t == "from") return import_from();
        }
        return expr_stmt();
    }

    bool at_stmt_end() const { return at_kind(Token::Kind::Newline) || at_op(";"); }

    std::string dotted() {
        std::string name = expect_name();
        while (at_op(".")) {
            ++i_;
            name += "." + expect_name();
        }
        return name;
    }

    Node import_name() {
        int ln = line();
        expect_kw("import");
        Node n = make("Import", "", ln);
        do {
            int al = line();
            std::string name = dotted();
            if (accept_kw("as")) name += " as " + expect_name();
            n.children.push_back(make("Alias", name, al));
        } while (accept_op(","));
        n.end_line = prev_end();
        return n;
    }

    Node import_from() {
        int ln = line();
        expect_kw("from");
        std::string module;
        while (at_op(".") || at_op("...")) module += toks_[i_++].text;
        if (!at_kw("import")) module += dotted();
        expect_kw("import");
        Node n = make("ImportFrom", module, ln);
        if (accept_op("*")) {
            n.children.push_back(make("Alias", "*", ln));
        } else {
            bool paren = accept_op("(");
            do {
                if (paren && at_op(")")) break;
                int al = line();
                std::string name = expect_name();
                if (accept_kw("as")) name += " as " + expect_name();
                n.children.push_back(make("Alias", name, al));
            } while (accept_op(","));
            if (paren) expect_op(")");
        }
        n.end_line = prev_end();
        return n;
    }

    Node expr_stmt() {
        int ln = line();
        Node first = testlist_star();
        if (at_op(":")) {
            ++i_;
            std::vector<Node> kids{std::move(first), test()};
            if (accept_op("=")) kids.push_back(at_kw("yield") ? yield_expr() : testlist_star());
            return make("AnnAssign", "", ln, std::move(kids));
        }
        static constexpr std::array<std::string_view, 13> kAug = {
            "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="};
        for (auto op : kAug) {
            if (at_op(op)) {
                ++i_;
                Node rhs = at_kw("yield") ? yield_expr() : testlist_star();
                return make("AugAssign", std::string(op), ln, {std::move(first), std::move(rhs)});
            }
        }
        if (at_op("=")) {
            std::vector<Node> parts{std::move(first)};
            while (accept_op("=")) parts.push_back(at_kw("yield") ? yield_expr() : testlist_star());
            return make("Assign", "", ln, std::move(parts));
        }
        return make("Expr", "", ln, {std::move(first)});
    }

    Node suite() {
        int ln = line();
        expect_op(":");
        Node body = make("Body", "", ln);
        if (!at_kind(Token::Kind::Newline)) {
            body.children = simple_stmt();
            body.end_line = prev_end();
            return body;
        }
        ++i_;
        if (!at_kind(Token::Kind::Indent)) fail("expected an indented block");
        ++i_;
        while (!at_kind(Token::Kind::Dedent) && !at_kind(Token::Kind::End)) {
            if (at_kind(Token::Kind::Newline)) {
                ++i_;
                continue;
            }
            for (auto& s : statement()) body.children.push_back(std::move(s));
        }
        if (at_kind(Token::Kind::Dedent)) ++i_;
        body.end_line = body.children.empty() ? ln : body.children.back().end_line;
        return body;
    }

    Node if_stmt() {
        int ln = line();
        ++i_;  // if / elif
        Node cond = namedexpr_test();
        Node body = suite();
        Node n = make("If", "", ln, {std::move(cond), std::move(body)});
        if (at_kw("elif")) {
            Node orelse = make("Else", "", line(), {if_stmt()});
            n.children.push_back(std::move(orelse));
        } else if (at_kw("else")) {
            int el = line();
            ++i_;
            Node orelse = suite();
            orelse.kind = "Else";
            orelse.line = el;
            n.children.push_back(std::move(orelse));
        }
        n.end_line = n.children.back().end_line;
        return n;
    }

    Node while_stmt() {
        int ln = line();
        ++i_;
        Node n = make("While", "", ln, {namedexpr_test()});
        n.children.push_back(suite());
        maybe_else(n);
        return n;
    }

    Node for_stmt() {
        int ln = line();
        ++i_;
        Node target = exprlist();
        expect_kw("in");
        Node iter = testlist();
        Node n = make("For", "", ln, {std::move(target), std::move(iter)});
        n.children.push_back(suite());
        maybe_else(n);
        return n;
    }

    void maybe_else(Node& n) {
        if (at_kw("else")) {
            int el = line();
            ++i_;
            Node orelse = suite();
            orelse.kind = "Else";
            orelse.line = el;
            n.children.push_back(std::move(orelse));
        }
        n.end_line = n.children.back().end_line;
    }

    Node try_stmt() {
        int ln = line();
        ++i_;
        Node n = make("Try", "", ln, {suite()});
        bool handled = false;
        while (at_kw("except")) {
            int hl = line();
            ++i_;
            accept_op("*");
            Node h = make("Handler", "", hl);
            if (!at_op(":")) {
                h.children.push_back(test());
                if (accept_kw("as")) h.value = expect_name();
            }
            h.children.push_back(suite());
            h.end_line = h.children.back().end_line;
            n.children.push_back(std::move(h));
            handled = true;
        }
        if (at_kw("else")) {
            int el = line();
            ++i_;
            Node orelse = suite();
            orelse.kind = "Else";
            orelse.line = el;
            n.children.push_back(std::move(orelse));
        }
        if (at_kw("finally")) {
            int fl = line();
            ++i_;
            Node fin = suite();
            fin.kind = "Finally";
            fin.line = fl;
            n.children.push_back(std::move(fin));
            handled = true;
        }
        if (!handled) fail("try statement needs except or finally");
        n.end_line = n.children.back().end_line;
        return n;
    }

    Node with_stmt() {
        int ln = line();
        ++i_;
        Node n = make("With", "", ln);
        bool paren = at_op("(") && paren_with_items();
        if (paren) ++i_;
        do {
            if (paren && at_op(")")) break;
            int il = line();
            Node item = make("WithItem", "", il, {test()});
            if (accept_kw("as")) item.children.push_back(expr());
            n.children.push_back(std::move(item));
        } while (accept_op(","));
        if (paren) expect_op(")");
        n.children.push_back(suite());
        n.end_line = n.children.back().end_line;
        return n;
    }

    // Distinguishes `with (a as b, c):` from `with (a) as b:`.
    bool paren_with_items() const {
        int depth = 0;
        for (std::size_t k = i_; k < toks_.size(); ++k) {
            const auto& t = toks_[k];
            if (t.kind == Token::Kind::Op) {
                if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
                if (t.text == ")" || t.text == "]" || t.text == "}") {
                    --depth;
                    if (depth == 0) return k + 1 < toks_.size() && toks_[k + 1].text == ":";
                }
            }
            if (t.kind == Token::Kind::Newline) return false;
        }
        return false;
    }

    Node decorated() {
        std::vector<Node> decos;
        while (at_op("@")) {
            int ln = line();
            ++i_;
            decos.push_back(make("Decorator", "", ln, {namedexpr_test()}));
            if (!at_kind(Token::Kind::Newline)) fail("expected newline after decorator");
            ++i_;
        }
        if (at_kw("async")) ++i_;
        if (at_kw("def")) return funcdef(std::move(decos));
        if (at_kw("class")) return classdef(std::move(decos));
        fail("expected def or class after decorator");
    }

    Node funcdef(std::vector<Node> decos) {
        int ln = decos.empty() ? line() : decos.front().line;
        expect_kw("def");
        std::string name = expect_name();
        expect_op("(");
        Node params = parameters(")", true);
        expect_op(")");
        Node returns = empty();
        if (accept_op("->")) returns = test();
        Node decorators = make("Decorators", "", ln, std::move(decos));
        Node body = suite();
        Node n = make("FunctionDef", name, ln,
                      {std::move(params), std::move(decorators), std::move(returns), std::move(body)});
        n.end_line = n.children.back().end_line;
        return n;
    }

    Node classdef(std::vector<Node> decos) {
        int ln = decos.empty() ? line() : decos.front().line;
        expect_kw("class");
        std::string name = expect_name();
        Node bases = make("Bases", "", line());
        if (accept_op("(")) {
            if (!at_op(")")) bases.children = arglist(")");
            expect_op(")");
        }
        Node decorators = make("Decorators", "", ln, std::move(decos));
        Node body = suite();
        Node n = make("ClassDef", name, ln, {std::move(bases), std::move(decorators), std::move(body)});
        n.end_line = n.children.back().end_line;
        return n;
    }

    Node parameters(std::string_view close, bool annotations) {
        Node params = make("Params", "", line());
        while (!at_op(close)) {
            int ln = line();
            if (accept_op("/")) {
                params.children.push_back(make("PosOnly", "", ln));
            } else if (accept_op("**")) {
                Node p = make("Param", "**" + expect_name(), ln);
                if (annotations && accept_op(":")) p.children.push_back(test());
                params.children.push_back(std::move(p));
            } else if (accept_op("*")) {
                std::string nm = "*";
                if (at_kind(Token::Kind::Name) && !is_keyword(peek().text)) nm += expect_name();
                Node p = make("Param", nm, ln);
                if (annotations && nm.size() > 1 && accept_op(":")) p.children.push_back(test());
                params.children.push_back(std::move(p));
            } else {
                Node p = make("Param", expect_name(), ln);
                Node annotation = empty();
                if (annotations && accept_op(":")) annotation = test();
                p.children.push_back(std::move(annotation));
                if (accept_op("=")) p.children.push_back(test());
                params.children.push_back(std::move(p));
            }
            if (!accept_op(",")) break;
        }
        params.end_line = prev_end();
        return params;
    }

    // ---- expressions ----
    Node testlist_star() {
        int ln = line();
        Node first = at_op("*") ? star_expr() : namedexpr_test();
        if (!at_op(",")) return first;
        Node tup = make("Tuple", "", ln, {std::move(first)});
        while (accept_op(",")) {
            if (at_stmt_end() || at_op("=") || at_op(")") || at_op(":") || is_aug_op()) break;
            tup.children.push_back(at_op("*") ? star_expr() : namedexpr_test());
        }
        tup.end_line = prev_end();
        return tup;
    }

    bool is_aug_op() const {
        return peek().kind == Token::Kind::Op && peek().text.size() >= 2 && peek().text.back() == '=' &&
               peek().text != "==" && peek().text != "<=" && peek().text != ">=" && peek().text != "!=";
    }

    Node testlist() {
        int ln = line();
        Node first = test();
        if (!at_op(",")) return first;
        Node tup = make("Tuple", "", ln, {std::move(first)});
        while (accept_op(",")) {
            if (at_op(":") || at_stmt_end() || at_op(")")) break;
            tup.children.push_back(test());
        }
        tup.end_line = prev_end();
        return tup;
    }

    Node exprlist() {
        int ln = line();
        Node first = at_op("*") ? star_expr() : expr();
        if (!at_op(",")) return first;
        Node tup = make("Tuple", "", ln, {std::move(first)});
        while (accept_op(",")) {
            if (at_kw("in") || at_stmt_end() || at_op("=")) break;
            tup.children.push_back(at_op("*") ? star_expr() : expr());
        }
        tup.end_line = prev_end();
        return tup;
    }

    Node star_expr() {
        int ln = line();
        expect_op("*");
        return make("Starred", "", ln, {expr()});
    }

    Node yield_expr() {
        int ln = line();
        expect_kw("yield");
        if (accept_kw("from")) return make("YieldFrom", "", ln, {test()});
        std::vector<Node> kids;
        if (!at_stmt_end() && !at_op(")") && !at_op("=")) kids.push_back(testlist_star());
        return make("Yield", "", ln, std::move(kids));
    }

    Node namedexpr_test() {
        int ln = line();
        Node t = test();
        if (accept_op(":=")) return make("NamedExpr", "", ln, {std::move(t), test()});
        return t;
    }

    Node test() {
        int ln = line();
        if (at_kw("lambda")) {
            ++i_;
            Node params = parameters(":", false);
            expect_op(":");
            return make("Lambda", "", ln, {std::move(params), test()});
        }
        Node body = or_test();
        if (at_kw("if")) {
            ++i_;
            Node cond = or_test();
            expect_kw("else");
            return make("IfExp", "", ln, {std::move(body), std::move(cond), test()});
        }
        return body;
    }

    Node test_nocond() {
        if (at_kw("lambda")) return test();
        return or_test();
    }

    Node or_test() {
        int ln = line();
        Node left = and_test();
        if (!at_kw("or")) return left;
        Node n = make("BoolOp", "or", ln, {std::move(left)});
        while (accept_kw("or")) n.children.push_back(and_test());
        n.end_line = prev_end();
        return n;
    }

    Node and_test() {
        int ln = line();
        Node left = not_test();
        if (!at_kw("and")) return left;
        Node n = make("BoolOp", "and", ln, {std::move(left)});
        while (accept_kw("and")) n.children.push_back(not_test());
        n.end_line = prev_end();
        return n;
    }

    Node not_test() {
        int ln = line();
        if (accept_kw("not")) return make("UnaryOp", "not", ln, {not_test()});
        return comparison();
    }

    Node comparison() {
        int ln = line();
        Node left = expr();
        std::string ops;
        std::vector<Node> kids{std::move(left)};
        while (true) {
            std::string op;
            if (at_kind(Token::Kind::Op) &&
                (peek().text == "<" || peek().text == ">" || peek().text == "==" || peek().text == ">=" ||
                 peek().text == "<=" || peek().text == "!=")) {
                op = toks_[i_++].text;
            } else if (at_kw("in")) {
                ++i_;
                op = "in";
            } else if (at_kw("not") && at_kw("in", 1)) {
                i_ += 2;
                op = "not in";
            } else if (at_kw("is")) {
                ++i_;
                op = accept_kw("not") ? "is not" : "is";
            } else {
                break;
            }
            ops += (ops.empty() ? "" : " ") + op;
            kids.push_back(expr());
        }
        if (kids.size() == 1) return std::move(kids.front());
        return make("Compare", ops, ln, std::move(kids));
    }

    Node binary(int level) {
        static const std::vector<std::vector<std::string_view>> kLevels = {
            {"|"}, {"^"}, {"&"}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "//", "%", "@"}};
        if (level == static_cast<int>(kLevels.size())) return factor();
        int ln = line();
        Node left = binary(level + 1);
        while (true) {
            const auto& ops = kLevels[static_cast<std::size_t>(level)];
            auto it = std::find_if(ops.begin(), ops.end(), [&](std::string_view op) { return at_op(op); });
            if (it == ops.end()) break;
            ++i_;
            Node right = binary(level + 1);
            left = make("BinOp", std::string(*it), ln, {std::move(left), std::move(right)});
        }
        return left;
    }

    Node expr() { return binary(0); }

    Node factor() {
        int ln = line();
        if (at_op("+") || at_op("-") || at_op("~")) {
            std::string op = toks_[i_++].text;
            return make("UnaryOp", op, ln, {factor()});
        }
        return power();
    }

    Node power() {
        int ln = line();
        bool awaited = accept_kw("await");
        Node base = atom_trailers();
        if (awaited) base = make("Await", "", ln, {std::move(base)});
        if (accept_op("**")) return make("BinOp", "**", ln, {std::move(base), factor()});
        return base;
    }

    Node atom_trailers() {
        Node node = atom();
        while (true) {
            int ln = line();
            if (accept_op("(")) {
                Node call = make("Call", "", node.line, {std::move(node)});
                if (!at_op(")")) {
                    for (auto& a : arglist(")")) call.children.push_back(std::move(a));
                }
                expect_op(")");
                call.end_line = prev_end();
                node = std::move(call);
            } else if (accept_op("[")) {
                Node sub = make("Subscript", "", node.line, {std::move(node)});
                do {
                    if (at_op("]")) break;
                    sub.children.push_back(subscript());
                } while (accept_op(","));
                expect_op("]");
                sub.end_line = prev_end();
                node = std::move(sub);
            } else if (at_op(".")) {
                ++i_;
                std::string attr = expect_name();
                node = make("Attribute", attr, node.line ? node.line : ln, {std::move(node)});
            } else {
                break;
            }
        }
        return node;
    }

    Node subscript() {
        int ln = line();
        Node lo = empty();
        if (!at_op(":")) {
            lo = at_op("*") ? star_expr() : namedexpr_test();
            if (!at_op(":")) return lo;
        }
        expect_op(":");
        Node hi = empty();
        if (!at_op(":") && !at_op("]") && !at_op(",")) hi = test();
        Node step = empty();
        if (accept_op(":")) {
            if (!at_op("]") && !at_op(",")) step = test();
        }
        return make("Slice", "", ln, {std::move(lo), std::move(hi), std::move(step)});
    }

    std::vector<Node> arglist(std::string_view close) {
        std::vector<Node> args;
        while (!at_op(close)) {
            int ln = line();
            if (accept_op("**")) {
                args.push_back(make("DoubleStarred", "", ln, {test()}));
            } else if (accept_op("*")) {
                args.push_back(make("Starred", "", ln, {test()}));
            } else if (at_kind(Token::Kind::Name) && !is_keyword(peek().text) && at_op("=", 1)) {
                std::string name = toks_[i_].text;
                i_ += 2;
                args.push_back(make("Keyword", name, ln, {test()}));
            } else {
                Node a = namedexpr_test();
                if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
                    Node gen = make("GeneratorExp", "", ln, {std::move(a)});
                    comp_for(gen);
                    a = std::move(gen);
                }
                args.push_back(std::move(a));
            }
            if (!accept_op(",")) break;
        }
        return args;
    }

    void comp_for(Node& comp) {
        while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
            int ln = line();
            accept_kw("async");
            expect_kw("for");
            Node target = exprlist();
            expect_kw("in");
            Node gen = make("Comprehension", "", ln, {std::move(target), or_test()});
            while (at_kw("if")) {
                ++i_;
                gen.children.push_back(test_nocond());
            }
            gen.end_line = prev_end();
            comp.children.push_back(std::move(gen));
        }
        comp.end_line = prev_end();
    }

    Node atom() {
        int ln = line();
        const Token& t = peek();
        if (t.kind == Token::Kind::Op) {
            if (t.text == "(") {
                ++i_;
                if (accept_op(")")) return make("Tuple", "", ln);
                if (at_kw("yield")) {
                    Node y = yield_expr();
                    expect_op(")");
                    return y;
                }
                Node first = at_op("*") ? star_expr() : namedexpr_test();
                if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
                    Node gen = make("GeneratorExp", "", ln, {std::move(first)});
                    comp_for(gen);
                    expect_op(")");
                    return gen;
                }
                if (!at_op(",")) {
                    expect_op(")");
                    // Parentheses are not part of the tree.
                    return first;
                }
                Node tup = make("Tuple", "", ln, {std::move(first)});
                while (accept_op(",")) {
                    if (at_op(")")) break;
                    tup.children.push_back(at_op("*") ? star_expr() : namedexpr_test());
                }
                expect_op(")");
                tup.end_line = prev_end();
                return tup;
            }
            if (t.text == "[") {
                ++i_;
                Node list = make("List", "", ln);
                if (accept_op("]")) return list;
                Node first = at_op("*") ? star_expr() : namedexpr_test();
                if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
                    Node comp = make("ListComp", "", ln, {std::move(first)});
                    comp_for(comp);
                    expect_op("]");
                    return comp;
                }
                list.children.push_back(std::move(first));
                while (accept_op(",")) {
                    if (at_op("]")) break;
                    list.children.push_back(at_op("*") ? star_expr() : namedexpr_test());
                }
                expect_op("]");
                list.end_line = prev_end();
                return list;
            }
            if (t.text == "{") {
                ++i_;
                return dict_or_set(ln);
            }
            if (t.text == "...") {
                ++i_;
                return make("Constant", "...", ln);
            }
            fail("unexpected token");
        }
        if (t.kind == Token::Kind::Number) {
            ++i_;
            return make("Num", t.text, ln);
        }
        if (t.kind == Token::Kind::String) {
            std::string joined;
            while (at_kind(Token::Kind::String)) {
                joined += (joined.empty() ? "" : " ") + peek().text;
                ++i_;
            }
            return make("Str", joined, ln);
        }
        if (t.kind == Token::Kind::Name) {
            if (t.text == "None" || t.text == "True" || t.text == "False") {
                ++i_;
                return make("Constant", t.text, ln);
            }
            if (is_keyword(t.text)) fail("unexpected keyword");
            ++i_;
            return make("Name", t.text, ln);
        }
        fail("unexpected end of statement");
    }

    Node dict_or_set(int ln) {
        if (accept_op("}")) return make("Dict", "", ln);
        if (at_op("**")) {
            Node d = make("Dict", "", ln);
            dict_items(d);
            return d;
        }
        Node first = at_op("*") ? star_expr() : namedexpr_test();
        if (accept_op(":")) {
            Node value = test();
            if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
                Node comp = make("DictComp", "", ln, {std::move(first), std::move(value)});
                comp_for(comp);
                expect_op("}");
                return comp;
            }
            Node d = make("Dict", "", ln, {std::move(first), std::move(value)});
            if (accept_op(",")) dict_items(d);
            else expect_op("}");
            d.end_line = prev_end();
            return d;
        }
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
            Node comp = make("SetComp", "", ln, {std::move(first)});
            comp_for(comp);
            expect_op("}");
            return comp;
        }
        Node s = make("Set", "", ln, {std::move(first)});
        while (accept_op(",")) {
            if (at_op("}")) break;
            s.children.push_back(at_op("*") ? star_expr() : namedexpr_test());
        }
        expect_op("}");
        s.end_line = prev_end();
        return s;
    }

    void dict_items(Node& d) {
        while (!at_op("}")) {
            int ln = line();
            if (accept_op("**")) {
                d.children.push_back(make("DoubleStarred", "", ln, {expr()}));
            } else {
                d.children.push_back(test());
                expect_op(":");
                d.children.push_back(test());
            }
            if (!accept_op(",")) break;
        }
        expect_op("}");
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

void dump_into(const Node& n, std::string& out) {
    out += '(';
    out += n.kind;
    if (!n.value.empty()) {
        out += " \"";
        for (char c : n.value) {
            if (c == '"' || c == '\\') out += '\\';
            out += c == '\n' ? 'n' : c;
        }
        out += '"';
    }
    for (const auto& c : n.children) {
        out += ' ';
        dump_into(c, out);
    }
    out += ')';
}

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::set<int> string_interior_lines(std::string_view source) {
    Lexer lx(source);
    lx.run();
    return lx.interior_lines();
}

std::string Node::dump() const {
    std::string out;
    dump_into(*this, out);
    return out;
}

Node parse(std::string_view source) { return Parser(tokenize(source)).module(); }

void walk(const Node& node, const std::function<void(const Node&)>& visit) {
    visit(node);
    for (const auto& c : node.children) walk(c, visit);
}

std::string dotted_name(const Node& node) {
    if (node.kind == "Name") return node.value;
    if (node.kind == "Attribute" && !node.children.empty()) {
        auto base = dotted_name(node.children.front());
        return base.empty() ? std::string() : base + "." + node.value;
    }
    return {};
}

bool parses(std::string_view source) {
    try {
        parse(source);
        return true;
    } catch (const SyntaxErrorInCode&) {
        return false;
    }
}

}  // namespace modernize::py
