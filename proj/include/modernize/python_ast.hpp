#pragma once

// Grammar-level parser for the Python subset that generated Devito scripts and
// corpus sources use. Produces a generic syntax tree; no evaluation.

#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace modernize::py {

struct Token {
    enum class Kind { Name, Number, String, Op, Newline, Indent, Dedent, End };
    Kind kind;
    std::string text;
    int line = 0;
    int end_line = 0;
};

/// Throws SyntaxErrorInCode on unterminated strings, bad dedents, unbalanced brackets.
std::vector<Token> tokenize(std::string_view source);

/// Lines that lie strictly inside a multi-line string literal (not the line it
/// opens on). Reformatting must leave these untouched.
std::set<int> string_interior_lines(std::string_view source);

struct Node {
    std::string kind;
    std::string value;
    int line = 0;
    int end_line = 0;
    std::vector<Node> children;

    /// Canonical S-expression; two trees are equal iff their dumps are equal.
    std::string dump() const;
};

/// Parses a module. Throws SyntaxErrorInCode.
Node parse(std::string_view source);

/// Pre-order traversal.
void walk(const Node& node, const std::function<void(const Node&)>& visit);

/// Dotted name for Name/Attribute chains ("u.data"), empty otherwise.
std::string dotted_name(const Node& node);

bool parses(std::string_view source);

}  // namespace modernize::py
