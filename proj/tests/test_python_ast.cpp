#include "modernize/errors.hpp"
#include "modernize/python_ast.hpp"
#include "modernize/text.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace modernize;

namespace {

std::string fixture(const std::string& rel) { return text::read_file(std::string(MODERNIZE_FIXTURES) + "/" + rel); }

int count_kind(const py::Node& root, const std::string& kind) {
    int n = 0;
    py::walk(root, [&](const py::Node& node) { n += node.kind == kind; });
    return n;
}

}  // namespace

TEST(PythonAst, ParsesEveryGuardrailSnippet) {
    for (const auto& entry : std::filesystem::directory_iterator(std::string(MODERNIZE_FIXTURES) + "/guardrails")) {
        SCOPED_TRACE(entry.path().string());
        EXPECT_NO_THROW(py::parse(text::read_file(entry.path().string())));
    }
}

TEST(PythonAst, AssignmentAndCallShapes) {
    auto mod = py::parse("x, = grid.dimensions\nop = Operator([Eq(u.forward, 1)], name='k')\n");
    ASSERT_EQ(mod.children.size(), 2u);
    const auto& unpack = mod.children[0];
    EXPECT_EQ(unpack.kind, "Assign");
    EXPECT_EQ(unpack.children[0].kind, "Tuple");
    EXPECT_EQ(py::dotted_name(unpack.children[1]), "grid.dimensions");

    const auto& call = mod.children[1].children[1];
    EXPECT_EQ(call.kind, "Call");
    EXPECT_EQ(py::dotted_name(call.children[0]), "Operator");
    EXPECT_EQ(call.children[1].kind, "List");
    EXPECT_EQ(call.children[2].kind, "Keyword");
    EXPECT_EQ(call.children[2].value, "name");
}

TEST(PythonAst, CompoundStatementsTrackLineSpans) {
    const std::string src =
        "import os\n"
        "\n"
        "@decorator\n"
        "def f(a, b=2, *args, c: int = 3, **kw) -> int:\n"
        "    \"\"\"Doc\n"
        "    string.\"\"\"\n"
        "    for i in range(a):\n"
        "        if i % 2 == 0 and not b:\n"
        "            continue\n"
        "        elif i > 3:\n"
        "            break\n"
        "    return [j ** 2 for j in range(3) if j]\n"
        "\n"
        "class K(Base, metaclass=Meta):\n"
        "    def m(self):\n"
        "        with open('p') as fh, ctx():\n"
        "            pass\n"
        "        try:\n"
        "            y = {k: v for k, v in kw.items()}\n"
        "        except (KeyError, ValueError) as e:\n"
        "            raise RuntimeError() from e\n"
        "        finally:\n"
        "            z = lambda q: q if q else -q\n";
    auto mod = py::parse(src);
    ASSERT_EQ(mod.children.size(), 3u);
    EXPECT_EQ(mod.children[1].kind, "FunctionDef");
    EXPECT_EQ(mod.children[1].value, "f");
    EXPECT_EQ(mod.children[1].line, 3);
    EXPECT_EQ(mod.children[1].end_line, 12);
    EXPECT_EQ(mod.children[2].kind, "ClassDef");
    EXPECT_EQ(mod.children[2].line, 14);
    EXPECT_EQ(mod.children[2].end_line, 23);
    EXPECT_EQ(count_kind(mod, "ListComp"), 1);
    EXPECT_EQ(count_kind(mod, "DictComp"), 1);
    EXPECT_EQ(count_kind(mod, "Lambda"), 1);
    EXPECT_EQ(count_kind(mod, "Handler"), 1);
}

TEST(PythonAst, SlicesAndSubscripts) {
    auto mod = py::parse("u.data[0, :] = a[1:-1, ::2]\n");
    const auto& lhs = mod.children[0].children[0];
    EXPECT_EQ(lhs.kind, "Subscript");
    EXPECT_EQ(lhs.children.size(), 3u);  // object + two indices
    EXPECT_EQ(lhs.children[2].kind, "Slice");
}

TEST(PythonAst, ParenthesesDoNotChangeTheTree) {
    EXPECT_EQ(py::parse("y = (a + b) * c\n").dump(), py::parse("y = ((a + b)) * (c)\n").dump());
    EXPECT_NE(py::parse("y = (a + b) * c\n").dump(), py::parse("y = a + b * c\n").dump());
}

TEST(PythonAst, WhitespaceAndCommentsDoNotChangeTheTree) {
    auto a = py::parse("import numpy as np\n\n\nx = np.zeros( 3 )   # note\n");
    auto b = py::parse("import numpy as np\nx = np.zeros(3)\n");
    EXPECT_EQ(a.dump(), b.dump());
}

TEST(PythonAst, SyntaxErrorsCarryLine) {
    try {
        py::parse("x = 1\ny = (2\n");
        FAIL() << "expected SyntaxErrorInCode";
    } catch (const SyntaxErrorInCode& e) {
        EXPECT_GE(e.line(), 2);
    }
    EXPECT_FALSE(py::parses("def f(:\n  pass\n"));
    EXPECT_FALSE(py::parses("if x:\npass\n"));
    EXPECT_FALSE(py::parses("s = 'unterminated\n"));
    EXPECT_FALSE(py::parses("  x = 1\n y = 2\n"));
    EXPECT_TRUE(py::parses(""));
}

TEST(PythonAst, StringInteriorLines) {
    auto lines = py::string_interior_lines("a = 1\ns = \"\"\"one\n\ntwo\"\"\"\nb = 2\n");
    EXPECT_EQ(lines, (std::set<int>{3, 4}));
}
