#include "modernize/corpus_ingest.hpp"
#include "modernize/errors.hpp"
#include "modernize/text.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

using namespace modernize;

namespace {

std::string fixture_path(const std::string& rel) { return std::string(MODERNIZE_FIXTURES) + "/" + rel; }

std::vector<DocumentElement> parse_fixture(const std::string& rel) {
    return parse_document(load_document(fixture_path(rel), rel));
}

std::vector<DocumentElement> parse_md(const std::string& raw) {
    return parse_document(SourceDocument{"doc.md", DocFormat::markdown, raw});
}

std::string squash(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    }
    return out;
}

// Paragraphs of roughly `para` characters separated by blank lines.
std::string paragraphs(std::size_t total, std::size_t para) {
    std::string out;
    int n = 0;
    while (out.size() < total) {
        std::string p;
        while (p.size() < para) p += "Sentence number " + std::to_string(n++) + " talks about stencils. ";
        p.pop_back();
        if (!out.empty()) out += "\n\n";
        out += p;
    }
    return out;
}

KnowledgeChunk chunk_of(const std::string& content, ChunkKind kind = ChunkKind::doc_section) {
    KnowledgeChunk c;
    c.chunk_id = "doc.md#0:deadbeef";
    c.title = "T";
    c.content = content;
    c.char_length = content.size();
    c.source_path = "doc.md";
    c.kind = kind;
    return c;
}

}  // namespace

TEST(CorpusIngest, FormatFromExtension) {
    EXPECT_EQ(infer_format("a/b.md"), DocFormat::markdown);
    EXPECT_EQ(infer_format("x.ipynb"), DocFormat::notebook);
    EXPECT_EQ(infer_format("x.py"), DocFormat::python_source);
    try {
        infer_format("notes.pdf");
        FAIL();
    } catch (const UnsupportedFormat& e) {
        EXPECT_NE(std::string(e.what()).find("notes.pdf"), std::string::npos);
    }
}

TEST(CorpusIngest, OneElementPerConstruct) {
    auto els = parse_md("# Title\ntext\n```code```");
    ASSERT_EQ(els.size(), 3u);
    EXPECT_EQ(els[0].kind, ElementKind::heading);
    EXPECT_EQ(els[0].heading_level, 1);
    EXPECT_EQ(els[0].content, "Title");
    EXPECT_EQ(els[1].kind, ElementKind::text);
    EXPECT_EQ(els[1].content, "text");
    EXPECT_EQ(els[2].kind, ElementKind::code_block);
    EXPECT_EQ(els[2].content, "code");
}

TEST(CorpusIngest, SeismicFixtureHandWalk) {
    auto els = parse_fixture("docs/seismic.md");
    std::vector<ElementKind> kinds;
    for (const auto& e : els) kinds.push_back(e.kind);
    std::vector<ElementKind> expected{ElementKind::heading,    ElementKind::text,       ElementKind::code_block,
                                      ElementKind::heading,    ElementKind::code_block, ElementKind::table};
    EXPECT_EQ(kinds, expected);
    EXPECT_EQ(els[0].content, "Seismic modelling");
    EXPECT_EQ(els[3].content, "Absorbing layers");
    EXPECT_EQ(els[3].heading_level, 2);
    EXPECT_EQ(els[4].content, "damp = Function(name='damp', grid=grid)");
    EXPECT_EQ(text::split_lines(els[2].content).size(), 3u);
    EXPECT_EQ(text::split_lines(els[5].content).size(), 4u);
    for (std::size_t i = 0; i < els.size(); ++i) EXPECT_EQ(els[i].order, i);
}

TEST(CorpusIngest, ListsImagesAndLevels) {
    auto els = parse_md("### Deep\n- one\n- two\n  more\n\n![fig](wave.png)\n\nplain\n");
    ASSERT_EQ(els.size(), 4u);
    EXPECT_EQ(els[0].heading_level, 3);
    EXPECT_EQ(els[1].kind, ElementKind::list);
    EXPECT_EQ(els[1].content, "- one\n- two\n  more");
    EXPECT_EQ(els[2].kind, ElementKind::image_ref);
    EXPECT_EQ(els[3].kind, ElementKind::text);
}

TEST(CorpusIngest, UnclosedFenceRunsToEnd) {
    auto els = parse_md("intro\n\n```\nx = 1\n# not a heading\n");
    ASSERT_EQ(els.size(), 2u);
    EXPECT_EQ(els[1].kind, ElementKind::code_block);
    EXPECT_EQ(els[1].content, "x = 1\n# not a heading");
}

TEST(CorpusIngest, NotebookSourcesOnly) {
    auto els = parse_fixture("docs/notebook.ipynb");
    ASSERT_EQ(els.size(), 5u);
    EXPECT_EQ(els[0].kind, ElementKind::heading);
    EXPECT_EQ(els[1].kind, ElementKind::text);
    EXPECT_EQ(els[2].kind, ElementKind::code_block);
    EXPECT_EQ(els[3].kind, ElementKind::text);
    EXPECT_EQ(els[4].kind, ElementKind::code_block);
    for (const auto& e : els) EXPECT_EQ(e.content.find("OUTPUT NOISE"), std::string::npos);
}

TEST(CorpusIngest, NotebookUnderOneHeadingIsOneChunk) {
    auto els = parse_fixture("docs/notebook.ipynb");
    auto chunks = build_chunks(els);
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].title, "Burgers equation");
    const auto& c = chunks[0].content;
    auto a = c.find("viscous Burgers");
    auto b = c.find("grid = Grid(shape=(80, 80))");
    auto d = c.find("first order upwind");
    auto e = c.find("v = TimeFunction");
    ASSERT_NE(a, std::string::npos);
    ASSERT_NE(b, std::string::npos);
    ASSERT_NE(d, std::string::npos);
    ASSERT_NE(e, std::string::npos);
    EXPECT_LT(a, b);
    EXPECT_LT(b, d);
    EXPECT_LT(d, e);
}

TEST(CorpusIngest, MalformedNotebookNamesPath) {
    try {
        parse_fixture("docs/broken.ipynb");
        FAIL();
    } catch (const ParseFailure& e) {
        EXPECT_NE(std::string(e.what()).find("docs/broken.ipynb"), std::string::npos);
    }
    EXPECT_THROW(parse_document(SourceDocument{"n.ipynb", DocFormat::notebook, "{\"cells\": 3}"}), ParseFailure);
}

TEST(CorpusIngest, PythonDefinitionsIsolated) {
    auto els = parse_fixture("docs/operators.py");
    std::vector<std::string> symbols;
    for (const auto& e : els) {
        if (e.kind == ElementKind::function || e.kind == ElementKind::class_def) symbols.push_back(e.symbol);
    }
    EXPECT_EQ(symbols, (std::vector<std::string>{"laplacian", "Stencil"}));
    EXPECT_EQ(els.front().kind, ElementKind::text);
    EXPECT_EQ(els.front().content, "Small operator helpers used by the stencil examples.");
    for (const auto& e : els) {
        if (e.symbol == "laplacian") {
            EXPECT_TRUE(text::starts_with(e.content, "def laplacian(u, h):"));
            EXPECT_NE(e.content.find("\"\"\"Five point Laplacian.\"\"\""), std::string::npos);
        }
        if (e.symbol == "Stencil") {
            EXPECT_TRUE(text::starts_with(e.content, "# Base class for stencils."));
            EXPECT_NE(e.content.find("def apply(self, u):"), std::string::npos);
        }
    }
    EXPECT_EQ(els.back().kind, ElementKind::code_block);
    EXPECT_NE(els.back().content.find("result = laplacian"), std::string::npos);
}

TEST(CorpusIngest, PythonSyntaxErrorFallsBackToOneBlock) {
    auto els = parse_document(SourceDocument{"bad.py", DocFormat::python_source, "def f(:\n  pass\n"});
    ASSERT_EQ(els.size(), 1u);
    EXPECT_EQ(els[0].kind, ElementKind::code_block);
}

TEST(CorpusIngest, HeadingSectionWithBody) {
    std::vector<DocumentElement> els{{ElementKind::heading, "A", 1, 0, "d.md", {}},
                                     {ElementKind::text, std::string(600, 'x'), 0, 1, "d.md", {}}};
    auto chunks = build_chunks(els);
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].title, "A");
    EXPECT_EQ(chunks[0].char_length, 600u);
    EXPECT_EQ(chunks[0].kind, ChunkKind::doc_section);
}

TEST(CorpusIngest, SmallFileIsSingleUndersizedChunk) {
    std::string body = "def f(x):\n    return x\n" + std::string(277, '#');
    ASSERT_EQ(body.size(), 300u);
    auto chunks = build_chunks(parse_document(SourceDocument{"small.py", DocFormat::python_source, body}));
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].kind, ChunkKind::code_unit);
    EXPECT_LT(chunks[0].char_length, kMinChunkChars);
}

TEST(CorpusIngest, SmallSectionsMergeForward) {
    std::string raw = "# One\n\nshort.\n\n# Two\n\n" + paragraphs(700, 300) + "\n\n# Three\n\ntail words.\n";
    auto chunks = build_chunks(parse_md(raw));
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_NE(chunks[0].content.find("## Two"), std::string::npos);
    EXPECT_NE(chunks[0].content.find("tail words."), std::string::npos);

    std::string two = "# One\n\n" + paragraphs(600, 300) + "\n\n# Two\n\n" + paragraphs(600, 300);
    auto split = build_chunks(parse_md(two));
    ASSERT_EQ(split.size(), 2u);
    EXPECT_EQ(split[0].title, "One");
    EXPECT_EQ(split[1].title, "Two");
}

TEST(CorpusIngest, ChunkMetadata) {
    auto chunks = build_chunks(parse_fixture("docs/heat_2d.md"));
    ASSERT_EQ(chunks.size(), 1u);
    const auto& c = chunks[0];
    EXPECT_EQ(c.title, "Two-dimensional heat diffusion");
    EXPECT_EQ(c.summary, "The Heat Equation describes how temperature spreads through a plate.");
    EXPECT_EQ(c.char_length, c.content.size());
    EXPECT_EQ(c.directory_category, "docs");
    EXPECT_TRUE(text::starts_with(c.chunk_id, "docs/heat_2d.md#0:"));
    EXPECT_NE(c.content.find("```\nfrom devito import"), std::string::npos);
    EXPECT_EQ(directory_category("top.md"), "root");
    EXPECT_EQ(directory_category("examples/cfd/a.py"), "examples");
}

TEST(CorpusIngest, SplitTwentyThousandAtBlankLines) {
    std::string s = paragraphs(20000, 1000);
    auto chunk = chunk_of(s);
    auto pieces = split_oversized(chunk);
    ASSERT_EQ(pieces.size(), 3u);

    std::set<std::size_t> legal;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] == '\n' && s[i + 1] == '\n') legal.insert(i + 2);
    }
    std::size_t pos = 0;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const auto& p = pieces[k];
        EXPECT_GE(p.char_length, 500u);
        EXPECT_LE(p.char_length, 8000u);
        EXPECT_NEAR(static_cast<double>(p.char_length), 20000.0 / 3, 700.0);
        auto at = s.find(p.content, pos);
        ASSERT_NE(at, std::string::npos);
        if (k > 0) EXPECT_TRUE(legal.count(at)) << "cut at " << at;
        pos = at + p.content.size();
    }
    EXPECT_EQ(pieces[0].chunk_id, chunk.chunk_id);
    EXPECT_FALSE(pieces[0].parent_id.has_value());
    EXPECT_EQ(pieces[1].chunk_id, chunk.chunk_id + "~1");
    EXPECT_EQ(*pieces[2].parent_id, chunk.chunk_id);
}

TEST(CorpusIngest, SplitFallsBackToSentences) {
    std::string s;
    for (int i = 0; s.size() < 12000; ++i) s += "Wave " + std::to_string(i) + " is reflected at the free surface. ";
    auto pieces = split_oversized(chunk_of(text::trim(s)));
    ASSERT_EQ(pieces.size(), 2u);
    for (const auto& p : pieces) {
        EXPECT_TRUE(text::ends_with(p.content, "surface."));
        EXPECT_LE(p.char_length, 8000u);
    }
}

TEST(CorpusIngest, SplitBoundaryCases) {
    auto exact = chunk_of(paragraphs(8000, 900).substr(0, 8000));
    ASSERT_EQ(exact.content.size(), 8000u);
    auto same = split_oversized(exact);
    ASSERT_EQ(same.size(), 1u);
    EXPECT_EQ(same[0].content, exact.content);
    EXPECT_FALSE(same[0].oversize_warning);

    auto line = split_oversized(chunk_of(std::string(9000, 'z')));
    ASSERT_EQ(line.size(), 1u);
    EXPECT_TRUE(line[0].oversize_warning);
    EXPECT_EQ(line[0].char_length, 9000u);
}

TEST(CorpusIngest, CodeSplitsOnlyAtTopLevelStatements) {
    std::string code;
    for (int f = 0; code.size() < 10000; ++f) {
        code += "def f" + std::to_string(f) + "(x):\n";
        for (int l = 0; l < 12; ++l) code += "    x = x + " + std::to_string(l) + "  # step. Next\n";
        code += "    return x\n\n\n";
    }
    auto pieces = split_oversized(chunk_of(code, ChunkKind::code_unit));
    ASSERT_GE(pieces.size(), 2u);
    for (const auto& p : pieces) {
        EXPECT_TRUE(text::starts_with(p.content, "def f")) << p.content.substr(0, 40);
        EXPECT_TRUE(text::ends_with(p.content, "return x"));
    }
}

TEST(CorpusIngest, SizeLawCoverageDeterminism) {
    std::string raw = "# Big\n\n" + paragraphs(19000, 1200) + "\n\n# Small\n\nA tiny note.\n\n## Code\n\n```\n" +
                      std::string(40, 'c') + "\n```\n\n# Mid\n\n" + paragraphs(2500, 400);
    auto els = parse_md(raw);
    auto a = build_chunks(els);
    auto b = build_chunks(els);
    ASSERT_EQ(a.size(), b.size());
    std::string joined;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].chunk_id, b[i].chunk_id);
        EXPECT_EQ(a[i].content, b[i].content);
        EXPECT_GE(a[i].char_length, 500u);
        EXPECT_LE(a[i].char_length, 8000u);
        EXPECT_TRUE(ids.insert(a[i].chunk_id).second);
        if (a[i].parent_id) EXPECT_TRUE(ids.count(*a[i].parent_id));
        joined += a[i].content;
    }
    std::string expected;
    for (std::size_t i = 0; i < els.size(); ++i) {
        if (els[i].kind == ElementKind::heading && i > 0 && els[i].content != "Big" && els[i].content != "Small") {
            expected += "##" + els[i].content;
        } else if (els[i].kind != ElementKind::heading) {
            expected += els[i].kind == ElementKind::code_block ? "```" + els[i].content + "```" : els[i].content;
        }
    }
    EXPECT_EQ(squash(joined), squash(expected));
}

TEST(CorpusIngest, IngestCorpusSortedAndRoundTrips) {
    std::vector<std::string> failures;
    auto chunks = ingest_corpus(fixture_path("docs"), &failures);
    ASSERT_EQ(failures.size(), 1u);
    EXPECT_NE(failures[0].find("broken.ipynb"), std::string::npos);
    ASSERT_FALSE(chunks.empty());
    for (std::size_t i = 1; i < chunks.size(); ++i) EXPECT_LE(chunks[i - 1].source_path, chunks[i].source_path);
    for (const auto& c : chunks) {
        nlohmann::json j = c;
        auto back = j.get<KnowledgeChunk>();
        EXPECT_EQ(back.chunk_id, c.chunk_id);
        EXPECT_EQ(back.content, c.content);
        EXPECT_EQ(back.kind, c.kind);
        EXPECT_EQ(back.directory_category, "root");
    }
}
