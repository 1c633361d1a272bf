#include "modernize/corpus_ingest.hpp"

#include "modernize/errors.hpp"
#include "modernize/python_ast.hpp"
#include "modernize/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <future>
#include <limits>
#include <regex>
#include <set>

namespace modernize {
namespace fs = std::filesystem;

DocFormat infer_format(const std::string& path) {
    auto ext = text::to_lower(fs::path(path).extension().string());
    if (ext == ".md" || ext == ".markdown") return DocFormat::markdown;
    if (ext == ".ipynb") return DocFormat::notebook;
    if (ext == ".py") return DocFormat::python_source;
    throw UnsupportedFormat(path);
}

SourceDocument load_document(const std::string& file_path, const std::string& logical_path) {
    auto format = infer_format(file_path);
    return SourceDocument{logical_path, format, text::read_file(file_path)};
}

std::string to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::heading: return "heading";
        case ElementKind::text: return "text";
        case ElementKind::code_block: return "code_block";
        case ElementKind::function: return "function";
        case ElementKind::class_def: return "class_def";
        case ElementKind::table: return "table";
        case ElementKind::list: return "list";
        case ElementKind::image_ref: return "image_ref";
    }
    return "text";
}

namespace {

const std::regex kHeading(R"(^\s{0,3}(#{1,6})\s+(.*?)\s*#*\s*$)");
const std::regex kListItem(R"(^\s*([-*+]|\d+[.)])\s+.*)");
const std::regex kImage(R"(^\s*!\[[^\]]*\]\([^)]*\)\s*$)");
const std::regex kInlineFence(R"(^\s*(```|~~~)(.+?)\1\s*$)");

bool is_fence(const std::string& line, std::string* marker) {
    auto t = text::trim(line);
    for (const char* m : {"```", "~~~"}) {
        if (text::starts_with(t, m)) {
            if (marker) *marker = m;
            return true;
        }
    }
    return false;
}

void parse_markdown(const std::string& raw, const std::string& path, std::vector<DocumentElement>& out) {
    auto lines = text::split_lines(raw);
    std::vector<std::string> para;
    ElementKind block_kind = ElementKind::text;

    auto emit = [&](ElementKind kind, std::string content, int level = 0) {
        out.push_back(DocumentElement{kind, std::move(content), level, 0, path, {}});
    };
    auto flush = [&]() {
        if (!para.empty()) emit(block_kind, text::join(para, "\n"));
        para.clear();
        block_kind = ElementKind::text;
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        std::smatch m;
        std::string marker;
        if (std::regex_match(line, m, kInlineFence)) {
            flush();
            emit(ElementKind::code_block, text::trim(m[2].str()));
            continue;
        }
        if (is_fence(line, &marker)) {
            flush();
            std::vector<std::string> body;
            std::size_t j = i + 1;
            while (j < lines.size() && !text::starts_with(text::trim(lines[j]), marker)) body.push_back(lines[j++]);
            emit(ElementKind::code_block, text::join(body, "\n"));
            i = j;  // skip closing fence (or run to end)
            continue;
        }
        if (text::trim(line).empty()) {
            flush();
            continue;
        }
        if (std::regex_match(line, m, kHeading)) {
            flush();
            emit(ElementKind::heading, m[2].str(), static_cast<int>(m[1].length()));
            continue;
        }
        if (std::regex_match(line, kImage)) {
            flush();
            emit(ElementKind::image_ref, text::trim(line));
            continue;
        }
        bool table_line = text::starts_with(text::trim(line), "|");
        bool list_line = std::regex_match(line, kListItem);
        bool continuation = !para.empty() && block_kind == ElementKind::list &&
                            (line[0] == ' ' || line[0] == '\t');
        ElementKind kind = table_line ? ElementKind::table
                           : (list_line || continuation) ? ElementKind::list
                                                         : ElementKind::text;
        if (!para.empty() && kind != block_kind) flush();
        block_kind = kind;
        para.push_back(line);
    }
    flush();
}

std::string join_lines(const std::vector<std::string>& lines, int first, int last) {
    std::vector<std::string> part;
    for (int l = first; l <= last && l <= static_cast<int>(lines.size()); ++l) {
        part.push_back(lines[static_cast<std::size_t>(l - 1)]);
    }
    return text::trim(text::join(part, "\n"));
}

std::string strip_string_literal(std::string s) {
    std::size_t p = 0;
    while (p < s.size() && std::isalpha(static_cast<unsigned char>(s[p]))) ++p;
    s = s.substr(p);
    for (const char* q : {"\"\"\"", "'''", "\"", "'"}) {
        std::size_t n = std::char_traits<char>::length(q);
        if (s.size() >= 2 * n && text::starts_with(s, q) && text::ends_with(s, q)) {
            return text::trim(s.substr(n, s.size() - 2 * n));
        }
    }
    return text::trim(s);
}

void parse_python(const std::string& raw, const std::string& path, std::vector<DocumentElement>& out) {
    auto lines = text::split_lines(raw);
    py::Node mod;
    try {
        mod = py::parse(raw);
    } catch (const SyntaxErrorInCode&) {
        if (!text::trim(raw).empty()) {
            out.push_back(DocumentElement{ElementKind::code_block, text::trim(raw), 0, 0, path, {}});
        }
        return;
    }
    int covered = 0;  // last line already assigned to an element
    int group_start = -1;
    int group_end = -1;
    auto flush_group = [&]() {
        if (group_start < 0) return;
        auto body = join_lines(lines, group_start, group_end);
        if (!body.empty()) out.push_back(DocumentElement{ElementKind::code_block, body, 0, 0, path, {}});
        covered = group_end;
        group_start = group_end = -1;
    };
    for (std::size_t s = 0; s < mod.children.size(); ++s) {
        const auto& stmt = mod.children[s];
        bool is_docstring = s == 0 && stmt.kind == "Expr" && !stmt.children.empty() &&
                            stmt.children[0].kind == "Str";
        if (is_docstring) {
            out.push_back(DocumentElement{ElementKind::text, strip_string_literal(stmt.children[0].value), 0, 0,
                                          path, {}});
            covered = stmt.end_line;
            continue;
        }
        if (stmt.kind == "FunctionDef" || stmt.kind == "ClassDef") {
            flush_group();
            auto body = join_lines(lines, covered + 1, stmt.end_line);
            out.push_back(DocumentElement{stmt.kind == "FunctionDef" ? ElementKind::function : ElementKind::class_def,
                                          body, 0, 0, path, stmt.value});
            covered = stmt.end_line;
            continue;
        }
        if (group_start < 0) group_start = covered + 1;
        group_end = stmt.end_line;
    }
    if (group_start >= 0) {
        group_end = std::max(group_end, static_cast<int>(lines.size()));
        flush_group();
    }
}

std::string cell_source(const nlohmann::json& cell) {
    const auto& src = cell.at("source");
    if (src.is_string()) return src.get<std::string>();
    std::string joined;
    for (const auto& part : src) joined += part.get<std::string>();
    return joined;
}

void parse_notebook(const std::string& raw, const std::string& path, std::vector<DocumentElement>& out) {
    nlohmann::json nb;
    try {
        nb = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw ParseFailure(path, e.what());
    }
    if (!nb.is_object() || !nb.contains("cells") || !nb["cells"].is_array()) {
        throw ParseFailure(path, "notebook has no cell array");
    }
    for (const auto& cell : nb["cells"]) {
        if (!cell.is_object() || !cell.contains("cell_type") || !cell.contains("source")) {
            throw ParseFailure(path, "cell without cell_type/source");
        }
        std::string type = cell["cell_type"].get<std::string>();
        std::string src;
        try {
            src = cell_source(cell);
        } catch (const nlohmann::json::exception& e) {
            throw ParseFailure(path, e.what());
        }
        if (type == "markdown") {
            parse_markdown(src, path, out);
        } else if (type == "code") {
            auto body = text::trim(src);
            if (!body.empty()) out.push_back(DocumentElement{ElementKind::code_block, body, 0, 0, path, {}});
        } else if (!text::trim(src).empty()) {
            out.push_back(DocumentElement{ElementKind::text, text::trim(src), 0, 0, path, {}});
        }
    }
}

std::string stem_title(const std::string& path) { return fs::path(path).stem().string(); }

// A heading section or a code unit before size normalisation.
struct Unit {
    std::string title;
    ChunkKind kind = ChunkKind::doc_section;
    std::vector<std::string> pieces;

    std::string content() const { return text::join(pieces, "\n\n"); }
    std::size_t length() const { return content().size(); }
};

std::string render(const DocumentElement& e, ChunkKind kind) {
    if (e.kind == ElementKind::code_block && kind == ChunkKind::doc_section) return "```\n" + e.content + "\n```";
    return e.content;
}

void absorb(Unit& into, const Unit& next) {
    if (next.kind == ChunkKind::doc_section && !next.title.empty()) {
        // Render the absorbed heading so its text survives the merge.
        into.pieces.push_back("## " + next.title);
    }
    for (const auto& p : next.pieces) into.pieces.push_back(p);
}

KnowledgeChunk make_chunk(const Unit& u, const std::string& path, std::size_t ordinal) {
    KnowledgeChunk c;
    c.content = u.content();
    c.title = u.title;
    c.char_length = c.content.size();
    c.word_count = text::count_words(c.content);
    c.summary = text::first_sentence(c.content, 200);
    c.source_path = path;
    c.kind = u.kind;
    c.directory_category = directory_category(path);
    c.chunk_id = path + "#" + std::to_string(ordinal) + ":" + text::hex64(text::fnv1a64(c.content), 8);
    return c;
}

enum class BoundaryClass { paragraph = 0, sentence = 1 };

struct Boundary {
    std::size_t pos;
    BoundaryClass cls;
};

std::size_t skip_ws(const std::string& s, std::size_t p) {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
    return p;
}

std::vector<Boundary> doc_boundaries(const std::string& s) {
    std::vector<Boundary> out;
    bool in_fence = false;
    std::size_t line_start = 0;
    while (line_start < s.size()) {
        std::size_t nl = s.find('\n', line_start);
        std::size_t line_end = nl == std::string::npos ? s.size() : nl;
        std::string line = s.substr(line_start, line_end - line_start);
        if (is_fence(line, nullptr)) in_fence = !in_fence;
        if (!in_fence) {
            for (std::size_t i = line_start; i < line_end; ++i) {
                char c = s[i];
                if ((c == '.' || c == '!' || c == '?') && i + 1 < s.size() &&
                    std::isspace(static_cast<unsigned char>(s[i + 1]))) {
                    out.push_back({skip_ws(s, i + 1), BoundaryClass::sentence});
                }
            }
            if (nl != std::string::npos && nl + 1 < s.size() && s[nl + 1] == '\n') {
                out.push_back({skip_ws(s, nl), BoundaryClass::paragraph});
            }
        }
        if (nl == std::string::npos) break;
        line_start = nl + 1;
    }
    return out;
}

std::vector<Boundary> code_boundaries(const std::string& s) {
    std::vector<int> starts;
    try {
        auto mod = py::parse(s);
        for (const auto& stmt : mod.children) starts.push_back(stmt.line);
    } catch (const SyntaxErrorInCode&) {
        std::set<int> interior;
        try {
            interior = py::string_interior_lines(s);
        } catch (const SyntaxErrorInCode&) {
        }
        auto lines = text::split_lines(s);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            int ln = static_cast<int>(i) + 1;
            if (!lines[i].empty() && !std::isspace(static_cast<unsigned char>(lines[i][0])) && !interior.count(ln)) {
                starts.push_back(ln);
            }
        }
    }
    std::vector<Boundary> out;
    std::vector<std::size_t> line_offsets{0};
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\n') line_offsets.push_back(i + 1);
    }
    for (int ln : starts) {
        if (ln >= 1 && static_cast<std::size_t>(ln) <= line_offsets.size()) {
            out.push_back({line_offsets[static_cast<std::size_t>(ln - 1)], BoundaryClass::paragraph});
        }
    }
    return out;
}

std::size_t trimmed_length(const std::string& s, std::size_t a, std::size_t b) {
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return b - a;
}

// Balanced partition of `s` at the given positions: fewest pieces, then the
// smallest squared deviation from equal sizes. Empty when infeasible.
std::vector<std::size_t> balanced_cuts(const std::string& s, std::vector<std::size_t> positions, std::size_t max_len) {
    positions.push_back(0);
    positions.push_back(s.size());
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    const std::size_t n_pos = positions.size();
    const std::size_t total = s.size();
    const std::size_t min_pieces = (total + max_len - 1) / max_len;
    const std::size_t max_pieces = std::max<std::size_t>(min_pieces, total / kMinChunkChars);
    constexpr double kInf = std::numeric_limits<double>::infinity();

    for (std::size_t pieces = std::max<std::size_t>(min_pieces, 2); pieces <= max_pieces; ++pieces) {
        const double target = static_cast<double>(total) / static_cast<double>(pieces);
        // cost[p][i]: best cost covering [0, positions[i]) with p pieces.
        std::vector<std::vector<double>> cost(pieces + 1, std::vector<double>(n_pos, kInf));
        std::vector<std::vector<std::size_t>> back(pieces + 1, std::vector<std::size_t>(n_pos, 0));
        cost[0][0] = 0.0;
        for (std::size_t p = 1; p <= pieces; ++p) {
            for (std::size_t i = 1; i < n_pos; ++i) {
                for (std::size_t a = i; a-- > 0;) {
                    if (positions[i] - positions[a] > max_len + 64) break;
                    if (cost[p - 1][a] == kInf) continue;
                    std::size_t len = trimmed_length(s, positions[a], positions[i]);
                    if (len < kMinChunkChars || len > max_len) continue;
                    double dev = static_cast<double>(len) - target;
                    double c = cost[p - 1][a] + dev * dev;
                    if (c < cost[p][i]) {
                        cost[p][i] = c;
                        back[p][i] = a;
                    }
                }
            }
        }
        if (cost[pieces][n_pos - 1] == kInf) continue;
        std::vector<std::size_t> cuts;
        std::size_t i = n_pos - 1;
        for (std::size_t p = pieces; p > 0; --p) {
            cuts.push_back(positions[i]);
            i = back[p][i];
        }
        cuts.push_back(0);
        std::reverse(cuts.begin(), cuts.end());
        return cuts;
    }
    return {};
}

}  // namespace

std::vector<DocumentElement> parse_document(const SourceDocument& doc) {
    std::vector<DocumentElement> out;
    switch (doc.format) {
        case DocFormat::markdown: parse_markdown(doc.raw, doc.path, out); break;
        case DocFormat::notebook:
            if (text::trim(doc.raw).empty()) break;
            parse_notebook(doc.raw, doc.path, out);
            break;
        case DocFormat::python_source: parse_python(doc.raw, doc.path, out); break;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].order = i;
    return out;
}

std::vector<KnowledgeChunk> split_oversized(const KnowledgeChunk& chunk, std::size_t max_len) {
    if (chunk.content.size() <= max_len) return {chunk};
    const std::string& s = chunk.content;
    auto bounds = chunk.kind == ChunkKind::code_unit ? code_boundaries(s) : doc_boundaries(s);

    std::vector<std::size_t> cuts;
    for (auto allowed : {BoundaryClass::paragraph, BoundaryClass::sentence}) {
        std::vector<std::size_t> positions;
        for (const auto& b : bounds) {
            if (b.cls <= allowed && b.pos > 0 && b.pos < s.size()) positions.push_back(b.pos);
        }
        cuts = balanced_cuts(s, positions, max_len);
        if (!cuts.empty()) break;
    }
    if (cuts.empty()) {
        KnowledgeChunk whole = chunk;
        whole.oversize_warning = true;
        return {whole};
    }
    std::vector<KnowledgeChunk> pieces;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        KnowledgeChunk piece = chunk;
        piece.content = text::trim(std::string_view(s).substr(cuts[k], cuts[k + 1] - cuts[k]));
        piece.char_length = piece.content.size();
        piece.word_count = text::count_words(piece.content);
        piece.summary = text::first_sentence(piece.content, 200);
        if (k == 0) {
            piece.chunk_id = chunk.chunk_id;
        } else {
            piece.chunk_id = chunk.chunk_id + "~" + std::to_string(k);
            piece.parent_id = chunk.chunk_id;
        }
        pieces.push_back(std::move(piece));
    }
    return pieces;
}

std::vector<KnowledgeChunk> build_chunks(const std::vector<DocumentElement>& elements) {
    if (elements.empty()) return {};
    const std::string path = elements.front().source_path;
    const bool code_doc = text::to_lower(fs::path(path).extension().string()) == ".py";

    std::vector<Unit> units;
    auto current = [&]() -> Unit& { return units.back(); };
    for (const auto& e : elements) {
        switch (e.kind) {
            case ElementKind::heading:
                units.push_back(Unit{e.content, ChunkKind::doc_section, {}});
                break;
            case ElementKind::function:
            case ElementKind::class_def:
                units.push_back(Unit{e.symbol, ChunkKind::code_unit, {e.content}});
                break;
            default: {
                ChunkKind kind = code_doc ? ChunkKind::code_unit : ChunkKind::doc_section;
                bool fresh = units.empty() || (code_doc && !current().pieces.empty() &&
                                               units.back().title != stem_title(path));
                if (fresh) units.push_back(Unit{stem_title(path), kind, {}});
                current().pieces.push_back(render(e, current().kind));
                break;
            }
        }
    }

    std::size_t total = 0;
    for (const auto& u : units) total += u.length();

    std::vector<Unit> merged;
    if (total < kMinChunkChars) {
        Unit all = units.front();
        for (std::size_t i = 1; i < units.size(); ++i) absorb(all, units[i]);
        merged.push_back(std::move(all));
    } else {
        std::optional<Unit> buffer;
        for (const auto& u : units) {
            if (!buffer) {
                buffer = u;
            } else if (buffer->length() < kMinChunkChars) {
                absorb(*buffer, u);
            } else {
                merged.push_back(std::move(*buffer));
                buffer = u;
            }
        }
        if (buffer) {
            if (buffer->length() < kMinChunkChars && !merged.empty()) {
                absorb(merged.back(), *buffer);
            } else {
                merged.push_back(std::move(*buffer));
            }
        }
    }

    std::vector<KnowledgeChunk> chunks;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        if (merged[i].pieces.empty() && merged[i].title.empty()) continue;
        auto chunk = make_chunk(merged[i], path, i);
        for (auto& piece : split_oversized(chunk)) chunks.push_back(std::move(piece));
    }
    return chunks;
}

std::string directory_category(const std::string& relative_path) {
    fs::path p(relative_path);
    auto it = p.begin();
    if (it == p.end()) return "root";
    fs::path first = *it;
    if (++it == p.end()) return "root";
    return first.string();
}

std::vector<KnowledgeChunk> ingest_corpus(const std::string& root, std::vector<std::string>* failures) {
    std::vector<std::pair<std::string, std::string>> files;  // disk path, logical path
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        try {
            infer_format(entry.path().string());
        } catch (const UnsupportedFormat&) {
            continue;
        }
        files.emplace_back(entry.path().string(), fs::relative(entry.path(), root).generic_string());
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.second < b.second; });

    std::vector<std::future<std::vector<KnowledgeChunk>>> jobs;
    jobs.reserve(files.size());
    for (const auto& [disk, logical] : files) {
        jobs.push_back(std::async(std::launch::async, [disk = disk, logical = logical]() {
            return build_chunks(parse_document(load_document(disk, logical)));
        }));
    }
    std::vector<KnowledgeChunk> all;
    for (auto& job : jobs) {
        try {
            for (auto& c : job.get()) all.push_back(std::move(c));
        } catch (const ParseFailure& e) {
            if (failures) failures->push_back(e.what());
        }
    }
    return all;
}

void to_json(nlohmann::json& j, const KnowledgeChunk& c) {
    j = nlohmann::json{{"chunk_id", c.chunk_id},
                       {"title", c.title},
                       {"content", c.content},
                       {"char_length", c.char_length},
                       {"word_count", c.word_count},
                       {"summary", c.summary},
                       {"source_path", c.source_path},
                       {"kind", c.kind == ChunkKind::doc_section ? "doc_section" : "code_unit"},
                       {"parent_id", c.parent_id ? nlohmann::json(*c.parent_id) : nlohmann::json(nullptr)},
                       {"directory_category", c.directory_category}};
    if (c.oversize_warning) j["oversize_warning"] = true;
}

void from_json(const nlohmann::json& j, KnowledgeChunk& c) {
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.title = j.at("title").get<std::string>();
    c.content = j.at("content").get<std::string>();
    c.char_length = j.at("char_length").get<std::size_t>();
    c.word_count = j.at("word_count").get<std::size_t>();
    c.summary = j.at("summary").get<std::string>();
    c.source_path = j.at("source_path").get<std::string>();
    c.kind = j.at("kind").get<std::string>() == "code_unit" ? ChunkKind::code_unit : ChunkKind::doc_section;
    if (j.contains("parent_id") && !j["parent_id"].is_null()) c.parent_id = j["parent_id"].get<std::string>();
    c.directory_category = j.at("directory_category").get<std::string>();
    c.oversize_warning = j.value("oversize_warning", false);
}

}  // namespace modernize
