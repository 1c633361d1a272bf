#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace modernize {

enum class DocFormat { markdown, notebook, python_source };

struct SourceDocument {
    std::string path;  // relative to the corpus root when ingested from a corpus
    DocFormat format;
    std::string raw;
};

/// Format is inferred from the extension only. Throws UnsupportedFormat.
DocFormat infer_format(const std::string& path);

/// Reads `file_path` from disk; `logical_path` is what ends up in chunk metadata.
SourceDocument load_document(const std::string& file_path, const std::string& logical_path);

enum class ElementKind { heading, text, code_block, function, class_def, table, list, image_ref };

std::string to_string(ElementKind kind);

struct DocumentElement {
    ElementKind kind;
    std::string content;
    int heading_level = 0;  // 1..6 for headings
    std::size_t order = 0;
    std::string source_path;
    std::string symbol;  // function / class name
};

/// Throws UnsupportedFormat (never for a SourceDocument built by load_document)
/// and ParseFailure for a malformed notebook container.
std::vector<DocumentElement> parse_document(const SourceDocument& doc);

enum class ChunkKind { doc_section, code_unit };

struct KnowledgeChunk {
    std::string chunk_id;
    std::string title;
    std::string content;
    std::size_t char_length = 0;
    std::size_t word_count = 0;
    std::string summary;
    std::string source_path;
    ChunkKind kind = ChunkKind::doc_section;
    std::optional<std::string> parent_id;
    std::string directory_category;
    bool oversize_warning = false;  // kept whole: no legal split point
};

inline constexpr std::size_t kMinChunkChars = 500;
inline constexpr std::size_t kMaxChunkChars = 8000;

/// Groups one document's elements into heading sections / code units, merges
/// undersized neighbours and splits oversized results.
std::vector<KnowledgeChunk> build_chunks(const std::vector<DocumentElement>& elements);

/// Splits at blank lines, then sentence ends, and for code only at top-level
/// statement starts. The first piece keeps the original id; the others get
/// "~k" suffixes and point at it through parent_id. A chunk with no legal
/// split is returned whole with oversize_warning set.
std::vector<KnowledgeChunk> split_oversized(const KnowledgeChunk& chunk, std::size_t max_len = kMaxChunkChars);

/// First path segment under the corpus root ("root" for top-level files).
std::string directory_category(const std::string& relative_path);

/// Ingests every .md / .ipynb / .py file under `root` (sorted by path, parsed
/// in parallel). Files that fail with ParseFailure are left out and their
/// messages appended to `failures` when given.
std::vector<KnowledgeChunk> ingest_corpus(const std::string& root, std::vector<std::string>* failures = nullptr);

void to_json(nlohmann::json& j, const KnowledgeChunk& c);
void from_json(const nlohmann::json& j, KnowledgeChunk& c);

}  // namespace modernize
