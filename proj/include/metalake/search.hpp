#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "metalake/catalog.hpp"
#include "metalake/descriptor.hpp"
#include "metalake/providers.hpp"

namespace metalake {

enum class IndexKind { SCHEMA_ONLY, CONTENT, DISCRIMINATIVE };

std::string index_kind_name(IndexKind k);  // schema_only | content | discriminative
std::optional<IndexKind> index_kind_from_name(const std::string& s);

struct IndexEntry {
    std::string table_id;
    std::vector<float> vector;
};

struct VectorIndex {
    IndexKind kind = IndexKind::DISCRIMINATIVE;
    uint32_t dims = 0;
    std::vector<IndexEntry> entries;  // sorted by table_id
};

struct SearchSession {
    std::string session_id;
    std::map<std::string, int> seen;  // table_id -> occurrence count
    std::vector<std::string> query_log;
};

struct SearchResult {
    std::string rendered;
    std::vector<std::string> new_ids;
    std::vector<std::string> duplicate_ids;
    bool terminated = false;
};

struct RenderInfo {
    std::string schema_line;  // "col TYPE, col TYPE"
    std::string content_summary;
    std::string indexed_text;
};
using RenderMap = std::map<std::string, RenderInfo>;

struct SearchOptions {
    int k = 10;
    double max_distance = 0.7;
    bool attached = true;  // false renders the indexed description only
};

// Text actually embedded for a table under the given kind. SCHEMA_ONLY is the
// name + column list + 3 rows sampled with the run seed.
std::string index_text(const CatalogStore& c, const TableEntry& entry,
                       const TableDescriptor* descriptor, IndexKind kind, uint64_t seed);

std::string table_schema_line(const TableEntry& entry);

VectorIndex build_index(const CatalogStore& c, const std::vector<TableDescriptor>& descriptors,
                        IndexKind kind, EmbeddingProvider& embedder, uint64_t seed);

RenderMap make_render_map(const CatalogStore& c, const std::vector<TableDescriptor>& descriptors,
                          IndexKind kind, uint64_t seed);

// Session-stateful retrieval with duplicate suppression and the termination
// notice. First sighting renders the full attached block; repeats render the
// occurrence marker line.
SearchResult search(const VectorIndex& index, SearchSession& session, const std::string& query,
                    EmbeddingProvider& embedder, const RenderMap& render,
                    const SearchOptions& options = {});

// Stateless ranked retrieval under the distance threshold (the vector-search
// baseline). rerank re-sorts by exact token overlap with the query.
std::vector<std::pair<std::string, double>> baseline_topk(
    const VectorIndex& index, EmbeddingProvider& embedder, const std::string& query, int k,
    double max_distance = 0.7, bool rerank = false, const RenderMap* render = nullptr);

void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path, IndexKind kind);
std::filesystem::path index_path(const std::filesystem::path& lake_root, IndexKind kind);

extern const char* const kTerminationNotice;

}  // namespace metalake
