#include "metalake/search.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "metalake/csv.hpp"
#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

const char* const kTerminationNotice = "NO NEW TABLES — revise your search strategy.";

std::string index_kind_name(IndexKind k) {
    switch (k) {
        case IndexKind::SCHEMA_ONLY: return "schema_only";
        case IndexKind::CONTENT: return "content";
        case IndexKind::DISCRIMINATIVE: return "discriminative";
    }
    return "discriminative";
}

std::optional<IndexKind> index_kind_from_name(const std::string& s) {
    if (s == "schema_only") return IndexKind::SCHEMA_ONLY;
    if (s == "content") return IndexKind::CONTENT;
    if (s == "discriminative") return IndexKind::DISCRIMINATIVE;
    return std::nullopt;
}

std::string table_schema_line(const TableEntry& entry) {
    std::vector<std::string> parts;
    for (const auto& c : entry.columns) parts.push_back(c.name + " " + column_type_name(c.declared_type));
    return join(parts, ", ");
}

namespace {

std::string schema_only_text(const CatalogStore& c, const TableEntry& entry, uint64_t seed) {
    std::ostringstream out;
    out << entry.name << "\ncolumns: ";
    std::vector<std::string> names;
    for (const auto& col : entry.columns) names.push_back(col.name);
    out << join(names, ", ");

    CsvTable data = read_csv_file(table_file(c, entry));
    Rng rng(derive_seed(seed, "schema_sample", entry.table_id));
    auto picks = rng.sample_indices(data.rows.size(), 3);
    for (size_t idx : picks) {
        out << "\nrow: " << join(data.rows[idx], ", ");
    }
    return out.str();
}

}  // namespace

std::string index_text(const CatalogStore& c, const TableEntry& entry,
                       const TableDescriptor* descriptor, IndexKind kind, uint64_t seed) {
    switch (kind) {
        case IndexKind::SCHEMA_ONLY:
            return schema_only_text(c, entry, seed);
        case IndexKind::CONTENT:
            if (!descriptor) throw MissingStage("descriptor for " + entry.table_id);
            return descriptor->content_summary;
        case IndexKind::DISCRIMINATIVE:
            if (!descriptor) throw MissingStage("descriptor for " + entry.table_id);
            return descriptor->discriminative_description;
    }
    throw MissingStage("descriptor for " + entry.table_id);
}

namespace {

std::map<std::string, const TableDescriptor*> descriptor_map(
    const std::vector<TableDescriptor>& descriptors) {
    std::map<std::string, const TableDescriptor*> out;
    for (const auto& d : descriptors) out[d.table_id] = &d;
    return out;
}

}  // namespace

VectorIndex build_index(const CatalogStore& c, const std::vector<TableDescriptor>& descriptors,
                        IndexKind kind, EmbeddingProvider& embedder, uint64_t seed) {
    auto dmap = descriptor_map(descriptors);
    VectorIndex index;
    index.kind = kind;
    for (const auto& [id, entry] : c.entries) {
        const TableDescriptor* d = dmap.count(id) ? dmap[id] : nullptr;
        std::string text = index_text(c, entry, d, kind, seed);
        std::vector<float> v = embedder.embed(text);
        if (index.dims == 0) index.dims = static_cast<uint32_t>(v.size());
        if (v.size() != index.dims) {
            throw DimensionMismatch(std::to_string(v.size()) + " vs " + std::to_string(index.dims));
        }
        index.entries.push_back({id, std::move(v)});
    }
    return index;
}

RenderMap make_render_map(const CatalogStore& c, const std::vector<TableDescriptor>& descriptors,
                          IndexKind kind, uint64_t seed) {
    auto dmap = descriptor_map(descriptors);
    RenderMap out;
    for (const auto& [id, entry] : c.entries) {
        const TableDescriptor* d = dmap.count(id) ? dmap[id] : nullptr;
        RenderInfo info;
        info.schema_line = table_schema_line(entry);
        if (d) info.content_summary = d->content_summary;
        info.indexed_text = index_text(c, entry, d, kind, seed);
        out[id] = std::move(info);
    }
    return out;
}

namespace {

std::vector<std::pair<std::string, double>> ranked_candidates(const VectorIndex& index,
                                                              const std::vector<float>& qv,
                                                              double max_distance) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : index.entries) {
        double d = cosine_distance(qv, e.vector);
        if (d <= max_distance) out.emplace_back(e.table_id, d);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });
    return out;
}

std::vector<float> embed_query(EmbeddingProvider& embedder, const std::string& query) {
    if (trim(query).empty()) throw EmptyQuery("search query empty");
    try {
        return embedder.embed(query);
    } catch (const EmptyText&) {
        throw EmptyQuery("search query has no tokens");
    }
}

}  // namespace

SearchResult search(const VectorIndex& index, SearchSession& session, const std::string& query,
                    EmbeddingProvider& embedder, const RenderMap& render,
                    const SearchOptions& options) {
    if (options.k < 1) throw BadArgs("k must be >= 1");
    if (options.max_distance < 0.0 || options.max_distance > 2.0) {
        throw BadArgs("max_distance must be in [0, 2]");
    }
    std::vector<float> qv = embed_query(embedder, query);
    session.query_log.push_back(query);

    auto candidates = ranked_candidates(index, qv, options.max_distance);
    if (candidates.size() > static_cast<size_t>(options.k)) {
        candidates.resize(static_cast<size_t>(options.k));
    }

    SearchResult result;
    std::vector<std::string> blocks;
    for (const auto& [id, dist] : candidates) {
        int count = ++session.seen[id];
        if (count == 1) {
            result.new_ids.push_back(id);
            auto it = render.find(id);
            std::ostringstream block;
            block << "Table ID: " << id;
            if (it != render.end()) {
                if (options.attached) {
                    block << "\nSchema: " << it->second.schema_line;
                    if (!it->second.content_summary.empty()) {
                        block << "\n" << it->second.content_summary;
                    }
                } else {
                    block << "\n" << it->second.indexed_text;
                }
            }
            blocks.push_back(block.str());
        } else {
            result.duplicate_ids.push_back(id);
            blocks.push_back("Table ID: " + id + " (Appeared " + std::to_string(count) + " times)");
        }
    }

    if (!candidates.empty() && result.new_ids.empty()) {
        result.terminated = true;
        blocks.push_back(kTerminationNotice);
    }
    result.rendered = join(blocks, "\n\n");
    return result;
}

std::vector<std::pair<std::string, double>> baseline_topk(
    const VectorIndex& index, EmbeddingProvider& embedder, const std::string& query, int k,
    double max_distance, bool rerank, const RenderMap* render) {
    if (k < 1) throw BadArgs("k must be >= 1");
    std::vector<float> qv = embed_query(embedder, query);
    auto candidates = ranked_candidates(index, qv, max_distance);

    if (rerank && render) {
        auto qtoks = tokenize(query);
        std::set<std::string> qset(qtoks.begin(), qtoks.end());
        auto overlap = [&](const std::string& id) {
            auto it = render->find(id);
            if (it == render->end()) return size_t{0};
            size_t n = 0;
            auto toks = tokenize(it->second.indexed_text);
            std::set<std::string> seen;
            for (const auto& t : toks) {
                if (qset.count(t) && seen.insert(t).second) ++n;
            }
            return n;
        };
        std::vector<std::tuple<size_t, double, std::string>> scored;
        for (const auto& [id, dist] : candidates) scored.emplace_back(overlap(id), dist, id);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
            return std::get<2>(a) < std::get<2>(b);
        });
        candidates.clear();
        for (const auto& [ov, dist, id] : scored) candidates.emplace_back(id, dist);
    }

    if (candidates.size() > static_cast<size_t>(k)) candidates.resize(static_cast<size_t>(k));
    return candidates;
}

namespace {

template <typename T>
void write_raw(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T read_raw(const std::string& data, size_t& pos, const std::string& origin) {
    if (pos + sizeof(T) > data.size()) throw CorruptIndex("truncated index " + origin);
    T value;
    std::memcpy(&value, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    std::string out;
    out += "MLIX";
    write_raw<uint32_t>(out, 1);
    write_raw<uint32_t>(out, index.dims);
    write_raw<uint64_t>(out, index.entries.size());
    for (const auto& e : index.entries) {
        if (e.table_id.size() > 0xFFFF) throw CorruptIndex("table id too long: " + e.table_id);
        write_raw<uint16_t>(out, static_cast<uint16_t>(e.table_id.size()));
        out += e.table_id;
        for (float f : e.vector) write_raw<float>(out, f);
    }
    write_text_file(path, out);
}

VectorIndex load_index(const std::filesystem::path& path, IndexKind kind) {
    std::string data;
    try {
        data = read_text_file(path);
    } catch (const UnreadableFile& e) {
        throw CorruptIndex(e.what());
    }
    size_t pos = 0;
    if (data.size() < 4 || data.substr(0, 4) != "MLIX") throw CorruptIndex("bad magic in " + path.string());
    pos = 4;
    uint32_t version = read_raw<uint32_t>(data, pos, path.string());
    if (version != 1) throw CorruptIndex("unsupported version in " + path.string());

    VectorIndex index;
    index.kind = kind;
    index.dims = read_raw<uint32_t>(data, pos, path.string());
    uint64_t count = read_raw<uint64_t>(data, pos, path.string());
    for (uint64_t i = 0; i < count; ++i) {
        uint16_t len = read_raw<uint16_t>(data, pos, path.string());
        if (pos + len > data.size()) throw CorruptIndex("truncated index " + path.string());
        IndexEntry e;
        e.table_id = data.substr(pos, len);
        pos += len;
        e.vector.resize(index.dims);
        for (uint32_t d = 0; d < index.dims; ++d) {
            e.vector[d] = read_raw<float>(data, pos, path.string());
        }
        index.entries.push_back(std::move(e));
    }
    if (pos != data.size()) throw CorruptIndex("trailing bytes in " + path.string());
    return index;
}

std::filesystem::path index_path(const std::filesystem::path& lake_root, IndexKind kind) {
    return metalake_dir(lake_root) / ("index-" + index_kind_name(kind) + ".bin");
}

}  // namespace metalake
