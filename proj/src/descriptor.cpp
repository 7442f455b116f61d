#include "metalake/descriptor.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

ProfileMap index_profiles(const std::vector<TableProfile>& profiles) {
    ProfileMap out;
    for (const auto& p : profiles) out[p.table_id] = p;
    return out;
}

namespace {

std::string parent_dir_token(const TableEntry& e) {
    std::string parent = std::filesystem::path(e.source_path).parent_path().generic_string();
    if (parent.empty()) return "root";
    for (char& ch : parent) {
        if (ch == '/') ch = '.';
    }
    return parent;
}

std::string schema_key(const TableEntry& e) {
    std::vector<std::string> names;
    for (const auto& c : e.columns) names.push_back(c.name);
    std::sort(names.begin(), names.end());
    return join(names, "|");
}

std::string hex8(uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(8, '0');
    for (int i = 7; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string schema_line(const TableEntry& e) {
    std::vector<std::string> parts;
    for (const auto& c : e.columns) parts.push_back(c.name + " " + column_type_name(c.declared_type));
    return join(parts, ", ");
}

// Up to three one-line facts per table for the stage-one prompt.
std::vector<std::string> headline_facts(const TableProfile& p) {
    std::vector<std::string> facts;
    for (const auto& c : p.columns) {
        if (facts.size() >= 3) break;
        if (c.min_text && c.max_text) {
            facts.push_back(c.column + " spans " + *c.min_text + " to " + *c.max_text);
        } else if (!c.top_k.empty()) {
            facts.push_back(c.column + " mostly " + c.top_k.front().first);
        }
    }
    return facts;
}

std::string stage1_prompt(const TableGroup& group, const CatalogStore& c,
                          const ProfileMap& profiles) {
    std::ostringstream out;
    out << "These tables share a schema. State their shared context and what distinguishes "
           "each one (dates, regions, categories).\n"
        << "Reply with JSON only: {\"shared\": \"...\", \"per_table\": {\"<table_id>\": "
           "[\"fact\", ...]}}. Cover every table.\n\n";
    for (const auto& id : group.members) {
        const TableEntry& e = c.get(id);
        out << "```\nTable: " << id << "\nColumns: " << schema_line(e) << "\n";
        auto it = profiles.find(id);
        if (it != profiles.end()) {
            auto facts = headline_facts(it->second);
            if (!facts.empty()) out << "Facts: " << join(facts, "; ") << "\n";
        }
        out << "```\n";
    }
    return out.str();
}

bool parse_stage1_response(const std::string& text, const TableGroup& group, GroupFacts* out) {
    auto start = text.find('{');
    auto end = text.rfind('}');
    if (start == std::string::npos || end == std::string::npos || end < start) return false;
    json j = json::parse(text.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    if (!j.contains("shared") || !j["shared"].is_string()) return false;
    if (!j.contains("per_table") || !j["per_table"].is_object()) return false;

    GroupFacts facts;
    facts.shared_context = trim(j["shared"].get<std::string>());
    for (const auto& id : group.members) {
        if (!j["per_table"].contains(id)) return false;
        const json& fj = j["per_table"][id];
        if (!fj.is_array()) return false;
        std::vector<std::string> member_facts;
        for (const auto& f : fj) {
            if (!f.is_string()) return false;
            member_facts.push_back(f.get<std::string>());
        }
        facts.per_table[id] = std::move(member_facts);
    }
    facts.source = DescriptorSource::LLM;
    *out = std::move(facts);
    return true;
}

std::string common_name_prefix(const std::vector<std::string>& names) {
    if (names.empty()) return "";
    std::string prefix = names.front();
    for (const auto& n : names) {
        size_t i = 0;
        while (i < prefix.size() && i < n.size() && prefix[i] == n[i]) ++i;
        prefix.resize(i);
    }
    return prefix;
}

GroupFacts template_group_facts(const TableGroup& group, const CatalogStore& c,
                                const ProfileMap& profiles) {
    GroupFacts facts;
    facts.source = DescriptorSource::TEMPLATE;

    std::vector<std::string> names;
    for (const auto& id : group.members) names.push_back(c.get(id).name);
    std::string stem = trim(common_name_prefix(names));

    std::ostringstream shared;
    shared << "One of several similar tables";
    if (stem.size() >= 3) shared << " named like " << stem;
    if (!group.shared_variables.empty()) {
        shared << " sharing columns " << join(group.shared_variables, ", ");
    }
    shared << ".";
    facts.shared_context = shared.str();

    // Column extremes that differ across members distinguish each member.
    std::set<std::string> differing_columns;
    for (const auto& col : group.shared_variables) {
        std::set<std::pair<std::string, std::string>> extremes;
        for (const auto& id : group.members) {
            auto it = profiles.find(id);
            if (it == profiles.end()) continue;
            for (const auto& cp : it->second.columns) {
                if (cp.column != col) continue;
                extremes.insert({cp.min_text.value_or(""), cp.max_text.value_or("")});
            }
        }
        if (extremes.size() > 1) differing_columns.insert(col);
    }

    // Name tokens not common to all members.
    std::set<std::string> common_tokens;
    bool first = true;
    for (const auto& name : names) {
        auto toks = tokenize(name);
        std::set<std::string> tok_set(toks.begin(), toks.end());
        if (first) {
            common_tokens = tok_set;
            first = false;
        } else {
            std::set<std::string> kept;
            std::set_intersection(common_tokens.begin(), common_tokens.end(), tok_set.begin(),
                                  tok_set.end(), std::inserter(kept, kept.begin()));
            common_tokens = std::move(kept);
        }
    }

    for (const auto& id : group.members) {
        std::vector<std::string> member_facts;
        auto it = profiles.find(id);
        for (const auto& col : differing_columns) {
            if (it == profiles.end()) break;
            for (const auto& cp : it->second.columns) {
                if (cp.column != col || !cp.min_text || !cp.max_text) continue;
                member_facts.push_back(col + " from " + *cp.min_text + " to " + *cp.max_text);
            }
        }
        for (const auto& tok : tokenize(c.get(id).name)) {
            if (!common_tokens.count(tok)) member_facts.push_back(tok);
        }
        facts.per_table[id] = std::move(member_facts);
    }
    return facts;
}

}  // namespace

std::vector<TableGroup> group_tables(const CatalogStore& c,
                                     const std::vector<TableProfile>&) {
    std::map<std::string, TableGroup> groups;
    for (const auto& [id, entry] : c.entries) {
        std::string parent = parent_dir_token(entry);
        std::string gid = parent + "#" + hex8(fnv1a64(parent + "\n" + schema_key(entry)));
        auto& g = groups[gid];
        if (g.group_id.empty()) {
            g.group_id = gid;
            std::set<std::string> names;
            for (const auto& col : entry.columns) names.insert(col.name);
            g.shared_variables.assign(names.begin(), names.end());
        }
        g.members.push_back(id);
    }
    std::vector<TableGroup> out;
    out.reserve(groups.size());
    for (auto& [gid, g] : groups) {
        std::sort(g.members.begin(), g.members.end());
        out.push_back(std::move(g));
    }
    return out;
}

GroupFacts stage1_group_facts(const TableGroup& group, const CatalogStore& c,
                              const ProfileMap& profiles, GenerationProvider* gen,
                              const DescriptorOptions& options) {
    if (gen && options.llm_discriminative) {
        std::string prompt = stage1_prompt(group, c, profiles);
        try {
            GroupFacts facts;
            std::string reply = gen->generate({prompt, options.max_output_tokens, 0.0});
            if (parse_stage1_response(reply, group, &facts)) return facts;
            std::string again = prompt +
                                "\nYour previous reply was not the required JSON object "
                                "covering every table. Reply with JSON only.";
            reply = gen->generate({again, options.max_output_tokens, 0.0});
            if (parse_stage1_response(reply, group, &facts)) return facts;
        } catch (const ProviderUnavailable&) {
            // fall through to the template
        }
    }
    return template_group_facts(group, c, profiles);
}

std::string render_discriminative(const GroupFacts& facts, const std::string& table_id) {
    std::ostringstream out;
    out << "Table " << table_id << ": " << facts.shared_context;
    auto it = facts.per_table.find(table_id);
    if (it != facts.per_table.end() && !it->second.empty()) {
        out << " Specifically: " << join(it->second, "; ") << ".";
    }
    return out.str();
}

namespace {

std::string nullable_tag(bool nullable) { return nullable ? "NULLABLE" : "REQUIRED"; }

std::string column_block(const ColumnSpec& spec, const ColumnProfile& p, int64_t row_count) {
    std::ostringstream out;
    out << "- " << spec.name << ": " << column_type_name(spec.declared_type) << " ("
        << nullable_tag(spec.nullable) << ") — ";
    if (row_count == 0) {
        out << "no rows";
        return out.str();
    }
    if (p.distinct_count == 0) {
        out << "all values null; null ratio " << format_stat(p.null_ratio);
        return out.str();
    }
    if (p.min_text && p.max_text) {
        out << "values ranging from " << *p.min_text << " to " << *p.max_text;
        if (p.mean) out << ", and an average of " << format_stat(*p.mean);
        out << "; ";
    }
    if (p.median) out << "median " << format_stat(*p.median) << "; ";
    out << "null ratio " << format_stat(p.null_ratio) << "; " << p.distinct_count
        << " distinct values";
    if (!p.top_k.empty()) {
        out << "; top values: ";
        size_t shown = std::min<size_t>(3, p.top_k.size());
        for (size_t i = 0; i < shown; ++i) {
            if (i) out << ", ";
            out << p.top_k[i].first << " (x" << p.top_k[i].second << ")";
        }
    }
    return out.str();
}

std::string template_purpose(const TableEntry& entry) {
    std::ostringstream out;
    if (entry.row_count == 0) {
        out << "Table " << entry.name << " is empty (0 rows).";
        return out.str();
    }
    std::vector<std::string> cols;
    for (const auto& c : entry.columns) cols.push_back(c.name);
    out << "Table " << entry.name << " holds " << entry.row_count << " rows with columns "
        << join(cols, ", ") << ".";
    return out.str();
}

std::string content_prompt(const TableEntry& entry, const TableProfile& profile) {
    std::ostringstream out;
    out << "Write one short paragraph describing the purpose of this table. "
           "Mention only facts given below.\n"
        << "Table: " << entry.name << "\nColumns: " << schema_line(entry) << "\nRows: "
        << entry.row_count << "\n";
    auto facts = headline_facts(profile);
    if (!facts.empty()) out << "Facts: " << join(facts, "; ") << "\n";
    return out.str();
}

}  // namespace

std::string build_content_summary(const TableEntry& entry, const TableProfile& profile,
                                  GenerationProvider* gen, const DescriptorOptions& options,
                                  DescriptorSource* source_out) {
    std::string paragraph;
    if (gen && options.llm_content) {
        try {
            paragraph = trim(gen->generate({content_prompt(entry, profile),
                                            options.max_output_tokens, 0.0}));
        } catch (const ProviderUnavailable&) {
            paragraph.clear();
        }
    }
    if (source_out) {
        *source_out = paragraph.empty() ? DescriptorSource::TEMPLATE : DescriptorSource::LLM;
    }
    if (paragraph.empty()) paragraph = template_purpose(entry);

    std::ostringstream out;
    if (entry.user_description) out << *entry.user_description << "\n";
    out << paragraph;
    for (size_t i = 0; i < entry.columns.size(); ++i) {
        out << "\n" << column_block(entry.columns[i], profile.columns[i], profile.row_count);
    }
    return out.str();
}

std::vector<TableDescriptor> build_descriptors(const CatalogStore& c,
                                               const std::vector<TableProfile>& profiles,
                                               GenerationProvider* gen,
                                               const DescriptorOptions& options) {
    ProfileMap pmap = index_profiles(profiles);
    auto groups = group_tables(c, profiles);

    std::map<std::string, TableDescriptor> by_id;
    for (const auto& [id, entry] : c.entries) {
        auto it = pmap.find(id);
        if (it == pmap.end()) throw MissingStage("profile for " + id);
        TableDescriptor d;
        d.table_id = id;
        d.content_summary = build_content_summary(entry, it->second, gen, options, &d.source);
        by_id[id] = std::move(d);
    }

    for (const auto& g : groups) {
        if (g.members.size() == 1) {
            auto& d = by_id[g.members.front()];
            d.group_id = g.group_id;
            d.discriminative_description = d.content_summary;
            continue;
        }
        GroupFacts facts = stage1_group_facts(g, c, pmap, gen, options);
        for (const auto& id : g.members) {
            auto& d = by_id[id];
            d.group_id = g.group_id;
            d.discriminative_description = render_discriminative(facts, id);
            if (facts.source == DescriptorSource::LLM) d.source = DescriptorSource::LLM;
        }
    }

    std::vector<TableDescriptor> out;
    out.reserve(by_id.size());
    for (auto& [id, d] : by_id) out.push_back(std::move(d));
    return out;
}

namespace {

std::string source_name(DescriptorSource s) {
    return s == DescriptorSource::LLM ? "LLM" : "TEMPLATE";
}

}  // namespace

std::filesystem::path descriptors_path(const std::filesystem::path& lake_root) {
    return metalake_dir(lake_root) / "descriptors.jsonl";
}

void save_descriptors(const std::vector<TableDescriptor>& d, const std::filesystem::path& path) {
    std::string out;
    out += json{{"format", "metalake-descriptors"}, {"version", 1}}.dump();
    out += '\n';
    for (const auto& desc : d) {
        json j = {{"table_id", desc.table_id},
                  {"content_summary", desc.content_summary},
                  {"discriminative_description", desc.discriminative_description},
                  {"group_id", desc.group_id},
                  {"source", source_name(desc.source)}};
        out += j.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<TableDescriptor> load_descriptors(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const UnreadableFile& e) {
        throw CorruptCatalog(e.what());
    }
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw CorruptCatalog("missing header in " + path.string());
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "metalake-descriptors" ||
        header.value("version", 0) != 1) {
        throw CorruptCatalog("bad header in " + path.string());
    }
    std::vector<TableDescriptor> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw CorruptCatalog("bad descriptor line in " + path.string());
        TableDescriptor d;
        d.table_id = j.at("table_id").get<std::string>();
        d.content_summary = j.at("content_summary").get<std::string>();
        d.discriminative_description = j.at("discriminative_description").get<std::string>();
        d.group_id = j.at("group_id").get<std::string>();
        d.source = j.at("source").get<std::string>() == "LLM" ? DescriptorSource::LLM
                                                              : DescriptorSource::TEMPLATE;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace metalake
