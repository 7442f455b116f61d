#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "metalake/catalog.hpp"
#include "metalake/profiler.hpp"
#include "metalake/providers.hpp"

namespace metalake {

enum class DescriptorSource { LLM, TEMPLATE };

struct TableDescriptor {
    std::string table_id;
    std::string content_summary;
    std::string discriminative_description;
    std::string group_id;
    DescriptorSource source = DescriptorSource::TEMPLATE;

    bool operator==(const TableDescriptor&) const = default;
};

struct TableGroup {
    std::string group_id;
    std::vector<std::string> members;  // sorted table_ids
    std::vector<std::string> shared_variables;
    std::map<std::string, std::vector<std::string>> distinguishing_variables;
};

// Stage-one output: what the group shares, and per-member distinguishing facts.
struct GroupFacts {
    std::string shared_context;
    std::map<std::string, std::vector<std::string>> per_table;
    DescriptorSource source = DescriptorSource::TEMPLATE;
};

struct DescriptorOptions {
    bool llm_content = true;         // use the provider for content paragraphs
    bool llm_discriminative = true;  // use the provider for stage one
    int max_output_tokens = 512;
};

using ProfileMap = std::map<std::string, TableProfile>;

ProfileMap index_profiles(const std::vector<TableProfile>& profiles);

// Same parent directory + identical sanitized column-name multiset.
// Groups and members sorted by id; every table lands in exactly one group.
std::vector<TableGroup> group_tables(const CatalogStore& c,
                                     const std::vector<TableProfile>& profiles);

// One provider call per group; malformed reply triggers one reprompt, then the
// deterministic template. gen == nullptr goes straight to the template.
GroupFacts stage1_group_facts(const TableGroup& group, const CatalogStore& c,
                              const ProfileMap& profiles, GenerationProvider* gen,
                              const DescriptorOptions& options = {});

// Stage two: pure rendering; every stage-one fact appears verbatim.
std::string render_discriminative(const GroupFacts& facts, const std::string& table_id);

std::string build_content_summary(const TableEntry& entry, const TableProfile& profile,
                                  GenerationProvider* gen, const DescriptorOptions& options = {},
                                  DescriptorSource* source_out = nullptr);

std::vector<TableDescriptor> build_descriptors(const CatalogStore& c,
                                               const std::vector<TableProfile>& profiles,
                                               GenerationProvider* gen,
                                               const DescriptorOptions& options = {});

void save_descriptors(const std::vector<TableDescriptor>& d, const std::filesystem::path& path);
std::vector<TableDescriptor> load_descriptors(const std::filesystem::path& path);
std::filesystem::path descriptors_path(const std::filesystem::path& lake_root);

}  // namespace metalake
