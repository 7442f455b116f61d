#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metalake/catalog.hpp"
#include "metalake/providers.hpp"
#include "metalake/search.hpp"

namespace metalake {

struct ConstraintSet {
    std::vector<std::string> entities;
    std::vector<std::string> measures;
    std::optional<std::string> temporal_scope;
    std::optional<std::string> granularity;
    std::vector<std::pair<std::string, std::string>> value_constraints;

    bool operator==(const ConstraintSet&) const = default;
};

struct SearchAction {
    std::string query;
};

struct ToolAction {
    std::string name;  // column_profiler | data_finder | joinability_check
    std::map<std::string, std::string> args;
};

struct FinalizeAction {
    std::vector<std::string> tables;
    std::string justification;
};

using AgentAction = std::variant<SearchAction, ToolAction, FinalizeAction>;

enum class TerminatedBy { FINALIZE, STEP_BUDGET, POLICY_ERROR };
std::string terminated_by_name(TerminatedBy t);

struct TranscriptStep {
    std::string action;
    std::string observation;
};

struct SelectionResult {
    std::vector<std::string> tables;  // sorted, deduplicated
    std::string justification;
    int steps = 0;
    std::vector<TranscriptStep> transcript;
    TerminatedBy terminated_by = TerminatedBy::POLICY_ERROR;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string next(const std::string& state_prompt) = 0;
};

// Replays a fixed action list. With loop_last the final action repeats
// forever, which lets tests drive a session into the step budget.
class ScriptedPolicy : public Policy {
public:
    explicit ScriptedPolicy(std::vector<std::string> actions, bool loop_last = false)
        : actions_(std::move(actions)), loop_last_(loop_last) {}
    std::string next(const std::string& state_prompt) override;

private:
    std::vector<std::string> actions_;
    size_t pos_ = 0;
    bool loop_last_ = false;
};

class LlmPolicy : public Policy {
public:
    explicit LlmPolicy(GenerationProvider* gen, int max_output_tokens = 512)
        : gen_(gen), max_output_tokens_(max_output_tokens) {}
    std::string next(const std::string& state_prompt) override;

private:
    GenerationProvider* gen_;
    int max_output_tokens_;
};

struct AgentEnv {
    const CatalogStore* catalog = nullptr;
    const VectorIndex* index = nullptr;
    EmbeddingProvider* embedder = nullptr;
    const RenderMap* render = nullptr;
    GenerationProvider* gen = nullptr;  // may be null; decompose then uses rules
    bool tools_enabled = true;
    bool attached = true;
    int k = 10;
    double max_distance = 0.7;
    bool post_filter = false;  // drop finalized tables absent from the justification
};

struct SessionOptions {
    int budget = 30;
    std::optional<ConstraintSet> constraints;  // skip decompose when provided
};

// Provider-backed extraction with a deterministic rule fallback
// (capitalized-token entities, quoted literals, 4-digit years).
ConstraintSet decompose(const std::string& task, GenerationProvider* gen);
ConstraintSet decompose_rules(const std::string& task);

// Line-oriented grammar; the first line starting with "ACTION " wins.
AgentAction parse_action(const std::string& policy_output);

std::string render_constraints(const ConstraintSet& c);
std::string build_state_prompt(const std::string& task, const ConstraintSet& constraints,
                               const std::vector<std::string>& observations, int remaining_budget,
                               const AgentEnv& env);

SelectionResult run_session(const std::string& task, const AgentEnv& env, Policy& policy,
                            const SessionOptions& options = {});

std::string selection_to_json(const SelectionResult& r);

}  // namespace metalake
