#include "metalake/agent.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/tools.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

std::string terminated_by_name(TerminatedBy t) {
    switch (t) {
        case TerminatedBy::FINALIZE: return "FINALIZE";
        case TerminatedBy::STEP_BUDGET: return "STEP_BUDGET";
        case TerminatedBy::POLICY_ERROR: return "POLICY_ERROR";
    }
    return "POLICY_ERROR";
}

std::string ScriptedPolicy::next(const std::string&) {
    if (pos_ < actions_.size()) return actions_[pos_++];
    if (loop_last_ && !actions_.empty()) return actions_.back();
    throw ScriptExhausted("scripted policy has no action " + std::to_string(pos_ + 1));
}

std::string LlmPolicy::next(const std::string& state_prompt) {
    if (!gen_) throw ProviderUnavailable("no generation provider configured for llm policy");
    return gen_->generate({state_prompt, max_output_tokens_, 0.0});
}

// ---------------------------------------------------------------- decompose

namespace {

const std::set<std::string>& question_words() {
    static const std::set<std::string> words = {"How",  "What",  "Which", "Where", "When",
                                                "Who",  "List",  "Find",  "Show",  "Give",
                                                "Count", "Is",   "Are",   "Does"};
    return words;
}

const std::set<std::string>& stop_words() {
    static const std::set<std::string> words = {
        "the", "a",  "an", "of", "in", "on", "for", "to", "and", "or", "by",
        "with", "is", "are", "was", "were", "how", "many", "much", "per", "from"};
    return words;
}

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '_') {
            cur.push_back(ch);
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool is_year(const std::string& w) {
    if (w.size() != 4) return false;
    for (char c : w) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    int y = std::stoi(w);
    return y >= 1900 && y <= 2099;
}

bool starts_upper(const std::string& w) {
    return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

ConstraintSet decompose_rules(const std::string& task) {
    ConstraintSet cs;
    auto words = words_of(task);

    // Runs of capitalized words form entities; a leading question word is not
    // evidence of a name.
    size_t i = 0;
    bool first_word = true;
    while (i < words.size()) {
        bool skip_leading = first_word && question_words().count(words[i]) > 0;
        first_word = false;
        if (!skip_leading && starts_upper(words[i]) && !is_year(words[i])) {
            std::string entity = words[i];
            size_t j = i + 1;
            while (j < words.size() && starts_upper(words[j]) && !is_year(words[j])) {
                entity += " " + words[j];
                ++j;
            }
            add_unique(cs.entities, entity);
            i = j;
            continue;
        }
        ++i;
    }

    static const std::set<std::string> measure_words = {
        "count", "total", "number", "average", "sum", "percentage", "percent",
        "population", "reports", "amount", "share", "ratio"};
    std::vector<std::string> years;
    for (const auto& w : words) {
        std::string lw = to_lower(w);
        if (lw == "rows") add_unique(cs.measures, "row count");
        if (measure_words.count(lw)) add_unique(cs.measures, lw);
        if (is_year(w)) add_unique(years, w);
        for (const char* g : {"daily", "weekly", "monthly", "quarterly", "annual",
                              "annually", "yearly", "hourly"}) {
            if (lw == g && !cs.granularity) cs.granularity = lw;
        }
    }
    if (!years.empty()) {
        cs.temporal_scope = years.size() == 1 ? years.front() : years.front() + "-" + years.back();
    }

    // Quoted literals are value constraints with an unknown attribute.
    for (char quote : {'\'', '"'}) {
        size_t pos = 0;
        while ((pos = task.find(quote, pos)) != std::string::npos) {
            size_t end = task.find(quote, pos + 1);
            if (end == std::string::npos) break;
            std::string lit = trim(task.substr(pos + 1, end - pos - 1));
            if (!lit.empty()) cs.value_constraints.emplace_back("", lit);
            pos = end + 1;
        }
    }

    if (cs.entities.empty() && cs.measures.empty()) {
        for (const auto& w : words) {
            if (cs.measures.size() >= 3) break;
            if (!stop_words().count(to_lower(w))) add_unique(cs.measures, to_lower(w));
        }
    }
    return cs;
}

namespace {

bool parse_constraints_json(const std::string& text, ConstraintSet* out) {
    auto start = text.find('{');
    auto end = text.rfind('}');
    if (start == std::string::npos || end == std::string::npos || end < start) return false;
    json j = json::parse(text.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    ConstraintSet cs;
    try {
        if (j.contains("entities")) cs.entities = j["entities"].get<std::vector<std::string>>();
        if (j.contains("measures")) cs.measures = j["measures"].get<std::vector<std::string>>();
        if (j.contains("temporal_scope") && j["temporal_scope"].is_string()) {
            std::string t = j["temporal_scope"].get<std::string>();
            if (!t.empty()) cs.temporal_scope = t;
        }
        if (j.contains("granularity") && j["granularity"].is_string()) {
            std::string g = j["granularity"].get<std::string>();
            if (!g.empty()) cs.granularity = g;
        }
        if (j.contains("value_constraints")) {
            for (const auto& vc : j["value_constraints"]) {
                if (vc.is_array() && vc.size() == 2) {
                    cs.value_constraints.emplace_back(vc[0].get<std::string>(),
                                                      vc[1].get<std::string>());
                }
            }
        }
    } catch (const json::exception&) {
        return false;
    }
    *out = std::move(cs);
    return true;
}

}  // namespace

ConstraintSet decompose(const std::string& task, GenerationProvider* gen) {
    if (!gen) return decompose_rules(task);
    std::string prompt =
        "Extract search constraints from this analytical task. Reply with JSON only: "
        "{\"entities\": [..], \"measures\": [..], \"temporal_scope\": \"..\", "
        "\"granularity\": \"..\", \"value_constraints\": [[\"attribute\", \"value\"], ..]}\n"
        "Task: " + task;
    try {
        ConstraintSet cs;
        std::string reply = gen->generate({prompt, 512, 0.0});
        if (parse_constraints_json(reply, &cs)) return cs;
        reply = gen->generate({prompt + "\nYour previous reply was not valid JSON. JSON only.",
                               512, 0.0});
        if (parse_constraints_json(reply, &cs)) return cs;
    } catch (const ProviderUnavailable&) {
        // fall through
    }
    return decompose_rules(task);
}

// -------------------------------------------------------------- parse_action

namespace {

// key=value tokens; values are bare words, "quoted \" strings", or [lists].
std::map<std::string, std::string> parse_kv(const std::string& rest, const std::string& line) {
    std::map<std::string, std::string> out;
    size_t i = 0;
    auto skip_ws = [&] {
        while (i < rest.size() && std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
    };
    skip_ws();
    while (i < rest.size()) {
        size_t key_start = i;
        while (i < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[i])) || rest[i] == '_')) ++i;
        std::string key = rest.substr(key_start, i - key_start);
        if (key.empty() || i >= rest.size() || rest[i] != '=') {
            throw BadArgs("expected key=value in: " + line);
        }
        ++i;  // '='
        std::string value;
        if (i < rest.size() && rest[i] == '"') {
            ++i;
            bool closed = false;
            while (i < rest.size()) {
                char c = rest[i++];
                if (c == '\\' && i < rest.size()) {
                    value.push_back(rest[i++]);
                } else if (c == '"') {
                    closed = true;
                    break;
                } else {
                    value.push_back(c);
                }
            }
            if (!closed) throw BadArgs("unterminated quote in: " + line);
        } else if (i < rest.size() && rest[i] == '[') {
            size_t close = rest.find(']', i);
            if (close == std::string::npos) throw BadArgs("unterminated list in: " + line);
            value = rest.substr(i, close - i + 1);
            i = close + 1;
        } else {
            size_t value_start = i;
            while (i < rest.size() && !std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
            value = rest.substr(value_start, i - value_start);
            if (value.empty()) throw BadArgs("empty value for " + key + " in: " + line);
        }
        out[key] = value;
        skip_ws();
    }
    return out;
}

std::vector<std::string> parse_id_list(const std::string& bracketed, const std::string& line) {
    if (bracketed.size() < 2 || bracketed.front() != '[' || bracketed.back() != ']') {
        throw BadArgs("tables must be a [list] in: " + line);
    }
    std::vector<std::string> out;
    std::string inner = bracketed.substr(1, bracketed.size() - 2);
    std::istringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string id = trim(item);
        if (!id.empty()) out.push_back(id);
    }
    return out;
}

void require_keys(const std::map<std::string, std::string>& kv,
                  const std::vector<std::string>& keys, const std::string& line) {
    for (const auto& k : keys) {
        if (!kv.count(k)) throw BadArgs("missing " + k + "= in: " + line);
    }
}

}  // namespace

AgentAction parse_action(const std::string& policy_output) {
    std::istringstream in(policy_output);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.rfind("ACTION ", 0) != 0) continue;

        std::string rest = t.substr(7);
        size_t sp = rest.find(' ');
        std::string verb = sp == std::string::npos ? rest : rest.substr(0, sp);
        std::string args_text = sp == std::string::npos ? "" : rest.substr(sp + 1);

        if (verb == "search") {
            auto kv = parse_kv(args_text, t);
            require_keys(kv, {"query"}, t);
            return SearchAction{kv["query"]};
        }
        if (verb == "tool") {
            auto kv = parse_kv(args_text, t);
            require_keys(kv, {"name"}, t);
            std::string name = kv["name"];
            kv.erase("name");
            if (name == "column_profiler") {
                require_keys(kv, {"table", "column"}, t);
            } else if (name == "data_finder") {
                require_keys(kv, {"table", "value"}, t);
            } else if (name == "joinability_check") {
                require_keys(kv, {"left", "right"}, t);
                for (const char* side : {"left", "right"}) {
                    if (kv[side].find('.') == std::string::npos) {
                        throw BadArgs(std::string(side) + " must be <table>.<column> in: " + t);
                    }
                }
            } else {
                throw UnknownTool(name + " in: " + t);
            }
            return ToolAction{name, kv};
        }
        if (verb == "finalize") {
            auto kv = parse_kv(args_text, t);
            require_keys(kv, {"tables", "justification"}, t);
            return FinalizeAction{parse_id_list(kv["tables"], t), kv["justification"]};
        }
        throw BadArgs("unknown action verb '" + verb + "' in: " + t);
    }
    throw NoActionFound("no ACTION line in policy output");
}

// ------------------------------------------------------------------- prompts

std::string render_constraints(const ConstraintSet& c) {
    std::ostringstream out;
    out << "entities=[" << join(c.entities, ", ") << "]";
    out << " measures=[" << join(c.measures, ", ") << "]";
    if (c.temporal_scope) out << " temporal=" << *c.temporal_scope;
    if (c.granularity) out << " granularity=" << *c.granularity;
    if (!c.value_constraints.empty()) {
        out << " values=[";
        for (size_t i = 0; i < c.value_constraints.size(); ++i) {
            if (i) out << ", ";
            const auto& [attr, val] = c.value_constraints[i];
            out << (attr.empty() ? "?" : attr) << "=" << val;
        }
        out << "]";
    }
    return out.str();
}

std::string build_state_prompt(const std::string& task, const ConstraintSet& constraints,
                               const std::vector<std::string>& observations, int remaining_budget,
                               const AgentEnv& env) {
    std::ostringstream out;
    out << "You select the minimal sufficient set of tables for a task.\n"
        << "Task: " << task << "\n"
        << "Constraints: " << render_constraints(constraints) << "\n"
        << "Remaining budget: " << remaining_budget << " actions\n\n"
        << "Available actions:\n"
        << "ACTION search query=\"<text>\" - semantic search over table metadata\n";
    if (env.tools_enabled) {
        out << "ACTION tool name=column_profiler table=<id> column=<name> - exact column statistics\n"
            << "ACTION tool name=data_finder table=<id> value=<v> [column=<name>] - verify a value is present\n"
            << "ACTION tool name=joinability_check left=<id>.<col> right=<id>.<col> - key overlap between two tables\n";
    }
    out << "ACTION finalize tables=[id1,id2] justification=\"<why these tables suffice>\"\n\n";

    constexpr size_t kWindow = 8;
    if (!observations.empty()) {
        out << "Observations:\n";
        if (observations.size() > kWindow) {
            out << "(" << observations.size() - kWindow << " earlier observations omitted)\n";
        }
        size_t start = observations.size() > kWindow ? observations.size() - kWindow : 0;
        for (size_t i = start; i < observations.size(); ++i) {
            out << "[" << (i + 1) << "] " << observations[i] << "\n";
        }
        out << "\n";
    }
    out << "Reply with exactly one ACTION line.";
    return out.str();
}

// --------------------------------------------------------------- run_session

namespace {

std::string action_text(const AgentAction& action) {
    if (const auto* s = std::get_if<SearchAction>(&action)) {
        return "search query=\"" + s->query + "\"";
    }
    if (const auto* t = std::get_if<ToolAction>(&action)) {
        std::string out = "tool name=" + t->name;
        for (const auto& [k, v] : t->args) out += " " + k + "=" + v;
        return out;
    }
    const auto& f = std::get<FinalizeAction>(action);
    return "finalize tables=[" + join(f.tables, ",") + "] justification=\"" + f.justification + "\"";
}

std::string near_matches(const CatalogStore& catalog, const std::string& id) {
    std::vector<std::pair<size_t, std::string>> scored;
    for (const auto& [known, entry] : catalog.entries) {
        scored.emplace_back(levenshtein(to_lower(id), to_lower(known)), known);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> best;
    for (size_t i = 0; i < scored.size() && i < 3; ++i) best.push_back(scored[i].second);
    return join(best, ", ");
}

std::string run_tool(const AgentEnv& env, const ToolAction& t) {
    auto arg = [&](const std::string& k) { return t.args.at(k); };
    if (t.name == "column_profiler") {
        return render_report(column_profiler(*env.catalog, arg("table"), arg("column")));
    }
    if (t.name == "data_finder") {
        std::optional<std::string> column;
        if (t.args.count("column")) column = arg("column");
        return render_report(data_finder(*env.catalog, arg("table"), arg("value"), column));
    }
    auto split_ref = [](const std::string& ref) {
        size_t dot = ref.rfind('.');
        return std::pair{ref.substr(0, dot), ref.substr(dot + 1)};
    };
    auto [lt, lc] = split_ref(arg("left"));
    auto [rt, rc] = split_ref(arg("right"));
    return render_report(joinability_check(*env.catalog, lt, lc, rt, rc));
}

}  // namespace

SelectionResult run_session(const std::string& task, const AgentEnv& env, Policy& policy,
                            const SessionOptions& options) {
    ConstraintSet constraints =
        options.constraints ? *options.constraints : decompose(task, env.gen);

    SelectionResult result;
    SearchSession session;
    session.session_id = "agent";
    std::vector<std::string> observations;
    bool finalize_rejected_once = false;

    SearchOptions search_options;
    search_options.k = env.k;
    search_options.max_distance = env.max_distance;
    search_options.attached = env.attached;

    int budget = std::max(1, options.budget);
    while (result.steps < budget) {
        std::string prompt =
            build_state_prompt(task, constraints, observations, budget - result.steps, env);

        AgentAction action;
        bool parsed = false;
        std::string raw;
        for (int attempt = 0; attempt < 3 && !parsed; ++attempt) {
            raw = policy.next(prompt);
            try {
                action = parse_action(raw);
                parsed = true;
            } catch (const MetalakeError& e) {
                prompt = build_state_prompt(task, constraints, observations,
                                            budget - result.steps, env) +
                         "\nYour previous reply was rejected: " + e.what() +
                         "\nReply with exactly one valid ACTION line.";
            }
        }
        if (!parsed) {
            result.terminated_by = TerminatedBy::POLICY_ERROR;
            result.justification = "policy failed to produce a parseable action";
            return result;
        }

        std::string observation;
        bool done = false;

        if (const auto* s = std::get_if<SearchAction>(&action)) {
            try {
                SearchResult sr = search(*env.index, session, s->query, *env.embedder,
                                         *env.render, search_options);
                observation = sr.rendered.empty() ? "(no results)" : sr.rendered;
            } catch (const MetalakeError& e) {
                observation = std::string("ERROR: ") + e.what();
            }
        } else if (const auto* t = std::get_if<ToolAction>(&action)) {
            if (!env.tools_enabled) {
                observation = "ERROR: tools are disabled in this configuration";
            } else {
                try {
                    observation = run_tool(env, *t);
                } catch (const MetalakeError& e) {
                    observation = std::string("ERROR: ") + e.what();
                }
            }
        } else {
            const auto& f = std::get<FinalizeAction>(action);
            std::vector<std::string> known, unknown;
            for (const auto& id : f.tables) {
                if (env.catalog->entries.count(id)) {
                    known.push_back(id);
                } else {
                    unknown.push_back(id);
                }
            }
            if (!unknown.empty() && !finalize_rejected_once) {
                finalize_rejected_once = true;
                std::ostringstream obs;
                obs << "ERROR: unknown tables:";
                for (const auto& id : unknown) {
                    obs << " " << id << " (near matches: " << near_matches(*env.catalog, id) << ");";
                }
                observation = obs.str();
            } else {
                std::sort(known.begin(), known.end());
                known.erase(std::unique(known.begin(), known.end()), known.end());
                result.tables = std::move(known);
                result.justification = f.justification;
                result.terminated_by = TerminatedBy::FINALIZE;
                observation = "finalized";
                done = true;
            }
        }

        observations.push_back(observation);
        result.transcript.push_back({action_text(action), observation});
        ++result.steps;
        if (done) break;
    }

    if (result.terminated_by != TerminatedBy::FINALIZE) {
        result.terminated_by = TerminatedBy::STEP_BUDGET;
        result.tables.clear();
        if (result.justification.empty()) result.justification = "step budget exhausted";
    } else if (env.post_filter) {
        std::vector<std::string> kept;
        for (const auto& id : result.tables) {
            const TableEntry& e = env.catalog->get(id);
            if (result.justification.find(id) != std::string::npos ||
                result.justification.find(e.name) != std::string::npos) {
                kept.push_back(id);
            }
        }
        result.tables = std::move(kept);
    }
    return result;
}

std::string selection_to_json(const SelectionResult& r) {
    json transcript = json::array();
    for (const auto& step : r.transcript) {
        transcript.push_back({{"action", step.action}, {"observation", step.observation}});
    }
    json j = {{"tables", r.tables},
              {"justification", r.justification},
              {"steps", r.steps},
              {"terminated_by", terminated_by_name(r.terminated_by)},
              {"transcript", transcript}};
    return j.dump(2);
}

}  // namespace metalake
