#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metalake/agent.hpp"
#include "metalake/catalog.hpp"
#include "metalake/descriptor.hpp"
#include "metalake/errors.hpp"
#include "metalake/evalkit.hpp"
#include "metalake/profiler.hpp"
#include "metalake/providers.hpp"
#include "metalake/search.hpp"
#include "metalake/synthlake.hpp"
#include "metalake/tools.hpp"
#include "metalake/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metalake;

namespace {

struct GlobalOpts {
    std::string lake = ".";
    uint64_t seed = 42;
    int jobs = 0;
    bool json_out = false;
    bool verbose = false;
    std::string provider = "none";  // live | scripted:<file> | none
};

void vlog(const GlobalOpts& g, const std::string& msg) {
    if (g.verbose) std::cerr << "[metalake] " << msg << "\n";
}

// Stage prerequisites surface as MissingStage naming the command to run first.
void require_stage(const fs::path& artifact, const std::string& command) {
    if (!fs::exists(artifact))
        throw MissingStage("run 'metalake " + command + "' first (missing " +
                           artifact.string() + ")");
}

CatalogStore load_catalog_stage(const GlobalOpts& g) {
    require_stage(catalog_path(g.lake), "ingest");
    return load_catalog(catalog_path(g.lake));
}

std::vector<TableProfile> load_profiles_stage(const GlobalOpts& g) {
    require_stage(profiles_path(g.lake), "profile");
    return load_profiles(profiles_path(g.lake));
}

std::vector<TableDescriptor> load_descriptors_stage(const GlobalOpts& g) {
    require_stage(descriptors_path(g.lake), "describe");
    return load_descriptors(descriptors_path(g.lake));
}

VectorIndex load_index_stage(const GlobalOpts& g, IndexKind kind) {
    require_stage(index_path(g.lake, kind), "index");
    return load_index(index_path(g.lake, kind), kind);
}

// Provider scripts: {"fifo": ["...", ...], "keyed": {"substring": "...", ...}}
std::unique_ptr<ScriptedGenerationProvider> scripted_provider_from_file(const fs::path& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw BadArgs("provider script is not a JSON object: " + path.string());
    auto p = std::make_unique<ScriptedGenerationProvider>();
    if (j.contains("fifo"))
        for (const auto& r : j["fifo"]) p->enqueue(r.get<std::string>());
    if (j.contains("keyed"))
        for (const auto& [key, r] : j["keyed"].items()) p->add_keyed(key, r.get<std::string>());
    return p;
}

std::unique_ptr<GenerationProvider> make_generation(const GlobalOpts& g) {
    if (g.provider == "none") return nullptr;
    if (g.provider == "live") {
        auto p = generation_from_env();
        if (!p)
            throw ProviderUnavailable(
                "live mode needs METALAKE_LLM_ENDPOINT (and optional METALAKE_LLM_KEY)");
        return p;
    }
    return scripted_provider_from_file(g.provider.substr(std::string("scripted:").size()));
}

std::unique_ptr<EmbeddingProvider> make_embedder(const GlobalOpts& g) {
    if (g.provider == "live") {
        if (auto p = embedding_from_env()) return p;
    }
    return std::make_unique<LocalHashEmbedder>();
}

void emit(const GlobalOpts& g, const json& machine, const std::string& human) {
    if (g.json_out)
        std::cout << machine.dump(2) << "\n";
    else
        std::cout << human;
}

int run_ingest(const GlobalOpts& g) {
    IngestReport report;
    CatalogStore c = ingest_lake(g.lake, {}, &report);
    save_catalog(c, catalog_path(g.lake));
    json skipped = json::array();
    std::string human = "ingested " + std::to_string(c.entries.size()) + " tables into " +
                        catalog_path(g.lake).string() + "\n";
    for (const auto& [path, reason] : report.skipped) {
        skipped.push_back({{"path", path}, {"reason", reason}});
        human += "skipped " + path + ": " + reason + "\n";
    }
    emit(g, {{"tables", c.entries.size()}, {"skipped", skipped}}, human);
    return 0;
}

int run_profile(const GlobalOpts& g) {
    CatalogStore c = load_catalog_stage(g);
    std::vector<TableProfile> profiles;
    for (const auto& [id, entry] : c.entries) {
        vlog(g, "profiling " + id);
        profiles.push_back(profile_table(c, entry));
    }
    save_profiles(profiles, profiles_path(g.lake));
    emit(g, {{"profiles", profiles.size()}},
         "profiled " + std::to_string(profiles.size()) + " tables into " +
             profiles_path(g.lake).string() + "\n");
    return 0;
}

int run_describe(const GlobalOpts& g, bool no_llm_content, bool no_llm_discriminative) {
    CatalogStore c = load_catalog_stage(g);
    auto profiles = load_profiles_stage(g);
    auto gen = make_generation(g);
    DescriptorOptions options;
    options.llm_content = !no_llm_content;
    options.llm_discriminative = !no_llm_discriminative;
    auto descriptors = build_descriptors(c, profiles, gen.get(), options);
    save_descriptors(descriptors, descriptors_path(g.lake));
    size_t llm = 0;
    for (const auto& d : descriptors) llm += d.source == DescriptorSource::LLM ? 1 : 0;
    emit(g, {{"descriptors", descriptors.size()}, {"llm", llm},
             {"template", descriptors.size() - llm}},
         "described " + std::to_string(descriptors.size()) + " tables (" + std::to_string(llm) +
             " llm, " + std::to_string(descriptors.size() - llm) + " template)\n");
    return 0;
}

int run_index(const GlobalOpts& g, const std::string& kind_arg) {
    CatalogStore c = load_catalog_stage(g);
    auto descriptors = load_descriptors_stage(g);
    auto embedder = make_embedder(g);
    std::vector<IndexKind> kinds;
    if (kind_arg == "all") {
        kinds = {IndexKind::SCHEMA_ONLY, IndexKind::CONTENT, IndexKind::DISCRIMINATIVE};
    } else {
        auto k = index_kind_from_name(kind_arg);
        if (!k) throw BadArgs("unknown index kind: " + kind_arg);
        kinds = {*k};
    }
    json out = json::array();
    std::string human;
    for (auto kind : kinds) {
        VectorIndex idx = build_index(c, descriptors, kind, *embedder, g.seed);
        save_index(idx, index_path(g.lake, kind));
        out.push_back({{"kind", index_kind_name(kind)},
                       {"dims", idx.dims},
                       {"entries", idx.entries.size()}});
        human += "indexed " + std::to_string(idx.entries.size()) + " tables (" +
                 index_kind_name(kind) + ", dims " + std::to_string(idx.dims) + ")\n";
    }
    emit(g, {{"indexes", out}}, human);
    return 0;
}

int run_search(const GlobalOpts& g, const std::string& query, const std::string& kind_arg, int k,
               double max_distance, bool baseline, bool rerank, bool no_attached) {
    auto kind = index_kind_from_name(kind_arg);
    if (!kind) throw BadArgs("unknown index kind: " + kind_arg);
    CatalogStore c = load_catalog_stage(g);
    auto descriptors = load_descriptors_stage(g);
    VectorIndex idx = load_index_stage(g, *kind);
    auto embedder = make_embedder(g);
    RenderMap render = make_render_map(c, descriptors, *kind, g.seed);

    if (baseline) {
        auto ranked = baseline_topk(idx, *embedder, query, k, max_distance, rerank, &render);
        json rows = json::array();
        std::string human;
        for (const auto& [id, dist] : ranked) {
            rows.push_back({{"table_id", id}, {"distance", dist}});
            human += id + "\t" + format_ratio(dist) + "\n";
        }
        emit(g, {{"results", rows}}, human);
        return 0;
    }

    SearchSession session;
    session.session_id = "cli";
    SearchOptions options;
    options.k = k;
    options.max_distance = max_distance;
    options.attached = !no_attached;
    SearchResult r = search(idx, session, query, *embedder, render, options);
    emit(g,
         {{"rendered", r.rendered},
          {"new_ids", r.new_ids},
          {"duplicate_ids", r.duplicate_ids},
          {"terminated", r.terminated}},
         r.rendered + "\n");
    return 0;
}

int run_tool(const GlobalOpts& g, const std::string& name, const std::string& table,
             const std::string& column, const std::string& value, const std::string& left,
             const std::string& right) {
    CatalogStore c = load_catalog_stage(g);
    if (name == "column_profiler") {
        if (table.empty() || column.empty())
            throw BadArgs("column_profiler needs --table and --column");
        auto r = column_profiler(c, table, column);
        emit(g, json::parse(report_json(r)), render_report(r) + "\n");
        return 0;
    }
    if (name == "data_finder") {
        if (table.empty() || value.empty()) throw BadArgs("data_finder needs --table and --value");
        auto r = data_finder(c, table, value,
                             column.empty() ? std::nullopt : std::optional<std::string>(column));
        emit(g, json::parse(report_json(r)), render_report(r) + "\n");
        return 0;
    }
    if (name == "joinability_check") {
        auto split = [](const std::string& s) -> std::pair<std::string, std::string> {
            auto dot = s.rfind('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
                throw BadArgs("expected table.column, got: " + s);
            return {s.substr(0, dot), s.substr(dot + 1)};
        };
        if (left.empty() || right.empty())
            throw BadArgs("joinability_check needs --left and --right as table.column");
        auto [lt, lc] = split(left);
        auto [rt, rc] = split(right);
        auto r = joinability_check(c, lt, lc, rt, rc);
        emit(g, json::parse(report_json(r)), render_report(r) + "\n");
        return 0;
    }
    throw UnknownTool(name);
}

// Policy scripts: JSON array of action strings, or
// {"actions": [...], "loop_last": true}.
std::unique_ptr<ScriptedPolicy> scripted_policy_from_file(const fs::path& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw BadArgs("policy script is not JSON: " + path.string());
    std::vector<std::string> actions;
    bool loop_last = false;
    if (j.is_array()) {
        for (const auto& a : j) actions.push_back(a.get<std::string>());
    } else if (j.is_object() && j.contains("actions")) {
        for (const auto& a : j["actions"]) actions.push_back(a.get<std::string>());
        loop_last = j.value("loop_last", false);
    } else {
        throw BadArgs("policy script needs an actions array: " + path.string());
    }
    return std::make_unique<ScriptedPolicy>(std::move(actions), loop_last);
}

struct SelectStack {
    CatalogStore catalog;
    std::vector<TableDescriptor> descriptors;
    VectorIndex index;
    std::unique_ptr<EmbeddingProvider> embedder;
    RenderMap render;
    std::unique_ptr<GenerationProvider> gen;
    AgentEnv env;
};

std::unique_ptr<SelectStack> make_select_stack(const GlobalOpts& g, const std::string& kind_arg,
                                               int k, double max_distance, bool no_attached,
                                               bool no_tools, bool post_filter) {
    auto kind = index_kind_from_name(kind_arg);
    if (!kind) throw BadArgs("unknown index kind: " + kind_arg);
    auto s = std::make_unique<SelectStack>();
    s->catalog = load_catalog_stage(g);
    s->descriptors = load_descriptors_stage(g);
    s->index = load_index_stage(g, *kind);
    s->embedder = make_embedder(g);
    s->render = make_render_map(s->catalog, s->descriptors, *kind, g.seed);
    s->gen = make_generation(g);
    s->env.catalog = &s->catalog;
    s->env.index = &s->index;
    s->env.embedder = s->embedder.get();
    s->env.render = &s->render;
    s->env.gen = s->gen.get();
    s->env.tools_enabled = !no_tools;
    s->env.attached = !no_attached;
    s->env.k = k;
    s->env.max_distance = max_distance;
    s->env.post_filter = post_filter;
    return s;
}

int run_select(const GlobalOpts& g, const std::string& task, const std::string& policy_arg,
               int budget, const std::string& kind_arg, int k, double max_distance,
               bool no_attached, bool no_tools, bool post_filter, const std::string& out_file) {
    auto stack = make_select_stack(g, kind_arg, k, max_distance, no_attached, no_tools,
                                   post_filter);
    std::unique_ptr<Policy> policy;
    if (policy_arg == "llm") {
        if (!stack->env.gen)
            throw BadArgs("select --policy llm needs --provider live or scripted:<file>");
        policy = std::make_unique<LlmPolicy>(stack->env.gen);
    } else if (policy_arg.starts_with("scripted:")) {
        policy = scripted_policy_from_file(policy_arg.substr(std::string("scripted:").size()));
    } else {
        throw BadArgs("unknown policy: " + policy_arg);
    }
    SessionOptions options;
    options.budget = budget;
    SelectionResult r = run_session(task, stack->env, *policy, options);
    std::string out = selection_to_json(r);
    if (!out_file.empty()) write_text_file(out_file, out + "\n");
    if (g.json_out) {
        std::cout << out << "\n";
    } else {
        std::cout << "tables: " << join(r.tables, ", ") << "\n"
                  << "justification: " << r.justification << "\n"
                  << "steps: " << r.steps << " (" << terminated_by_name(r.terminated_by) << ")\n";
    }
    return 0;
}

int run_synth(const GlobalOpts& g, const std::string& in_dir, const std::string& out_dir,
              const std::string& config_file) {
    SynthConfig config;
    config.seed = g.seed;
    if (!config_file.empty()) {
        uint64_t cli_seed = config.seed;
        config = synth_config_from_json_file(config_file);
        json j = json::parse(read_text_file(config_file));
        if (!j.contains("seed")) config.seed = cli_seed;
    }
    auto gen = make_generation(g);
    SynthManifest m = build_messy_lake(in_dir, out_dir, config, gen.get());
    emit(g,
         {{"base", m.base},
          {"splits", m.splits},
          {"duplicates", m.duplicates},
          {"low_quality", m.low_quality},
          {"total", m.total}},
         "base " + std::to_string(m.base) + ", splits " + std::to_string(m.splits) +
             ", duplicates " + std::to_string(m.duplicates) + ", low quality " +
             std::to_string(m.low_quality) + ", total " + std::to_string(m.total) + "\n");
    return 0;
}

int run_eval(const GlobalOpts& g, const std::string& tasks_file, const std::string& mode,
             const std::string& policy_arg, const std::string& selections_file,
             const std::string& kind_arg, int k, double max_distance, int budget, bool per_base,
             bool no_attached, bool no_tools) {
    auto tasks = load_tasks(tasks_file);
    fs::path out_dir = metalake_dir(g.lake);
    fs::create_directories(out_dir);

    if (mode == "recall") {
        auto kind = index_kind_from_name(kind_arg);
        if (!kind) throw BadArgs("unknown index kind: " + kind_arg);
        VectorIndex idx = load_index_stage(g, *kind);
        auto embedder = make_embedder(g);
        auto rows = recall_at_k(tasks, idx, *embedder, {1, 5, 10}, max_distance);
        std::string csv = render_recall_csv(rows, {1, 5, 10});
        write_text_file(out_dir / "recall_at_k.csv", csv);
        emit(g, {{"kind", index_kind_name(*kind)}, {"csv", csv}}, csv);
        return 0;
    }
    if (mode != "lineage" && mode != "reference")
        throw BadArgs("unknown eval mode: " + mode + " (expected lineage, reference, or recall)");

    // Predictions come from a selections file, or from running a policy per task.
    std::map<std::string, std::pair<std::vector<std::string>, int>> predictions;
    std::unique_ptr<SelectStack> stack;
    std::map<std::string, std::unique_ptr<ScriptedPolicy>> task_policies;
    if (!selections_file.empty()) {
        json j = json::parse(read_text_file(selections_file), nullptr, false);
        if (j.is_discarded()) {
            // JSONL of {task_id, tables, steps}
            std::string text = read_text_file(selections_file);
            size_t start = 0;
            while (start < text.size()) {
                size_t end = text.find('\n', start);
                std::string line =
                    text.substr(start, end == std::string::npos ? std::string::npos : end - start);
                start = end == std::string::npos ? text.size() : end + 1;
                if (trim(line).empty()) continue;
                json r = json::parse(line);
                predictions[r["task_id"].get<std::string>()] = {
                    r["tables"].get<std::vector<std::string>>(), r.value("steps", 0)};
            }
        } else if (j.is_array()) {
            for (const auto& r : j)
                predictions[r["task_id"].get<std::string>()] = {
                    r["tables"].get<std::vector<std::string>>(), r.value("steps", 0)};
        } else {
            throw BadArgs("selections file must be JSON array or JSONL: " + selections_file);
        }
    } else {
        stack = make_select_stack(g, kind_arg, k, max_distance, no_attached, no_tools, false);
        if (policy_arg == "llm" && !stack->env.gen)
            throw BadArgs("eval --policy llm needs --provider live or scripted:<file>");
        if (policy_arg.starts_with("scripted:")) {
            // per-task scripts: {"<task_id>": {"actions": [...], "loop_last": bool}}
            fs::path path = policy_arg.substr(std::string("scripted:").size());
            json j = json::parse(read_text_file(path), nullptr, false);
            if (j.is_discarded() || !j.is_object())
                throw BadArgs("eval policy script must map task_id to actions: " + path.string());
            for (const auto& [task_id, pj] : j.items()) {
                std::vector<std::string> actions;
                bool loop_last = false;
                if (pj.is_array()) {
                    for (const auto& a : pj) actions.push_back(a.get<std::string>());
                } else {
                    for (const auto& a : pj.at("actions")) actions.push_back(a.get<std::string>());
                    loop_last = pj.value("loop_last", false);
                }
                task_policies[task_id] =
                    std::make_unique<ScriptedPolicy>(std::move(actions), loop_last);
            }
        }
    }

    LineageStore lineage;
    if (mode == "lineage") {
        if (!fs::exists(lineage_path(g.lake)))
            throw MissingStage("run 'metalake synth' first (missing " +
                               lineage_path(g.lake).string() + ")");
        lineage = load_lineage(lineage_path(g.lake));
    } else if (fs::exists(lineage_path(g.lake))) {
        lineage = load_lineage(lineage_path(g.lake));
    }

    auto predict = [&](const EvalTask& task) -> std::pair<std::vector<std::string>, int> {
        auto it = predictions.find(task.task_id);
        if (it != predictions.end()) return it->second;
        if (!stack) return {{}, 0};
        if (policy_arg == "baseline") {
            std::vector<std::string> ids;
            for (const auto& [id, dist] :
                 baseline_topk(stack->index, *stack->embedder, task.question, k, max_distance))
                ids.push_back(id);
            return {ids, 1};
        }
        SessionOptions options;
        options.budget = budget;
        std::unique_ptr<Policy> own;
        Policy* policy = nullptr;
        if (policy_arg == "llm") {
            own = std::make_unique<LlmPolicy>(stack->env.gen);
            policy = own.get();
        } else {
            auto it2 = task_policies.find(task.task_id);
            if (it2 == task_policies.end()) return {{}, 0};
            policy = it2->second.get();
        }
        SelectionResult r = run_session(task.question, stack->env, *policy, options);
        return {r.tables, r.steps};
    };

    std::vector<ScoreRow> rows;
    std::vector<std::string> skipped;
    std::vector<SelectionSample> samples;
    std::vector<std::unique_ptr<GoldQuerySpec>> specs;  // stable addresses for samples
    RecallDenominator denom =
        per_base ? RecallDenominator::PER_BASE : RecallDenominator::PER_PARTITION;

    for (const auto& task : tasks) {
        auto [pred, steps] = predict(task);
        ScoreRow row;
        row.task_id = task.task_id;
        row.steps = steps;
        if (mode == "reference") {
            if (!task.ref_tables) {
                skipped.push_back(task.task_id + ": no ref_tables");
                continue;
            }
            row.scores = score_against_reference(*task.ref_tables, pred);
            std::set<std::string> ref(task.ref_tables->begin(), task.ref_tables->end());
            for (const auto& id : pred)
                row.verdicts.push_back(
                    {id, ref.count(id) > 0, ref.count(id) ? "ok" : "not in reference"});
            samples.push_back({pred, nullptr});
        } else {
            if (!task.gold_sql) {
                skipped.push_back(task.task_id + ": no gold_sql");
                continue;
            }
            std::unique_ptr<GoldQuerySpec> spec;
            try {
                spec = std::make_unique<GoldQuerySpec>(parse_gold_sql(*task.gold_sql));
            } catch (const UnsupportedSQL& e) {
                skipped.push_back(task.task_id + ": " + e.what());
                vlog(g, "skipping " + task.task_id + ": " + e.what());
                continue;
            }
            VerifyResult v = verify_selection(pred, *spec, lineage, denom);
            row.scores = v.scores;
            row.verdicts = v.verdicts;
            specs.push_back(std::move(spec));
            samples.push_back({pred, specs.back().get()});
        }
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(),
              [](const ScoreRow& a, const ScoreRow& b) { return a.task_id < b.task_id; });

    NoiseDistribution noise = noise_distribution(samples, lineage);
    std::string scores_csv = render_scores_csv(rows);
    std::string summary =
        eval_summary_json(rows, noise, recall_denominator_name(denom), skipped);
    write_text_file(out_dir / "scores.csv", scores_csv);
    write_text_file(out_dir / "summary.json", summary);

    if (g.json_out) {
        std::cout << summary;
    } else {
        double r = 0, p = 0, f = 0;
        for (const auto& row : rows) {
            r += row.scores.recall;
            p += row.scores.precision;
            f += row.scores.f1;
        }
        double n = rows.empty() ? 1 : static_cast<double>(rows.size());
        std::printf("tasks %zu  recall %.4f  precision %.4f  f1 %.4f  (%zu skipped)\n",
                    rows.size(), r / n, p / n, f / n, skipped.size());
        std::printf("clean selections: %.1f%%\n", noise.percentages.at("clean"));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metadata-reasoning engine for data lakes"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.failure_message(CLI::FailureMessage::simple);

    GlobalOpts g;
    app.add_option("--lake", g.lake, "lake root directory")->capture_default_str();
    app.add_option("--seed", g.seed, "seed for all randomness")->capture_default_str();
    app.add_option("--jobs", g.jobs, "worker cap (0 = auto)")->capture_default_str();
    app.add_flag("--json", g.json_out, "machine-readable stdout");
    app.add_flag("--verbose", g.verbose, "progress logging on stderr");
    app.add_option("--provider", g.provider, "generation provider: live | scripted:<file> | none")
        ->capture_default_str();

    std::string kind = "discriminative";
    int k = 10;
    double max_distance = 0.7;
    int budget = 30;

    auto* ingest = app.add_subcommand("ingest", "scan the lake and build the catalog");

    auto* profile = app.add_subcommand("profile", "compute column statistics for every table");

    auto* describe = app.add_subcommand("describe", "build content and group-aware descriptions");
    bool no_llm_content = false, no_llm_discriminative = false;
    describe->add_flag("--no-llm-content", no_llm_content, "template content summaries only");
    describe->add_flag("--no-llm-discriminative", no_llm_discriminative,
                       "template group facts only");

    auto* index_cmd = app.add_subcommand("index", "embed descriptions into vector indexes");
    std::string index_kind = "all";
    index_cmd->add_option("--kind", index_kind,
                          "schema_only | content | discriminative | all")
        ->capture_default_str();

    auto* search_cmd = app.add_subcommand("search", "query an index");
    std::string query;
    bool baseline = false, rerank = false, no_attached = false;
    search_cmd->add_option("--query", query, "query text")->required();
    search_cmd->add_option("--kind", kind, "index kind")->capture_default_str();
    search_cmd->add_option("--k", k, "results per query")->capture_default_str();
    search_cmd->add_option("--max-distance", max_distance, "cosine distance threshold")
        ->capture_default_str();
    search_cmd->add_flag("--baseline", baseline, "stateless ranked list, no session");
    search_cmd->add_flag("--rerank", rerank, "token-overlap rerank (baseline only)");
    search_cmd->add_flag("--no-attached", no_attached, "render indexed text, not full metadata");

    auto* tool_cmd = app.add_subcommand("tool", "run one metadata tool");
    std::string tool_name, tool_table, tool_column, tool_value, tool_left, tool_right;
    tool_cmd->add_option("--name", tool_name,
                         "column_profiler | data_finder | joinability_check")
        ->required();
    tool_cmd->add_option("--table", tool_table, "table id");
    tool_cmd->add_option("--column", tool_column, "column name");
    tool_cmd->add_option("--value", tool_value, "value to find");
    tool_cmd->add_option("--left", tool_left, "left side as table.column");
    tool_cmd->add_option("--right", tool_right, "right side as table.column");

    auto* select_cmd = app.add_subcommand("select", "run an agentic table-selection session");
    std::string task, policy_arg = "llm", out_file;
    bool no_tools = false, post_filter = false;
    select_cmd->add_option("--task", task, "natural-language task")->required();
    select_cmd->add_option("--policy", policy_arg, "llm | scripted:<file>")
        ->capture_default_str();
    select_cmd->add_option("--budget", budget, "step budget")->capture_default_str();
    select_cmd->add_option("--kind", kind, "index kind")->capture_default_str();
    select_cmd->add_option("--k", k, "results per search")->capture_default_str();
    select_cmd->add_option("--max-distance", max_distance, "cosine distance threshold")
        ->capture_default_str();
    select_cmd->add_flag("--no-attached", no_attached, "ablation: indexed text only");
    select_cmd->add_flag("--no-tools", no_tools, "ablation: disable tool actions");
    select_cmd->add_flag("--post-filter", post_filter,
                         "drop finalized tables absent from the justification");
    select_cmd->add_option("--out", out_file, "also write the selection JSON here");

    auto* synth_cmd = app.add_subcommand("synth", "derive a messy lake with lineage");
    std::string in_dir, synth_out, config_file;
    synth_cmd->add_option("--in", in_dir, "clean lake directory")->required();
    synth_cmd->add_option("--out", synth_out, "messy lake directory")->required();
    synth_cmd->add_option("--config", config_file, "synth config JSON");

    auto* eval_cmd = app.add_subcommand("eval", "score selections against tasks");
    std::string tasks_file, mode = "lineage", selections_file, eval_policy = "baseline";
    bool per_base = false;
    eval_cmd->add_option("--tasks", tasks_file, "tasks JSONL")->required();
    eval_cmd->add_option("--mode", mode, "lineage | reference | recall")->capture_default_str();
    eval_cmd->add_option("--policy", eval_policy, "baseline | llm | scripted:<file>")
        ->capture_default_str();
    eval_cmd->add_option("--selections", selections_file,
                         "precomputed selections (JSON array or JSONL)");
    eval_cmd->add_option("--kind", kind, "index kind")->capture_default_str();
    eval_cmd->add_option("--k", k, "results per query")->capture_default_str();
    eval_cmd->add_option("--max-distance", max_distance, "cosine distance threshold")
        ->capture_default_str();
    eval_cmd->add_option("--budget", budget, "agent step budget")->capture_default_str();
    eval_cmd->add_flag("--per-base", per_base, "recall denominator: one unit per base table");
    eval_cmd->add_flag("--no-attached", no_attached, "ablation: indexed text only");
    eval_cmd->add_flag("--no-tools", no_tools, "ablation: disable tool actions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    // RunConfig invariants surface as usage errors before any work starts.
    if (g.provider.starts_with("scripted:")) {
        fs::path script = g.provider.substr(std::string("scripted:").size());
        if (!fs::exists(script)) {
            std::cerr << "usage error: provider script not found: " << script.string() << "\n";
            return 2;
        }
    } else if (g.provider != "live" && g.provider != "none") {
        std::cerr << "usage error: --provider must be live, scripted:<file>, or none\n";
        return 2;
    }
    if (select_cmd->parsed() && policy_arg == "llm" && g.provider == "none") {
        std::cerr << "usage error: select --policy llm requires --provider live or "
                     "scripted:<file>\n";
        return 2;
    }
    if (eval_cmd->parsed() && eval_policy == "llm" && g.provider == "none" &&
        selections_file.empty()) {
        std::cerr << "usage error: eval --policy llm requires --provider live or "
                     "scripted:<file>\n";
        return 2;
    }

    try {
        if (ingest->parsed()) return run_ingest(g);
        if (profile->parsed()) return run_profile(g);
        if (describe->parsed()) return run_describe(g, no_llm_content, no_llm_discriminative);
        if (index_cmd->parsed()) return run_index(g, index_kind);
        if (search_cmd->parsed())
            return run_search(g, query, kind, k, max_distance, baseline, rerank, no_attached);
        if (tool_cmd->parsed())
            return run_tool(g, tool_name, tool_table, tool_column, tool_value, tool_left,
                            tool_right);
        if (select_cmd->parsed())
            return run_select(g, task, policy_arg, budget, kind, k, max_distance, no_attached,
                              no_tools, post_filter, out_file);
        if (synth_cmd->parsed()) return run_synth(g, in_dir, synth_out, config_file);
        if (eval_cmd->parsed())
            return run_eval(g, tasks_file, mode, eval_policy, selections_file, kind, k,
                            max_distance, budget, per_base, no_attached, no_tools);
    } catch (const MetalakeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
