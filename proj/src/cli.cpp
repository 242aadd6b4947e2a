// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "kgsr/error.hpp"
#include "kgsr/graph.hpp"
#include "kgsr/interactions.hpp"
#include "kgsr/llm.hpp"
#include "kgsr/metrics.hpp"
#include "kgsr/model.hpp"
#include "kgsr/recommend.hpp"
#include "text.hpp"

namespace kgsr {

namespace fs = std::filesystem;

namespace {

// Raised for problems the user can fix by changing the command line.
struct UsageError : Error {
    using Error::Error;
};

std::ofstream open_output(const std::string& path) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

void require_file(const std::string& path, const char* flag) {
    require(path, flag);
    if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file '" + path + "'");
}

KnowledgeGraph load_graph(const std::string& path) {
    require_file(path, "--graph");
    auto graph = ingest_triples(path);
    spdlog::info("graph {}: {} entities, {} relations, {} triples", path, graph.entity_count(),
                 graph.relation_count(), graph.triple_count());
    return graph;
}

InteractionSet load_interactions(const std::string& path, const char* flag, const KnowledgeGraph& graph) {
    require_file(path, flag);
    return ingest_interactions(path, graph);
}

Checkpoint load_model(const std::string& path, const KnowledgeGraph& graph) {
    require_file(path, "--checkpoint");
    auto checkpoint = load_checkpoint(path);
    check_compatible(checkpoint, graph);
    return checkpoint;
}

std::vector<ExtractionTarget> load_targets_or_default(const std::string& path) {
    if (path.empty()) return default_targets();
    require_file(path, "--targets");
    return load_targets(path);
}

DiffusionConfig diffusion_from(const PipelineConfig& config) {
    DiffusionConfig d = diffusion_config(config.train);
    validate(d);
    return d;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string piece;
    while (std::getline(in, piece, ',')) {
        const auto t = std::string(trim(piece));
        if (t.empty()) continue;
        std::size_t used = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size() || value == 0) throw UsageError("--subgraph-sizes: '" + t + "' is not a positive count");
        out.push_back(static_cast<std::size_t>(value));
    }
    if (out.empty()) throw UsageError("--subgraph-sizes is empty");
    return out;
}

// ---------------------------------------------------------------- stages

void run_ingest(const PipelineConfig& c, std::ostream& out) {
    require_file(c.triples, "--triples");
    require_file(c.interactions, "--interactions");
    require(c.out_dir, "--out-dir");
    const auto source = ingest_triples(c.triples);
    const auto all = ingest_interactions(c.interactions, source);
    const auto split = split_interactions(all, c.train_fraction, c.split_seed);

    // Rebuild with the same entity and relation order, dropping purchase
    // edges of held-out pairs and adding the training interactions as edges.
    KnowledgeGraph graph;
    for (std::size_t e = 0; e < source.entity_count(); ++e) {
        const auto id = static_cast<EntityId>(e);
        graph.intern_entity(source.entity_name(id), source.kind(id));
    }
    for (std::size_t r = 0; r < source.relation_count(); ++r)
        graph.intern_relation(source.relation_name(static_cast<RelationId>(r)));
    const auto purchase = graph.intern_relation(c.purchase_relation);
    std::size_t dropped = 0;
    for (const auto& t : source.triples()) {
        if (t.relation == purchase && split.test.contains(t.head, t.tail)) {
            ++dropped;
            continue;
        }
        graph.add_triple(t);
    }
    std::size_t added = 0;
    for (const auto& [user, items] : split.train.by_user()) {
        for (auto item : items) added += graph.add_triple(Triple{user, purchase, item}) ? 1 : 0;
    }

    fs::create_directories(c.out_dir);
    const auto dir = fs::path(c.out_dir);
    save_triples(graph, dir / "graph.tsv");
    save_interactions(split.train, graph, dir / "train.tsv");
    save_interactions(split.test, graph, dir / "test.tsv");
    spdlog::info("ingest: {} held-out purchase edges removed, {} training purchase edges added", dropped, added);
    out << "graph\t" << (dir / "graph.tsv").string() << "\t" << graph.triple_count() << " triples\n"
        << "train\t" << (dir / "train.tsv").string() << "\t" << split.train.size() << " pairs\n"
        << "test\t" << (dir / "test.tsv").string() << "\t" << split.test.size() << " pairs\n";
}

void write_extractions(const std::string& path, std::span<const ExtractedTriple> triples) {
    auto file = open_output(path);
    file << "review\tsubject\trelation\tvalue\textractor\n";
    for (const auto& t : triples) {
        file << t.review_id << '\t' << to_string(t.subject) << '\t' << t.relation_name << '\t' << t.value << '\t'
             << (t.extractor == Extractor::Llm ? "llm" : "lexicon") << '\n';
    }
}

void run_augment(const PipelineConfig& c, std::ostream& out) {
    if (c.use_llm && c.offline) throw UsageError("--offline and --llm are mutually exclusive");
    std::unique_ptr<ChatClient> client;
    if (c.use_llm) {
        try {
            client = make_chat_client_from_env(c.llm);
        } catch (const ArgumentError& e) {
            throw UsageError(e.what());
        }
    } else {
        require_file(c.lexicon, "--lexicon");
    }
    require_file(c.reviews, "--reviews");
    require(c.output, "--out");
    auto graph = load_graph(c.graph);
    const auto targets = load_targets_or_default(c.targets);
    validate_targets(targets);
    auto reviews = load_reviews(c.reviews);

    if (!c.test_set.empty()) {
        const auto held_out = load_interactions(c.test_set, "--test", graph);
        const auto before = reviews.size();
        std::erase_if(reviews, [&](const ReviewRecord& r) {
            const auto u = graph.find_entity(r.user);
            const auto i = graph.find_entity(r.item);
            return u && i && held_out.contains(*u, *i);
        });
        if (before != reviews.size()) spdlog::info("augment: {} reviews of held-out pairs skipped", before - reviews.size());
    }
    const auto index = build_review_index(reviews, graph);
    if (index.size() != reviews.size())
        spdlog::warn("augment: {} reviews name unknown users or items and are skipped", reviews.size() - index.size());

    std::vector<LexiconEntry> lexicon;
    if (!client) lexicon = load_lexicon(c.lexicon);
    std::vector<std::vector<ExtractedTriple>> per_review(reviews.size());
    std::vector<std::size_t> warnings(reviews.size(), 0);
    auto extract_one = [&](std::size_t i) {
        const auto& r = reviews[i];
        if (!index.contains(r.id)) return;
        if (client) {
            auto result = extract_review_triples(r.text, r.id, targets, *client);
            per_review[i] = std::move(result.triples);
            warnings[i] = result.warnings;
        } else {
            per_review[i] = offline_extract(r.text, lexicon, targets, r.id);
        }
    };
    const auto workers = std::max<std::size_t>(1, std::min(c.train.threads, reviews.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < reviews.size(); ++i) extract_one(i);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t i = w; i < reviews.size(); i += workers) extract_one(i);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::vector<ExtractedTriple> extracted;
    for (auto& part : per_review) std::move(part.begin(), part.end(), std::back_inserter(extracted));
    std::size_t total_warnings = 0;
    for (auto w : warnings) total_warnings += w;

    const auto before = graph.triple_count();
    const auto added = inject_triples(graph, extracted, index, targets);
    save_triples(graph, c.output);
    if (!c.extractions.empty()) write_extractions(c.extractions, extracted);
    spdlog::info("augment: {} extractions, {} new triples ({} -> {}), {} reply lines dropped", extracted.size(),
                 added, before, graph.triple_count(), total_warnings);
    out << "extracted\t" << extracted.size() << "\nadded\t" << added << "\ngraph\t" << c.output << '\n';
}

void run_pretrain(const PipelineConfig& c, std::ostream& out) {
    require(c.checkpoint, "--checkpoint");
    const auto graph = load_graph(c.graph);
    TranseHistory history;
    const auto table = transe_pretrain(graph, c.transe, &history);
    const auto model = init_model(table, c.train.attention_hidden, c.train.encoder_hidden, c.train.seed);
    save_checkpoint(make_checkpoint(model, graph), c.checkpoint);
    out << "checkpoint\t" << c.checkpoint << "\n";
    if (!history.mean_loss.empty()) out << "final_loss\t" << history.mean_loss.back() << "\n";
}

void echo_train_config(const TrainConfig& t, std::ostream& out) {
    out << "batch_size = " << t.batch_size << "\n"
        << "epochs = " << t.epochs << "\n"
        << "dim = " << t.dim << "\n"
        << "top_n = " << t.top_n << "\n"
        << "steps = " << t.steps << "\n"
        << "learning_rate = " << t.learning_rate << "\n"
        << "seed = " << t.seed << "\n"
        << "contrastive = " << (t.contrastive ? "true" : "false") << "\n"
        << "threads = " << t.threads << "\n";
}

void run_train(const PipelineConfig& c, std::ostream& out) {
    echo_train_config(c.train, out);
    validate(c.train);
    require(c.checkpoint, "--checkpoint");
    const auto graph = load_graph(c.graph);
    const auto train_set = load_interactions(c.train_set, "--train", graph);
    EmbeddingTable pretrained;
    if (!c.pretrained.empty()) {
        require_file(c.pretrained, "--pretrained");
        auto ckpt = load_checkpoint(c.pretrained);
        check_compatible(ckpt, graph);
        pretrained = std::move(ckpt.model.embeddings);
    } else {
        auto transe = c.transe;
        transe.dim = c.train.dim;
        spdlog::info("train: no --pretrained checkpoint, running TransE first");
        pretrained = transe_pretrain(graph, transe);
    }
    TrainHistory history;
    const auto checkpoint = train(graph, pretrained, train_set, c.train, &history);
    save_checkpoint(checkpoint, c.checkpoint);
    out << "checkpoint\t" << c.checkpoint << "\n";
    if (!history.epoch_loss.empty()) out << "final_loss\t" << history.epoch_loss.back() << "\n";
}

void run_evaluate(const PipelineConfig& c, std::ostream& out) {
    if (c.format != "json" && c.format != "text") throw UsageError("--format must be json or text");
    const auto graph = load_graph(c.graph);
    const auto train_set = load_interactions(c.train_set, "--train", graph);
    const auto test_set = load_interactions(c.test_set, "--test", graph);
    const auto checkpoint = load_model(c.checkpoint, graph);
    auto diffusion = diffusion_from(c);

    std::vector<LabeledReport> rows;
    if (c.subgraph_sizes.empty()) {
        rows.push_back({"N=" + std::to_string(diffusion.top_n),
                        evaluate_model(checkpoint, graph, train_set, test_set, c.k, diffusion, c.train.threads)});
    } else {
        for (auto n : parse_sizes(c.subgraph_sizes)) {
            diffusion.top_n = n;
            rows.push_back({"N=" + std::to_string(n),
                            evaluate_model(checkpoint, graph, train_set, test_set, c.k, diffusion, c.train.threads)});
        }
    }

    std::string rendered;
    if (c.format == "text") {
        rendered = report_table(rows, "subgraph");
    } else if (rows.size() == 1) {
        rendered = report_json(rows.front().report) + "\n";
    } else {
        rendered = "[";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rendered += (i ? ",\n" : "\n") + report_json(rows[i].report);
        }
        rendered += "\n]\n";
    }
    if (c.output.empty()) {
        out << rendered;
    } else {
        open_output(c.output) << rendered;
        spdlog::info("evaluate: report written to {}", c.output);
    }
}

std::vector<EntityId> resolve_users(const std::vector<std::string>& names, const KnowledgeGraph& graph,
                                    const InteractionSet& fallback) {
    if (names.empty()) return fallback.users();
    std::vector<EntityId> out;
    for (const auto& n : names) {
        const auto id = graph.find_entity(n);
        if (!id) throw UsageError("--user: unknown entity '" + n + "'");
        if (graph.kind(*id) != EntityKind::User) throw UsageError("--user: '" + n + "' is not a user");
        out.push_back(*id);
    }
    return out;
}

void run_recommend(const PipelineConfig& c, std::ostream& out) {
    const auto graph = load_graph(c.graph);
    const auto train_set = load_interactions(c.train_set, "--train", graph);
    const auto checkpoint = load_model(c.checkpoint, graph);
    const auto diffusion = diffusion_from(c);
    const auto users = resolve_users(c.users, graph, train_set);

    std::ofstream file;
    if (!c.output.empty()) file = open_output(c.output);
    std::ostream& sink = c.output.empty() ? out : file;
    sink << "user\trank\titem\tscore\tbridge_weight\tsimilarity\tpath\n";
    for (auto user : users) {
        const auto recs = recommend(checkpoint.model, graph, train_set, user, diffusion, c.k);
        write_recommendations(graph, user, recs, sink);
    }
}

void run_explain(const PipelineConfig& c, std::ostream& out) {
    if (c.users.size() != 1) throw UsageError("explain needs exactly one --user");
    std::unique_ptr<ChatClient> client;
    if (c.use_llm) {
        try {
            client = make_chat_client_from_env(c.llm);
        } catch (const ArgumentError& e) {
            throw UsageError(e.what());
        }
    }
    const auto graph = load_graph(c.graph);
    const auto train_set = load_interactions(c.train_set, "--train", graph);
    const auto checkpoint = load_model(c.checkpoint, graph);
    const auto targets = load_targets_or_default(c.targets);
    const auto diffusion = diffusion_from(c);
    const auto user = resolve_users(c.users, graph, train_set).front();

    const auto& model = checkpoint.model;
    const auto sub = diffuse(graph, model.embeddings, model.attention, user, diffusion);
    EntityId item{};
    if (!c.item.empty()) {
        const auto id = graph.find_entity(c.item);
        if (!id || graph.kind(*id) != EntityKind::Item) throw UsageError("--item: '" + c.item + "' is not an item");
        item = *id;
    } else {
        const auto recs = recommend(model, graph, train_set, user, diffusion, 1);
        if (recs.empty()) throw NotFoundError("no recommendation reachable for " + c.users.front());
        item = recs.front().candidate.item;
    }
    const auto paths = extract_paths(sub, graph, item, c.paths);
    for (const auto& p : paths) {
        const auto e = generate_explanation(p, graph, targets, client.get());
        out << "path\t" << serialize_path(p, graph) << "\n"
            << "weight\t" << std::setprecision(9) << p.weight << "\n"
            << "explanation\t" << e.text << "\n";
        if (e.degraded) out << "note\tchat client failed; template explanation shown\n";
    }
}

// ---------------------------------------------------------------- parsing

std::string option_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::string config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return {};
}

void add_common(CLI::App* cmd, PipelineConfig& c, std::string& config_file) {
    cmd->add_option("--config", config_file, "key=value file with flag defaults (flags win)");
    cmd->add_option("--threads", c.train.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
}

void add_diffusion(CLI::App* cmd, PipelineConfig& c) {
    cmd->add_option("--top-n", c.train.top_n, "nodes kept per diffusion step")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", c.train.steps, "diffusion steps")->check(CLI::PositiveNumber);
}

void add_llm(CLI::App* cmd, PipelineConfig& c) {
    cmd->add_flag("--llm", c.use_llm, "use the chat-completions client (key from KGSR_LLM_API_KEY)");
    cmd->add_option("--llm-endpoint", c.llm.endpoint, "chat-completions URL (KGSR_LLM_ENDPOINT overrides)");
    cmd->add_option("--llm-model", c.llm.model, "model name");
    cmd->add_option("--llm-key-env", c.llm.api_key_env, "environment variable holding the API key");
    cmd->add_option("--llm-timeout", c.llm.timeout_seconds, "request timeout in seconds")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--llm-retries", c.llm.max_retries, "retries after a failed request")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--targets", c.targets, "extraction targets file (built-in targets when omitted)");
}

class ScopedLogger {
public:
    ScopedLogger(std::ostream& err, const std::string& level) : previous_(spdlog::default_logger()) {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
        sink->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
        auto logger = std::make_shared<spdlog::logger>("kgsr", std::move(sink));
        logger->set_level(spdlog::level::from_str(level));
        spdlog::set_default_logger(std::move(logger));
    }
    ~ScopedLogger() { spdlog::set_default_logger(previous_); }
    ScopedLogger(const ScopedLogger&) = delete;
    ScopedLogger& operator=(const ScopedLogger&) = delete;

private:
    std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("--config: cannot open '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(path + " line " + std::to_string(line_no) + ": expected key=value");
        auto key = std::string(trim(body.substr(0, eq)));
        auto value = std::string(trim(body.substr(eq + 1)));
        if (key.empty()) throw UsageError(path + " line " + std::to_string(line_no) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    PipelineConfig c;
    std::string config_file;

    CLI::App app{"Knowledge-graph subgraph reasoning recommender", "kgsr"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", "kgsr 0.1.0");

    auto* ingest = app.add_subcommand("ingest", "split interactions and write graph, train and test files");
    ingest->add_option("--triples", c.triples, "triples TSV: head, head kind, relation, tail, tail kind");
    ingest->add_option("--interactions", c.interactions, "interactions TSV: user, item");
    ingest->add_option("--out-dir", c.out_dir, "directory for graph.tsv, train.tsv, test.tsv");
    ingest->add_option("--train-fraction", c.train_fraction, "share of each user's items kept for training");
    ingest->add_option("--purchase-relation", c.purchase_relation, "relation linking users to their items");
    ingest->add_option("--seed", c.split_seed, "split seed");
    add_common(ingest, c, config_file);

    auto* augment = app.add_subcommand("augment", "extract triples from reviews and add them to the graph");
    augment->add_option("--graph", c.graph, "input graph TSV");
    augment->add_option("--reviews", c.reviews, "reviews JSONL: {\"user\", \"item\", \"text\"}");
    augment->add_option("--out", c.output, "output graph TSV");
    augment->add_flag("--offline", c.offline, "use the keyword lexicon (default)");
    augment->add_option("--lexicon", c.lexicon, "lexicon TSV: keyword, relation, value");
    augment->add_option("--test", c.test_set, "held-out pairs whose reviews are skipped");
    augment->add_option("--extractions", c.extractions, "also write the extractions as TSV");
    add_llm(augment, c);
    add_common(augment, c, config_file);

    std::string norm = "L2";
    auto* pretrain = app.add_subcommand("pretrain", "TransE embeddings plus freshly initialized weights");
    pretrain->add_option("--graph", c.graph, "graph TSV");
    pretrain->add_option("--checkpoint", c.checkpoint, "output checkpoint");
    pretrain->add_option("--dim", c.transe.dim, "embedding dimension")->check(CLI::PositiveNumber);
    pretrain->add_option("--epochs", c.transe.epochs, "TransE epochs")->check(CLI::PositiveNumber);
    pretrain->add_option("--margin", c.transe.margin, "ranking margin");
    pretrain->add_option("--learning-rate", c.transe.learning_rate, "SGD step size");
    pretrain->add_option("--negatives", c.transe.negatives, "corrupted triples per positive")
        ->check(CLI::PositiveNumber);
    pretrain->add_option("--norm", norm, "distance norm")->check(CLI::IsMember({"L1", "L2"}));
    pretrain->add_option("--seed", c.transe.seed, "TransE seed");
    pretrain->add_option("--weight-seed", c.train.seed, "seed for the attention and encoder weights");
    add_common(pretrain, c, config_file);

    auto* train_cmd = app.add_subcommand("train", "fine-tune attention, encoder and embeddings");
    train_cmd->add_option("--graph", c.graph, "graph TSV");
    train_cmd->add_option("--train", c.train_set, "training interactions TSV");
    train_cmd->add_option("--pretrained", c.pretrained, "checkpoint from pretrain (TransE runs inline when omitted)");
    train_cmd->add_option("--checkpoint", c.checkpoint, "output checkpoint");
    train_cmd->add_option("--batch-size", c.train.batch_size, "users per batch")->check(CLI::PositiveNumber);
    train_cmd->add_option("--epochs", c.train.epochs, "epochs")->check(CLI::PositiveNumber);
    train_cmd->add_option("--dim", c.train.dim, "embedding dimension")->check(CLI::PositiveNumber);
    train_cmd->add_option("--learning-rate", c.train.learning_rate, "Adam step size");
    train_cmd->add_option("--seed", c.train.seed, "seed for weights and batches");
    train_cmd->add_flag("--contrastive", c.train.contrastive, "add the sampled negative term to the loss");
    add_diffusion(train_cmd, c);
    add_common(train_cmd, c, config_file);

    auto* evaluate = app.add_subcommand("evaluate", "top-K metrics on held-out interactions");
    evaluate->add_option("--graph", c.graph, "graph TSV");
    evaluate->add_option("--train", c.train_set, "training interactions TSV (excluded from rankings)");
    evaluate->add_option("--test", c.test_set, "held-out interactions TSV");
    evaluate->add_option("--checkpoint", c.checkpoint, "trained checkpoint");
    evaluate->add_option("--k", c.k, "cutoff K")->check(CLI::PositiveNumber);
    evaluate->add_option("--subgraph-sizes", c.subgraph_sizes, "comma separated N values, one report row each");
    evaluate->add_option("--format", c.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    evaluate->add_option("--out", c.output, "report file (standard output when omitted)");
    add_diffusion(evaluate, c);
    add_common(evaluate, c, config_file);

    auto* rec = app.add_subcommand("recommend", "top-K items per user with their best path");
    rec->add_option("--graph", c.graph, "graph TSV");
    rec->add_option("--train", c.train_set, "training interactions TSV");
    rec->add_option("--checkpoint", c.checkpoint, "trained checkpoint");
    rec->add_option("--user", c.users, "user name, repeatable (all training users when omitted)");
    rec->add_option("--k", c.k, "items per user")->check(CLI::PositiveNumber);
    rec->add_option("--out", c.output, "TSV output (standard output when omitted)");
    add_diffusion(rec, c);
    add_common(rec, c, config_file);

    auto* explain = app.add_subcommand("explain", "reasoning paths and explanations for one user");
    explain->add_option("--graph", c.graph, "graph TSV");
    explain->add_option("--train", c.train_set, "training interactions TSV");
    explain->add_option("--checkpoint", c.checkpoint, "trained checkpoint");
    explain->add_option("--user", c.users, "user name");
    explain->add_option("--item", c.item, "item to explain (top recommendation when omitted)");
    explain->add_option("--paths", c.paths, "paths to show")->check(CLI::PositiveNumber);
    add_llm(explain, c);
    add_diffusion(explain, c);
    add_common(explain, c, config_file);

    std::vector<std::string> argv = args;
    try {
        if (!argv.empty() && argv.front().rfind("-", 0) != 0) {
            if (const auto path = config_path(argv); !path.empty()) {
                auto* cmd = app.get_subcommand_no_throw(argv.front());
                if (cmd == nullptr) throw UsageError("unknown stage '" + argv.front() + "'");
                std::vector<std::string> injected;
                for (const auto& [key, value] : read_config_file(path)) {
                    const auto flag = option_name(key);
                    if (flag == "--config" || cmd->get_option_no_throw(flag) == nullptr)
                        throw UsageError("config key '" + key + "' is not an option of " + argv.front());
                    if (!flag_given(argv, flag)) injected.push_back(flag + "=" + value);
                }
                argv.insert(argv.begin() + 1, injected.begin(), injected.end());
            }
        }
        std::reverse(argv.begin(), argv.end());
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        err << "kgsr: " << e.what() << "\n";
        return kExitUsage;
    }

    c.transe.norm = norm == "L1" ? Norm::L1 : Norm::L2;
    ScopedLogger logger(err, c.log_level);
    try {
        if (*ingest) run_ingest(c, out);
        else if (*augment) run_augment(c, out);
        else if (*pretrain) run_pretrain(c, out);
        else if (*train_cmd) run_train(c, out);
        else if (*evaluate) run_evaluate(c, out);
        else if (*rec) run_recommend(c, out);
        else if (*explain) run_explain(c, out);
    } catch (const UsageError& e) {
        err << "kgsr: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "kgsr: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace kgsr
