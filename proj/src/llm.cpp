// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/llm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "kgsr/error.hpp"
#include "text.hpp"

namespace kgsr {

std::string_view to_string(SubjectRole role) { return role == SubjectRole::User ? "user" : "item"; }

SubjectRole parse_subject_role(std::string_view text) {
    const auto lower = to_lower(text);
    if (lower == "user") return SubjectRole::User;
    if (lower == "item") return SubjectRole::Item;
    throw ParseError("unknown subject role '" + std::string(text) + "' (expected user or item)");
}

std::vector<ExtractionTarget> default_targets() {
    return {
        {"preference", "like", SubjectRole::User,
         "List the products or product features the reviewer says they like.",
         {"like\twash machine", "like\tcolour"}},
        {"brand", "belong", SubjectRole::Item, "Name the brand or company the reviewed product belongs to.",
         {"belong\tMETC"}},
        {"review", "review", SubjectRole::User,
         "List short quality attributes the reviewer states about the product.",
         {"review\treliable", "review\tno smell"}},
        {"sentiment", "sentiment", SubjectRole::User,
         "Identify the sentiment expressed. Answer Positive for a positive sentiment and Negative for a negative one.",
         {"sentiment\tPositive"}},
        {"date", "date", SubjectRole::User,
         "Find significant dates and the event or action attached to each, as date then event.",
         {"date\t2023-05 moved house"}},
    };
}

void validate_targets(std::span<const ExtractionTarget> targets) {
    if (targets.empty()) throw ArgumentError("no extraction targets configured");
    std::set<std::string, std::less<>> seen;
    for (const auto& t : targets) {
        if (t.name.empty() || t.relation_name.empty())
            throw ArgumentError("extraction target needs a name and a relation name");
        if (!seen.insert(t.relation_name).second)
            throw ArgumentError("relation '" + t.relation_name + "' is used by more than one extraction target");
    }
}

std::vector<ExtractionTarget> read_targets(std::istream& in) {
    std::vector<ExtractionTarget> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() < 3 || fields.size() > 4)
            throw ParseError("targets line " + std::to_string(line_no) + ": expected 3 or 4 fields, got " +
                             std::to_string(fields.size()));
        ExtractionTarget t;
        t.name = std::string(trim(fields[0]));
        t.relation_name = std::string(trim(fields[1]));
        try {
            t.subject = parse_subject_role(trim(fields[2]));
        } catch (const ParseError& e) {
            throw ParseError("targets line " + std::to_string(line_no) + ": " + e.what());
        }
        if (fields.size() == 4) t.instruction = std::string(trim(fields[3]));
        if (t.instruction.empty()) t.instruction = "List every " + t.name + " mentioned in the review.";
        out.push_back(std::move(t));
    }
    validate_targets(out);
    return out;
}

std::vector<ExtractionTarget> load_targets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open targets file " + path.string());
    return read_targets(in);
}

const ExtractionTarget* find_target(std::span<const ExtractionTarget> targets, std::string_view relation_name) {
    for (const auto& t : targets) {
        if (t.relation_name == relation_name) return &t;
    }
    return nullptr;
}

namespace {

bool placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '>';
}

// Finds "<name>" starting at `open`; returns the name length or 0. Names may
// contain "->" as in <item->user>.
std::size_t placeholder_at(std::string_view text, std::size_t open) {
    if (text[open] != '<') return 0;
    for (std::size_t i = open + 1; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '>' && !(i + 1 < text.size() && placeholder_char(text[i + 1]) && text[i - 1] == '-')) {
            return i > open + 1 ? i - open - 1 : 0;
        }
        if (!placeholder_char(c)) return 0;
    }
    return 0;
}

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text_.size(); ++i) {
        if (const auto n = placeholder_at(text_, i)) {
            out.emplace_back(text_.substr(i + 1, n));
            i += n + 1;
        }
    }
    return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string, std::less<>>& bindings) const {
    std::string out;
    out.reserve(text_.size() * 2);
    for (std::size_t i = 0; i < text_.size(); ++i) {
        if (const auto n = placeholder_at(text_, i)) {
            const auto name = std::string_view(text_).substr(i + 1, n);
            const auto it = bindings.find(name);
            if (it == bindings.end()) throw ArgumentError("prompt placeholder <" + std::string(name) + "> is unbound");
            out += it->second;
            i += n + 1;
            continue;
        }
        out += text_[i];
    }
    return out;
}

const PromptTemplate& extraction_prompt() {
    static const PromptTemplate prompt(
        "You read product reviews and pull out facts for a knowledge graph.\n"
        "Target: <targets>. <instruction>\n"
        "Reply with one finding per line, written as the relation name <relation>, a tab, then the value. "
        "Reply with nothing else. If there is no finding, reply with an empty message.\n"
        "Example reply:\n<examples>\n"
        "Review: \"<Review>\"\n");
    return prompt;
}

const PromptTemplate& explanation_prompt() {
    static const PromptTemplate prompt(
        "Generate an explanation for the recommendation <item->user>.\n"
        "Predefined targets: <targets>.\n"
        "Reasoning path: <path>\n"
        "Write one or two plain sentences for a product analyst. Mention each step of the path in order and do "
        "not add facts that are not on the path.\n"
        "Example:\n<examples>\n");
    return prompt;
}

std::string render_extraction_prompt(std::string_view review, const ExtractionTarget& target) {
    std::string examples;
    for (const auto& e : target.examples) examples += e + "\n";
    if (examples.empty()) examples = target.relation_name + "\tvalue\n";
    if (!examples.empty() && examples.back() == '\n') examples.pop_back();
    return extraction_prompt().render({{"targets", target.name},
                                       {"instruction", target.instruction},
                                       {"relation", target.relation_name},
                                       {"examples", examples},
                                       {"Review", std::string(review)}});
}

ExtractionResult parse_extraction_reply(std::string_view reply, std::span<const ExtractionTarget> targets,
                                        const std::string& review_id) {
    ExtractionResult result;
    std::istringstream in{std::string(reply)};
    std::string line;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (trim(line).empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2) {
            ++result.warnings;
            continue;
        }
        const auto relation = std::string(trim(fields[0]));
        const auto value = std::string(trim(fields[1]));
        const auto* target = find_target(targets, relation);
        if (value.empty() || target == nullptr || value.find('\n') != std::string::npos) {
            ++result.warnings;
            continue;
        }
        ExtractedTriple t{target->subject, relation, value, review_id, Extractor::Llm};
        if (std::find(result.triples.begin(), result.triples.end(), t) == result.triples.end())
            result.triples.push_back(std::move(t));
    }
    return result;
}

ExtractionResult extract_review_triples(std::string_view review, const std::string& review_id,
                                        std::span<const ExtractionTarget> targets, ChatClient& client) {
    validate_targets(targets);
    ExtractionResult result;
    if (trim(review).empty()) return result;
    for (const auto& target : targets) {
        const auto reply = client.complete(render_extraction_prompt(review, target));
        auto part = parse_extraction_reply(reply, std::span(&target, 1), review_id);
        result.warnings += part.warnings;
        for (auto& t : part.triples) {
            if (std::find(result.triples.begin(), result.triples.end(), t) == result.triples.end())
                result.triples.push_back(std::move(t));
        }
    }
    if (result.warnings > 0) spdlog::warn("review {}: {} reply line(s) dropped", review_id, result.warnings);
    return result;
}

std::vector<LexiconEntry> read_lexicon(std::istream& in) {
    std::vector<LexiconEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw ParseError("lexicon line " + std::to_string(line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        LexiconEntry e{std::string(trim(fields[0])), std::string(trim(fields[1])), std::string(trim(fields[2]))};
        if (e.keyword.empty() || e.relation_name.empty() || e.value.empty())
            throw ParseError("lexicon line " + std::to_string(line_no) + ": empty field");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<LexiconEntry> load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon file " + path.string());
    return read_lexicon(in);
}

namespace {

// Bytes >= 0x80 count as word characters so UTF-8 letters are not boundaries.
bool word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) || c == '_';
}

bool contains_word(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) {
        const bool left = pos == 0 || !word_char(haystack[pos - 1]) || !word_char(needle.front());
        const auto end = pos + needle.size();
        const bool right = end == haystack.size() || !word_char(haystack[end]) || !word_char(needle.back());
        if (left && right) return true;
    }
    return false;
}

}  // namespace

std::vector<ExtractedTriple> offline_extract(std::string_view review, std::span<const LexiconEntry> lexicon,
                                             std::span<const ExtractionTarget> targets, const std::string& review_id) {
    std::vector<ExtractedTriple> out;
    const auto text = to_lower(review);
    for (const auto& entry : lexicon) {
        if (!contains_word(text, to_lower(entry.keyword))) continue;
        const auto* target = find_target(targets, entry.relation_name);
        ExtractedTriple t{target ? target->subject : SubjectRole::User, entry.relation_name, entry.value, review_id,
                          Extractor::Lexicon};
        const bool seen = std::any_of(out.begin(), out.end(), [&](const ExtractedTriple& o) {
            return o.relation_name == t.relation_name && o.value == t.value;
        });
        if (!seen) out.push_back(std::move(t));
    }
    return out;
}

std::vector<ReviewRecord> read_reviews(std::istream& in) {
    std::vector<ReviewRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (trim(line).empty()) continue;
        const auto where = "reviews line " + std::to_string(line_no) + ": ";
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + "invalid JSON (" + e.what() + ")");
        }
        if (!j.is_object()) throw ParseError(where + "expected a JSON object");
        auto field = [&](const char* key) -> std::string {
            const auto it = j.find(key);
            if (it == j.end() || !it->is_string()) throw ParseError(where + "missing string field \"" + key + "\"");
            return it->get<std::string>();
        };
        ReviewRecord r;
        r.user = field("user");
        r.item = field("item");
        r.text = field("text");
        if (const auto it = j.find("id"); it != j.end()) {
            if (!it->is_string()) throw ParseError(where + "\"id\" must be a string");
            r.id = it->get<std::string>();
        } else {
            r.id = "review-" + std::to_string(line_no);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ReviewRecord> load_reviews(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reviews file " + path.string());
    return read_reviews(in);
}

ReviewIndex build_review_index(std::span<const ReviewRecord> reviews, const KnowledgeGraph& graph) {
    ReviewIndex index;
    for (const auto& r : reviews) {
        const auto user = graph.find_entity(r.user);
        const auto item = graph.find_entity(r.item);
        if (!user || !item) continue;
        if (graph.kind(*user) != EntityKind::User || graph.kind(*item) != EntityKind::Item) continue;
        if (!index.emplace(r.id, std::pair{*user, *item}).second)
            throw ArgumentError("duplicate review id '" + r.id + "'");
    }
    return index;
}

std::size_t inject_triples(KnowledgeGraph& graph, std::span<const ExtractedTriple> extracted,
                           const ReviewIndex& review_index, std::span<const ExtractionTarget> targets) {
    struct Planned {
        EntityId subject;
        std::string relation;
        std::optional<EntityId> value_entity;  // empty: intern a new Property
        std::string value;
    };
    std::vector<Planned> plan;
    plan.reserve(extracted.size());
    for (const auto& x : extracted) {
        const auto* target = find_target(targets, x.relation_name);
        if (target == nullptr)
            throw InjectionError("review " + x.review_id + ": relation '" + x.relation_name +
                                 "' has no configured extraction target");
        if (x.value.empty()) throw InjectionError("review " + x.review_id + ": empty extracted value");
        const auto it = review_index.find(x.review_id);
        if (it == review_index.end())
            throw InjectionError("review " + x.review_id + " does not resolve to a known (user, item) pair");
        const auto [user, item] = it->second;
        Planned p;
        p.subject = target->subject == SubjectRole::User ? user : item;
        p.relation = x.relation_name;
        p.value = x.value;
        if (const auto existing = graph.find_entity(x.value)) {
            if (*existing == item) {
                p.value_entity = item;
            } else if (graph.kind(*existing) != EntityKind::Property) {
                throw InjectionError("review " + x.review_id + ": value '" + x.value + "' is already a " +
                                     std::string(to_string(graph.kind(*existing))) + " entity");
            } else {
                p.value_entity = *existing;
            }
        }
        if (p.value_entity && *p.value_entity == p.subject)
            throw InjectionError("review " + x.review_id + ": extraction would link '" + x.value + "' to itself");
        plan.push_back(std::move(p));
    }

    std::size_t added = 0;
    for (const auto& p : plan) {
        const auto tail = p.value_entity ? *p.value_entity : graph.intern_entity(p.value, EntityKind::Property);
        const auto relation = graph.intern_relation(p.relation);
        if (graph.add_triple(Triple{p.subject, relation, tail})) ++added;
    }
    return added;
}

std::string describe_path(const ExplanationPath& path, const KnowledgeGraph& graph) {
    if (path.nodes.empty()) return {};
    std::string out(graph.entity_name(path.nodes.front()));
    for (std::size_t h = 0; h < path.edges.size(); ++h) {
        const auto& e = path.edges[h];
        const auto rel = graph.relation_name(e.relation);
        if (e.direction == Direction::Forward) {
            out += " —" + std::string(rel) + "→ ";
        } else {
            out += " ←" + std::string(rel) + "— ";
        }
        out += graph.entity_name(path.nodes[h + 1]);
    }
    return out;
}

std::string template_explanation(const ExplanationPath& path, const KnowledgeGraph& graph) {
    const auto user = graph.entity_name(path.nodes.front());
    const auto item = graph.entity_name(path.nodes.back());
    return "Because " + describe_path(path, graph) + ", the system recommends " + std::string(item) + " to " +
           std::string(user) + ".";
}

std::string render_explanation_prompt(const ExplanationPath& path, const KnowledgeGraph& graph,
                                      std::span<const ExtractionTarget> targets) {
    std::string names;
    for (const auto& t : targets) names += (names.empty() ? "" : ", ") + t.name;
    if (names.empty()) names = "none";
    const auto user = std::string(graph.entity_name(path.nodes.front()));
    const auto item = std::string(graph.entity_name(path.nodes.back()));
    return explanation_prompt().render(
        {{"item->user", item + " → " + user},
         {"targets", names},
         {"path", describe_path(path, graph)},
         {"examples",
          "Path: User_1 —review→ reliable ←tag— C_1 —sale→ Item_4\n"
          "Answer: User_1 values reliability, and C_1, which sells Item_4, is tagged as reliable, so Item_4 suits "
          "User_1."}});
}

Explanation generate_explanation(const ExplanationPath& path, const KnowledgeGraph& graph,
                                 std::span<const ExtractionTarget> targets, ChatClient* client) {
    if (!validate_path(path, graph)) throw ArgumentError("explanation path does not validate against the graph");
    Explanation out;
    if (client != nullptr) {
        try {
            out.text = client->complete(render_explanation_prompt(path, graph, targets));
            out.from_llm = true;
            return out;
        } catch (const ClientError& e) {
            spdlog::warn("explanation client failed, using template: {}", e.what());
            out.degraded = true;
        }
    }
    out.text = template_explanation(path, graph);
    return out;
}

}  // namespace kgsr
