// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Review-to-graph augmentation and explanation rendering.
//
// Review text is turned into (subject, relation, value) extractions either by
// a chat-completion model prompted once per configured target, or offline by
// a keyword lexicon. Extractions are injected as new Property entities linked
// to the review's user or item, according to each target's subject role.
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgsr/graph.hpp"
#include "kgsr/scorer.hpp"

namespace kgsr {

enum class SubjectRole { User, Item };

std::string_view to_string(SubjectRole role);
SubjectRole parse_subject_role(std::string_view text);

struct ExtractionTarget {
    std::string name;
    std::string relation_name;
    SubjectRole subject = SubjectRole::User;
    std::string instruction;  // task sentence placed in the extraction prompt
    std::vector<std::string> examples;  // few-shot "relation<TAB>value" reply lines
};

// Targets used when no targets file is given.
std::vector<ExtractionTarget> default_targets();

// Throws ArgumentError on an empty list or a repeated relation name.
void validate_targets(std::span<const ExtractionTarget> targets);

// Targets file: tab separated `name  relation_name  user|item  instruction`,
// '#' comments allowed; the instruction column is optional.
std::vector<ExtractionTarget> read_targets(std::istream& in);
std::vector<ExtractionTarget> load_targets(const std::filesystem::path& path);

const ExtractionTarget* find_target(std::span<const ExtractionTarget> targets, std::string_view relation_name);

enum class Extractor { Llm, Lexicon };

struct ExtractedTriple {
    SubjectRole subject = SubjectRole::User;
    std::string relation_name;
    std::string value;
    std::string review_id;
    Extractor extractor = Extractor::Lexicon;

    friend bool operator==(const ExtractedTriple&, const ExtractedTriple&) = default;
};

// Template text with <Name> placeholders. Rendering substitutes every
// placeholder in the template (bound values are not rescanned) and throws
// ArgumentError if one is left unbound.
class PromptTemplate {
public:
    explicit PromptTemplate(std::string text) : text_(std::move(text)) {}

    std::string render(const std::map<std::string, std::string, std::less<>>& bindings) const;
    std::vector<std::string> placeholders() const;
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

const PromptTemplate& extraction_prompt();
const PromptTemplate& explanation_prompt();

std::string render_extraction_prompt(std::string_view review, const ExtractionTarget& target);

// Chat-completion transport. Implementations must be safe to call from
// several threads.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    // Returns the assistant message text; throws ClientError on failure.
    virtual std::string complete(const std::string& prompt) = 0;
};

struct ExtractionResult {
    std::vector<ExtractedTriple> triples;
    std::size_t warnings = 0;  // reply lines that could not be used
};

// Parses "relation<TAB>value" lines; blank lines are ignored, every other
// line that does not parse, or names a relation outside `targets`, counts as
// a warning.
ExtractionResult parse_extraction_reply(std::string_view reply, std::span<const ExtractionTarget> targets,
                                        const std::string& review_id);

// One prompt per target. Empty review -> empty result without a call.
ExtractionResult extract_review_triples(std::string_view review, const std::string& review_id,
                                        std::span<const ExtractionTarget> targets, ChatClient& client);

struct LexiconEntry {
    std::string keyword;
    std::string relation_name;
    std::string value;
};

// Lexicon file: tab separated `keyword  relation_name  property_value`.
std::vector<LexiconEntry> read_lexicon(std::istream& in);
std::vector<LexiconEntry> load_lexicon(const std::filesystem::path& path);

// Case-insensitive whole-word keyword scan, one extraction per matching entry
// (deduplicated on relation and value), in lexicon order. The subject role
// comes from the matching target; relations without a target default to User
// and are rejected later by inject_triples.
std::vector<ExtractedTriple> offline_extract(std::string_view review, std::span<const LexiconEntry> lexicon,
                                             std::span<const ExtractionTarget> targets = {},
                                             const std::string& review_id = {});

struct ReviewRecord {
    std::string id;
    std::string user;
    std::string item;
    std::string text;
};

// Reviews file: one JSON object per line with "user", "item", "text" and an
// optional "id" (defaults to "review-<line number>").
std::vector<ReviewRecord> read_reviews(std::istream& in);
std::vector<ReviewRecord> load_reviews(const std::filesystem::path& path);

using ReviewIndex = std::map<std::string, std::pair<EntityId, EntityId>, std::less<>>;

// Reviews whose user or item is not in the graph are left out of the index.
ReviewIndex build_review_index(std::span<const ReviewRecord> reviews, const KnowledgeGraph& graph);

// Adds the extractions to the graph and returns how many triples were new.
// Values are interned as Property entities, except that a value naming the
// review's own item links to that item. Everything is validated before the
// graph is touched; failures raise InjectionError.
std::size_t inject_triples(KnowledgeGraph& graph, std::span<const ExtractedTriple> extracted,
                           const ReviewIndex& review_index, std::span<const ExtractionTarget> targets);

// "User_1 —review→ reliable ←tag— C_1 —sale→ Item_4"
std::string describe_path(const ExplanationPath& path, const KnowledgeGraph& graph);

struct Explanation {
    std::string text;
    bool from_llm = false;
    bool degraded = false;  // a client was given but failed; text is the template
};

std::string template_explanation(const ExplanationPath& path, const KnowledgeGraph& graph);

std::string render_explanation_prompt(const ExplanationPath& path, const KnowledgeGraph& graph,
                                      std::span<const ExtractionTarget> targets);

// Throws ArgumentError for a path that does not validate against the graph.
Explanation generate_explanation(const ExplanationPath& path, const KnowledgeGraph& graph,
                                 std::span<const ExtractionTarget> targets, ChatClient* client);

}  // namespace kgsr
