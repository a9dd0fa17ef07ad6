#pragma once

// JSON mappings for the library types. Timestamps are ISO-8601 UTC strings;
// enums use their snake_case names.

#include "mcqforge/agreement.hpp"
#include "mcqforge/audit.hpp"
#include "mcqforge/bank.hpp"
#include "mcqforge/concept_map.hpp"
#include "mcqforge/item.hpp"
#include "mcqforge/pipeline.hpp"
#include "mcqforge/providers.hpp"
#include "mcqforge/quality.hpp"
#include "mcqforge/similarity.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mcqforge {

using nlohmann::json;

void to_json(json& j, const EditRecord& v);
void from_json(const json& j, EditRecord& v);
void to_json(json& j, const ProvenanceRecord& v);
void from_json(const json& j, ProvenanceRecord& v);
void to_json(json& j, const McqItem& v);
void from_json(const json& j, McqItem& v);
void to_json(json& j, const ParseReport& v);

void to_json(json& j, const TranscriptEntry& v);
void from_json(const json& j, TranscriptEntry& v);
void to_json(json& j, const BackendConfig& v);
void from_json(const json& j, BackendConfig& v);
void to_json(json& j, const RetryPolicy& v);
void from_json(const json& j, RetryPolicy& v);
void to_json(json& j, const ProviderConfig& v);
void from_json(const json& j, ProviderConfig& v);

void to_json(json& j, const ConceptNode& v);
void to_json(json& j, const QaCandidate& v);
void from_json(const json& j, QaCandidate& v);
void to_json(json& j, const GenerationInput& v);
void from_json(const json& j, GenerationInput& v);
void to_json(json& j, const GateDecision& v);
void from_json(const json& j, GateDecision& v);
void to_json(json& j, const BudgetCounter& v);
void to_json(json& j, const CandidateItem& v);
void to_json(json& j, const DispatchRecord& v);
void to_json(json& j, const PipelineSession& v);

void to_json(json& j, const CriterionVerdict& v);
void from_json(const json& j, CriterionVerdict& v);
void to_json(json& j, const QualityReport& v);

void to_json(json& j, const TverskyParams& v);
void from_json(const json& j, TverskyParams& v);
void to_json(json& j, const FeatureSet& v);
void to_json(json& j, const SimilarityMatrix& v);
void to_json(json& j, const MatrixSummary& v);
void to_json(json& j, const ErrataReport& v);
void to_json(json& j, const ConceptualMatchReport& v);
void from_json(const json& j, ConceptualMatchReport& v);
void to_json(json& j, const OriginalityResult& v);

void to_json(json& j, const ContingencyTable& v);
void from_json(const json& j, ContingencyTable& v);
void to_json(json& j, const KappaResult& v);

void to_json(json& j, const ConceptSlot& v);
void to_json(json& j, const TestVariant& v);

void to_json(json& j, const AuditArchive& v);

// One item per line.
std::string to_jsonl(const std::vector<McqItem>& items);
std::vector<McqItem> items_from_jsonl(const std::string& text);
std::vector<McqItem> read_items_file(const std::string& path);
void write_items_file(const std::string& path, const std::vector<McqItem>& items);

// item id -> list of feature strings.
std::vector<FeatureSet> read_feature_file(const std::string& path, FeatureKind kind);

}  // namespace mcqforge
