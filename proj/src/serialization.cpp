#include "mcqforge/serialization.hpp"

#include "mcqforge/error.hpp"

#include <fstream>
#include <sstream>

namespace mcqforge {

namespace {

template <typename T>
void opt_to(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
void opt_from(const json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key) && !j.at(key).is_null())
    v = j.at(key).get<T>();
  else
    v.reset();
}

std::string str_or(const json& j, const char* key, std::string fallback = {}) {
  return j.contains(key) && j.at(key).is_string() ? j.at(key).get<std::string>() : fallback;
}

json ts(Timestamp t) { return to_iso8601(t); }
Timestamp ts_from(const json& j, const char* key) {
  return j.contains(key) && j.at(key).is_string() ? from_iso8601(j.at(key).get<std::string>())
                                                  : Timestamp{};
}

}  // namespace

void to_json(json& j, const EditRecord& v) {
  j = json{{"kind", to_string(v.kind)},
           {"timestamp", ts(v.timestamp)},
           {"previous_text", v.previous_text}};
  opt_to(j, "word_delta", v.word_delta);
  opt_to(j, "criterion_targeted", v.criterion_targeted);
}

void from_json(const json& j, EditRecord& v) {
  v.kind = edit_kind_from_string(j.at("kind").get<std::string>());
  opt_from(j, "word_delta", v.word_delta);
  opt_from(j, "criterion_targeted", v.criterion_targeted);
  v.timestamp = ts_from(j, "timestamp");
  v.previous_text = str_or(j, "previous_text");
}

void to_json(json& j, const ProvenanceRecord& v) {
  j = json{{"source_role", v.source_role},
           {"prompt_ids", v.prompt_ids},
           {"created_at", ts(v.created_at)},
           {"edits", v.edits}};
  opt_to(j, "session_id", v.session_id);
}

void from_json(const json& j, ProvenanceRecord& v) {
  v.source_role = str_or(j, "source_role");
  opt_from(j, "session_id", v.session_id);
  v.prompt_ids = j.value("prompt_ids", std::vector<std::string>{});
  v.created_at = ts_from(j, "created_at");
  v.edits = j.value("edits", std::vector<EditRecord>{});
}

void to_json(json& j, const McqItem& v) {
  j = json{{"id", v.id},
           {"stem", v.stem},
           {"question", v.question},
           {"options", v.options},
           {"correct_index", v.correct_index},
           {"discipline", v.discipline},
           {"education_level", v.education_level},
           {"topic", v.topic},
           {"provenance", v.provenance},
           {"status", to_string(v.status)}};
  opt_to(j, "explanation", v.explanation);
}

void from_json(const json& j, McqItem& v) {
  v.id = str_or(j, "id");
  v.stem = j.at("stem").get<std::string>();
  v.question = j.at("question").get<std::string>();
  v.options = j.at("options").get<std::vector<std::string>>();
  v.correct_index = j.at("correct_index").get<int>();
  opt_from(j, "explanation", v.explanation);
  v.discipline = str_or(j, "discipline");
  v.education_level = str_or(j, "education_level");
  v.topic = str_or(j, "topic");
  v.provenance = j.contains("provenance") ? j.at("provenance").get<ProvenanceRecord>()
                                          : ProvenanceRecord{};
  v.status = item_status_from_string(str_or(j, "status", "draft"));
}

void to_json(json& j, const ParseReport& v) {
  j = json::array();
  for (const auto& p : v.problems)
    j.push_back({{"element", to_string(p.element)}, {"message", p.message}});
}

void to_json(json& j, const TranscriptEntry& v) {
  j = json{{"id", v.id},
           {"role", v.role},
           {"prompt", v.prompt},
           {"response", v.response},
           {"latency_ms", v.latency_ms},
           {"timestamp", ts(v.timestamp)},
           {"retry_count", v.retry_count}};
  opt_to(j, "context", v.context);
}

void from_json(const json& j, TranscriptEntry& v) {
  v.id = j.at("id").get<std::string>();
  v.role = j.at("role").get<std::string>();
  v.prompt = j.at("prompt").get<std::string>();
  opt_from(j, "context", v.context);
  v.response = j.at("response").get<std::string>();
  v.latency_ms = j.value("latency_ms", std::int64_t{0});
  v.timestamp = ts_from(j, "timestamp");
  v.retry_count = j.value("retry_count", 0);
}

void to_json(json& j, const BackendConfig& v) {
  j = json{{"kind", v.kind == BackendKind::live ? "live" : "mock"},
           {"base_url", v.base_url},
           {"model_name", v.model_name},
           {"credentials_env", v.credentials_env},
           {"timeout_ms", v.timeout_ms}};
}

void from_json(const json& j, BackendConfig& v) {
  const std::string kind = str_or(j, "kind", "mock");
  if (kind == "live")
    v.kind = BackendKind::live;
  else if (kind == "mock")
    v.kind = BackendKind::mock;
  else
    throw Error(ErrorCode::config, "backend kind must be live or mock: " + kind);
  v.base_url = str_or(j, "base_url");
  v.model_name = str_or(j, "model_name");
  v.credentials_env = str_or(j, "credentials_env");
  v.timeout_ms = j.value("timeout_ms", 60000);
  if (j.contains("api_key") || j.contains("credentials"))
    throw Error(ErrorCode::config,
                "credentials must come from an environment variable (credentials_env)");
}

void to_json(json& j, const RetryPolicy& v) {
  j = json{{"max_retries", v.max_retries},
           {"initial_backoff_ms", v.initial_backoff.count()},
           {"multiplier", v.multiplier}};
}

void from_json(const json& j, RetryPolicy& v) {
  v.max_retries = j.value("max_retries", 3);
  v.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 1000));
  v.multiplier = j.value("multiplier", 2.0);
}

void to_json(json& j, const ProviderConfig& v) {
  j = json{{"roles", v.roles}, {"retry", v.retry}, {"max_response_bytes", v.max_response_bytes}};
  opt_to(j, "mock_fixtures", v.mock_fixtures);
}

void from_json(const json& j, ProviderConfig& v) {
  v.roles.clear();
  for (auto it = j.at("roles").begin(); it != j.at("roles").end(); ++it)
    v.roles[it.key()] = it.value().get<BackendConfig>();
  v.retry = j.contains("retry") ? j.at("retry").get<RetryPolicy>() : RetryPolicy{};
  v.max_response_bytes = j.value("max_response_bytes", std::size_t{256 * 1024});
  opt_from(j, "mock_fixtures", v.mock_fixtures);
}

void to_json(json& j, const ConceptNode& v) {
  j = json{{"number", v.number}, {"label", v.label}, {"depth", v.depth}, {"display", v.display()}};
}

void to_json(json& j, const QaCandidate& v) {
  j = json{{"number", v.number}, {"question", v.question}, {"answer", v.answer}};
}

void from_json(const json& j, QaCandidate& v) {
  v.number = j.at("number").get<int>();
  v.question = j.at("question").get<std::string>();
  v.answer = j.at("answer").get<std::string>();
}

void to_json(json& j, const GenerationInput& v) {
  j = json{{"kind", to_string(v.kind)},
           {"body", v.body},
           {"topic", v.topic},
           {"discipline", v.discipline},
           {"education_level", v.education_level},
           {"speciality", v.speciality},
           {"requested_items", v.requested_items}};
}

void from_json(const json& j, GenerationInput& v) {
  v.kind = generation_kind_from_string(str_or(j, "kind", "learning_objective"));
  v.body = str_or(j, "body");
  v.topic = str_or(j, "topic");
  v.discipline = str_or(j, "discipline");
  v.education_level = str_or(j, "education_level");
  v.speciality = str_or(j, "speciality");
  v.requested_items = j.value("requested_items", 1);
}

void to_json(json& j, const GateDecision& v) {
  j = json{{"gate", to_string(v.gate)},     {"action", to_string(v.action)},
           {"reviewer", v.reviewer},        {"timestamp", ts(v.timestamp)},
           {"seq", v.seq},                  {"closing", v.closing}};
  opt_to(j, "text", v.text);
  opt_to(j, "node", v.node);
  opt_to(j, "index", v.index);
  opt_to(j, "target_item", v.target_item);
}

void from_json(const json& j, GateDecision& v) {
  v.gate = gate_from_string(j.at("gate").get<std::string>());
  v.action = gate_action_from_string(j.at("action").get<std::string>());
  opt_from(j, "text", v.text);
  opt_from(j, "node", v.node);
  opt_from(j, "index", v.index);
  opt_from(j, "target_item", v.target_item);
  v.reviewer = str_or(j, "reviewer");
  v.timestamp = ts_from(j, "timestamp");
}

void to_json(json& j, const BudgetCounter& v) {
  j = json{{"adjustment_prompts_used", v.adjustment_prompts_used},
           {"manual_words_edited", v.manual_words_edited},
           {"adjustment_prompts_left", BudgetCounter::kMaxAdjustmentPrompts - v.adjustment_prompts_used},
           {"manual_words_left", BudgetCounter::kMaxManualWords - v.manual_words_edited}};
}

void to_json(json& j, const CandidateItem& v) {
  j = json{{"id", v.id},
           {"role", v.role},
           {"transcript_id", v.transcript_id},
           {"raw", v.raw},
           {"closed", v.closed}};
  opt_to(j, "item", v.item);
  j["parse_problems"] = v.report ? json(*v.report) : json::array();
}

void to_json(json& j, const DispatchRecord& v) {
  j = json{{"transcript_id", v.transcript_id},
           {"role", v.role},
           {"stage", to_string(v.stage)},
           {"seq", v.seq}};
}

void to_json(json& j, const PipelineSession& v) {
  json artifacts{{"concept_nodes", v.artifacts.concept_nodes},
                 {"qa_candidates", v.artifacts.qa_candidates},
                 {"candidates", v.artifacts.candidates}};
  opt_to(artifacts, "concept_map", v.artifacts.concept_map);
  opt_to(artifacts, "selected_concept", v.artifacts.selected_concept);
  opt_to(artifacts, "qa_text", v.artifacts.qa_text);
  opt_to(artifacts, "selected_qa", v.artifacts.selected_qa);

  json history = json::array();
  for (auto s : v.stage_history) history.push_back(to_string(s));
  j = json{{"id", v.id},
           {"mode", to_string(v.mode)},
           {"stage", to_string(v.stage)},
           {"requested_count", v.requested_count},
           {"failure", v.failure},
           {"pending_roles", v.pending_roles},
           {"artifacts", artifacts},
           {"gate_log", v.gate_log},
           {"budgets", v.budgets},
           {"dispatches", v.dispatches},
           {"stage_history", history}};
  const auto gate = v.pending_gate();
  j["pending_gate"] = gate ? json(to_string(*gate)) : json(nullptr);
  j["failed_from"] = v.failed_from ? json(to_string(*v.failed_from)) : json(nullptr);
  opt_to(j, "input", v.input);
  opt_to(j, "prototype", v.prototype);
}

void to_json(json& j, const CriterionVerdict& v) {
  j = json{{"criterion", to_string(v.criterion)},
           {"verdict", v.passed() ? "pass" : "fail"},
           {"evaluator", {{"kind", to_string(v.evaluator.kind)}, {"name", v.evaluator.name}}},
           {"rationale", v.rationale},
           {"evidence", v.evidence}};
}

void from_json(const json& j, CriterionVerdict& v) {
  v.criterion = criterion_from_string(j.at("criterion").is_number()
                                          ? std::to_string(j.at("criterion").get<int>())
                                          : j.at("criterion").get<std::string>());
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict != "pass" && verdict != "fail")
    throw Error(ErrorCode::validation, "verdict must be pass or fail: " + verdict);
  v.verdict = verdict == "pass" ? Verdict::pass : Verdict::fail;
  if (j.contains("evaluator")) {
    const auto& e = j.at("evaluator");
    v.evaluator.kind = evaluator_kind_from_string(str_or(e, "kind", "human"));
    v.evaluator.name = str_or(e, "name");
  } else {
    v.evaluator = {EvaluatorKind::human, ""};
  }
  v.rationale = str_or(j, "rationale");
  v.evidence = j.value("evidence", std::vector<std::string>{});
}

void to_json(json& j, const QualityReport& v) {
  j = json{{"item_id", v.item_id},
           {"verdicts", v.verdicts},
           {"accepted", v.accepted},
           {"failed_ids", v.failed_ids},
           {"compact", v.compact()}};
}

void to_json(json& j, const TverskyParams& v) {
  j = json{{"theta", v.theta}, {"alpha", v.alpha}, {"beta", v.beta}};
}

void from_json(const json& j, TverskyParams& v) {
  v.theta = j.value("theta", 1.0);
  v.alpha = j.value("alpha", 0.5);
  v.beta = j.value("beta", 0.5);
  v.validate();
}

void to_json(json& j, const FeatureSet& v) {
  j = json{{"item_id", v.item_id}, {"kind", to_string(v.kind)}, {"features", v.features}};
}

void to_json(json& j, const SimilarityMatrix& v) {
  j = json{{"kind", to_string(v.kind)}, {"params", v.params}, {"ids", v.ids}, {"values", v.values}};
}

void to_json(json& j, const MatrixSummary& v) {
  j = json{{"mean", v.mean}, {"sd", v.sd}, {"pairs", v.pairs}, {"text", format_summary(v)}};
}

void to_json(json& j, const ErrataReport& v) {
  json rows = json::array();
  for (const auto& e : v.mismatches)
    rows.push_back({{"row", e.row + 1}, {"col", e.col + 1}, {"computed", e.computed},
                    {"reference", e.reference}});
  j = json{{"compared", v.compared},
           {"matched", v.matched},
           {"unavailable", v.unavailable},
           {"mismatches", rows}};
}

void to_json(json& j, const ConceptualMatchReport& v) {
  json cands = json::array();
  for (const auto& c : v.candidates)
    cands.push_back({{"item_id", c.item_id}, {"same_concept", c.same_concept}});
  j = json{{"prototype_id", v.prototype_id},
           {"main_concepts", v.main_concepts},
           {"candidates", cands},
           {"percentage", v.percentage},
           {"transcript_ids", v.transcript_ids}};
}

void from_json(const json& j, ConceptualMatchReport& v) {
  v.prototype_id = j.at("prototype_id").get<std::string>();
  v.main_concepts = str_or(j, "main_concepts");
  v.candidates.clear();
  for (const auto& c : j.at("candidates"))
    v.candidates.push_back({c.at("item_id").get<std::string>(), c.at("same_concept").get<bool>()});
  v.percentage = conceptual_percentage(v.matches(), v.candidates.size());
  v.transcript_ids = j.value("transcript_ids", std::vector<std::string>{});
}

void to_json(json& j, const OriginalityResult& v) {
  j = json{{"total", v.total},
           {"found", v.found},
           {"percentage", v.percentage},
           {"passed", v.passed},
           {"threshold", kOriginalityThreshold},
           {"matched", v.matched}};
}

void to_json(json& j, const ContingencyTable& v) {
  j = json{{"a", v.a}, {"b", v.b}, {"c", v.c}, {"d", v.d}, {"n", v.n()}};
}

void from_json(const json& j, ContingencyTable& v) {
  v.a = j.at("a").get<std::int64_t>();
  v.b = j.at("b").get<std::int64_t>();
  v.c = j.at("c").get<std::int64_t>();
  v.d = j.at("d").get<std::int64_t>();
}

void to_json(json& j, const KappaResult& v) {
  j = json{{"p_o", v.p_o}, {"p_e", v.p_e}, {"defined", v.defined()}};
  opt_to(j, "kappa", v.kappa);
  j["band"] = v.band ? json(to_string(*v.band)) : json(nullptr);
}

void to_json(json& j, const ConceptSlot& v) {
  j = json{{"concept", v.concept_label},
           {"prototype_id", v.prototype_id},
           {"series_ids", v.series_ids},
           {"evidence_refs", v.evidence_refs}};
}

void to_json(json& j, const TestVariant& v) {
  j = json{{"id", v.id}, {"item_ids", v.item_ids}};
}

void to_json(json& j, const AuditArchive& v) {
  json verdicts = json::object();
  for (const auto& [id, vs] : v.verdicts) verdicts[id] = vs;
  json items = json::array();
  for (const auto& c : v.session.artifacts.candidates) {
    if (!c.item) continue;
    items.push_back({{"id", c.item->id},
                     {"ai_generated", c.item->provenance.source_role != "human"},
                     {"status", to_string(c.item->status)},
                     {"provenance", c.item->provenance}});
  }
  j = json{{"session", v.session},
           {"transcripts", v.transcripts},
           {"gate_log", v.session.gate_log},
           {"items", items},
           {"verdicts", verdicts},
           {"exported_at", ts(v.exported_at)}};
}

std::string to_jsonl(const std::vector<McqItem>& items) {
  std::string out;
  for (const auto& it : items) {
    out += json(it).dump();
    out += '\n';
  }
  return out;
}

std::vector<McqItem> items_from_jsonl(const std::string& text) {
  std::vector<McqItem> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<McqItem>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::validation, "malformed item record on line " + std::to_string(lineno),
                  e.what());
    }
  }
  return out;
}

std::vector<McqItem> read_items_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open item file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '[') {
    try {
      return json::parse(body).get<std::vector<McqItem>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::validation, "malformed item file: " + path, e.what());
    }
  }
  return items_from_jsonl(body);
}

void write_items_file(const std::string& path, const std::vector<McqItem>& items) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::config, "cannot write item file: " + path);
  out << to_jsonl(items);
}

std::vector<FeatureSet> read_feature_file(const std::string& path, FeatureKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open feature file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, "malformed feature file: " + path, e.what());
  }
  if (j.contains("features")) j = j.at("features");
  std::vector<FeatureSet> out;
  // Arrays keep file order; objects are keyed by item id.
  if (j.is_array()) {
    for (const auto& e : j)
      out.push_back(make_feature_set(e.at("item_id").get<std::string>(), kind,
                                     e.at("features").get<std::vector<std::string>>()));
  } else {
    for (auto it = j.begin(); it != j.end(); ++it)
      out.push_back(make_feature_set(it.key(), kind, it.value().get<std::vector<std::string>>()));
  }
  return out;
}

}  // namespace mcqforge
