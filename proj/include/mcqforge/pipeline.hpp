#pragma once

// Staged generation sessions: the three-prompt prototype flow with review
// gates, series generation from an accepted prototype, and the one-step
// baseline. Corrections are bounded by a per-item budget.

#include "mcqforge/concept_map.hpp"
#include "mcqforge/item.hpp"
#include "mcqforge/providers.hpp"
#include "mcqforge/templates.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mcqforge {

enum class GenerationKind { textbook_fragment, learning_objective };

struct GenerationInput {
  GenerationKind kind = GenerationKind::learning_objective;
  std::string body;
  std::string topic;
  std::string discipline;
  std::string education_level;
  std::string speciality;
  int requested_items = 1;
};

std::vector<std::string> validate(const GenerationInput& input);

enum class SessionMode { prototype, series_example_based, series_concept_derived, one_step };
enum class SessionStage {
  awaiting_concept_map,
  gate_G1,
  awaiting_questions,
  gate_G2,
  awaiting_items,
  gate_G3,
  completed,
  rejected,
  failed,
};
enum class Gate { G1_concept_map, G2_question_answer, G3_item };
enum class GateAction { approve, edit, select, reject };

std::string_view to_string(GenerationKind k);
std::string_view to_string(SessionMode m);
std::string_view to_string(SessionStage s);
std::string_view to_string(Gate g);
std::string_view to_string(GateAction a);
GenerationKind generation_kind_from_string(std::string_view s);
SessionMode session_mode_from_string(std::string_view s);
SessionStage session_stage_from_string(std::string_view s);
Gate gate_from_string(std::string_view s);
GateAction gate_action_from_string(std::string_view s);

// Fixed stage order per mode, ending in `completed`.
const std::vector<SessionStage>& stage_sequence(SessionMode mode);
std::optional<Gate> gate_of(SessionStage stage);
bool is_terminal(SessionStage stage);
// True for the next stage in sequence, gate -> rejected, awaiting_* -> failed,
// and failed -> the awaiting stage it failed in.
bool transition_allowed(SessionMode mode, SessionStage from, SessionStage to,
                        std::optional<SessionStage> failed_from = std::nullopt);

struct GateDecision {
  Gate gate = Gate::G1_concept_map;
  GateAction action = GateAction::approve;
  std::optional<std::string> text;         // edit: replacement text
  std::optional<std::string> node;         // select at G1: concept node
  std::optional<int> index;                // select at G2: question number
  std::optional<std::string> target_item;  // G3: candidate id
  std::string reviewer;
  Timestamp timestamp{};
  std::uint64_t seq = 0;   // session-local event order, assigned on submit
  bool closing = false;    // closes its gate (or its G3 candidate)
};

struct BudgetCounter {
  static constexpr int kMaxAdjustmentPrompts = 4;
  static constexpr int kMaxManualWords = 10;

  int adjustment_prompts_used = 0;
  int manual_words_edited = 0;

  bool can_adjust() const { return adjustment_prompts_used < kMaxAdjustmentPrompts; }
  bool can_edit(int words) const { return words >= 0 && manual_words_edited + words <= kMaxManualWords; }
  bool operator==(const BudgetCounter&) const = default;
};

struct CandidateItem {
  std::string id;
  std::string role;
  std::string transcript_id;
  std::string raw;
  std::optional<McqItem> item;
  std::optional<ParseReport> report;
  bool closed = false;
};

struct SessionArtifacts {
  std::optional<std::string> concept_map;
  std::vector<ConceptNode> concept_nodes;
  std::optional<std::string> selected_concept;
  std::optional<std::string> qa_text;
  std::vector<QaCandidate> qa_candidates;
  std::optional<QaCandidate> selected_qa;
  std::vector<CandidateItem> candidates;
};

struct DispatchRecord {
  std::string transcript_id;
  std::string role;
  SessionStage stage = SessionStage::awaiting_concept_map;
  std::uint64_t seq = 0;
};

struct PipelineSession {
  std::string id;
  SessionMode mode = SessionMode::prototype;
  std::optional<GenerationInput> input;
  std::optional<McqItem> prototype;
  int requested_count = 0;
  SessionStage stage = SessionStage::awaiting_concept_map;
  std::optional<SessionStage> failed_from;
  std::string failure;
  std::vector<std::string> pending_roles;  // fan-out roles still owed a response
  SessionArtifacts artifacts;
  std::vector<GateDecision> gate_log;
  std::map<std::string, BudgetCounter> budgets;
  std::vector<DispatchRecord> dispatches;
  std::vector<SessionStage> stage_history;
  std::uint64_t next_seq = 1;

  const CandidateItem* candidate(const std::string& id) const;
  std::optional<Gate> pending_gate() const { return gate_of(stage); }
  std::vector<McqItem> items() const;
};

struct PipelineConfig {
  std::vector<std::string> item_writer_roles = {"item_writer_1", "item_writer_2", "item_writer_3",
                                                "item_writer_4"};
  std::string concept_mapper = "concept_mapper";
  std::string question_writer = "question_writer";
  std::string series_role = "item_writer_1";
  std::string one_step_role = "item_writer_1";
  int expected_options = kDefaultOptionCount;
};

enum class SeriesMode { example_based, concept_derived };

struct OneStepResult {
  PipelineSession session;
  std::vector<McqItem> items;
  std::vector<ParseReport> reports;
};

class Pipeline {
 public:
  Pipeline(ProviderHub& hub, PromptTemplates templates = PromptTemplates::defaults(),
           PipelineConfig config = {});

  // Provider failures do not throw: the session is returned in `failed` and
  // can be resumed. Validation problems throw before any dispatch.
  PipelineSession start_prototype_session(const GenerationInput& input);
  PipelineSession submit_gate_decision(const std::string& session_id, GateDecision decision);
  PipelineSession resume(const std::string& session_id);
  PipelineSession start_series_session(const McqItem& prototype, SeriesMode mode, int count = 5);
  OneStepResult run_one_step(const GenerationInput& input);

  McqItem apply_adjustment_prompt(const std::string& session_id, const std::string& item_id,
                                  int criterion_id);
  McqItem apply_manual_edit(const std::string& session_id, const std::string& item_id,
                            const std::string& new_text);

  PipelineSession get(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  std::optional<std::string> session_of_item(const std::string& item_id) const;
  std::optional<McqItem> find_item(const std::string& item_id) const;

  const PipelineConfig& config() const { return config_; }
  const PromptTemplates& prompt_templates() const { return templates_; }
  ProviderHub& hub() { return hub_; }

 private:
  struct Slot {
    std::mutex writer;
    mutable std::mutex publish;
    std::shared_ptr<const PipelineSession> current;
  };
  class WriteTxn;

  std::shared_ptr<Slot> slot(const std::string& id) const;
  std::shared_ptr<Slot> create_slot(const PipelineSession& session);
  std::string next_session_id();

  void run_stage(PipelineSession& s, Slot& slot);
  void dispatch_concept_map(PipelineSession& s);
  void dispatch_questions(PipelineSession& s);
  void dispatch_items(PipelineSession& s, Slot& slot);
  void dispatch_series(PipelineSession& s);
  void add_candidates(PipelineSession& s, const std::string& role, const DispatchResult& r,
                      const std::string& raw);
  void advance(PipelineSession& s, SessionStage to);
  void fail(PipelineSession& s, const std::string& message);
  McqItem make_item(const PipelineSession& s, McqItem parsed, const std::string& id,
                    const std::string& role, const std::string& transcript_id) const;
  void close_candidate(PipelineSession& s, CandidateItem& c, ItemStatus status);

  ProviderHub& hub_;
  PromptTemplates templates_;
  PipelineConfig config_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::map<std::string, std::string> item_index_;  // item id -> session id
  std::atomic<std::uint64_t> session_counter_{0};
};

}  // namespace mcqforge
