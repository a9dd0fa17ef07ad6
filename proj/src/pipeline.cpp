#include "mcqforge/pipeline.hpp"

#include "mcqforge/criteria.hpp"
#include "mcqforge/error.hpp"

#include <algorithm>
#include <cstdio>
#include <future>

namespace mcqforge {

// ---------------------------------------------------------------------------
// enums

std::string_view to_string(GenerationKind k) {
  return k == GenerationKind::textbook_fragment ? "textbook_fragment" : "learning_objective";
}

std::string_view to_string(SessionMode m) {
  switch (m) {
    case SessionMode::prototype: return "prototype";
    case SessionMode::series_example_based: return "series_example_based";
    case SessionMode::series_concept_derived: return "series_concept_derived";
    case SessionMode::one_step: return "one_step";
  }
  return "prototype";
}

std::string_view to_string(SessionStage s) {
  switch (s) {
    case SessionStage::awaiting_concept_map: return "awaiting_concept_map";
    case SessionStage::gate_G1: return "gate_G1";
    case SessionStage::awaiting_questions: return "awaiting_questions";
    case SessionStage::gate_G2: return "gate_G2";
    case SessionStage::awaiting_items: return "awaiting_items";
    case SessionStage::gate_G3: return "gate_G3";
    case SessionStage::completed: return "completed";
    case SessionStage::rejected: return "rejected";
    case SessionStage::failed: return "failed";
  }
  return "failed";
}

std::string_view to_string(Gate g) {
  switch (g) {
    case Gate::G1_concept_map: return "G1_concept_map";
    case Gate::G2_question_answer: return "G2_question_answer";
    case Gate::G3_item: return "G3_item";
  }
  return "G1_concept_map";
}

std::string_view to_string(GateAction a) {
  switch (a) {
    case GateAction::approve: return "approve";
    case GateAction::edit: return "edit";
    case GateAction::select: return "select";
    case GateAction::reject: return "reject";
  }
  return "approve";
}

namespace {
template <typename E, std::size_t N>
E parse_enum(std::string_view s, const E (&values)[N], const char* what) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::validation, std::string("unknown ") + what + ": " + std::string(s));
}
}  // namespace

GenerationKind generation_kind_from_string(std::string_view s) {
  static const GenerationKind kAll[] = {GenerationKind::textbook_fragment,
                                        GenerationKind::learning_objective};
  return parse_enum(s, kAll, "generation kind");
}

SessionMode session_mode_from_string(std::string_view s) {
  static const SessionMode kAll[] = {SessionMode::prototype, SessionMode::series_example_based,
                                     SessionMode::series_concept_derived, SessionMode::one_step};
  return parse_enum(s, kAll, "session mode");
}

SessionStage session_stage_from_string(std::string_view s) {
  static const SessionStage kAll[] = {
      SessionStage::awaiting_concept_map, SessionStage::gate_G1,   SessionStage::awaiting_questions,
      SessionStage::gate_G2,              SessionStage::awaiting_items, SessionStage::gate_G3,
      SessionStage::completed,            SessionStage::rejected,  SessionStage::failed};
  return parse_enum(s, kAll, "session stage");
}

Gate gate_from_string(std::string_view s) {
  static const Gate kAll[] = {Gate::G1_concept_map, Gate::G2_question_answer, Gate::G3_item};
  if (s == "G1") return Gate::G1_concept_map;
  if (s == "G2") return Gate::G2_question_answer;
  if (s == "G3") return Gate::G3_item;
  return parse_enum(s, kAll, "gate");
}

GateAction gate_action_from_string(std::string_view s) {
  static const GateAction kAll[] = {GateAction::approve, GateAction::edit, GateAction::select,
                                    GateAction::reject};
  return parse_enum(s, kAll, "gate action");
}

// ---------------------------------------------------------------------------
// state machine rules

const std::vector<SessionStage>& stage_sequence(SessionMode mode) {
  static const std::vector<SessionStage> kPrototype = {
      SessionStage::awaiting_concept_map, SessionStage::gate_G1,        SessionStage::awaiting_questions,
      SessionStage::gate_G2,              SessionStage::awaiting_items, SessionStage::gate_G3,
      SessionStage::completed};
  static const std::vector<SessionStage> kSeries = {SessionStage::awaiting_items,
                                                    SessionStage::gate_G3, SessionStage::completed};
  static const std::vector<SessionStage> kOneStep = {SessionStage::awaiting_items,
                                                     SessionStage::completed};
  switch (mode) {
    case SessionMode::prototype: return kPrototype;
    case SessionMode::series_example_based:
    case SessionMode::series_concept_derived: return kSeries;
    case SessionMode::one_step: return kOneStep;
  }
  return kPrototype;
}

std::optional<Gate> gate_of(SessionStage stage) {
  switch (stage) {
    case SessionStage::gate_G1: return Gate::G1_concept_map;
    case SessionStage::gate_G2: return Gate::G2_question_answer;
    case SessionStage::gate_G3: return Gate::G3_item;
    default: return std::nullopt;
  }
}

bool is_terminal(SessionStage stage) {
  return stage == SessionStage::completed || stage == SessionStage::rejected;
}

namespace {
bool is_awaiting(SessionStage s) {
  return s == SessionStage::awaiting_concept_map || s == SessionStage::awaiting_questions ||
         s == SessionStage::awaiting_items;
}
}  // namespace

bool transition_allowed(SessionMode mode, SessionStage from, SessionStage to,
                        std::optional<SessionStage> failed_from) {
  if (from == SessionStage::failed) return failed_from && to == *failed_from;
  if (to == SessionStage::failed) return is_awaiting(from);
  if (to == SessionStage::rejected) return gate_of(from).has_value();
  const auto& seq = stage_sequence(mode);
  const auto it = std::find(seq.begin(), seq.end(), from);
  return it != seq.end() && it + 1 != seq.end() && *(it + 1) == to;
}

std::vector<std::string> validate(const GenerationInput& input) {
  std::vector<std::string> out;
  if (text::trim(input.body).empty()) out.push_back("input body must be non-empty");
  if (input.requested_items < 1) out.push_back("requested_items must be >= 1");
  return out;
}

// ---------------------------------------------------------------------------
// session helpers

const CandidateItem* PipelineSession::candidate(const std::string& cid) const {
  for (const auto& c : artifacts.candidates)
    if (c.id == cid) return &c;
  return nullptr;
}

std::vector<McqItem> PipelineSession::items() const {
  std::vector<McqItem> out;
  for (const auto& c : artifacts.candidates)
    if (c.item) out.push_back(*c.item);
  return out;
}

class Pipeline::WriteTxn {
 public:
  explicit WriteTxn(Slot& slot) : slot_(slot), lock_(slot.writer, std::try_to_lock) {
    if (!lock_.owns_lock())
      throw Error(ErrorCode::conflict, "session is being modified by another request");
    std::lock_guard lk(slot.publish);
    session = *slot.current;
  }

  void publish() {
    auto snap = std::make_shared<const PipelineSession>(session);
    std::lock_guard lk(slot_.publish);
    slot_.current = std::move(snap);
  }

  PipelineSession session;

 private:
  Slot& slot_;
  std::unique_lock<std::mutex> lock_;
};

namespace {

std::string join_messages(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& m : v) {
    if (!out.empty()) out += "; ";
    out += m;
  }
  return out;
}

[[noreturn]] void throw_validation(const std::vector<std::string>& problems) {
  throw Error(ErrorCode::validation, "invalid generation input", join_messages(problems));
}

CandidateItem& mutable_candidate(PipelineSession& s, const std::string& id) {
  for (auto& c : s.artifacts.candidates)
    if (c.id == id) return c;
  throw Error(ErrorCode::not_found, "unknown item in session " + s.id + ": " + id);
}

// A provider response meant to hold one item may still carry a header or
// trailing chatter; fall back to the first chunk that parses.
ParseResult parse_single(const std::string& raw, int expected_options) {
  auto direct = parse_mcq(raw, expected_options);
  if (parsed_ok(direct)) return direct;
  for (const auto& chunk : split_items(raw)) {
    auto r = parse_mcq(chunk, expected_options);
    if (parsed_ok(r)) return r;
  }
  return direct;
}

void copy_text(McqItem& dst, const McqItem& src) {
  dst.stem = src.stem;
  dst.question = src.question;
  dst.options = src.options;
  dst.correct_index = src.correct_index;
  dst.explanation = src.explanation;
}

}  // namespace

Pipeline::Pipeline(ProviderHub& hub, PromptTemplates templates, PipelineConfig config)
    : hub_(hub), templates_(std::move(templates)), config_(std::move(config)) {
  if (config_.item_writer_roles.empty())
    throw Error(ErrorCode::config, "fan-out needs at least one item_writer role");
}

std::string Pipeline::next_session_id() {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ses-%04llu",
                static_cast<unsigned long long>(++session_counter_));
  return buf;
}

std::shared_ptr<Pipeline::Slot> Pipeline::slot(const std::string& id) const {
  std::lock_guard lk(sessions_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session: " + id);
  return it->second;
}

std::shared_ptr<Pipeline::Slot> Pipeline::create_slot(const PipelineSession& session) {
  auto s = std::make_shared<Slot>();
  s->current = std::make_shared<const PipelineSession>(session);
  std::lock_guard lk(sessions_mu_);
  sessions_[session.id] = s;
  return s;
}

PipelineSession Pipeline::get(const std::string& session_id) const {
  auto s = slot(session_id);
  std::lock_guard lk(s->publish);
  return *s->current;
}

std::vector<std::string> Pipeline::session_ids() const {
  std::lock_guard lk(sessions_mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::optional<std::string> Pipeline::session_of_item(const std::string& item_id) const {
  std::lock_guard lk(sessions_mu_);
  const auto it = item_index_.find(item_id);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<McqItem> Pipeline::find_item(const std::string& item_id) const {
  const auto sid = session_of_item(item_id);
  if (!sid) return std::nullopt;
  const auto s = get(*sid);
  const auto* c = s.candidate(item_id);
  if (!c || !c->item) return std::nullopt;
  return c->item;
}

void Pipeline::advance(PipelineSession& s, SessionStage to) {
  if (!transition_allowed(s.mode, s.stage, to, s.failed_from))
    throw Error(ErrorCode::invariant_violation, "illegal stage transition " +
                                                    std::string(to_string(s.stage)) + " -> " +
                                                    std::string(to_string(to)));
  if (s.stage == SessionStage::failed) {
    s.failed_from.reset();
    s.failure.clear();
  }
  if (to == SessionStage::failed) s.failed_from = s.stage;
  s.stage = to;
  s.stage_history.push_back(to);
}

void Pipeline::fail(PipelineSession& s, const std::string& message) {
  s.failure = message;
  advance(s, SessionStage::failed);
}

McqItem Pipeline::make_item(const PipelineSession& s, McqItem parsed, const std::string& id,
                            const std::string& role, const std::string& transcript_id) const {
  McqItem item = std::move(parsed);
  item.id = id;
  if (s.input) {
    item.discipline = s.input->discipline;
    item.education_level = s.input->education_level;
    item.topic = s.input->topic;
  } else if (s.prototype) {
    item.discipline = s.prototype->discipline;
    item.education_level = s.prototype->education_level;
    item.topic = s.prototype->topic;
  }
  item.provenance.source_role = role;
  item.provenance.session_id = s.id;
  item.provenance.prompt_ids = {transcript_id};
  item.provenance.created_at = now();
  item.status = s.mode == SessionMode::one_step ? ItemStatus::draft : ItemStatus::under_review;
  return item;
}

void Pipeline::add_candidates(PipelineSession& s, const std::string& role, const DispatchResult& r,
                              const std::string& raw) {
  CandidateItem c;
  c.id = s.id + "-c" + std::to_string(s.artifacts.candidates.size() + 1);
  c.role = role;
  c.transcript_id = r.entry.id;
  c.raw = raw;
  auto parsed = s.mode == SessionMode::prototype ? parse_single(raw, config_.expected_options)
                                                 : parse_mcq(raw, config_.expected_options);
  if (auto* item = std::get_if<McqItem>(&parsed)) {
    c.item = make_item(s, std::move(*item), c.id, role, r.entry.id);
    s.budgets[c.id] = BudgetCounter{};
  } else {
    c.report = std::get<ParseReport>(parsed);
  }
  {
    std::lock_guard lk(sessions_mu_);
    item_index_[c.id] = s.id;
  }
  s.artifacts.candidates.push_back(std::move(c));
}

void Pipeline::close_candidate(PipelineSession& s, CandidateItem& c, ItemStatus status) {
  c.closed = true;
  if (c.item) c.item->status = status;
  const bool all_closed = std::all_of(s.artifacts.candidates.begin(), s.artifacts.candidates.end(),
                                      [](const CandidateItem& x) { return x.closed; });
  if (all_closed) advance(s, SessionStage::completed);
}

// ---------------------------------------------------------------------------
// stage dispatch

void Pipeline::dispatch_concept_map(PipelineSession& s) {
  const auto& in = *s.input;
  TemplateVars vars{{"education_level", in.education_level},
                    {"discipline", in.discipline},
                    {"speciality", in.speciality},
                    {"input_body", in.body}};
  std::optional<std::string> context;
  std::string_view tpl = templates::concept_map_objective;
  if (in.kind == GenerationKind::textbook_fragment) {
    tpl = templates::concept_map_textbook;
    context = in.body;
  }
  auto r = hub_.dispatch(config_.concept_mapper, templates_.render(tpl, vars), context);
  s.dispatches.push_back({r.entry.id, config_.concept_mapper, s.stage, s.next_seq++});
  s.artifacts.concept_map = r.response;
  s.artifacts.concept_nodes = parse_concept_map(r.response);
  advance(s, SessionStage::gate_G1);
}

void Pipeline::dispatch_questions(PipelineSession& s) {
  TemplateVars vars{{"concept", s.artifacts.selected_concept.value_or("")}};
  auto r = hub_.dispatch(config_.question_writer, templates_.render(templates::question_answer, vars));
  s.dispatches.push_back({r.entry.id, config_.question_writer, s.stage, s.next_seq++});
  s.artifacts.qa_text = r.response;
  s.artifacts.qa_candidates = parse_qa_candidates(r.response);
  advance(s, SessionStage::gate_G2);
}

void Pipeline::dispatch_items(PipelineSession& s, Slot& slot) {
  {
    auto snap = std::make_shared<const PipelineSession>(s);
    std::lock_guard lk(slot.publish);
    slot.current = std::move(snap);
  }
  TemplateVars vars{{"criteria_block", criteria_block()},
                    {"question_answer", s.artifacts.selected_qa ? s.artifacts.selected_qa->render() : ""}};
  const std::string prompt = templates_.render(templates::item_from_question, vars);

  std::vector<std::pair<std::string, std::future<DispatchResult>>> futures;
  for (const auto& role : s.pending_roles)
    futures.emplace_back(role, std::async(std::launch::async,
                                          [this, role, &prompt] { return hub_.dispatch(role, prompt); }));

  std::vector<std::string> failures;
  std::vector<std::string> still_pending;
  for (auto& [role, fut] : futures) {
    try {
      auto r = fut.get();
      s.dispatches.push_back({r.entry.id, role, s.stage, s.next_seq++});
      add_candidates(s, role, r, r.response);
    } catch (const std::exception& e) {
      failures.push_back(role + ": " + e.what());
      still_pending.push_back(role);
    }
  }
  s.pending_roles = std::move(still_pending);
  if (!failures.empty()) {
    fail(s, join_messages(failures));
    return;
  }
  advance(s, SessionStage::gate_G3);
}

void Pipeline::dispatch_series(PipelineSession& s) {
  const McqItem& proto = *s.prototype;
  TemplateVars vars{{"prototype_item", render_mcq(proto)},
                    {"discipline", proto.discipline},
                    {"education_level", proto.education_level},
                    {"count", std::to_string(s.requested_count)},
                    {"criteria_block", criteria_block()}};
  const auto tpl = s.mode == SessionMode::series_example_based ? templates::series_example_based
                                                              : templates::series_concept_derived;
  auto r = hub_.dispatch(config_.series_role, templates_.render(tpl, vars));
  s.dispatches.push_back({r.entry.id, config_.series_role, s.stage, s.next_seq++});
  for (const auto& chunk : split_items(r.response)) add_candidates(s, config_.series_role, r, chunk);
  advance(s, SessionStage::gate_G3);
}

void Pipeline::run_stage(PipelineSession& s, Slot& slot) {
  try {
    switch (s.stage) {
      case SessionStage::awaiting_concept_map: dispatch_concept_map(s); break;
      case SessionStage::awaiting_questions: dispatch_questions(s); break;
      case SessionStage::awaiting_items:
        if (s.mode == SessionMode::prototype) {
          dispatch_items(s, slot);
        } else if (s.mode == SessionMode::one_step) {
          const auto& in = *s.input;
          TemplateVars vars{{"education_level", in.education_level},
                            {"speciality", in.speciality.empty() ? in.discipline : in.speciality},
                            {"discipline", in.discipline},
                            {"count", std::to_string(in.requested_items)},
                            {"input_body", in.kind == GenerationKind::learning_objective
                                               ? in.body
                                               : std::string("see the attached textbook fragment")}};
          std::optional<std::string> context;
          if (in.kind == GenerationKind::textbook_fragment) context = in.body;
          auto r = hub_.dispatch(config_.one_step_role, templates_.render(templates::one_step, vars),
                                 context);
          s.dispatches.push_back({r.entry.id, config_.one_step_role, s.stage, s.next_seq++});
          for (const auto& chunk : split_items(r.response))
            add_candidates(s, config_.one_step_role, r, chunk);
          for (auto& c : s.artifacts.candidates) c.closed = true;
          advance(s, SessionStage::completed);
        } else {
          dispatch_series(s);
        }
        break;
      default: break;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::provider_failure && e.code() != ErrorCode::unconfigured_role) throw;
    fail(s, e.what());
  }
}

// ---------------------------------------------------------------------------
// public operations

PipelineSession Pipeline::start_prototype_session(const GenerationInput& input) {
  if (auto problems = validate(input); !problems.empty()) throw_validation(problems);
  PipelineSession s;
  s.id = next_session_id();
  s.mode = SessionMode::prototype;
  s.input = input;
  s.stage = SessionStage::awaiting_concept_map;
  s.stage_history = {s.stage};
  auto sl = create_slot(s);
  WriteTxn txn(*sl);
  run_stage(txn.session, *sl);
  txn.publish();
  return txn.session;
}

PipelineSession Pipeline::start_series_session(const McqItem& prototype, SeriesMode mode, int count) {
  if (prototype.status != ItemStatus::accepted)
    throw Error(ErrorCode::validation, "series prototype must be accepted", prototype.id);
  if (count < 1) throw Error(ErrorCode::validation, "series count must be >= 1");
  PipelineSession s;
  s.id = next_session_id();
  s.mode = mode == SeriesMode::example_based ? SessionMode::series_example_based
                                             : SessionMode::series_concept_derived;
  s.prototype = prototype;
  s.requested_count = count;
  s.stage = SessionStage::awaiting_items;
  s.stage_history = {s.stage};
  auto sl = create_slot(s);
  WriteTxn txn(*sl);
  run_stage(txn.session, *sl);
  txn.publish();
  return txn.session;
}

OneStepResult Pipeline::run_one_step(const GenerationInput& input) {
  if (auto problems = validate(input); !problems.empty()) throw_validation(problems);
  PipelineSession s;
  s.id = next_session_id();
  s.mode = SessionMode::one_step;
  s.input = input;
  s.requested_count = input.requested_items;
  s.stage = SessionStage::awaiting_items;
  s.stage_history = {s.stage};
  auto sl = create_slot(s);
  WriteTxn txn(*sl);
  run_stage(txn.session, *sl);
  txn.publish();

  OneStepResult out;
  out.session = txn.session;
  for (const auto& c : out.session.artifacts.candidates) {
    if (c.item) out.items.push_back(*c.item);
    if (c.report) out.reports.push_back(*c.report);
  }
  return out;
}

PipelineSession Pipeline::resume(const std::string& session_id) {
  auto sl = slot(session_id);
  WriteTxn txn(*sl);
  auto& s = txn.session;
  if (s.stage != SessionStage::failed)
    throw Error(ErrorCode::conflict, "session is not in the failed stage", std::string(to_string(s.stage)));
  advance(s, *s.failed_from);
  run_stage(s, *sl);
  txn.publish();
  return s;
}

PipelineSession Pipeline::submit_gate_decision(const std::string& session_id, GateDecision d) {
  auto sl = slot(session_id);
  WriteTxn txn(*sl);
  auto& s = txn.session;

  const auto expected = gate_of(s.stage);
  if (!expected)
    throw Error(ErrorCode::conflict, "session is not waiting at a gate",
                std::string(to_string(s.stage)));
  if (*expected != d.gate)
    throw Error(ErrorCode::conflict,
                "decision for " + std::string(to_string(d.gate)) + " but session is at " +
                    std::string(to_string(*expected)));
  if (d.timestamp == Timestamp{}) d.timestamp = now();

  auto require_text = [&] {
    if (!d.text || text::trim(*d.text).empty())
      throw Error(ErrorCode::validation, "edit requires replacement text");
  };

  switch (d.gate) {
    case Gate::G1_concept_map: {
      if (d.action == GateAction::reject) {
        d.closing = true;
        d.seq = s.next_seq++;
        s.gate_log.push_back(d);
        advance(s, SessionStage::rejected);
        break;
      }
      if (d.action == GateAction::edit) {
        require_text();
        s.artifacts.concept_map = *d.text;
        s.artifacts.concept_nodes = parse_concept_map(*d.text);
      }
      const auto& nodes = s.artifacts.concept_nodes;
      std::optional<ConceptNode> chosen;
      if (d.node) {
        chosen = find_concept(nodes, *d.node);
        if (!chosen) throw Error(ErrorCode::validation, "concept node not found: " + *d.node);
      } else if (d.index) {
        if (*d.index < 1 || *d.index > static_cast<int>(nodes.size()))
          throw Error(ErrorCode::validation, "select index out of range");
        chosen = nodes[static_cast<std::size_t>(*d.index - 1)];
      } else if (d.action != GateAction::edit) {
        if (nodes.size() != 1)
          throw Error(ErrorCode::validation, "select a concept node to continue");
        chosen = nodes.front();
      }
      d.seq = s.next_seq++;
      d.closing = chosen.has_value();
      s.gate_log.push_back(d);
      if (!chosen) break;
      s.artifacts.selected_concept = chosen->display();
      advance(s, SessionStage::awaiting_questions);
      run_stage(s, *sl);
      break;
    }
    case Gate::G2_question_answer: {
      if (d.action == GateAction::reject) {
        d.closing = true;
        d.seq = s.next_seq++;
        s.gate_log.push_back(d);
        advance(s, SessionStage::rejected);
        break;
      }
      if (d.action == GateAction::edit) {
        require_text();
        s.artifacts.qa_text = *d.text;
        s.artifacts.qa_candidates = parse_qa_candidates(*d.text);
      }
      const auto& cands = s.artifacts.qa_candidates;
      std::optional<QaCandidate> chosen;
      if (d.index) {
        for (const auto& c : cands)
          if (c.number == *d.index) chosen = c;
        if (!chosen) throw Error(ErrorCode::validation, "select index out of range");
      } else if (d.node) {
        throw Error(ErrorCode::validation, "G2 selects a question by number");
      } else if (d.action != GateAction::edit) {
        if (cands.size() != 1) throw Error(ErrorCode::validation, "select a question to continue");
        chosen = cands.front();
      }
      d.seq = s.next_seq++;
      d.closing = chosen.has_value();
      s.gate_log.push_back(d);
      if (!chosen) break;
      s.artifacts.selected_qa = chosen;
      s.pending_roles = config_.item_writer_roles;
      advance(s, SessionStage::awaiting_items);
      run_stage(s, *sl);
      break;
    }
    case Gate::G3_item: {
      if (d.action == GateAction::select)
        throw Error(ErrorCode::validation, "select is only valid at G1 and G2");
      if (!d.target_item) {
        if (d.action != GateAction::reject)
          throw Error(ErrorCode::validation, "G3 decisions name a target item");
        d.closing = true;
        d.seq = s.next_seq++;
        s.gate_log.push_back(d);
        for (auto& c : s.artifacts.candidates) {
          c.closed = true;
          if (c.item) c.item->status = ItemStatus::rejected;
        }
        advance(s, SessionStage::rejected);
        break;
      }
      auto& c = mutable_candidate(s, *d.target_item);
      if (c.closed) throw Error(ErrorCode::conflict, "item already decided: " + c.id);
      ItemStatus outcome = ItemStatus::accepted;
      if (d.action == GateAction::approve) {
        if (!c.item)
          throw Error(ErrorCode::validation, "candidate did not parse; edit or reject it",
                      c.report ? c.report->summary() : "");
      } else if (d.action == GateAction::reject) {
        outcome = ItemStatus::rejected;
      } else {
        require_text();
        const std::string before = c.item ? render_mcq(*c.item) : c.raw;
        const auto words = static_cast<int>(word_edit_distance(before, *d.text));
        auto& budget = s.budgets[c.id];
        if (!budget.can_edit(words))
          throw Error(ErrorCode::budget_exhausted, "manual edit would exceed the 10-word budget",
                      "used " + std::to_string(budget.manual_words_edited) + ", edit " +
                          std::to_string(words));
        auto parsed = parse_mcq(*d.text, config_.expected_options);
        if (!parsed_ok(parsed))
          throw Error(ErrorCode::parse_failure, "edited text does not parse",
                      std::get<ParseReport>(parsed).summary());
        const auto& revised = std::get<McqItem>(parsed);
        if (!c.item) c.item = make_item(s, revised, c.id, c.role, c.transcript_id);
        copy_text(*c.item, revised);
        c.item->provenance.edits.push_back(
            {EditKind::manual_edit, words, std::nullopt, now(), before});
        budget.manual_words_edited += words;
      }
      d.closing = true;
      d.seq = s.next_seq++;
      s.gate_log.push_back(d);
      close_candidate(s, c, outcome);
      break;
    }
  }
  txn.publish();
  return s;
}

McqItem Pipeline::apply_adjustment_prompt(const std::string& session_id, const std::string& item_id,
                                          int criterion_id) {
  auto sl = slot(session_id);
  WriteTxn txn(*sl);
  auto& s = txn.session;
  auto& c = mutable_candidate(s, item_id);
  if (c.closed || !c.item) throw Error(ErrorCode::validation, "item is not under review: " + item_id);
  if (criterion_id < 1 || criterion_id > kCriterionCount)
    throw Error(ErrorCode::validation, "criterion id must be in [1, 9]");
  auto& budget = s.budgets[c.id];
  if (!budget.can_adjust())
    throw Error(ErrorCode::budget_exhausted, "adjustment budget exhausted",
                std::to_string(budget.adjustment_prompts_used) + " of 4 prompts used");

  const std::string before = render_mcq(*c.item);
  TemplateVars vars{{"criteria_block", criteria_block({criterion_id})}, {"prototype_item", before}};
  auto r = hub_.dispatch(c.role, templates_.render(templates::adjustment, vars));
  s.dispatches.push_back({r.entry.id, c.role, s.stage, s.next_seq++});
  budget.adjustment_prompts_used += 1;

  auto parsed = parse_single(r.response, config_.expected_options);
  if (!parsed_ok(parsed)) {
    txn.publish();
    throw Error(ErrorCode::parse_failure, "revised item does not parse",
                std::get<ParseReport>(parsed).summary());
  }
  copy_text(*c.item, std::get<McqItem>(parsed));
  c.item->provenance.prompt_ids.push_back(r.entry.id);
  c.item->provenance.edits.push_back(
      {EditKind::adjustment_prompt, std::nullopt, criterion_id, now(), before});
  txn.publish();
  return *c.item;
}

McqItem Pipeline::apply_manual_edit(const std::string& session_id, const std::string& item_id,
                                    const std::string& new_text) {
  auto sl = slot(session_id);
  WriteTxn txn(*sl);
  auto& s = txn.session;
  auto& c = mutable_candidate(s, item_id);
  if (c.closed || !c.item) throw Error(ErrorCode::validation, "item is not under review: " + item_id);

  const std::string before = render_mcq(*c.item);
  const auto words = static_cast<int>(word_edit_distance(before, new_text));
  auto& budget = s.budgets[c.id];
  if (!budget.can_edit(words))
    throw Error(ErrorCode::budget_exhausted, "manual edit would exceed the 10-word budget",
                "used " + std::to_string(budget.manual_words_edited) + ", edit " +
                    std::to_string(words));
  auto parsed = parse_mcq(new_text, config_.expected_options);
  if (!parsed_ok(parsed))
    throw Error(ErrorCode::parse_failure, "edited text does not parse",
                std::get<ParseReport>(parsed).summary());

  copy_text(*c.item, std::get<McqItem>(parsed));
  c.item->provenance.edits.push_back({EditKind::manual_edit, words, std::nullopt, now(), before});
  budget.manual_words_edited += words;
  txn.publish();
  return *c.item;
}

}  // namespace mcqforge
