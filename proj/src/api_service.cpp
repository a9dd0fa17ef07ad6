#include "mcqforge/api_service.hpp"

#include "mcqforge/agreement.hpp"
#include "mcqforge/audit.hpp"
#include "mcqforge/error.hpp"
#include "mcqforge/serialization.hpp"
#include "mcqforge/similarity.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <regex>
#include <set>
#include <thread>

namespace mcqforge {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return 400;
    case ErrorCode::unconfigured_role: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::budget_exhausted: return 422;
    case ErrorCode::parse_failure: return 422;
    case ErrorCode::provider_failure: return 502;
    case ErrorCode::invariant_violation: return 500;
    case ErrorCode::config: return 500;
  }
  return 500;
}

namespace {

ApiResponse respond(int status, const json& body) { return {status, body.dump()}; }

json error_body(std::string_view code, const std::string& message, const std::string& detail) {
  return {{"code", code}, {"message", message}, {"detail", detail}};
}

json allowed_actions(SessionStage stage) {
  switch (stage) {
    case SessionStage::gate_G1:
    case SessionStage::gate_G2: return {"approve", "edit", "select", "reject"};
    case SessionStage::gate_G3: return {"approve", "edit", "reject"};
    default: return json::array();
  }
}

const json& body_field(const json& body, const char* key) {
  if (!body.contains(key)) throw Error(ErrorCode::validation, std::string("missing field: ") + key);
  return body.at(key);
}

template <typename T>
T get_field(const json& body, const char* key) {
  try {
    return body_field(body, key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, std::string("bad field: ") + key, e.what());
  }
}

}  // namespace

struct ApiService::Impl {
  Impl(Pipeline& p, BankStore& b, ApiConfig c) : pipeline(p), banks(b), config(std::move(c)) {}

  Pipeline& pipeline;
  BankStore& banks;
  ApiConfig config;

  // Items registered directly (e.g. prototypes accepted elsewhere).
  std::mutex items_mu;
  std::map<std::string, McqItem> external_items;

  std::mutex verdicts_mu;
  std::map<std::string, std::vector<CriterionVerdict>> verdicts;  // non-deterministic, per item

  FeatureRegistry features;

  struct Stored {
    std::string method;
    std::string path;
    ApiResponse response;
  };
  std::mutex idem_mu;
  std::map<std::string, Stored> idempotent;
  std::set<std::string> in_flight;

  std::mutex async_mu;
  std::vector<std::thread> workers;
  std::map<std::string, std::string> async_errors;

  httplib::Server server;
  std::thread server_thread;

  // -------------------------------------------------------------------------
  // lookups

  McqItem item(const std::string& id) {
    if (auto it = pipeline.find_item(id)) return *it;
    std::lock_guard lk(items_mu);
    const auto it = external_items.find(id);
    if (it == external_items.end()) throw Error(ErrorCode::not_found, "unknown item: " + id);
    return it->second;
  }

  std::string session_for_item(const std::string& id) {
    if (auto sid = pipeline.session_of_item(id)) return *sid;
    {
      std::lock_guard lk(items_mu);
      if (external_items.count(id))
        throw Error(ErrorCode::validation, "item is not part of a review session: " + id);
    }
    throw Error(ErrorCode::not_found, "unknown item: " + id);
  }

  std::vector<CriterionVerdict> all_verdicts(const McqItem& it) {
    auto out = lint(it);
    std::lock_guard lk(verdicts_mu);
    if (const auto v = verdicts.find(it.id); v != verdicts.end())
      out.insert(out.end(), v->second.begin(), v->second.end());
    return out;
  }

  json quality_json(const McqItem& it, GoverningPolicy policy) {
    const auto vs = all_verdicts(it);
    json j{{"item_id", it.id}, {"policy", to_string(policy)}, {"verdicts", vs}};
    try {
      const auto report = aggregate(it, vs, policy);
      j["complete"] = true;
      j["accepted"] = report.accepted;
      j["failed_ids"] = report.failed_ids;
      j["compact"] = report.compact();
      j["missing"] = json::array();
    } catch (const Error& e) {
      j["complete"] = false;
      j["accepted"] = false;
      j["compact"] = nullptr;
      std::vector<std::string> missing;
      std::string d = e.detail();
      for (std::size_t pos = 0; pos <= d.size();) {
        const auto comma = d.find(',', pos);
        const auto part = d.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!part.empty()) missing.push_back(part);
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      j["missing"] = missing;
      std::vector<int> failed;
      for (const auto& v : vs)
        if (v.evaluator.kind == EvaluatorKind::deterministic && !v.passed()) failed.push_back(v.criterion.id);
      j["failed_ids"] = failed;
    }
    return j;
  }

  json session_view(const PipelineSession& s) {
    json artifacts{{"concept_map", s.artifacts.concept_map ? json(*s.artifacts.concept_map) : json(nullptr)},
                   {"concept_nodes", s.artifacts.concept_nodes},
                   {"selected_concept", s.artifacts.selected_concept ? json(*s.artifacts.selected_concept)
                                                                     : json(nullptr)},
                   {"qa_text", s.artifacts.qa_text ? json(*s.artifacts.qa_text) : json(nullptr)},
                   {"qa_candidates", s.artifacts.qa_candidates},
                   {"selected_qa", s.artifacts.selected_qa ? json(*s.artifacts.selected_qa) : json(nullptr)}};
    json items = json::array();
    for (const auto& c : s.artifacts.candidates) {
      json ci{{"id", c.id}, {"role", c.role}, {"transcript_id", c.transcript_id}, {"closed", c.closed}};
      if (c.item) {
        ci["parsed"] = true;
        ci["text"] = render_mcq(*c.item);
        ci["item"] = *c.item;
        ci["status"] = to_string(c.item->status);
        ci["quality"] = quality_json(*c.item, config.policy);
      } else {
        ci["parsed"] = false;
        ci["text"] = c.raw;
        ci["parse_problems"] = c.report ? json(*c.report) : json::array();
      }
      if (const auto b = s.budgets.find(c.id); b != s.budgets.end()) ci["budget"] = b->second;
      items.push_back(std::move(ci));
    }
    artifacts["items"] = items;

    json history = json::array();
    for (auto st : s.stage_history) history.push_back(to_string(st));
    const auto gate = s.pending_gate();
    json view{{"id", s.id},
              {"mode", to_string(s.mode)},
              {"stage", to_string(s.stage)},
              {"pending_gate", gate ? json(to_string(*gate)) : json(nullptr)},
              {"allowed_actions", allowed_actions(s.stage)},
              {"artifacts", artifacts},
              {"gate_log", s.gate_log},
              {"budgets", s.budgets},
              {"stage_history", history},
              {"dispatch_count", s.dispatches.size()},
              {"pending_roles", s.pending_roles},
              {"failure", s.failure.empty() ? json(nullptr) : json(s.failure)}};
    {
      std::lock_guard lk(async_mu);
      if (const auto e = async_errors.find(s.id); e != async_errors.end()) view["async_error"] = e->second;
    }
    return view;
  }

  // A call that left the session failed is reported as 502 with the view.
  ApiResponse session_result(const PipelineSession& s, int ok_status, bool was_failed = false) {
    if (s.stage == SessionStage::failed && !was_failed) {
      json body = error_body("provider_failure", "provider dispatch failed; the session can be resumed",
                             s.failure);
      body["session"] = session_view(s);
      return respond(502, body);
    }
    return respond(ok_status, session_view(s));
  }

  // -------------------------------------------------------------------------
  // sessions

  ApiResponse create_session(const json& body) {
    const std::string mode = body.value("mode", std::string("prototype"));
    if (mode == "prototype") {
      const auto input = get_field<GenerationInput>(body, "input");
      return session_result(pipeline.start_prototype_session(input), 201);
    }
    if (mode == "one_step") {
      const auto input = get_field<GenerationInput>(body, "input");
      const auto r = pipeline.run_one_step(input);
      if (r.session.stage == SessionStage::failed) return session_result(r.session, 201);
      json view = session_view(r.session);
      view["items"] = r.items;
      json reports = json::array();
      for (const auto& rep : r.reports) reports.push_back(rep);
      view["parse_reports"] = reports;
      return respond(201, view);
    }
    if (mode == "series_example_based" || mode == "series_concept_derived") {
      McqItem proto;
      if (body.contains("prototype"))
        proto = get_field<McqItem>(body, "prototype");
      else
        proto = item(get_field<std::string>(body, "prototype_id"));
      const auto sm = mode == "series_example_based" ? SeriesMode::example_based : SeriesMode::concept_derived;
      return session_result(pipeline.start_series_session(proto, sm, body.value("count", 5)), 201);
    }
    throw Error(ErrorCode::validation, "unknown session mode: " + mode);
  }

  ApiResponse gate(const std::string& sid, const json& body, bool want_async) {
    const auto decision = [&] {
      try {
        return body.get<GateDecision>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, "malformed gate decision", e.what());
      }
    }();
    const auto before = pipeline.get(sid);
    const bool fans_out = before.stage == SessionStage::gate_G2 &&
                          decision.gate == Gate::G2_question_answer &&
                          decision.action != GateAction::reject;
    if (!(want_async || config.async_fanout) || !fans_out)
      return session_result(pipeline.submit_gate_decision(sid, decision), 200);

    // Check what can be checked synchronously, then fan out in the background.
    if (!before.pending_gate() || *before.pending_gate() != decision.gate)
      throw Error(ErrorCode::conflict, "session is not at " + std::string(to_string(decision.gate)));
    {
      std::lock_guard lk(async_mu);
      async_errors.erase(sid);
      workers.emplace_back([this, sid, decision] {
        try {
          pipeline.submit_gate_decision(sid, decision);
        } catch (const std::exception& e) {
          std::lock_guard lk2(async_mu);
          async_errors[sid] = e.what();
        }
      });
    }
    // session_view takes async_mu itself.
    json view = session_view(before);
    view["accepted_async"] = true;
    return respond(202, view);
  }

  // -------------------------------------------------------------------------
  // metrics

  ApiResponse similarity(const json& body) {
    const auto kind = feature_kind_from_string(body.value("kind", std::string("contextual")));
    const auto params = body.contains("params") ? get_field<TverskyParams>(body, "params") : TverskyParams{};
    const auto ids = get_field<std::vector<std::string>>(body, "item_ids");
    LinguisticPolicy policy;
    if (body.contains("policy")) {
      const auto& p = body.at("policy");
      policy.keep_stopwords = p.value("keep_stopwords", policy.keep_stopwords);
      policy.stemming = p.value("stemming", policy.stemming);
      policy.include_options = p.value("include_options", policy.include_options);
      policy.include_explanation = p.value("include_explanation", policy.include_explanation);
    }
    std::map<std::string, std::vector<std::string>> inline_features;
    if (body.contains("features")) inline_features = get_field<decltype(inline_features)>(body, "features");

    std::vector<FeatureSet> sets;
    for (const auto& id : ids) {
      if (const auto f = inline_features.find(id); f != inline_features.end()) {
        sets.push_back(make_feature_set(id, kind, f->second));
        continue;
      }
      if (kind == FeatureKind::linguistic) {
        if (auto o = features.get(id, kind)) {
          sets.push_back(*o);
          continue;
        }
        sets.push_back(tokenize_linguistic(linguistic_text(item(id), policy), policy, id));
        continue;
      }
      if (auto o = features.get(id, kind)) {
        sets.push_back(*o);
        continue;
      }
      if (!body.contains("concept"))
        throw Error(ErrorCode::validation, "no contextual features for " + id +
                                               "; supply features or a concept for extraction");
      sets.push_back(features.contextual(pipeline.hub(), item(id), get_field<std::string>(body, "concept"),
                                         config.feature_role));
    }
    const auto m = pairwise_matrix(sets, kind, params);
    json out{{"matrix", m},
             {"feature_sets", sets},
             {"summary_all_pairs", summarize_all_pairs(m)},
             {"summary_prototype_row", summarize_prototype_row(m, 0)},
             {"csv", to_csv(m, CsvPrecision::one_decimal)},
             {"csv_full", to_csv(m, CsvPrecision::full)}};
    return respond(200, out);
  }

  ApiResponse conceptual(const json& body) {
    const auto proto = item(get_field<std::string>(body, "prototype_id"));
    std::vector<McqItem> cands;
    for (const auto& id : get_field<std::vector<std::string>>(body, "candidate_ids")) cands.push_back(item(id));
    const auto role = body.value("role", config.evaluator_role);
    return respond(200, conceptual_match(pipeline.hub(), proto, cands, role));
  }

  ApiResponse originality(const json& body) {
    const auto size = body.value("shingle_size", std::size_t{5});
    ShingleIndex index(size);
    for (const auto& doc : get_field<std::vector<std::string>>(body, "corpus")) index.add_document(doc);
    std::string text;
    if (body.contains("text"))
      text = get_field<std::string>(body, "text");
    else
      text = linguistic_text(item(get_field<std::string>(body, "item_id")), {});
    return respond(200, originality_overlap(text, index));
  }

  ApiResponse kappa(const json& body) {
    ContingencyTable t;
    if (body.contains("human") || body.contains("machine")) {
      t = build_contingency(get_field<std::map<std::string, bool>>(body, "human"),
                            get_field<std::map<std::string, bool>>(body, "machine"));
    } else {
      const json& src = body.contains("table") ? body.at("table") : body;
      try {
        t = src.get<ContingencyTable>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, "kappa needs a, b, c, d counts or paired decisions", e.what());
      }
    }
    const auto r = cohen_kappa(t);
    json out = r;
    out["table"] = t;
    out["report"] = kappa_report(t, r, body.value("label", std::string{}));
    if (!r.defined()) {
      json err = error_body("validation", "kappa is undefined when p_e = 1", "");
      err["result"] = out;
      return respond(422, err);
    }
    return respond(200, out);
  }

  // -------------------------------------------------------------------------
  // banks

  json bank_view(const ItemBank& b) {
    json slots = json::array();
    for (const auto& s : b.slots) {
      json sj = s;
      sj["series_size"] = s.series_ids.size();
      if (const auto it = b.items.find(s.prototype_id); it != b.items.end())
        sj["prototype_preview"] = it->second.stem.substr(0, 160);
      slots.push_back(std::move(sj));
    }
    std::size_t min_series = 0;
    for (const auto& s : b.slots)
      min_series = min_series == 0 ? s.series_ids.size() : std::min(min_series, s.series_ids.size());
    return {{"id", b.id},
            {"discipline", b.discipline},
            {"slots", slots},
            {"pools", {{"open", b.pool_ids(Pool::open)}, {"secret", b.pool_ids(Pool::secret)}}},
            {"max_strict_variants", b.slots.empty() ? 0 : min_series}};
  }

  ApiResponse bank_route(const std::string& method, const std::smatch& m, const json& body) {
    const std::string id = m[1].str();
    const std::string tail = m[2].matched ? m[2].str() : "";
    if (method == "GET" && tail.empty()) return respond(200, bank_view(*banks.get(id)));
    if (method == "GET" && tail == "/export") {
      const auto files = export_bank(*banks.get(id));
      return respond(200, {{"bank", json::parse(files.bank_json)}, {"items_jsonl", files.items_jsonl}});
    }
    if (method == "POST" && tail == "/prototypes") {
      const auto concept_label = get_field<std::string>(body, "concept");
      const auto it = body.contains("item") ? get_field<McqItem>(body, "item")
                                            : item(get_field<std::string>(body, "item_id"));
      auto b = banks.mutate(id, [&](ItemBank& bank) { add_prototype(bank, concept_label, it); });
      return respond(201, bank_view(*b));
    }
    if (method == "POST" && tail == "/series") {
      const auto concept_label = get_field<std::string>(body, "concept");
      std::vector<McqItem> items;
      for (const auto& iid : get_field<std::vector<std::string>>(body, "item_ids")) items.push_back(item(iid));
      SeriesEvidence ev;
      if (body.contains("evidence")) {
        ev.match = get_field<ConceptualMatchReport>(body, "evidence");
      } else {
        const auto snapshot = banks.get(id);
        const auto* slot = snapshot->slot(concept_label);
        if (!slot) throw Error(ErrorCode::not_found, "no slot for concept: " + concept_label);
        ev.match = conceptual_match(pipeline.hub(), snapshot->items.at(slot->prototype_id), items,
                                    config.evaluator_role);
      }
      auto b = banks.mutate(id, [&](ItemBank& bank) { attach_series(bank, concept_label, items, ev); });
      json out = bank_view(*b);
      out["evidence"] = ev.match;
      return respond(201, out);
    }
    if (method == "POST" && tail == "/variants") {
      const int n = get_field<int>(body, "n");
      const auto seed = body.value("seed", std::uint64_t{0});
      const std::string mode = body.value("mode", std::string("strict"));
      if (mode != "strict" && mode != "reuse")
        throw Error(ErrorCode::validation, "variant mode must be strict or reuse");
      const auto b = banks.get(id);
      const auto variants =
          compile_variants(*b, n, seed, mode == "reuse" ? VariantMode::reuse : VariantMode::strict);
      json sheets = json::object();
      for (const auto& v : variants) sheets[v.id] = render_exam_sheet(*b, v);
      return respond(200, {{"variants", variants}, {"sheets", sheets}, {"answer_key", render_answer_key(*b, variants)}});
    }
    throw Error(ErrorCode::not_found, "no route: " + method + " /banks/" + id + tail);
  }

  // -------------------------------------------------------------------------
  // routing

  ApiResponse route(const ApiRequest& req) {
    static const std::regex kSession(R"(^/sessions/([^/]+)(/gate|/resume|/audit)?$)");
    static const std::regex kItem(R"(^/items/([^/]+)(/adjust|/edit|/edit/preview|/quality|/verdicts|/evaluate|/features)?$)");
    static const std::regex kBank(R"(^/banks/([^/]+)(/export|/prototypes|/series|/variants)?$)");

    json body = json::object();
    if (!req.body.empty()) {
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::validation, "request body is not valid JSON", e.what());
      }
      if (!body.is_object()) throw Error(ErrorCode::validation, "request body must be a JSON object");
    }
    const auto& method = req.method;
    const auto& path = req.path;
    std::smatch m;

    if (method == "GET" && path == "/health") return respond(200, {{"status", "ok"}});
    if (path == "/sessions") {
      if (method == "POST") return create_session(body);
      if (method == "GET") return respond(200, {{"sessions", pipeline.session_ids()}});
    }
    if (std::regex_match(path, m, kSession)) {
      const std::string sid = m[1].str();
      const std::string tail = m[2].matched ? m[2].str() : "";
      if (method == "GET" && tail.empty()) return respond(200, session_view(pipeline.get(sid)));
      if (method == "POST" && tail == "/gate") {
        const auto q = req.query.find("async");
        return gate(sid, body, q != req.query.end() && (q->second == "1" || q->second == "true"));
      }
      if (method == "POST" && tail == "/resume") return session_result(pipeline.resume(sid), 200, false);
      if (method == "GET" && tail == "/audit") {
        std::map<std::string, std::vector<CriterionVerdict>> vs;
        const auto s = pipeline.get(sid);
        for (const auto& c : s.artifacts.candidates)
          if (c.item) vs[c.id] = all_verdicts(*c.item);
        return respond(200, audit_export(pipeline, pipeline.hub().transcripts(), sid, vs));
      }
    }
    if (path == "/items" && method == "POST") {
      auto it = get_field<McqItem>(body, "item");
      if (it.id.empty()) throw Error(ErrorCode::validation, "item needs an id");
      if (auto problems = validate(it); !problems.empty())
        throw Error(ErrorCode::validation, "item is malformed", problems.front());
      if (it.provenance.empty()) throw Error(ErrorCode::validation, "item needs provenance.source_role");
      if (pipeline.find_item(it.id)) throw Error(ErrorCode::conflict, "item id already exists: " + it.id);
      std::lock_guard lk(items_mu);
      if (!external_items.emplace(it.id, it).second)
        throw Error(ErrorCode::conflict, "item id already exists: " + it.id);
      return respond(201, it);
    }
    if (std::regex_match(path, m, kItem)) {
      const std::string iid = m[1].str();
      const std::string tail = m[2].matched ? m[2].str() : "";
      if (method == "GET" && tail.empty()) return respond(200, item(iid));
      if (method == "POST" && tail == "/adjust")
        return respond(200, pipeline.apply_adjustment_prompt(session_for_item(iid), iid,
                                                             get_field<int>(body, "criterion")));
      if (method == "POST" && tail == "/edit")
        return respond(200, pipeline.apply_manual_edit(session_for_item(iid), iid,
                                                       get_field<std::string>(body, "text")));
      if (method == "POST" && tail == "/edit/preview") {
        const auto sid = session_for_item(iid);
        const auto s = pipeline.get(sid);
        const auto* c = s.candidate(iid);
        const std::string before = c && c->item ? render_mcq(*c->item) : (c ? c->raw : "");
        const auto words = static_cast<int>(word_edit_distance(before, get_field<std::string>(body, "text")));
        BudgetCounter b;
        if (const auto it = s.budgets.find(iid); it != s.budgets.end()) b = it->second;
        return respond(200, {{"distance", words},
                             {"manual_words_edited", b.manual_words_edited},
                             {"manual_words_left", BudgetCounter::kMaxManualWords - b.manual_words_edited},
                             {"allowed", b.can_edit(words)}});
      }
      if (method == "GET" && tail == "/quality") {
        const auto q = req.query.find("policy");
        const auto policy = q == req.query.end() ? config.policy : governing_policy_from_string(q->second);
        return respond(200, quality_json(item(iid), policy));
      }
      if (method == "POST" && tail == "/verdicts") {
        const auto it = item(iid);
        auto incoming = get_field<std::vector<CriterionVerdict>>(body, "verdicts");
        for (const auto& v : incoming)
          if (v.evaluator.kind == EvaluatorKind::deterministic)
            throw Error(ErrorCode::validation, "deterministic verdicts are computed, not submitted");
        {
          std::lock_guard lk(verdicts_mu);
          auto& dst = verdicts[iid];
          dst.insert(dst.end(), incoming.begin(), incoming.end());
        }
        return respond(200, quality_json(it, config.policy));
      }
      if (method == "POST" && tail == "/evaluate") {
        const auto it = item(iid);
        std::vector<CriterionRef> crit = semantic_criteria();
        if (body.contains("criteria")) {
          crit.clear();
          for (const auto& c : body.at("criteria"))
            crit.push_back(criterion_from_string(c.is_number() ? std::to_string(c.get<int>()) : c.get<std::string>()));
        }
        const auto role = body.value("role", config.evaluator_role);
        auto out = evaluate_semantic_criteria(pipeline.hub(), it, crit, role);
        {
          std::lock_guard lk(verdicts_mu);
          auto& dst = verdicts[iid];
          dst.insert(dst.end(), out.begin(), out.end());
        }
        return respond(200, quality_json(it, config.policy));
      }
      if (method == "POST" && tail == "/features") {
        item(iid);
        const auto kind = feature_kind_from_string(body.value("kind", std::string("contextual")));
        auto fs = make_feature_set(iid, kind, get_field<std::vector<std::string>>(body, "features"));
        features.set_override(fs);
        return respond(200, fs);
      }
    }
    if (method == "POST" && path == "/metrics/similarity") return similarity(body);
    if (method == "POST" && path == "/metrics/conceptual") return conceptual(body);
    if (method == "POST" && path == "/metrics/originality") return originality(body);
    if (method == "POST" && path == "/metrics/kappa") return kappa(body);
    if (path == "/banks") {
      if (method == "GET") {
        json list = json::array();
        for (const auto& id : banks.ids()) list.push_back(bank_view(*banks.get(id)));
        return respond(200, {{"banks", list}});
      }
      if (method == "POST") {
        auto b = banks.create(get_field<std::string>(body, "id"), body.value("discipline", std::string{}));
        return respond(201, bank_view(*b));
      }
    }
    if (std::regex_match(path, m, kBank)) return bank_route(method, m, body);
    throw Error(ErrorCode::not_found, "no route: " + method + " " + path);
  }

  ApiResponse handle(const ApiRequest& req) {
    if (config.bearer_token && req.path != "/health") {
      const auto it = req.headers.find("authorization");
      if (it == req.headers.end() || it->second != "Bearer " + *config.bearer_token)
        return respond(401, error_body("unauthorized", "missing or invalid bearer token", ""));
    }

    std::string key;
    if (req.method == "POST") {
      if (const auto it = req.headers.find("idempotency-key"); it != req.headers.end()) key = it->second;
    }
    if (!key.empty()) {
      std::lock_guard lk(idem_mu);
      if (const auto it = idempotent.find(key); it != idempotent.end()) {
        if (it->second.method != req.method || it->second.path != req.path)
          return respond(409, error_body("conflict", "idempotency key reused for a different request",
                                         it->second.method + " " + it->second.path));
        return it->second.response;
      }
      if (!in_flight.insert(key).second)
        return respond(409, error_body("conflict", "request with this idempotency key is in progress", key));
    }

    ApiResponse res;
    try {
      res = route(req);
    } catch (const Error& e) {
      res = respond(http_status(e.code()), error_body(to_string(e.code()), e.what(), e.detail()));
    } catch (const json::exception& e) {
      res = respond(400, error_body("validation", "malformed request", e.what()));
    } catch (const std::exception& e) {
      res = respond(500, error_body("internal", e.what(), ""));
    }

    if (!key.empty()) {
      std::lock_guard lk(idem_mu);
      in_flight.erase(key);
      idempotent[key] = {req.method, req.path, res};
    }
    return res;
  }

  void install_routes(ApiService* owner) {
    auto adapter = [owner](const httplib::Request& hreq, httplib::Response& hres) {
      ApiRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      req.body = hreq.body;
      for (const auto& [k, v] : hreq.params) req.query[k] = v;
      for (const auto& [k, v] : hreq.headers) {
        std::string lk = text::to_lower(k);
        req.headers[lk] = v;
      }
      const auto res = owner->handle(req);
      hres.status = res.status;
      hres.set_content(res.body, "application/json");
    };
    server.Get(".*", adapter);
    server.Post(".*", adapter);
    server.Put(".*", adapter);
    server.Delete(".*", adapter);
  }

  void drain() {
    std::vector<std::thread> pending;
    {
      std::lock_guard lk(async_mu);
      pending.swap(workers);
    }
    for (auto& t : pending)
      if (t.joinable()) t.join();
  }
};

ApiService::ApiService(Pipeline& pipeline, BankStore& banks, ApiConfig config)
    : impl_(std::make_unique<Impl>(pipeline, banks, std::move(config))) {
  impl_->install_routes(this);
}

ApiService::~ApiService() {
  stop();
  impl_->drain();
}

ApiResponse ApiService::handle(const ApiRequest& request) { return impl_->handle(request); }

int ApiService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0)
    bound = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port))
    bound = -1;
  if (bound < 0) throw Error(ErrorCode::config, "cannot bind " + host + ":" + std::to_string(port));
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void ApiService::listen(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::config, "cannot bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

void ApiService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void ApiService::drain() { impl_->drain(); }

}  // namespace mcqforge
