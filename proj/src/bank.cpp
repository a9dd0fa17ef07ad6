#include "mcqforge/bank.hpp"

#include "mcqforge/error.hpp"
#include "mcqforge/serialization.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mcqforge {

std::string_view to_string(Pool p) { return p == Pool::open ? "open" : "secret"; }

Pool pool_from_string(std::string_view s) {
  if (s == "open") return Pool::open;
  if (s == "secret") return Pool::secret;
  throw Error(ErrorCode::validation, "unknown pool: " + std::string(s));
}

const ConceptSlot* ItemBank::slot(std::string_view concept_label) const {
  for (const auto& s : slots)
    if (s.concept_label == concept_label) return &s;
  return nullptr;
}

std::vector<std::string> ItemBank::pool_ids(Pool p) const {
  std::vector<std::string> out;
  for (const auto& [id, pool] : pools)
    if (pool == p) out.push_back(id);
  return out;
}

std::vector<std::string> check_invariants(const ItemBank& bank) {
  std::vector<std::string> out;
  if (bank.id.empty()) out.push_back("bank id is empty");
  std::set<std::string> concepts, slotted;
  auto claim = [&](const std::string& id) {
    if (!slotted.insert(id).second) out.push_back("item id used twice: " + id);
  };
  for (const auto& s : bank.slots) {
    if (s.concept_label.empty()) out.push_back("slot with empty concept");
    if (!concepts.insert(s.concept_label).second) out.push_back("duplicate concept slot: " + s.concept_label);
    claim(s.prototype_id);
    const auto p = bank.pools.find(s.prototype_id);
    if (p == bank.pools.end() || p->second != Pool::open)
      out.push_back("prototype not in the open pool: " + s.prototype_id);
    for (const auto& id : s.series_ids) {
      claim(id);
      const auto q = bank.pools.find(id);
      if (q == bank.pools.end() || q->second != Pool::secret)
        out.push_back("series item not in the secret pool: " + id);
    }
    for (const auto& ref : s.evidence_refs)
      if (!bank.match_evidence.count(ref) && !bank.matrix_evidence.count(ref))
        out.push_back("dangling evidence reference: " + ref);
  }
  for (const auto& [id, _] : bank.pools)
    if (!slotted.count(id)) out.push_back("pooled item belongs to no slot: " + id);
  for (const auto& [id, item] : bank.items) {
    if (!slotted.count(id)) out.push_back("stored item belongs to no slot: " + id);
    if (item.id != id) out.push_back("item store key does not match item id: " + id);
    if (item.status != ItemStatus::accepted) out.push_back("stored item is not accepted: " + id);
  }
  for (const auto& id : slotted)
    if (!bank.items.count(id)) out.push_back("slotted item missing from the item store: " + id);
  return out;
}

namespace {

void require_storable(const ItemBank& bank, const McqItem& item) {
  if (item.id.empty()) throw Error(ErrorCode::validation, "item has no id");
  if (item.status != ItemStatus::accepted)
    throw Error(ErrorCode::validation, "item is not accepted: " + item.id,
                std::string(to_string(item.status)));
  if (auto problems = validate(item); !problems.empty())
    throw Error(ErrorCode::validation, "item is malformed: " + item.id, problems.front());
  if (bank.pools.count(item.id) || bank.items.count(item.id))
    throw Error(ErrorCode::conflict, "item id already in bank: " + item.id);
}

ConceptSlot& mutable_slot(ItemBank& bank, const std::string& concept_label) {
  for (auto& s : bank.slots)
    if (s.concept_label == concept_label) return s;
  throw Error(ErrorCode::not_found, "no slot for concept: " + concept_label);
}

}  // namespace

ConceptSlot add_prototype(ItemBank& bank, const std::string& concept_label, const McqItem& item) {
  if (text::trim(concept_label).empty()) throw Error(ErrorCode::validation, "concept label is empty");
  if (bank.slot(concept_label)) throw Error(ErrorCode::conflict, "concept already has a prototype: " + concept_label);
  require_storable(bank, item);
  ConceptSlot slot;
  slot.concept_label = concept_label;
  slot.prototype_id = item.id;
  bank.slots.push_back(slot);
  bank.pools[item.id] = Pool::open;
  bank.items[item.id] = item;
  return slot;
}

ConceptSlot attach_series(ItemBank& bank, const std::string& concept_label,
                          const std::vector<McqItem>& items, const SeriesEvidence& evidence) {
  auto& slot = mutable_slot(bank, concept_label);
  if (items.empty()) throw Error(ErrorCode::validation, "series is empty");
  if (evidence.match.prototype_id != slot.prototype_id)
    throw Error(ErrorCode::validation, "match evidence is for prototype " + evidence.match.prototype_id +
                                           ", slot prototype is " + slot.prototype_id);
  std::set<std::string> batch;
  for (const auto& item : items) {
    require_storable(bank, item);
    if (!batch.insert(item.id).second)
      throw Error(ErrorCode::conflict, "item id repeated in series: " + item.id);
    const auto it = std::find_if(evidence.match.candidates.begin(), evidence.match.candidates.end(),
                                 [&](const CandidateMatch& c) { return c.item_id == item.id; });
    if (it == evidence.match.candidates.end())
      throw Error(ErrorCode::validation, "no conceptual match evidence for item " + item.id);
    if (!it->same_concept)
      throw Error(ErrorCode::validation, "item " + item.id + " was judged a different concept");
  }

  const std::string base = "ev-" + std::to_string(bank.match_evidence.size() + bank.matrix_evidence.size() + 1);
  const std::string match_ref = base + "-conceptual";
  bank.match_evidence[match_ref] = evidence.match;
  slot.evidence_refs.push_back(match_ref);
  if (evidence.matrix) {
    const std::string matrix_ref = base + "-" + std::string(to_string(evidence.matrix->kind));
    bank.matrix_evidence[matrix_ref] = to_csv(*evidence.matrix, CsvPrecision::full);
    slot.evidence_refs.push_back(matrix_ref);
  }
  for (const auto& item : items) {
    slot.series_ids.push_back(item.id);
    bank.pools[item.id] = Pool::secret;
    bank.items[item.id] = item;
  }
  return slot;
}

std::vector<TestVariant> compile_variants(const ItemBank& bank, int n, std::uint64_t seed,
                                          VariantMode mode) {
  if (n < 1) throw Error(ErrorCode::validation, "variant count must be >= 1");
  if (bank.slots.empty()) throw Error(ErrorCode::validation, "bank has no concept slots");
  for (const auto& s : bank.slots) {
    if (s.series_ids.empty())
      throw Error(ErrorCode::validation, "slot has no series items: " + s.concept_label);
    if (mode == VariantMode::strict && static_cast<std::size_t>(n) > s.series_ids.size())
      throw Error(ErrorCode::validation,
                  "cannot compile " + std::to_string(n) + " disjoint variants: slot '" + s.concept_label +
                      "' has only " + std::to_string(s.series_ids.size()) + " series items",
                  s.concept_label);
  }

  // Hand-rolled Fisher-Yates so the order does not depend on the standard
  // library's shuffle implementation.
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> order;
  for (const auto& s : bank.slots) {
    auto ids = s.series_ids;
    for (std::size_t i = ids.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(ids[i - 1], ids[j]);
    }
    order.push_back(std::move(ids));
  }

  std::vector<TestVariant> out;
  for (int v = 0; v < n; ++v) {
    TestVariant tv;
    tv.id = bank.id + "-v" + std::to_string(v + 1);
    for (const auto& ids : order) tv.item_ids.push_back(ids[static_cast<std::size_t>(v) % ids.size()]);
    out.push_back(std::move(tv));
  }
  return out;
}

namespace {
const McqItem& stored(const ItemBank& bank, const std::string& id) {
  const auto it = bank.items.find(id);
  if (it == bank.items.end()) throw Error(ErrorCode::not_found, "item not in bank store: " + id);
  return it->second;
}
}  // namespace

std::string render_exam_sheet(const ItemBank& bank, const TestVariant& variant) {
  std::string out = "Variant " + variant.id + "\n";
  if (!bank.discipline.empty()) out += bank.discipline + "\n";
  for (std::size_t i = 0; i < variant.item_ids.size(); ++i) {
    McqItem item = stored(bank, variant.item_ids[i]);
    item.explanation.reset();
    out += "\n" + std::to_string(i + 1) + ". " + render_mcq(item, false) + "\n";
  }
  return out;
}

std::string render_answer_key(const ItemBank& bank, const std::vector<TestVariant>& variants) {
  std::string out;
  for (const auto& v : variants) {
    out += v.id + ":";
    for (std::size_t i = 0; i < v.item_ids.size(); ++i) {
      const auto& item = stored(bank, v.item_ids[i]);
      out += " " + std::to_string(i + 1) + "-" + static_cast<char>('A' + item.correct_index);
    }
    out += "\n";
  }
  return out;
}

BankFiles export_bank(const ItemBank& bank) {
  json j{{"id", bank.id}, {"discipline", bank.discipline}, {"slots", bank.slots}};
  j["pools"] = {{"open", bank.pool_ids(Pool::open)}, {"secret", bank.pool_ids(Pool::secret)}};
  json ev = json::object();
  for (const auto& [ref, report] : bank.match_evidence) ev[ref] = report;
  json mx = json::object();
  for (const auto& [ref, csv] : bank.matrix_evidence) mx[ref] = csv;
  j["evidence"] = {{"conceptual_match", ev}, {"similarity_matrix", mx}};

  std::vector<McqItem> items;
  for (const auto& [_, item] : bank.items) items.push_back(item);
  return {j.dump(2), to_jsonl(items)};
}

ItemBank import_bank(const std::string& bank_json, const std::string& items_jsonl) {
  ItemBank bank;
  try {
    const json j = json::parse(bank_json);
    bank.id = j.at("id").get<std::string>();
    bank.discipline = j.value("discipline", std::string{});
    for (const auto& s : j.at("slots")) {
      ConceptSlot slot;
      slot.concept_label = s.at("concept").get<std::string>();
      slot.prototype_id = s.at("prototype_id").get<std::string>();
      slot.series_ids = s.at("series_ids").get<std::vector<std::string>>();
      slot.evidence_refs = s.value("evidence_refs", std::vector<std::string>{});
      bank.slots.push_back(std::move(slot));
    }
    const auto& pools = j.at("pools");
    for (const char* name : {"open", "secret"}) {
      const Pool p = pool_from_string(name);
      for (const auto& id : pools.at(name).get<std::vector<std::string>>()) {
        if (!bank.pools.emplace(id, p).second)
          throw Error(ErrorCode::invariant_violation, "item is in both pools: " + id);
      }
    }
    if (j.contains("evidence")) {
      const auto& ev = j.at("evidence");
      if (ev.contains("conceptual_match"))
        for (auto it = ev.at("conceptual_match").begin(); it != ev.at("conceptual_match").end(); ++it)
          bank.match_evidence[it.key()] = it.value().get<ConceptualMatchReport>();
      if (ev.contains("similarity_matrix"))
        for (auto it = ev.at("similarity_matrix").begin(); it != ev.at("similarity_matrix").end(); ++it)
          bank.matrix_evidence[it.key()] = it.value().get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, "malformed bank file", e.what());
  }
  for (auto& item : items_from_jsonl(items_jsonl)) {
    const auto id = item.id;
    if (!bank.items.emplace(id, std::move(item)).second)
      throw Error(ErrorCode::invariant_violation, "duplicate item in store: " + id);
  }
  if (auto problems = check_invariants(bank); !problems.empty()) {
    std::string detail;
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::invariant_violation, "bank file violates an invariant: " + problems.front(),
                detail);
  }
  return bank;
}

void save_bank(const ItemBank& bank, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto files = export_bank(bank);
  const auto base = fs::path(dir) / bank.id;
  // Write to temporaries first so a crash never leaves half a bank.
  for (const auto& [ext, body] : {std::pair{".json", &files.bank_json}, {".items.jsonl", &files.items_jsonl}}) {
    const auto path = base.string() + ext;
    {
      std::ofstream out(path + ".tmp");
      if (!out) throw Error(ErrorCode::config, "cannot write bank file: " + path);
      out << *body;
    }
    fs::rename(path + ".tmp", path);
  }
}

ItemBank load_bank(const std::string& dir, const std::string& id) {
  namespace fs = std::filesystem;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::not_found, "cannot open bank file: " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto base = fs::path(dir) / id;
  const fs::path items_path = base.string() + ".items.jsonl";
  return import_bank(slurp(base.string() + ".json"), fs::exists(items_path) ? slurp(items_path) : "");
}

BankStore::BankStore(std::optional<std::string> persist_dir) : dir_(std::move(persist_dir)) {
  if (!dir_ || !std::filesystem::is_directory(*dir_)) return;
  for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    const auto id = name.substr(0, name.size() - 5);
    put(load_bank(*dir_, id));
  }
}

std::shared_ptr<BankStore::Entry> BankStore::entry(const std::string& id) const {
  std::lock_guard lk(mu_);
  const auto it = banks_.find(id);
  if (it == banks_.end()) throw Error(ErrorCode::not_found, "unknown bank: " + id);
  return it->second;
}

std::shared_ptr<const ItemBank> BankStore::snapshot(const Entry& e) {
  std::lock_guard lk(e.publish);
  return e.current;
}

void BankStore::persist(const ItemBank& bank) const {
  if (dir_) save_bank(bank, *dir_);
}

std::shared_ptr<const ItemBank> BankStore::create(const std::string& id, const std::string& discipline) {
  if (id.empty() || id.find_first_of("/\\") != std::string::npos || id[0] == '.')
    throw Error(ErrorCode::validation, "invalid bank id: " + id);
  ItemBank bank;
  bank.id = id;
  bank.discipline = discipline;
  auto e = std::make_shared<Entry>();
  e->current = std::make_shared<const ItemBank>(bank);
  {
    std::lock_guard lk(mu_);
    if (banks_.count(id)) throw Error(ErrorCode::conflict, "bank already exists: " + id);
    banks_[id] = e;
  }
  persist(bank);
  return e->current;
}

std::shared_ptr<const ItemBank> BankStore::get(const std::string& id) const {
  return snapshot(*entry(id));
}

std::vector<std::string> BankStore::ids() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : banks_) out.push_back(id);
  return out;
}

void BankStore::put(ItemBank bank) {
  if (auto problems = check_invariants(bank); !problems.empty())
    throw Error(ErrorCode::invariant_violation, "bank violates an invariant: " + problems.front());
  auto e = std::make_shared<Entry>();
  e->current = std::make_shared<const ItemBank>(std::move(bank));
  std::lock_guard lk(mu_);
  banks_[e->current->id] = e;
}

}  // namespace mcqforge
