#pragma once

// Item banks: concept slots with an open-pool prototype and a secret-pool
// series, and exam variants compiled from the secret pool.

#include "mcqforge/item.hpp"
#include "mcqforge/similarity.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mcqforge {

enum class Pool { open, secret };

std::string_view to_string(Pool p);
Pool pool_from_string(std::string_view s);

struct ConceptSlot {
  std::string concept_label;
  std::string prototype_id;
  std::vector<std::string> series_ids;
  std::vector<std::string> evidence_refs;  // keys into ItemBank::match_evidence

  bool operator==(const ConceptSlot&) const = default;
};

struct ItemBank {
  std::string id;
  std::string discipline;
  std::vector<ConceptSlot> slots;
  std::map<std::string, Pool> pools;
  std::map<std::string, McqItem> items;  // the line-delimited item store
  std::map<std::string, ConceptualMatchReport> match_evidence;
  std::map<std::string, std::string> matrix_evidence;  // ref -> CSV of the matrix

  const ConceptSlot* slot(std::string_view concept_label) const;
  std::vector<std::string> pool_ids(Pool p) const;
  bool operator==(const ItemBank&) const = default;
};

// Invariant violations; empty means valid.
std::vector<std::string> check_invariants(const ItemBank& bank);

ConceptSlot add_prototype(ItemBank& bank, const std::string& concept_label, const McqItem& item);

struct SeriesEvidence {
  ConceptualMatchReport match;
  std::optional<SimilarityMatrix> matrix;
};

// Every item must be accepted and judged same_concept in `evidence`.
ConceptSlot attach_series(ItemBank& bank, const std::string& concept_label,
                          const std::vector<McqItem>& items, const SeriesEvidence& evidence);

struct TestVariant {
  std::string id;
  std::vector<std::string> item_ids;  // slot order

  bool operator==(const TestVariant&) const = default;
};

enum class VariantMode { strict, reuse };

// Strict mode refuses n above the smallest series; reuse cycles through each
// slot's shuffled series. Selection depends only on the bank and the seed.
std::vector<TestVariant> compile_variants(const ItemBank& bank, int n, std::uint64_t seed,
                                          VariantMode mode = VariantMode::strict);

// Exam sheet without correct-option markers, and a combined answer key.
std::string render_exam_sheet(const ItemBank& bank, const TestVariant& variant);
std::string render_answer_key(const ItemBank& bank, const std::vector<TestVariant>& variants);

struct BankFiles {
  std::string bank_json;
  std::string items_jsonl;
};

BankFiles export_bank(const ItemBank& bank);
// Rejects malformed input and any invariant violation.
ItemBank import_bank(const std::string& bank_json, const std::string& items_jsonl);

void save_bank(const ItemBank& bank, const std::string& dir);  // <id>.json + <id>.items.jsonl
ItemBank load_bank(const std::string& dir, const std::string& id);

// Copy-on-write bank registry. Mutations on one bank are serialized; reads
// take an immutable snapshot.
class BankStore {
 public:
  explicit BankStore(std::optional<std::string> persist_dir = {});

  std::shared_ptr<const ItemBank> create(const std::string& id, const std::string& discipline);
  std::shared_ptr<const ItemBank> get(const std::string& id) const;
  std::vector<std::string> ids() const;
  void put(ItemBank bank);

  template <typename F>
  std::shared_ptr<const ItemBank> mutate(const std::string& id, F&& fn) {
    auto e = entry(id);
    std::lock_guard writer(e->writer);
    ItemBank copy = *snapshot(*e);
    fn(copy);
    auto next = std::make_shared<const ItemBank>(std::move(copy));
    persist(*next);
    std::lock_guard lk(e->publish);
    e->current = next;
    return next;
  }

 private:
  struct Entry {
    std::mutex writer;
    mutable std::mutex publish;
    std::shared_ptr<const ItemBank> current;
  };
  std::shared_ptr<Entry> entry(const std::string& id) const;
  static std::shared_ptr<const ItemBank> snapshot(const Entry& e);
  void persist(const ItemBank& bank) const;

  std::optional<std::string> dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> banks_;
};

}  // namespace mcqforge
