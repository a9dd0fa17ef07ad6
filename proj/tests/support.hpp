#pragma once

// Shared fixture loaders and generators for the test suites.

#include "mcqforge/item.hpp"
#include "mcqforge/pipeline.hpp"
#include "mcqforge/providers.hpp"
#include "mcqforge/serialization.hpp"
#include "mcqforge/similarity.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

using mcqforge::json;

inline std::string fixture_path(const std::string& name) {
  return std::string(MCQFORGE_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json fixture_json(const std::string& name) { return json::parse(slurp(fixture_path(name))); }

inline mcqforge::McqItem parse_or_die(const std::string& raw, const std::string& id = {}) {
  auto r = mcqforge::parse_mcq(raw);
  if (!mcqforge::parsed_ok(r))
    throw std::runtime_error("fixture item did not parse: " +
                             std::get<mcqforge::ParseReport>(r).summary());
  auto item = std::get<mcqforge::McqItem>(r);
  item.id = id;
  return item;
}

struct SessionItem {
  std::string role;
  std::string text;
};

inline std::vector<SessionItem> session_items() {
  std::vector<SessionItem> out;
  const auto doc = fixture_json("photosynthesis_session.json");
  for (const auto& e : doc["expected_items"])
    out.push_back({e["role"], e["text"]});
  return out;
}

inline mcqforge::GenerationInput session_input() {
  return fixture_json("photosynthesis_session.json")["input"].get<mcqforge::GenerationInput>();
}

inline std::vector<mcqforge::MockFixture> session_fixtures() {
  std::vector<mcqforge::MockFixture> fx;
  const auto doc = fixture_json("photosynthesis_session.json");
  for (const auto& f : doc["fixtures"])
    fx.push_back({f["role"].get<std::string>(), f["key"], f["response"]});
  return fx;
}

inline void load_session_fixtures(mcqforge::ProviderHub& hub) {
  hub.mock().load_file(fixture_path("photosynthesis_session.json"));
}

// The ten herd-immunity items, prototype first.
inline std::vector<mcqforge::McqItem> herd_items() {
  std::vector<mcqforge::McqItem> out;
  const auto doc = fixture_json("herd_immunity_series.json");
  for (const auto& e : doc["items"]) {
    auto item = parse_or_die(e["text"].get<std::string>(), e["id"].get<std::string>());
    item.status = mcqforge::ItemStatus::accepted;
    out.push_back(std::move(item));
  }
  return out;
}

inline std::vector<std::string> herd_texts() {
  std::vector<std::string> out;
  const auto doc = fixture_json("herd_immunity_series.json");
  for (const auto& e : doc["items"]) out.push_back(e["text"]);
  return out;
}

inline std::vector<mcqforge::FeatureSet> herd_features() {
  return mcqforge::read_feature_file(fixture_path("herd_immunity_features.json"),
                                     mcqforge::FeatureKind::contextual);
}

inline mcqforge::ReferenceGrid herd_reference(const std::string& kind) {
  mcqforge::ReferenceGrid g;
  const auto doc = fixture_json("herd_immunity_reference.json");
  for (const auto& row : doc[kind]) {
    std::vector<std::optional<double>> r;
    for (const auto& v : row) r.emplace_back(v.get<double>());
    g.push_back(std::move(r));
  }
  return g;
}

// Random well-formed item for round-trip and bank properties.
inline mcqforge::McqItem random_item(std::mt19937_64& rng, const std::string& id) {
  static const std::vector<std::string> vocab = {
      "cells",  "enzyme",   "carbon", "oxygen",  "farmers", "river",   "virus",
      "sample", "students", "forest", "protein", "measured", "levels", "growth",
      "water",  "nitrogen", "light",  "soil",    "team",    "observed"};
  auto pick = [&](std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> n(lo, hi), w(0, vocab.size() - 1);
    std::string s;
    const auto k = n(rng);
    for (std::size_t i = 0; i < k; ++i) s += (i ? " " : "") + vocab[w(rng)];
    return s;
  };
  mcqforge::McqItem item;
  item.id = id;
  const auto sentences = std::uniform_int_distribution<int>(1, 4)(rng);
  for (int i = 0; i < sentences; ++i) {
    auto s = pick(3, 10);
    s[0] = static_cast<char>(std::toupper(s[0]));
    item.stem += (i ? " " : "") + s + ".";
  }
  auto q = pick(3, 8);
  q[0] = static_cast<char>(std::toupper(q[0]));
  item.question = "Which " + q + "?";
  for (int i = 0; i < 5; ++i) item.options.push_back(pick(1, 7) + " " + std::to_string(i));
  item.correct_index = std::uniform_int_distribution<int>(0, 4)(rng);
  if (rng() % 3 == 0) item.explanation = pick(4, 12) + ".";
  item.discipline = "biology";
  item.education_level = "upper secondary";
  item.topic = "topic " + std::to_string(rng() % 7);
  item.status = static_cast<mcqforge::ItemStatus>(rng() % 4);
  item.provenance.source_role = "item_writer_" + std::to_string(1 + rng() % 4);
  item.provenance.session_id = "ses-" + std::to_string(rng() % 100);
  item.provenance.prompt_ids = {"tr-" + std::to_string(rng() % 1000)};
  item.provenance.created_at = mcqforge::Timestamp(std::chrono::milliseconds(1700000000000LL + static_cast<long long>(rng() % 100000000)));
  if (rng() % 2) {
    mcqforge::EditRecord e;
    e.kind = mcqforge::EditKind::manual_edit;
    e.word_delta = static_cast<int>(rng() % 10);
    e.timestamp = item.provenance.created_at;
    e.previous_text = "previous text";
    item.provenance.edits.push_back(e);
  }
  return item;
}

inline std::set<std::string> random_set(std::mt19937_64& rng, std::size_t universe) {
  std::set<std::string> s;
  const auto n = std::uniform_int_distribution<std::size_t>(0, universe)(rng);
  for (std::size_t i = 0; i < n; ++i) s.insert("f" + std::to_string(rng() % universe));
  return s;
}

// Brute force: walk both sets without std algorithms.
inline double brute_tversky(const std::set<std::string>& a, const std::set<std::string>& b, double theta,
                     double alpha, double beta) {
  int both = 0, only_a = 0, only_b = 0;
  for (const auto& x : a) (b.count(x) ? both : only_a)++;
  for (const auto& x : b)
    if (!a.count(x)) ++only_b;
  return theta * both - alpha * only_a - beta * only_b;
}

// Distinct tokens counted with a regex pass instead of the byte scanner.
inline std::size_t oracle_distinct_tokens(std::string s) {
  for (const auto* q : {"\xE2\x80\x98", "\xE2\x80\x99", "'"}) s = std::regex_replace(s, std::regex(q), "");
  std::string cleaned;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == 0xE2 && i + 2 < s.size() && (static_cast<unsigned char>(s[i + 1]) == 0x80 ||
                                          static_cast<unsigned char>(s[i + 1]) == 0x81)) {
      cleaned += ' ';
      i += 2;
    } else if (c >= 0x80) {
      char hex[8];
      std::snprintf(hex, sizeof hex, "zq%02x", c);
      cleaned += hex;
    } else {
      cleaned += static_cast<char>(std::tolower(c));
    }
  }
  static const std::regex kWord("[a-z0-9]+(-[a-z0-9]+)*");
  std::set<std::string> out;
  for (auto it = std::sregex_iterator(cleaned.begin(), cleaned.end(), kWord); it != std::sregex_iterator();
       ++it)
    out.insert(it->str());
  return out.size();
}

struct Cell {
  std::size_t i, j;  // 1-based
  double value;
};

// Reference grid cells confirmed by hand.
inline const std::vector<Cell> kVerifiedCells = {
    {1, 1, 6},  {2, 2, 7},  {3, 3, 7},    {4, 4, 7},  {1, 2, -6.5}, {1, 5, -2}, {1, 6, 0}, {1, 7, -2},
    {1, 8, 0},  {1, 10, 0}, {2, 3, -7}, {3, 9, -3}, {4, 9, -5},   {6, 8, 0},  {6, 10, 2}};

}  // namespace testsupport
