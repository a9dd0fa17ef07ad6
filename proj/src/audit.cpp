#include "mcqforge/audit.hpp"

#include "mcqforge/error.hpp"

#include <set>

namespace mcqforge {

AuditArchive audit_export(const Pipeline& pipeline, const TranscriptLog& log,
                          const std::string& session_id,
                          const std::map<std::string, std::vector<CriterionVerdict>>& verdicts) {
  AuditArchive a;
  a.session = pipeline.get(session_id);
  std::vector<std::string> ids;
  for (const auto& d : a.session.dispatches) ids.push_back(d.transcript_id);
  a.transcripts = log.select(ids);
  for (const auto& c : a.session.artifacts.candidates) {
    const auto it = verdicts.find(c.id);
    if (it != verdicts.end()) a.verdicts[c.id] = it->second;
  }
  a.exported_at = now();
  return a;
}

std::vector<std::string> verify_archive(const AuditArchive& a) {
  std::vector<std::string> out;
  std::set<std::string> known;
  for (const auto& t : a.transcripts) known.insert(t.id);
  if (a.transcripts.size() != a.session.dispatches.size())
    out.push_back("transcript count " + std::to_string(a.transcripts.size()) + " != dispatch count " +
                  std::to_string(a.session.dispatches.size()));
  for (const auto& c : a.session.artifacts.candidates) {
    if (!known.count(c.transcript_id)) out.push_back(c.id + ": unknown transcript " + c.transcript_id);
    if (!c.item) continue;
    const auto& p = c.item->provenance;
    if (p.empty()) out.push_back(c.id + ": no provenance");
    if (p.source_role == "human") out.push_back(c.id + ": generated item attributed to a human");
    if (!p.session_id || *p.session_id != a.session.id) out.push_back(c.id + ": wrong session reference");
    if (p.prompt_ids.empty()) out.push_back(c.id + ": no transcript references");
    for (const auto& id : p.prompt_ids)
      if (!known.count(id)) out.push_back(c.id + ": unknown transcript " + id);
  }
  return out;
}

}  // namespace mcqforge
