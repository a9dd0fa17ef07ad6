#pragma once

// Provenance archive for one session: every transcript behind it, the gate
// log, item edits and any recorded quality verdicts.

#include "mcqforge/pipeline.hpp"
#include "mcqforge/quality.hpp"

#include <map>
#include <string>
#include <vector>

namespace mcqforge {

struct AuditArchive {
  PipelineSession session;
  std::vector<TranscriptEntry> transcripts;  // dispatch order
  std::map<std::string, std::vector<CriterionVerdict>> verdicts;  // item id -> verdicts
  Timestamp exported_at{};
};

// Throws not_found for an unknown session.
AuditArchive audit_export(const Pipeline& pipeline, const TranscriptLog& log,
                          const std::string& session_id,
                          const std::map<std::string, std::vector<CriterionVerdict>>& verdicts = {});

// Problems found when checking that the archive explains every item:
// unknown transcript references, items without provenance, and so on.
std::vector<std::string> verify_archive(const AuditArchive& archive);

}  // namespace mcqforge
