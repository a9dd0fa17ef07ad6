#pragma once

// Cohen's kappa between a human rater and an automated rater over binary
// accept/reject decisions.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace mcqforge {

// Rows: human yes/no. Columns: machine yes/no.
struct ContingencyTable {
  std::int64_t a = 0;  // both yes
  std::int64_t b = 0;  // human yes, machine no
  std::int64_t c = 0;  // human no, machine yes
  std::int64_t d = 0;  // both no

  std::int64_t n() const { return a + b + c + d; }
  void validate() const;  // counts >= 0 and N >= 1
  bool operator==(const ContingencyTable&) const = default;
};

ContingencyTable build_contingency(const std::map<std::string, bool>& human,
                                   const std::map<std::string, bool>& machine);

enum class KappaBand { none_or_negative, slight, fair, moderate, substantial, almost_perfect };

std::string_view to_string(KappaBand b);
KappaBand kappa_band(double kappa);

struct KappaResult {
  double p_o = 0.0;
  double p_e = 0.0;
  std::optional<double> kappa;  // empty when p_e == 1
  std::optional<KappaBand> band;

  bool defined() const { return kappa.has_value(); }
};

// Undefined kappa is reported through an empty `kappa`, not an exception.
KappaResult cohen_kappa(const ContingencyTable& t);

// Plain-text table: human rows, machine columns, marginals, kappa and band.
std::string kappa_report(const ContingencyTable& t, const KappaResult& r,
                         std::string_view label = {});

}  // namespace mcqforge
