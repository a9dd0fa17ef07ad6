#include "mcqforge/agreement.hpp"

#include "mcqforge/error.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace mcqforge {

void ContingencyTable::validate() const {
  if (a < 0 || b < 0 || c < 0 || d < 0)
    throw Error(ErrorCode::validation, "contingency counts must be non-negative");
  if (n() < 1) throw Error(ErrorCode::validation, "contingency table is empty (N = 0)");
}

ContingencyTable build_contingency(const std::map<std::string, bool>& human,
                                   const std::map<std::string, bool>& machine) {
  std::vector<std::string> only_human, only_machine;
  for (const auto& [id, _] : human)
    if (!machine.count(id)) only_human.push_back(id);
  for (const auto& [id, _] : machine)
    if (!human.count(id)) only_machine.push_back(id);
  if (!only_human.empty() || !only_machine.empty()) {
    std::string detail;
    for (const auto& id : only_human) detail += (detail.empty() ? "" : ", ") + id + " (human only)";
    for (const auto& id : only_machine) detail += (detail.empty() ? "" : ", ") + id + " (machine only)";
    throw Error(ErrorCode::validation, "rater id sets differ", detail);
  }
  ContingencyTable t;
  for (const auto& [id, h] : human) {
    const bool m = machine.at(id);
    if (h && m) ++t.a;
    else if (h) ++t.b;
    else if (m) ++t.c;
    else ++t.d;
  }
  t.validate();
  return t;
}

std::string_view to_string(KappaBand b) {
  switch (b) {
    case KappaBand::none_or_negative: return "none_or_negative";
    case KappaBand::slight: return "slight";
    case KappaBand::fair: return "fair";
    case KappaBand::moderate: return "moderate";
    case KappaBand::substantial: return "substantial";
    case KappaBand::almost_perfect: return "almost_perfect";
  }
  return "none_or_negative";
}

KappaBand kappa_band(double k) {
  if (k <= 0.0) return KappaBand::none_or_negative;
  if (k <= 0.20) return KappaBand::slight;
  if (k <= 0.40) return KappaBand::fair;
  if (k <= 0.60) return KappaBand::moderate;
  if (k <= 0.80) return KappaBand::substantial;
  return KappaBand::almost_perfect;
}

KappaResult cohen_kappa(const ContingencyTable& t) {
  t.validate();
  const double n = static_cast<double>(t.n());
  const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
  const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
  KappaResult r;
  r.p_o = (a + d) / n;
  r.p_e = ((a + b) * (a + c) + (c + d) * (b + d)) / (n * n);
  // p_e reaches 1 only when both raters put every item in the same class.
  if (r.p_e >= 1.0) return r;
  r.kappa = (r.p_o - r.p_e) / (1.0 - r.p_e);
  r.band = kappa_band(*r.kappa);
  return r;
}

std::string kappa_report(const ContingencyTable& t, const KappaResult& r, std::string_view label) {
  char buf[256];
  std::string out;
  if (!label.empty()) out += std::string(label) + "\n";
  std::snprintf(buf, sizeof buf, "%-12s %12s %12s %8s\n", "", "machine yes", "machine no", "total");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %12lld %12lld %8lld\n", "human yes", static_cast<long long>(t.a),
                static_cast<long long>(t.b), static_cast<long long>(t.a + t.b));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %12lld %12lld %8lld\n", "human no", static_cast<long long>(t.c),
                static_cast<long long>(t.d), static_cast<long long>(t.c + t.d));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %12lld %12lld %8lld\n", "total", static_cast<long long>(t.a + t.c),
                static_cast<long long>(t.b + t.d), static_cast<long long>(t.n()));
  out += buf;
  std::snprintf(buf, sizeof buf, "p_o = %.3f  p_e = %.3f\n", r.p_o, r.p_e);
  out += buf;
  if (r.kappa) {
    std::snprintf(buf, sizeof buf, "kappa = %.3f (%s)\n", *r.kappa, std::string(to_string(*r.band)).c_str());
    out += buf;
  } else {
    out += "kappa undefined (p_e = 1)\n";
  }
  return out;
}

}  // namespace mcqforge
