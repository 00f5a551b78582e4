#include "hob/report.hpp"

#include <ostream>

#include "hob/numfmt.hpp"

namespace hob {

using nlohmann::ordered_json;

ordered_json number_json(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

ordered_json to_json(const ChannelReport& c) {
  ordered_json j;
  j["channel"] = c.channel;
  j["eta"] = number_json(c.eta);
  j["value"] = number_json(c.value);
  j["cost"] = number_json(c.cost);
  j["mc"] = number_json(c.mc);
  j["roi"] = number_json(c.roi);
  j["surplus"] = number_json(c.surplus);
  j["optimum_surplus"] = number_json(c.optimum_surplus);
  j["surplus_rate"] = number_json(c.surplus_rate);
  j["impressions"] = c.impressions;
  j["wins"] = number_json(c.wins);
  j["zero_bid_wins"] = number_json(c.zero_bid_wins);
  return j;
}

ordered_json to_json(const ReplayReport& r) {
  ordered_json j;
  j["method"] = r.method;
  j["outcomes"] = r.outcomes;
  j["eta"] = number_json(r.eta);
  j["eta3"] = number_json(r.eta3);
  if (r.fit) {
    j["fit"] = {{"a", number_json(r.fit->a)},           {"b", number_json(r.fit->b)},
                {"eta_lo", number_json(r.fit->eta_lo)}, {"eta_hi", number_json(r.fit->eta_hi)},
                {"residual", number_json(r.fit->residual)}, {"floored", r.fit->floored}};
  } else {
    j["fit"] = nullptr;
  }
  j["constraint_matched"] = r.constraint_matched;
  j["converged"] = r.converged;
  j["bisection_iterations"] = r.bisection_iterations;
  ordered_json channels = ordered_json::array();
  for (const auto& c : r.channels) channels.push_back(to_json(c));
  j["channels"] = std::move(channels);
  j["total"] = to_json(r.total);
  return j;
}

ordered_json to_json(const Campaign& c) {
  ordered_json j;
  j["objective"] = std::string(to_string(c.objective));
  j["budget"] = number_json(c.budget);
  j["target_roi"] = number_json(c.target_roi);
  j["target_cpc"] = number_json(c.target_cpc);
  j["epsilon"] = number_json(c.epsilon);
  return j;
}

ordered_json report_document(std::span<const ReplayReport> reports) {
  ordered_json doc;
  doc["format"] = kReportFormat;
  ordered_json list = ordered_json::array();
  for (const auto& r : reports) list.push_back(to_json(r));
  doc["reports"] = std::move(list);
  return doc;
}

std::string report_json(const ReplayReport& report) { return to_json(report).dump(2) + "\n"; }

std::string reports_json(std::span<const ReplayReport> reports) { return report_document(reports).dump(2) + "\n"; }

void write_outcome_csv(std::ostream& out, std::span<const OutcomeRow> rows) {
  out << "id,channel,bid,won,cost,value\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.channel << ',' << format_double(r.bid) << ',' << (r.won ? 1 : 0) << ','
        << format_double(r.cost) << ',' << format_double(r.value_realized) << '\n';
}

}  // namespace hob
