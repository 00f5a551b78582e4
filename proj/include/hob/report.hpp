#ifndef HOB_REPORT_HPP
#define HOB_REPORT_HPP

#include <json.hpp>

#include "hob/simulate.hpp"

namespace hob {

/// Identifies report documents; bumped on incompatible layout changes.
inline constexpr const char* kReportFormat = "hob-report v1";

// Non-finite numbers are written as null.
nlohmann::ordered_json number_json(double x);

nlohmann::ordered_json to_json(const ChannelReport& channel);
nlohmann::ordered_json to_json(const ReplayReport& report);
nlohmann::ordered_json to_json(const Campaign& campaign);

/// {"format": ..., "reports": [...]}; callers may add fields before dumping.
nlohmann::ordered_json report_document(std::span<const ReplayReport> reports);

}  // namespace hob

#endif  // HOB_REPORT_HPP
