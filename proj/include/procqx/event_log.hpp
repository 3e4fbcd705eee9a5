#pragma once

#include "procqx/dataset.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace procqx {

struct Event {
    std::string case_id;
    std::string activity;
    double start_time_s = 0.0; // seconds since the Unix epoch, UTC
    double duration_s = 0.0;
    double energy_kwh = 0.0;
};

struct CaseRecord {
    std::string case_id;
    double planned_setup_time_s = 0.0;
    double planned_production_duration_s = 0.0;
    double oee = 0.0;
    double employee_productivity = 0.0;
    std::optional<Label> quality_label;
};

/// Per-case event sequences plus case-level planning attributes. Cases keep
/// the order of the cases source; events within a case are sorted by start
/// time. Every case has at least one event.
struct EventLog {
    std::vector<CaseRecord> cases;
    std::vector<std::vector<Event>> events; // parallel to cases

    std::size_t case_count() const { return cases.size(); }
};

/// Parses the two CSV schemas (see the dataset docs in the README), checks
/// referential integrity and value ranges, and sorts each case's events by
/// start time. Errors name the offending source line or case id.
EventLog load_event_log(std::istream& events_source, std::istream& cases_source);

/// One row per case in case order: event count, mean event duration, mean
/// event energy, then the four planning attributes. Labels are copied when
/// every case is labeled and absent when none are; a mix is refused.
LabeledDataset extract_features(const EventLog& log);

} // namespace procqx
