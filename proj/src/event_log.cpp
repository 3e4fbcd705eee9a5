#include "procqx/event_log.hpp"

#include "procqx/csv.hpp"
#include "procqx/errors.hpp"
#include "procqx/numeric_io.hpp"

#include <algorithm>
#include <istream>
#include <unordered_map>

namespace procqx {

EventLog load_event_log(std::istream& events_source, std::istream& cases_source) {
    const CsvTable cases_tab = read_csv(cases_source, "cases");
    require_header(cases_tab,
                   {"case_id", "planned_setup_time_s", "planned_production_duration_s", "oee",
                    "employee_productivity", "quality_label"},
                   "cases");

    EventLog log;
    std::unordered_map<std::string, std::size_t> case_index;
    for (std::size_t r = 0; r < cases_tab.rows.size(); ++r) {
        const auto& f = cases_tab.rows[r];
        const std::string where = "cases line " + std::to_string(cases_tab.line_numbers[r]);
        CaseRecord rec;
        rec.case_id = f[0];
        if (rec.case_id.empty()) {
            throw ValidationError(where + ": empty case_id");
        }
        if (case_index.count(rec.case_id)) {
            throw ValidationError(where + ": duplicate case_id '" + rec.case_id + "'");
        }
        rec.planned_setup_time_s = parse_double(f[1], where + " planned_setup_time_s");
        rec.planned_production_duration_s = parse_double(f[2], where + " planned_production_duration_s");
        rec.oee = parse_double(f[3], where + " oee");
        rec.employee_productivity = parse_double(f[4], where + " employee_productivity");
        if (rec.planned_setup_time_s < 0.0 || rec.planned_production_duration_s < 0.0) {
            throw ValidationError(where + ": planned times must be nonnegative");
        }
        if (rec.oee < 0.0 || rec.oee > 1.0) {
            throw ValidationError(where + ": oee " + format_double(rec.oee) + " outside [0,1]");
        }
        if (rec.employee_productivity < 0.0 || rec.employee_productivity > 1.0) {
            throw ValidationError(where + ": employee_productivity " +
                                  format_double(rec.employee_productivity) + " outside [0,1]");
        }
        if (!f[5].empty()) {
            rec.quality_label = label_from_string(f[5]);
        }
        case_index.emplace(rec.case_id, log.cases.size());
        log.cases.push_back(std::move(rec));
    }
    log.events.resize(log.cases.size());

    const CsvTable events_tab = read_csv(events_source, "events");
    require_header(events_tab, {"case_id", "activity", "start_time", "duration_s", "energy_kwh"},
                   "events");
    for (std::size_t r = 0; r < events_tab.rows.size(); ++r) {
        const auto& f = events_tab.rows[r];
        const std::string where = "events line " + std::to_string(events_tab.line_numbers[r]);
        Event ev;
        ev.case_id = f[0];
        ev.activity = f[1];
        ev.start_time_s = parse_iso8601_utc(f[2], where + " start_time");
        ev.duration_s = parse_double(f[3], where + " duration_s");
        ev.energy_kwh = parse_double(f[4], where + " energy_kwh");
        if (ev.duration_s < 0.0) {
            throw ValidationError(where + ": negative duration_s");
        }
        if (ev.energy_kwh < 0.0) {
            throw ValidationError(where + ": negative energy_kwh");
        }
        const auto it = case_index.find(ev.case_id);
        if (it == case_index.end()) {
            throw ValidationError(where + ": event references unknown case_id '" + ev.case_id + "'");
        }
        log.events[it->second].push_back(std::move(ev));
    }

    for (std::size_t i = 0; i < log.cases.size(); ++i) {
        if (log.events[i].empty()) {
            throw ValidationError("case '" + log.cases[i].case_id + "' has no events");
        }
        std::stable_sort(log.events[i].begin(), log.events[i].end(),
                         [](const Event& a, const Event& b) { return a.start_time_s < b.start_time_s; });
    }
    return log;
}

LabeledDataset extract_features(const EventLog& log) {
    if (log.cases.empty()) {
        throw ValidationError("cannot extract features from an empty event log");
    }
    std::size_t labeled = 0;
    for (const auto& rec : log.cases) {
        if (rec.quality_label) ++labeled;
    }
    if (labeled != 0 && labeled != log.cases.size()) {
        throw ValidationError("event log mixes labeled and unlabeled cases (" +
                              std::to_string(labeled) + " of " + std::to_string(log.cases.size()) +
                              " labeled); refusing to extract");
    }

    LabeledDataset data;
    data.feature_names = process_feature_names();
    if (labeled) data.labels.emplace();
    for (std::size_t i = 0; i < log.cases.size(); ++i) {
        const auto& rec = log.cases[i];
        const auto& evs = log.events[i];
        const double n = static_cast<double>(evs.size());
        double dur_sum = 0.0, energy_sum = 0.0;
        for (const auto& ev : evs) {
            dur_sum += ev.duration_s;
            energy_sum += ev.energy_kwh;
        }
        data.rows.push_back({n, dur_sum / n, energy_sum / n, rec.planned_setup_time_s,
                             rec.planned_production_duration_s, rec.oee, rec.employee_productivity});
        if (labeled) data.labels->push_back(*rec.quality_label);
    }
    data.validate();
    return data;
}

} // namespace procqx
