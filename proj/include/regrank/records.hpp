#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "regrank/csv.hpp"
#include "regrank/dates.hpp"
#include "regrank/errors.hpp"

namespace regrank {

enum class Role {
    managing_director,
    shareholder_managing_director,
};

inline std::optional<Role> parse_role(std::string_view s) {
    if (s == "managing_director") return Role::managing_director;
    if (s == "shareholder_managing_director") return Role::shareholder_managing_director;
    return std::nullopt;
}

inline std::string_view role_name(Role r) {
    return r == Role::managing_director ? "managing_director" : "shareholder_managing_director";
}

// One directorship stint taken from the register extract.
struct RegisterRecord {
    std::string person_id;
    std::string company_id;
    Role role = Role::managing_director;
    Date start_date;
    std::optional<Date> end_date;  // absent = still active
};

enum class RiskLabel : std::uint8_t {
    compliant = 0,
    risk = 1,
    unknown = 2,
};

// Entity-keyed binary risk labels; anything not listed is unknown.
class RiskVector {
public:
    void set(std::string id, bool is_risk) { labels_[std::move(id)] = is_risk; }

    void erase(const std::string& id) { labels_.erase(id); }

    RiskLabel label(const std::string& id) const {
        auto it = labels_.find(id);
        if (it == labels_.end()) return RiskLabel::unknown;
        return it->second ? RiskLabel::risk : RiskLabel::compliant;
    }

    std::size_t size() const { return labels_.size(); }

    std::size_t count(RiskLabel which) const {
        std::size_t n = 0;
        for (const auto& [id, r] : labels_) {
            if ((which == RiskLabel::risk) == r) ++n;
        }
        return n;
    }

    const std::unordered_map<std::string, bool>& entries() const { return labels_; }

private:
    std::unordered_map<std::string, bool> labels_;
};

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct RecordParseResult {
    std::vector<RegisterRecord> records;
    std::vector<ParseIssue> errors;    // malformed rows, rejected
    std::vector<ParseIssue> warnings;  // filtered roles, skipped rows
};

// Expected header: person_id,company_id,role,start_date,end_date.
// Malformed rows are rejected with their line number; rows whose role is not
// a managing-director variant are skipped with a warning.
inline RecordParseResult parse_records(std::istream& in, char delim = ',') {
    RecordParseResult out;
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) return out;  // empty input: no records
    ++lineno;
    auto header = csv::split(csv::strip_cr(line), delim);
    const std::vector<std::string> expected = {"person_id", "company_id", "role",
                                               "start_date", "end_date"};
    if (header != expected) {
        out.errors.push_back({lineno, "unexpected header '" + csv::strip_cr(line) + "'"});
        return out;
    }

    while (std::getline(in, line)) {
        ++lineno;
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto f = csv::split(line, delim);
        if (f.size() != 5) {
            out.errors.push_back({lineno, "expected 5 fields, got " + std::to_string(f.size())});
            continue;
        }
        if (f[0].empty() || f[1].empty()) {
            out.errors.push_back({lineno, "empty person_id or company_id"});
            continue;
        }
        auto role = parse_role(f[2]);
        if (!role) {
            out.warnings.push_back({lineno, "role '" + f[2] + "' is not tracked, row skipped"});
            continue;
        }
        auto start = parse_date(f[3]);
        if (!start) {
            out.errors.push_back({lineno, "bad start_date '" + f[3] + "'"});
            continue;
        }
        std::optional<Date> end;
        if (!f[4].empty()) {
            end = parse_date(f[4]);
            if (!end) {
                out.errors.push_back({lineno, "bad end_date '" + f[4] + "'"});
                continue;
            }
            if (*end < *start) {
                out.errors.push_back({lineno, "end_date precedes start_date"});
                continue;
            }
        }
        out.records.push_back({std::move(f[0]), std::move(f[1]), *role, *start, end});
    }
    return out;
}

inline RecordParseResult parse_records_file(const std::string& path, char delim = ',') {
    auto in = csv::open_input(path);
    return parse_records(in, delim);
}

struct RiskParseResult {
    RiskVector risk;
    std::vector<ParseIssue> errors;
};

// Expected header: entity_id,risk with risk in {0,1}.
inline RiskParseResult parse_risk(std::istream& in, char delim = ',') {
    RiskParseResult out;
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) return out;
    ++lineno;
    auto header = csv::split(csv::strip_cr(line), delim);
    if (header != std::vector<std::string>{"entity_id", "risk"}) {
        out.errors.push_back({lineno, "unexpected header '" + csv::strip_cr(line) + "'"});
        return out;
    }
    while (std::getline(in, line)) {
        ++lineno;
        line = csv::strip_cr(line);
        if (line.empty()) continue;
        auto f = csv::split(line, delim);
        if (f.size() != 2 || f[0].empty()) {
            out.errors.push_back({lineno, "expected entity_id and risk"});
            continue;
        }
        if (f[1] != "0" && f[1] != "1") {
            out.errors.push_back({lineno, "risk must be 0 or 1, got '" + f[1] + "'"});
            continue;
        }
        out.risk.set(std::move(f[0]), f[1] == "1");
    }
    return out;
}

inline RiskParseResult parse_risk_file(const std::string& path, char delim = ',') {
    auto in = csv::open_input(path);
    return parse_risk(in, delim);
}

}  // namespace regrank
