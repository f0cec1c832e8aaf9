#pragma once

// Case-study documents (JSON) and report emission (JSON / CSV).

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "greenval/scenario.hpp"
#include "greenval/sensitivity.hpp"

namespace greenval {

inline constexpr std::string_view kSchemaVersion = "1.0";
inline constexpr std::string_view kToolName = "greenval";
inline constexpr std::string_view kToolVersion = "1.0.0";

// Load errors. Each failure class has its own type so callers can map them.

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DatasetError {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class SchemaError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class DuplicateIdError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

class MissingRebaseFactorError : public DatasetError {
public:
    using DatasetError::DatasetError;
};

struct CaseMetadata {
    std::string id;
    std::string name;
    std::string location;
    std::string context;  // urban | rural
    std::string cw_type;
    std::map<std::string, std::string> characteristics;
    std::vector<std::string> source_notes;
};

/// Named overlay on the bundled scenarios, e.g. an interpretation of the
/// study that adds benefits it only discusses in prose.
struct Variant {
    std::string id;
    std::string description;
    std::vector<std::string> quotes;
    /// item id -> new unit-rate value of its monetization chain
    std::map<std::string, double> set_rates;
    /// memo items to count in the totals
    std::vector<std::string> include_items;
    std::vector<std::pair<Role, ItemSpec>> add_items;
};

/// A known, accepted per-item gap between the recomputation and the
/// printed value.
struct AppendixEntry {
    std::string scenario_id;
    std::string item_id;
    std::string field;  // value_2019 | raw_amount | chain
    std::string note;
};

struct CaseStudyDocument {
    std::string schema_version{kSchemaVersion};
    CaseMetadata metadata;
    CaseStudy case_study;
    std::vector<Variant> variants;
    std::vector<AppendixEntry> deviation_appendix;

    const Variant* find_variant(std::string_view id) const;
};

/// Parses and fully validates a case-study document.
CaseStudyDocument load_case_study(std::string_view document);
CaseStudyDocument load_case_study_file(const std::filesystem::path& path);

nlohmann::json to_json(const CaseStudyDocument& doc);
std::string dump_case_study(const CaseStudyDocument& doc);

/// SHA-256 (hex) of the canonical dataset dump.
std::string dataset_digest(const CaseStudyDocument& doc);

/// Returns the case with the named variant applied; empty id returns it as is.
CaseStudy apply_variant(const CaseStudyDocument& doc, std::string_view variant_id);

/// Per-item deviations above tolerance that are not registered in the
/// appendix, and appendix entries that match nothing.
std::vector<std::string> validation_warnings(const CaseStudyDocument& doc);

// Reports.

enum class ReportFormat { json, csv };
ReportFormat parse_report_format(std::string_view text);

struct RunManifest {
    std::string command;
    std::string dataset_id;
    std::string dataset_sha256;
    nlohmann::json parameters = nlohmann::json::object();
};

struct EvaluationReport {
    std::vector<KpiReport> reports;
};

struct ReportDocument {
    RunManifest manifest;
    std::variant<EvaluationReport, ComparisonReport, SweepResult, ForecastBand> content;
};

/// Money is rendered with two decimals, ratios with four.
std::string format_money(double value);
std::string format_ratio(double value);

nlohmann::json to_json(const Deviation& d);
nlohmann::json to_json(const KpiReport& r);
nlohmann::json to_json(const ComparisonReport& c);
nlohmann::json to_json(const SweepResult& s);
nlohmann::json to_json(const ForecastBand& band);
nlohmann::json to_json(const RunManifest& m);
nlohmann::json to_json(const ReportDocument& doc);

std::string emit_report(const ReportDocument& doc, ReportFormat format);

}  // namespace greenval
