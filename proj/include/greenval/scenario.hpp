#pragma once

#include <optional>
#include <string>
#include <vector>

#include "greenval/ledger.hpp"
#include "greenval/monetize.hpp"

namespace greenval {

enum class Role { baseline, alternative };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

struct WaterRange {
    double min = 0.0;
    double nominal = 0.0;
    double max = 0.0;
};

/// Aggregates printed by the source study. They are compared against the
/// computed values and never feed the computation.
struct ReportedAggregates {
    std::optional<double> total_costs;
    std::optional<double> total_benefits;
    std::optional<double> npv;
    std::optional<double> bcr;
    std::optional<double> roi;
    std::optional<double> cost_per_m2;
    std::optional<double> npv_per_m2;
    std::string source;
};

/// A dataset row. Unlike ledger::CashFlowItem its amount may be in a
/// foreign currency/year or derived from a monetization chain.
struct ItemSpec {
    std::string id;
    ItemKind kind = ItemKind::cost;
    std::string category;
    /// Printed amount in `basis`. When absent the amount comes from `monetization`.
    std::optional<double> raw_amount;
    PriceBasis basis{"EUR", 2019};
    TimingProfile timing = RecurringImmediate{};
    std::string provenance;
    std::optional<double> reported_value_2019;
    /// Printed amount for a derived item, kept for deviation checks.
    std::optional<double> reported_raw_amount;
    std::optional<Monetization> monetization;
    /// Memo rows are listed by the study but left out of its totals.
    bool in_totals = true;
    /// Amount proportional to the scenario's annual water volume.
    bool water_linear = false;
};

struct Scenario {
    std::string id;
    std::string label;
    Role role = Role::baseline;
    std::vector<ItemSpec> items;
    double area_m2 = 1.0;
    std::optional<WaterRange> water;
    int lifespan_years = 30;
    std::optional<ReportedAggregates> reported;

    void validate() const;
    const ItemSpec* find_item(std::string_view item_id) const;
    ItemSpec* find_item(std::string_view item_id);
};

/// A baseline/alternative pair evaluated under one context.
struct CaseStudy {
    ConversionContext context;
    Scenario baseline;
    Scenario alternative;

    void validate() const;
};

enum class RoiBase { total_costs, capex };

std::string_view to_string(RoiBase base);
RoiBase parse_roi_base(std::string_view text);

struct EvalOptions {
    RoiBase roi_base = RoiBase::total_costs;
    /// Overrides the scenario's nominal water volume.
    std::optional<double> water_m3;
};

/// Relative tolerance above which a deviation is flagged.
inline constexpr double kDeviationTolerance = 0.005;

struct Deviation {
    std::string metric;
    /// "itemized" compares a computed value with a printed one;
    /// "reported_totals" checks printed values against each other.
    std::string basis;
    double computed = 0.0;
    double reported = 0.0;
    double relative_gap = 0.0;
    bool exceeds_tolerance = false;
    std::string note;
};

/// |c - r| / |r|, or |c - r| when r is zero.
double relative_gap(double computed, double reported);
Deviation make_deviation(std::string metric, std::string basis, double computed, double reported,
                         std::string note = {});

struct Kpis {
    double npv = 0.0;
    std::optional<double> bcr;
    std::optional<double> roi;
};

/// NPV, BCR and ROI with total costs as the investment base.
/// Ratios are empty when pv_costs is zero.
Kpis kpis(double pv_benefits, double pv_costs);

struct KpiReport {
    std::string scenario_id;
    std::string label;
    Role role = Role::baseline;
    double pv_costs = 0.0;
    double pv_benefits = 0.0;
    double npv = 0.0;
    std::optional<double> bcr;
    std::optional<double> roi;
    double cost_per_m2 = 0.0;
    double npv_per_m2 = 0.0;
    std::vector<Deviation> deviations;
    std::vector<Deviation> item_deviations;
};

struct ResolvedItems {
    std::vector<CashFlowItem> counted;
    std::vector<CashFlowItem> memo;
    std::vector<Deviation> item_deviations;
};

/// Converts dataset rows into base-currency ledger items at the given
/// water volume (nominal when empty).
ResolvedItems resolve_items(const Scenario& s, const ConversionContext& ctx,
                            std::optional<double> water_m3 = std::nullopt);

KpiReport evaluate_scenario(const Scenario& s, const ConversionContext& ctx, const EvalOptions& options = {});

struct ComparisonReport {
    KpiReport baseline;
    KpiReport alternative;
    std::string recommended;
    std::vector<std::string> notes;
};

/// Recommends the scenario with the larger NPV; ties go to the baseline.
ComparisonReport compare_case(const Scenario& baseline, const Scenario& alternative,
                              const ConversionContext& ctx, const EvalOptions& options = {});
ComparisonReport compare_case(const CaseStudy& cs, const EvalOptions& options = {});

}  // namespace greenval
