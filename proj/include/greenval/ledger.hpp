#pragma once

// Time-value arithmetic: discount factors, present values and the per-item
// annualization conventions used to build yearly cost/benefit totals.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

namespace greenval {

/// Thrown when an argument lies outside an operation's validity domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DiscountModel {
    double rate = 0.05;  // fraction per year
    int base_year = 2019;

    /// Throws DomainError unless rate > -1 and base_year is in [1900, 2200].
    void validate() const;
};

// Timing profiles. Each one maps a raw amount to a yearly value.

/// One-off amount spread straight-line over the asset lifespan.
struct OneOffAnnualized {
    int lifespan_years = 30;
};
/// Yearly amount counted at face value.
struct RecurringImmediate {};
/// Yearly amount first incurred `offset_years` after the base year.
struct RecurringDeferred {
    int offset_years = 1;
};
/// Amount incurred once every `period_years`, averaged per year.
struct PeriodicAveraged {
    int period_years = 1;
};

using TimingProfile =
    std::variant<OneOffAnnualized, RecurringImmediate, RecurringDeferred, PeriodicAveraged>;

void validate(const TimingProfile& timing);

enum class ItemKind { cost, benefit };

struct CashFlowItem {
    std::string id;
    ItemKind kind = ItemKind::cost;
    std::string category;
    double raw_amount = 0.0;  // base currency, base year
    TimingProfile timing = RecurringImmediate{};
    std::string provenance;
    std::optional<double> reported_value_2019;
};

struct Totals {
    double pv_costs = 0.0;
    double pv_benefits = 0.0;

    friend bool operator==(const Totals&, const Totals&) = default;
};

/// (1 + rate)^-t. Throws DomainError for negative t or an invalid model.
double discount_factor(const DiscountModel& model, double t);

double present_value(double amount, const DiscountModel& model, double t);

/// Yearly value of an item under its timing profile. Straight-line and
/// periodic averaging are not discounted; only deferred recurrings are.
double annualized_value(const CashFlowItem& item, const DiscountModel& model);

/// Sums annualized values per kind. Throws DomainError on duplicate ids or
/// negative amounts. The result does not depend on item order.
Totals aggregate(std::span<const CashFlowItem> items, const DiscountModel& model);

std::string_view to_string(ItemKind kind);
ItemKind parse_item_kind(std::string_view text);

}  // namespace greenval
