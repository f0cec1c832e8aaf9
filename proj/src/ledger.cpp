#include "greenval/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace greenval {

void DiscountModel::validate() const {
    if (!std::isfinite(rate) || rate <= -1.0) {
        throw DomainError("discount rate must be greater than -1, got " + std::to_string(rate));
    }
    if (base_year < 1900 || base_year > 2200) {
        throw DomainError("base year must lie in [1900, 2200], got " + std::to_string(base_year));
    }
}

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};

void require_positive(int value, const char* what) {
    if (value < 1) {
        throw DomainError(std::string(what) + " must be at least 1, got " + std::to_string(value));
    }
}

}  // namespace

void validate(const TimingProfile& timing) {
    std::visit(overloaded{
                   [](const OneOffAnnualized& t) { require_positive(t.lifespan_years, "lifespan_years"); },
                   [](const RecurringImmediate&) {},
                   [](const RecurringDeferred& t) { require_positive(t.offset_years, "offset_years"); },
                   [](const PeriodicAveraged& t) { require_positive(t.period_years, "period_years"); },
               },
               timing);
}

double discount_factor(const DiscountModel& model, double t) {
    model.validate();
    if (!(t >= 0.0)) {
        throw DomainError("discount horizon must be non-negative");
    }
    if (t == 0.0) {
        return 1.0;
    }
    return std::pow(1.0 + model.rate, -t);
}

double present_value(double amount, const DiscountModel& model, double t) {
    return amount * discount_factor(model, t);
}

double annualized_value(const CashFlowItem& item, const DiscountModel& model) {
    validate(item.timing);
    const double raw = item.raw_amount;
    return std::visit(overloaded{
                          [&](const OneOffAnnualized& t) { return raw / t.lifespan_years; },
                          [&](const RecurringImmediate&) { return raw; },
                          [&](const RecurringDeferred& t) {
                              return present_value(raw, model, t.offset_years);
                          },
                          [&](const PeriodicAveraged& t) { return raw / t.period_years; },
                      },
                      item.timing);
}

Totals aggregate(std::span<const CashFlowItem> items, const DiscountModel& model) {
    // Sum in id order so the floating-point result is independent of input order.
    std::vector<const CashFlowItem*> sorted;
    sorted.reserve(items.size());
    for (const auto& item : items) {
        sorted.push_back(&item);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const CashFlowItem* a, const CashFlowItem* b) { return a->id < b->id; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i - 1]->id == sorted[i]->id) {
            throw DomainError("duplicate item id '" + sorted[i]->id + "'");
        }
    }

    Totals totals;
    for (const auto* item : sorted) {
        if (!(item->raw_amount >= 0.0)) {
            throw DomainError("item '" + item->id + "' has a negative amount");
        }
        const double value = annualized_value(*item, model);
        (item->kind == ItemKind::cost ? totals.pv_costs : totals.pv_benefits) += value;
    }
    return totals;
}

std::string_view to_string(ItemKind kind) {
    return kind == ItemKind::cost ? "cost" : "benefit";
}

ItemKind parse_item_kind(std::string_view text) {
    if (text == "cost") return ItemKind::cost;
    if (text == "benefit") return ItemKind::benefit;
    throw DomainError("unknown item kind '" + std::string(text) + "'");
}

}  // namespace greenval
