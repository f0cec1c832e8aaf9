#include "greenval/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <utility>

namespace greenval {

std::string_view to_string(Role role) {
    return role == Role::baseline ? "baseline" : "alternative";
}

Role parse_role(std::string_view text) {
    if (text == "baseline") return Role::baseline;
    if (text == "alternative") return Role::alternative;
    throw DomainError("unknown scenario role '" + std::string(text) + "'");
}

std::string_view to_string(RoiBase base) {
    return base == RoiBase::total_costs ? "total_costs" : "capex";
}

RoiBase parse_roi_base(std::string_view text) {
    if (text == "total_costs") return RoiBase::total_costs;
    if (text == "capex") return RoiBase::capex;
    throw DomainError("unknown ROI base '" + std::string(text) + "' (expected total_costs or capex)");
}

void Scenario::validate() const {
    if (id.empty()) {
        throw DomainError("scenario id must not be empty");
    }
    const std::string where = "scenario '" + id + "': ";
    if (!(area_m2 > 0.0) || !std::isfinite(area_m2)) {
        throw DomainError(where + "area_m2 must be positive");
    }
    if (lifespan_years < 1) {
        throw DomainError(where + "lifespan_years must be at least 1");
    }
    if (water) {
        if (!(water->min >= 0.0 && water->min <= water->nominal && water->nominal <= water->max)) {
            throw DomainError(where + "water volumes must satisfy 0 <= min <= nominal <= max");
        }
    }
    std::set<std::string_view> seen;
    for (const auto& item : items) {
        const std::string at = where + "item '" + item.id + "': ";
        if (item.id.empty()) {
            throw DomainError(where + "item id must not be empty");
        }
        if (!seen.insert(item.id).second) {
            throw DomainError(where + "duplicate item id '" + item.id + "'");
        }
        if (!item.raw_amount && !item.monetization) {
            throw DomainError(at + "needs raw_amount or a monetization chain");
        }
        if (item.raw_amount && (!(*item.raw_amount >= 0.0) || !std::isfinite(*item.raw_amount))) {
            throw DomainError(at + "raw_amount must be non-negative");
        }
        greenval::validate(item.timing);
        const bool chain_on_water = item.monetization && uses_water_volume(*item.monetization);
        if (item.water_linear && chain_on_water) {
            throw DomainError(at + "water_linear is redundant for a chain bound to the water volume");
        }
        if ((item.water_linear || chain_on_water) && !water) {
            throw DomainError(at + "depends on the water volume but the scenario has no water range");
        }
        if (item.water_linear && !(water->nominal > 0.0)) {
            throw DomainError(at + "water_linear needs a positive nominal water volume");
        }
    }
}

const ItemSpec* Scenario::find_item(std::string_view item_id) const {
    for (const auto& item : items) {
        if (item.id == item_id) return &item;
    }
    return nullptr;
}

ItemSpec* Scenario::find_item(std::string_view item_id) {
    return const_cast<ItemSpec*>(std::as_const(*this).find_item(item_id));
}

void CaseStudy::validate() const {
    context.validate();
    baseline.validate();
    alternative.validate();
    if (baseline.role != Role::baseline || alternative.role != Role::alternative) {
        throw DomainError("case study needs one baseline and one alternative scenario");
    }
    if (baseline.id == alternative.id) {
        throw DomainError("baseline and alternative scenarios share the id '" + baseline.id + "'");
    }
}

double relative_gap(double computed, double reported) {
    const double gap = std::fabs(computed - reported);
    return reported == 0.0 ? gap : gap / std::fabs(reported);
}

Deviation make_deviation(std::string metric, std::string basis, double computed, double reported,
                         std::string note) {
    Deviation d;
    d.metric = std::move(metric);
    d.basis = std::move(basis);
    d.computed = computed;
    d.reported = reported;
    d.relative_gap = relative_gap(computed, reported);
    d.exceeds_tolerance = d.relative_gap > kDeviationTolerance;
    d.note = std::move(note);
    return d;
}

Kpis kpis(double pv_benefits, double pv_costs) {
    if (!(pv_benefits >= 0.0) || !(pv_costs >= 0.0)) {
        throw DomainError("present-value totals must be non-negative");
    }
    Kpis k;
    k.npv = pv_benefits - pv_costs;
    if (pv_costs > 0.0) {
        k.bcr = pv_benefits / pv_costs;
        k.roi = (pv_benefits - pv_costs) / pv_costs;
    }
    return k;
}

namespace {

// Printed values are cent-rounded, so only gaps of at least half a cent count.
bool differs_at_cents(double computed, double reported) {
    return std::fabs(computed - reported) >= 0.005 - 1e-9;
}

}  // namespace

ResolvedItems resolve_items(const Scenario& s, const ConversionContext& ctx, std::optional<double> water_m3) {
    std::optional<double> water;
    if (s.water) {
        water = water_m3.value_or(s.water->nominal);
        if (!(*water >= 0.0)) {
            throw DomainError("water volume must be non-negative");
        }
    }

    ResolvedItems out;
    for (const auto& spec : s.items) {
        CashFlowItem item;
        item.id = spec.id;
        item.kind = spec.kind;
        item.category = spec.category;
        item.timing = spec.timing;
        item.provenance = spec.provenance;
        item.reported_value_2019 = spec.reported_value_2019;

        const std::string prefix = s.id + "/" + spec.id;
        if (spec.raw_amount) {
            item.raw_amount = rebase(*spec.raw_amount, spec.basis, ctx);
            if (spec.monetization) {
                const double check = monetize(*spec.monetization, ctx, water);
                if (differs_at_cents(check, item.raw_amount)) {
                    out.item_deviations.push_back(make_deviation(
                        prefix + ":chain", "itemized", check, item.raw_amount,
                        "monetization chain vs printed amount (printed amount is used)"));
                }
            }
        } else {
            item.raw_amount = monetize(*spec.monetization, ctx, water);
            if (spec.reported_raw_amount && differs_at_cents(item.raw_amount, *spec.reported_raw_amount)) {
                out.item_deviations.push_back(make_deviation(prefix + ":raw_amount", "itemized", item.raw_amount,
                                                             *spec.reported_raw_amount,
                                                             "derived amount vs printed amount"));
            }
        }
        if (spec.water_linear && water) {
            item.raw_amount *= *water / s.water->nominal;
        }

        if (spec.reported_value_2019) {
            const double value = annualized_value(item, ctx.discount);
            if (differs_at_cents(value, *spec.reported_value_2019)) {
                out.item_deviations.push_back(make_deviation(prefix + ":value_2019", "itemized", value,
                                                             *spec.reported_value_2019,
                                                             "recomputed yearly value vs printed value"));
            }
        }
        (spec.in_totals ? out.counted : out.memo).push_back(std::move(item));
    }
    return out;
}

namespace {

void add_reported_deviations(KpiReport& r, const ReportedAggregates& rep) {
    const std::string& note = rep.source;
    auto itemized = [&](const char* metric, const std::optional<double>& reported,
                        std::optional<double> computed) {
        if (!reported) return;
        Deviation d = computed ? make_deviation(metric, "itemized", *computed, *reported, note)
                               : make_deviation(metric, "itemized", std::nan(""), *reported,
                                                note.empty() ? "computed value undefined"
                                                             : note + "; computed value undefined");
        if (!computed) {
            d.relative_gap = std::nan("");
            d.exceeds_tolerance = true;
        }
        r.deviations.push_back(std::move(d));
    };
    itemized("total_costs", rep.total_costs, r.pv_costs);
    itemized("total_benefits", rep.total_benefits, r.pv_benefits);
    itemized("npv", rep.npv, r.npv);
    itemized("bcr", rep.bcr, r.bcr);
    itemized("roi", rep.roi, r.roi);
    itemized("cost_per_m2", rep.cost_per_m2, r.cost_per_m2);
    itemized("npv_per_m2", rep.npv_per_m2, r.npv_per_m2);

    // Internal consistency of the printed figures themselves.
    auto internal = [&](const char* metric, double implied, double printed, const char* how) {
        Deviation d = make_deviation(metric, "reported_totals", implied, printed, how);
        if (d.exceeds_tolerance) {
            r.deviations.push_back(std::move(d));
        }
    };
    if (rep.total_costs && rep.total_benefits && rep.npv) {
        internal("npv", *rep.total_benefits - *rep.total_costs, *rep.npv,
                 "printed total_benefits - printed total_costs vs printed npv");
    }
    if (rep.total_costs && rep.total_benefits && rep.bcr && *rep.total_costs > 0.0) {
        internal("bcr", *rep.total_benefits / *rep.total_costs, *rep.bcr,
                 "printed total_benefits / printed total_costs vs printed bcr");
    }
    if (rep.total_costs && rep.bcr && rep.total_benefits) {
        internal("total_benefits", *rep.bcr * *rep.total_costs, *rep.total_benefits,
                 "printed bcr x printed total_costs vs printed total_benefits");
    }
    if (rep.bcr && rep.roi) {
        internal("roi", *rep.bcr - 1.0, *rep.roi, "printed bcr - 1 vs printed roi");
    }
}

}  // namespace

KpiReport evaluate_scenario(const Scenario& s, const ConversionContext& ctx, const EvalOptions& options) {
    ctx.validate();
    s.validate();

    ResolvedItems resolved = resolve_items(s, ctx, options.water_m3);
    const Totals totals = aggregate(resolved.counted, ctx.discount);

    KpiReport r;
    r.scenario_id = s.id;
    r.label = s.label;
    r.role = s.role;
    r.pv_costs = totals.pv_costs;
    r.pv_benefits = totals.pv_benefits;

    const Kpis k = kpis(totals.pv_benefits, totals.pv_costs);
    r.npv = k.npv;
    r.bcr = k.bcr;
    r.roi = k.roi;
    if (options.roi_base == RoiBase::capex) {
        double investment = 0.0;
        for (const auto& item : resolved.counted) {
            if (item.kind == ItemKind::cost && item.category == "CAPEX") {
                investment += annualized_value(item, ctx.discount);
            }
        }
        r.roi = investment > 0.0 ? std::optional((totals.pv_benefits - investment) / investment)
                                 : std::nullopt;
    }
    r.cost_per_m2 = totals.pv_costs / s.area_m2;
    r.npv_per_m2 = r.npv / s.area_m2;
    r.item_deviations = std::move(resolved.item_deviations);
    if (s.reported) {
        add_reported_deviations(r, *s.reported);
    }
    return r;
}

ComparisonReport compare_case(const Scenario& baseline, const Scenario& alternative,
                              const ConversionContext& ctx, const EvalOptions& options) {
    ComparisonReport c;
    c.baseline = evaluate_scenario(baseline, ctx, options);
    c.alternative = evaluate_scenario(alternative, ctx, options);
    c.recommended = c.alternative.npv > c.baseline.npv ? c.alternative.scenario_id : c.baseline.scenario_id;
    for (const KpiReport* r : {&c.baseline, &c.alternative}) {
        if (r->npv < 0.0) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f", r->npv);
            c.notes.push_back("scenario '" + r->scenario_id + "' has a negative NPV (" + buf +
                              "): not recommended");
        }
    }
    return c;
}

ComparisonReport compare_case(const CaseStudy& cs, const EvalOptions& options) {
    cs.validate();
    return compare_case(cs.baseline, cs.alternative, cs.context, options);
}

}  // namespace greenval
