#include <gtest/gtest.h>

#include <random>

#include "greenval/scenario.hpp"
#include "support.hpp"

using namespace greenval;
using testsupport::emilia;
using testsupport::sicily;
using testsupport::spec;

namespace {

const Deviation* find(const std::vector<Deviation>& ds, std::string_view metric, std::string_view basis) {
    for (const auto& d : ds) {
        if (d.metric == metric && d.basis == basis) return &d;
    }
    return nullptr;
}

Scenario random_scenario(std::mt19937& gen, int n) {
    std::uniform_real_distribution<double> amount(1, 20000);
    std::uniform_int_distribution<int> pick(0, 3);
    Scenario s;
    s.id = "random";
    s.area_m2 = 1000;
    for (int i = 0; i < n; ++i) {
        const TimingProfile timings[] = {OneOffAnnualized{30}, RecurringImmediate{}, RecurringDeferred{1},
                                         PeriodicAveraged{5}};
        s.items.push_back(spec("i" + std::to_string(i), i % 2 ? ItemKind::cost : ItemKind::benefit, amount(gen),
                               timings[pick(gen)]));
    }
    return s;
}

}  // namespace

TEST(Kpis, Definitions) {
    const Kpis k = kpis(150, 100);
    EXPECT_EQ(k.npv, 50);
    EXPECT_EQ(*k.bcr, 1.5);
    EXPECT_EQ(*k.roi, 0.5);
}

TEST(Kpis, RatiosUndefinedWithoutCosts) {
    const Kpis k = kpis(10, 0);
    EXPECT_EQ(k.npv, 10);
    EXPECT_FALSE(k.bcr);
    EXPECT_FALSE(k.roi);
}

TEST(Kpis, BenefitsEqualToCostsGiveZeroRoi) {
    const Kpis k = kpis(10494.59, 10494.59);
    EXPECT_EQ(*k.roi, 0.0);
    EXPECT_EQ(*k.bcr, 1.0);
    EXPECT_EQ(k.npv, 0.0);
}

TEST(KpiProperties, RoiIsBcrMinusOne) {
    std::mt19937 gen(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const Scenario s = random_scenario(gen, 2 + trial % 17);
        const KpiReport r = evaluate_scenario(s, ConversionContext{});
        ASSERT_TRUE(r.bcr && r.roi);
        EXPECT_NEAR(*r.roi, *r.bcr - 1.0, 1e-12 * std::max(1.0, std::fabs(*r.bcr)));
    }
}

TEST(KpiProperties, SignsAgree) {
    std::mt19937 gen(99);
    for (int trial = 0; trial < 300; ++trial) {
        const KpiReport r = evaluate_scenario(random_scenario(gen, 6), ConversionContext{});
        EXPECT_EQ(r.npv > 0, *r.bcr > 1) << trial;
        EXPECT_EQ(r.npv > 0, *r.roi > 0) << trial;
    }
}

TEST(KpiProperties, ScalingAllAmountsKeepsRatios) {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 100; ++trial) {
        Scenario s = random_scenario(gen, 8);
        const KpiReport before = evaluate_scenario(s, ConversionContext{});
        const double k = 1.0 + trial;
        for (auto& item : s.items) *item.raw_amount *= k;
        const KpiReport after = evaluate_scenario(s, ConversionContext{});
        EXPECT_NEAR(*after.bcr, *before.bcr, 1e-12 * *before.bcr);
        EXPECT_NEAR(after.npv, k * before.npv, 1e-9 * k * (before.pv_costs + before.pv_benefits));
    }
}

TEST(SicilyDataset, AlternativeCostTotalFromItemizedRows) {
    const auto& cs = sicily().case_study;
    // capital rows over 30 years, computed emission 43.20 over 30 years, energy, mowing from year 1, maintenance
    const double capital = 5000 + 5700 + 9649 + 34000 + 9000 + 9000 + 21250 + 1900 + 3750 + 6000 + 1000 + 1000 +
                           300 + 100 + 350;
    const double expected = capital / 30 + 1500 * 0.48 / 1000 * 60 / 30 + 0.196 * 4800 + 1000 / 1.05 + 5000;
    const KpiReport r = evaluate_scenario(cs.alternative, cs.context);
    EXPECT_NEAR(r.pv_costs, expected, 1e-9);
    EXPECT_NEAR(r.pv_costs, 10494.6, 0.1);
    EXPECT_NEAR(r.pv_benefits, 0.9 * 12000 / 1.05, 1e-9);
    EXPECT_NEAR(r.cost_per_m2, 7.00, 0.01);
}

TEST(SicilyDataset, MemoItemsStayOutOfTotals) {
    const auto& cs = sicily().case_study;
    const ResolvedItems resolved = resolve_items(cs.alternative, cs.context);
    ASSERT_EQ(resolved.memo.size(), 2u);
    for (const auto& m : resolved.memo) EXPECT_EQ(m.kind, ItemKind::benefit);
}

TEST(SicilyDataset, EmissionItemIsDerivedAndFlagged) {
    const auto& cs = sicily().case_study;
    const KpiReport r = evaluate_scenario(cs.alternative, cs.context);
    const Deviation* raw = find(r.item_deviations, "sicily-with-cw/excavation-emissions:raw_amount", "itemized");
    ASSERT_NE(raw, nullptr);
    EXPECT_NEAR(raw->computed, 43.20, 1e-9);
    EXPECT_EQ(raw->reported, 43.42);
    EXPECT_TRUE(raw->exceeds_tolerance);
}

TEST(SicilyDataset, BaselineFloodCostFromUsdChain) {
    const auto& cs = sicily().case_study;
    const ResolvedItems resolved = resolve_items(cs.baseline, cs.context);
    const auto it = std::find_if(resolved.counted.begin(), resolved.counted.end(),
                                 [](const CashFlowItem& c) { return c.id == "flood-risk"; });
    ASSERT_NE(it, resolved.counted.end());
    EXPECT_NEAR(it->raw_amount, 2369.0, 0.5);
}

TEST(SicilyDataset, LedgerRecordsReportedInconsistencies) {
    const ComparisonReport c = compare_case(sicily().case_study);
    const Deviation* npv = find(c.alternative.deviations, "npv", "reported_totals");
    ASSERT_NE(npv, nullptr);
    EXPECT_NEAR(npv->computed, 11011.34 - 10494.59, 1e-9);
    EXPECT_EQ(npv->reported, 2.46);

    const Deviation* benefits = find(c.baseline.deviations, "total_benefits", "reported_totals");
    ASSERT_NE(benefits, nullptr);
    EXPECT_NEAR(benefits->computed, 2.16 * 5027.89, 1e-9);
    EXPECT_EQ(benefits->reported, 110479.80);
    EXPECT_TRUE(benefits->exceeds_tolerance);

    const Deviation* itemized = find(c.baseline.deviations, "total_benefits", "itemized");
    ASSERT_NE(itemized, nullptr);
    EXPECT_NEAR(itemized->computed, c.baseline.pv_benefits, 0);
}

TEST(SicilyDataset, OneItemizedEntryPerReportedField) {
    const ComparisonReport c = compare_case(sicily().case_study);
    int count = 0;
    for (const auto& d : c.alternative.deviations) count += d.basis == "itemized";
    EXPECT_EQ(count, 7);
    count = 0;
    for (const auto& d : c.baseline.deviations) count += d.basis == "itemized";
    EXPECT_EQ(count, 4);
}

TEST(SicilyDataset, BaselineIsRecommended) {
    const ComparisonReport c = compare_case(sicily().case_study);
    EXPECT_EQ(c.recommended, "sicily-without-cw");
    ASSERT_EQ(c.notes.size(), 1u);
    EXPECT_NE(c.notes[0].find("sicily-with-cw"), std::string::npos);
}

TEST(EmiliaDataset, BaselineCostsFromPerRowOracle) {
    const auto& cs = emilia().case_study;
    const double one_off = 2000 + 3500 + 500 + 0 + 2800 + 1.20 * 3090 + 5000 + 560 + 2000 + 500 + 300 + 660 + 1700;
    const double expected = 25.20 + one_off / 30 + 1720.0 / 5 + 18 * 60 + 46.32 + 18 * 16 + 70 + 44.80 / 30;
    const KpiReport r = evaluate_scenario(cs.baseline, cs.context);
    EXPECT_NEAR(r.pv_costs, expected, 1e-9);
    EXPECT_EQ(testsupport::round_cents(r.pv_costs), 2629.28);
}

TEST(EmiliaDataset, PrintedColumnSumIncludesTheConcreteRow) {
    double printed = 0;
    for (const auto& item : emilia().case_study.baseline.items) {
        if (item.kind == ItemKind::cost) printed += item.reported_value_2019.value_or(0);
    }
    EXPECT_NEAR(printed, 2695.96, 0.005);
    const auto& cs = emilia().case_study;
    double rounded_rows = 0;
    for (const auto& item : resolve_items(cs.baseline, cs.context).counted) {
        if (item.kind == ItemKind::cost) rounded_rows += testsupport::round_cents(annualized_value(item, cs.context.discount));
    }
    EXPECT_NEAR(printed - rounded_rows, 233.33 - 166.67, 1e-6);
}

TEST(EmiliaDataset, AlternativeKpis) {
    const auto& cs = emilia().case_study;
    const KpiReport r = evaluate_scenario(cs.alternative, cs.context);
    const double c = 2196.12 + 70 + 30.10;
    const double b = 2219.83 + 44.80 / 30;
    EXPECT_NEAR(r.npv, b - c, 1e-9);
    EXPECT_NEAR(r.npv, -74.90, 0.5);
    EXPECT_NEAR(*r.bcr, 0.97, 0.01);
}

TEST(EmiliaDataset, WetlandIsRecommended) {
    const ComparisonReport c = compare_case(emilia().case_study);
    EXPECT_EQ(c.recommended, "er-with-cw");
    EXPECT_GT(c.baseline.npv, 0);
}

TEST(CapexRoi, UsesOnlyCapitalCosts) {
    const auto& cs = emilia().case_study;
    EvalOptions o;
    o.roi_base = RoiBase::capex;
    const KpiReport r = evaluate_scenario(cs.baseline, cs.context, o);
    double capex = 0;
    for (const auto& item : resolve_items(cs.baseline, cs.context).counted) {
        if (item.kind == ItemKind::cost && item.category == "CAPEX") capex += annualized_value(item, cs.context.discount);
    }
    EXPECT_NEAR(*r.roi, (r.pv_benefits - capex) / capex, 1e-12);
}

TEST(Comparison, TieGoesToBaseline) {
    Scenario a, b;
    a.id = "a";
    b.id = "b";
    b.role = Role::alternative;
    a.items = {spec("x", ItemKind::benefit, 10)};
    b.items = {spec("y", ItemKind::benefit, 10)};
    EXPECT_EQ(compare_case(a, b, ConversionContext{}).recommended, "a");
}

TEST(Scenario, ValidationCatchesBadInput) {
    Scenario s;
    s.id = "s";
    s.items = {spec("x", ItemKind::cost, 1), spec("x", ItemKind::cost, 2)};
    EXPECT_THROW(s.validate(), DomainError);
    s.items = {spec("x", ItemKind::cost, 1)};
    s.items[0].water_linear = true;
    EXPECT_THROW(s.validate(), DomainError);
    s.water = WaterRange{10, 5, 20};
    EXPECT_THROW(s.validate(), DomainError);
    s.water = WaterRange{0, 5, 20};
    EXPECT_NO_THROW(s.validate());
    s.area_m2 = 0;
    EXPECT_THROW(s.validate(), DomainError);
}

TEST(Deviation, RelativeGapConventions) {
    EXPECT_DOUBLE_EQ(relative_gap(110, 100), 0.1);
    EXPECT_DOUBLE_EQ(relative_gap(0.3, 0), 0.3);
    EXPECT_FALSE(make_deviation("m", "itemized", 100.5, 100).exceeds_tolerance);
    EXPECT_TRUE(make_deviation("m", "itemized", 100.6, 100).exceeds_tolerance);
}
