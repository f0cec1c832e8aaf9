#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "greenval/ledger.hpp"
#include "support.hpp"

using namespace greenval;
using testsupport::discount_by_loop;
using testsupport::round_cents;

namespace {

CashFlowItem item(std::string id, ItemKind kind, double raw, TimingProfile timing) {
    CashFlowItem c;
    c.id = std::move(id);
    c.kind = kind;
    c.raw_amount = raw;
    c.timing = timing;
    return c;
}

}  // namespace

TEST(DiscountFactor, ThirtyYearsAtFivePercent) {
    const DiscountModel m;
    EXPECT_NEAR(discount_factor(m, 30), 0.231377, 5e-7);
    EXPECT_NEAR(discount_factor(m, 30), discount_by_loop(1.0, 0.05, 30), 1e-15);
}

TEST(DiscountFactor, YearZeroIsExactlyOne) {
    EXPECT_EQ(discount_factor(DiscountModel{0.2, 2019}, 0), 1.0);
}

TEST(DiscountFactor, RejectsNegativeYearsAndRates) {
    EXPECT_THROW(discount_factor(DiscountModel{}, -1), DomainError);
    EXPECT_THROW(discount_factor(DiscountModel{-1.0, 2019}, 3), DomainError);
    EXPECT_THROW(DiscountModel({0.05, 1500}).validate(), DomainError);
}

TEST(PresentValue, FiveThousandOverThirtyYears) {
    EXPECT_NEAR(present_value(5000, DiscountModel{}, 30), 1156.89, 0.005);
}

TEST(PresentValue, MatchesLoopOracleOverManyInputs) {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> amount(0, 1e6), rate(0, 0.2);
    std::uniform_int_distribution<int> years(0, 60);
    for (int i = 0; i < 500; ++i) {
        const double a = amount(gen), r = rate(gen);
        const int t = years(gen);
        EXPECT_NEAR(present_value(a, DiscountModel{r, 2019}, t), discount_by_loop(a, r, t), 1e-9 * (1 + a));
    }
}

TEST(PresentValue, IsHomogeneousInAmount) {
    const DiscountModel m{0.035, 2019};
    for (double k : {0.5, 2.0, 10.0, 1234.5}) {
        EXPECT_NEAR(present_value(k * 812.4, m, 12), k * present_value(812.4, m, 12), 1e-9 * k * 812.4);
    }
}

struct GoldenCase {
    double raw;
    TimingProfile timing;
    double expected;
};

class AnnualizedGolden : public ::testing::TestWithParam<GoldenCase> {};

TEST_P(AnnualizedGolden, ExactToTheCent) {
    const auto& c = GetParam();
    const double v = annualized_value(item("x", ItemKind::cost, c.raw, c.timing), DiscountModel{});
    EXPECT_EQ(round_cents(v), c.expected);
}

INSTANTIATE_TEST_SUITE_P(Items, AnnualizedGolden,
                         ::testing::Values(GoldenCase{5000, OneOffAnnualized{30}, 166.67},
                                           GoldenCase{90500, OneOffAnnualized{30}, 3016.67},
                                           GoldenCase{1000, RecurringDeferred{1}, 952.38},
                                           GoldenCase{1720, PeriodicAveraged{5}, 344.00},
                                           GoldenCase{3708, OneOffAnnualized{30}, 123.60},
                                           GoldenCase{940.80, RecurringImmediate{}, 940.80},
                                           GoldenCase{2554.01, RecurringDeferred{1}, 2432.39}));

TEST(AnnualizedValue, DeferredUsesOffsetDiscounting) {
    const CashFlowItem c = item("x", ItemKind::cost, 1000, RecurringDeferred{3});
    EXPECT_NEAR(annualized_value(c, DiscountModel{}), discount_by_loop(1000, 0.05, 3), 1e-9);
}

TEST(TimingProfile, RejectsNonPositiveParameters) {
    EXPECT_THROW(validate(OneOffAnnualized{0}), DomainError);
    EXPECT_THROW(validate(PeriodicAveraged{0}), DomainError);
    EXPECT_THROW(validate(RecurringDeferred{0}), DomainError);
    EXPECT_NO_THROW(validate(RecurringDeferred{2}));
}

TEST(Aggregate, SplitsCostsAndBenefits) {
    const std::vector<CashFlowItem> items{item("a", ItemKind::cost, 5000, OneOffAnnualized{30}),
                                          item("b", ItemKind::cost, 940.8, RecurringImmediate{}),
                                          item("c", ItemKind::benefit, 1000, RecurringDeferred{1})};
    const Totals t = aggregate(items, DiscountModel{});
    EXPECT_NEAR(t.pv_costs, 5000.0 / 30 + 940.8, 1e-9);
    EXPECT_NEAR(t.pv_benefits, 1000 / 1.05, 1e-9);
}

TEST(Aggregate, IsPermutationInvariantBitForBit) {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> amount(0, 50000);
    std::vector<CashFlowItem> items;
    for (int i = 0; i < 40; ++i) {
        const TimingProfile timings[] = {OneOffAnnualized{30}, RecurringImmediate{}, RecurringDeferred{1},
                                         PeriodicAveraged{5}};
        items.push_back(item("i" + std::to_string(i), i % 3 ? ItemKind::cost : ItemKind::benefit, amount(gen),
                             timings[i % 4]));
    }
    const Totals reference = aggregate(items, DiscountModel{});
    for (int round = 0; round < 20; ++round) {
        std::shuffle(items.begin(), items.end(), gen);
        EXPECT_EQ(aggregate(items, DiscountModel{}), reference);
    }
}

TEST(Aggregate, RejectsDuplicateIdsAndNegativeAmounts) {
    const std::vector<CashFlowItem> dup{item("a", ItemKind::cost, 1, RecurringImmediate{}),
                                        item("a", ItemKind::benefit, 2, RecurringImmediate{})};
    EXPECT_THROW(aggregate(dup, DiscountModel{}), DomainError);
    const std::vector<CashFlowItem> neg{item("a", ItemKind::cost, -1, RecurringImmediate{})};
    EXPECT_THROW(aggregate(neg, DiscountModel{}), DomainError);
}

TEST(ItemKind, ParsesBothSpellings) {
    EXPECT_EQ(parse_item_kind("cost"), ItemKind::cost);
    EXPECT_EQ(parse_item_kind("benefit"), ItemKind::benefit);
    EXPECT_THROW(parse_item_kind("profit"), DomainError);
}
