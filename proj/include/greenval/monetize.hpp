#pragma once

// Conversion of physical quantities and foreign-currency prices into
// base-year euros.

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "greenval/ledger.hpp"

namespace greenval {

enum class Unit { per_m3, per_ha, per_tonne, per_kWh, per_hour };

std::string_view to_string(Unit unit);
Unit parse_unit(std::string_view text);

/// A currency at a given price year.
struct PriceBasis {
    std::string currency;
    int year = 0;

    auto operator<=>(const PriceBasis&) const = default;
};

std::string to_string(const PriceBasis& basis);

struct RebaseFactor {
    double factor = 1.0;
    std::string provenance;

    friend bool operator==(const RebaseFactor&, const RebaseFactor&) = default;
};

struct UnitRate {
    double value = 0.0;
    Unit unit = Unit::per_m3;
    std::string currency = "EUR";
    int price_year = 2019;

    PriceBasis basis() const { return {currency, price_year}; }
};

struct Quantity {
    double amount = 0.0;
    Unit unit = Unit::per_m3;
};

class MissingFactorError : public DomainError {
public:
    explicit MissingFactorError(const PriceBasis& basis);

    const PriceBasis& basis() const { return basis_; }

private:
    PriceBasis basis_;
};

struct ConversionContext {
    std::string base_currency = "EUR";
    int base_year = 2019;
    /// Combined inflation + exchange multiplier from each basis into the base.
    std::map<PriceBasis, RebaseFactor> rebase_factors;
    double carbon_price = 60.0;               // base currency per tonne CO2e
    double excavation_emission_factor = 0.48; // kg CO2e per m3 excavated
    DiscountModel discount;
    int lifespan = 30;

    PriceBasis base() const { return {base_currency, base_year}; }

    /// Factor for `basis`; the base basis is always 1 even if not listed.
    double factor(const PriceBasis& basis) const;

    void validate() const;
};

double rebase(double amount, const PriceBasis& basis, const ConversionContext& ctx);

/// rebase(rate) x quantity. Throws DomainError when the quantity unit does
/// not match the rate unit or the quantity is negative.
double unit_rate_value(const UnitRate& rate, const Quantity& quantity, const ConversionContext& ctx);

/// One-off carbon cost of an excavation: volume x factor / 1000 x price.
double emission_cost(double excavated_volume_m3, const ConversionContext& ctx);

/// Carbon cost of a known CO2e mass.
double carbon_cost(double co2e_tonnes, const ConversionContext& ctx);

/// mass / 1000 x rebase(price). `price` must be quoted per tonne.
double pollutant_removal_value(double mass_kg_per_year, const UnitRate& price,
                               const ConversionContext& ctx);

// Item monetization chains. A chain either derives an item's amount or is
// kept alongside a printed amount as a cross-check.

struct UnitRateChain {
    UnitRate rate;
    /// Empty when the quantity is the scenario's annual water volume.
    std::optional<double> quantity;
};

struct EmissionChain {
    std::optional<double> excavated_volume_m3;
    std::optional<double> co2e_tonnes;
};

struct PollutantChain {
    double mass_kg_per_year = 0.0;
    UnitRate price;
};

using Monetization = std::variant<UnitRateChain, EmissionChain, PollutantChain>;

/// True when the chain's quantity follows the scenario water volume.
bool uses_water_volume(const Monetization& chain);

/// Evaluates a chain in base currency. `water_m3` is required for chains
/// bound to the water volume.
double monetize(const Monetization& chain, const ConversionContext& ctx,
                std::optional<double> water_m3 = std::nullopt);

}  // namespace greenval
