#include "greenval/monetize.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

namespace greenval {

namespace {

constexpr std::array<std::pair<Unit, std::string_view>, 5> kUnitNames{{
    {Unit::per_m3, "per_m3"},
    {Unit::per_ha, "per_ha"},
    {Unit::per_tonne, "per_tonne"},
    {Unit::per_kWh, "per_kWh"},
    {Unit::per_hour, "per_hour"},
}};

void require_non_negative(double value, const char* what) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(what) + " must be a finite non-negative number");
    }
}

}  // namespace

std::string_view to_string(Unit unit) {
    for (const auto& [u, name] : kUnitNames) {
        if (u == unit) return name;
    }
    return "?";
}

Unit parse_unit(std::string_view text) {
    for (const auto& [u, name] : kUnitNames) {
        if (name == text) return u;
    }
    throw DomainError("unknown unit '" + std::string(text) + "'");
}

std::string to_string(const PriceBasis& basis) {
    return basis.currency + "/" + std::to_string(basis.year);
}

MissingFactorError::MissingFactorError(const PriceBasis& basis)
    : DomainError("no rebase factor for " + to_string(basis)), basis_(basis) {}

double ConversionContext::factor(const PriceBasis& basis) const {
    if (auto it = rebase_factors.find(basis); it != rebase_factors.end()) {
        return it->second.factor;
    }
    if (basis == base()) {
        return 1.0;
    }
    throw MissingFactorError(basis);
}

void ConversionContext::validate() const {
    discount.validate();
    if (base_year != discount.base_year) {
        throw DomainError("context base year and discount base year differ");
    }
    for (const auto& [basis, entry] : rebase_factors) {
        if (!(entry.factor > 0.0) || !std::isfinite(entry.factor)) {
            throw DomainError("rebase factor for " + to_string(basis) + " must be positive");
        }
        if (basis == base() && entry.factor != 1.0) {
            throw DomainError("rebase factor for the base basis must be 1");
        }
        if (basis.year > base_year) {
            throw DomainError("rebase factor for " + to_string(basis) + " is later than the base year");
        }
    }
    require_non_negative(carbon_price, "carbon_price");
    require_non_negative(excavation_emission_factor, "excavation_emission_factor");
    if (lifespan < 1) {
        throw DomainError("lifespan must be at least 1 year");
    }
}

double rebase(double amount, const PriceBasis& basis, const ConversionContext& ctx) {
    return amount * ctx.factor(basis);
}

double unit_rate_value(const UnitRate& rate, const Quantity& quantity, const ConversionContext& ctx) {
    if (rate.unit != quantity.unit) {
        throw DomainError("unit mismatch: rate is " + std::string(to_string(rate.unit)) +
                          ", quantity is " + std::string(to_string(quantity.unit)));
    }
    require_non_negative(rate.value, "unit rate");
    require_non_negative(quantity.amount, "quantity");
    if (rate.price_year > ctx.base_year) {
        throw DomainError("unit rate price year is later than the base year");
    }
    return rebase(rate.value, rate.basis(), ctx) * quantity.amount;
}

double emission_cost(double excavated_volume_m3, const ConversionContext& ctx) {
    require_non_negative(excavated_volume_m3, "excavated volume");
    return excavated_volume_m3 * ctx.excavation_emission_factor / 1000.0 * ctx.carbon_price;
}

double carbon_cost(double co2e_tonnes, const ConversionContext& ctx) {
    require_non_negative(co2e_tonnes, "CO2e mass");
    return co2e_tonnes * ctx.carbon_price;
}

double pollutant_removal_value(double mass_kg_per_year, const UnitRate& price,
                               const ConversionContext& ctx) {
    require_non_negative(mass_kg_per_year, "removed mass");
    if (price.unit != Unit::per_tonne) {
        throw DomainError("pollutant price must be quoted per_tonne");
    }
    return unit_rate_value(price, {mass_kg_per_year / 1000.0, Unit::per_tonne}, ctx);
}

bool uses_water_volume(const Monetization& chain) {
    const auto* unit_chain = std::get_if<UnitRateChain>(&chain);
    return unit_chain != nullptr && !unit_chain->quantity.has_value();
}

double monetize(const Monetization& chain, const ConversionContext& ctx, std::optional<double> water_m3) {
    if (const auto* c = std::get_if<UnitRateChain>(&chain)) {
        double amount = 0.0;
        if (c->quantity) {
            amount = *c->quantity;
        } else {
            if (!water_m3) {
                throw DomainError("chain is bound to the water volume but the scenario has none");
            }
            if (c->rate.unit != Unit::per_m3) {
                throw DomainError("water-bound chains must use a per_m3 rate");
            }
            amount = *water_m3;
        }
        return unit_rate_value(c->rate, {amount, c->rate.unit}, ctx);
    }
    if (const auto* c = std::get_if<EmissionChain>(&chain)) {
        if (c->excavated_volume_m3.has_value() == c->co2e_tonnes.has_value()) {
            throw DomainError("emission chain needs exactly one of excavated_volume_m3 or co2e_tonnes");
        }
        return c->excavated_volume_m3 ? emission_cost(*c->excavated_volume_m3, ctx)
                                      : carbon_cost(*c->co2e_tonnes, ctx);
    }
    const auto& c = std::get<PollutantChain>(chain);
    return pollutant_removal_value(c.mass_kg_per_year, c.price, ctx);
}

}  // namespace greenval
