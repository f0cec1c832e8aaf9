#pragma once

// One-factor and cross-product parameter sweeps, and cumulative-NPV
// forecasts with empirical 95% bands under water-volume uncertainty.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "greenval/scenario.hpp"

namespace greenval {

/// A swept parameter. Recognized targets:
///   discount_rate, carbon_price, water,
///   item:<item id>   (printed amount of that item),
///   rate:<item id>   (unit-rate value of that item's monetization chain).
struct ParameterSpec {
    std::string target;
    std::vector<double> values;
};

/// Parses "target=v1,v2,..." or "target=low:high:steps".
ParameterSpec parse_parameter(std::string_view text);

/// Evenly spaced values from low to high inclusive.
std::vector<double> linspace(double low, double high, int steps);

/// Applies one parameter value to a copy of the case and options.
/// Throws DomainError for unknown targets or values outside their domain.
void apply_parameter(CaseStudy& cs, EvalOptions& options, std::string_view target, double value);

struct SweepCell {
    std::vector<std::pair<std::string, double>> assignment;
    ComparisonReport comparison;
};

struct SweepResult {
    std::vector<ParameterSpec> parameters;
    /// Row-major over `parameters`; the last parameter varies fastest.
    std::vector<SweepCell> cells;
};

inline constexpr std::size_t kMaxSweepCells = 100000;

SweepResult sweep(const CaseStudy& cs, const std::vector<ParameterSpec>& specs,
                  const EvalOptions& options = {}, unsigned threads = 0);

enum class Distribution { uniform, triangular };
enum class ForecastMode { annualized, horizon_dcf };

std::string_view to_string(Distribution d);
Distribution parse_distribution(std::string_view text);
std::string_view to_string(ForecastMode m);
ForecastMode parse_forecast_mode(std::string_view text);

struct UncertaintySpec {
    Distribution distribution = Distribution::uniform;
    int samples = 1000;
    std::uint64_t seed = 42;
};

struct ForecastOptions {
    int horizon = 30;
    ForecastMode mode = ForecastMode::horizon_dcf;
    std::optional<UncertaintySpec> uncertainty;
    EvalOptions eval;
    /// 0 selects the hardware concurrency. Results do not depend on it.
    unsigned threads = 0;
};

struct ForecastBand {
    std::string scenario_id;
    ForecastMode mode = ForecastMode::horizon_dcf;
    int base_year = 2019;
    std::vector<int> years;  // 0..horizon
    std::vector<double> mean;
    std::vector<double> lower95;
    std::vector<double> upper95;
    int samples = 1;
    std::optional<UncertaintySpec> uncertainty;
    double terminal_std_error = 0.0;
    double mean_water_m3 = 0.0;
};

/// Undiscounted net (benefit - cost) flow per year 0..horizon. One-off
/// items post at year 0, recurring items at years 1..horizon, deferred
/// items from their offset, periodic items every period.
std::vector<double> yearly_net_flows(const Scenario& s, const ConversionContext& ctx, int horizon,
                                     std::optional<double> water_m3 = std::nullopt);

/// Cumulative NPV path for one water volume.
std::vector<double> npv_path(const Scenario& s, const ConversionContext& ctx, int horizon, ForecastMode mode,
                             std::optional<double> water_m3 = std::nullopt);

/// Water volume for sample `index`; depends only on (spec, range, index).
double sample_water(const UncertaintySpec& spec, const WaterRange& range, std::uint64_t index);

ForecastBand forecast_npv(const Scenario& s, const ConversionContext& ctx, const ForecastOptions& options);

}  // namespace greenval
