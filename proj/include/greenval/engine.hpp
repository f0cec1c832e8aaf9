#pragma once

// Single entry point shared by the CLI and the HTTP service, so both fronts
// produce the same report bytes for the same parameters.

#include <optional>
#include <string>
#include <vector>

#include "greenval/io.hpp"

namespace greenval {

enum class Command { evaluate, compare, sweep, forecast };

std::string_view to_string(Command c);

struct RunRequest {
    Command command = Command::evaluate;
    std::optional<double> discount_rate;
    std::optional<double> carbon_price;
    std::optional<double> water_m3;
    std::string variant;
    RoiBase roi_base = RoiBase::total_costs;

    // sweep
    std::vector<ParameterSpec> params;

    // forecast
    std::string scenario = "alternative";  // role name or scenario id
    int horizon = 30;
    ForecastMode mode = ForecastMode::horizon_dcf;
    bool uncertain = true;
    UncertaintySpec uncertainty;

    /// Worker threads; never changes the result.
    unsigned threads = 0;
};

/// Runs a request against a loaded dataset. Throws DomainError on invalid
/// parameters.
ReportDocument run(const CaseStudyDocument& doc, const RunRequest& request);

}  // namespace greenval
