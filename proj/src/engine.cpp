#include "greenval/engine.hpp"

#include <charconv>

namespace greenval {

using nlohmann::json;

std::string_view to_string(Command c) {
    switch (c) {
        case Command::evaluate: return "evaluate";
        case Command::compare: return "compare";
        case Command::sweep: return "sweep";
        case Command::forecast: return "forecast";
    }
    return "?";
}

namespace {

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("0");
}

const Scenario& pick_scenario(const CaseStudy& cs, const std::string& key) {
    if (key == "baseline" || key == cs.baseline.id) return cs.baseline;
    if (key == "alternative" || key == cs.alternative.id) return cs.alternative;
    throw DomainError("unknown scenario '" + key + "'");
}

}  // namespace

ReportDocument run(const CaseStudyDocument& doc, const RunRequest& request) {
    CaseStudy cs = apply_variant(doc, request.variant);
    EvalOptions options;
    options.roi_base = request.roi_base;
    if (request.discount_rate) apply_parameter(cs, options, "discount_rate", *request.discount_rate);
    if (request.carbon_price) apply_parameter(cs, options, "carbon_price", *request.carbon_price);
    if (request.water_m3) apply_parameter(cs, options, "water", *request.water_m3);
    cs.validate();

    ReportDocument report;
    RunManifest& m = report.manifest;
    m.command = std::string(to_string(request.command));
    m.dataset_id = doc.metadata.id;
    m.dataset_sha256 = dataset_digest(doc);
    json& p = m.parameters;
    p["discount_rate"] = shortest(cs.context.discount.rate);
    p["carbon_price"] = shortest(cs.context.carbon_price);
    p["water_m3"] = options.water_m3 ? json(shortest(*options.water_m3)) : json(nullptr);
    p["variant"] = request.variant.empty() ? json(nullptr) : json(request.variant);
    p["roi_base"] = std::string(to_string(options.roi_base));
    p["mode"] = request.command == Command::forecast ? std::string(to_string(request.mode)) : "annualized";

    switch (request.command) {
        case Command::evaluate: {
            EvaluationReport e;
            e.reports.push_back(evaluate_scenario(cs.baseline, cs.context, options));
            e.reports.push_back(evaluate_scenario(cs.alternative, cs.context, options));
            report.content = std::move(e);
            break;
        }
        case Command::compare:
            report.content = compare_case(cs, options);
            break;
        case Command::sweep: {
            if (request.params.empty()) {
                throw DomainError("sweep needs at least one parameter");
            }
            json params = json::array();
            for (const auto& spec : request.params) {
                json values = json::array();
                for (double v : spec.values) values.push_back(shortest(v));
                params.push_back({{"target", spec.target}, {"values", values}});
            }
            p["params"] = params;
            report.content = sweep(cs, request.params, options, request.threads);
            break;
        }
        case Command::forecast: {
            ForecastOptions f;
            f.horizon = request.horizon;
            f.mode = request.mode;
            f.eval = options;
            f.threads = request.threads;
            if (request.uncertain) f.uncertainty = request.uncertainty;
            const Scenario& s = pick_scenario(cs, request.scenario);
            p["scenario"] = s.id;
            p["horizon"] = request.horizon;
            if (request.uncertain) {
                p["samples"] = request.uncertainty.samples;
                p["seed"] = request.uncertainty.seed;
                p["distribution"] = std::string(to_string(request.uncertainty.distribution));
            } else {
                p["samples"] = nullptr;
                p["seed"] = nullptr;
                p["distribution"] = nullptr;
            }
            report.content = forecast_npv(s, cs.context, f);
            break;
        }
    }
    return report;
}

}  // namespace greenval
