#include "greenval/cli.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "greenval/service.hpp"

#ifndef GREENVAL_DATA_DIR
#define GREENVAL_DATA_DIR "data"
#endif

namespace greenval {

namespace {

struct Options {
    std::string dataset;
    std::optional<double> discount_rate;
    std::optional<double> carbon_price;
    std::optional<double> water;
    std::string variant;
    std::string roi_base = "total_costs";
    std::string format = "json";
    std::string output;
    std::vector<std::string> params;
    std::string scenario = "alternative";
    int horizon = 30;
    int samples = 1000;
    std::uint64_t seed = 42;
    std::string distribution = "uniform";
    std::string mode = "horizon-dcf";
    bool no_uncertainty = false;
    unsigned threads = 0;
    bool strict = false;
    std::optional<int> port;
    std::string host = "127.0.0.1";
    std::string data_dir = GREENVAL_DATA_DIR;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Service* g_service = nullptr;

void on_signal(int) {
    if (g_service != nullptr) g_service->stop();
}

void add_overrides(CLI::App* cmd, Options& o) {
    cmd->add_option("dataset", o.dataset, "case-study JSON file")->required();
    cmd->add_option("--discount-rate", o.discount_rate, "discount rate, e.g. 0.05");
    cmd->add_option("--carbon-price", o.carbon_price, "carbon price in EUR per tonne CO2e");
    cmd->add_option("--water", o.water, "annual treated water volume in m3");
    cmd->add_option("--variant", o.variant, "named dataset variant");
    cmd->add_option("--roi-base", o.roi_base, "total_costs or capex")
        ->check(CLI::IsMember({"total_costs", "capex"}));
    cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("-o,--output", o.output, "write the report to a file instead of stdout");
    cmd->add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");
}

void write_report(const std::string& body, const Options& o, std::ostream& out) {
    if (o.output.empty()) {
        out << body;
        return;
    }
    std::ofstream file(o.output, std::ios::binary);
    if (!file || !(file << body)) {
        throw DatasetError("cannot write '" + o.output + "'");
    }
}

RunRequest build_request(Command command, const Options& o) {
    RunRequest r;
    r.command = command;
    r.discount_rate = o.discount_rate;
    r.carbon_price = o.carbon_price;
    r.water_m3 = o.water;
    r.variant = o.variant;
    r.roi_base = parse_roi_base(o.roi_base);
    for (const auto& p : o.params) {
        try {
            r.params.push_back(parse_parameter(p));
        } catch (const DomainError& e) {
            throw UsageError(std::string("--param: ") + e.what());
        }
    }
    r.scenario = o.scenario;
    r.horizon = o.horizon;
    r.mode = parse_forecast_mode(o.mode);
    r.uncertain = !o.no_uncertainty;
    r.uncertainty.samples = o.samples;
    r.uncertainty.seed = o.seed;
    r.uncertainty.distribution = parse_distribution(o.distribution);
    r.threads = o.threads;
    return r;
}

int serve(const Options& o, std::ostream& out) {
    const Registry registry = Registry::load_directory(o.data_dir);
    Service service(registry);
    const int port = service.bind(o.host, resolve_port(o.port));
    if (port < 0) {
        throw DomainError("cannot bind " + o.host + ":" + std::to_string(resolve_port(o.port)));
    }
    out << "greenval listening on http://" << o.host << ":" << port << "\n" << std::flush;
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.listen();
    g_service = nullptr;
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cost-benefit evaluation of constructed-wetland scenarios", "greenval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "greenval 1.0.0");

    Options o;
    auto* evaluate = app.add_subcommand("evaluate", "KPIs for both scenarios of a case study");
    add_overrides(evaluate, o);
    auto* compare = app.add_subcommand("compare", "compare the scenarios and recommend one");
    add_overrides(compare, o);
    auto* sweep_cmd = app.add_subcommand("sweep", "grid of comparisons over parameter values");
    add_overrides(sweep_cmd, o);
    sweep_cmd->add_option("--param", o.params, "target=v1,v2,... or target=low:high:steps (repeatable)")
        ->required();
    auto* forecast = app.add_subcommand("forecast", "cumulative NPV path with a 95% band");
    add_overrides(forecast, o);
    forecast->add_option("--scenario", o.scenario, "baseline, alternative, or a scenario id");
    forecast->add_option("--horizon", o.horizon, "years")->check(CLI::Range(1, 500));
    forecast->add_option("--samples", o.samples, "Monte Carlo samples")->check(CLI::Range(1, 1'000'000));
    forecast->add_option("--seed", o.seed, "random seed");
    forecast->add_option("--distribution", o.distribution, "uniform or triangular")
        ->check(CLI::IsMember({"uniform", "triangular"}));
    forecast->add_option("--mode", o.mode, "horizon-dcf or annualized")
        ->check(CLI::IsMember({"horizon-dcf", "annualized"}));
    forecast->add_flag("--no-uncertainty", o.no_uncertainty, "single path at the given or nominal volume");
    auto* validate = app.add_subcommand("validate", "check a dataset and list unregistered deviations");
    validate->add_option("dataset", o.dataset, "case-study JSON file")->required();
    validate->add_flag("--strict", o.strict, "fail when there are warnings");
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--port", o.port, "port (default: GREENVAL_PORT or 8080)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", o.host, "bind address");
    serve_cmd->add_option("--data-dir", o.data_dir, "directory of bundled datasets");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (serve_cmd->parsed()) return serve(o, out);

        const CaseStudyDocument doc = load_case_study_file(o.dataset);
        if (validate->parsed()) {
            const auto warnings = validation_warnings(doc);
            for (const auto& w : warnings) err << "warning: " << w << "\n";
            out << o.dataset << ": ok (" << warnings.size() << " warning" << (warnings.size() == 1 ? "" : "s")
                << ")\n";
            return o.strict && !warnings.empty() ? kExitInvalid : kExitOk;
        }

        Command command = Command::evaluate;
        if (compare->parsed()) command = Command::compare;
        if (sweep_cmd->parsed()) command = Command::sweep;
        if (forecast->parsed()) command = Command::forecast;
        const RunRequest request = build_request(command, o);
        write_report(emit_report(run(doc, request), parse_report_format(o.format)), o, out);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const DatasetError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

}  // namespace greenval
