#include "greenval/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

namespace greenval {

using nlohmann::json;

void Registry::add(CaseStudyDocument doc) {
    if (find(doc.metadata.id) != nullptr) {
        throw DuplicateIdError("dataset id '" + doc.metadata.id + "' registered twice");
    }
    docs_.push_back(std::move(doc));
}

const CaseStudyDocument* Registry::find(std::string_view id) const {
    for (const auto& d : docs_) {
        if (d.metadata.id == id) return &d;
    }
    return nullptr;
}

std::vector<std::string> Registry::ids() const {
    std::vector<std::string> out;
    for (const auto& d : docs_) out.push_back(d.metadata.id);
    return out;
}

Registry Registry::load_directory(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    const auto index = dir / "index.json";
    if (std::filesystem::exists(index)) {
        std::ifstream in(index);
        json names;
        try {
            names = json::parse(in);
        } catch (const json::parse_error& e) {
            throw DatasetError("cannot parse " + index.string() + ": " + e.what());
        }
        if (!names.is_array()) throw SchemaError(index.string() + ": expected an array of file names");
        for (const auto& n : names) {
            if (!n.is_string()) throw SchemaError(index.string() + ": expected an array of file names");
            files.push_back(dir / n.get<std::string>());
        }
    } else {
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    }
    Registry registry;
    for (const auto& f : files) registry.add(load_case_study_file(f));
    return registry;
}

namespace {

class BadRequest : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
    json body{{"error", {{"code", code}, {"message", message}}}};
    return {status, body.dump(2) + "\n"};
}

double number_field(const json& payload, const char* key) {
    const json& v = payload.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        double out = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (!s.empty() && ec == std::errc{} && ptr == s.data() + s.size()) return out;
    }
    throw BadRequest(std::string("field '") + key + "' must be a number");
}

std::string string_field(const json& payload, const char* key) {
    const json& v = payload.at(key);
    if (!v.is_string()) throw BadRequest(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

long long integer_field(const json& payload, const char* key) {
    const json& v = payload.at(key);
    if (!v.is_number_integer()) throw BadRequest(std::string("field '") + key + "' must be an integer");
    return v.get<long long>();
}

ParameterSpec parse_param_entry(const json& entry) {
    if (entry.is_string()) {
        return parse_parameter(entry.get<std::string>());
    }
    if (!entry.is_object() || !entry.contains("target")) {
        throw BadRequest("each param must be a 'target=values' string or an object with a target");
    }
    ParameterSpec spec;
    spec.target = string_field(entry, "target");
    if (entry.contains("values")) {
        const json& values = entry.at("values");
        if (!values.is_array()) throw BadRequest("param values must be an array");
        for (const auto& v : values) {
            json wrapper{{"v", v}};
            spec.values.push_back(number_field(wrapper, "v"));
        }
    } else if (entry.contains("low") && entry.contains("high") && entry.contains("steps")) {
        const long long steps = integer_field(entry, "steps");
        if (steps < 1 || steps > static_cast<long long>(kMaxSweepCells)) {
            throw DomainError("range steps must be between 1 and " + std::to_string(kMaxSweepCells));
        }
        spec.values = linspace(number_field(entry, "low"), number_field(entry, "high"), static_cast<int>(steps));
    } else {
        throw BadRequest("param '" + spec.target + "' needs values or low/high/steps");
    }
    return spec;
}

Command route_command(std::string_view name) {
    if (name == "evaluate") return Command::evaluate;
    if (name == "compare") return Command::compare;
    if (name == "sweep") return Command::sweep;
    if (name == "forecast") return Command::forecast;
    throw std::out_of_range("no such command");
}

}  // namespace

RunRequest parse_api_request(Command command, const json& payload) {
    static const std::vector<std::string_view> allowed{
        "dataset", "document", "discount_rate", "carbon_price", "water_m3", "variant", "roi_base", "params",
        "scenario", "horizon", "samples", "seed", "distribution", "mode", "uncertain", "threads"};
    if (!payload.is_object()) throw BadRequest("request body must be a JSON object");
    for (const auto& [key, value] : payload.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw BadRequest("unknown field '" + key + "'");
        }
    }

    RunRequest r;
    r.command = command;
    if (payload.contains("discount_rate")) r.discount_rate = number_field(payload, "discount_rate");
    if (payload.contains("carbon_price")) r.carbon_price = number_field(payload, "carbon_price");
    if (payload.contains("water_m3")) r.water_m3 = number_field(payload, "water_m3");
    if (payload.contains("variant")) r.variant = string_field(payload, "variant");
    if (payload.contains("roi_base")) r.roi_base = parse_roi_base(string_field(payload, "roi_base"));
    if (payload.contains("params")) {
        const json& params = payload.at("params");
        if (!params.is_array()) throw BadRequest("'params' must be an array");
        for (const auto& p : params) r.params.push_back(parse_param_entry(p));
    }
    if (payload.contains("scenario")) r.scenario = string_field(payload, "scenario");
    if (payload.contains("horizon")) {
        const long long h = integer_field(payload, "horizon");
        if (h < 1 || h > 500) throw DomainError("horizon must be between 1 and 500 years");
        r.horizon = static_cast<int>(h);
    }
    if (payload.contains("samples")) {
        const long long n = integer_field(payload, "samples");
        if (n < 1 || n > 1'000'000) throw DomainError("samples must be between 1 and 1000000");
        r.uncertainty.samples = static_cast<int>(n);
    }
    if (payload.contains("seed")) {
        const json& seed = payload.at("seed");
        if (!seed.is_number_unsigned()) throw BadRequest("field 'seed' must be a non-negative integer");
        r.uncertainty.seed = seed.get<std::uint64_t>();
    }
    if (payload.contains("distribution")) {
        r.uncertainty.distribution = parse_distribution(string_field(payload, "distribution"));
    }
    if (payload.contains("mode")) r.mode = parse_forecast_mode(string_field(payload, "mode"));
    if (payload.contains("uncertain")) {
        if (!payload.at("uncertain").is_boolean()) throw BadRequest("field 'uncertain' must be a boolean");
        r.uncertain = payload.at("uncertain").get<bool>();
    }
    if (payload.contains("threads")) {
        const long long t = integer_field(payload, "threads");
        if (t < 0 || t > 256) throw DomainError("threads must be between 0 and 256");
        r.threads = static_cast<unsigned>(t);
    }
    return r;
}

ApiResponse handle_request(const Registry& registry, std::string_view method, std::string_view path,
                           std::string_view body) {
    if (body.size() > kMaxRequestBytes) {
        return error_response(413, "payload_too_large", "request body exceeds 1 MiB");
    }
    constexpr std::string_view collection = "/api/case-studies";
    try {
        if (path == collection || path.starts_with(std::string(collection) + "/")) {
            if (method != "GET") return error_response(405, "method_not_allowed", "use GET");
            if (path == collection) {
                return {200, json(registry.ids()).dump(2) + "\n"};
            }
            const std::string id(path.substr(collection.size() + 1));
            const CaseStudyDocument* doc = registry.find(id);
            if (doc == nullptr) return error_response(404, "unknown_dataset", "no dataset '" + id + "'");
            return {200, dump_case_study(*doc)};
        }

        constexpr std::string_view api = "/api/";
        if (!path.starts_with(api)) return error_response(404, "not_found", "no route " + std::string(path));
        Command command;
        try {
            command = route_command(path.substr(api.size()));
        } catch (const std::out_of_range&) {
            return error_response(404, "not_found", "no route " + std::string(path));
        }
        if (method != "POST") return error_response(405, "method_not_allowed", "use POST");

        json payload;
        try {
            payload = json::parse(body.begin(), body.end());
        } catch (const json::parse_error& e) {
            return error_response(400, "malformed_payload", e.what());
        }
        if (!payload.is_object()) return error_response(400, "malformed_payload", "body must be a JSON object");

        const bool named = payload.contains("dataset");
        const bool inline_doc = payload.contains("document");
        if (named == inline_doc) {
            return error_response(400, "malformed_payload", "give exactly one of 'dataset' or 'document'");
        }
        RunRequest request = parse_api_request(command, payload);

        std::optional<CaseStudyDocument> loaded;
        const CaseStudyDocument* doc = nullptr;
        if (named) {
            if (!payload.at("dataset").is_string()) {
                return error_response(400, "malformed_payload", "'dataset' must be a string");
            }
            const auto id = payload.at("dataset").get<std::string>();
            doc = registry.find(id);
            if (doc == nullptr) return error_response(404, "unknown_dataset", "no dataset '" + id + "'");
        } else {
            try {
                loaded = load_case_study(payload.at("document").dump());
            } catch (const DatasetError& e) {
                return error_response(422, "invalid_dataset", e.what());
            }
            doc = &*loaded;
        }
        return {200, emit_report(run(*doc, request), ReportFormat::json)};
    } catch (const BadRequest& e) {
        return error_response(400, "malformed_payload", e.what());
    } catch (const json::exception& e) {
        return error_response(400, "malformed_payload", e.what());
    } catch (const DomainError& e) {
        return error_response(422, "validation_failed", e.what());
    } catch (const DatasetError& e) {
        return error_response(422, "invalid_dataset", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal_error", e.what());
    }
}

int resolve_port(std::optional<int> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("GREENVAL_PORT"); env != nullptr && *env != '\0') {
        int port = 0;
        const std::string_view s(env);
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), port);
        if (ec == std::errc{} && ptr == s.data() + s.size() && port >= 0 && port <= 65535) return port;
        throw DomainError("GREENVAL_PORT is not a valid port: '" + std::string(s) + "'");
    }
    return kDefaultPort;
}

struct Service::Impl {
    const Registry& registry;
    httplib::Server server;

    explicit Impl(const Registry& r) : registry(r) {
        server.set_payload_max_length(kMaxRequestBytes + 1);
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            const ApiResponse out = handle_request(registry, req.method, req.path, req.body);
            res.status = out.status;
            res.set_content(out.body, "application/json");
        };
        server.Get(R"(/api/.*)", handler);
        server.Post(R"(/api/.*)", handler);
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
};

Service::Service(const Registry& registry) : impl_(std::make_unique<Impl>(registry)) {}
Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen() { return impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace greenval
