#include "greenval/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace greenval {

using nlohmann::json;

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : DatasetError("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                   message),
      line_(line),
      column_(column) {}

const Variant* CaseStudyDocument::find_variant(std::string_view id) const {
    for (const auto& v : variants) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

namespace {

// ---------------------------------------------------------------------------
// Reading

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
    throw SchemaError(where + ": " + what);
}

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) schema_fail(where, "expected an object");
}

void expect_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    expect_object(j, where);
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            schema_fail(where, "unknown field '" + key + "'");
        }
    }
}

const json& required(const json& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) schema_fail(where, std::string("missing field '") + key + "'");
    return *it;
}

std::string as_string(const json& j, const std::string& where) {
    if (!j.is_string()) schema_fail(where, "expected a string");
    return j.get<std::string>();
}

std::string get_string(const json& j, const std::string& where, const char* key) {
    return as_string(required(j, where, key), where + "." + key);
}

std::string get_string_or(const json& j, const std::string& where, const char* key, std::string fallback = {}) {
    auto it = j.find(key);
    return it == j.end() ? fallback : as_string(*it, where + "." + key);
}

double as_decimal(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) schema_fail(where, "expected a decimal string");
    const auto& s = j.get_ref<const std::string&>();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
        schema_fail(where, "'" + s + "' is not a decimal number");
    }
    return value;
}

double get_decimal(const json& j, const std::string& where, const char* key) {
    return as_decimal(required(j, where, key), where + "." + key);
}

std::optional<double> get_optional_decimal(const json& j, const std::string& where, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return as_decimal(*it, where + "." + key);
}

int as_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) schema_fail(where, "expected an integer");
    const auto v = j.get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        schema_fail(where, "integer out of range");
    }
    return static_cast<int>(v);
}

int get_int(const json& j, const std::string& where, const char* key) {
    return as_int(required(j, where, key), where + "." + key);
}

bool get_bool_or(const json& j, const std::string& where, const char* key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) schema_fail(where + "." + key, "expected a boolean");
    return it->get<bool>();
}

const json& get_array(const json& j, const std::string& where, const char* key) {
    const json& a = required(j, where, key);
    if (!a.is_array()) schema_fail(where + "." + key, "expected an array");
    return a;
}

template <class F>
auto domain(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const DomainError& e) {
        schema_fail(where, e.what());
    }
}

UnitRate read_rate(const json& j, const std::string& where) {
    expect_keys(j, where, {"value", "unit", "currency", "price_year"});
    UnitRate r;
    r.value = get_decimal(j, where, "value");
    r.unit = domain(where, [&] { return parse_unit(get_string(j, where, "unit")); });
    r.currency = get_string(j, where, "currency");
    r.price_year = get_int(j, where, "price_year");
    return r;
}

Monetization read_monetization(const json& j, const std::string& where) {
    expect_object(j, where);
    const std::string method = get_string(j, where, "method");
    if (method == "unit_rate") {
        expect_keys(j, where, {"method", "rate", "quantity"});
        UnitRateChain c;
        c.rate = read_rate(required(j, where, "rate"), where + ".rate");
        const json& q = required(j, where, "quantity");
        if (q.is_string() && q.get<std::string>() == "water") {
            c.quantity.reset();
        } else {
            c.quantity = as_decimal(q, where + ".quantity");
        }
        return c;
    }
    if (method == "emission") {
        expect_keys(j, where, {"method", "excavated_volume_m3", "co2e_tonnes"});
        EmissionChain c;
        c.excavated_volume_m3 = get_optional_decimal(j, where, "excavated_volume_m3");
        c.co2e_tonnes = get_optional_decimal(j, where, "co2e_tonnes");
        if (c.excavated_volume_m3.has_value() == c.co2e_tonnes.has_value()) {
            schema_fail(where, "emission chain needs exactly one of excavated_volume_m3 or co2e_tonnes");
        }
        return c;
    }
    if (method == "pollutant_removal") {
        expect_keys(j, where, {"method", "mass_kg_per_year", "price"});
        PollutantChain c;
        c.mass_kg_per_year = get_decimal(j, where, "mass_kg_per_year");
        c.price = read_rate(required(j, where, "price"), where + ".price");
        return c;
    }
    schema_fail(where, "unknown monetization method '" + method + "'");
}

TimingProfile read_timing(const json& j, const std::string& where, int default_lifespan) {
    expect_keys(j, where, {"type", "lifespan_years", "offset_years", "period_years"});
    const std::string type = get_string(j, where, "type");
    auto only = [&](const char* allowed) {
        for (const char* key : {"lifespan_years", "offset_years", "period_years"}) {
            if (j.contains(key) && (allowed == nullptr || std::string_view(key) != allowed)) {
                schema_fail(where, std::string("field '") + key + "' does not apply to " + type);
            }
        }
    };
    if (type == "one_off_annualized") {
        only("lifespan_years");
        return OneOffAnnualized{j.contains("lifespan_years") ? get_int(j, where, "lifespan_years") : default_lifespan};
    }
    if (type == "recurring_immediate") {
        only(nullptr);
        return RecurringImmediate{};
    }
    if (type == "recurring_deferred") {
        only("offset_years");
        return RecurringDeferred{get_int(j, where, "offset_years")};
    }
    if (type == "periodic_averaged") {
        only("period_years");
        return PeriodicAveraged{get_int(j, where, "period_years")};
    }
    schema_fail(where, "unknown timing type '" + type + "'");
}

ItemSpec read_item(const json& j, const std::string& where, int default_lifespan) {
    expect_keys(j, where,
                {"id", "kind", "category", "raw_amount", "currency", "price_year", "timing", "provenance",
                 "reported_value_2019", "reported_raw_amount", "monetization", "in_totals", "water_linear"});
    ItemSpec item;
    item.id = get_string(j, where, "id");
    const std::string at = where + "[" + item.id + "]";
    item.kind = domain(at, [&] { return parse_item_kind(get_string(j, at, "kind")); });
    item.category = get_string_or(j, at, "category");
    item.raw_amount = get_optional_decimal(j, at, "raw_amount");
    item.basis.currency = get_string_or(j, at, "currency", "EUR");
    item.basis.year = j.contains("price_year") ? get_int(j, at, "price_year") : 0;
    item.timing = read_timing(required(j, at, "timing"), at + ".timing", default_lifespan);
    item.provenance = get_string_or(j, at, "provenance");
    item.reported_value_2019 = get_optional_decimal(j, at, "reported_value_2019");
    item.reported_raw_amount = get_optional_decimal(j, at, "reported_raw_amount");
    if (auto it = j.find("monetization"); it != j.end()) {
        item.monetization = read_monetization(*it, at + ".monetization");
    }
    item.in_totals = get_bool_or(j, at, "in_totals", true);
    item.water_linear = get_bool_or(j, at, "water_linear", false);
    if (item.raw_amount && item.reported_raw_amount) {
        schema_fail(at, "reported_raw_amount only applies to derived items (no raw_amount)");
    }
    return item;
}

void check_unique_ids(const std::vector<ItemSpec>& items, const std::string& where) {
    std::set<std::string_view> seen;
    for (const auto& item : items) {
        if (!seen.insert(item.id).second) {
            throw DuplicateIdError(where + ": duplicate item id '" + item.id + "'");
        }
    }
}

Scenario read_scenario(const json& j, const std::string& where, int default_lifespan) {
    expect_keys(j, where,
                {"id", "label", "role", "area_m2", "annual_water_m3", "lifespan_years", "reported_aggregates",
                 "items"});
    Scenario s;
    s.id = get_string(j, where, "id");
    const std::string at = where + "[" + s.id + "]";
    s.label = get_string_or(j, at, "label", s.id);
    s.role = domain(at, [&] { return parse_role(get_string(j, at, "role")); });
    s.area_m2 = get_decimal(j, at, "area_m2");
    s.lifespan_years = j.contains("lifespan_years") ? get_int(j, at, "lifespan_years") : default_lifespan;
    if (auto it = j.find("annual_water_m3"); it != j.end()) {
        const std::string w = at + ".annual_water_m3";
        expect_keys(*it, w, {"min", "nominal", "max"});
        s.water = WaterRange{get_decimal(*it, w, "min"), get_decimal(*it, w, "nominal"), get_decimal(*it, w, "max")};
    }
    if (auto it = j.find("reported_aggregates"); it != j.end()) {
        const std::string r = at + ".reported_aggregates";
        expect_keys(*it, r,
                    {"total_costs", "total_benefits", "npv", "bcr", "roi", "cost_per_m2", "npv_per_m2", "source"});
        ReportedAggregates rep;
        rep.total_costs = get_optional_decimal(*it, r, "total_costs");
        rep.total_benefits = get_optional_decimal(*it, r, "total_benefits");
        rep.npv = get_optional_decimal(*it, r, "npv");
        rep.bcr = get_optional_decimal(*it, r, "bcr");
        rep.roi = get_optional_decimal(*it, r, "roi");
        rep.cost_per_m2 = get_optional_decimal(*it, r, "cost_per_m2");
        rep.npv_per_m2 = get_optional_decimal(*it, r, "npv_per_m2");
        rep.source = get_string_or(*it, r, "source");
        s.reported = rep;
    }
    const json& items = get_array(j, at, "items");
    for (std::size_t i = 0; i < items.size(); ++i) {
        s.items.push_back(read_item(items[i], at + ".items", s.lifespan_years));
    }
    check_unique_ids(s.items, at);
    return s;
}

ConversionContext read_context(const json& j, const std::string& where) {
    expect_keys(j, where,
                {"base_currency", "base_year", "rebase_factors", "carbon_price", "excavation_emission_factor",
                 "discount", "lifespan"});
    ConversionContext ctx;
    ctx.base_currency = get_string(j, where, "base_currency");
    ctx.base_year = get_int(j, where, "base_year");
    const json& factors = get_array(j, where, "rebase_factors");
    for (const auto& f : factors) {
        const std::string at = where + ".rebase_factors";
        expect_keys(f, at, {"currency", "year", "factor", "provenance"});
        PriceBasis basis{get_string(f, at, "currency"), get_int(f, at, "year")};
        RebaseFactor entry{get_decimal(f, at, "factor"), get_string_or(f, at, "provenance")};
        if (!ctx.rebase_factors.emplace(basis, entry).second) {
            schema_fail(at, "more than one factor for " + to_string(basis));
        }
    }
    ctx.carbon_price = get_decimal(j, where, "carbon_price");
    ctx.excavation_emission_factor = get_decimal(j, where, "excavation_emission_factor");
    const json& d = required(j, where, "discount");
    expect_keys(d, where + ".discount", {"rate", "base_year"});
    ctx.discount.rate = get_decimal(d, where + ".discount", "rate");
    ctx.discount.base_year = get_int(d, where + ".discount", "base_year");
    ctx.lifespan = get_int(j, where, "lifespan");
    return ctx;
}

CaseMetadata read_metadata(const json& j, const std::string& where) {
    expect_keys(j, where, {"id", "name", "location", "context", "cw_type", "characteristics", "source_notes"});
    CaseMetadata m;
    m.id = get_string(j, where, "id");
    m.name = get_string(j, where, "name");
    m.location = get_string_or(j, where, "location");
    m.context = get_string(j, where, "context");
    if (m.context != "urban" && m.context != "rural") {
        schema_fail(where + ".context", "expected 'urban' or 'rural'");
    }
    m.cw_type = get_string_or(j, where, "cw_type");
    if (auto it = j.find("characteristics"); it != j.end()) {
        expect_object(*it, where + ".characteristics");
        for (const auto& [k, v] : it->items()) {
            m.characteristics[k] = as_string(v, where + ".characteristics." + k);
        }
    }
    if (auto it = j.find("source_notes"); it != j.end()) {
        if (!it->is_array()) schema_fail(where + ".source_notes", "expected an array");
        for (const auto& n : *it) m.source_notes.push_back(as_string(n, where + ".source_notes"));
    }
    return m;
}

Variant read_variant(const json& j, const std::string& where, int default_lifespan) {
    expect_keys(j, where, {"id", "description", "quotes", "set_rates", "include_items", "add_items"});
    Variant v;
    v.id = get_string(j, where, "id");
    const std::string at = where + "[" + v.id + "]";
    v.description = get_string_or(j, at, "description");
    if (auto it = j.find("quotes"); it != j.end()) {
        if (!it->is_array()) schema_fail(at + ".quotes", "expected an array");
        for (const auto& q : *it) v.quotes.push_back(as_string(q, at + ".quotes"));
    }
    if (auto it = j.find("set_rates"); it != j.end()) {
        expect_object(*it, at + ".set_rates");
        for (const auto& [k, val] : it->items()) v.set_rates[k] = as_decimal(val, at + ".set_rates." + k);
    }
    if (auto it = j.find("include_items"); it != j.end()) {
        if (!it->is_array()) schema_fail(at + ".include_items", "expected an array");
        for (const auto& id : *it) v.include_items.push_back(as_string(id, at + ".include_items"));
    }
    if (auto it = j.find("add_items"); it != j.end()) {
        if (!it->is_array()) schema_fail(at + ".add_items", "expected an array");
        for (const auto& entry : *it) {
            const std::string e = at + ".add_items";
            expect_keys(entry, e, {"scenario_role", "item"});
            const Role role = domain(e, [&] { return parse_role(get_string(entry, e, "scenario_role")); });
            v.add_items.emplace_back(role, read_item(required(entry, e, "item"), e, default_lifespan));
        }
    }
    return v;
}

std::vector<PriceBasis> referenced_bases(const ItemSpec& item) {
    std::vector<PriceBasis> out{item.basis};
    if (!item.monetization) return out;
    if (const auto* c = std::get_if<UnitRateChain>(&*item.monetization)) out.push_back(c->rate.basis());
    if (const auto* c = std::get_if<PollutantChain>(&*item.monetization)) out.push_back(c->price.basis());
    return out;
}

void check_factors(const CaseStudyDocument& doc) {
    const ConversionContext& ctx = doc.case_study.context;
    std::vector<std::pair<std::string, const ItemSpec*>> items;
    for (const Scenario* s : {&doc.case_study.baseline, &doc.case_study.alternative}) {
        for (const auto& item : s->items) items.emplace_back(s->id, &item);
    }
    for (const auto& v : doc.variants) {
        for (const auto& [role, item] : v.add_items) items.emplace_back("variant " + v.id, &item);
    }
    for (const auto& [owner, item] : items) {
        for (const auto& basis : referenced_bases(*item)) {
            try {
                (void)ctx.factor(basis);
            } catch (const MissingFactorError&) {
                throw MissingRebaseFactorError(owner + "/" + item->id + ": no rebase factor for " + to_string(basis));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Writing

std::string decimal(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    if (ec != std::errc{}) return "0";
    return std::string(buf, ptr);
}

json rate_json(const UnitRate& r) {
    return {{"value", decimal(r.value)},
            {"unit", std::string(to_string(r.unit))},
            {"currency", r.currency},
            {"price_year", r.price_year}};
}

json monetization_json(const Monetization& m) {
    if (const auto* c = std::get_if<UnitRateChain>(&m)) {
        return {{"method", "unit_rate"},
                {"rate", rate_json(c->rate)},
                {"quantity", c->quantity ? json(decimal(*c->quantity)) : json("water")}};
    }
    if (const auto* c = std::get_if<EmissionChain>(&m)) {
        json j{{"method", "emission"}};
        if (c->excavated_volume_m3) j["excavated_volume_m3"] = decimal(*c->excavated_volume_m3);
        if (c->co2e_tonnes) j["co2e_tonnes"] = decimal(*c->co2e_tonnes);
        return j;
    }
    const auto& c = std::get<PollutantChain>(m);
    return {{"method", "pollutant_removal"},
            {"mass_kg_per_year", decimal(c.mass_kg_per_year)},
            {"price", rate_json(c.price)}};
}

json timing_json(const TimingProfile& t) {
    if (const auto* p = std::get_if<OneOffAnnualized>(&t)) {
        return {{"type", "one_off_annualized"}, {"lifespan_years", p->lifespan_years}};
    }
    if (std::holds_alternative<RecurringImmediate>(t)) {
        return {{"type", "recurring_immediate"}};
    }
    if (const auto* p = std::get_if<RecurringDeferred>(&t)) {
        return {{"type", "recurring_deferred"}, {"offset_years", p->offset_years}};
    }
    return {{"type", "periodic_averaged"}, {"period_years", std::get<PeriodicAveraged>(t).period_years}};
}

json item_json(const ItemSpec& item) {
    json j{{"id", item.id},
           {"kind", std::string(to_string(item.kind))},
           {"category", item.category},
           {"currency", item.basis.currency},
           {"price_year", item.basis.year},
           {"timing", timing_json(item.timing)},
           {"provenance", item.provenance}};
    if (item.raw_amount) j["raw_amount"] = decimal(*item.raw_amount);
    if (item.reported_value_2019) j["reported_value_2019"] = decimal(*item.reported_value_2019);
    if (item.reported_raw_amount) j["reported_raw_amount"] = decimal(*item.reported_raw_amount);
    if (item.monetization) j["monetization"] = monetization_json(*item.monetization);
    if (!item.in_totals) j["in_totals"] = false;
    if (item.water_linear) j["water_linear"] = true;
    return j;
}

json scenario_json(const Scenario& s) {
    json j{{"id", s.id},
           {"label", s.label},
           {"role", std::string(to_string(s.role))},
           {"area_m2", decimal(s.area_m2)},
           {"lifespan_years", s.lifespan_years},
           {"items", json::array()}};
    if (s.water) {
        j["annual_water_m3"] = {{"min", decimal(s.water->min)},
                                {"nominal", decimal(s.water->nominal)},
                                {"max", decimal(s.water->max)}};
    }
    if (s.reported) {
        json r = json::object();
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) r[key] = decimal(*v);
        };
        put("total_costs", s.reported->total_costs);
        put("total_benefits", s.reported->total_benefits);
        put("npv", s.reported->npv);
        put("bcr", s.reported->bcr);
        put("roi", s.reported->roi);
        put("cost_per_m2", s.reported->cost_per_m2);
        put("npv_per_m2", s.reported->npv_per_m2);
        if (!s.reported->source.empty()) r["source"] = s.reported->source;
        j["reported_aggregates"] = r;
    }
    for (const auto& item : s.items) j["items"].push_back(item_json(item));
    return j;
}

bool is_ratio_metric(std::string_view metric) {
    return metric == "bcr" || metric == "roi" || metric == "cost_per_m2" || metric == "npv_per_m2";
}

json money_or_null(double v) {
    return std::isfinite(v) ? json(format_money(v)) : json(nullptr);
}

json ratio_or_null(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? json(format_ratio(*v)) : json(nullptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_ratio(const std::optional<double>& v) {
    return v ? format_ratio(*v) : std::string();
}

void kpi_csv_cells(std::ostringstream& out, const KpiReport& r) {
    out << csv_field(r.scenario_id) << ',' << to_string(r.role) << ',' << format_money(r.pv_costs) << ','
        << format_money(r.pv_benefits) << ',' << format_money(r.npv) << ',' << csv_ratio(r.bcr) << ','
        << csv_ratio(r.roi) << ',' << format_ratio(r.cost_per_m2) << ',' << format_ratio(r.npv_per_m2);
}

constexpr const char* kKpiCsvHeader = "scenario_id,role,pv_costs,pv_benefits,npv,bcr,roi,cost_per_m2,npv_per_m2";

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string s(buf);
    // Avoid "-0.00" for values that round to zero.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------

CaseStudyDocument load_case_study(std::string_view document) {
    json root;
    try {
        root = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, document.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (document[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError(e.what(), line, column);
    }

    expect_keys(root, "document", {"schema_version", "metadata", "conversion_context", "scenarios", "variants",
                                   "deviation_appendix"});
    CaseStudyDocument doc;
    doc.schema_version = get_string(root, "document", "schema_version");
    if (doc.schema_version != kSchemaVersion) {
        throw SchemaError("unsupported schema_version '" + doc.schema_version + "' (expected " +
                          std::string(kSchemaVersion) + ")");
    }
    doc.metadata = read_metadata(required(root, "document", "metadata"), "metadata");
    doc.case_study.context = read_context(required(root, "document", "conversion_context"), "conversion_context");

    const json& scenarios = get_array(root, "document", "scenarios");
    std::optional<Scenario> baseline;
    std::optional<Scenario> alternative;
    for (const auto& sj : scenarios) {
        Scenario s = read_scenario(sj, "scenarios", doc.case_study.context.lifespan);
        auto& slot = s.role == Role::baseline ? baseline : alternative;
        if (slot) {
            throw SchemaError("more than one " + std::string(to_string(s.role)) + " scenario");
        }
        slot = std::move(s);
    }
    if (!baseline) throw SchemaError("document has no baseline scenario");
    if (!alternative) throw SchemaError("document has no alternative scenario");
    doc.case_study.baseline = std::move(*baseline);
    doc.case_study.alternative = std::move(*alternative);

    // Items without an explicit price year are quoted in the base year.
    auto default_years = [&](std::vector<ItemSpec>& items) {
        for (auto& item : items) {
            if (item.basis.year == 0) item.basis.year = doc.case_study.context.base_year;
        }
    };
    default_years(doc.case_study.baseline.items);
    default_years(doc.case_study.alternative.items);

    if (auto it = root.find("variants"); it != root.end()) {
        if (!it->is_array()) schema_fail("variants", "expected an array");
        std::set<std::string> ids;
        for (const auto& vj : *it) {
            Variant v = read_variant(vj, "variants", doc.case_study.context.lifespan);
            for (auto& [role, item] : v.add_items) {
                if (item.basis.year == 0) item.basis.year = doc.case_study.context.base_year;
            }
            if (!ids.insert(v.id).second) throw DuplicateIdError("duplicate variant id '" + v.id + "'");
            doc.variants.push_back(std::move(v));
        }
    }
    if (auto it = root.find("deviation_appendix"); it != root.end()) {
        if (!it->is_array()) schema_fail("deviation_appendix", "expected an array");
        for (const auto& aj : *it) {
            expect_keys(aj, "deviation_appendix", {"scenario_id", "item_id", "field", "note"});
            AppendixEntry e{get_string(aj, "deviation_appendix", "scenario_id"),
                            get_string(aj, "deviation_appendix", "item_id"),
                            get_string(aj, "deviation_appendix", "field"),
                            get_string_or(aj, "deviation_appendix", "note")};
            if (e.field != "value_2019" && e.field != "raw_amount" && e.field != "chain") {
                schema_fail("deviation_appendix", "field must be value_2019, raw_amount or chain");
            }
            doc.deviation_appendix.push_back(std::move(e));
        }
    }

    check_factors(doc);
    domain("document", [&] {
        doc.case_study.validate();
        (void)evaluate_scenario(doc.case_study.baseline, doc.case_study.context);
        (void)evaluate_scenario(doc.case_study.alternative, doc.case_study.context);
        return 0;
    });
    for (const auto& v : doc.variants) {
        domain("variants[" + v.id + "]", [&] {
            const CaseStudy cs = apply_variant(doc, v.id);
            (void)compare_case(cs);
            return 0;
        });
    }
    return doc;
}

CaseStudyDocument load_case_study_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DatasetError("cannot read dataset '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_case_study(buffer.str());
}

json to_json(const CaseStudyDocument& doc) {
    const ConversionContext& ctx = doc.case_study.context;
    json factors = json::array();
    for (const auto& [basis, entry] : ctx.rebase_factors) {
        factors.push_back({{"currency", basis.currency},
                           {"year", basis.year},
                           {"factor", decimal(entry.factor)},
                           {"provenance", entry.provenance}});
    }
    json metadata{{"id", doc.metadata.id},
                  {"name", doc.metadata.name},
                  {"location", doc.metadata.location},
                  {"context", doc.metadata.context},
                  {"cw_type", doc.metadata.cw_type},
                  {"characteristics", doc.metadata.characteristics},
                  {"source_notes", doc.metadata.source_notes}};
    json variants = json::array();
    for (const auto& v : doc.variants) {
        json vj{{"id", v.id}, {"description", v.description}, {"quotes", v.quotes}};
        json rates = json::object();
        for (const auto& [k, val] : v.set_rates) rates[k] = decimal(val);
        vj["set_rates"] = rates;
        vj["include_items"] = v.include_items;
        json added = json::array();
        for (const auto& [role, item] : v.add_items) {
            added.push_back({{"scenario_role", std::string(to_string(role))}, {"item", item_json(item)}});
        }
        vj["add_items"] = added;
        variants.push_back(vj);
    }
    json appendix = json::array();
    for (const auto& e : doc.deviation_appendix) {
        appendix.push_back({{"scenario_id", e.scenario_id}, {"item_id", e.item_id}, {"field", e.field}, {"note", e.note}});
    }
    return {{"schema_version", doc.schema_version},
            {"metadata", metadata},
            {"conversion_context",
             {{"base_currency", ctx.base_currency},
              {"base_year", ctx.base_year},
              {"rebase_factors", factors},
              {"carbon_price", decimal(ctx.carbon_price)},
              {"excavation_emission_factor", decimal(ctx.excavation_emission_factor)},
              {"discount", {{"rate", decimal(ctx.discount.rate)}, {"base_year", ctx.discount.base_year}}},
              {"lifespan", ctx.lifespan}}},
            {"scenarios", {scenario_json(doc.case_study.baseline), scenario_json(doc.case_study.alternative)}},
            {"variants", variants},
            {"deviation_appendix", appendix}};
}

std::string dump_case_study(const CaseStudyDocument& doc) {
    return to_json(doc).dump(2) + "\n";
}

std::string dataset_digest(const CaseStudyDocument& doc) {
    const std::string canonical = to_json(doc).dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(canonical.data(), canonical.size(), digest, &length, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

CaseStudy apply_variant(const CaseStudyDocument& doc, std::string_view variant_id) {
    CaseStudy cs = doc.case_study;
    if (variant_id.empty()) return cs;
    const Variant* v = doc.find_variant(variant_id);
    if (v == nullptr) {
        throw DomainError("unknown variant '" + std::string(variant_id) + "'");
    }
    for (const auto& [item_id, value] : v->set_rates) {
        EvalOptions unused;
        apply_parameter(cs, unused, "rate:" + item_id, value);
    }
    for (const auto& item_id : v->include_items) {
        bool found = false;
        for (Scenario* s : {&cs.baseline, &cs.alternative}) {
            if (ItemSpec* item = s->find_item(item_id)) {
                item->in_totals = true;
                found = true;
            }
        }
        if (!found) throw DomainError("variant '" + v->id + "' includes unknown item '" + item_id + "'");
    }
    for (const auto& [role, item] : v->add_items) {
        Scenario& s = role == Role::baseline ? cs.baseline : cs.alternative;
        if (s.find_item(item.id) != nullptr) {
            throw DomainError("variant '" + v->id + "' adds duplicate item '" + item.id + "'");
        }
        s.items.push_back(item);
    }
    return cs;
}

std::vector<std::string> validation_warnings(const CaseStudyDocument& doc) {
    std::vector<std::string> warnings;
    std::set<std::tuple<std::string, std::string, std::string>> matched;
    const auto& cs = doc.case_study;
    for (const Scenario* s : {&cs.baseline, &cs.alternative}) {
        const KpiReport report = evaluate_scenario(*s, cs.context);
        for (const auto& d : report.item_deviations) {
            if (!d.exceeds_tolerance) continue;
            // metric is "<scenario>/<item>:<field>"
            const auto slash = d.metric.find('/');
            const auto colon = d.metric.rfind(':');
            const std::string item_id = d.metric.substr(slash + 1, colon - slash - 1);
            const std::string field = d.metric.substr(colon + 1);
            const auto key = std::make_tuple(s->id, item_id, field);
            const bool registered = std::any_of(doc.deviation_appendix.begin(), doc.deviation_appendix.end(),
                                                [&](const AppendixEntry& e) {
                                                    return e.scenario_id == s->id && e.item_id == item_id &&
                                                           e.field == field;
                                                });
            if (registered) {
                matched.insert(key);
            } else {
                warnings.push_back(d.metric + ": computed " + format_money(d.computed) + " vs printed " +
                                   format_money(d.reported) + " is not registered in the deviation appendix");
            }
        }
    }
    for (const auto& e : doc.deviation_appendix) {
        if (!matched.count(std::make_tuple(e.scenario_id, e.item_id, e.field))) {
            warnings.push_back("appendix entry " + e.scenario_id + "/" + e.item_id + ":" + e.field +
                               " matches no deviation above tolerance");
        }
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// Reports

ReportFormat parse_report_format(std::string_view text) {
    if (text == "json") return ReportFormat::json;
    if (text == "csv") return ReportFormat::csv;
    throw DomainError("unknown format '" + std::string(text) + "' (expected json or csv)");
}

std::string format_money(double value) {
    return format_fixed(value, 2);
}

std::string format_ratio(double value) {
    return format_fixed(value, 4);
}

json to_json(const Deviation& d) {
    const bool ratio = is_ratio_metric(d.metric);
    auto value = [&](double v) {
        return std::isfinite(v) ? json(ratio ? format_ratio(v) : format_money(v)) : json(nullptr);
    };
    return {{"metric", d.metric},
            {"basis", d.basis},
            {"computed", value(d.computed)},
            {"reported", value(d.reported)},
            {"relative_gap", std::isfinite(d.relative_gap) ? json(format_fixed(d.relative_gap, 6)) : json(nullptr)},
            {"exceeds_tolerance", d.exceeds_tolerance},
            {"note", d.note}};
}

json to_json(const KpiReport& r) {
    json deviations = json::array();
    for (const auto& d : r.deviations) deviations.push_back(to_json(d));
    json items = json::array();
    for (const auto& d : r.item_deviations) items.push_back(to_json(d));
    return {{"scenario_id", r.scenario_id},
            {"label", r.label},
            {"role", std::string(to_string(r.role))},
            {"pv_costs", money_or_null(r.pv_costs)},
            {"pv_benefits", money_or_null(r.pv_benefits)},
            {"npv", money_or_null(r.npv)},
            {"bcr", ratio_or_null(r.bcr)},
            {"roi", ratio_or_null(r.roi)},
            {"cost_per_m2", ratio_or_null(r.cost_per_m2)},
            {"npv_per_m2", ratio_or_null(r.npv_per_m2)},
            {"deviations", deviations},
            {"item_deviations", items}};
}

json to_json(const ComparisonReport& c) {
    return {{"reports", {to_json(c.baseline), to_json(c.alternative)}},
            {"recommended", c.recommended},
            {"notes", c.notes}};
}

json to_json(const SweepResult& s) {
    json parameters = json::array();
    for (const auto& p : s.parameters) {
        json values = json::array();
        for (double v : p.values) values.push_back(decimal(v));
        parameters.push_back({{"target", p.target}, {"values", values}});
    }
    json cells = json::array();
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        const auto& cell = s.cells[i];
        json assignment = json::object();
        for (const auto& [target, value] : cell.assignment) assignment[target] = decimal(value);
        json cj = to_json(cell.comparison);
        cj["index"] = i;
        cj["assignment"] = assignment;
        cells.push_back(cj);
    }
    return {{"parameters", parameters}, {"cells", cells}};
}

json to_json(const ForecastBand& band) {
    auto series = [](const std::vector<double>& values) {
        json a = json::array();
        for (double v : values) a.push_back(format_money(v));
        return a;
    };
    json calendar = json::array();
    for (int y : band.years) calendar.push_back(band.base_year + y);
    json j{{"scenario_id", band.scenario_id},
           {"mode", std::string(to_string(band.mode))},
           {"base_year", band.base_year},
           {"years", band.years},
           {"calendar_years", calendar},
           {"mean", series(band.mean)},
           {"lower95", series(band.lower95)},
           {"upper95", series(band.upper95)},
           {"samples", band.samples},
           {"terminal_std_error", format_money(band.terminal_std_error)},
           {"mean_water_m3", format_money(band.mean_water_m3)}};
    if (band.uncertainty) {
        j["distribution"] = std::string(to_string(band.uncertainty->distribution));
        j["seed"] = band.uncertainty->seed;
    } else {
        j["distribution"] = nullptr;
        j["seed"] = nullptr;
    }
    return j;
}

json to_json(const RunManifest& m) {
    return {{"tool", std::string(kToolName)},
            {"version", std::string(kToolVersion)},
            {"command", m.command},
            {"dataset_id", m.dataset_id},
            {"dataset_sha256", m.dataset_sha256},
            {"parameters", m.parameters}};
}

json to_json(const ReportDocument& doc) {
    json j{{"manifest", to_json(doc.manifest)}};
    std::visit(
        [&](const auto& content) {
            using T = std::decay_t<decltype(content)>;
            if constexpr (std::is_same_v<T, EvaluationReport>) {
                json reports = json::array();
                for (const auto& r : content.reports) reports.push_back(to_json(r));
                j["evaluation"] = {{"reports", reports}};
            } else if constexpr (std::is_same_v<T, ComparisonReport>) {
                j["comparison"] = to_json(content);
            } else if constexpr (std::is_same_v<T, SweepResult>) {
                j["sweep"] = to_json(content);
            } else {
                j["forecast"] = to_json(content);
            }
        },
        doc.content);
    return j;
}

std::string emit_report(const ReportDocument& doc, ReportFormat format) {
    if (format == ReportFormat::json) {
        return to_json(doc).dump(2) + "\n";
    }
    std::ostringstream out;
    std::visit(
        [&](const auto& content) {
            using T = std::decay_t<decltype(content)>;
            if constexpr (std::is_same_v<T, EvaluationReport>) {
                out << kKpiCsvHeader << '\n';
                for (const auto& r : content.reports) {
                    kpi_csv_cells(out, r);
                    out << '\n';
                }
            } else if constexpr (std::is_same_v<T, ComparisonReport>) {
                out << kKpiCsvHeader << ",recommended\n";
                for (const KpiReport* r : {&content.baseline, &content.alternative}) {
                    kpi_csv_cells(out, *r);
                    out << ',' << (r->scenario_id == content.recommended ? "true" : "false") << '\n';
                }
            } else if constexpr (std::is_same_v<T, SweepResult>) {
                out << "cell";
                for (const auto& p : content.parameters) out << ',' << csv_field(p.target);
                out << ',' << kKpiCsvHeader << ",recommended\n";
                for (std::size_t i = 0; i < content.cells.size(); ++i) {
                    const auto& cell = content.cells[i];
                    for (const KpiReport* r : {&cell.comparison.baseline, &cell.comparison.alternative}) {
                        out << i;
                        for (const auto& [target, value] : cell.assignment) out << ',' << decimal(value);
                        out << ',';
                        kpi_csv_cells(out, *r);
                        out << ',' << (r->scenario_id == cell.comparison.recommended ? "true" : "false") << '\n';
                    }
                }
            } else {
                out << "year,mean,lower95,upper95\n";
                for (std::size_t y = 0; y < content.years.size(); ++y) {
                    out << content.base_year + content.years[y] << ',' << format_money(content.mean[y]) << ','
                        << format_money(content.lower95[y]) << ',' << format_money(content.upper95[y]) << '\n';
                }
            }
        },
        doc.content);
    return out.str();
}

}  // namespace greenval
