#include "greenval/sensitivity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <thread>

namespace greenval {

namespace {

double parse_number(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw DomainError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

unsigned resolve_threads(unsigned requested, std::size_t work) {
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(work, 1)));
}

// Runs body(i) for i in [0, n) over contiguous chunks. The first exception
// thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    threads = resolve_threads(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(n, begin + chunk);
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    workers.clear();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<double> linspace(double low, double high, int steps) {
    if (steps < 1) {
        throw DomainError("range needs at least one step");
    }
    if (steps == 1) return {low};
    std::vector<double> values(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        values[static_cast<std::size_t>(i)] = low + (high - low) * i / (steps - 1);
    }
    values.back() = high;
    return values;
}

ParameterSpec parse_parameter(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == text.size()) {
        throw DomainError("parameter must look like target=v1,v2 or target=low:high:steps, got '" +
                          std::string(text) + "'");
    }
    ParameterSpec spec;
    spec.target = std::string(text.substr(0, eq));
    std::string_view rest = text.substr(eq + 1);
    if (rest.find(':') != std::string_view::npos) {
        const auto a = rest.find(':');
        const auto b = rest.find(':', a + 1);
        if (b == std::string_view::npos || rest.find(':', b + 1) != std::string_view::npos) {
            throw DomainError("range must be low:high:steps");
        }
        const double steps = parse_number(rest.substr(b + 1));
        if (steps != std::floor(steps) || steps < 1 || steps > static_cast<double>(kMaxSweepCells)) {
            throw DomainError("range steps must be a positive integer");
        }
        spec.values = linspace(parse_number(rest.substr(0, a)), parse_number(rest.substr(a + 1, b - a - 1)),
                               static_cast<int>(steps));
    } else {
        std::size_t start = 0;
        while (start <= rest.size()) {
            const auto comma = rest.find(',', start);
            const auto token = rest.substr(start, comma == std::string_view::npos ? rest.npos : comma - start);
            spec.values.push_back(parse_number(token));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    return spec;
}

void apply_parameter(CaseStudy& cs, EvalOptions& options, std::string_view target, double value) {
    if (!std::isfinite(value)) {
        throw DomainError("parameter values must be finite");
    }
    if (target == "discount_rate") {
        if (!(value > -1.0)) throw DomainError("discount_rate must be greater than -1");
        cs.context.discount.rate = value;
        return;
    }
    if (target == "carbon_price") {
        if (!(value >= 0.0)) throw DomainError("carbon_price must be non-negative");
        cs.context.carbon_price = value;
        return;
    }
    if (target == "water") {
        if (!(value >= 0.0)) throw DomainError("water volume must be non-negative");
        if (!cs.baseline.water && !cs.alternative.water) {
            throw DomainError("neither scenario declares a water range");
        }
        options.water_m3 = value;
        return;
    }

    const bool is_item = target.starts_with("item:");
    const bool is_rate = target.starts_with("rate:");
    if (!is_item && !is_rate) {
        throw DomainError("unknown parameter '" + std::string(target) + "'");
    }
    const std::string_view item_id = target.substr(5);
    if (!(value >= 0.0)) {
        throw DomainError("parameter '" + std::string(target) + "' must be non-negative");
    }
    bool found = false;
    for (Scenario* s : {&cs.baseline, &cs.alternative}) {
        ItemSpec* item = s->find_item(item_id);
        if (item == nullptr) continue;
        found = true;
        if (is_item) {
            item->raw_amount = value;
            continue;
        }
        if (!item->monetization) {
            throw DomainError("item '" + std::string(item_id) + "' has no unit rate");
        }
        if (auto* chain = std::get_if<UnitRateChain>(&*item->monetization)) {
            chain->rate.value = value;
        } else if (auto* pollutant = std::get_if<PollutantChain>(&*item->monetization)) {
            pollutant->price.value = value;
        } else {
            throw DomainError("item '" + std::string(item_id) + "' has no unit rate");
        }
    }
    if (!found) {
        throw DomainError("unknown item '" + std::string(item_id) + "' in parameter '" + std::string(target) + "'");
    }
}

SweepResult sweep(const CaseStudy& cs, const std::vector<ParameterSpec>& specs, const EvalOptions& options,
                  unsigned threads) {
    cs.validate();
    std::size_t cells = 1;
    for (const auto& spec : specs) {
        if (spec.values.empty()) {
            throw DomainError("parameter '" + spec.target + "' has no values");
        }
        cells *= spec.values.size();
        if (cells > kMaxSweepCells) {
            throw DomainError("sweep grid exceeds " + std::to_string(kMaxSweepCells) + " cells");
        }
    }
    // Reject unknown targets and out-of-domain values before fanning out.
    for (const auto& spec : specs) {
        for (double v : spec.values) {
            CaseStudy probe = cs;
            EvalOptions probe_options = options;
            apply_parameter(probe, probe_options, spec.target, v);
        }
    }

    SweepResult result;
    result.parameters = specs;
    result.cells.resize(cells);
    parallel_for(cells, threads, [&](std::size_t index) {
        CaseStudy local = cs;
        EvalOptions local_options = options;
        SweepCell& cell = result.cells[index];
        std::size_t rest = index;
        std::vector<std::size_t> picks(specs.size());
        for (std::size_t k = specs.size(); k-- > 0;) {
            picks[k] = rest % specs[k].values.size();
            rest /= specs[k].values.size();
        }
        for (std::size_t k = 0; k < specs.size(); ++k) {
            const double v = specs[k].values[picks[k]];
            apply_parameter(local, local_options, specs[k].target, v);
            cell.assignment.emplace_back(specs[k].target, v);
        }
        cell.comparison = compare_case(local, local_options);
    });
    return result;
}

std::string_view to_string(Distribution d) {
    return d == Distribution::uniform ? "uniform" : "triangular";
}

Distribution parse_distribution(std::string_view text) {
    if (text == "uniform") return Distribution::uniform;
    if (text == "triangular") return Distribution::triangular;
    throw DomainError("unknown distribution '" + std::string(text) + "'");
}

std::string_view to_string(ForecastMode m) {
    return m == ForecastMode::annualized ? "annualized" : "horizon-dcf";
}

ForecastMode parse_forecast_mode(std::string_view text) {
    if (text == "annualized") return ForecastMode::annualized;
    if (text == "horizon-dcf") return ForecastMode::horizon_dcf;
    throw DomainError("unknown mode '" + std::string(text) + "' (expected annualized or horizon-dcf)");
}

std::vector<double> yearly_net_flows(const Scenario& s, const ConversionContext& ctx, int horizon,
                                     std::optional<double> water_m3) {
    if (horizon < 1) {
        throw DomainError("forecast horizon must be at least 1 year");
    }
    const ResolvedItems resolved = resolve_items(s, ctx, water_m3);
    std::vector<double> flows(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (const auto& item : resolved.counted) {
        const double sign = item.kind == ItemKind::benefit ? 1.0 : -1.0;
        const double amount = sign * item.raw_amount;
        auto post_from = [&](int first, int step) {
            for (int y = first; y <= horizon; y += step) {
                flows[static_cast<std::size_t>(y)] += amount;
            }
        };
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, OneOffAnnualized>) {
                    flows[0] += amount;
                } else if constexpr (std::is_same_v<T, RecurringImmediate>) {
                    post_from(1, 1);
                } else if constexpr (std::is_same_v<T, RecurringDeferred>) {
                    post_from(t.offset_years, 1);
                } else {
                    post_from(t.period_years, t.period_years);
                }
            },
            item.timing);
    }
    return flows;
}

std::vector<double> npv_path(const Scenario& s, const ConversionContext& ctx, int horizon, ForecastMode mode,
                             std::optional<double> water_m3) {
    if (horizon < 1) {
        throw DomainError("forecast horizon must be at least 1 year");
    }
    std::vector<double> path(static_cast<std::size_t>(horizon) + 1, 0.0);
    if (mode == ForecastMode::annualized) {
        const ResolvedItems resolved = resolve_items(s, ctx, water_m3);
        const Totals totals = aggregate(resolved.counted, ctx.discount);
        const double yearly = totals.pv_benefits - totals.pv_costs;
        for (int y = 0; y <= horizon; ++y) {
            path[static_cast<std::size_t>(y)] = yearly * y;
        }
        return path;
    }
    const std::vector<double> flows = yearly_net_flows(s, ctx, horizon, water_m3);
    double cumulative = 0.0;
    for (int y = 0; y <= horizon; ++y) {
        cumulative += present_value(flows[static_cast<std::size_t>(y)], ctx.discount, y);
        path[static_cast<std::size_t>(y)] = cumulative;
    }
    return path;
}

double sample_water(const UncertaintySpec& spec, const WaterRange& range, std::uint64_t index) {
    // Counter-based seeding: each sample owns an independent generator.
    std::mt19937_64 gen(splitmix64(spec.seed ^ splitmix64(index)));
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;  // [0, 1)
    const double a = range.min;
    const double b = range.max;
    if (b <= a) return a;
    if (spec.distribution == Distribution::uniform) {
        return a + u * (b - a);
    }
    const double c = range.nominal;
    const double fc = (c - a) / (b - a);
    return u < fc ? a + std::sqrt(u * (b - a) * (c - a)) : b - std::sqrt((1.0 - u) * (b - a) * (b - c));
}

ForecastBand forecast_npv(const Scenario& s, const ConversionContext& ctx, const ForecastOptions& options) {
    ctx.validate();
    s.validate();
    if (options.horizon < 1) {
        throw DomainError("forecast horizon must be at least 1 year");
    }
    const auto years = static_cast<std::size_t>(options.horizon) + 1;

    ForecastBand band;
    band.scenario_id = s.id;
    band.mode = options.mode;
    band.base_year = ctx.base_year;
    band.uncertainty = options.uncertainty;
    band.years.resize(years);
    for (std::size_t y = 0; y < years; ++y) band.years[y] = static_cast<int>(y);

    if (!options.uncertainty) {
        const std::optional<double> water =
            options.eval.water_m3 ? options.eval.water_m3
                                  : (s.water ? std::optional(s.water->nominal) : std::nullopt);
        band.mean = npv_path(s, ctx, options.horizon, options.mode, water);
        band.lower95 = band.mean;
        band.upper95 = band.mean;
        band.samples = 1;
        band.mean_water_m3 = water.value_or(0.0);
        return band;
    }

    const UncertaintySpec& u = *options.uncertainty;
    if (u.samples < 1) {
        throw DomainError("forecast needs at least one sample");
    }
    if (!s.water) {
        throw DomainError("scenario '" + s.id + "' has no water range to sample");
    }
    const auto n = static_cast<std::size_t>(u.samples);
    std::vector<double> volumes(n);
    std::vector<std::vector<double>> paths(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
        volumes[i] = sample_water(u, *s.water, i);
        paths[i] = npv_path(s, ctx, options.horizon, options.mode, volumes[i]);
    });

    band.samples = u.samples;
    double volume_sum = 0.0;
    for (double v : volumes) volume_sum += v;
    band.mean_water_m3 = volume_sum / static_cast<double>(n);

    band.mean.resize(years);
    band.lower95.resize(years);
    band.upper95.resize(years);
    const auto rank = [n](double p) {
        const auto r = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
        return std::clamp<std::size_t>(r, 1, n) - 1;
    };
    const std::size_t lo = rank(0.025);
    const std::size_t hi = rank(0.975);
    std::vector<double> column(n);
    for (std::size_t y = 0; y < years; ++y) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = paths[i][y];
            sum += column[i];
        }
        std::sort(column.begin(), column.end());
        // Identical samples must give exactly that value, not a rounded average.
        const double mean = column.front() == column.back() ? column.front() : sum / static_cast<double>(n);
        band.mean[y] = mean;
        band.lower95[y] = std::min(column[lo], mean);
        band.upper95[y] = std::max(column[hi], mean);
        if (y + 1 == years && n > 1) {
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = paths[i][y] - mean;
                ss += d * d;
            }
            band.terminal_std_error = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
        }
    }
    return band;
}

}  // namespace greenval
