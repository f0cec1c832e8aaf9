#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "greenval/service.hpp"
#include "support.hpp"

using namespace greenval;
using nlohmann::json;

namespace {

const Registry& registry() {
    static const Registry r = Registry::load_directory(GREENVAL_DATA_DIR);
    return r;
}

ApiResponse post(std::string_view path, const json& body) {
    return handle_request(registry(), "POST", path, body.dump());
}

std::string error_code(const ApiResponse& r) { return json::parse(r.body)["error"]["code"]; }

}  // namespace

TEST(Service, ListsDatasetsInIndexOrder) {
    const ApiResponse r = handle_request(registry(), "GET", "/api/case-studies", "");
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(json::parse(r.body), json({"sicily", "emilia-romagna"}));
}

TEST(Service, ReturnsOneDataset) {
    const ApiResponse r = handle_request(registry(), "GET", "/api/case-studies/sicily", "");
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(load_case_study(r.body).metadata.id, "sicily");
    EXPECT_EQ(handle_request(registry(), "GET", "/api/case-studies/atlantis", "").status, 404);
}

TEST(Service, EvaluateEmilia) {
    const ApiResponse r = post("/api/evaluate", {{"dataset", "emilia-romagna"}, {"discount_rate", 0.05}});
    ASSERT_EQ(r.status, 200) << r.body;
    const json body = json::parse(r.body);
    EXPECT_EQ(body["evaluation"]["reports"][1]["npv"], "-74.90");
    EXPECT_EQ(body["manifest"]["command"], "evaluate");
}

TEST(Service, InlineDocument) {
    const json doc = to_json(testsupport::emilia());
    const ApiResponse r = post("/api/compare", {{"document", doc}});
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(json::parse(r.body)["comparison"]["recommended"], "er-with-cw");
    json broken = doc;
    broken["scenarios"].erase(0);
    EXPECT_EQ(post("/api/compare", {{"document", broken}}).status, 422);
}

TEST(Service, SweepWithObjectAndStringParams) {
    const ApiResponse r = post("/api/sweep", {{"dataset", "sicily"},
                                              {"params", json::array({json{{"target", "discount_rate"},
                                                                           {"values", {0.025, 0.05, 0.075}}},
                                                                      "water=6000:15000:2"})}});
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(json::parse(r.body)["sweep"]["cells"].size(), 6u);
    const ApiResponse ranged = post(
        "/api/sweep",
        {{"dataset", "sicily"}, {"params", {{{"target", "water"}, {"low", 6000}, {"high", 15000}, {"steps", 4}}}}});
    EXPECT_EQ(ranged.status, 200);
}

TEST(Service, ForecastIsDeterministic) {
    const json req{{"dataset", "sicily"}, {"samples", 500}, {"seed", 7}, {"threads", 3}};
    const ApiResponse a = post("/api/forecast", req);
    ASSERT_EQ(a.status, 200) << a.body;
    EXPECT_EQ(post("/api/forecast", req).body, a.body);
}

TEST(Service, StatusCodes) {
    EXPECT_EQ(post("/api/forecast", {{"dataset", "sicily"}, {"samples", 0}}).status, 422);
    EXPECT_EQ(post("/api/evaluate", {{"dataset", "atlantis"}}).status, 404);
    EXPECT_EQ(error_code(post("/api/evaluate", {{"dataset", "atlantis"}})), "unknown_dataset");
    EXPECT_EQ(handle_request(registry(), "POST", "/api/evaluate", "{not json").status, 400);
    EXPECT_EQ(post("/api/evaluate", json::array()).status, 400);
    EXPECT_EQ(post("/api/evaluate", {{"dataset", "sicily"}, {"discount", 0.05}}).status, 400);
    EXPECT_EQ(post("/api/evaluate", {{"dataset", "sicily"}, {"discount_rate", "abc"}}).status, 400);
    EXPECT_EQ(post("/api/evaluate", json::object()).status, 400);
    EXPECT_EQ(post("/api/evaluate", {{"dataset", "sicily"}, {"document", json::object()}}).status, 400);
    EXPECT_EQ(post("/api/evaluate", {{"dataset", "sicily"}, {"discount_rate", -2}}).status, 422);
    EXPECT_EQ(post("/api/evaluate", {{"dataset", "sicily"}, {"variant", "nope"}}).status, 422);
    EXPECT_EQ(post("/api/sweep", {{"dataset", "sicily"}, {"params", {"water=1:2"}}}).status, 422);
    EXPECT_EQ(post("/api/teleport", {{"dataset", "sicily"}}).status, 404);
    EXPECT_EQ(handle_request(registry(), "GET", "/api/evaluate", "").status, 405);
}

TEST(Service, OversizedPayloadIsRejected) {
    const std::string big(kMaxRequestBytes + 1, ' ');
    const ApiResponse r = handle_request(registry(), "POST", "/api/evaluate", big);
    EXPECT_EQ(r.status, 413);
}

TEST(Service, ResolvePortPrecedence) {
    ::unsetenv("GREENVAL_PORT");
    EXPECT_EQ(resolve_port(std::nullopt), 8080);
    ::setenv("GREENVAL_PORT", "9123", 1);
    EXPECT_EQ(resolve_port(std::nullopt), 9123);
    EXPECT_EQ(resolve_port(7000), 7000);
    ::setenv("GREENVAL_PORT", "http", 1);
    EXPECT_THROW(resolve_port(std::nullopt), DomainError);
    ::unsetenv("GREENVAL_PORT");
}

TEST(Service, LiveServerAnswersConcurrentRequests) {
    Service service(registry());
    const int port = service.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread server([&] { service.listen(); });
    service.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    const auto list = client.Get("/api/case-studies");
    ASSERT_TRUE(list);
    EXPECT_EQ(list->status, 200);
    EXPECT_EQ(list->get_header_value("Access-Control-Allow-Origin"), "*");

    const std::string body = json{{"dataset", "emilia-romagna"}, {"scenario", "baseline"}, {"samples", 200}}.dump();
    std::vector<std::string> bodies(6);
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        workers.emplace_back([&, i] {
            httplib::Client c("127.0.0.1", port);
            if (auto res = c.Post("/api/forecast", body, "application/json"); res && res->status == 200) {
                bodies[i] = res->body;
            }
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& b : bodies) {
        EXPECT_FALSE(b.empty());
        EXPECT_EQ(b, bodies[0]);
    }

    const auto options = client.Options("/api/evaluate");
    ASSERT_TRUE(options);
    EXPECT_EQ(options->status, 204);
    const auto big = client.Post("/api/evaluate", std::string(kMaxRequestBytes + 10, ' '), "application/json");
    ASSERT_TRUE(big);
    EXPECT_EQ(big->status, 413);

    service.stop();
    server.join();
}
