#include <doctest.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "confdebate/agents/agent.hpp"
#include "confdebate/confidence/confidence.hpp"
#include "confdebate/core/answer.hpp"
#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"
#include "support.hpp"

using namespace confdebate;
using namespace confdebate::agents;
using nlohmann::json;

namespace {

core::QuestionRecord numeric_question(const std::string& id, const std::string& gold) {
    core::QuestionRecord q;
    q.id = id;
    q.question = "How many?";
    q.gold_answer = gold;
    q.answer_kind = core::AnswerKind::numeric;
    return q;
}

AgentSpec simulated(const std::string& id, double p, double kappa_p = 5.0, double bias = 0.0) {
    AgentSpec s;
    s.agent_id = id;
    s.backend = Backend::simulated;
    s.simulated.base_accuracy = p;
    s.simulated.persuadability = kappa_p;
    s.simulated.miscalibration_bias = bias;
    return s;
}

core::DebateTurn turn(const std::string& agent, int round, const std::string& answer, double conf) {
    core::DebateTurn t;
    t.agent_id = agent;
    t.round = round;
    t.answer_raw = answer;
    t.answer_norm = answer;
    t.conf_raw = core::ConfidenceScore(conf);
    t.conf_cal = core::ConfidenceScore(conf);
    return t;
}

std::string completion(const std::string& content, const json& logprobs) {
    json choice = {{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}};
    if (!logprobs.is_null()) choice["logprobs"] = {{"content", logprobs}};
    return json{{"id", "cmpl-1"}, {"object", "chat.completion"}, {"choices", json::array({choice})}}.dump();
}

const char* kContent = "Reason: It is the capital.\nAnswer: Paris France";

json content_logprobs() {
    return json::array({
        {{"token", "Reason"}, {"logprob", -0.01}, {"top_logprobs", json::array()}},
        {{"token", ":"}, {"logprob", 0.0}, {"top_logprobs", json::array()}},
        {{"token", " It is the capital."}, {"logprob", -1.5}, {"top_logprobs", json::array()}},
        {{"token", "\n"}, {"logprob", 0.0}, {"top_logprobs", json::array()}},
        {{"token", "Answer"}, {"logprob", -0.02}, {"top_logprobs", json::array()}},
        {{"token", ":"}, {"logprob", 0.0}, {"top_logprobs", json::array()}},
        {{"token", " Paris"},
         {"logprob", -0.25},
         {"top_logprobs", json::array({{{"token", " Paris"}, {"logprob", -0.25}}, {{"token", " Lyon"}, {"logprob", -2.0}}})}},
        {{"token", " France"}, {"logprob", -0.5}, {"top_logprobs", json::array()}},
    });
}

AgentSpec remote_spec(const std::string& base_url) {
    AgentSpec s;
    s.agent_id = "r1";
    s.backend = Backend::remote;
    s.remote.base_url = base_url;
    s.remote.model = "mock-model";
    s.remote.timeout_s = 5;
    return s;
}

}  // namespace

TEST_SUITE("agents") {

TEST_CASE("spec validation") {
    AgentSpec s = simulated("a", 0.5);
    CHECK_NOTHROW(s.validate());
    s.simulated.base_accuracy = 1.5;
    CHECK_THROWS_AS(s.validate(), Error);
    s = simulated("a", 0.5);
    s.simulated.miscalibration_bias = 0.4;
    CHECK_THROWS_AS(s.validate(), Error);
    AgentSpec r;
    r.agent_id = "r";
    r.backend = Backend::remote;
    CHECK_THROWS_AS(r.validate(), Error);
    r.remote.base_url = "http://localhost:1";
    r.remote.model = "m";
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("scripted agent replays stored text") {
    AgentSpec spec;
    spec.agent_id = "s1";
    spec.backend = Backend::scripted;
    spec.scripted.script = "unused";
    ScriptedAgent agent(spec, parse_script(R"({"question_id":"q1","round":0,"text":"Reason: a\nAnswer: 4"}
{"question_id":"q1","round":0,"agent_id":"s1","text":"Reason: mine\nAnswer: 5"}
{"question_id":"q1","round":1,"text":"Reason: b\nAnswer: 6"}
)"));
    const auto q = numeric_question("q1", "4");
    AgentRequest req;
    req.context.question = &q;
    for (int i = 0; i < 3; ++i) CHECK(agent.respond(req).text == "Reason: mine\nAnswer: 5");
    req.context.round = 1;
    CHECK(agent.respond(req).text == "Reason: b\nAnswer: 6");
    req.context.round = 2;
    try {
        agent.respond(req);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BackendUnavailable);
    }
    req.context.round = 0;
    req.need_logprobs = true;
    try {
        agent.respond(req);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LogprobsUnsupported);
    }
    CHECK(agent.requests().size() == 6);
}

TEST_CASE("candidate answers") {
    const auto c = candidate_answers(numeric_question("q", "10"), 3);
    CHECK(c.answers == std::vector<std::string>{"10", "11", "12", "13"});
    CHECK(c.gold_index == 0);

    core::QuestionRecord mc;
    mc.id = "m";
    mc.gold_answer = "C";
    mc.choices = {"x", "y", "z"};
    mc.answer_kind = core::AnswerKind::multiple_choice;
    const auto m = candidate_answers(mc, 3);
    CHECK(m.answers == std::vector<std::string>{"A", "B", "C"});
    CHECK(m.gold_index == 2);

    CHECK_THROWS_AS(candidate_answers(numeric_question("q", "1"), 0), Error);
}

TEST_CASE("simulated: p=1 always right, p=0 always wrong") {
    const auto q = numeric_question("q", "7");
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        CHECK(core::answers_match(simulated_step(simulated("a", 1.0), q, {}, 0, seed).answer, q));
        CHECK_FALSE(core::answers_match(simulated_step(simulated("a", 0.0), q, {}, 0, seed).answer, q));
    }
}

TEST_CASE("simulated: accuracy and confidence statistics") {
    const auto q = numeric_question("q", "7");
    int right = 0;
    double conf_right = 0.0, conf_wrong = 0.0;
    const int n = 20000;
    for (int seed = 0; seed < n; ++seed) {
        const auto s = simulated_step(simulated("a", 0.7), q, {}, 0, static_cast<std::uint64_t>(seed));
        const bool ok = core::answers_match(s.answer, q);
        right += ok;
        (ok ? conf_right : conf_wrong) += s.confidence.value();
    }
    CHECK(static_cast<double>(right) / n == doctest::Approx(0.7).epsilon(0.03));
    // Beta(k q + 1, k (1-q) + 1) with k=10 has mean (10 q + 1) / 12.
    CHECK(conf_right / right == doctest::Approx(9.0 / 12.0).epsilon(0.02));
    CHECK(conf_wrong / (n - right) == doctest::Approx(5.0 / 12.0).epsilon(0.03));
}

TEST_CASE("simulated: bias shifts confidence and clamps") {
    const auto q = numeric_question("q", "7");
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto plain = simulated_step(simulated("a", 1.0), q, {}, 0, seed);
        const auto biased = simulated_step(simulated("a", 1.0, 5.0, 0.3), q, {}, 0, seed);
        CHECK(biased.confidence.value() == doctest::Approx(std::min(1.0, plain.confidence.value() + 0.3)));
    }
}

TEST_CASE("simulated: switching rule") {
    const auto q = numeric_question("q", "7");
    // Less confident opponent: never switch.
    const std::vector<core::DebateTurn> weaker = {turn("a", 0, "8", 0.9), turn("b", 0, "7", 0.3)};
    // kappa_p = 0 with a more confident opponent: sigma(0) = 0.5.
    const std::vector<core::DebateTurn> stronger = {turn("a", 0, "8", 0.3), turn("b", 0, "7", 0.9)};
    int switched_zero = 0;
    int switched_strong = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed) {
        const auto u = static_cast<std::uint64_t>(seed);
        const auto keep = simulated_step(simulated("a", 0.5, 50.0), q, weaker, 1, u);
        CHECK(keep.answer == "8");
        CHECK_FALSE(keep.switched);
        switched_zero += simulated_step(simulated("a", 0.5, 0.0), q, stronger, 1, u).switched;
        switched_strong += simulated_step(simulated("a", 0.5, 5.0), q, stronger, 1, u).switched;
    }
    CHECK(static_cast<double>(switched_zero) / n == doctest::Approx(0.5).epsilon(0.04));
    const double expected = testsupport::sigmoid(5.0 * 0.6);
    CHECK(static_cast<double>(switched_strong) / n == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("simulated: same seed, same output") {
    const auto q = numeric_question("q", "7");
    SimulatedAgent agent(simulated("a", 0.6));
    AgentRequest req;
    req.context.question = &q;
    req.context.confidence_method = confidence::Method::LN;
    req.need_logprobs = true;
    req.rng_seed = 99;
    const auto a = agent.respond(req);
    const auto b = agent.respond(req);
    CHECK(a.text == b.text);
    REQUIRE(a.token_logprobs);
    CHECK(a.token_logprobs->back().logprob == b.token_logprobs->back().logprob);

    // The answer token carries log(confidence); LN over the span gives it back.
    const auto parsed = core::parse_turn(a.text, false);
    const auto span = confidence::extract_answer_tokens(*a.token_logprobs, parsed.answer);
    CHECK(span.size() == 1);
    CHECK(confidence::ln_confidence(span).value() ==
          doctest::Approx(std::exp(a.token_logprobs->back().logprob)).epsilon(1e-12));

    req.context.confidence_method = confidence::Method::SV;
    req.need_logprobs = false;
    const auto sv = core::parse_turn(agent.respond(req).text, true);
    CHECK(sv.sv_confidence.has_value());
}

TEST_CASE("remote: request body, logprobs, LN value") {
    testsupport::MockChatServer server([](const std::string&) {
        return std::pair{200, completion(kContent, content_logprobs())};
    });
    ::setenv("CONFDEBATE_TEST_KEY", "sk-test", 1);
    AgentSpec spec = remote_spec(server.base_url());
    spec.remote.api_key_env = "CONFDEBATE_TEST_KEY";
    spec.remote.top_logprobs = 5;
    std::vector<std::string> sent;
    RemoteAgent agent(spec, RemoteHooks{[&](const std::string&, const std::string& body) { sent.push_back(body); }, {}});

    AgentRequest req;
    req.system_prompt = "SYSTEM TEXT";
    req.user_prompt = "Question: where?";
    req.need_logprobs = true;
    const auto r = agent.respond(req);
    CHECK(r.text == kContent);
    REQUIRE(r.token_logprobs);
    CHECK(r.token_logprobs->size() == 8);
    CHECK(r.token_logprobs->at(6).top_alternatives.size() == 2);

    const auto bodies = server.bodies();
    REQUIRE(bodies.size() == 1);
    CHECK(bodies[0] == sent[0]);
    const auto body = json::parse(bodies[0]);
    CHECK(body["model"] == "mock-model");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "SYSTEM TEXT");
    CHECK(body["messages"][1]["content"] == "Question: where?");
    CHECK(body["logprobs"] == true);
    CHECK(body["top_logprobs"] == 5);
    CHECK(body["temperature"] == 0.0);
    CHECK(server.auth_headers()[0] == "Bearer sk-test");

    const auto parsed = core::parse_turn(r.text, false);
    const auto span = confidence::extract_answer_tokens(*r.token_logprobs, parsed.answer);
    CHECK(span.size() == 2);
    // exp((-0.25 - 0.5) / 2) at 30 digits.
    CHECK(std::abs(confidence::ln_confidence(span).value() - 0.687289278790972198545) < 1e-9);

    req.need_logprobs = false;
    agent.respond(req);
    const auto plain = json::parse(server.bodies()[1]);
    CHECK_FALSE(plain.contains("logprobs"));
    CHECK_FALSE(plain.contains("top_logprobs"));
}

TEST_CASE("remote: retries 429 with exponential backoff") {
    std::atomic<int> calls{0};
    testsupport::MockChatServer server([&](const std::string&) {
        if (calls++ < 2) return std::pair{429, std::string("{\"error\":\"rate limited\"}")};
        return std::pair{200, completion(kContent, content_logprobs())};
    });
    std::vector<double> delays;
    RemoteAgent agent(remote_spec(server.base_url()),
                      RemoteHooks{{}, [&](std::chrono::duration<double> d) { delays.push_back(d.count()); }});
    AgentRequest req;
    req.need_logprobs = true;
    const auto r = agent.respond(req);
    CHECK(r.attempt == 3);
    CHECK(delays == std::vector<double>{1.0, 2.0});
    const auto bodies = server.bodies();
    REQUIRE(bodies.size() == 3);
    CHECK(bodies[0] == bodies[2]);
}

TEST_CASE("remote: failure modes") {
    SUBCASE("missing logprobs") {
        testsupport::MockChatServer server([](const std::string&) { return std::pair{200, completion(kContent, nullptr)}; });
        RemoteAgent agent(remote_spec(server.base_url()));
        AgentRequest req;
        req.need_logprobs = true;
        try {
            agent.respond(req);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::LogprobsUnsupported);
        }
    }
    SUBCASE("retries exhausted on 500") {
        testsupport::MockChatServer server([](const std::string&) { return std::pair{500, std::string("{}")}; });
        int sleeps = 0;
        RemoteAgent agent(remote_spec(server.base_url()), RemoteHooks{{}, [&](auto) { ++sleeps; }});
        CHECK_THROWS_AS(agent.respond(AgentRequest{}), Error);
        CHECK(server.bodies().size() == 4);
        CHECK(sleeps == 3);
    }
    SUBCASE("400 is not retried") {
        testsupport::MockChatServer server([](const std::string&) { return std::pair{400, std::string("{}")}; });
        RemoteAgent agent(remote_spec(server.base_url()), RemoteHooks{{}, [](auto) {}});
        CHECK_THROWS_AS(agent.respond(AgentRequest{}), Error);
        CHECK(server.bodies().size() == 1);
    }
    SUBCASE("unset key variable") {
        AgentSpec spec = remote_spec("http://127.0.0.1:9");
        spec.remote.api_key_env = "CONFDEBATE_SURELY_UNSET_VAR";
        ::unsetenv("CONFDEBATE_SURELY_UNSET_VAR");
        RemoteAgent agent(spec);
        try {
            agent.respond(AgentRequest{});
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Config);
        }
    }
}

TEST_CASE("parse_chat_response shapes") {
    const auto r = parse_chat_response(completion("Reason: a\nAnswer: b", nullptr), false);
    CHECK(r.text == "Reason: a\nAnswer: b");
    CHECK_FALSE(r.token_logprobs);
    CHECK_THROWS_AS(parse_chat_response("{\"choices\":[]}", false), Error);
    CHECK_THROWS_AS(parse_chat_response("not json", false), Error);
}

}  // TEST_SUITE
