#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cbaudit/taboo.hpp"

using namespace cbaudit;

namespace {

const DatasetSchema kSchema{"text", "label", std::string("id")};

TabooDataset parse(const std::string& text, const std::string& keep, const DatasetSchema& schema = kSchema) {
    std::istringstream in(text);
    return parse_taboo_dataset(in, "OLID", schema, keep);
}

/// Local HTTP server standing in for the toxicity API.
class MockServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

    explicit MockServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/analyze", [this](const httplib::Request& req, httplib::Response& res) {
            int call;
            {
                std::lock_guard lock(mu_);
                call = static_cast<int>(log_.size());
                log_.push_back({std::chrono::steady_clock::now(), req.body, req.get_param_value("key")});
            }
            handler_(req, res, call);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/analyze"; }

    struct Entry {
        std::chrono::steady_clock::time_point at;
        std::string body;
        std::string key;
    };
    std::vector<Entry> log() {
        std::lock_guard lock(mu_);
        return log_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::mutex mu_;
    std::vector<Entry> log_;
};

std::string toxicity_json(double v) {
    return nlohmann::json{{"attributeScores", {{"TOXICITY", {{"summaryScore", {{"value", v}, {"type", "PROBABILITY"}}}}}}}}
        .dump();
}

ToxicityClientConfig client_for(const MockServer& s) {
    ToxicityClientConfig cfg;
    cfg.endpoint = s.endpoint();
    cfg.api_key = "k3y/+";
    cfg.requests_per_second = 1000;
    cfg.initial_backoff = std::chrono::milliseconds(1);
    cfg.timeout = std::chrono::milliseconds(2000);
    return cfg;
}

}  // namespace

TEST_SUITE("parse_taboo_dataset") {
    TEST_CASE("keeps only the requested label") {
        auto ds = parse("id\ttext\tlabel\n1\ta\tOFF\n2\tb\tNOT\n3\tc\tOFF\n4\td\tNOT\n5\te\tNOT\n", "OFF");
        CHECK(ds.instances.size() == 2);
        CHECK(ds.total_rows == 5);
        CHECK(ds.label == "OFF");
        CHECK(ds.instances[0].id == "1");
        CHECK(ds.instances[1].id == "3");
    }

    TEST_CASE("absent label lists what was observed") {
        try {
            parse("id\ttext\tlabel\n1\ta\tOFF\n2\tb\tNOT\n", "HATE");
            FAIL("expected LabelNotFound");
        } catch (const LabelNotFound& e) {
            CHECK(e.observed() == std::vector<std::string>{"NOT", "OFF"});
            CHECK(std::string(e.what()).find("label not found") != std::string::npos);
            CHECK(std::string(e.what()).find("NOT, OFF") != std::string::npos);
        }
    }

    TEST_CASE("text is normalized") {
        auto ds = parse("id\ttext\tlabel\n9\tYOU suck!!\tOFF\n", "OFF");
        CHECK(ds.instances[0].norm_text == "you suck");
        CHECK(ds.instances[0].is_taboo());
    }

    TEST_CASE("label match is exact after trimming") {
        auto ds = parse("id\ttext\tlabel\n1\ta\t OFF \n2\tb\toff\n3\tc\tOFFENSIVE\n", "OFF");
        REQUIRE(ds.instances.size() == 1);
        CHECK(ds.instances[0].id == "1");
    }

    TEST_CASE("comma files with quoted fields") {
        const std::string csv =
            "id,tweet,class\r\n"
            "a,\"hello, \"\"world\"\"\",HATE\r\n"
            "b,\"line one\nline two\",HATE\r\n"
            "c,plain,OTHER\r\n";
        DatasetSchema schema{"tweet", "class", std::string("id")};
        auto ds = parse(csv, "HATE", schema);
        REQUIRE(ds.instances.size() == 2);
        CHECK(ds.instances[0].norm_text == "hello world");
        CHECK(ds.instances[1].norm_text == "line one line two");
    }

    TEST_CASE("ids default to name and row") {
        DatasetSchema schema{"text", "label", std::nullopt};
        auto ds = parse("text\tlabel\nx\tOFF\ny\tNOT\nz\tOFF\n", "OFF", schema);
        REQUIRE(ds.instances.size() == 2);
        CHECK(ds.instances[0].id == "OLID:1");
        CHECK(ds.instances[1].id == "OLID:3");
    }

    TEST_CASE("missing declared column is fatal") {
        CHECK_THROWS_WITH_AS(parse("id\tbody\tlabel\n1\ta\tOFF\n", "OFF"), doctest::Contains("'text'"),
                             FatalInputError);
        DatasetSchema schema{"text", "label", std::string("tweet_id")};
        CHECK_THROWS_AS(parse("id\ttext\tlabel\n1\ta\tOFF\n", "OFF", schema), FatalInputError);
    }
}

TEST_SUITE("import_taboo_scores") {
    TabooDataset ten() {
        std::string tsv = "id\ttext\tlabel\n";
        for (int i = 0; i < 10; ++i) tsv += "t" + std::to_string(i) + "\tText " + std::to_string(i) + "!\tOFF\n";
        return parse(tsv, "OFF");
    }

    TEST_CASE("decisions use a closed bound") {
        std::istringstream scores("t0,perspective,0.9\nt1,perspective,0.5\nt2,perspective,0.49\n");
        auto r = import_taboo_scores(ten(), scores, 0.5);
        const auto& in = r.dataset.instances;
        CHECK(*in[0].taboo_decision == true);
        CHECK(*in[1].taboo_decision == true);
        CHECK(*in[2].taboo_decision == false);
        CHECK(*in[0].taboo_score == 0.9);
    }

    TEST_CASE("missing ids are reported and left unscored") {
        std::string lines;
        for (int i = 0; i < 8; ++i) lines += "t" + std::to_string(i) + ",p,0.7\n";
        std::istringstream scores(lines);
        auto r = import_taboo_scores(ten(), scores, 0.5);
        CHECK(r.attached == 8);
        CHECK(r.missing_ids == std::vector<std::string>{"t8", "t9"});
        CHECK_FALSE(r.dataset.instances[9].taboo_score.has_value());
    }

    TEST_CASE("out of range scores and unknown ids") {
        std::istringstream scores("t0,p,1.2\nt1,p,x\nzz,p,0.3\nt2,q,0.8\n");
        auto r = import_taboo_scores(ten(), scores, 0.5, std::string_view("p"));
        CHECK(r.rejected == 2);
        CHECK(r.unknown_ids == 1);
        CHECK(r.attached == 0);  // t2 belongs to classifier q
    }

    TEST_CASE("texts and labels are never modified; decision is a threshold function") {
        auto original = ten();
        std::mt19937_64 rng(3);
        std::string lines;
        for (int i = 0; i < 10; ++i) lines += "t" + std::to_string(i) + ",p," + std::to_string(uniform_unit(rng)) + "\n";
        for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            std::istringstream scores(lines);
            auto r = import_taboo_scores(original, scores, t);
            for (std::size_t i = 0; i < original.instances.size(); ++i) {
                const auto& a = original.instances[i];
                const auto& b = r.dataset.instances[i];
                CHECK(a.id == b.id);
                CHECK(a.norm_text == b.norm_text);
                CHECK(a.label == b.label);
                CHECK(*b.taboo_decision == (*b.taboo_score >= t));
            }
        }
    }
}

TEST_SUITE("toxicity client") {
    TEST_CASE("request body and response parsing") {
        auto body = nlohmann::json::parse(toxicity_request_body("you are kind"));
        CHECK(body["comment"]["text"] == "you are kind");
        CHECK(body["requestedAttributes"]["TOXICITY"].is_object());
        CHECK(parse_toxicity_response(toxicity_json(0.93)).value() == 0.93);
        CHECK_FALSE(parse_toxicity_response("{}").has_value());
        CHECK_FALSE(parse_toxicity_response(toxicity_json(1.5)).has_value());
        CHECK_FALSE(parse_toxicity_response("not json").has_value());
    }

    TEST_CASE("score passthrough with the key as a query parameter") {
        MockServer server([](const httplib::Request&, httplib::Response& res, int) {
            res.set_content(toxicity_json(0.93), "application/json");
        });
        const std::vector<std::pair<std::string, std::string>> texts{{"a", "first"}, {"b", "second"}};
        auto r = fetch_toxicity(client_for(server), texts);
        REQUIRE(r.scores.size() == 2);
        CHECK(r.scores[0] == std::pair<std::string, double>{"a", 0.93});
        CHECK(r.scores[1].first == "b");
        CHECK(r.errors.empty());
        auto log = server.log();
        REQUIRE(log.size() == 2);
        CHECK(log[0].key == "k3y/+");
        CHECK(nlohmann::json::parse(log[1].body)["comment"]["text"] == "second");
    }

    TEST_CASE("429 then 200 retries once") {
        MockServer server([](const httplib::Request&, httplib::Response& res, int call) {
            if (call == 0) {
                res.status = 429;
                return;
            }
            res.set_content(toxicity_json(0.4), "application/json");
        });
        const std::vector<std::pair<std::string, std::string>> texts{{"a", "x"}};
        auto r = fetch_toxicity(client_for(server), texts);
        CHECK(r.retries == 1);
        REQUIRE(r.scores.size() == 1);
        CHECK(r.scores[0].second == 0.4);
        CHECK(server.log().size() == 2);
    }

    TEST_CASE("persistent 500 lands in the error ledger") {
        MockServer server([](const httplib::Request& req, httplib::Response& res, int) {
            if (nlohmann::json::parse(req.body)["comment"]["text"] == "bad")
                res.status = 500;
            else
                res.set_content(toxicity_json(0.1), "application/json");
        });
        auto cfg = client_for(server);
        cfg.max_retries = 2;
        const std::vector<std::pair<std::string, std::string>> texts{{"a", "bad"}, {"b", "good"}};
        auto r = fetch_toxicity(cfg, texts);
        REQUIRE(r.errors.size() == 1);
        CHECK(r.errors[0].first == "a");
        CHECK(r.errors[0].second == "HTTP 500");
        REQUIRE(r.scores.size() == 1);
        CHECK(r.scores[0].first == "b");
        CHECK(server.log().size() == 4);  // 1 + 2 retries, then b
    }

    TEST_CASE("client errors other than 429 are not retried") {
        MockServer server([](const httplib::Request&, httplib::Response& res, int) { res.status = 400; });
        const std::vector<std::pair<std::string, std::string>> texts{{"a", "x"}};
        auto r = fetch_toxicity(client_for(server), texts);
        CHECK(r.errors.size() == 1);
        CHECK(server.log().size() == 1);
    }

    TEST_CASE("authentication failure is fatal") {
        MockServer server([](const httplib::Request&, httplib::Response& res, int) { res.status = 403; });
        const std::vector<std::pair<std::string, std::string>> texts{{"a", "x"}};
        CHECK_THROWS_AS(fetch_toxicity(client_for(server), texts), AuthFailure);
    }

    TEST_CASE("unreachable endpoint is recorded per id") {
        ToxicityClientConfig cfg;
        cfg.endpoint = "http://127.0.0.1:1/v1/analyze";
        cfg.max_retries = 1;
        cfg.requests_per_second = 1000;
        cfg.initial_backoff = std::chrono::milliseconds(1);
        cfg.timeout = std::chrono::milliseconds(200);
        const std::vector<std::pair<std::string, std::string>> texts{{"a", "x"}};
        auto r = fetch_toxicity(cfg, texts);
        REQUIRE(r.errors.size() == 1);
        CHECK(r.errors[0].second.find("transport error") == 0);
    }

    TEST_CASE("rate cap holds against the server's timestamp log") {
        MockServer server([](const httplib::Request&, httplib::Response& res, int) {
            res.set_content(toxicity_json(0.5), "application/json");
        });
        auto cfg = client_for(server);
        cfg.requests_per_second = 20;
        std::vector<std::pair<std::string, std::string>> texts;
        for (int i = 0; i < 25; ++i) texts.emplace_back("id" + std::to_string(i), "t");
        auto r = fetch_toxicity(cfg, texts);
        CHECK(r.scores.size() == 25);
        auto log = server.log();
        REQUIRE(log.size() == 25);
        // Any window of one second holds at most 20 requests; 20 ms allows for server-side receive jitter.
        for (std::size_t i = 0; i + 20 < log.size(); ++i) CHECK(log[i + 20].at - log[i].at >= std::chrono::milliseconds(980));
    }

    TEST_CASE("config validation") {
        ToxicityClientConfig cfg;
        cfg.requests_per_second = 0;
        CHECK_THROWS(cfg.validate());
        CHECK_THROWS(RateLimiter(0.0));
    }
}
