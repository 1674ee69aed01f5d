#include <cmath>
#include <random>
#include <thread>

#include <doctest.h>
#include <httplib.h>

#include "citelens/error.hpp"
#include "citelens/strategies.hpp"

using namespace citelens;
using namespace citelens::strategies;
using augment::ResolvedDocument;

namespace {

using SectionSpec = std::pair<std::string, std::vector<std::string>>;

// Each section cites its ids in order, one numeric marker per sentence.
ResolvedDocument make_doc(const std::string& id, const std::vector<SectionSpec>& sections) {
    std::map<std::string, int> number;
    std::vector<citeparse::Section> secs;
    for (const auto& [name, cited] : sections) {
        std::string body;
        for (const auto& c : cited) {
            if (!number.count(c)) number[c] = static_cast<int>(number.size()) + 1;
            body += "Work on this topic appears in [" + std::to_string(number[c]) + "]. ";
        }
        secs.push_back({name, body});
    }
    std::vector<std::string> by_number(number.size());
    for (const auto& [c, n] : number) by_number[static_cast<std::size_t>(n - 1)] = c;
    std::string refs;
    for (std::size_t i = 0; i < by_number.size(); ++i) {
        refs += "[" + std::to_string(i + 1) + "] A. Author. Entry " + by_number[i] + ". 2020.\n";
    }
    if (refs.empty()) refs = "[1] A. Author. Nothing. 2020.\n";
    ResolvedDocument rd;
    rd.paper_id = PaperId(id);
    rd.doc = citeparse::parse_bundle(citeparse::DocumentBundle::make("Doc " + id, secs, refs, citeparse::Style::numeric));
    for (std::size_t i = 0; i < by_number.size(); ++i) rd.resolution[std::to_string(i + 1)] = PaperId(by_number[i]);
    return rd;
}

std::vector<std::string> ids_of(const Ranking& r) {
    std::vector<std::string> out;
    for (const auto& x : r) out.push_back(x.paper_id.value);
    return out;
}

void add_paper(corpus::Corpus& c, const std::string& id, std::optional<std::int64_t> cites,
               const std::string& abstract = "") {
    corpus::PaperMetadata m;
    m.paper_id = PaperId(id);
    m.title = "Title " + id;
    m.year = 2021;
    m.citation_count = cites;
    m.abstract = abstract;
    c.upsert_paper(m);
}

// Scalar cosine written without the library helpers.
double cosine_oracle(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (const auto& [k, v] : a) {
        na += v * v;
        if (auto it = b.find(k); it != b.end()) dot += v * it->second;
    }
    for (const auto& [k, v] : b) nb += v * v;
    return (na == 0 || nb == 0) ? 0 : dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("linear: first-mention order with duplicates collapsed") {
    const auto rd = make_doc("D", {{"Introduction", {"C2", "C1", "C2"}}});
    CHECK(ids_of(rank_linear(rd)) == std::vector<std::string>{"C2", "C1"});
}

TEST_CASE("linear: empty filtered sections") {
    const auto rd = make_doc("D", {{"Methods", {"C1", "C2"}}, {"Results", {"C3"}}});
    CHECK(rank_linear(rd).empty());
    CHECK(ids_of(rank_linear(rd, SectionFilter{true})) == std::vector<std::string>{"C1", "C2", "C3"});
}

TEST_CASE("linear: eight-citation fixture across filtered sections") {
    const auto rd = make_doc("D", {{"1 Introduction", {"A", "B", "A", "C"}},
                                   {"Method", {"Z", "Y"}},
                                   {"2 RELATED WORK", {"D", "B", "E", "F", "Z", "G", "H"}}});
    // Hand-listed first occurrences in the two filtered sections.
    CHECK(ids_of(rank_linear(rd)) == std::vector<std::string>{"A", "B", "C", "D", "E", "F", "Z", "G", "H"});
}

TEST_CASE("global: descending count with tie group") {
    corpus::Corpus c;
    add_paper(c, "A", 500);
    add_paper(c, "B", 10);
    add_paper(c, "C", 10);
    const auto rd = make_doc("D", {{"Introduction", {"C", "B", "A"}}});
    const auto r = rank_global(rd, *c.snapshot());
    REQUIRE(r.size() == 3);
    CHECK(r[0].paper_id.value == "A");
    CHECK(r[1].score == r[2].score);
    CHECK(std::set<std::string>{r[1].paper_id.value, r[2].paper_id.value} == std::set<std::string>{"B", "C"});
}

TEST_CASE("global: unresolved citations excluded") {
    corpus::Corpus c;
    add_paper(c, "A", 5);
    auto rd = make_doc("D", {{"Introduction", {"A", "B"}}});
    rd.resolution.erase("2");
    CHECK(ids_of(rank_global(rd, *c.snapshot())) == std::vector<std::string>{"A"});
}

TEST_CASE("global: all equal counts truncate by seed") {
    corpus::Corpus c;
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) {
        ids.push_back("P" + std::to_string(i));
        add_paper(c, ids.back(), 7);
    }
    const auto rd = make_doc("D", {{"Introduction", ids}});
    const auto r = rank_global(rd, *c.snapshot());
    std::set<std::vector<std::string>> tops;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        tops.insert(ids_of(take_top_k(r, 5, rng)));
    }
    CHECK(tops.size() > 1);
}

TEST_CASE("reencountered: peer co-citation counts") {
    const auto doc = make_doc("D", {{"Introduction", {"A", "B", "C"}}});
    const auto p1 = make_doc("P1", {{"Introduction", {"A", "B"}}});
    const auto p2 = make_doc("P2", {{"Results", {"A"}}});
    const auto r = rank_reencountered(doc, {&p1, &p2});
    CHECK(ids_of(r) == std::vector<std::string>{"A", "B"});
    CHECK(r[0].score == 2);
    CHECK(r[1].score == 1);
    CHECK(rank_reencountered(doc, {}).empty());
}

TEST_CASE("reencountered: brute force on random small corpora") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> pool;
        for (int i = 0; i < 12; ++i) pool.push_back("X" + std::to_string(i));
        auto pick = [&] {
            std::vector<std::string> out;
            for (const auto& p : pool) {
                if (rng() % 2) out.push_back(p);
            }
            return out;
        };
        const auto doc_cites = pick();
        const auto doc = make_doc("D", {{"Introduction", doc_cites}});
        std::vector<ResolvedDocument> peers;
        std::vector<std::vector<std::string>> peer_cites;
        for (int p = 0; p < 4; ++p) {
            peer_cites.push_back(pick());
            peers.push_back(make_doc("P" + std::to_string(p), {{"Body", peer_cites.back()}}));
        }
        std::vector<const ResolvedDocument*> ptrs;
        for (const auto& p : peers) ptrs.push_back(&p);
        std::map<std::string, double> got;
        for (const auto& x : rank_reencountered(doc, ptrs)) got[x.paper_id.value] = x.score;
        std::map<std::string, double> expected;
        for (const auto& c : doc_cites) {
            int n = 0;
            for (const auto& pc : peer_cites) n += std::count(pc.begin(), pc.end(), c) > 0;
            if (n > 0) expected[c] = n;
        }
        CHECK(got == expected);
    }
}

TEST_CASE("lexical tf-idf on a three-document toy vocabulary") {
    LexicalProvider lp({"apple banana", "apple cherry", "banana banana date"});
    CHECK(lp.vocabulary() == std::vector<std::string>{"apple", "banana", "cherry", "date"});
    // N = 3; df(apple) = df(banana) = 2, df(cherry) = df(date) = 1.
    // idf = ln((1+N)/(1+df)) + 1.
    CHECK(lp.idf("apple") == doctest::Approx(1.2876820724517808).epsilon(1e-12));
    CHECK(lp.idf("date") == doctest::Approx(1.6931471805599454).epsilon(1e-12));
    // "banana banana date": (2 * 1.28768..., 1.69314...) normalized.
    const auto v = lp.embed_one("banana banana date");
    CHECK(v[0] == 0.0);
    CHECK(v[1] == doctest::Approx(0.8355915419449176).epsilon(1e-12));
    CHECK(v[2] == 0.0);
    CHECK(v[3] == doctest::Approx(0.5493512310263033).epsilon(1e-12));
    CHECK(lp.embed_one("Apple, BANANA!") == lp.embed_one("apple banana"));
}

TEST_CASE("cosine properties") {
    LexicalProvider lp({"graph neural networks", "citation parsing of documents", "neural citation models"});
    const auto a = lp.embed_one("graph neural networks");
    const auto b = lp.embed_one("neural citation models for documents");
    CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cosine(a, b) == cosine(b, a));
    CHECK(cosine(a, b) >= 0.0);
    CHECK(cosine(a, b) <= 1.0);
    CHECK(cosine(a, lp.embed_one("parsing")) == 0.0);
    CHECK(cosine(a, Vector(a.size(), 0.0)) == 0.0);
    CHECK_THROWS_AS(cosine({1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("embedding: identical text first, disjoint vocabulary zero") {
    corpus::Corpus c;
    for (auto [id, year] : {std::pair{"TOPIC", 2020}, std::pair{"SAME", 2018}}) {
        corpus::PaperMetadata m;
        m.paper_id = PaperId(id);
        m.title = "Grasp learning";
        m.year = year;
        m.abstract = "reinforcement learning for robotic grasping";
        c.upsert_paper(m);
    }
    add_paper(c, "OTHER", 1, "medieval poetry manuscripts");
    add_paper(c, "HALF", 1, "robotic arms");
    const auto snap = c.snapshot();
    const auto doc = make_doc("TOPIC", {{"Introduction", {"OTHER", "HALF", "SAME"}}});
    std::vector<std::string> texts;
    for (const auto& id : snap->ids()) texts.push_back(paper_text(id, *snap));
    LexicalProvider lp(texts);
    const auto r = rank_embedding(doc, {&doc}, *snap, &lp);
    REQUIRE(r.size() == 3);
    CHECK(r[0].paper_id.value == "SAME");
    CHECK(r[0].score == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r[2].paper_id.value == "OTHER");
    CHECK(cosine(lp.embed_one("Grasp learning reinforcement"), lp.embed_one("medieval poetry")) == 0.0);
    CHECK_THROWS_AS(rank_embedding(doc, {&doc}, *snap, nullptr), Error);
}

TEST_CASE("embedding: five-paper fixture matches an independent cosine") {
    corpus::Corpus c;
    const std::map<std::string, std::string> abstracts = {
        {"T1", "sparse attention transformers for long documents"},
        {"T2", "efficient transformers with linear attention"},
        {"C1", "attention is all you need transformers"},
        {"C2", "long document summarization with sparse models"},
        {"C3", "convolutional networks for image recognition"},
        {"C4", "linear algebra for efficient attention kernels"},
        {"C5", "bird migration patterns"},
    };
    for (const auto& [id, a] : abstracts) add_paper(c, id, 1, a);
    const auto snap = c.snapshot();
    const auto t1 = make_doc("T1", {{"Introduction", {"C1", "C2", "C3", "C4", "C5"}}});
    const auto t2 = make_doc("T2", {{"Introduction", {"C1"}}});
    std::vector<std::string> texts;
    for (const auto& id : snap->ids()) texts.push_back(paper_text(id, *snap));
    LexicalProvider lp(texts);
    const auto r = rank_embedding(t1, {&t1, &t2}, *snap, &lp);

    // Oracle: sparse tf-idf maps with the same idf formula, mean query.
    std::map<std::string, int> df;
    std::map<std::string, std::map<std::string, double>> tf;
    for (const auto& [id, a] : abstracts) {
        const std::string text = "title " + [&] { std::string s = id; for (auto& ch : s) ch = static_cast<char>(std::tolower(ch)); return s; }() + " " + a;
        std::istringstream in(text);
        std::set<std::string> seen;
        for (std::string w; in >> w;) {
            tf[id][w] += 1;
            if (seen.insert(w).second) ++df[w];
        }
    }
    auto vec = [&](const std::string& id) {
        std::map<std::string, double> v;
        double norm = 0;
        for (const auto& [w, n] : tf[id]) {
            v[w] = n * (std::log((1.0 + 7) / (1.0 + df[w])) + 1);
            norm += v[w] * v[w];
        }
        for (auto& [w, x] : v) x /= std::sqrt(norm);
        return v;
    };
    std::map<std::string, double> query;
    for (const auto& t : {"T1", "T2"}) {
        for (const auto& [w, x] : vec(t)) query[w] += x / 2;
    }
    std::vector<std::pair<double, std::string>> expected;
    for (const auto& cid : {"C1", "C2", "C3", "C4", "C5"}) expected.emplace_back(cosine_oracle(query, vec(cid)), cid);
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    REQUIRE(r.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(r[i].paper_id.value == expected[i].second);
        CHECK(r[i].score == doctest::Approx(expected[i].first).epsilon(1e-9));
    }
}

TEST_CASE("uniform_below is seed-stable") {
    std::mt19937_64 a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const auto x = uniform_below(a, 7);
        CHECK(x < 7);
        CHECK(x == uniform_below(b, 7));
    }
    std::mt19937_64 z(1);
    CHECK(uniform_below(z, 1) == 0);
    // The engine's 64-bit generator is fully specified by the standard.
    std::mt19937_64 g;
    g.discard(9999);
    CHECK(g() == 9981545732273789042ULL);
}

namespace {

Ranking scored(const std::vector<std::string>& ids) {
    Ranking r;
    double s = static_cast<double>(ids.size());
    for (const auto& id : ids) r.push_back({PaperId(id), s--});
    return r;
}

}  // namespace

TEST_CASE("pool: four disjoint top-fives pool to twenty") {
    std::map<StrategyName, Ranking> rs;
    int n = 0;
    for (auto s : kAllStrategies) {
        std::vector<std::string> ids;
        for (int i = 0; i < 7; ++i) ids.push_back("P" + std::to_string(n++));
        rs[s] = scored(ids);
    }
    const auto r = pool_rankings(rs, 5, 1);
    CHECK(r.pooled.size() == 20);
    CHECK(r.overlap_histogram.at(1) == 20);
}

TEST_CASE("pool: all strategies agree") {
    std::map<StrategyName, Ranking> rs;
    for (auto s : kAllStrategies) rs[s] = scored({"A", "B", "C", "D", "E", "F"});
    const auto r = pool_rankings(rs, 5, 1);
    CHECK(r.pooled.size() == 5);
    CHECK(r.overlap_histogram.at(4) == 5);
    const auto one = pool_rankings(rs, 1, 1);
    CHECK(one.pooled.size() == 1);
}

TEST_CASE("pool: planted overlap histogram") {
    // Two papers in all four, two in three, two in two, two in one.
    std::map<StrategyName, Ranking> rs;
    rs[StrategyName::embedding] = scored({"A1", "A2", "B1", "C1", "D1", "e1", "e2"});
    rs[StrategyName::global] = scored({"A1", "B1", "A2", "B2", "C1", "g1"});
    rs[StrategyName::linear] = scored({"B2", "A1", "A2", "C2", "B1", "l1", "l2", "l3"});
    rs[StrategyName::reencountered] = scored({"D2", "C2", "B2", "A2", "A1", "r1"});
    const auto r = pool_rankings(rs, 5, 9);
    CHECK(r.overlap_histogram == std::map<int, std::size_t>{{1, 2}, {2, 2}, {3, 2}, {4, 2}});
    CHECK(r.pooled.size() == 8);
    CHECK(r.attribution.at(PaperId("B2")) ==
          std::set<StrategyName>{StrategyName::global, StrategyName::linear, StrategyName::reencountered});
    std::size_t sum = 0;
    for (const auto& [_, v] : r.overlap_histogram) sum += v;
    CHECK(sum == r.pooled.size());
}

TEST_CASE("pool: seeded ties change only tie-group members") {
    std::map<StrategyName, Ranking> rs;
    Ranking tied;
    tied.push_back({PaperId("top"), 10});
    for (int i = 0; i < 8; ++i) tied.push_back({PaperId("t" + std::to_string(i)), 5});
    for (auto s : kAllStrategies) rs[s] = tied;
    rs[StrategyName::linear] = scored({"L1", "L2", "L3", "L4", "L5", "L6"});
    const auto a = pool_rankings(rs, 5, 1);
    CHECK(a == pool_rankings(rs, 5, 1));
    bool differed = false;
    for (std::uint64_t seed = 2; seed < 30; ++seed) {
        const auto b = pool_rankings(rs, 5, seed);
        CHECK(b.per_strategy.at(StrategyName::linear) == a.per_strategy.at(StrategyName::linear));
        for (auto s : {StrategyName::embedding, StrategyName::global, StrategyName::reencountered}) {
            CHECK(b.per_strategy.at(s)[0].paper_id.value == "top");
            for (const auto& x : b.per_strategy.at(s)) {
                if (x.paper_id.value != "top") CHECK(x.score == 5);
            }
        }
        differed = differed || b.pooled != a.pooled;
    }
    CHECK(differed);
}

TEST_CASE("pool_topk: pooled size within [k, 4k] and deterministic") {
    corpus::Corpus c;
    std::mt19937_64 rng(17);
    std::vector<std::string> all;
    for (int i = 0; i < 30; ++i) {
        all.push_back("R" + std::to_string(i));
        add_paper(c, all.back(), static_cast<std::int64_t>(rng() % 50),
                  "topic words " + std::to_string(rng() % 5) + " shared " + std::to_string(i));
    }
    auto sample = [&](int n) {
        std::vector<std::string> out = all;
        std::shuffle(out.begin(), out.end(), rng);
        out.resize(static_cast<std::size_t>(n));
        return out;
    };
    const auto doc = make_doc("D", {{"Introduction", sample(15)}, {"Related Work", sample(10)}});
    const auto p1 = make_doc("P1", {{"Introduction", sample(12)}});
    const auto p2 = make_doc("P2", {{"Introduction", sample(12)}});
    const auto snap = c.snapshot();
    std::vector<std::string> texts;
    for (const auto& id : snap->ids()) texts.push_back(paper_text(id, *snap));
    LexicalProvider lp(texts);
    const auto r = pool_topk(doc, {&p1, &p2}, *snap, &lp, 5, 123);
    CHECK(r.pooled.size() >= 5);
    CHECK(r.pooled.size() <= 20);
    CHECK(r == pool_topk(doc, {&p1, &p2}, *snap, &lp, 5, 123));
    const auto j = to_json(r);
    CHECK(j.at("per_strategy").size() == 4);
    CHECK(j.at("overlap_histogram").size() == 4);
}

TEST_CASE("http embedding provider: contract and failures") {
    httplib::Server server;
    server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json vectors = nlohmann::json::array();
        for (const auto& t : body.at("texts")) vectors.push_back({static_cast<double>(t.get<std::string>().size()), 1.0});
        res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
    });
    server.Post("/short", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"vectors": [[1.0]]})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    HttpEmbeddingProvider ok(base);
    const auto vs = ok.embed({"abc", "de"});
    REQUIRE(vs.size() == 2);
    CHECK(vs[0] == Vector{3.0, 1.0});
    HttpEmbeddingProvider bad(base, "/short");
    try {
        bad.embed({"a", "b"});
        FAIL("expected ProviderUnavailable");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::provider_unavailable);
    }
    server.stop();
    t.join();
    HttpEmbeddingProvider down(base, "/embed", std::chrono::milliseconds(200));
    CHECK_THROWS_AS(down.embed({"a"}), Error);
}
