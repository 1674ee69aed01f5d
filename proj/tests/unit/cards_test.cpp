#include <map>
#include <memory>

#include <doctest.h>

#include "../support/docs.hpp"
#include "citelens/cards.hpp"

using namespace citelens;
using namespace citelens::test;
using activity::ActivityStore;
using activity::EventKind;
using cards::CardContext;

namespace {

struct Fixture {
    corpus::Corpus corpus;
    ActivityStore store;
    std::map<PaperId, std::shared_ptr<const augment::ResolvedDocument>> docs;
    std::set<PaperId> own;

    void doc(const std::string& id, const std::vector<std::string>& cited) {
        add_paper(corpus, id, cited);
        docs[PaperId(id)] = std::make_shared<augment::ResolvedDocument>(numeric_doc(id, cited));
    }

    const augment::ResolvedDocument& get(const std::string& id) const { return *docs.at(PaperId(id)); }

    // Owns the values a CardContext refers to.
    struct Context {
        activity::ActivityState state;
        std::shared_ptr<const corpus::Snapshot> snap;
        augment::UserProfile profile;
        CardContext ctx;

        Context(const Fixture& f, augment::Toggles toggles, int window)
            : state(f.store.state()),
              snap(f.corpus.snapshot()),
              profile(augment::UserProfile::from_own(f.own, *snap)),
              ctx{state, *snap, profile, window, toggles} {
            ctx.documents = [&f](const PaperId& id) -> std::shared_ptr<const augment::ResolvedDocument> {
                auto it = f.docs.find(id);
                return it == f.docs.end() ? nullptr : it->second;
            };
        }
    };

    std::unique_ptr<Context> context(augment::Toggles toggles = {}, int window = 20) const {
        return std::make_unique<Context>(*this, toggles, window);
    }
};

}  // namespace

TEST_CASE("card lists reencounters from history with their citing sentences") {
    Fixture f;
    add_paper(f.corpus, "C");
    add_paper(f.corpus, "X");
    f.doc("H1", {"C"});
    f.doc("H2", {"X", "C"});
    f.doc("R", {"C"});
    f.store.append(ev(EventKind::open, "H1"));
    f.store.append(scroll("H1", 40));
    f.store.append(ev(EventKind::open, "H2"));
    f.store.append(ev(EventKind::open, "R"));

    const auto c = f.context();
    const auto card = cards::build_card(c->ctx, f.get("R"), "m0.0");
    CHECK(card.meta.paper_id == PaperId("C"));
    CHECK(card.marker_id == "m0.0");
    CHECK(card.citing_sentence == sentence(1));
    CHECK(card.reading_paper_id == PaperId("R"));
    REQUIRE(card.history_mentions.size() == 2);
    // Most recently opened first; the open paper itself is not a mention.
    CHECK(card.history_mentions[0].paper_id == PaperId("H2"));
    CHECK(card.history_mentions[0].citing_sentence == sentence(2));
    CHECK(card.history_mentions[0].title == "Paper H2");
    CHECK(card.history_mentions[1].paper_id == PaperId("H1"));
    CHECK(card.history_mentions[1].citing_sentence == sentence(1));
    CHECK(card.history_mentions[1].progress.hundredths == 40);
    REQUIRE(card.score.has_value());
    CHECK(card.score->value_hundredths == 100 + 140);
    CHECK(card.cls.color == Color::reencountered_yellow);
    CHECK_FALSE(card.library_state);
    CHECK_FALSE(card.saved_from.has_value());
    CHECK(card.stats.citation_count == 3);
}

TEST_CASE("history window bounds the mentions") {
    Fixture f;
    add_paper(f.corpus, "C");
    f.doc("H1", {"C"});
    f.doc("H2", {"C"});
    f.doc("R", {"C"});
    f.store.append(ev(EventKind::open, "H1"));
    f.store.append(ev(EventKind::open, "H2"));
    f.store.append(ev(EventKind::open, "R"));
    // W=2 holds R and H2; the open paper is dropped afterwards.
    const auto c = f.context({}, 2);
    const auto card = cards::build_card(c->ctx, f.get("R"), "m0.0");
    REQUIRE(card.history_mentions.size() == 1);
    CHECK(card.history_mentions[0].paper_id == PaperId("H2"));
    CHECK(card.score->value_hundredths == 100);
}

TEST_CASE("saved_from is the same on cards built from different documents") {
    Fixture f;
    add_paper(f.corpus, "C", {}, "Summary sentence one. Then more detail.");
    f.doc("R1", {"C"});
    f.doc("R2", {"C"});
    f.store.append(ev(EventKind::open, "R1"));
    f.store.append(save_from("C", "R1", sentence(1), 4242));
    f.store.append(ev(EventKind::open, "R2"));

    const auto c = f.context();
    const auto a = cards::build_card(c->ctx, f.get("R1"), "m0.0");
    const auto b = cards::build_card(c->ctx, f.get("R2"), "m0.0");
    CHECK(a.meta == b.meta);
    REQUIRE(a.saved_from.has_value());
    CHECK(a.saved_from == b.saved_from);
    CHECK(a.saved_from->source_paper_id == PaperId("R1"));
    CHECK(a.saved_from->citing_sentence == sentence(1));
    CHECK(a.saved_from->saved_at == 4242);
    CHECK(a.library_state);
    CHECK(a.cls.color == Color::saved_red);
    CHECK(a.meta.summary == std::optional<std::string>("Summary sentence one."));
}

TEST_CASE("unresolved marker raises with the raw reference text") {
    Fixture f;
    add_paper(f.corpus, "C");
    f.doc("R", {"C", ""});
    const auto c = f.context();
    try {
        cards::build_card(c->ctx, f.get("R"), "m0.1");
        FAIL("expected UnresolvedCitation");
    } catch (const cards::UnresolvedCitation& e) {
        CHECK(e.kind() == ErrorKind::unresolved_citation);
        CHECK(e.marker_id() == "m0.1");
        REQUIRE(e.raw_references().size() == 1);
        CHECK(e.raw_references()[0].find("Title number 2") != std::string::npos);
    }
}

TEST_CASE("unknown marker and foreign cited paper") {
    Fixture f;
    add_paper(f.corpus, "C");
    add_paper(f.corpus, "D");
    f.doc("R", {"C"});
    const auto c = f.context();
    try {
        cards::build_card(c->ctx, f.get("R"), "m9.9");
        FAIL("expected unknown_marker");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unknown_marker);
    }
    try {
        cards::build_card(c->ctx, f.get("R"), "m0.0", PaperId("D"));
        FAIL("expected unknown_paper");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unknown_paper);
    }
    CHECK(cards::build_card(c->ctx, f.get("R"), "m0.0", PaperId("C")).meta.paper_id == PaperId("C"));
}

TEST_CASE("multi-key marker selects the requested paper") {
    Fixture f;
    add_paper(f.corpus, "A");
    add_paper(f.corpus, "B");
    add_paper(f.corpus, "R", {"A", "B"});
    augment::ResolvedDocument rd;
    rd.paper_id = PaperId("R");
    rd.doc = citeparse::parse_bundle(citeparse::DocumentBundle::make(
        "Doc R", {{"Introduction", "Both matter [1, 2]."}}, "[1] A. One. 2020.\n[2] B. Two. 2020.\n",
        citeparse::Style::numeric));
    rd.resolution = {{"1", PaperId("A")}, {"2", PaperId("B")}};
    const auto c = f.context();
    CHECK(cards::build_card(c->ctx, rd, "m0.0").meta.paper_id == PaperId("A"));
    CHECK(cards::build_card(c->ctx, rd, "m0.0", PaperId("B")).meta.paper_id == PaperId("B"));
}

TEST_CASE("library card requires membership") {
    Fixture f;
    add_paper(f.corpus, "C");
    f.doc("R", {"C"});
    {
        const auto c = f.context();
        try {
            cards::card_for_library_item(c->ctx, PaperId("C"));
            FAIL("expected not_in_library");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::not_in_library);
        }
    }
    f.store.append(save_from("C", "R", sentence(1)));
    const auto c = f.context();
    const auto card = cards::card_for_library_item(c->ctx, PaperId("C"));
    CHECK(card.library_state);
    CHECK_FALSE(card.reading_paper_id.has_value());
    CHECK_FALSE(card.marker_id.has_value());
    CHECK(card.cls.color == Color::saved_red);
}

TEST_CASE("own papers citing the subject appear with the quote overlay") {
    Fixture f;
    add_paper(f.corpus, "C");
    f.doc("O", {"C"});
    f.doc("R", {"C"});
    f.own = {PaperId("O")};
    const auto c = f.context();
    const auto card = cards::build_card(c->ctx, f.get("R"), "m0.0");
    REQUIRE(card.own_mentions.size() == 1);
    CHECK(card.own_mentions[0].paper_id == PaperId("O"));
    CHECK(card.own_mentions[0].citing_sentence == sentence(1));
    CHECK(card.cls.cited_quote);
    CHECK_FALSE(card.cls.own_heart);
}

TEST_CASE("toggles change the shown class but keep the score") {
    Fixture f;
    add_paper(f.corpus, "C");
    f.doc("H", {"C"});
    f.doc("R", {"C"});
    f.store.append(ev(EventKind::open, "H"));
    const auto c = f.context(augment::Toggles::all_off());
    const auto card = cards::build_card(c->ctx, f.get("R"), "m0.0");
    CHECK(card.cls == AugmentationClass{});
    REQUIRE(card.score.has_value());
    CHECK(card.score->value_hundredths == 100);
    CHECK(card.history_mentions.size() == 1);
}

TEST_CASE("similarity line appears only with a provider") {
    Fixture f;
    add_paper(f.corpus, "C", {}, "graph neural networks for citation graphs");
    f.doc("R", {"C"});
    auto c = f.context();
    CHECK_FALSE(cards::build_card(c->ctx, f.get("R"), "m0.0").similarity.has_value());
    strategies::LexicalProvider provider({"graph neural networks", "citation graphs", "unrelated words"});
    c->ctx.similarity = &provider;
    const auto sim = cards::build_card(c->ctx, f.get("R"), "m0.0").similarity;
    REQUIRE(sim.has_value());
    CHECK(*sim >= -1.0);
    CHECK(*sim <= 1.0);
}

TEST_CASE("card json carries the documented fields") {
    Fixture f;
    add_paper(f.corpus, "C");
    f.doc("R", {"C"});
    const auto c = f.context();
    const auto j = cards::to_json(cards::build_card(c->ctx, f.get("R"), "m0.0"));
    for (const char* key : {"meta", "history_mentions", "own_mentions", "saved_from", "class", "score",
                            "library_state", "suppressed", "marker_id", "citing_sentence", "degraded"}) {
        CHECK_MESSAGE(j.contains(key), key);
    }
    CHECK(j["degraded"] == false);
    CHECK(j["meta"]["citation_count"] == 1);
    CHECK(j["saved_from"].is_null());
}
