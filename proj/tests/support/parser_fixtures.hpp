#pragma once

// Scores parse_bundle against the hand-annotated bundles in
// tests/fixtures/parser. Each fixture lists, in order, every marker a reader
// would mark as a citation: its section, raw text, keys, linked entry keys
// and citing sentence. Spans are located independently by searching the raw
// text left to right in the section body.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "citelens/citeparse.hpp"

namespace citelens::test {

struct FixtureScore {
    std::string name;
    std::size_t markers_expected = 0;
    std::size_t markers_found = 0;
    std::size_t markers_correct = 0;  // detected with the right section, span, raw text and keys
    std::size_t links_expected = 0;  // markers whose link list is checked
    std::size_t links_correct = 0;
    std::vector<std::string> problems;

    bool perfect() const { return problems.empty(); }
};

// Code points of a UTF-8 string; independent of the library's decoder.
inline std::u32string utf8_code_points(const std::string& s) {
    std::u32string out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (int k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline std::vector<std::filesystem::path> parser_fixture_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline FixtureScore score_parser_fixture(const std::filesystem::path& file) {
    FixtureScore s;
    s.name = file.stem().string();
    std::ifstream in(file);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto fixture = nlohmann::json::parse(buf.str());
    const auto& exp = fixture.at("expected");
    const auto doc = citeparse::parse_bundle(citeparse::DocumentBundle::from_json_text(fixture.at("bundle").dump()));
    auto problem = [&](const std::string& p) { s.problems.push_back(s.name + ": " + p); };

    if (std::string(citeparse::to_string(doc.report.style_used)) != exp.at("style").get<std::string>()) {
        problem("style " + std::string(citeparse::to_string(doc.report.style_used)));
    }
    if (exp.contains("entries")) {
        std::vector<std::string> keys;
        for (const auto& e : doc.entries) keys.push_back(e.entry_key);
        if (keys != exp.at("entries").get<std::vector<std::string>>()) problem("entry keys differ");
    }
    if (doc.report.skipped != exp.at("skipped").get<std::size_t>()) {
        problem("skipped " + std::to_string(doc.report.skipped));
    }
    if (doc.report.warnings.empty() == exp.at("warning").get<bool>()) problem("warning presence differs");

    const auto& markers = exp.at("markers");
    s.markers_expected = markers.size();
    s.markers_found = doc.markers.size();
    s.links_expected = markers.size();
    std::vector<std::size_t> cursor(doc.bundle.sections.size(), 0);
    for (std::size_t i = 0; i < markers.size(); ++i) {
        const auto& m = markers[i];
        const auto section = m.at("section").get<std::size_t>();
        const auto raw = m.at("raw").get<std::string>();
        const auto body = utf8_code_points(doc.bundle.sections.at(section).body);
        const auto needle = utf8_code_points(raw);
        const auto at = body.find(needle, cursor[section]);
        if (at == std::u32string::npos) {
            problem("annotation " + raw + " not in section body");
            continue;
        }
        cursor[section] = at + needle.size();
        const citeparse::Span span{at, at + needle.size()};
        const std::string tag = "marker " + std::to_string(i) + " " + raw;
        if (i >= doc.markers.size()) {
            problem(tag + " missing");
            continue;
        }
        const auto& got = doc.markers[i];
        if (got.section_index != section || got.span != span || got.raw_text != raw ||
            got.keys != m.at("keys").get<std::vector<std::string>>()) {
            problem(tag + " detected as " + got.raw_text);
            continue;
        }
        ++s.markers_correct;
        std::vector<std::string> links;
        if (auto it = doc.links.find(got.marker_id); it != doc.links.end()) links = it->second;
        if (links == m.at("links").get<std::vector<std::string>>()) {
            ++s.links_correct;
        } else {
            problem(tag + " links differ");
        }
        if (citeparse::extract_citing_sentence(doc, got.marker_id) != m.at("sentence").get<std::string>()) {
            problem(tag + " sentence: " + citeparse::extract_citing_sentence(doc, got.marker_id));
        }
    }
    for (std::size_t i = markers.size(); i < doc.markers.size(); ++i) {
        problem("unexpected marker " + doc.markers[i].raw_text);
    }
    return s;
}

}  // namespace citelens::test
