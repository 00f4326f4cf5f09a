#include <array>
#include <cctype>
#include <string>
#include <vector>

#include <json.hpp>

#include "clap/agent.hpp"
#include "clap/augment.hpp"
#include "clap/error.hpp"
#include "clap/prompts.hpp"
#include "clap/text.hpp"

namespace clap::augment {

namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

constexpr std::array<std::string_view, 4> kPronouns = {"It", "They", "This", "These"};
constexpr std::array<std::string_view, 3> kArticles = {"The", "A", "An"};

template <std::size_t N>
bool one_of(std::string_view w, const std::array<std::string_view, N>& set) {
    for (auto s : set)
        if (w == s) return true;
    return false;
}

std::string_view strip_trailing_punct(std::string_view w) {
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back())) != 0) w.remove_suffix(1);
    return w;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_terminal(s[i]) || i + 1 >= s.size() || !is_space(s[i + 1])) continue;
        std::size_t j = i + 1;
        while (j < s.size() && is_space(s[j])) ++j;
        if (j < s.size() && is_upper(s[j])) {
            auto sentence = text::trim(s.substr(start, i + 1 - start));
            if (!sentence.empty()) out.emplace_back(sentence);
            start = j;
            i = j - 1;
        }
    }
    auto last = text::trim(s.substr(start));
    if (!last.empty()) out.emplace_back(last);
    return out;
}

std::string find_antecedent(std::string_view passage) {
    auto words = text::split_whitespace(passage);
    for (std::size_t i = 0; i < words.size(); ++i) {
        auto w = strip_trailing_punct(words[i]);
        if (w.empty() || !is_upper(w.front()) || one_of(w, kPronouns) || one_of(w, kArticles)) continue;
        std::string run(w);
        // Extend across following capitalised words until punctuation ends the phrase.
        for (std::size_t j = i + 1; j < words.size() && strip_trailing_punct(words[j - 1]) == words[j - 1]; ++j) {
            auto next = strip_trailing_punct(words[j]);
            if (next.empty() || !is_upper(next.front()) || one_of(next, kPronouns)) break;
            run.push_back(' ');
            run.append(next);
        }
        return run;
    }
    return {};
}

std::string resolve_sentence(const std::string& sentence, const std::string& antecedent) {
    if (antecedent.empty()) return sentence;
    std::size_t end = 0;
    while (end < sentence.size() && std::isalpha(static_cast<unsigned char>(sentence[end])) != 0) ++end;
    if (!one_of(std::string_view(sentence).substr(0, end), kPronouns)) return sentence;
    return antecedent + sentence.substr(end);
}

std::string mock_chunking(std::string_view passage) {
    auto sentences = split_sentences(passage);
    auto antecedent = find_antecedent(passage);
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    std::string current;
    std::size_t current_words = 0;
    auto flush = [&] {
        if (current.empty()) return;
        std::string title(strip_trailing_punct(text::first_words(current, kMockTitleWords)));
        out.push_back({{"chunk_id", chunk_label(out.size())}, {"chunk_title", title}, {"chunk_text", current}});
        current.clear();
        current_words = 0;
    };
    for (const auto& s : sentences) {
        auto words = text::count_words(s);
        if (current_words > 0 && current_words + words > kMockChunkWords) flush();
        if (!current.empty()) current.push_back(' ');
        current += resolve_sentence(s, antecedent);
        current_words += words;
    }
    flush();
    return out.dump();
}

std::string mock_pseudo_queries(const TitledChunk& input) {
    auto title = text::to_lower(input.title);
    auto sentences = split_sentences(input.chunk);
    std::string first = sentences.empty() ? std::string() : sentences.front();
    while (!first.empty() && is_terminal(first.back())) first.pop_back();
    if (!first.empty()) first[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(first[0])));

    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    out.push_back({{"pseudo_query", "what is " + title}});
    if (!first.empty()) out.push_back({{"pseudo_query", "is it true that " + first + "?"}});
    out.push_back({{"pseudo_query", title + " explained"}});
    return out.dump();
}

}  // namespace

std::string mock_agent(std::string_view prompt) {
    auto family = detect_family(prompt);
    if (!family) throw InvalidArgument("mock agent: unrecognized prompt family");
    if (*family == PromptFamily::chunking) {
        auto passage = extract_passage(prompt);
        if (!passage) throw InvalidArgument("mock agent: chunking prompt has no passage slot");
        return mock_chunking(*passage);
    }
    auto input = extract_titled_chunk(prompt);
    if (!input) throw InvalidArgument("mock agent: pseudo-query prompt has no title/chunk slots");
    return mock_pseudo_queries(*input);
}

std::string MockAgent::complete(const std::string& prompt, double /*temperature*/) {
    ++calls_;
    return mock_agent(prompt);
}

}  // namespace clap::augment
