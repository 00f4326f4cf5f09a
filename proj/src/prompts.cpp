#include "clap/prompts.hpp"

#include "clap/text.hpp"

namespace clap::augment {

namespace assets {
extern const std::string_view kChunkingTemplate;
extern const std::string_view kPseudoQueryTemplate;
}  // namespace assets

namespace {

constexpr std::string_view kChunkingHead = "You are an expert linguistic analyst";
constexpr std::string_view kQueryHead = "You are an expert query generation system";
constexpr std::string_view kTaskBegin = "### Task Begin";

std::string_view after_task_begin(std::string_view prompt) {
    auto pos = prompt.rfind(kTaskBegin);
    if (pos == std::string_view::npos) return {};
    return prompt.substr(pos + kTaskBegin.size());
}

}  // namespace

std::string_view chunking_template() { return assets::kChunkingTemplate; }
std::string_view pseudo_query_template() { return assets::kPseudoQueryTemplate; }

std::string render_chunking_prompt(std::string_view passage) {
    std::string out(chunking_template());
    auto pos = out.rfind(kPassagePlaceholder);
    out.replace(pos, kPassagePlaceholder.size(), passage);
    return out;
}

std::string render_pseudo_query_prompt(std::string_view title, std::string_view chunk) {
    // Locate both slots in the template before substituting so that slot
    // syntax inside the inserted text is never re-expanded.
    std::string_view tpl = pseudo_query_template();
    auto t = tpl.rfind(kTitlePlaceholder);
    auto c = tpl.rfind(kChunkPlaceholder);
    std::string out;
    out.reserve(tpl.size() + title.size() + chunk.size());
    out.append(tpl.substr(0, t));
    out.append(title);
    out.append(tpl.substr(t + kTitlePlaceholder.size(), c - t - kTitlePlaceholder.size()));
    out.append(chunk);
    out.append(tpl.substr(c + kChunkPlaceholder.size()));
    return out;
}

std::optional<PromptFamily> detect_family(std::string_view prompt) {
    prompt = text::trim(prompt);
    if (prompt.rfind(kChunkingHead, 0) == 0) return PromptFamily::chunking;
    if (prompt.rfind(kQueryHead, 0) == 0) return PromptFamily::pseudo_query;
    return std::nullopt;
}

std::optional<std::string> extract_passage(std::string_view prompt) {
    auto tail = after_task_begin(prompt);
    constexpr std::string_view key = "passage:";
    auto pos = tail.find(key);
    if (pos == std::string_view::npos) return std::nullopt;
    return std::string(text::trim(tail.substr(pos + key.size())));
}

std::optional<TitledChunk> extract_titled_chunk(std::string_view prompt) {
    auto tail = after_task_begin(prompt);
    constexpr std::string_view title_key = "title: ";
    constexpr std::string_view chunk_key = "\nchunk: ";
    auto t = tail.find(title_key);
    if (t == std::string_view::npos) return std::nullopt;
    auto c = tail.find(chunk_key, t);
    if (c == std::string_view::npos) return std::nullopt;
    auto title = tail.substr(t + title_key.size(), c - t - title_key.size());
    auto chunk = tail.substr(c + chunk_key.size());
    return TitledChunk{std::string(text::trim(title)), std::string(text::trim(chunk))};
}

}  // namespace clap::augment
