#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace clap::augment {

// Verbatim prompt templates compiled in from assets/prompts/.
std::string_view chunking_template();
std::string_view pseudo_query_template();

// Placeholder the chunking template ends with.
inline constexpr std::string_view kPassagePlaceholder = "Your passage text goes here.";
inline constexpr std::string_view kTitlePlaceholder = "{{ title }}";
inline constexpr std::string_view kChunkPlaceholder = "{{ chunk }}";

std::string render_chunking_prompt(std::string_view passage);
std::string render_pseudo_query_prompt(std::string_view title, std::string_view chunk);

enum class PromptFamily { chunking, pseudo_query };

std::optional<PromptFamily> detect_family(std::string_view prompt);

// Inverse of the render functions: recover the filled-in slots.
std::optional<std::string> extract_passage(std::string_view chunking_prompt);
struct TitledChunk {
    std::string title;
    std::string chunk;
};
std::optional<TitledChunk> extract_titled_chunk(std::string_view pseudo_query_prompt);

}  // namespace clap::augment
