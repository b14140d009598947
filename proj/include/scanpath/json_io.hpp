#pragma once

// JSON forms of the core types. Field names are the on-disk schema.

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "scanpath/core.hpp"

namespace scanpath {

using json = nlohmann::json;

void to_json(json& j, const GazeSample& s);
void from_json(const json& j, GazeSample& s);
void to_json(json& j, const PageRect& r);
void from_json(const json& j, PageRect& r);
void to_json(json& j, const PagePoint& p);
void from_json(const json& j, PagePoint& p);
void to_json(json& j, const Fixation& f);
void from_json(const json& j, Fixation& f);
void to_json(json& j, const Saccade& s);
void from_json(const json& j, Saccade& s);
void to_json(json& j, const Segment& s);
void from_json(const json& j, Segment& s);
void to_json(json& j, const Box& b);
void from_json(const json& j, Box& b);
void to_json(json& j, const Word& w);
void from_json(const json& j, Word& w);
void to_json(json& j, const Line& l);
void from_json(const json& j, Line& l);
void to_json(json& j, const Page& p);
void from_json(const json& j, Page& p);
void to_json(json& j, const DocumentLayout& d);
void from_json(const json& j, DocumentLayout& d);
void to_json(json& j, const ValidationReport& r);

json parse_json_or_throw(const std::string& text, const std::string& what);
json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Called at "partial", "written" and "before_rename"; throwing from it
/// simulates a crash at that point.
using FaultHook = std::function<void(std::string_view stage)>;

/// Writes `content` to a sibling temp file, flushes it, then renames it over
/// `path`. Readers observe either the old or the new content.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content,
                       const FaultHook& fault = {});

}  // namespace scanpath
