// Fixed-format text rendering of summary.json plus plot-ready CSV tables.
// Every check carries an anchor label; rendering fails on labels that are
// not in the fixed registry, so the code-to-writeup mapping cannot drift
// silently.
#pragma once

#include <map>
#include <string>

#include "json.hpp"

namespace spdelab {

// check id -> anchor label
const std::map<std::string, std::string>& check_anchor_registry();

struct RenderedReport {
    std::string text;
    bool all_pass = false;
    std::map<std::string, std::string> csv_files; // name -> contents
};

// Throws std::invalid_argument on missing fields or unregistered anchors.
RenderedReport render_report(const nlohmann::json& summary);

// Render and write the text plus CSVs under out_dir. Returns the exit code
// contract of the report command: 0 all pass, 1 failures present.
int write_report(const nlohmann::json& summary, const std::string& out_dir);

} // namespace spdelab
