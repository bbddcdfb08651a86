#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nightcast::cli {

enum ExitCode : int { ok = 0, usage = 2, validation = 3, runtime = 4 };

// Runs one command line (without the program name). Everything except
// `serve` writes its files plus `manifest.json` into the output directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Re-executes the command recorded in a manifest, optionally into another
// directory, and reports whether every output matches its recorded digest.
int rerun(const std::filesystem::path& manifest, const std::filesystem::path& output_dir, std::ostream& out,
          std::ostream& err);

nlohmann::ordered_json read_manifest(const std::filesystem::path& path);

}  // namespace nightcast::cli
