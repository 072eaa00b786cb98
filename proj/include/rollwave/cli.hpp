#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rollwave::cli {

// Resolved configuration of one run, in declaration order.
struct RunConfig {
    std::string command;
    std::vector<std::pair<std::string, std::string>> values;
    int threads = 1;

    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const;  // set to a nonempty value
    // `command = ...` followed by every resolved key.
    std::string manifest() const;
};

// Subcommands: profile, continue, spectrum, evans, taylor, verdict, sweep, fit, kdv, limit-inf.
// Exit codes: 0 success, 1 domain or usage error, 2 numerical failure, 3 internal error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rollwave::cli
