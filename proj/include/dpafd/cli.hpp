#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpafd::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kVerdict = 2,
    kLivelock = 3,
};

struct RunOptions {
    std::filesystem::path scenario;
    std::optional<std::filesystem::path> trace_out;
    bool verdict = false;
};

struct SweepOptions {
    std::filesystem::path topology;
    std::vector<std::size_t> faults;
    std::size_t trials = 30;
    std::optional<std::uint64_t> seed;  ///< falls back to DPAFD_SEED, then 1
    std::optional<std::filesystem::path> out;
};

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err);
int cmd_exchange(const std::vector<std::filesystem::path>& scenarios, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dpafd::cli
