#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace bhsr {

struct RunOptions {
    std::string subcommand;  // price, hedge, envelope, hjb, all
    std::filesystem::path instance;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::optional<double> tol_override;
};

/// Exit status: 0 success, 2 validation error, 3 numeric failure, 1 I/O or
/// anything else. Progress goes to `log`, errors to `err`.
int run(const RunOptions& options, std::ostream& log, std::ostream& err);

/// Parses argv (CLI11) and calls run. Output directory defaults to
/// $BHSR_OUT_DIR, then "out".
int run_main(int argc, char** argv);

}  // namespace bhsr
