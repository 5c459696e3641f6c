#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>

#include "bvs/experiments.hpp"

namespace bvs::detail {

/// Opens `out_dir/name`, writes the header line, registers the file with the record.
inline std::ofstream open_csv(const std::filesystem::path& out_dir, const std::string& name, const std::string& header,
                              RunRecord& record) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path path = out_dir / name;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << header << '\n' << std::setprecision(17);
    record.files.push_back(name);
    return out;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline RunRecord start_record(const std::string& command, const ExperimentConfig& config) {
    RunRecord r;
    r.command = command;
    r.config_hash = config_hash(config);
    r.version = version_string();
    return r;
}

/// Stream indices reserved per purpose so that tasks never share a stream.
enum class Stream : std::uint64_t {
    Train = 1'000'000,
    Eval = 2'000'000,
    Init = 3'000'000,
    Ffbsi = 4'000'000,
    Noise = 5'000'000,
    Bound = 6'000'000,
    Simulate = 7'000'000,
};

inline std::uint64_t stream_seed(std::uint64_t seed, Stream s, std::uint64_t index) {
    return derive_seed(seed, static_cast<std::uint64_t>(s) + index);
}

}  // namespace bvs::detail
