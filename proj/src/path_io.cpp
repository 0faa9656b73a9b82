#include <fstream>

#include "json.hpp"

#include "bhsr/errors.hpp"
#include "bhsr/market.hpp"

namespace bhsr {

void save_batch(const PathBatch& b, const std::filesystem::path& prefix) {
    const auto bin = std::filesystem::path(prefix.string() + ".bin");
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw ValidationError("PathBatch: cannot write " + bin.string());
    out.write(reinterpret_cast<const char*>(b.terminal.data()), static_cast<std::streamsize>(b.terminal.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(b.paths.data()), static_cast<std::streamsize>(b.paths.size() * sizeof(double)));

    nlohmann::json h;
    h["data_file"] = bin.filename().string();
    h["layout"] = "float64 little-endian: terminal[n_paths][d] then paths[n_recorded][n_steps+1][d]";
    h["n_paths"] = b.n_paths;
    h["n_steps"] = b.n_steps;
    h["n_recorded"] = b.n_recorded;
    h["df"] = b.df;
    h["dc"] = b.dc;
    h["seed"] = b.seed;
    h["scheme"] = to_string(b.scheme);
    h["times_years"] = b.times;
    std::ofstream(prefix.string() + ".json") << h.dump(2) << '\n';
}

PathBatch load_batch(const std::filesystem::path& prefix) {
    std::ifstream in(prefix.string() + ".json");
    if (!in) throw ValidationError("PathBatch: cannot open " + prefix.string() + ".json");
    PathBatch b;
    std::filesystem::path bin;
    try {
        const auto h = nlohmann::json::parse(in);
        b.n_paths = h.at("n_paths").get<std::size_t>();
        b.n_steps = h.at("n_steps").get<std::size_t>();
        b.n_recorded = h.at("n_recorded").get<std::size_t>();
        b.df = h.at("df").get<int>();
        b.dc = h.at("dc").get<int>();
        b.seed = h.at("seed").get<std::uint64_t>();
        b.scheme = h.at("scheme").get<std::string>() == "log-euler" ? Scheme::log_euler : Scheme::exact_lognormal;
        b.times = h.at("times_years").get<std::vector<double>>();
        bin = std::filesystem::path(prefix).parent_path() / h.at("data_file").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("PathBatch: bad sidecar: ") + e.what());
    }
    const auto d = static_cast<std::size_t>(b.d());
    b.terminal.resize(b.n_paths * d);
    b.paths.resize(b.n_recorded * (b.n_steps + 1) * d);
    std::ifstream data(bin, std::ios::binary);
    data.read(reinterpret_cast<char*>(b.terminal.data()), static_cast<std::streamsize>(b.terminal.size() * sizeof(double)));
    data.read(reinterpret_cast<char*>(b.paths.data()), static_cast<std::streamsize>(b.paths.size() * sizeof(double)));
    if (!data) throw ValidationError("PathBatch: data file " + bin.string() + " is shorter than the sidecar says");
    return b;
}

}  // namespace bhsr
