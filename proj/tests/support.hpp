#pragma once

// Helpers shared by the unit tests: fixture access, temp dirs and small
// hand-built robots.

#include "cellopt/cellopt.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace cellopt::test {

inline std::string data_path(const std::string& name) { return std::string(CELLOPT_DATA_DIR) + "/" + name; }

inline std::string read_text(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline Instance load_fixture(const std::string& name) { return parse_instance(read_text(data_path(name))); }

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "cellopt")
    {
        static int counter = 0;
        const auto base = std::filesystem::temp_directory_path();
        do {
            path_ = base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        } while (std::filesystem::exists(path_));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline Trajectory traj(std::string id, std::size_t from_loc, std::size_t to_loc, double d_min, double d_max,
                       std::array<double, 5> c = {0.0, 0.0, 100.0, 0.0, 0.0})
{
    return Trajectory{std::move(id), from_loc, to_loc, d_min, d_max, EnergyFunction{c}};
}

/// Fluent builder for hand-made robots.
class RobotBuilder {
public:
    explicit RobotBuilder(std::string id, std::vector<PowerMode> modes = {{"hold", 0.0}})
    {
        r_.id = std::move(id);
        r_.modes = std::move(modes);
    }

    /// One location per entry of `powers`; each entry lists watts per mode.
    RobotBuilder& stat(std::string id, double d_min, double d_max, std::vector<std::vector<double>> powers = {{100.0}})
    {
        StaticActivity s{std::move(id), d_min, d_max, {}};
        for (std::size_t l = 0; l < powers.size(); ++l) s.locations.push_back({s.id + "_l" + std::to_string(l), powers[l]});
        r_.statics.push_back(std::move(s));
        return *this;
    }

    RobotBuilder& move(std::string id, std::size_t from, std::size_t to, std::vector<Trajectory> tr, bool optional = false)
    {
        r_.moves.push_back({std::move(id), from, to, optional, std::move(tr)});
        return *this;
    }

    /// Single-trajectory move between location 0 and location 0.
    RobotBuilder& link(std::size_t from, std::size_t to, double d_min, double d_max, bool optional = false,
                       std::array<double, 5> c = {0.0, 0.0, 100.0, 0.0, 0.0})
    {
        const std::string id = r_.id + "_e" + std::to_string(from) + std::to_string(to);
        return move(id, from, to, {traj(id + "_t0", 0, 0, d_min, d_max, c)}, optional);
    }

    RobotBuilder& home(std::size_t v)
    {
        r_.home = v;
        return *this;
    }

    Robot build() const { return r_; }

private:
    Robot r_;
};

inline Instance single_robot_instance(Robot r, double ct)
{
    Instance inst;
    inst.cycle_time = ct;
    inst.robots.push_back(std::move(r));
    return inst;
}

inline GeneratedInstance generated(const std::string& preset, std::uint64_t seed)
{
    return generate_instance_with_witness(preset_config(preset, seed));
}

} // namespace cellopt::test
