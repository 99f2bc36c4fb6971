// SPDX-License-Identifier: Apache-2.0

#include "mmw/common.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mmw
{

double wrap_deg(double deg)
{
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0)
        w += 360.0;
    w -= 180.0;
    // fmod can land exactly on +180 after the shift for inputs like 540 - eps
    if (w >= 180.0)
        w -= 360.0;
    return w;
}

double angle_diff_deg(double a, double b)
{
    return std::abs(wrap_deg(a - b));
}

double azimuth_deg(const Point2 &from, const Point2 &to)
{
    const Point2 d = to - from;
    return wrap_deg(rad2deg(std::atan2(d.y(), d.x())));
}

namespace
{
std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}
} // namespace

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    std::uint64_t h = splitmix(base);
    h = splitmix(h ^ a);
    h = splitmix(h ^ (b + 0x632BE59BD9B4E019ull));
    h = splitmix(h ^ (c + 0x85157AF5ull));
    return h;
}

void write_file_atomic(const std::string &path, const std::string &content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw DataError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mmw
