// SPDX-License-Identifier: Apache-2.0

#include "mmw/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mmw::io
{

namespace
{

template <typename F>
auto guarded(const std::string &what, F &&f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (const json::exception &e)
    {
        throw DataError(what + ": " + e.what());
    }
}

json parse_json(const std::string &text, const std::string &what)
{
    return guarded(what, [&] { return json::parse(text); });
}

} // namespace

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::vector<json> read_ndjson(const std::string &path)
{
    std::istringstream in(read_file(path));
    std::vector<json> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line))
    {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        out.push_back(parse_json(line, path + ":" + std::to_string(n)));
    }
    return out;
}

void write_ndjson(const std::string &path, const std::vector<json> &records)
{
    std::string buf;
    for (const auto &r : records)
    {
        buf += r.dump();
        buf += '\n';
    }
    write_file_atomic(path, buf);
}

// ------------------------------------------------------------------------

json to_json(const Environment &env)
{
    json walls = json::array();
    for (const auto &w : env.walls)
        walls.push_back({{"x1", w.a.x()}, {"y1", w.a.y()}, {"x2", w.b.x()}, {"y2", w.b.y()}, {"material", w.material}});
    json tx = json::array();
    for (const auto &p : env.tx_locations)
        tx.push_back({{"x", p.x()}, {"y", p.y()}});
    return {{"side_m", env.side_m}, {"walls", walls}, {"tx", tx}, {"seed", env.seed}};
}

Environment environment_from_json(const json &j)
{
    return guarded("environment", [&] {
        Environment env;
        env.side_m = j.at("side_m").get<double>();
        env.seed = j.at("seed").get<std::uint64_t>();
        for (const auto &w : j.at("walls"))
            env.walls.push_back({{w.at("x1").get<double>(), w.at("y1").get<double>()},
                                 {w.at("x2").get<double>(), w.at("y2").get<double>()},
                                 w.value("material", 0)});
        for (const auto &p : j.at("tx"))
            env.tx_locations.emplace_back(p.at("x").get<double>(), p.at("y").get<double>());
        validate(env);
        return env;
    });
}

void save_environment(const std::string &path, const Environment &env)
{
    write_file_atomic(path, to_json(env).dump(1) + "\n");
}

Environment load_environment(const std::string &path)
{
    return environment_from_json(parse_json(read_file(path), path));
}

// ------------------------------------------------------------------------

json to_json(const LinkRecord &rec)
{
    json paths = json::array();
    for (const auto &p : rec.paths)
        paths.push_back({{"gain_db", p.gain_db()},
                         {"phase_rad", std::arg(p.gain)},
                         {"aoa_deg", p.aoa_deg},
                         {"aod_deg", p.aod_deg},
                         {"delay_ns", p.delay_ns},
                         {"order", p.order()}});
    return {{"tx_id", rec.tx_id},
            {"cell_ix", rec.cell_ix},
            {"cell_iy", rec.cell_iy},
            {"state", to_string(rec.true_state)},
            {"paths", paths}};
}

LinkRecord link_record_from_json(const json &j)
{
    return guarded("path record", [&] {
        LinkRecord r;
        r.tx_id = j.at("tx_id").get<int>();
        r.cell_ix = j.at("cell_ix").get<int>();
        r.cell_iy = j.at("cell_iy").get<int>();
        r.true_state = link_state_from_string(j.at("state").get<std::string>());
        for (const auto &p : j.at("paths"))
        {
            PathComponent c;
            c.gain = std::polar(std::pow(10.0, p.at("gain_db").get<double>() / 20.0), p.at("phase_rad").get<double>());
            c.aoa_deg = p.at("aoa_deg").get<double>();
            c.aod_deg = p.at("aod_deg").get<double>();
            c.delay_ns = p.at("delay_ns").get<double>();
            c.stored_order = p.at("order").get<int>();
            r.paths.push_back(std::move(c));
        }
        return r;
    });
}

void save_path_map(const std::string &path, const std::vector<LinkRecord> &recs)
{
    std::vector<json> out;
    out.reserve(recs.size());
    for (const auto &r : recs)
        out.push_back(to_json(r));
    write_ndjson(path, out);
}

std::vector<LinkRecord> load_path_map(const std::string &path)
{
    std::vector<LinkRecord> out;
    for (const auto &j : read_ndjson(path))
        out.push_back(link_record_from_json(j));
    return out;
}

// ------------------------------------------------------------------------

json to_json(const LinkEstimates &e)
{
    json est = json::array();
    for (const auto &p : e.estimates)
        est.push_back({{"rel_delay_ns", p.rel_delay_ns}, {"aoa_deg", p.aoa_deg}, {"aod_deg", p.aod_deg}, {"snr_db", p.snr_db}});
    return {{"env_id", e.env_id}, {"tx_id", e.tx_id}, {"cell", {e.cell_ix, e.cell_iy}}, {"estimates", est}};
}

LinkEstimates link_estimates_from_json(const json &j)
{
    return guarded("estimate record", [&] {
        LinkEstimates e;
        e.env_id = j.value("env_id", 0);
        e.tx_id = j.at("tx_id").get<int>();
        e.cell_ix = j.at("cell").at(0).get<int>();
        e.cell_iy = j.at("cell").at(1).get<int>();
        for (const auto &p : j.at("estimates"))
        {
            PathEstimate pe;
            pe.rel_delay_ns = p.at("rel_delay_ns").get<double>();
            pe.aoa_deg = p.at("aoa_deg").get<double>();
            pe.aod_deg = p.at("aod_deg").get<double>();
            pe.snr_db = p.at("snr_db").get<double>();
            e.estimates.push_back(pe);
        }
        return e;
    });
}

void save_estimates(const std::string &path, const std::vector<LinkEstimates> &recs)
{
    std::vector<json> out;
    out.reserve(recs.size());
    for (const auto &r : recs)
        out.push_back(to_json(r));
    write_ndjson(path, out);
}

std::vector<LinkEstimates> load_estimates(const std::string &path)
{
    std::vector<LinkEstimates> out;
    for (const auto &j : read_ndjson(path))
        out.push_back(link_estimates_from_json(j));
    return out;
}

// ------------------------------------------------------------------------

json to_json(const LinkSample &s)
{
    return {{"env_id", s.env_id},
            {"tx_id", s.tx_id},
            {"cell_ix", s.cell_ix},
            {"cell_iy", s.cell_iy},
            {"label", to_string(s.label)},
            {"features", std::vector<double>(s.features.data(), s.features.data() + s.features.size())}};
}

LinkSample link_sample_from_json(const json &j)
{
    return guarded("dataset record", [&] {
        LinkSample s;
        s.env_id = j.at("env_id").get<int>();
        s.tx_id = j.at("tx_id").get<int>();
        s.cell_ix = j.at("cell_ix").get<int>();
        s.cell_iy = j.at("cell_iy").get<int>();
        s.label = link_state_from_string(j.at("label").get<std::string>());
        const auto f = j.at("features").get<std::vector<double>>();
        s.features = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
        return s;
    });
}

void save_dataset(const std::string &path, const std::vector<LinkSample> &samples)
{
    std::vector<json> out;
    out.reserve(samples.size());
    for (const auto &s : samples)
        out.push_back(to_json(s));
    write_ndjson(path, out);
}

std::vector<LinkSample> load_dataset(const std::string &path)
{
    std::vector<LinkSample> out;
    for (const auto &j : read_ndjson(path))
        out.push_back(link_sample_from_json(j));
    return out;
}

// ------------------------------------------------------------------------

json to_json(const MlpModel &m)
{
    json layers = json::array();
    for (const auto &l : m.layers)
    {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.w.size()));
        for (Eigen::Index r = 0; r < l.w.rows(); ++r)
            for (Eigen::Index c = 0; c < l.w.cols(); ++c)
                w.push_back(l.w(r, c));
        layers.push_back({{"rows", l.w.rows()},
                          {"cols", l.w.cols()},
                          {"w", w},
                          {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}});
    }
    return {{"layers", layers}, {"mode", to_string(m.mode)}};
}

MlpModel model_from_json(const json &j)
{
    return guarded("model", [&] {
        MlpModel m;
        m.mode = feature_mode_from_string(j.at("mode").get<std::string>());
        for (const auto &l : j.at("layers"))
        {
            const auto rows = l.at("rows").get<Eigen::Index>();
            const auto cols = l.at("cols").get<Eigen::Index>();
            const auto w = l.at("w").get<std::vector<double>>();
            const auto b = l.at("b").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
                throw DataError("model layer has inconsistent sizes");
            Dense d;
            d.w.resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c)
                    d.w(r, c) = w[static_cast<std::size_t>(r * cols + c)];
            d.b = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
            if (!m.layers.empty() && m.layers.back().w.rows() != cols)
                throw DataError("model layers do not chain");
            m.layers.push_back(std::move(d));
        }
        if (m.layers.empty())
            throw DataError("model has no layers");
        return m;
    });
}

void save_model(const std::string &path, const MlpModel &m)
{
    write_file_atomic(path, to_json(m).dump() + "\n");
}

MlpModel load_model(const std::string &path)
{
    return model_from_json(parse_json(read_file(path), path));
}

std::string metrics_csv(const std::vector<EpochMetrics> &history)
{
    std::string out = "epoch,train_loss,val_loss,train_acc,val_acc\n";
    for (const auto &m : history)
        out += std::to_string(m.epoch) + "," + fmt(m.train_loss) + "," + fmt(m.val_loss) + "," + fmt(m.train_acc) +
               "," + fmt(m.val_acc) + "\n";
    return out;
}

// ------------------------------------------------------------------------

json to_json(const EpisodeResult &r)
{
    json traj = json::array();
    for (const auto &t : r.trajectory)
        traj.push_back({{"x", t.p.x()}, {"y", t.p.y()}, {"goal_source", to_string(t.source)}});
    return {{"env_id", r.env_id},
            {"tx_id", r.tx_id},
            {"start", {{"x", r.start.x()}, {"y", r.start.y()}}},
            {"policy", to_string(r.policy)},
            {"success", r.success},
            {"steps", r.steps},
            {"baseline_steps", r.baseline_steps},
            {"relative_time", r.relative_time},
            {"difficulty", to_string(r.difficulty)},
            {"trajectory", traj}};
}

namespace
{

GoalSource goal_source_from_string(const std::string &s)
{
    for (GoalSource g :
         {GoalSource::None, GoalSource::Oracle, GoalSource::Frontier, GoalSource::Wireless, GoalSource::Visual})
        if (s == to_string(g))
            return g;
    throw DataError("unknown goal source '" + s + "'");
}

} // namespace

EpisodeResult episode_from_json(const json &j)
{
    return guarded("episode record", [&] {
        EpisodeResult r;
        r.env_id = j.at("env_id").get<int>();
        r.tx_id = j.at("tx_id").get<int>();
        r.start = Point2(j.at("start").at("x").get<double>(), j.at("start").at("y").get<double>());
        r.policy = policy_from_string(j.at("policy").get<std::string>());
        r.success = j.at("success").get<bool>();
        r.steps = j.at("steps").get<int>();
        r.baseline_steps = j.at("baseline_steps").get<int>();
        r.relative_time = j.at("relative_time").get<double>();
        r.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
        for (const auto &t : j.at("trajectory"))
            r.trajectory.push_back({Point2(t.at("x").get<double>(), t.at("y").get<double>()),
                                    goal_source_from_string(t.at("goal_source").get<std::string>())});
        return r;
    });
}

void save_episodes(const std::string &path, const std::vector<EpisodeResult> &eps)
{
    std::vector<json> out;
    out.reserve(eps.size());
    for (const auto &e : eps)
        out.push_back(to_json(e));
    write_ndjson(path, out);
}

std::vector<EpisodeResult> load_episodes(const std::string &path)
{
    std::vector<EpisodeResult> out;
    for (const auto &j : read_ndjson(path))
        out.push_back(episode_from_json(j));
    return out;
}

json codebook_json(const Codebook &cb)
{
    json out = json::array();
    for (const auto &e : cb.entries)
        out.push_back({{"k", e.k}, {"azimuth_deg", e.azimuth_deg}, {"sector", e.sector}});
    return out;
}

std::string grid_mask_csv(const RxGrid &grid)
{
    std::string out;
    out.reserve(static_cast<std::size_t>(grid.nx * grid.ny * 2));
    for (int iy = 0; iy < grid.ny; ++iy)
    {
        for (int ix = 0; ix < grid.nx; ++ix)
        {
            if (ix)
                out += ',';
            out += grid.is_valid(ix, iy) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

} // namespace mmw::io
