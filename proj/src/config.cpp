#include "ipc/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ipc {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s{
        {"task", {"kind", "terms", "alpha", "beta", "gamma", "delta", "narma_warmup"}},
        {"reservoir", {"nodes", "spectral_radius", "density", "input_scale", "bias", "fix"}},
        {"experiment", {"lengths", "ratio", "trials", "washout", "seed", "threads"}},
        {"fit", {"a_tol", "slope_tol", "p_value"}},
        {"output", {"dir", "plot_script"}},
    };
    return s;
}

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    double v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes")
        return true;
    if (t == "false" || t == "0" || t == "no")
        return false;
    throw ConfigError("config: '" + key + "' expects true or false, got '" + text + "'");
}

TaskKind parse_kind(const std::string& text)
{
    const std::string t = trim(text);
    if (t == "simple")
        return TaskKind::simple;
    if (t == "legendre")
        return TaskKind::legendre;
    if (t == "narma10")
        return TaskKind::narma10;
    throw ConfigError("config: unknown task kind '" + text + "' (simple, legendre, narma10)");
}

std::vector<LegendreTerm> parse_terms(const std::string& text)
{
    std::vector<LegendreTerm> terms;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("config: Legendre term '" + item + "' must be delay:degree");
        terms.push_back({static_cast<unsigned>(parse_uint("terms", item.substr(0, colon))),
                         static_cast<unsigned>(parse_uint("terms", item.substr(colon + 1)))});
    }
    return terms;
}

std::string format_terms(const std::vector<LegendreTerm>& terms)
{
    std::string out;
    for (const auto& t : terms)
        out += (out.empty() ? "" : ",") + std::to_string(t.delay) + ":" + std::to_string(t.degree);
    return out;
}

std::string kind_name(TaskKind kind)
{
    TaskSpec spec;
    spec.kind = kind;
    return spec.name();
}

std::vector<std::uint64_t> arithmetic(std::uint64_t first, std::uint64_t last, std::uint64_t step)
{
    std::vector<std::uint64_t> v;
    for (std::uint64_t t = first; t <= last; t += step)
        v.push_back(t);
    return v;
}

} // namespace

void RunConfig::validate() const
{
    try {
        plan.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!(p_value > 0.0 && p_value < 1.0))
        throw ConfigError("config: p_value must lie in (0, 1)");
    if (!(a_tol > 0.0 && slope_tol > 0.0))
        throw ConfigError("config: zero-IPC thresholds must be positive");
}

std::vector<std::uint64_t> parse_length_list(const std::string& text)
{
    // Either a comma list or first:last:step.
    const std::string t = trim(text);
    if (std::count(t.begin(), t.end(), ':') == 2) {
        const auto c1 = t.find(':'), c2 = t.rfind(':');
        const auto first = parse_uint("lengths", t.substr(0, c1));
        const auto last = parse_uint("lengths", t.substr(c1 + 1, c2 - c1 - 1));
        const auto step = parse_uint("lengths", t.substr(c2 + 1));
        if (step == 0 || first == 0 || last < first)
            throw ConfigError("config: length range must be first:last:step with 0 < first <= last, step > 0");
        return arithmetic(first, last, step);
    }
    std::vector<std::uint64_t> out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(parse_uint("lengths", item));
    if (out.empty())
        throw ConfigError("config: lengths must list at least one training length");
    return out;
}

RunConfig parse_config(std::istream& is)
{
    // Boost's INI reader only knows ';' comments; accept '#' as well.
    std::stringstream filtered;
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (!t.empty() && t[0] != '#')
            filtered << line << '\n';
    }

    pt::ptree tree;
    try {
        pt::read_ini(filtered, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (it == schema().end() || body.empty())
            throw ConfigError("config: unknown section or top-level key '" + section + "'");
        for (const auto& [key, value] : body)
            if (!it->second.contains(key))
                throw ConfigError("config: unknown key '" + section + "." + key + "'");
    }

    RunConfig c;
    auto get = [&](const char* path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.')))
            return trim(*v);
        return std::nullopt;
    };
    ExperimentPlan& p = c.plan;

    if (auto v = get("task.kind"))
        p.task.kind = parse_kind(*v);
    if (auto v = get("task.terms"))
        p.task.legendre.terms = parse_terms(*v);
    if (auto v = get("task.alpha"))
        p.task.narma.alpha = parse_double("alpha", *v);
    if (auto v = get("task.beta"))
        p.task.narma.beta = parse_double("beta", *v);
    if (auto v = get("task.gamma"))
        p.task.narma.gamma = parse_double("gamma", *v);
    if (auto v = get("task.delta"))
        p.task.narma.delta = parse_double("delta", *v);
    if (auto v = get("task.narma_warmup"))
        p.task.narma_warmup = parse_uint("narma_warmup", *v);

    if (auto v = get("reservoir.nodes"))
        p.reservoir.nodes = parse_uint("nodes", *v);
    if (auto v = get("reservoir.spectral_radius"))
        p.reservoir.spectral_radius = parse_double("spectral_radius", *v);
    if (auto v = get("reservoir.density"))
        p.reservoir.density = parse_double("density", *v);
    if (auto v = get("reservoir.input_scale"))
        p.reservoir.input_scale = parse_double("input_scale", *v);
    if (auto v = get("reservoir.bias"))
        p.reservoir.bias = parse_double("bias", *v);
    if (auto v = get("reservoir.fix"))
        p.fix_reservoir = parse_bool("fix", *v);

    if (auto v = get("experiment.lengths"))
        p.t_grid = parse_length_list(*v);
    if (auto v = get("experiment.ratio")) {
        const auto slash = v->find('/');
        p.ratio_num = static_cast<std::uint32_t>(parse_uint("ratio", v->substr(0, slash)));
        p.ratio_den = slash == std::string::npos
                          ? 1U
                          : static_cast<std::uint32_t>(parse_uint("ratio", v->substr(slash + 1)));
    }
    if (auto v = get("experiment.trials"))
        p.trials = parse_uint("trials", *v);
    if (auto v = get("experiment.washout"))
        p.washout = parse_uint("washout", *v);
    if (auto v = get("experiment.seed"))
        p.base_seed = parse_uint("seed", *v);
    if (auto v = get("experiment.threads"))
        p.threads = static_cast<unsigned>(parse_uint("threads", *v));
    p.reservoir.seed = p.base_seed;

    if (auto v = get("fit.a_tol"))
        c.a_tol = parse_double("a_tol", *v);
    if (auto v = get("fit.slope_tol"))
        c.slope_tol = parse_double("slope_tol", *v);
    if (auto v = get("fit.p_value"))
        c.p_value = parse_double("p_value", *v);

    if (auto v = get("output.dir"))
        c.out_dir = *v;
    if (auto v = get("output.plot_script"))
        c.plot_script = parse_bool("plot_script", *v);

    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file " + path.string());
    return parse_config(is);
}

std::string serialize_config(const RunConfig& c)
{
    const ExperimentPlan& p = c.plan;
    std::ostringstream os;
    os << "[task]\n"
       << "kind = " << kind_name(p.task.kind) << '\n';
    if (!p.task.legendre.terms.empty())
        os << "terms = " << format_terms(p.task.legendre.terms) << '\n';
    os << "alpha = " << format_double(p.task.narma.alpha) << '\n'
       << "beta = " << format_double(p.task.narma.beta) << '\n'
       << "gamma = " << format_double(p.task.narma.gamma) << '\n'
       << "delta = " << format_double(p.task.narma.delta) << '\n'
       << "narma_warmup = " << p.task.narma_warmup << "\n\n";

    os << "[reservoir]\n"
       << "nodes = " << p.reservoir.nodes << '\n'
       << "spectral_radius = " << format_double(p.reservoir.spectral_radius) << '\n'
       << "density = " << format_double(p.reservoir.density) << '\n'
       << "input_scale = " << format_double(p.reservoir.input_scale) << '\n'
       << "bias = " << format_double(p.reservoir.bias) << '\n'
       << "fix = " << (p.fix_reservoir ? "true" : "false") << "\n\n";

    os << "[experiment]\nlengths = ";
    for (std::size_t i = 0; i < p.t_grid.size(); ++i)
        os << (i ? "," : "") << p.t_grid[i];
    os << "\nratio = " << p.ratio_num << '/' << p.ratio_den << '\n'
       << "trials = " << p.trials << '\n'
       << "washout = " << p.washout << '\n'
       << "seed = " << p.base_seed << '\n'
       << "threads = " << p.threads << "\n\n";

    os << "[fit]\n"
       << "a_tol = " << format_double(c.a_tol) << '\n'
       << "slope_tol = " << format_double(c.slope_tol) << '\n'
       << "p_value = " << format_double(c.p_value) << "\n\n";

    os << "[output]\n"
       << "dir = " << c.out_dir.string() << '\n'
       << "plot_script = " << (c.plot_script ? "true" : "false") << '\n';
    return os.str();
}

std::vector<std::string> preset_names()
{
    return {"simple-verify", "legendre1", "legendre15", "narma10"};
}

RunConfig preset(const std::string& name, bool full_scale)
{
    RunConfig c;
    ExperimentPlan& p = c.plan;
    p.base_seed = 20240601;
    p.reservoir.seed = p.base_seed;

    if (name == "simple-verify") {
        // T = 200..600, T' = 2T; full scale averages 10^5 trials per length.
        p.task.kind = TaskKind::simple;
        p.t_grid = arithmetic(200, 600, 100);
        p.ratio_num = 2;
        p.trials = full_scale ? 100000 : 10000;
        p.washout = 50;
        c.out_dir = "ipc-out/simple-verify";
        return c;
    }

    // ESN tasks: 100 nodes, 1000 trials, T = 1000..10000 at full size;
    // desk scale uses 50 nodes, 100 trials, T = 500..4000.
    p.reservoir.nodes = full_scale ? 100 : 50;
    p.reservoir.spectral_radius = 0.9;
    p.reservoir.density = 0.7;
    p.trials = full_scale ? 1000 : 100;
    p.t_grid = full_scale ? arithmetic(1000, 10000, 1000) : arithmetic(500, 4000, 500);
    p.washout = 500;

    if (name == "legendre1") {
        p.task.kind = TaskKind::legendre;
        p.task.legendre.terms = {{1, 1}};
    } else if (name == "legendre15") {
        p.task.kind = TaskKind::legendre;
        p.task.legendre.terms = {{5, 15}};
    } else if (name == "narma10") {
        p.task.kind = TaskKind::narma10;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.out_dir = "ipc-out/" + name;
    return c;
}

} // namespace ipc
