#include "lsvpm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsvpm/errors.hpp"

namespace lsvpm {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::Config, path + ": " + what);
}

// Walks one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) config_error(display(), "expected an object");
    }

    [[nodiscard]] std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::optional<Reader> child(const std::string& key) {
        const json* v = find(key);
        if (!v) return std::nullopt;
        return Reader(*v, key_path(key));
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) config_error(key_path(key), "expected a number");
            out = v->get<double>();
        }
    }

    void optional_number(const std::string& key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out.reset();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                config_error(key_path(key), "expected a number or null");
            }
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) config_error(key_path(key), "expected a non-negative integer");
            out = static_cast<Int>(v->get<std::uint64_t>());
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) config_error(key_path(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) config_error(key_path(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) config_error(key_path(key), "expected an array of numbers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) config_error(key_path(key), "expected an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    }

    void counts(const std::string& key, std::vector<std::size_t>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) config_error(key_path(key), "expected an array of integers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_unsigned()) config_error(key_path(key), "expected an array of non-negative integers");
                out.push_back(e.get<std::size_t>());
            }
        }
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) config_error(key_path(it.key()), "unknown key");
        }
    }

private:
    [[nodiscard]] std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_heston(Reader& r, HestonParams& p, bool with_market_fields) {
    r.number("v0", p.v0);
    r.number("kappa", p.kappa);
    r.number("theta", p.theta);
    r.number("xi", p.xi);
    r.number("rho", p.rho);
    if (with_market_fields) {
        r.number("rate", p.rate);
        r.number("spot", p.spot);
    }
    r.finish();
}

json heston_json(const HestonParams& p, bool with_market_fields) {
    json j{{"v0", p.v0}, {"kappa", p.kappa}, {"theta", p.theta}, {"xi", p.xi}, {"rho", p.rho}};
    if (with_market_fields) {
        j["rate"] = p.rate;
        j["spot"] = p.spot;
    }
    return j;
}

template <typename Enum>
struct Names {
    Enum value;
    const char* name;
};

constexpr Names<ModelVariant> kModels[] = {{ModelVariant::HestonLsv, "heston-lsv"}, {ModelVariant::LogMv, "log-mv"}};
constexpr Names<KernelBackend> kBackends[] = {{KernelBackend::Naive, "naive"}, {KernelBackend::Binned, "binned"}};
constexpr Names<GFunction::Kind> kGs[] = {
    {GFunction::Kind::Identity, "identity"}, {GFunction::Kind::Exp, "exp"}, {GFunction::Kind::Sqrt, "sqrt"}};
constexpr Names<OuScheme> kSchemes[] = {{OuScheme::Euler, "euler"}, {OuScheme::Exact, "exact"}};

template <typename Enum, std::size_t N>
const char* name_of(const Names<Enum> (&table)[N], Enum value) {
    for (const auto& e : table) {
        if (e.value == value) return e.name;
    }
    throw Error(ErrorCode::Config, "value has no configuration name");
}

template <typename Enum, std::size_t N>
void read_enum(Reader& r, const std::string& key, const Names<Enum> (&table)[N], Enum& out) {
    std::string s;
    if (!r.find(key)) return;
    r.string(key, s);
    for (const auto& e : table) {
        if (s == e.name) {
            out = e.value;
            return;
        }
    }
    std::string allowed;
    for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
    config_error(r.key_path(key), "'" + s + "' is not one of " + allowed);
}

bool strictly_ascending(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
    }
    return true;
}

bool all_positive(const std::vector<double>& v) {
    for (double x : v) {
        if (!(x > 0) || !std::isfinite(x)) return false;
    }
    return true;
}

void check(const RunConfig& c) {
    std::vector<std::string> problems;
    auto add = [&](const std::string& path, const ValidationReport& report) {
        for (const auto& m : report) problems.push_back(path + ": " + m);
    };
    auto need = [&](bool ok, const std::string& path, const std::string& what) {
        if (!ok) problems.push_back(path + ": " + what);
    };

    add("market", validate(c.market.params));
    need(!c.market.maturities.empty(), "market.maturities", "must be nonempty");
    need(all_positive(c.market.maturities) && strictly_ascending(c.market.maturities), "market.maturities",
         "must be positive and strictly ascending");
    need(!c.market.strikes.empty(), "market.strikes", "must be nonempty");
    need(all_positive(c.market.strikes) && strictly_ascending(c.market.strikes), "market.strikes",
         "must be positive and strictly ascending");
    need(!c.market.surface_file.empty(), "market.surface_file", "must be nonempty");
    add("heston", validate(c.model_params()));

    need(c.simulation.horizon > 0, "simulation.horizon", "must be > 0");
    need(c.simulation.steps >= 1, "simulation.steps", "must be >= 1");
    need(c.simulation.particles >= 2, "simulation.particles", "must be >= 2");
    need(!c.simulation.antithetic || c.simulation.particles % 2 == 0, "simulation.antithetic",
         "needs an even particle count");
    need(c.threads >= 1, "threads", "must be >= 1");

    need(!c.kernel.epsilon || (*c.kernel.epsilon > 0 && std::isfinite(*c.kernel.epsilon)), "kernel.epsilon",
         "must be > 0 or null");
    need(c.kernel.epsilon_factor > 0, "kernel.epsilon_factor", "must be > 0");
    need(c.kernel.delta >= 0 && std::isfinite(c.kernel.delta), "kernel.delta", "must be >= 0");

    need(c.dupire.vol_floor > 0, "dupire.vol_floor", "must be > 0");
    need(c.dupire.vol_cap > c.dupire.vol_floor, "dupire.vol_cap", "must exceed vol_floor");
    need(c.dupire.denominator_floor_factor > 0, "dupire.denominator_floor_factor", "must be > 0");

    need(all_positive(c.leverage.spots), "leverage.spots", "must be positive");
    need(c.leverage.stride >= 1, "leverage.stride", "must be >= 1");

    add("log_mv.ou", validate(c.log_mv.ou));

    need(c.em.levels.size() >= 2, "studies.em.levels", "needs at least two levels");
    for (auto m : c.em.levels) need(m >= 1, "studies.em.levels", "entries must be >= 1");
    need(!c.em.epsilons.empty() && all_positive(c.em.epsilons), "studies.em.epsilons", "must be nonempty and positive");

    need(!c.chaos.particles.empty(), "studies.chaos.particles", "must be nonempty");
    for (std::size_t i = 0; i < c.chaos.particles.size(); ++i) {
        need(c.chaos.particles[i] >= 1 && (i == 0 || c.chaos.particles[i] > c.chaos.particles[i - 1]),
             "studies.chaos.particles", "must be positive and strictly ascending");
    }
    need(!c.chaos.c.empty() && all_positive(c.chaos.c), "studies.chaos.c", "must be nonempty and positive");
    need(c.chaos.repetitions >= 1, "studies.chaos.repetitions", "must be >= 1");

    need(!c.sweep.epsilon_factors.empty() && all_positive(c.sweep.epsilon_factors), "studies.sweep.epsilon_factors",
         "must be nonempty and positive");
    need(!c.sweep.deltas.empty(), "studies.sweep.deltas", "must be nonempty");
    for (double d : c.sweep.deltas) need(d >= 0 && std::isfinite(d), "studies.sweep.deltas", "entries must be >= 0");
    need(c.sweep.repetitions >= 1, "studies.sweep.repetitions", "must be >= 1");
    need(!c.sweep.antithetic || c.simulation.particles % 2 == 0, "studies.sweep.antithetic", "needs an even particle count");

    if (!problems.empty()) {
        std::string msg = problems.front();
        for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
        throw Error(ErrorCode::Config, msg);
    }
}

}  // namespace

double RunConfig::resolved_epsilon() const {
    if (kernel.epsilon) return *kernel.epsilon;
    return amise_bandwidth(market.params.spot, simulation.particles, kernel.epsilon_factor);
}

SimGrid RunConfig::grid() const { return {simulation.horizon, simulation.steps, simulation.particles, seed}; }

HestonParams RunConfig::model_params() const {
    HestonParams p = heston;
    p.rate = market.params.rate;
    p.spot = market.params.spot;
    return p;
}

RunConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("<root>: malformed JSON: ") + e.what());
    }

    RunConfig c;
    Reader r(root, "");
    read_enum(r, "model", kModels, c.model);
    r.integer("seed", c.seed);
    r.integer("threads", c.threads);
    {
        std::string dir = c.output_dir.string();
        r.string("output_dir", dir);
        c.output_dir = dir;
    }
    if (auto m = r.child("market")) {
        m->number("v0", c.market.params.v0);
        m->number("kappa", c.market.params.kappa);
        m->number("theta", c.market.params.theta);
        m->number("xi", c.market.params.xi);
        m->number("rho", c.market.params.rho);
        m->number("rate", c.market.params.rate);
        m->number("spot", c.market.params.spot);
        m->numbers("maturities", c.market.maturities);
        m->numbers("strikes", c.market.strikes);
        std::string file = c.market.surface_file.string();
        m->string("surface_file", file);
        c.market.surface_file = file;
        m->finish();
    }
    if (auto h = r.child("heston")) read_heston(*h, c.heston, false);
    if (auto s = r.child("simulation")) {
        s->number("horizon", c.simulation.horizon);
        s->integer("steps", c.simulation.steps);
        s->integer("particles", c.simulation.particles);
        s->boolean("antithetic", c.simulation.antithetic);
        s->boolean("calibrate", c.simulation.calibrate);
        read_enum(*s, "backend", kBackends, c.simulation.backend);
        s->integer("snapshot_stride", c.simulation.snapshot_stride);
        s->finish();
    }
    if (auto k = r.child("kernel")) {
        std::string family = to_string(c.kernel.family);
        k->string("family", family);
        try {
            c.kernel.family = kernel_family_from_string(family);
        } catch (const Error&) {
            config_error("kernel.family", "'" + family + "' is not one of gaussian, quartic, epanechnikov");
        }
        k->optional_number("epsilon", c.kernel.epsilon);
        k->number("epsilon_factor", c.kernel.epsilon_factor);
        k->number("delta", c.kernel.delta);
        k->finish();
    }
    if (auto d = r.child("dupire")) {
        d->number("vol_floor", c.dupire.vol_floor);
        d->number("vol_cap", c.dupire.vol_cap);
        d->number("denominator_floor_factor", c.dupire.denominator_floor_factor);
        d->finish();
    }
    if (auto l = r.child("leverage")) {
        l->numbers("spots", c.leverage.spots);
        l->integer("stride", c.leverage.stride);
        l->finish();
    }
    if (auto lm = r.child("log_mv")) {
        if (auto ou = lm->child("ou")) {
            ou->number("m", c.log_mv.ou.m);
            ou->number("theta", c.log_mv.ou.theta);
            ou->number("gamma", c.log_mv.ou.gamma);
            ou->number("rho", c.log_mv.ou.rho_xy);
            ou->finish();
        }
        read_enum(*lm, "g", kGs, c.log_mv.g);
        lm->number("y0", c.log_mv.y0);
        read_enum(*lm, "ou_scheme", kSchemes, c.log_mv.ou_scheme);
        lm->finish();
    }
    if (auto s = r.child("studies")) {
        if (auto em = s->child("em")) {
            em->counts("levels", c.em.levels);
            em->numbers("epsilons", c.em.epsilons);
            em->boolean("ou_control", c.em.ou_control);
            em->finish();
        }
        if (auto ch = s->child("chaos")) {
            ch->counts("particles", c.chaos.particles);
            ch->numbers("c", c.chaos.c);
            ch->integer("repetitions", c.chaos.repetitions);
            ch->finish();
        }
        if (auto sw = s->child("sweep")) {
            sw->numbers("epsilon_factors", c.sweep.epsilon_factors);
            sw->numbers("deltas", c.sweep.deltas);
            sw->integer("repetitions", c.sweep.repetitions);
            sw->boolean("antithetic", c.sweep.antithetic);
            sw->finish();
        }
        s->finish();
    }
    r.finish();
    check(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

json to_json_object(const RunConfig& c) {
    json market = heston_json(c.market.params, true);
    market["maturities"] = c.market.maturities;
    market["strikes"] = c.market.strikes;
    market["surface_file"] = c.market.surface_file.string();

    return json{
        {"model", name_of(kModels, c.model)},
        {"seed", c.seed},
        {"threads", c.threads},
        {"output_dir", c.output_dir.string()},
        {"market", market},
        {"heston", heston_json(c.heston, false)},
        {"simulation",
         {{"horizon", c.simulation.horizon},
          {"steps", c.simulation.steps},
          {"particles", c.simulation.particles},
          {"antithetic", c.simulation.antithetic},
          {"calibrate", c.simulation.calibrate},
          {"backend", name_of(kBackends, c.simulation.backend)},
          {"snapshot_stride", c.simulation.snapshot_stride}}},
        {"kernel",
         {{"family", to_string(c.kernel.family)},
          {"epsilon", c.kernel.epsilon ? json(*c.kernel.epsilon) : json(nullptr)},
          {"epsilon_factor", c.kernel.epsilon_factor},
          {"delta", c.kernel.delta}}},
        {"dupire",
         {{"vol_floor", c.dupire.vol_floor},
          {"vol_cap", c.dupire.vol_cap},
          {"denominator_floor_factor", c.dupire.denominator_floor_factor}}},
        {"leverage", {{"spots", c.leverage.spots}, {"stride", c.leverage.stride}}},
        {"log_mv",
         {{"ou",
           {{"m", c.log_mv.ou.m}, {"theta", c.log_mv.ou.theta}, {"gamma", c.log_mv.ou.gamma}, {"rho", c.log_mv.ou.rho_xy}}},
          {"g", name_of(kGs, c.log_mv.g)},
          {"y0", c.log_mv.y0},
          {"ou_scheme", name_of(kSchemes, c.log_mv.ou_scheme)}}},
        {"studies",
         {{"em", {{"levels", c.em.levels}, {"epsilons", c.em.epsilons}, {"ou_control", c.em.ou_control}}},
          {"chaos", {{"particles", c.chaos.particles}, {"c", c.chaos.c}, {"repetitions", c.chaos.repetitions}}},
          {"sweep",
           {{"epsilon_factors", c.sweep.epsilon_factors},
            {"deltas", c.sweep.deltas},
            {"repetitions", c.sweep.repetitions},
            {"antithetic", c.sweep.antithetic}}}}},
    };
}

}  // namespace

std::string to_json(const RunConfig& config) { return to_json_object(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
    const std::string canonical = to_json_object(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string output_header(const RunConfig& config) {
    return "lsvpm config=" + config_hash(config) + " seed=" + std::to_string(config.seed);
}

std::string to_string(ModelVariant variant) { return name_of(kModels, variant); }

}  // namespace lsvpm
