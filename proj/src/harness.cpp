#include "lmprl/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lmprl {

namespace {

using nlohmann::json;

// Reads optional fields into defaults and rejects keys it does not know.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw config_error(where_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw config_error(where_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw config_error(where_ + ": unknown key '" + key + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

const std::map<std::string, NoiseKind> kNoiseNames{
    {"alpha_stable", NoiseKind::alpha_stable}, {"sparse", NoiseKind::sparse}, {"none", NoiseKind::none}};

std::string noise_name(NoiseKind k) {
    for (const auto& [name, kind] : kNoiseNames)
        if (kind == k) return name;
    return "none";
}

Scenario scenario_from_json(const json& j, std::size_t idx) {
    Reader r(j, "scenarios[" + std::to_string(idx) + "]");
    Scenario s;
    std::string noise = "alpha_stable";
    r.get("name", s.name);
    r.get("noise", noise);
    r.get("alpha", s.stable.alpha);
    r.get("beta", s.stable.beta);
    r.get("sigma", s.stable.sigma);
    r.get("outlier_prob", s.sparse.outlier_prob);
    r.get("outlier_range", s.sparse.outlier_range);
    r.get("snr_db", s.sparse.snr_db);
    r.finish();
    const auto it = kNoiseNames.find(noise);
    if (it == kNoiseNames.end()) throw config_error("scenarios[" + std::to_string(idx) + "]: unknown noise '" + noise + "'");
    s.noise = it->second;
    if (s.name.empty()) s.name = noise;
    return s;
}

json scenario_to_json(const Scenario& s) {
    return {{"name", s.name},
            {"noise", noise_name(s.noise)},
            {"alpha", s.stable.alpha},
            {"beta", s.stable.beta},
            {"sigma", s.stable.sigma},
            {"outlier_prob", s.sparse.outlier_prob},
            {"outlier_range", s.sparse.outlier_range},
            {"snr_db", s.sparse.snr_db}};
}

MethodSpec method_from_json(const json& j, std::size_t idx) {
    const std::string where = "methods[" + std::to_string(idx) + "]";
    Reader r(j, where);
    MethodSpec m;
    std::string kind;
    r.get("name", m.name);
    r.get("kind", kind);
    if (kind == "api") {
        ApiConfig c;
        std::string bandwidth = "fixed";
        std::size_t features = static_cast<std::size_t>(c.features);
        r.get("n_avg", c.n_avg);
        r.get("alpha", c.alpha);
        r.get("eta", c.eta);
        r.get("features", features);
        r.get("sigma", c.sigma);
        r.get("bandwidth", bandwidth);
        r.get("warmup", c.warmup);
        r.get("initial_p", c.initial_p);
        r.get("epsilon_start", c.epsilon_start);
        r.get("epsilon_end", c.epsilon_end);
        r.get("epsilon_decay", c.epsilon_decay);
        r.get("counterfactual", c.counterfactual);
        r.get("replay_counterfactual", c.replay_counterfactual);
        if (const json* rep = r.child("replay")) {
            Reader rr(*rep, where + ".replay");
            rr.get("capacity", c.replay.capacity);
            rr.get("per_step", c.replay.per_step);
            rr.get("priority_exponent", c.replay.priority_exponent);
            rr.get("priority_offset", c.replay.priority_offset);
            rr.finish();
        }
        c.features = static_cast<Eigen::Index>(features);
        if (bandwidth == "fixed") c.bandwidth = BandwidthRule::fixed;
        else if (bandwidth == "median") c.bandwidth = BandwidthRule::median;
        else throw config_error(where + ": bandwidth must be 'fixed' or 'median'");
        m.kind = c;
    } else if (kind == "fixed_p") {
        FixedP c;
        r.get("p", c.p);
        m.kind = c;
    } else if (kind == "random_p") {
        m.kind = RandomP{};
    } else if (kind == "kernel_td0") {
        KernelTd0 c;
        std::size_t features = static_cast<std::size_t>(c.features);
        r.get("alpha", c.alpha);
        r.get("eta", c.eta);
        r.get("features", features);
        r.get("sigma", c.sigma);
        r.get("epsilon_start", c.epsilon_start);
        r.get("epsilon_end", c.epsilon_end);
        r.get("epsilon_decay", c.epsilon_decay);
        r.get("replay_capacity", c.replay_capacity);
        r.get("replay_per_step", c.replay_per_step);
        c.features = static_cast<Eigen::Index>(features);
        m.kind = c;
    } else {
        throw config_error(where + ": kind must be one of api, fixed_p, random_p, kernel_td0");
    }
    r.finish();
    if (m.name.empty()) throw config_error(where + ": every method needs a name");
    return m;
}

json method_to_json(const MethodSpec& m) {
    struct Visitor {
        const std::string& name;
        json operator()(const ApiConfig& c) const {
            return {{"name", name},
                    {"kind", "api"},
                    {"n_avg", c.n_avg},
                    {"alpha", c.alpha},
                    {"eta", c.eta},
                    {"features", c.features},
                    {"sigma", c.sigma},
                    {"bandwidth", c.bandwidth == BandwidthRule::fixed ? "fixed" : "median"},
                    {"warmup", c.warmup},
                    {"initial_p", c.initial_p},
                    {"epsilon_start", c.epsilon_start},
                    {"epsilon_end", c.epsilon_end},
                    {"epsilon_decay", c.epsilon_decay},
                    {"counterfactual", c.counterfactual},
                    {"replay_counterfactual", c.replay_counterfactual},
                    {"replay",
                     {{"capacity", c.replay.capacity},
                      {"per_step", c.replay.per_step},
                      {"priority_exponent", c.replay.priority_exponent},
                      {"priority_offset", c.replay.priority_offset}}}};
        }
        json operator()(const FixedP& c) const { return {{"name", name}, {"kind", "fixed_p"}, {"p", c.p}}; }
        json operator()(const RandomP&) const { return {{"name", name}, {"kind", "random_p"}}; }
        json operator()(const KernelTd0& c) const {
            return {{"name", name},
                    {"kind", "kernel_td0"},
                    {"alpha", c.alpha},
                    {"eta", c.eta},
                    {"features", c.features},
                    {"sigma", c.sigma},
                    {"epsilon_start", c.epsilon_start},
                    {"epsilon_end", c.epsilon_end},
                    {"epsilon_decay", c.epsilon_decay},
                    {"replay_capacity", c.replay_capacity},
                    {"replay_per_step", c.replay_per_step}};
        }
    };
    return std::visit(Visitor{m.name}, m.kind);
}

std::unique_ptr<Learner> make_learner(const RunSpec& spec, const MethodSpec& m, std::uint64_t seed) {
    const auto order = spec.experiment.order;
    const double rho = spec.experiment.rho;
    if (const auto* api = std::get_if<ApiConfig>(&m.kind))
        return std::make_unique<ApiAgent>(order, rho, spec.features, spec.grid, *api, seed);
    if (const auto* k = std::get_if<FixedP>(&m.kind))
        return make_baseline(*k, order, rho, spec.features, spec.grid, seed);
    if (const auto* k = std::get_if<RandomP>(&m.kind))
        return make_baseline(*k, order, rho, spec.features, spec.grid, seed);
    return make_baseline(std::get<KernelTd0>(m.kind), order, rho, spec.features, spec.grid, seed);
}

std::optional<json> learner_map_json(const Learner& l) {
    if (const auto* api = dynamic_cast<const ApiAgent*>(&l)) {
        if (api->map()) return api->map()->to_json();
        return std::nullopt;
    }
    if (const auto* td = dynamic_cast<const KernelTd0Learner*>(&l)) return td->map().to_json();
    return std::nullopt;
}

void append_number(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace

void RunSpec::validate() const {
    try {
        ExperimentConfig probe = experiment;
        probe.validate();
        features.validate();
        for (const auto& s : scenarios) {
            probe.noise = s.noise;
            probe.stable = s.stable;
            probe.sparse = s.sparse;
            probe.validate();
        }
        for (const auto& m : methods) {
            if (const auto* api = std::get_if<ApiConfig>(&m.kind)) api->validate();
            if (const auto* td = std::get_if<KernelTd0>(&m.kind)) td->validate();
            if (const auto* f = std::get_if<FixedP>(&m.kind); f && !(f->p >= 1.0 && f->p <= 2.0))
                throw std::invalid_argument("fixed p must lie in [1, 2]");
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    if (trials == 0) throw config_error("RunSpec: trials must be positive");
    if (scenarios.empty()) throw config_error("RunSpec: at least one scenario is required");
    if (methods.empty()) throw config_error("RunSpec: at least one method is required");
    std::set<std::string> names;
    for (const auto& m : methods)
        if (!names.insert(m.name).second) throw config_error("RunSpec: duplicate method name '" + m.name + "'");
    std::set<std::string> snames;
    for (const auto& s : scenarios)
        if (!snames.insert(s.name).second) throw config_error("RunSpec: duplicate scenario name '" + s.name + "'");
}

ExperimentConfig RunSpec::experiment_for(std::size_t scenario, std::size_t trial) const {
    const Scenario& s = scenarios.at(scenario);
    ExperimentConfig cfg = experiment;
    cfg.noise = s.noise;
    cfg.stable = s.stable;
    cfg.sparse = s.sparse;
    cfg.seed = split_seed(trial_seed(scenario, trial), 0);
    return cfg;
}

std::uint64_t RunSpec::trial_seed(std::size_t scenario, std::size_t trial) const {
    return split_seed(split_seed(master_seed, scenario), trial);
}

RunSpec full_scale_spec() {
    RunSpec spec;
    spec.experiment.order = 100;
    spec.experiment.rho = 1e-3;
    spec.experiment.total_steps = 40000;
    spec.experiment.change_step = 20000;
    spec.features = FeatureConfig{300, 0.3, 1e-12};
    spec.trials = 100;
    spec.scenarios = {Scenario{"alpha_stable", NoiseKind::alpha_stable, {1.0, 0.5, 1.0}, {}},
                      Scenario{"sparse", NoiseKind::sparse, {}, {0.1, 100.0, 30.0}}};
    ApiConfig api;
    api.n_avg = 10;
    api.alpha = 0.75;
    api.eta = 0.5;
    api.sigma = 2.0;
    api.counterfactual = true;
    api.replay_counterfactual = true;
    spec.methods.push_back({"api_nav10_a0.75", api});
    for (double p : spec.grid.values()) {
        std::ostringstream name;
        name << "lmp_p" << p;
        spec.methods.push_back({name.str(), FixedP{p}});
    }
    spec.methods.push_back({"random_p", RandomP{}});
    spec.methods.push_back({"kernel_td0_a0.9", KernelTd0{}});
    return spec;
}

RunSpec run_spec_from_json(const json& j) {
    RunSpec spec = full_scale_spec();
    Reader r(j, "config");
    if (const json* e = r.child("experiment")) {
        Reader re(*e, "experiment");
        long long order = spec.experiment.order;
        re.get("order", order);
        re.get("rho", spec.experiment.rho);
        re.get("total_steps", spec.experiment.total_steps);
        re.get("change_step", spec.experiment.change_step);
        re.finish();
        spec.experiment.order = static_cast<Eigen::Index>(order);
    }
    if (const json* f = r.child("features")) {
        Reader rf(*f, "features");
        rf.get("window", spec.features.window);
        rf.get("smoothing", spec.features.smoothing);
        rf.get("log_floor", spec.features.log_floor);
        rf.finish();
    }
    if (const json* g = r.child("grid")) {
        try {
            spec.grid = ActionGrid(g->get<std::vector<double>>());
        } catch (const std::exception& e) {
            throw config_error(std::string("grid: ") + e.what());
        }
    }
    std::string out_dir = spec.out_dir.string();
    r.get("trials", spec.trials);
    r.get("master_seed", spec.master_seed);
    r.get("out_dir", out_dir);
    r.get("write_trials", spec.write_trials);
    r.get("dump_rff", spec.dump_rff);
    spec.out_dir = out_dir;
    if (const json* s = r.child("scenarios")) {
        if (!s->is_array()) throw config_error("scenarios: expected an array");
        spec.scenarios.clear();
        for (std::size_t i = 0; i < s->size(); ++i) spec.scenarios.push_back(scenario_from_json((*s)[i], i));
    }
    if (const json* m = r.child("methods")) {
        if (!m->is_array()) throw config_error("methods: expected an array");
        spec.methods.clear();
        for (std::size_t i = 0; i < m->size(); ++i) spec.methods.push_back(method_from_json((*m)[i], i));
    }
    r.finish();
    spec.validate();
    return spec;
}

json run_spec_to_json(const RunSpec& spec) {
    json scenarios = json::array();
    for (const auto& s : spec.scenarios) scenarios.push_back(scenario_to_json(s));
    json methods = json::array();
    for (const auto& m : spec.methods) methods.push_back(method_to_json(m));
    return {{"experiment",
             {{"order", spec.experiment.order},
              {"rho", spec.experiment.rho},
              {"total_steps", spec.experiment.total_steps},
              {"change_step", spec.experiment.change_step}}},
            {"features",
             {{"window", spec.features.window},
              {"smoothing", spec.features.smoothing},
              {"log_floor", spec.features.log_floor}}},
            {"grid", spec.grid.values()},
            {"trials", spec.trials},
            {"master_seed", spec.master_seed},
            {"out_dir", spec.out_dir.string()},
            {"write_trials", spec.write_trials},
            {"dump_rff", spec.dump_rff},
            {"scenarios", scenarios},
            {"methods", methods}};
}

RunSpec load_run_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error(path.string() + ": " + e.what());
    }
    return run_spec_from_json(j);
}

double normalized_deviation(const Vector& theta, const Vector& theta_star) {
    const double ref = theta_star.norm();
    if (!(ref > 0.0)) throw std::invalid_argument("normalized_deviation: reference system is zero");
    if (theta.size() != theta_star.size()) throw std::invalid_argument("normalized_deviation: dimension mismatch");
    return 20.0 * std::log10(std::max((theta - theta_star).norm(), 1e-12) / ref);
}

TrialResult run_trial(const RunSpec& spec, std::size_t scenario, std::size_t trial) {
    const ExperimentConfig cfg = spec.experiment_for(scenario, trial);
    const std::uint64_t trial_seed = spec.trial_seed(scenario, trial);

    std::vector<std::unique_ptr<Learner>> learners;
    learners.reserve(spec.methods.size());
    for (std::size_t m = 0; m < spec.methods.size(); ++m)
        learners.push_back(make_learner(spec, spec.methods[m], split_seed(trial_seed, m + 1)));

    Environment env(cfg);
    TrialResult out;
    out.deviation_db.resize(static_cast<Eigen::Index>(cfg.total_steps), static_cast<Eigen::Index>(learners.size()));
    for (std::size_t n = 0; n < cfg.total_steps; ++n) {
        const StreamSample sample = env.next();
        for (std::size_t m = 0; m < learners.size(); ++m) {
            learners[m]->step(sample.x, sample.y);
            out.deviation_db(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
                normalized_deviation(learners[m]->theta(), *sample.theta_star);
        }
    }
    if (spec.dump_rff) {
        for (std::size_t m = 0; m < learners.size(); ++m)
            if (auto mj = learner_map_json(*learners[m]))
                out.rff_maps.push_back({{"method", spec.methods[m].name}, {"trial", trial}, {"map", *mj}});
    }
    return out;
}

ScenarioResult run_scenario(const RunSpec& spec, std::size_t scenario, Execution mode) {
    spec.validate();
    ScenarioResult result;
    result.scenario = spec.scenarios.at(scenario).name;
    for (const auto& m : spec.methods) result.methods.push_back(m.name);
    const auto steps = static_cast<Eigen::Index>(spec.experiment.total_steps);
    const auto methods = static_cast<Eigen::Index>(spec.methods.size());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(steps, methods);

    // Completed trials wait here until every earlier trial has been folded in.
    std::vector<std::optional<TrialResult>> pending(spec.trials);
    std::size_t next = 0;
    auto fold_ready = [&] {
        while (next < spec.trials && pending[next]) {
            TrialResult& t = *pending[next];
            sum += t.deviation_db;
            for (auto& entry : t.rff_maps) result.rff_maps.push_back(std::move(entry));
            if (spec.write_trials) result.trials_db.push_back(std::move(t.deviation_db));
            pending[next].reset();
            ++next;
        }
    };

    const auto trials = static_cast<std::ptrdiff_t>(spec.trials);
    if (mode == Execution::serial) {
        for (std::ptrdiff_t k = 0; k < trials; ++k) {
            pending[static_cast<std::size_t>(k)] = run_trial(spec, scenario, static_cast<std::size_t>(k));
            fold_ready();
        }
    } else {
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t k = 0; k < trials; ++k) {
            try {
                TrialResult t = run_trial(spec, scenario, static_cast<std::size_t>(k));
#pragma omp critical(lmprl_fold)
                {
                    pending[static_cast<std::size_t>(k)] = std::move(t);
                    fold_ready();
                }
            } catch (...) {
#pragma omp critical(lmprl_fold)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    }
    result.mean_db = sum / static_cast<double>(spec.trials);
    return result;
}

void write_scenario_csv(const ScenarioResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::string line = "step,method,mean_dev_db";
    for (std::size_t k = 0; k < result.trials_db.size(); ++k) line += ",trial_" + std::to_string(k);
    line += '\n';
    out << line;
    for (Eigen::Index m = 0; m < result.mean_db.cols(); ++m) {
        for (Eigen::Index n = 0; n < result.mean_db.rows(); ++n) {
            line.clear();
            line += std::to_string(n);
            line += ',';
            line += result.methods[static_cast<std::size_t>(m)];
            line += ',';
            append_number(line, result.mean_db(n, m));
            for (const auto& t : result.trials_db) {
                line += ',';
                append_number(line, t(n, m));
            }
            line += '\n';
            out << line;
        }
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::filesystem::path> run(const RunSpec& spec, Execution mode) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + spec.out_dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    for (std::size_t s = 0; s < spec.scenarios.size(); ++s) {
        const ScenarioResult result = run_scenario(spec, s, mode);
        const auto csv = spec.out_dir / (result.scenario + ".csv");
        write_scenario_csv(result, csv);
        written.push_back(csv);
        if (spec.dump_rff) {
            const auto rff = spec.out_dir / (result.scenario + "_rff.json");
            std::ofstream out(rff);
            if (!out) throw std::runtime_error("cannot open " + rff.string() + " for writing");
            out << json{{"scenario", result.scenario}, {"maps", result.rff_maps}}.dump() << '\n';
            if (!out) throw std::runtime_error("write failed for " + rff.string());
            written.push_back(rff);
        }
    }
    return written;
}

} // namespace lmprl
